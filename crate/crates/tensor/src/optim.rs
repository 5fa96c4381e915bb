use std::collections::BTreeMap;

use crate::checkpoint::OptimSnapshot;
use crate::error::{Result, TensorError};
use crate::scalar::Element;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// false: classic Adam, decay folded into the gradient before the moment
    /// updates. true: AdamW, decay applied directly to the parameters.
    pub decoupled: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
            decoupled: false,
        }
    }
}

/// Adam/AdamW over a named parameter map. The map is a BTreeMap so iteration
/// order (and therefore floating-point work order) is fixed by parameter name.
pub struct Adam<T: Element> {
    cfg: AdamConfig,
    t: u64,
    m: BTreeMap<String, Vec<T>>,
    v: BTreeMap<String, Vec<T>>,
}

impl<T: Element> Adam<T> {
    pub fn new(cfg: AdamConfig) -> Self {
        Self {
            cfg,
            t: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.cfg
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.cfg.lr = lr;
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One update over every parameter, reading the accumulated gradients.
    /// A parameter with no gradient buffer is treated as having zero gradient.
    pub fn step(&mut self, params: &BTreeMap<String, Tensor<T>>) -> Result<()> {
        self.t += 1;
        let bc1 = T::from_f64(1.0 - self.cfg.beta1.powi(self.t as i32));
        let bc2 = T::from_f64(1.0 - self.cfg.beta2.powi(self.t as i32));
        let lr = T::from_f64(self.cfg.lr);
        let b1 = T::from_f64(self.cfg.beta1);
        let b2 = T::from_f64(self.cfg.beta2);
        let one_m_b1 = T::one() - b1;
        let one_m_b2 = T::one() - b2;
        let eps = T::from_f64(self.cfg.eps);
        let wd = T::from_f64(self.cfg.weight_decay);
        for (name, p) in params {
            let mut g = p
                .grad()
                .unwrap_or_else(|| vec![T::zero(); p.numel()]);
            if g.iter().any(|v| !v.is_finite()) {
                return Err(TensorError::NonFiniteGrad { name: name.clone() });
            }
            let mut data = p.to_vec();
            if !self.cfg.decoupled && self.cfg.weight_decay != 0.0 {
                for (gv, &pv) in g.iter_mut().zip(&data) {
                    *gv += wd * pv;
                }
            }
            let m = self
                .m
                .entry(name.clone())
                .or_insert_with(|| vec![T::zero(); g.len()]);
            let v = self
                .v
                .entry(name.clone())
                .or_insert_with(|| vec![T::zero(); g.len()]);
            if self.cfg.decoupled && self.cfg.weight_decay != 0.0 {
                let keep = T::one() - lr * wd;
                for pv in data.iter_mut() {
                    *pv *= keep;
                }
            }
            for i in 0..g.len() {
                m[i] = b1 * m[i] + one_m_b1 * g[i];
                v[i] = b2 * v[i] + one_m_b2 * g[i] * g[i];
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                data[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
            p.set_data(data)?;
        }
        Ok(())
    }
}

impl Adam<f32> {
    pub fn snapshot(&self) -> OptimSnapshot {
        OptimSnapshot {
            t: self.t,
            cfg: self.cfg,
            slots: self
                .m
                .iter()
                .map(|(name, m)| {
                    let v = &self.v[name];
                    (name.clone(), m.clone(), v.clone())
                })
                .collect(),
        }
    }

    pub fn from_snapshot(s: &OptimSnapshot) -> Self {
        let mut adam = Self::new(s.cfg);
        adam.t = s.t;
        for (name, m, v) in &s.slots {
            adam.m.insert(name.clone(), m.clone());
            adam.v.insert(name.clone(), v.clone());
        }
        adam
    }
}

pub fn zero_grads<T: Element>(params: &BTreeMap<String, Tensor<T>>) {
    for p in params.values() {
        p.zero_grad();
    }
}

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping. The norm is accumulated in f64 in
/// parameter-name order, so the value is independent of training dtype quirks.
pub fn clip_grad_norm<T: Element>(
    params: &BTreeMap<String, Tensor<T>>,
    max_norm: f64,
) -> Result<f64> {
    let mut sq = 0.0f64;
    for (name, p) in params {
        if let Some(g) = p.grad() {
            for &x in &g {
                let x = x.to_f64_e();
                if !x.is_finite() {
                    return Err(TensorError::NonFiniteGrad { name: name.clone() });
                }
                sq += x * x;
            }
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = T::from_f64(max_norm / norm);
        for p in params.values() {
            if let Some(mut g) = p.grad() {
                for x in g.iter_mut() {
                    *x = *x * scale;
                }
                p.set_grad(g)?;
            }
        }
    }
    Ok(norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param_map(value: f64, grad: f64) -> BTreeMap<String, Tensor<f64>> {
        let p = Tensor::param(&[1], vec![value]).unwrap();
        p.zero_grad();
        p.accumulate_grad(&[grad]);
        let mut map = BTreeMap::new();
        map.insert("p".to_string(), p);
        map
    }

    #[test]
    fn first_step_matches_hand_computation() {
        // p=0.9, g=0.1, defaults: m_hat=0.1, v_hat=0.01,
        // p' = 0.9 - 1e-3 * 0.1/(0.1+1e-8) ~= 0.8990
        let params = param_map(0.9, 0.1);
        let mut adam = Adam::new(AdamConfig::default());
        adam.step(&params).unwrap();
        let got = params["p"].to_vec()[0];
        assert!((got - 0.899).abs() < 1e-7, "got {got}");
    }

    #[test]
    fn decoupled_decay_shrinks_weights_directly() {
        let cfg = AdamConfig {
            weight_decay: 0.1,
            decoupled: true,
            ..Default::default()
        };
        // zero gradient: AdamW still decays, classic Adam builds moments from
        // the decay term instead.
        let params = param_map(1.0, 0.0);
        let mut adam = Adam::new(cfg);
        adam.step(&params).unwrap();
        let got = params["p"].to_vec()[0];
        assert!((got - (1.0 - 1e-3 * 0.1)).abs() < 1e-12);
    }

    #[test]
    fn coupled_decay_flows_through_moments() {
        let cfg = AdamConfig {
            weight_decay: 0.1,
            decoupled: false,
            ..Default::default()
        };
        let params = param_map(1.0, 0.0);
        let mut adam = Adam::new(cfg);
        adam.step(&params).unwrap();
        // effective g = wd * p = 0.1: same shape as the hand example
        let got = params["p"].to_vec()[0];
        assert!((got - (1.0 - 1e-3 * 0.1 / (0.1 + 1e-8))).abs() < 1e-9);
    }

    #[test]
    fn nan_gradient_is_an_error() {
        let params = param_map(1.0, 0.0);
        params["p"].zero_grad();
        params["p"].accumulate_grad(&[f64::NAN]);
        let mut adam = Adam::new(AdamConfig::default());
        assert!(matches!(
            adam.step(&params).unwrap_err(),
            TensorError::NonFiniteGrad { .. }
        ));
    }

    #[test]
    fn clip_rescales_to_max_norm() {
        let p1 = Tensor::<f64>::param(&[2], vec![0.0, 0.0]).unwrap();
        p1.zero_grad();
        p1.accumulate_grad(&[3.0, 0.0]);
        let p2 = Tensor::<f64>::param(&[1], vec![0.0]).unwrap();
        p2.zero_grad();
        p2.accumulate_grad(&[4.0]);
        let mut map = BTreeMap::new();
        map.insert("a".to_string(), p1);
        map.insert("b".to_string(), p2);
        let pre = clip_grad_norm(&map, 1.0).unwrap();
        assert!((pre - 5.0).abs() < 1e-12);
        let ga = map["a"].grad().unwrap();
        let gb = map["b"].grad().unwrap();
        let total = (ga[0] * ga[0] + ga[1] * ga[1] + gb[0] * gb[0]).sqrt();
        assert!((total - 1.0).abs() < 1e-12);
        // under the threshold: untouched
        let pre2 = clip_grad_norm(&map, 10.0).unwrap();
        assert!((pre2 - 1.0).abs() < 1e-12);
        assert_eq!(map["b"].grad().unwrap(), vec![0.8]);
    }
}
