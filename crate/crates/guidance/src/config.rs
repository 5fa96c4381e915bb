use serde::{Deserialize, Serialize};

use crate::error::{GuidanceError, Result};

/// What stands on the guide side of the loss. `Trained` and `Noise` run a
/// trained frozen guide (on the task batch or on noise); `Untrained` runs a
/// freshly initialized frozen guide; `None` disables guidance entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuideMode {
    Trained,
    Untrained,
    Noise,
    None,
}

impl GuideMode {
    pub fn uses_guide(self) -> bool {
        self != GuideMode::None
    }

    /// Whether this mode loads guide weights from a checkpoint (as opposed
    /// to freshly initializing them, or having no guide at all).
    pub fn needs_checkpoint(self) -> bool {
        matches!(self, GuideMode::Trained | GuideMode::Noise)
    }

    /// What the guide reads: the task batch, or same-shaped noise.
    pub fn input_mode(self) -> GuideInputMode {
        match self {
            GuideMode::Noise => GuideInputMode::Noise,
            _ => GuideInputMode::Same,
        }
    }

    /// Forward statistics policy for the frozen guide. Trained guides carry
    /// meaningful running statistics and run in eval; untrained guides
    /// normalize with batch statistics (their buffers are init garbage) but
    /// never write them back.
    pub fn forward_mode(self) -> guidelab_zoo::Mode {
        match self {
            GuideMode::Untrained => guidelab_zoo::Mode::FrozenBatch,
            _ => guidelab_zoo::Mode::Eval,
        }
    }
}

/// Input fed to the guide network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuideInputMode {
    Same,
    Noise,
}

/// Which representational dissimilarity the guidance term uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Cka,
    Rsa,
}

fn default_loss_weight() -> f64 {
    1.0
}

/// Guidance section of an experiment config. Keys appear verbatim in config
/// files. The dissimilarity sum is deliberately unweighted; `loss_weight`
/// exists only to make that choice explicit and must be exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuidanceConfig {
    pub guide_mode: GuideMode,
    /// Drop the guidance term after this many optimizer steps (1-based
    /// count; the term applies while steps_taken < disconnect_after_steps).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disconnect_after_steps: Option<u64>,
    pub metric: MetricKind,
    #[serde(default = "default_loss_weight")]
    pub loss_weight: f64,
}

impl GuidanceConfig {
    pub fn none() -> Self {
        GuidanceConfig {
            guide_mode: GuideMode::None,
            disconnect_after_steps: None,
            metric: MetricKind::Cka,
            loss_weight: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.loss_weight != 1.0 {
            return Err(GuidanceError::InvalidConfig(format!(
                "loss_weight must be exactly 1 (the dissimilarity sum is unweighted), got {}",
                self.loss_weight
            )));
        }
        if let Some(steps) = self.disconnect_after_steps {
            if steps < 1 {
                return Err(GuidanceError::InvalidConfig(
                    "disconnect_after_steps must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// Whether the guidance term is active at the given 0-based step index.
    pub fn active_at_step(&self, step: u64) -> bool {
        if !self.guide_mode.uses_guide() {
            return false;
        }
        match self.disconnect_after_steps {
            Some(cutoff) => step < cutoff,
            None => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_weight_must_be_one() {
        let mut cfg = GuidanceConfig::none();
        cfg.loss_weight = 0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn disconnect_threshold_is_one_based() {
        let mut cfg = GuidanceConfig::none();
        cfg.guide_mode = GuideMode::Trained;
        cfg.disconnect_after_steps = Some(0);
        assert!(cfg.validate().is_err());
        cfg.disconnect_after_steps = Some(2);
        cfg.validate().unwrap();
        assert!(cfg.active_at_step(0));
        assert!(cfg.active_at_step(1));
        assert!(!cfg.active_at_step(2));
    }

    #[test]
    fn config_keys_serialize_verbatim() {
        let cfg = GuidanceConfig {
            guide_mode: GuideMode::Untrained,
            disconnect_after_steps: Some(100),
            metric: MetricKind::Rsa,
            loss_weight: 1.0,
        };
        let json = serde_json::to_string(&cfg).unwrap();
        assert!(json.contains("\"guide_mode\":\"untrained\""), "{json}");
        assert!(json.contains("\"disconnect_after_steps\":100"), "{json}");
        assert!(json.contains("\"metric\":\"rsa\""), "{json}");
        assert!(json.contains("\"loss_weight\":1.0"), "{json}");
        let back: GuidanceConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn none_mode_is_never_active() {
        let cfg = GuidanceConfig::none();
        assert!(!cfg.active_at_step(0));
    }
}
