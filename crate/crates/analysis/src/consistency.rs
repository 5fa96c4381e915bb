use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{AnalysisError, Result};

/// Per-example predictions of one classifier on one split.
#[derive(Debug, Clone)]
pub struct PredictionSet {
    ids: Vec<u64>,
    predicted: Vec<i64>,
    labels: Vec<i64>,
    accuracy: f64,
}

impl PredictionSet {
    pub fn new(ids: Vec<u64>, predicted: Vec<i64>, labels: Vec<i64>) -> Result<Self> {
        if ids.is_empty() {
            return Err(AnalysisError::Empty("prediction set"));
        }
        if predicted.len() != ids.len() {
            return Err(AnalysisError::SizeMismatch {
                what: "predicted labels",
                expect: ids.len(),
                got: predicted.len(),
            });
        }
        if labels.len() != ids.len() {
            return Err(AnalysisError::SizeMismatch {
                what: "true labels",
                expect: ids.len(),
                got: labels.len(),
            });
        }
        let mut seen = std::collections::BTreeSet::new();
        for &id in &ids {
            if !seen.insert(id) {
                return Err(AnalysisError::DuplicateId(id));
            }
        }
        let correct = predicted
            .iter()
            .zip(&labels)
            .filter(|(p, l)| p == l)
            .count();
        let accuracy = correct as f64 / ids.len() as f64;
        Ok(Self {
            ids,
            predicted,
            labels,
            accuracy,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    /// id -> whether this classifier got the example right.
    fn correctness_by_id(&self) -> BTreeMap<u64, bool> {
        self.ids
            .iter()
            .zip(self.predicted.iter().zip(&self.labels))
            .map(|(&id, (p, l))| (id, p == l))
            .collect()
    }
}

/// Chance-corrected agreement of two classifiers' correctness patterns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorConsistencyReport {
    /// Fraction of examples where both were right or both were wrong.
    pub c_obs: f64,
    /// Overlap expected from the accuracies alone: a1*a2 + (1-a1)(1-a2).
    pub c_exp: f64,
    /// kappa = (c_obs - c_exp) / (1 - c_exp); 1 is perfect agreement, 0 is
    /// chance-level, negative is systematic disagreement.
    pub kappa: f64,
}

/// Compare two prediction sets over the same example ids.
///
/// Agreement counts matching correctness indicators, not matching predicted
/// labels; that is what makes the expected overlap derivable from the two
/// accuracies alone.
pub fn error_consistency(
    p1: &PredictionSet,
    p2: &PredictionSet,
) -> Result<ErrorConsistencyReport> {
    let c1 = p1.correctness_by_id();
    let c2 = p2.correctness_by_id();
    if c1.len() != c2.len() || c1.keys().any(|id| !c2.contains_key(id)) {
        return Err(AnalysisError::IdMismatch);
    }
    let agree = c1.iter().filter(|(id, &a)| c2[id] == a).count();
    let c_obs = agree as f64 / c1.len() as f64;
    let (a1, a2) = (p1.accuracy, p2.accuracy);
    let c_exp = a1 * a2 + (1.0 - a1) * (1.0 - a2);
    if c_exp >= 1.0 {
        return Err(AnalysisError::UndefinedKappa);
    }
    let kappa = (c_obs - c_exp) / (1.0 - c_exp);
    Ok(ErrorConsistencyReport {
        c_obs,
        c_exp,
        kappa,
    })
}

/// Write predictions as `id,predicted,label` CSV with a header row.
pub fn write_predictions(path: impl AsRef<Path>, set: &PredictionSet) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| AnalysisError::csv(path, e))?;
    w.write_record(["id", "predicted", "label"])
        .map_err(|e| AnalysisError::csv(path, e))?;
    for i in 0..set.ids.len() {
        w.write_record([
            set.ids[i].to_string(),
            set.predicted[i].to_string(),
            set.labels[i].to_string(),
        ])
        .map_err(|e| AnalysisError::csv(path, e))?;
    }
    w.flush().map_err(|e| AnalysisError::io(path, e))
}

/// Read predictions written by [`write_predictions`].
pub fn read_predictions(path: impl AsRef<Path>) -> Result<PredictionSet> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| AnalysisError::csv(path, e))?;
    let headers = r.headers().map_err(|e| AnalysisError::csv(path, e))?;
    if headers != vec!["id", "predicted", "label"] {
        return Err(AnalysisError::schema(
            path,
            format!("expected header id,predicted,label, got {headers:?}"),
        ));
    }
    let mut ids = Vec::new();
    let mut predicted = Vec::new();
    let mut labels = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| AnalysisError::csv(path, e))?;
        let field = |i: usize| -> Result<&str> {
            rec.get(i)
                .ok_or_else(|| AnalysisError::schema(path, "short row"))
        };
        ids.push(
            field(0)?
                .parse()
                .map_err(|_| AnalysisError::schema(path, "bad id"))?,
        );
        predicted.push(
            field(1)?
                .parse()
                .map_err(|_| AnalysisError::schema(path, "bad predicted label"))?,
        );
        labels.push(
            field(2)?
                .parse()
                .map_err(|_| AnalysisError::schema(path, "bad true label"))?,
        );
    }
    PredictionSet::new(ids, predicted, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(correct_pattern: &[bool]) -> PredictionSet {
        // label 1 everywhere; predicted mirrors the correctness pattern
        let ids = (0..correct_pattern.len() as u64).collect();
        let labels = vec![1i64; correct_pattern.len()];
        let predicted = correct_pattern
            .iter()
            .map(|&c| if c { 1 } else { 0 })
            .collect();
        PredictionSet::new(ids, predicted, labels).unwrap()
    }

    #[test]
    fn self_comparison_is_perfect_agreement() {
        let p = set(&[true, false, true, true]);
        let rep = error_consistency(&p, &p).unwrap();
        assert_eq!(rep.c_obs, 1.0);
        assert_eq!(rep.kappa, 1.0);
    }

    #[test]
    fn chance_agreement_is_zero_kappa() {
        // a1 = a2 = 0.5 and c_obs = 0.5
        let p1 = set(&[true, true, false, false]);
        let p2 = set(&[true, false, true, false]);
        let rep = error_consistency(&p1, &p2).unwrap();
        assert_eq!(rep.c_exp, 0.5);
        assert_eq!(rep.kappa, 0.0);
    }

    #[test]
    fn hand_worked_half_kappa_case() {
        // a1 = 0.8, a2 = 0.7, c_obs = 0.81:
        // c_exp = 0.56 + 0.06 = 0.62, kappa = 0.19 / 0.38 = 0.5.
        // Over 200 examples: 131 both-correct, 29 p1-only, 9 p2-only,
        // 31 both-wrong -> agreements (131+31)/200 = 0.81.
        let n = 200;
        let mut c1 = vec![false; n];
        let mut c2 = vec![false; n];
        for i in 0..131 {
            c1[i] = true;
            c2[i] = true;
        }
        for i in 131..160 {
            c1[i] = true;
        }
        for i in 160..169 {
            c2[i] = true;
        }
        let p1 = set(&c1);
        let p2 = set(&c2);
        assert_eq!(p1.accuracy(), 0.8);
        assert_eq!(p2.accuracy(), 0.7);
        let rep = error_consistency(&p1, &p2).unwrap();
        assert!((rep.c_obs - 0.81).abs() < 1e-12);
        assert!((rep.c_exp - 0.62).abs() < 1e-12);
        assert!((rep.kappa - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_overlap_is_an_error() {
        let perfect = set(&[true, true, true]);
        assert!(matches!(
            error_consistency(&perfect, &perfect),
            Err(AnalysisError::UndefinedKappa)
        ));
        let hopeless = set(&[false, false, false]);
        assert!(matches!(
            error_consistency(&hopeless, &hopeless),
            Err(AnalysisError::UndefinedKappa)
        ));
    }

    #[test]
    fn mismatched_ids_are_rejected() {
        let p1 = set(&[true, false]);
        let p2 = PredictionSet::new(vec![5, 6], vec![1, 1], vec![1, 0]).unwrap();
        assert!(matches!(
            error_consistency(&p1, &p2),
            Err(AnalysisError::IdMismatch)
        ));
    }
}
