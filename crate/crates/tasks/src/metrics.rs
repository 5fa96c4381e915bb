use guidelab_tensor::Element;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TaskError};

/// The four experiment tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    CopyPaste,
    Parity,
    LanguageModel,
    Images,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::CopyPaste => "copy_paste",
            TaskKind::Parity => "parity",
            TaskKind::LanguageModel => "language_model",
            TaskKind::Images => "images",
        }
    }
}

/// Final evaluation numbers for one split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalSummary {
    /// Whole-example accuracy; `top5_accuracy` is reported for image
    /// classification and absent for two-class parity.
    Classification {
        accuracy: f64,
        top5_accuracy: Option<f64>,
    },
    /// Copy-paste: per-token accuracy over scored positions is the headline,
    /// exact-sequence accuracy the auxiliary number.
    TokenSeq {
        token_accuracy: f64,
        sequence_accuracy: f64,
    },
    /// Next-token prediction: perplexity is `exp(mean NLL)` over scored
    /// tokens.
    LanguageModel {
        perplexity: f64,
        mean_nll: f64,
        token_accuracy: f64,
    },
}

impl EvalSummary {
    /// The single number used for headline reporting and comparisons.
    pub fn headline(&self) -> f64 {
        match *self {
            EvalSummary::Classification { accuracy, .. } => accuracy,
            EvalSummary::TokenSeq { token_accuracy, .. } => token_accuracy,
            EvalSummary::LanguageModel { perplexity, .. } => perplexity,
        }
    }
}

/// Streaming metric counters fed one batch of logits at a time.
#[derive(Debug, Default, Clone)]
pub struct EvalAccumulator {
    token_correct: u64,
    token_total: u64,
    seq_correct: u64,
    seq_total: u64,
    top1_correct: u64,
    top5_correct: u64,
    example_total: u64,
    nll_sum: f64,
    nll_count: u64,
}

/// Stable `-log softmax(logits)[target]` in f64.
fn row_nll(row: &[f64], target: usize) -> f64 {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse: f64 = row.iter().map(|&v| (v - max).exp()).sum();
    max + lse.ln() - row[target]
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

impl EvalAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Score a `(batch, len, vocab)` block of sequence logits against
    /// per-position targets; negative targets are skipped everywhere.
    pub fn update_sequence<T: Element>(
        &mut self,
        logits: &[T],
        batch: usize,
        len: usize,
        vocab: usize,
        targets: &[i64],
    ) -> Result<()> {
        if logits.len() != batch * len * vocab {
            return Err(TaskError::SizeMismatch {
                what: "sequence logits",
                expect: batch * len * vocab,
                got: logits.len(),
            });
        }
        if targets.len() != batch * len {
            return Err(TaskError::SizeMismatch {
                what: "sequence targets",
                expect: batch * len,
                got: targets.len(),
            });
        }
        let mut row = vec![0.0f64; vocab];
        for b in 0..batch {
            let mut scored = 0u64;
            let mut wrong = 0u64;
            for t in 0..len {
                let target = targets[b * len + t];
                if target < 0 {
                    continue;
                }
                let target = target as usize;
                if target >= vocab {
                    return Err(TaskError::LabelOutOfRange {
                        label: target,
                        classes: vocab,
                    });
                }
                let base = (b * len + t) * vocab;
                for (dst, src) in row.iter_mut().zip(&logits[base..base + vocab]) {
                    *dst = src.to_f64_e();
                }
                scored += 1;
                if argmax(&row) == target {
                    self.token_correct += 1;
                } else {
                    wrong += 1;
                }
                self.nll_sum += row_nll(&row, target);
                self.nll_count += 1;
            }
            self.token_total += scored;
            if scored > 0 {
                self.seq_total += 1;
                if wrong == 0 {
                    self.seq_correct += 1;
                }
            }
        }
        Ok(())
    }

    /// Score a `(batch, classes)` block of classification logits.
    pub fn update_classification<T: Element>(
        &mut self,
        logits: &[T],
        batch: usize,
        classes: usize,
        labels: &[i64],
    ) -> Result<()> {
        if logits.len() != batch * classes {
            return Err(TaskError::SizeMismatch {
                what: "classification logits",
                expect: batch * classes,
                got: logits.len(),
            });
        }
        if labels.len() != batch {
            return Err(TaskError::SizeMismatch {
                what: "classification labels",
                expect: batch,
                got: labels.len(),
            });
        }
        let k = classes.min(5);
        for b in 0..batch {
            let label = labels[b];
            if label < 0 || label as usize >= classes {
                return Err(TaskError::LabelOutOfRange {
                    label: label.max(0) as usize,
                    classes,
                });
            }
            let label = label as usize;
            let row: Vec<f64> = logits[b * classes..(b + 1) * classes]
                .iter()
                .map(|&v| v.to_f64_e())
                .collect();
            self.example_total += 1;
            if argmax(&row) == label {
                self.top1_correct += 1;
            }
            // Rank of the label = how many classes score strictly higher;
            // earlier index wins ties so ranking matches argmax.
            let beat = row
                .iter()
                .enumerate()
                .filter(|&(i, &v)| v > row[label] || (v == row[label] && i < label))
                .count();
            if beat < k {
                self.top5_correct += 1;
            }
            self.nll_sum += row_nll(&row, label);
            self.nll_count += 1;
        }
        Ok(())
    }

    /// Collapse the counters into the task's reporting shape.
    pub fn summary(&self, task: TaskKind) -> Result<EvalSummary> {
        let frac = |num: u64, den: u64| num as f64 / den as f64;
        match task {
            TaskKind::Images => {
                if self.example_total == 0 {
                    return Err(TaskError::InvalidConfig("no examples scored".into()));
                }
                Ok(EvalSummary::Classification {
                    accuracy: frac(self.top1_correct, self.example_total),
                    top5_accuracy: Some(frac(self.top5_correct, self.example_total)),
                })
            }
            TaskKind::Parity => {
                if self.token_total == 0 {
                    return Err(TaskError::InvalidConfig("no examples scored".into()));
                }
                Ok(EvalSummary::Classification {
                    accuracy: frac(self.token_correct, self.token_total),
                    top5_accuracy: None,
                })
            }
            TaskKind::CopyPaste => {
                if self.token_total == 0 {
                    return Err(TaskError::InvalidConfig("no tokens scored".into()));
                }
                Ok(EvalSummary::TokenSeq {
                    token_accuracy: frac(self.token_correct, self.token_total),
                    sequence_accuracy: frac(self.seq_correct, self.seq_total),
                })
            }
            TaskKind::LanguageModel => {
                if self.nll_count == 0 {
                    return Err(TaskError::InvalidConfig("no tokens scored".into()));
                }
                let mean_nll = self.nll_sum / self.nll_count as f64;
                Ok(EvalSummary::LanguageModel {
                    perplexity: mean_nll.exp(),
                    mean_nll,
                    token_accuracy: frac(self.token_correct, self.token_total),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_predictor_perplexity_equals_vocab_size() {
        for vocab in [7usize, 256] {
            let mut acc = EvalAccumulator::new();
            let logits = vec![0.25f64; 3 * vocab];
            acc.update_sequence(&logits, 1, 3, vocab, &[1, 0, (vocab - 1) as i64])
                .unwrap();
            let EvalSummary::LanguageModel { perplexity, .. } =
                acc.summary(TaskKind::LanguageModel).unwrap()
            else {
                panic!("wrong summary shape");
            };
            assert!((perplexity - vocab as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn top5_counts_label_within_best_five() {
        let mut acc = EvalAccumulator::new();
        // Ten classes; label 6 ranks 5th (four classes strictly higher).
        let mut logits = vec![0.0f64; 10];
        for (i, v) in [9.0, 8.0, 7.0, 6.0].iter().enumerate() {
            logits[i] = *v;
        }
        logits[6] = 5.0;
        acc.update_classification(&logits, 1, 10, &[6]).unwrap();
        let EvalSummary::Classification {
            accuracy,
            top5_accuracy,
        } = acc.summary(TaskKind::Images).unwrap()
        else {
            panic!("wrong summary shape");
        };
        assert_eq!(accuracy, 0.0);
        assert_eq!(top5_accuracy, Some(1.0));
    }

    #[test]
    fn sequence_accuracy_requires_every_scored_token() {
        let mut acc = EvalAccumulator::new();
        // Two sequences of two scored tokens each, vocab 3. First sequence
        // fully correct, second has one miss: token acc 3/4, seq acc 1/2.
        let hot = |c: usize| {
            let mut row = vec![0.0f64; 3];
            row[c] = 5.0;
            row
        };
        let logits: Vec<f64> = [hot(2), hot(1), hot(0), hot(0)].concat();
        acc.update_sequence(&logits, 2, 2, 3, &[2, 1, 0, 1]).unwrap();
        let EvalSummary::TokenSeq {
            token_accuracy,
            sequence_accuracy,
        } = acc.summary(TaskKind::CopyPaste).unwrap()
        else {
            panic!("wrong summary shape");
        };
        assert_eq!(token_accuracy, 0.75);
        assert_eq!(sequence_accuracy, 0.5);
    }
}
