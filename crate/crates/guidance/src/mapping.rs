use crate::error::{GuidanceError, Result};

/// Correspondence between guide taps and target taps: guide tap `iG` is
/// compared against target tap `iT` for every `(iG, iT)` pair. Guide taps are
/// spread evenly across the target's depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerMapping {
    t: usize,
    l: usize,
    pairs: Vec<(usize, usize)>,
}

impl LayerMapping {
    /// The no-guidance mapping: no pairs, contributes nothing to the loss.
    pub fn empty() -> Self {
        LayerMapping {
            t: 0,
            l: 0,
            pairs: Vec::new(),
        }
    }

    /// Target tap count this mapping addresses.
    pub fn target_taps(&self) -> usize {
        self.t
    }

    /// Guide tap count this mapping addresses.
    pub fn guide_taps(&self) -> usize {
        self.l
    }

    /// Ordered (guide_index, target_index) pairs, zero-based.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }
}

/// Spread `l` guide taps over `t` target taps: guide tap i (1-based) pairs
/// with target index round((i-1)·(t-1)/(l-1)), rounding half up, so the
/// first and last guide taps always hit target indices 0 and t-1. A single
/// guide tap pairs with the last target tap. Exact integer arithmetic keeps
/// the half-up tie-break platform-independent.
pub fn compute_layer_mapping(t: usize, l: usize) -> Result<LayerMapping> {
    if t == 0 || l == 0 {
        return Err(GuidanceError::EmptyTapCount { t, l });
    }
    if l > t {
        return Err(GuidanceError::GuideDenserThanTarget { l, t });
    }
    let pairs = if l == 1 {
        vec![(0, t - 1)]
    } else {
        (0..l)
            .map(|ig| {
                let num = ig * (t - 1);
                let den = l - 1;
                // round-half-up of num/den
                let it = (2 * num + den) / (2 * den);
                (ig, it.min(t - 1))
            })
            .collect()
    };
    Ok(LayerMapping { t, l, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_taps_over_four_hits_the_endpoints() {
        let m = compute_layer_mapping(4, 2).unwrap();
        assert_eq!(m.pairs(), [(0, 0), (1, 3)]);
    }

    #[test]
    fn equal_counts_give_the_identity() {
        let m = compute_layer_mapping(5, 5).unwrap();
        assert_eq!(
            m.pairs(),
            [(0, 0), (1, 1), (2, 2), (3, 3), (4, 4)]
        );
    }

    #[test]
    fn single_guide_tap_pairs_with_the_last_target_tap() {
        let m = compute_layer_mapping(7, 1).unwrap();
        assert_eq!(m.pairs(), [(0, 6)]);
    }

    #[test]
    fn denser_guides_are_rejected() {
        let err = compute_layer_mapping(3, 5).unwrap_err();
        assert!(matches!(
            err,
            GuidanceError::GuideDenserThanTarget { l: 5, t: 3 }
        ));
    }

    #[test]
    fn zero_counts_are_rejected() {
        assert!(compute_layer_mapping(0, 1).is_err());
        assert!(compute_layer_mapping(1, 0).is_err());
    }
}
