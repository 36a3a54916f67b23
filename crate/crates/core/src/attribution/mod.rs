//! Attribution methods: leave-one-out, input marginalization over MLM
//! candidates, and LIME with or without MLM infilling.

mod im;
mod lime;
mod loo;

pub use im::{im_attribution, im_trace, ImConfig, ImPosition, ImTrace};
pub use lime::{lime_attribution, sample_masks, LimeConfig};
pub use loo::{loo_attribution, LooConfig};

use crate::types::AttributionMap;

/// Probability clamp applied before taking log-odds.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// `log₂(p / (1 − p))` with `p` clamped to `[ε, 1 − ε]`.
pub fn log_odds(p: f64, epsilon: f64) -> f64 {
    let p = p.clamp(epsilon, 1.0 - epsilon);
    libm::log2(p) - libm::log2(1.0 - p)
}

/// Scales scores by `1 / max |score|` so they lie in `[-1, 1]`. A zero map is
/// returned unchanged.
pub fn normalize_for_display(map: &AttributionMap) -> AttributionMap {
    let max = map.scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let mut out = map.clone();
    if max > 0.0 {
        for s in &mut out.scores {
            *s /= max;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{rank_descending, ScoreSpace};
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn log_odds_values() {
        assert_eq!(log_odds(0.5, 1e-6), 0.0);
        // log2(4); 0.8 is not representable, so allow an ulp.
        assert!((log_odds(0.8, 1e-6) - 2.0).abs() < 1e-12);
        // log2((1 - 1e-6) / 1e-6) = log2(999999); frozen from an
        // extended-precision evaluation: 19.931567126628410...
        let saturated = log_odds(1.0, 1e-6);
        assert!((saturated - 19.931_567_126_628_41).abs() < 1e-9, "{saturated}");
        // 1 - 1e-6 rounds, so the two clamped ends differ by about 4e-11.
        assert!((log_odds(0.0, 1e-6) + saturated).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn log_odds_antisymmetric(p in 0.0f64..=1.0) {
            prop_assert!((log_odds(1.0 - p, 1e-6) + log_odds(p, 1e-6)).abs() < 1e-9);
            prop_assert!(log_odds(p, 1e-6).is_finite());
        }

        #[test]
        fn display_normalization_preserves_order(scores in proptest::collection::vec(-50.0f64..50.0, 1..20)) {
            let map = AttributionMap::new(scores.clone(), "m", "pos", ScoreSpace::LogOdds);
            let norm = normalize_for_display(&map);
            prop_assert!(norm.scores.iter().all(|s| (-1.0..=1.0).contains(s)));
            prop_assert_eq!(rank_descending(&scores), rank_descending(&norm.scores));
        }
    }

    #[test]
    fn display_normalization_examples() {
        let map = AttributionMap::new(vec![2.0, -1.0, 0.0], "m", "pos", ScoreSpace::LogOdds);
        assert_eq!(normalize_for_display(&map).scores, vec![1.0, -0.5, 0.0]);
        let zero = AttributionMap::new(vec![0.0; 3], "m", "pos", ScoreSpace::LogOdds);
        assert_eq!(normalize_for_display(&zero), zero);
        let empty: Vec<f64> = Vec::new();
        assert!(normalize_for_display(&AttributionMap::new(empty, "m", "p", ScoreSpace::LogOdds)).is_empty());
    }
}
