//! Faithfulness and plausibility metrics for attribution maps.

mod accuracy;
mod agreement;
mod deletion;
mod sanity;
mod stats;

pub use accuracy::{accuracy_drop, AccuracyDrop, AccuracyPerturbation};
pub use agreement::{agreement_scores, agreement_sweep, binarize, default_tau_grid, AgreementScores, SweepResult};
pub use deletion::{deletion_curve, first_step_drops, first_step_optimality_check, DeletionCurve, DeletionMode};
pub use sanity::{sanity_check, sign_changed, SanityResult};
pub use stats::{
    attribution_stats, exact_match_stats, map_correlation, map_rank_correlation, AttributionStats, ExactMatchStats,
};

/// `ceil(fraction · n)` with a small slack so that e.g. `0.1 · 30` counts 3,
/// not 4; never below 1.
pub fn ceil_fraction(fraction: f64, n: usize) -> usize {
    let raw = fraction * n as f64;
    (libm::ceil(raw - 1e-9) as usize).max(1)
}
