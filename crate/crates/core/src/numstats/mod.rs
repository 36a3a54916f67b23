//! Numeric kernels shared by the attribution methods and metrics.

mod auc;
mod correlation;
mod ridge;
mod rng;
mod welch;

pub use auc::trapezoid_auc;
pub use correlation::{pearson, spearman};
pub use ridge::{weighted_ridge, RidgeFit};
pub use rng::{derive_seed, SplitMix64};
pub use welch::{student_t_two_tailed, welch_t_test, Welch};

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator; 0 below two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn sample_std(xs: &[f64]) -> f64 {
    libm::sqrt(sample_variance(xs))
}
