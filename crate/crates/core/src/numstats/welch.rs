use serde::{Deserialize, Serialize};

use super::{mean, sample_variance};
use crate::{Error, Result};

/// Welch's unequal-variance t statistic, its Welch–Satterthwaite degrees of
/// freedom and the two-tailed p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Welch {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Two-sample Welch t-test, two-tailed. The statistic is `mean(a) - mean(b)`
/// over its standard error.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<Welch> {
    for xs in [a, b] {
        if xs.len() < 2 {
            return Err(Error::TooFewValues { min: 2, found: xs.len() });
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let va = sample_variance(a) / na;
    let vb = sample_variance(b) / nb;
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    if se2 == 0.0 {
        // Both samples constant: the test degenerates to comparing the means.
        let df = na + nb - 2.0;
        return Ok(if diff == 0.0 {
            Welch { t: 0.0, df, p: 1.0 }
        } else {
            Welch { t: diff.signum() * f64::INFINITY, df, p: 0.0 }
        });
    }
    let t = diff / libm::sqrt(se2);
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    Ok(Welch { t, df, p: student_t_two_tailed(t, df) })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// `I_x(a, b)` via the continued fraction, evaluated on the side where it
/// converges quickly.
fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

// Modified Lentz evaluation.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numstats::sample_std;
    use alloc::vec::Vec;

    // Five values with an exact sample mean and sample std: symmetric
    // offsets scaled so the n-1 variance hits the target.
    fn five_point(mean: f64, std: f64) -> Vec<f64> {
        let offsets = [-2.0, -1.0, 0.0, 1.0, 2.0];
        // Σ offsets² = 10, so variance = scale² · 10 / 4.
        let scale = std / (10.0f64 / 4.0).sqrt();
        offsets.iter().map(|o| mean + scale * o).collect()
    }

    #[test]
    fn reconstructs_published_p_value() {
        let a = five_point(74.59, 0.78);
        let b = five_point(76.22, 1.18);
        assert!((sample_std(&a) - 0.78).abs() < 1e-12);
        let w = welch_t_test(&a, &b).unwrap();
        assert!((w.p - 0.037).abs() <= 0.002, "p = {}", w.p);
        assert!(w.t < 0.0);
    }

    #[test]
    fn identical_lists_give_p_one() {
        let a = [1.0, 2.0, 3.5, 0.5];
        let w = welch_t_test(&a, &a).unwrap();
        assert_eq!(w.t, 0.0);
        assert!((w.p - 1.0).abs() < 1e-12);
        let c = [2.0, 2.0];
        assert_eq!(welch_t_test(&c, &c).unwrap().p, 1.0);
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = [0.71, 0.74, 0.69, 0.73, 0.70];
        let b = [0.77, 0.75, 0.79, 0.74, 0.78, 0.80];
        let ab = welch_t_test(&a, &b).unwrap();
        let ba = welch_t_test(&b, &a).unwrap();
        assert!((ab.p - ba.p).abs() < 1e-15);
        assert!((ab.t + ba.t).abs() < 1e-15);
    }

    #[test]
    fn too_few_values() {
        assert_eq!(welch_t_test(&[1.0], &[1.0, 2.0]), Err(Error::TooFewValues { min: 2, found: 1 }));
    }

    // Unnormalized t density; the normalizer is integrated numerically too,
    // so the oracle never touches the gamma function.
    fn t_density(x: f64, df: f64) -> f64 {
        (1.0 + x * x / df).powf(-(df + 1.0) / 2.0)
    }

    fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn t_cdf_matches_quadrature() {
        for &(t, df) in &[(2.577, 6.94), (0.5, 3.0), (1.96, 30.0), (4.0, 2.5)] {
            // x = tan θ maps [0, ∞) onto [0, π/2).
            let g = |theta: f64| {
                let c = theta.cos();
                if c == 0.0 {
                    0.0
                } else {
                    t_density(theta.tan(), df) / (c * c)
                }
            };
            let half = core::f64::consts::FRAC_PI_2;
            let total = simpson(g, 0.0, half, 200_000);
            let tail = simpson(g, libm::atan(t), half, 200_000);
            let oracle = tail / total;
            let p = student_t_two_tailed(t, df);
            assert!((p - oracle).abs() < 1e-6, "t={t} df={df}: {p} vs {oracle}");
        }
    }
}
