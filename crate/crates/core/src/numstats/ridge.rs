use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Intercept and per-feature coefficients of a weighted ridge fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

/// Minimizes `Σ wⱼ (yⱼ − β₀ − zⱼ·β)² + λ‖β‖²` with an unpenalized intercept.
///
/// Solved through the normal equations with a Cholesky factorization. Rows of
/// `design` are feature vectors without the intercept column.
pub fn weighted_ridge(design: &[Vec<f64>], targets: &[f64], weights: &[f64], lambda: f64) -> Result<RidgeFit> {
    let m = design.len();
    if targets.len() != m {
        return Err(Error::LengthMismatch { expected: m, found: targets.len() });
    }
    if weights.len() != m {
        return Err(Error::LengthMismatch { expected: m, found: weights.len() });
    }
    if m == 0 {
        return Err(Error::TooFewValues { min: 1, found: 0 });
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig("ridge lambda must be a non-negative number".into()));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidConfig("weights must be non-negative and not all zero".into()));
    }
    let n = design[0].len();
    if let Some(row) = design.iter().find(|r| r.len() != n) {
        return Err(Error::LengthMismatch { expected: n, found: row.len() });
    }

    // Augmented system over [1, z].
    let p = n + 1;
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut x = vec![0.0; p];
    for ((row, &y), &w) in design.iter().zip(targets).zip(weights) {
        if w == 0.0 {
            continue;
        }
        x[0] = 1.0;
        x[1..].copy_from_slice(row);
        for i in 0..p {
            let wxi = w * x[i];
            if wxi == 0.0 {
                continue;
            }
            rhs[i] += wxi * y;
            for j in 0..=i {
                gram[i * p + j] += wxi * x[j];
            }
        }
    }
    for i in 1..p {
        gram[i * p + i] += lambda;
    }
    for i in 0..p {
        for j in 0..i {
            gram[j * p + i] = gram[i * p + j];
        }
    }

    let l = cholesky(&gram, p)?;
    let beta = cholesky_solve(&l, p, &rhs);
    Ok(RidgeFit { intercept: beta[0], coefficients: beta[1..].to_vec() })
}

/// Lower-triangular factor of a symmetric positive-definite matrix.
fn cholesky(a: &[f64], p: usize) -> Result<Vec<f64>> {
    let scale = (0..p).map(|i| a[i * p + i].abs()).fold(0.0, f64::max).max(1.0);
    let mut l = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..=i {
            let mut sum = a[i * p + j];
            for k in 0..j {
                sum -= l[i * p + k] * l[j * p + k];
            }
            if i == j {
                if sum <= 1e-12 * scale {
                    return Err(Error::SingularSystem);
                }
                l[i * p + i] = libm::sqrt(sum);
            } else {
                l[i * p + j] = sum / l[j * p + j];
            }
        }
    }
    Ok(l)
}

fn cholesky_solve(l: &[f64], p: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; p];
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * p + k] * y[k];
        }
        y[i] = s / l[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in i + 1..p {
            s -= l[k * p + i] * x[k];
        }
        x[i] = s / l[i * p + i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numstats::SplitMix64;

    fn random_binary_design(rng: &mut SplitMix64, m: usize, n: usize) -> Vec<Vec<f64>> {
        (0..m).map(|_| (0..n).map(|_| (rng.below(2)) as f64).collect()).collect()
    }

    #[test]
    fn exact_affine_recovery() {
        let mut rng = SplitMix64::new(5);
        let design = random_binary_design(&mut rng, 40, 4);
        let w = [0.5, -1.0, 2.0, 0.25];
        let y: Vec<f64> = design.iter().map(|z| 0.3 + z.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()).collect();
        let fit = weighted_ridge(&design, &y, &vec![1.0; 40], 0.0).unwrap();
        assert!((fit.intercept - 0.3).abs() < 1e-9);
        for (c, t) in fit.coefficients.iter().zip(&w) {
            assert!((c - t).abs() < 1e-9);
        }
    }

    #[test]
    fn heavy_shrinkage() {
        let mut rng = SplitMix64::new(6);
        let design = random_binary_design(&mut rng, 30, 5);
        let y: Vec<f64> = (0..30).map(|_| rng.next_f64()).collect();
        let fit = weighted_ridge(&design, &y, &vec![1.0; 30], 1e9).unwrap();
        let norm: f64 = fit.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!(norm < 1e-6);
    }

    #[test]
    fn singular_only_without_regularization() {
        let design = vec![vec![1.0, 1.0], vec![0.0, 0.0], vec![1.0, 1.0]];
        let y = [1.0, 0.0, 1.0];
        assert_eq!(weighted_ridge(&design, &y, &[1.0; 3], 0.0), Err(Error::SingularSystem));
        assert!(weighted_ridge(&design, &y, &[1.0; 3], 1.0).is_ok());
    }

    #[test]
    fn rejects_bad_weights() {
        let design = vec![vec![1.0], vec![0.0]];
        assert!(weighted_ridge(&design, &[1.0, 0.0], &[0.0, 0.0], 1.0).is_err());
        assert!(weighted_ridge(&design, &[1.0, 0.0], &[-1.0, 1.0], 1.0).is_err());
    }

    // Gradient descent on the same objective, run to convergence.
    fn gradient_descent_oracle(design: &[Vec<f64>], y: &[f64], w: &[f64], lambda: f64) -> Vec<f64> {
        let n = design[0].len();
        let mut beta = vec![0.0; n + 1];
        let step = 0.5 / (design.len() as f64 * (n as f64 + 1.0) + lambda);
        for _ in 0..200_000 {
            let mut grad = vec![0.0; n + 1];
            for ((z, &t), &wt) in design.iter().zip(y).zip(w) {
                let pred = beta[0] + z.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
                let r = wt * (pred - t);
                grad[0] += 2.0 * r;
                for k in 0..n {
                    grad[k + 1] += 2.0 * r * z[k];
                }
            }
            for k in 0..n {
                grad[k + 1] += 2.0 * lambda * beta[k + 1];
            }
            for k in 0..=n {
                beta[k] -= step * grad[k];
            }
        }
        beta
    }

    #[test]
    fn matches_gradient_descent_oracle() {
        let mut rng = SplitMix64::new(50);
        let design = random_binary_design(&mut rng, 50, 6);
        let y: Vec<f64> = (0..50).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let w: Vec<f64> = (0..50).map(|_| rng.uniform(0.1, 1.0)).collect();
        let fit = weighted_ridge(&design, &y, &w, 1.0).unwrap();
        let oracle = gradient_descent_oracle(&design, &y, &w, 1.0);
        assert!((fit.intercept - oracle[0]).abs() < 1e-6);
        for (c, o) in fit.coefficients.iter().zip(&oracle[1..]) {
            assert!((c - o).abs() < 1e-6, "{c} vs {o}");
        }
    }

    #[test]
    fn duplicated_rows_with_halved_weights() {
        let mut rng = SplitMix64::new(8);
        let design = random_binary_design(&mut rng, 20, 3);
        let y: Vec<f64> = (0..20).map(|_| rng.next_f64()).collect();
        let w: Vec<f64> = (0..20).map(|_| rng.uniform(0.2, 1.0)).collect();
        let base = weighted_ridge(&design, &y, &w, 0.5).unwrap();
        let mut d2 = design.clone();
        d2.extend(design.iter().cloned());
        let mut y2 = y.clone();
        y2.extend(&y);
        let mut w2: Vec<f64> = w.iter().map(|x| x / 2.0).collect();
        w2.extend(w.iter().map(|x| x / 2.0));
        let dup = weighted_ridge(&d2, &y2, &w2, 0.5).unwrap();
        for (a, b) in base.coefficients.iter().zip(&dup.coefficients) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
