use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::rng;
use crate::spectral::{jacobi_svd, spectral_norm};

/// Multiplications between renormalizations of the running product.
pub const RENORM_EVERY: usize = 8;
/// Below this length the float product is checked against the exact one.
pub const EXACT_CHECK_BELOW: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
}

fn check_probs(probs: &[f64], len: usize) -> Result<()> {
    if probs.len() != len {
        return Err(Error::Config(format!(
            "{} probabilities for {len} generators",
            probs.len()
        )));
    }
    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::Config("probabilities must lie in [0, 1]".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

fn pick<R: Rng>(rng: &mut R, cumulative: &[f64]) -> usize {
    let u: f64 = rng.random();
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

/// `log sigma_1` of one random product of length `m`.
fn one_trial(
    gens: &[IntMatrix],
    floats: &[DMatrix<f64>],
    log_norms: &[f64],
    cumulative: &[f64],
    m: usize,
    seed: u64,
    trial: u64,
) -> Result<f64> {
    let mut r = rng::stream(seed, trial);
    let n = gens[0].dim();
    let mut prod = DMatrix::<f64>::identity(n, n);
    let mut log_scale = 0.0;
    let mut picks = Vec::with_capacity(if m < EXACT_CHECK_BELOW { m } else { 0 });
    for step in 0..m {
        let i = pick(&mut r, cumulative);
        prod = &prod * &floats[i];
        if m < EXACT_CHECK_BELOW {
            picks.push(i);
        }
        if (step + 1) % RENORM_EVERY == 0 {
            let scale = prod.amax();
            prod /= scale;
            log_scale += scale.ln();
        }
    }
    let value = log_scale + jacobi_svd(&prod)?.sigma[0].ln();
    if m < EXACT_CHECK_BELOW {
        let exact = picks
            .iter()
            .fold(IntMatrix::identity(n), |acc, &i| &acc * &gens[i]);
        let want = spectral_norm(&exact).ln();
        // forward error of a float product grows with prod ||g_i|| / ||P||
        let excess = picks.iter().map(|&i| log_norms[i]).sum::<f64>() - want;
        let tol = 1e-9 + 4.0 * m as f64 * f64::EPSILON * excess.exp();
        if (value - want).abs() > tol {
            return Err(Error::Invariant(format!(
                "float product drifted: log norm {value} vs exact {want}"
            )));
        }
    }
    Ok(value)
}

/// Trial average of `(1/m) log sigma_1(g_{i_1} ... g_{i_m})` with letters drawn
/// independently from `probs`.
pub fn estimate_lyapunov(
    gens: &[IntMatrix],
    probs: &[f64],
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if gens.is_empty() {
        return Err(Error::Config("need at least one generator".into()));
    }
    if m == 0 || trials == 0 {
        return Err(Error::Config("need m >= 1 and trials >= 1".into()));
    }
    check_probs(probs, gens.len())?;
    let n = gens[0].dim();
    if let Some(g) = gens.iter().find(|g| g.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g.dim(),
        });
    }
    let floats: Vec<DMatrix<f64>> = gens.iter().map(IntMatrix::to_f64).collect();
    let log_norms: Vec<f64> = gens.iter().map(|g| spectral_norm(g).ln()).collect();
    let cumulative: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let logs: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| one_trial(gens, &floats, &log_norms, &cumulative, m, seed, t))
        .collect::<Result<_>>()?;
    let rates: Vec<f64> = logs.iter().map(|l| l / m as f64).collect();
    let mean = rates.iter().sum::<f64>() / trials as f64;
    let stderr = if trials > 1 {
        let var = rates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        (var / trials as f64).sqrt()
    } else {
        0.0
    };
    Ok(LyapunovEstimate {
        mean,
        stderr,
        m,
        trials,
        seed,
    })
}

/// Uniform measure on `g1, g1^-1, g2, g2^-1`.
pub fn estimate_lyapunov_pair(
    g1: &IntMatrix,
    g2: &IntMatrix,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    let gens = [g1.clone(), g1.inverse()?, g2.clone(), g2.inverse()?];
    estimate_lyapunov(&gens, &[0.25; 4], m, trials, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fib() -> IntMatrix {
        IntMatrix::from_rows(&[[2i64, 1], [1, 1]]).unwrap()
    }

    #[test]
    fn identity_has_zero_exponent() {
        let e = estimate_lyapunov(&[IntMatrix::identity(3)], &[1.0], 30, 4, 1).unwrap();
        assert_eq!(e.mean, 0.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn symmetric_matrix_calibration() {
        let phi2 = ((3.0 + 5f64.sqrt()) / 2.0).ln();
        let e = estimate_lyapunov(&[fib()], &[1.0], 400, 3, 2).unwrap();
        assert!((e.mean - phi2).abs() < 0.01 * phi2);
        // the exact cross-check path
        let e = estimate_lyapunov(&[fib()], &[1.0], 40, 1, 2).unwrap();
        assert!((e.mean - phi2).abs() < 0.01 * phi2);
    }

    #[test]
    fn inverse_pair_is_strictly_between() {
        let g = fib().pow(3);
        let e = estimate_lyapunov(&[g.clone(), g.inverse().unwrap()], &[0.5, 0.5], 200, 40, 5).unwrap();
        let top = crate::spectral::spectral_norm(&g).ln();
        assert!(e.mean > 0.0 && e.mean < top, "{e:?}");
    }

    #[test]
    fn deterministic_and_validated() {
        let a = IntMatrix::from_rows(&[[1i64, 2], [0, 1]]).unwrap();
        let b = IntMatrix::from_rows(&[[1i64, 0], [2, 1]]).unwrap();
        let x = estimate_lyapunov_pair(&a, &b, 100, 16, 9).unwrap();
        assert_eq!(x, estimate_lyapunov_pair(&a, &b, 100, 16, 9).unwrap());
        assert!(x.mean > 0.0);
        assert!(estimate_lyapunov(&[fib()], &[0.5], 10, 2, 1).is_err());
        assert!(estimate_lyapunov(&[], &[], 10, 2, 1).is_err());
    }

    #[test]
    fn longer_products_do_not_grow_the_rate() {
        let a = IntMatrix::from_rows(&[[1i64, 2], [0, 1]]).unwrap();
        let b = IntMatrix::from_rows(&[[1i64, 0], [2, 1]]).unwrap();
        let short = estimate_lyapunov_pair(&a, &b, 100, 64, 4).unwrap();
        let long = estimate_lyapunov_pair(&a, &b, 200, 64, 4).unwrap();
        assert!(long.mean <= short.mean + 10.0 * short.stderr);
    }
}
