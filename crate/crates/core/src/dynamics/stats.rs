use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::word::{GroupWord, Letter};

/// Distribution of `reduced length / m` over uniform random words.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordStats {
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub mean: f64,
    pub min: f64,
    /// 1%, 50% and 99% quantiles of the ratio.
    pub q01: f64,
    pub median: f64,
    pub q99: f64,
}

pub(crate) fn random_word<R: Rng>(rng: &mut R, m: usize) -> GroupWord {
    GroupWord::new(
        (0..m)
            .map(|_| Letter::ALL[rng.random_range(0..4u64) as usize])
            .collect(),
    )
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

/// Reduced length of `trials` uniform words of length `m` over `a, A, b, B`.
pub fn reduced_length_stats(m: usize, trials: usize, seed: u64) -> Result<WordStats> {
    if m == 0 || trials == 0 {
        return Err(Error::Config("need m >= 1 and trials >= 1".into()));
    }
    let mut ratios: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t);
            random_word(&mut r, m).reduced_len() as f64 / m as f64
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / trials as f64;
    ratios.sort_by(f64::total_cmp);
    Ok(WordStats {
        m,
        trials,
        seed,
        mean,
        min: ratios[0],
        q01: quantile(&ratios, 0.01),
        median: quantile(&ratios, 0.5),
        q99: quantile(&ratios, 0.99),
    })
}

/// Exact mean of `reduced length / m` over all `4^m` words, by dynamic
/// programming on the reduced length (only the length matters by symmetry).
pub fn exact_mean_reduced_ratio(m: usize) -> f64 {
    // p[l] = probability the reduced word has length l
    let mut p = vec![0.0; m + 1];
    p[0] = 1.0;
    for _ in 0..m {
        let mut next = vec![0.0; m + 1];
        for (l, &x) in p.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            if l == 0 {
                next[1] += x;
            } else {
                next[l - 1] += x / 4.0;
                next[l + 1] += 3.0 * x / 4.0;
            }
        }
        p = next;
    }
    p.iter().enumerate().map(|(l, x)| l as f64 * x).sum::<f64>() / m as f64
}
