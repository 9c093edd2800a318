use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::spectral::{svd_with_inverse, SvdTriple, DELTA_NUM};
use crate::word::{GroupWord, Letter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoOpsStatus {
    Pass,
    Fail,
    PreconditionsUnmet,
}

impl std::fmt::Display for TwoOpsStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TwoOpsStatus::Pass => "pass",
            TwoOpsStatus::Fail => "fail",
            TwoOpsStatus::PreconditionsUnmet => "preconditions unmet",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoOpsReport {
    pub status: TwoOpsStatus,
    /// First unmet precondition, if any.
    pub reason: Option<String>,
    pub k: usize,
    /// `log ||w(A, B) u_1(A)||`.
    pub lhs_log: f64,
    /// `k (log eps + log lambda)`.
    pub rhs_log: f64,
    /// Least `|<u_1(prev), v_1(next)>|` along the word.
    pub min_alignment: f64,
}

struct LetterData {
    sigma1: f64,
    rho: f64,
    u1: DVector<f64>,
    v1: DVector<f64>,
    matrix: nalgebra::DMatrix<f64>,
}

impl LetterData {
    fn new(s: SvdTriple, g: &IntMatrix) -> Self {
        Self {
            sigma1: s.sigma[0],
            rho: s.sigma[1] / s.sigma[0],
            u1: s.top_left(),
            v1: s.top_right(),
            matrix: g.to_f64(),
        }
    }
}

/// Checks `||w(A, B) u_1(A)|| >= (eps lambda)^k` for a reduced word of length
/// `k`.
///
/// Preconditions are verified first, along the actual word: each letter used
/// has `sigma_1 >= lambda`, the start vector `u_1(A)` meets `v_1` of the first
/// letter applied with `|<., .>| >= eps`, and each later transition has
/// `|<u_1(prev), v_1(next)>| >= eps + sqrt(2) rho / eps` with `rho` the largest
/// `sigma_2 / sigma_1` among the letters. Under these the bound holds by
/// induction, so a `Fail` is a bug.
pub fn check_twoops(a: &IntMatrix, b: &IntMatrix, w: &GroupWord, eps: f64, lambda: f64) -> Result<TwoOpsReport> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if !(eps > 0.0 && eps <= 1.0) || !(lambda > 0.0) {
        return Err(Error::Config(format!("need 0 < eps <= 1 and lambda > 0, got {eps}, {lambda}")));
    }
    if !w.is_reduced() {
        return Err(Error::Config(format!("word {w} is not reduced")));
    }
    let (ai, bi) = (a.inverse()?, b.inverse()?);
    let data = [
        LetterData::new(svd_with_inverse(a, &ai)?, a),
        LetterData::new(svd_with_inverse(&ai, a)?, &ai),
        LetterData::new(svd_with_inverse(b, &bi)?, b),
        LetterData::new(svd_with_inverse(&bi, b)?, &bi),
    ];
    let k = w.len();
    let rhs_log = k as f64 * (eps.ln() + lambda.ln());
    let unmet = |reason: String, min_alignment: f64| TwoOpsReport {
        status: TwoOpsStatus::PreconditionsUnmet,
        reason: Some(reason),
        k,
        lhs_log: f64::NAN,
        rhs_log,
        min_alignment,
    };

    // letters in the order they act on the vector
    let acting: Vec<Letter> = w.letters().iter().rev().copied().collect();
    let rho = acting.iter().map(|l| data[l.index()].rho).fold(0.0, f64::max);
    let mut min_alignment = f64::INFINITY;
    let mut prev = &data[Letter::G1.index()].u1;
    for (step, l) in acting.iter().enumerate() {
        let d = &data[l.index()];
        if d.sigma1 < lambda {
            return Ok(unmet(format!("sigma_1({}) = {:.6e} < lambda", l.as_char(), d.sigma1), min_alignment));
        }
        let align = prev.dot(&d.v1).abs();
        min_alignment = min_alignment.min(align);
        let need = if step == 0 { eps } else { eps + std::f64::consts::SQRT_2 * rho / eps };
        if align < need + DELTA_NUM {
            return Ok(unmet(
                format!("|<u_1, v_1({})>| = {align:.6e} < {need:.6e} at step {step}", l.as_char()),
                min_alignment,
            ));
        }
        prev = &d.u1;
    }

    let mut x = data[Letter::G1.index()].u1.clone();
    let mut lhs_log = 0.0;
    for l in &acting {
        x = &data[l.index()].matrix * x;
        let norm = x.norm();
        lhs_log += norm.ln();
        x /= norm;
    }
    let slack = 1e-9 * (k as f64 + 1.0) * rhs_log.abs().max(1.0);
    let status = if lhs_log >= rhs_log - slack {
        TwoOpsStatus::Pass
    } else {
        TwoOpsStatus::Fail
    };
    Ok(TwoOpsReport {
        status,
        reason: None,
        k,
        lhs_log,
        rhs_log,
        min_alignment: if k == 0 { 1.0 } else { min_alignment },
    })
}
