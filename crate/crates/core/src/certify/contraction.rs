use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Refusal;
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::spectral::{svd_with_inverse, SvdTriple, DELTA_NUM};
use crate::wedge::{
    apply, attractor_repeller_from_svd, point_hyperplane_distance, proj_distance, ProjElement,
};

/// Default contraction radius; must stay below 1/4.
pub const DEFAULT_EPS: f64 = 0.2;
/// Default `r` as a multiple of `eps`.
pub const DEFAULT_R_FACTOR: f64 = 2.5;

/// Exterior power used for `SL_n`: `n/2` for even `n`, `(n-1)/2` for odd `n`.
pub fn choose_k(n: usize) -> usize {
    assert!(n >= 2, "n must be at least 2");
    n / 2
}

/// `g` maps the complement of the `epsilon`-neighbourhood of `h` into the
/// `epsilon`-ball around `v`, on `P(wedge^k R^n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionWitness {
    pub epsilon: f64,
    pub k: usize,
    pub v: ProjElement,
    pub h: ProjElement,
    /// `a_{k+1} / a_k`.
    pub gap: f64,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.25 {
        Ok(())
    } else {
        Err(Error::Config(format!("eps must lie in (0, 1/4), got {eps}")))
    }
}

fn check_r(r: f64, eps: f64) -> Result<()> {
    check_eps(eps)?;
    if r > 2.0 * eps {
        Ok(())
    } else {
        Err(Error::Config(format!("need r > 2 eps, got r = {r}, eps = {eps}")))
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k >= 1 && k < n {
        Ok(())
    } else {
        Err(Error::Config(format!("exterior power k = {k} outside 1..{n}")))
    }
}

fn witness_from_svd(s: &SvdTriple, k: usize, eps: f64) -> Option<ContractionWitness> {
    let ratio = s.sigma[k] / s.sigma[k - 1];
    if ratio > eps * eps - DELTA_NUM {
        return None;
    }
    let (v, h) = attractor_repeller_from_svd(s, k);
    Some(ContractionWitness {
        epsilon: eps,
        k,
        v,
        h,
        gap: ratio,
    })
}

/// Contraction witness when `a_{k+1}(g) / a_k(g) <= eps^2 - DELTA_NUM`.
pub fn epsilon_contracting(g: &IntMatrix, k: usize, eps: f64) -> Result<Option<ContractionWitness>> {
    check_eps(eps)?;
    check_k(g.dim(), k)?;
    let inv = g.inverse()?;
    Ok(witness_from_svd(&svd_with_inverse(g, &inv)?, k, eps))
}

/// Both `g` and `g^-1` data for one generator.
struct GeneratorData {
    fwd: SvdTriple,
    bwd: SvdTriple,
}

impl GeneratorData {
    fn new(g: &IntMatrix) -> Result<Self> {
        let inv = g.inverse()?;
        Ok(Self {
            fwd: svd_with_inverse(g, &inv)?,
            bwd: svd_with_inverse(&inv, g)?,
        })
    }
}

fn proximal_pair(
    data: &GeneratorData,
    k: usize,
    r: f64,
    eps: f64,
    label: &str,
) -> std::result::Result<(ContractionWitness, ContractionWitness), Refusal> {
    let mut out = Vec::with_capacity(2);
    for (s, name) in [(&data.fwd, label.to_string()), (&data.bwd, format!("{label}^-1"))] {
        let Some(w) = witness_from_svd(s, k, eps) else {
            let ratio = s.sigma[k] / s.sigma[k - 1];
            return Err(Refusal::new(
                format!("{name} is not eps-contracting"),
                format!("a_{}/a_{} = {ratio:.6e} > eps^2 - delta = {:.6e}", k + 1, k, eps * eps - DELTA_NUM),
            ));
        };
        let d = point_hyperplane_distance(&w.v, &w.h).expect("same space");
        if d < r + DELTA_NUM {
            return Err(Refusal::new(
                format!("{name} is not (r, eps)-proximal"),
                format!("d(v, H) = {d:.6e} < r + delta = {:.6e}", r + DELTA_NUM),
            ));
        }
        out.push(w);
    }
    let second = out.pop().expect("two witnesses");
    let first = out.pop().expect("two witnesses");
    Ok((first, second))
}

/// Witnesses for `g` and `g^-1` whose attractors sit at least `r` from their
/// own repelling hyperplanes.
pub fn very_proximal(
    g: &IntMatrix,
    k: usize,
    r: f64,
    eps: f64,
) -> Result<Option<(ContractionWitness, ContractionWitness)>> {
    check_r(r, eps)?;
    check_k(g.dim(), k)?;
    let data = GeneratorData::new(g)?;
    Ok(proximal_pair(&data, k, r, eps, "g").ok())
}

/// Ping-pong witness for `<g1, g2>` acting on `P(wedge^k R^n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PingPongCertificate {
    pub r: f64,
    pub epsilon: f64,
    pub k: usize,
    /// Witnesses for `g1`, `g1^-1`, `g2`, `g2^-1`, in that order.
    pub witnesses: [ContractionWitness; 4],
    /// Least attractor-to-repeller distance over all required pairs.
    pub min_separation: f64,
}

/// Certificate or the first failed condition.
pub fn ping_pong_check(
    g1: &IntMatrix,
    g2: &IntMatrix,
    k: usize,
    r: f64,
    eps: f64,
) -> Result<std::result::Result<PingPongCertificate, Refusal>> {
    check_r(r, eps)?;
    if g1.dim() != g2.dim() {
        return Err(Error::DimensionMismatch {
            expected: g1.dim(),
            found: g2.dim(),
        });
    }
    check_k(g1.dim(), k)?;
    let d1 = GeneratorData::new(g1)?;
    let d2 = GeneratorData::new(g2)?;
    let (w1, w1i) = match proximal_pair(&d1, k, r, eps, "g1") {
        Ok(p) => p,
        Err(refusal) => return Ok(Err(refusal)),
    };
    let (w2, w2i) = match proximal_pair(&d2, k, r, eps, "g2") {
        Ok(p) => p,
        Err(refusal) => return Ok(Err(refusal)),
    };
    let witnesses = [w1, w1i, w2, w2i];
    let names = ["g1", "g1^-1", "g2", "g2^-1"];

    let dist = |a: usize, b: usize| point_hyperplane_distance(&witnesses[a].v, &witnesses[b].h).expect("same space");
    let mut min_sep = f64::INFINITY;
    for i in 0..4 {
        min_sep = min_sep.min(dist(i, i));
    }
    // attractors of one generator against repellers of the other
    for a in 0..4 {
        for b in 0..4 {
            if a / 2 == b / 2 {
                continue;
            }
            let d = dist(a, b);
            if d < r + DELTA_NUM {
                return Ok(Err(Refusal::new(
                    "attractor too close to a repelling hyperplane",
                    format!(
                        "d(v[{}], H[{}]) = {d:.6e} < r + delta = {:.6e}",
                        names[a],
                        names[b],
                        r + DELTA_NUM
                    ),
                )));
            }
            min_sep = min_sep.min(d);
        }
    }
    Ok(Ok(PingPongCertificate {
        r,
        epsilon: eps,
        k,
        witnesses,
        min_separation: min_sep,
    }))
}

/// Certificate when `g1, g2` form a ping-pong pair; implies `<g1, g2>` is free.
pub fn ping_pong_pair(
    g1: &IntMatrix,
    g2: &IntMatrix,
    k: usize,
    r: f64,
    eps: f64,
) -> Result<Option<PingPongCertificate>> {
    Ok(ping_pong_check(g1, g2, k, r, eps)?.ok())
}

/// Checks the contraction property directly on sample points: every sample at
/// distance at least `eps` from `h` must land within `eps + tol` of `v` under
/// `action` (a matrix on the wedge space).
pub fn empirical_contraction(
    action: &DMatrix<f64>,
    v: &ProjElement,
    h: &ProjElement,
    eps: f64,
    samples: &[ProjElement],
    tol: f64,
) -> bool {
    samples.iter().all(|p| {
        let far = point_hyperplane_distance(p, h).map(|d| d >= eps).unwrap_or(false);
        !far || proj_distance(&apply(action, p), v).map(|d| d <= eps + tol).unwrap_or(false)
    })
}
