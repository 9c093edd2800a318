//! Haar volume of Cartan-coordinate regions.
//!
//! Points are `j = (j_1, .., j_n)` with `j_1 >= .. >= j_n` and `sum j_i = 0`;
//! integration runs over `(j_1, .., j_{n-1})`. Every region is a bounded
//! polytope, so each nested slice is an interval. Slices are split at the
//! projected vertices, where the inner integral stops being smooth, and each
//! piece gets a midpoint rule; two resolutions are combined by Richardson
//! extrapolation.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_RESOLUTION: usize = 64;

/// `prod_{k < i} sinh(j_k - j_i)`.
pub fn haar_density(j: &[f64]) -> f64 {
    let mut p = 1.0;
    for k in 0..j.len() {
        for i in k + 1..j.len() {
            p *= (j[k] - j[i]).sinh();
        }
    }
    p
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CartanRegion {
    pub n: usize,
    pub log_x: f64,
    pub symmetrized: bool,
    /// `(k, T)`: `j_k - j_{k+1} >= T`, with `k` counted from 1.
    pub gap_constraints: Vec<(usize, f64)>,
}

impl CartanRegion {
    /// `j_1 <= log X`.
    pub fn plain(n: usize, log_x: f64) -> Self {
        Self {
            n,
            log_x,
            symmetrized: false,
            gap_constraints: Vec::new(),
        }
    }

    /// `|j_i| <= log X` for every `i`.
    pub fn symmetrized(n: usize, log_x: f64) -> Self {
        Self {
            symmetrized: true,
            ..Self::plain(n, log_x)
        }
    }

    pub fn with_gap(mut self, k: usize, t: f64) -> Self {
        self.gap_constraints.push((k, t));
        self
    }

    fn validate(&self) -> Result<()> {
        if !(2..=4).contains(&self.n) {
            return Err(Error::Config(format!("regions need n in 2..=4, got {}", self.n)));
        }
        if !(self.log_x >= 0.0) || !self.log_x.is_finite() {
            return Err(Error::Config(format!("log X must be finite and >= 0, got {}", self.log_x)));
        }
        for &(k, t) in &self.gap_constraints {
            if k == 0 || k >= self.n || !t.is_finite() {
                return Err(Error::Config(format!("bad gap constraint ({k}, {t}) for n = {}", self.n)));
            }
        }
        Ok(())
    }

    /// `a . x <= b` over `x = (j_1, .., j_{n-1})`.
    fn constraints(&self) -> Vec<Constraint> {
        let d = self.n - 1;
        // j_i as a linear form in x
        let coord = |i: usize| -> Vec<f64> {
            if i < d {
                (0..d).map(|l| if l == i { 1.0 } else { 0.0 }).collect()
            } else {
                vec![-1.0; d]
            }
        };
        let diff = |p: usize, q: usize| -> Vec<f64> {
            coord(p).iter().zip(coord(q)).map(|(a, b)| a - b).collect()
        };
        let neg = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|x| -x).collect() };
        let mut out = Vec::new();
        for i in 0..d {
            out.push(Constraint { a: neg(diff(i, i + 1)), b: 0.0 });
        }
        for i in 0..self.n {
            out.push(Constraint { a: coord(i), b: self.log_x });
            if self.symmetrized {
                out.push(Constraint { a: neg(coord(i)), b: self.log_x });
            }
        }
        for &(k, t) in &self.gap_constraints {
            out.push(Constraint { a: neg(diff(k - 1, k)), b: -t });
        }
        out
    }
}

#[derive(Clone, Debug)]
struct Constraint {
    a: Vec<f64>,
    b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: f64,
    pub est_error: f64,
}

const FEAS_TOL: f64 = 1e-9;

/// Constraints on the trailing variables once the leading ones are fixed.
fn restrict(cons: &[Constraint], fixed: &[f64]) -> Vec<Constraint> {
    let p = fixed.len();
    cons.iter()
        .map(|c| Constraint {
            a: c.a[p..].to_vec(),
            b: c.b - c.a[..p].iter().zip(fixed).map(|(a, x)| a * x).sum::<f64>(),
        })
        .collect()
}

/// Sorted distinct first coordinates of the vertices, or `None` if empty.
fn breakpoints(cons: &[Constraint]) -> Option<Vec<f64>> {
    let r = cons[0].a.len();
    if r == 1 {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for c in cons {
            let a = c.a[0];
            if a > 0.0 {
                hi = hi.min(c.b / a);
            } else if a < 0.0 {
                lo = lo.max(c.b / a);
            } else if c.b < -FEAS_TOL {
                return None;
            }
        }
        return (lo.is_finite() && hi.is_finite() && hi > lo).then(|| vec![lo, hi]);
    }
    let mut xs = Vec::new();
    for idx in (0..cons.len()).combinations(r) {
        let m = DMatrix::from_fn(r, r, |i, j| cons[idx[i]].a[j]);
        let rhs = DVector::from_fn(r, |i, _| cons[idx[i]].b);
        let Some(v) = m.lu().solve(&rhs) else { continue };
        if !v.iter().all(|x| x.is_finite()) {
            continue;
        }
        let ok = cons
            .iter()
            .all(|c| c.a.iter().zip(v.iter()).map(|(a, x)| a * x).sum::<f64>() <= c.b + FEAS_TOL * (1.0 + c.b.abs()));
        if ok {
            xs.push(v[0]);
        }
    }
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    (xs.len() >= 2).then_some(xs)
}

/// Midpoints on each piece; coarse counts are proportional to length and
/// scaled by `refine`, so the two resolutions nest piece by piece.
fn nodes(bp: &[f64], res: usize, refine: usize) -> Vec<(f64, f64)> {
    let total = bp[bp.len() - 1] - bp[0];
    let mut out = Vec::new();
    for w in bp.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let count = ((res as f64 * len / total).ceil() as usize).max(1) * refine;
        let h = len / count as f64;
        out.extend((0..count).map(|i| (w[0] + (i as f64 + 0.5) * h, h)));
    }
    out
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn integrate_inner(cons: &[Constraint], fixed: &mut Vec<f64>, d: usize, res: usize, refine: usize) -> f64 {
    let sub = restrict(cons, fixed);
    let Some(bp) = breakpoints(&sub) else { return 0.0 };
    let mut terms = Vec::new();
    for (t, h) in nodes(&bp, res, refine) {
        fixed.push(t);
        let f = if fixed.len() == d {
            let mut j = fixed.clone();
            j.push(-fixed.iter().sum::<f64>());
            haar_density(&j)
        } else {
            integrate_inner(cons, fixed, d, res, refine)
        };
        fixed.pop();
        terms.push(f * h);
    }
    pairwise_sum(&terms)
}

fn integrate_at(cons: &[Constraint], d: usize, res: usize, refine: usize) -> f64 {
    let Some(bp) = breakpoints(cons) else { return 0.0 };
    let terms: Vec<f64> = nodes(&bp, res, refine)
        .into_par_iter()
        .map(|(t, h)| {
            let mut fixed = vec![t];
            let f = if d == 1 {
                haar_density(&[t, -t])
            } else {
                integrate_inner(cons, &mut fixed, d, res, refine)
            };
            f * h
        })
        .collect();
    pairwise_sum(&terms)
}

/// Haar volume of the region, in units where the density is the bare product
/// of `sinh`; `resolution` is the number of midpoints per slice at the finer
/// level.
pub fn integrate_region(r: &CartanRegion, resolution: usize) -> Result<Quadrature> {
    r.validate()?;
    if resolution < MIN_RESOLUTION || resolution % 2 != 0 {
        return Err(Error::Config(format!(
            "resolution must be even and at least {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    let cons = r.constraints();
    let d = r.n - 1;
    let coarse = integrate_at(&cons, d, resolution / 2, 1);
    let fine = integrate_at(&cons, d, resolution / 2, 2);
    Ok(Quadrature {
        value: (4.0 * fine - coarse) / 3.0,
        est_error: (fine - coarse).abs() / 3.0,
    })
}

/// Share of `base` (by Haar volume) that also satisfies `gaps`.
pub fn gap_fraction(base: &CartanRegion, gaps: &[(usize, f64)], resolution: usize) -> Result<f64> {
    let mut cut = base.clone();
    cut.gap_constraints.extend_from_slice(gaps);
    let whole = integrate_region(base, resolution)?.value;
    if whole <= 0.0 {
        return Err(Error::Config("base region has zero volume".into()));
    }
    Ok(integrate_region(&cut, resolution)?.value / whole)
}
