use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::Refusal;
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::spectral::DELTA_NUM;

/// Boundary samples per circle in the mapping spot-check.
pub const BOUNDARY_SAMPLES: usize = 64;
/// Number of circles minus one in the dimension bound.
pub const HAUSDORFF_K: f64 = 3.0;

mod bigint_string {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigInt; 2], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[BigInt; 2], D::Error> {
        let raw: [String; 2] = Deserialize::deserialize(d)?;
        let parse = |s: &str| s.parse::<BigInt>().map_err(D::Error::custom);
        Ok([parse(&raw[0])?, parse(&raw[1])?])
    }
}

/// Circle in C centred on the real axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: f64,
    pub radius: f64,
}

impl Circle {
    /// Euclidean gap between the closed discs; negative if they overlap.
    pub fn gap(&self, other: &Circle) -> f64 {
        (self.center - other.center).abs() - self.radius - other.radius
    }

    fn contains(&self, z: Complex64) -> bool {
        (z - Complex64::new(self.center, 0.0)).norm() < self.radius
    }
}

/// Attracting and repelling fixed points of a hyperbolic element on R.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPoints {
    pub attracting: f64,
    pub repelling: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchottkyCertificate {
    #[serde(with = "bigint_string")]
    pub traces: [BigInt; 2],
    pub fixed_points: [FixedPoints; 2],
    /// `I(g1), I(g2), I(g1^-1), I(g2^-1)`.
    pub circles: [Circle; 4],
    pub min_gap: f64,
}

fn f(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn entries(g: &IntMatrix) -> Result<[&BigInt; 4]> {
    if g.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: g.dim(),
        });
    }
    Ok([g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1)])
}

/// Roots of `c x^2 + (d - a) x - b = 0`; the attracting one has `|cx + d| > 1`.
pub fn sl2_fixed_points(g: &IntMatrix) -> Result<FixedPoints> {
    let [a, b, c, d] = entries(g)?;
    let tr = a + d;
    if tr.abs() <= BigInt::from(2) {
        return Err(Error::NotHyperbolic {
            trace: tr.to_string(),
        });
    }
    if c.is_zero() {
        return Err(Error::FixedPointAtInfinity);
    }
    let disc = f(&(&tr * &tr - 4));
    let bq = f(&(d - a));
    let (cf, df) = (f(c), f(d));
    let sign = if bq >= 0.0 { 1.0 } else { -1.0 };
    let q = -0.5 * (bq + sign * disc.sqrt());
    let roots = [q / cf, -f(b) / q];
    let expands = |x: f64| (cf * x + df).abs() > 1.0;
    let (attracting, repelling) = if expands(roots[0]) {
        (roots[0], roots[1])
    } else {
        (roots[1], roots[0])
    };
    Ok(FixedPoints {
        attracting,
        repelling,
    })
}

fn isometric_circles(g: &IntMatrix) -> Option<(Circle, Circle)> {
    let [a, _, c, d] = entries(g).ok()?;
    if c.is_zero() {
        return None;
    }
    let (cf, radius) = (f(c), 1.0 / f(c).abs());
    Some((
        Circle {
            center: -f(d) / cf,
            radius,
        },
        Circle {
            center: f(a) / cf,
            radius,
        },
    ))
}

fn mobius(g: &IntMatrix, z: Complex64) -> Complex64 {
    let [a, b, c, d] = [g.get(0, 0), g.get(0, 1), g.get(1, 0), g.get(1, 1)].map(f);
    (z * a + b) / (z * c + d)
}

/// Images of points just outside `from` (upper half plane) land inside `to`.
fn maps_exterior_into(g: &IntMatrix, from: &Circle, to: &Circle) -> bool {
    (0..BOUNDARY_SAMPLES).all(|i| {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / BOUNDARY_SAMPLES as f64;
        let z = Complex64::new(from.center, 0.0) + Complex64::from_polar(from.radius * (1.0 + 1e-3), theta);
        to.contains(mobius(g, z))
    })
}

/// Certificate or the first failed condition.
pub fn schottky_check(g1: &IntMatrix, g2: &IntMatrix) -> Result<std::result::Result<SchottkyCertificate, Refusal>> {
    entries(g1)?;
    entries(g2)?;
    let mut fixed = Vec::with_capacity(2);
    let mut own = Vec::with_capacity(2);
    let mut inv = Vec::with_capacity(2);
    for (g, name) in [(g1, "g1"), (g2, "g2")] {
        g.inverse()?;
        match sl2_fixed_points(g) {
            Ok(fp) => fixed.push(fp),
            Err(Error::NotHyperbolic { trace }) => {
                return Ok(Err(Refusal::new(
                    format!("{name} is not hyperbolic"),
                    format!("|tr| = |{trace}| <= 2"),
                )))
            }
            Err(Error::FixedPointAtInfinity) => {
                return Ok(Err(Refusal::new(
                    format!("{name} fixes infinity"),
                    "lower-left entry is zero",
                )))
            }
            Err(e) => return Err(e),
        }
        let (c, ci) = isometric_circles(g).expect("c nonzero for hyperbolic with finite fixed points");
        own.push(c);
        inv.push(ci);
    }
    let circles = [own[0], own[1], inv[0], inv[1]];
    let names = ["I(g1)", "I(g2)", "I(g1^-1)", "I(g2^-1)"];
    let mut min_gap = f64::INFINITY;
    for i in 0..4 {
        for j in i + 1..4 {
            let gap = circles[i].gap(&circles[j]);
            if gap <= DELTA_NUM {
                return Ok(Err(Refusal::new(
                    "isometric circles not disjoint",
                    format!("gap({}, {}) = {gap:.6e} <= delta = {DELTA_NUM:e}", names[i], names[j]),
                )));
            }
            min_gap = min_gap.min(gap);
        }
    }
    for (idx, g) in [g1, g2].into_iter().enumerate() {
        let gi = g.inverse()?;
        if !maps_exterior_into(g, &circles[idx], &circles[idx + 2])
            || !maps_exterior_into(&gi, &circles[idx + 2], &circles[idx])
        {
            return Err(Error::Invariant(format!(
                "mapping spot-check failed for generator {} with disjoint circles",
                idx + 1
            )));
        }
    }
    Ok(Ok(SchottkyCertificate {
        traces: [g1.trace(), g2.trace()],
        fixed_points: [fixed[0], fixed[1]],
        circles,
        min_gap,
    }))
}

/// Certificate when the four isometric circles are pairwise disjoint.
pub fn schottky_sl2(g1: &IntMatrix, g2: &IntMatrix) -> Result<Option<SchottkyCertificate>> {
    Ok(schottky_check(g1, g2)?.ok())
}

/// `-log K / (2 log lambda)` with `lambda = max r_i / (|a_i - a_j| - r_j)`;
/// `None` when `lambda` is not in `(0, 1)`.
pub fn hausdorff_bound_from_circles(circles: &[Circle]) -> Option<f64> {
    let mut lambda: f64 = 0.0;
    for (i, ci) in circles.iter().enumerate() {
        for (j, cj) in circles.iter().enumerate() {
            if i == j {
                continue;
            }
            let denom = (ci.center - cj.center).abs() - cj.radius;
            if denom <= 0.0 {
                return None;
            }
            lambda = lambda.max(ci.radius / denom);
        }
    }
    if lambda <= 0.0 || lambda >= 1.0 {
        return None;
    }
    Some(-HAUSDORFF_K.ln() / (2.0 * lambda.ln()))
}

pub fn hausdorff_upper_bound(cert: &SchottkyCertificate) -> Option<f64> {
    hausdorff_bound_from_circles(&cert.circles)
}
