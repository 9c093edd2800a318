//! Exterior powers and the projective metric on `P(wedge^k R^n)`.
//!
//! Basis order: `e_{i_1} ^ ... ^ e_{i_k}` for sorted index sets
//! `i_1 < ... < i_k`, enumerated lexicographically. For `n = 4, k = 2` that is
//! `12, 13, 14, 23, 24, 34` (zero-based internally).

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::spectral::{svd, SvdTriple};

/// Sorted `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0..n).combinations(k).collect()
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Coordinates in the lexicographic wedge basis.
#[derive(Clone, Debug, PartialEq)]
pub struct WedgeVector {
    pub n: usize,
    pub k: usize,
    pub coords: DVector<f64>,
}

impl WedgeVector {
    pub fn new(n: usize, k: usize, coords: DVector<f64>) -> Result<Self> {
        let expected = binomial(n, k);
        if coords.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coords.len(),
            });
        }
        Ok(Self { n, k, coords })
    }

    /// Basis vector for the `idx`-th subset.
    pub fn basis(n: usize, k: usize, idx: usize) -> Self {
        let mut coords = DVector::zeros(binomial(n, k));
        coords[idx] = 1.0;
        Self { n, k, coords }
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    pub fn normalized(mut self) -> Self {
        let nrm = self.coords.norm();
        if nrm > 0.0 {
            self.coords /= nrm;
        }
        self
    }

    /// `v_1 ^ ... ^ v_k` for column vectors of `R^n`.
    pub fn decomposable(vectors: &[DVector<f64>]) -> Result<Self> {
        let k = vectors.len();
        let n = vectors.first().map(|v| v.len()).unwrap_or(0);
        let m = DMatrix::from_columns(vectors);
        let coords = subsets(n, k)
            .iter()
            .map(|rows| m.select_rows(rows).determinant())
            .collect::<Vec<_>>();
        Self::new(n, k, DVector::from_vec(coords))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjKind {
    Point,
    /// Stored by the unit normal of the linear form cutting it out.
    Hyperplane,
}

/// A point or hyperplane of `P(wedge^k R^n)`, unit normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjElement {
    kind: ProjKind,
    rep: WedgeVector,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct ProjElementRepr {
    kind: ProjKind,
    n: usize,
    k: usize,
    coords: Vec<f64>,
}

impl serde::Serialize for ProjElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ProjElementRepr {
            kind: self.kind,
            n: self.rep.n,
            k: self.rep.k,
            coords: self.rep.coords.iter().copied().collect(),
        }
        .serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for ProjElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ProjElementRepr::deserialize(d)?;
        let rep = WedgeVector::new(r.n, r.k, DVector::from_vec(r.coords)).map_err(serde::de::Error::custom)?;
        Ok(match r.kind {
            ProjKind::Point => ProjElement::point(rep),
            ProjKind::Hyperplane => ProjElement::hyperplane(rep),
        })
    }
}

impl ProjElement {
    pub fn point(rep: WedgeVector) -> Self {
        Self {
            kind: ProjKind::Point,
            rep: rep.normalized(),
        }
    }

    pub fn hyperplane(normal: WedgeVector) -> Self {
        Self {
            kind: ProjKind::Hyperplane,
            rep: normal.normalized(),
        }
    }

    pub fn kind(&self) -> ProjKind {
        self.kind
    }

    pub fn rep(&self) -> &WedgeVector {
        &self.rep
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.rep.coords
    }

    fn same_space(&self, other: &Self) -> Result<()> {
        if self.rep.n != other.rep.n || self.rep.k != other.rep.k {
            return Err(Error::DimensionMismatch {
                expected: binomial(self.rep.n, self.rep.k),
                found: binomial(other.rep.n, other.rep.k),
            });
        }
        Ok(())
    }
}

/// Compound matrix: entry `(S, T)` is the minor of `g` on rows `S`, columns `T`.
/// Minors are exact; only the final conversion rounds.
pub fn wedge_matrix(g: &IntMatrix, k: usize) -> DMatrix<f64> {
    let n = g.dim();
    let subs = subsets(n, k);
    let size = subs.len();
    let mut out = DMatrix::zeros(size, size);
    for (i, rows) in subs.iter().enumerate() {
        for (j, cols) in subs.iter().enumerate() {
            out[(i, j)] = g.minor(rows, cols).to_f64().unwrap_or(f64::INFINITY);
        }
    }
    out
}

/// Compound matrix of a real matrix.
pub fn wedge_matrix_real(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let subs = subsets(n, k);
    let size = subs.len();
    if k == 1 {
        return m.clone();
    }
    let mut out = DMatrix::zeros(size, size);
    for (i, rows) in subs.iter().enumerate() {
        let sel = m.select_rows(rows);
        for (j, cols) in subs.iter().enumerate() {
            out[(i, j)] = sel.select_columns(cols).determinant();
        }
    }
    out
}

/// Sine of the angle between two lines, `||v ^ w|| / (||v|| ||w||)`.
pub fn proj_distance(a: &ProjElement, b: &ProjElement) -> Result<f64> {
    if a.kind != ProjKind::Point || b.kind != ProjKind::Point {
        return Err(Error::Config("proj_distance expects two points".into()));
    }
    a.same_space(b)?;
    Ok(sine_between(a.coords(), b.coords()))
}

/// `|f(v)| / (||f|| ||v||)` with `H = ker f`.
pub fn point_hyperplane_distance(v: &ProjElement, h: &ProjElement) -> Result<f64> {
    if v.kind != ProjKind::Point || h.kind != ProjKind::Hyperplane {
        return Err(Error::Config(
            "point_hyperplane_distance expects a point and a hyperplane".into(),
        ));
    }
    v.same_space(h)?;
    Ok(v.coords().dot(h.coords()).abs().min(1.0))
}

/// Norm of the rejection of `a` from `b`, for unit vectors; stable near zero.
pub(crate) fn sine_between(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let c = a.dot(b);
    let rej = a - b * c;
    rej.norm().min(1.0)
}

/// Attracting point `k_g(e_1 ^ ... ^ e_k)` and repelling hyperplane whose normal
/// is the lex-first row of the compound of `k_g'`.
pub fn attractor_repeller(g: &IntMatrix, k: usize) -> Result<(ProjElement, ProjElement)> {
    Ok(attractor_repeller_from_svd(&svd(g)?, k))
}

pub fn attractor_repeller_from_svd(s: &SvdTriple, k: usize) -> (ProjElement, ProjElement) {
    let n = s.dim();
    let (point, normal) = if k == 1 {
        (s.top_left(), s.top_right())
    } else {
        let first: Vec<usize> = (0..k).collect();
        let kk = s.k.select_columns(&first);
        let kp = s.k_prime.select_rows(&first).transpose();
        let cols_k: Vec<DVector<f64>> = (0..k).map(|i| kk.column(i).into_owned()).collect();
        let cols_kp: Vec<DVector<f64>> = (0..k).map(|i| kp.column(i).into_owned()).collect();
        (
            WedgeVector::decomposable(&cols_k).expect("k columns of length n").coords,
            WedgeVector::decomposable(&cols_kp).expect("k columns of length n").coords,
        )
    };
    (
        ProjElement::point(WedgeVector { n, k, coords: point }),
        ProjElement::hyperplane(WedgeVector { n, k, coords: normal }),
    )
}

/// Image of a point under a linear map on the wedge space.
pub fn apply(m: &DMatrix<f64>, p: &ProjElement) -> ProjElement {
    let rep = &p.rep;
    ProjElement::point(WedgeVector {
        n: rep.n,
        k: rep.k,
        coords: m * &rep.coords,
    })
}
