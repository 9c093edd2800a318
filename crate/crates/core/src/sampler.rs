//! Exact enumeration of norm balls in `SL_2(Z)` and `SL_3(Z)`.
//!
//! `B_X = { g : ||g|| <= X }` and the symmetrized `B'_X = { g : g, g^-1 in B_X }`.
//! Membership is decided exactly: `a_1(g) <= X` iff every coefficient of
//! `det(u I + (X^2 I - g^T g))` is non-negative, i.e. every sum of principal
//! minors of `X^2 I - g^T g` of each order is non-negative. A float check
//! settles the clear cases and the exact test runs near the boundary.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::rng::seeded;

/// Largest radius enumerated for `n = 2`.
pub const MAX_X_N2: f64 = 500.0;
/// Largest radius enumerated for `n = 3`.
pub const MAX_X_N3: f64 = 6.0;
/// Bumped whenever the cache layout or member order changes.
pub const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub n: usize,
    #[serde(rename = "X")]
    pub x: f64,
    pub symmetrized: bool,
}

impl BallSpec {
    pub fn new(n: usize, x: f64, symmetrized: bool) -> Self {
        Self { n, x, symmetrized }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.x >= 1.0) {
            return Err(Error::Config(format!("radius must be >= 1, got {}", self.x)));
        }
        let cap = match self.n {
            2 => MAX_X_N2,
            3 => MAX_X_N3,
            n => {
                return Err(Error::Budget(format!(
                    "enumeration supports n = 2, 3 only (n = {n})"
                )))
            }
        };
        if self.x > cap {
            return Err(Error::Budget(format!(
                "X = {} exceeds the n = {} enumeration budget ({cap}); use a smaller radius",
                self.x, self.n
            )));
        }
        Ok(())
    }

    fn cache_name(&self) -> String {
        format!(
            "ball-n{}-x{:016x}-{}-v{}.jsonl",
            self.n,
            self.x.to_bits(),
            if self.symmetrized { "sym" } else { "plain" },
            CACHE_FORMAT_VERSION
        )
    }
}

/// Members of a ball, sorted by row-major entries.
#[derive(Clone, Debug, PartialEq)]
pub struct BallEnumeration {
    spec: BallSpec,
    flat: Vec<i64>,
}

impl BallEnumeration {
    pub fn spec(&self) -> BallSpec {
        self.spec
    }

    pub fn count(&self) -> usize {
        self.flat.len() / (self.spec.n * self.spec.n)
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    /// Row-major entries of member `i`.
    pub fn entries(&self, i: usize) -> &[i64] {
        let sq = self.spec.n * self.spec.n;
        &self.flat[i * sq..(i + 1) * sq]
    }

    pub fn member(&self, i: usize) -> IntMatrix {
        IntMatrix::from_i64(self.spec.n, self.entries(i))
    }

    pub fn members(&self) -> impl Iterator<Item = IntMatrix> + '_ {
        (0..self.count()).map(|i| self.member(i))
    }

    /// Builds from arbitrary members, sorting and deduplicating.
    pub fn from_members(spec: BallSpec, members: Vec<Vec<i64>>) -> Self {
        let flat = members.into_iter().sorted().dedup().flatten().collect();
        Self { spec, flat }
    }

    /// Writes one JSON array of decimal strings per line, after a header line.
    pub fn write_jsonl(&self, w: &mut impl Write) -> Result<()> {
        serde_json::to_writer(&mut *w, &CacheHeader::new(self.spec, self.count()))?;
        w.write_all(b"\n").map_err(|e| Error::io("<members>", e))?;
        for i in 0..self.count() {
            serde_json::to_writer(&mut *w, &self.member(i))?;
            w.write_all(b"\n").map_err(|e| Error::io("<members>", e))?;
        }
        Ok(())
    }

    pub fn read_jsonl(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let header: CacheHeader = match lines.next() {
            Some(line) => serde_json::from_str(&line.map_err(|e| Error::io("<members>", e))?)?,
            None => return Err(Error::Config("empty enumeration file".into())),
        };
        let spec = header.spec;
        let mut flat = Vec::with_capacity(header.count * spec.n * spec.n);
        for line in lines {
            let line = line.map_err(|e| Error::io("<members>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let m: IntMatrix = serde_json::from_str(&line)?;
            flat.extend(m.to_i64().ok_or_else(|| Error::ParseEntry(line.clone()))?);
        }
        let e = Self { spec, flat };
        if e.count() != header.count {
            return Err(Error::Config(format!(
                "enumeration file lists {} members, header says {}",
                e.count(),
                header.count
            )));
        }
        Ok(e)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    format_version: u32,
    spec: BallSpec,
    count: usize,
}

impl CacheHeader {
    fn new(spec: BallSpec, count: usize) -> Self {
        Self {
            format_version: CACHE_FORMAT_VERSION,
            spec,
            count,
        }
    }
}

/// `X^2` as an exact dyadic fraction `num / den`.
#[derive(Clone, Debug)]
struct ExactSquare {
    num: BigInt,
    den: BigInt,
    approx: f64,
}

impl ExactSquare {
    fn of(x: f64) -> Self {
        // x = mantissa * 2^exp exactly
        let bits = x.to_bits();
        let exp_bits = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, exp) = if exp_bits == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_bits - 1075)
        };
        let m2 = BigInt::from(mant) * BigInt::from(mant);
        let e2 = 2 * exp;
        let (num, den) = if e2 >= 0 {
            (m2 << (e2 as usize), BigInt::from(1))
        } else {
            (m2, BigInt::from(1) << ((-e2) as usize))
        };
        Self {
            num,
            den,
            approx: x * x,
        }
    }
}

/// `true` iff `a_1(g) <= X`, decided exactly.
fn norm_at_most(n: usize, g: &[i64], s: &ExactSquare) -> bool {
    // M = g^T g
    let mut m = [0i128; 9];
    for i in 0..n {
        for j in i..n {
            let v: i128 = (0..n).map(|r| g[r * n + i] as i128 * g[r * n + j] as i128).sum();
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    match principal_sums_f64(n, &m, s.approx) {
        Some(ok) => ok,
        None => principal_sums_exact(n, &m, s),
    }
}

/// Float sign test of the principal-minor sums; `None` when too close to call.
fn principal_sums_f64(n: usize, m: &[i128; 9], s: f64) -> Option<bool> {
    let p: Vec<f64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let d = if i == j { s } else { 0.0 };
            d - m[idx] as f64
        })
        .collect();
    let trace_m: f64 = (0..n).map(|i| m[i * n + i] as f64).sum();
    let scale = s + trace_m;
    let mut undecided = false;
    for r in 1..=n {
        let sum: f64 = (0..n)
            .combinations(r)
            .map(|idx| det_small_f64(&idx, &p, n))
            .sum();
        let tol = 1e-9 * scale.powi(r as i32);
        if sum < -tol {
            return Some(false);
        }
        if sum <= tol {
            undecided = true;
        }
    }
    if undecided {
        None
    } else {
        Some(true)
    }
}

fn det_small_f64(idx: &[usize], p: &[f64], n: usize) -> f64 {
    let e = |a: usize, b: usize| p[idx[a] * n + idx[b]];
    match idx.len() {
        1 => e(0, 0),
        2 => e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0),
        3 => {
            e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
        }
        _ => unreachable!("n <= 3"),
    }
}

fn principal_sums_exact(n: usize, m: &[i128; 9], s: &ExactSquare) -> bool {
    // den * (s I - M) = num I - den M has the same principal-minor signs.
    let p: Vec<BigInt> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let d = if i == j { s.num.clone() } else { BigInt::zero() };
            d - &s.den * BigInt::from(m[idx])
        })
        .collect();
    let pm = IntMatrix::new(n, p).expect("square");
    (1..=n).all(|r| {
        let sum: BigInt = (0..n).combinations(r).map(|idx| pm.minor(&idx, &idx)).sum();
        !sum.is_negative()
    })
}

fn adjugate_i64(n: usize, g: &[i64]) -> Vec<i64> {
    match n {
        2 => vec![g[3], -g[1], -g[2], g[0]],
        3 => {
            let e = |i: usize, j: usize| g[i * 3 + j];
            let cof = |i: usize, j: usize| {
                let r: Vec<usize> = (0..3).filter(|&x| x != i).collect();
                let c: Vec<usize> = (0..3).filter(|&x| x != j).collect();
                let m = e(r[0], c[0]) * e(r[1], c[1]) - e(r[0], c[1]) * e(r[1], c[0]);
                if (i + j) % 2 == 0 {
                    m
                } else {
                    -m
                }
            };
            let mut out = vec![0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    out[j * 3 + i] = cof(i, j);
                }
            }
            out
        }
        _ => unreachable!("n <= 3"),
    }
}

/// Whether a unimodular `g` belongs to the ball described by `spec`.
pub fn in_ball(spec: &BallSpec, g: &[i64]) -> bool {
    let s = ExactSquare::of(spec.x);
    member_test(spec, g, &s)
}

fn member_test(spec: &BallSpec, g: &[i64], s: &ExactSquare) -> bool {
    let n = spec.n;
    norm_at_most(n, g, s) && (!spec.symmetrized || norm_at_most(n, &adjugate_i64(n, g), s))
}

/// Complete, sorted enumeration of the ball.
pub fn enumerate_ball(spec: &BallSpec) -> Result<BallEnumeration> {
    spec.validate()?;
    let s = ExactSquare::of(spec.x);
    let members = match spec.n {
        2 => enumerate_n2(spec, &s),
        3 => enumerate_n3(spec, &s),
        _ => unreachable!("validated"),
    };
    Ok(BallEnumeration::from_members(*spec, members))
}

/// Integer points `v` with `|v|^2 <= r2` in `dim` coordinates.
fn ball_points(dim: usize, bound: i64, r2: f64) -> Vec<Vec<i64>> {
    (0..dim)
        .map(|_| -bound..=bound)
        .multi_cartesian_product()
        .filter(|v| v.iter().map(|&x| (x * x) as f64).sum::<f64>() <= r2 * (1.0 + 1e-12))
        .collect()
}

fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |acc, &x| acc.gcd(&x))
}

fn enumerate_n2(spec: &BallSpec, s: &ExactSquare) -> Vec<Vec<i64>> {
    let bound = spec.x.floor() as i64;
    let r2 = s.approx;
    let first_columns: Vec<Vec<i64>> = ball_points(2, bound, r2)
        .into_iter()
        .filter(|v| gcd_all(v) == 1)
        .collect();
    first_columns
        .par_iter()
        .flat_map_iter(|col| {
            let (a, c) = (col[0], col[1]);
            // a*d - b*c = 1: Bezout gives a*x + c*y = 1, then (b, d) = (-y, x) + t (a, c)
            let ext = a.extended_gcd(&c);
            let (x0, y0) = if ext.gcd < 0 { (-ext.x, -ext.y) } else { (ext.x, ext.y) };
            let (b0, d0) = (-y0, x0);
            let uu = (a * a + c * c) as f64;
            let center = -((b0 * a + d0 * c) as f64) / uu;
            let perp2 = (b0 * b0 + d0 * d0) as f64 - center * center * uu;
            let reach = ((r2 - perp2).max(0.0) / uu).sqrt();
            let lo = (center - reach).floor() as i64 - 1;
            let hi = (center + reach).ceil() as i64 + 1;
            (lo..=hi).filter_map(move |t| {
                let g = [a, b0 + t * a, c, d0 + t * c];
                member_test(spec, &g, s).then(|| g.to_vec())
            })
        })
        .collect()
}

fn enumerate_n3(spec: &BallSpec, s: &ExactSquare) -> Vec<Vec<i64>> {
    let bound = spec.x.floor() as i64;
    let r2 = s.approx;
    let columns: Vec<Vec<i64>> = ball_points(3, bound, r2)
        .into_iter()
        .filter(|v| gcd_all(v) == 1)
        .collect();
    columns
        .par_iter()
        .flat_map_iter(|c1| {
            let mut out = Vec::new();
            for c2 in &columns {
                let cross = [
                    c1[1] * c2[2] - c1[2] * c2[1],
                    c1[2] * c2[0] - c1[0] * c2[2],
                    c1[0] * c2[1] - c1[1] * c2[0],
                ];
                // det = cross . c3 = 1 needs a primitive cross product
                if gcd_all(&cross) != 1 {
                    continue;
                }
                // the top singular value of the first two columns bounds a_1(g)
                let (p, q, r) = (dot(c1, c1) as f64, dot(c2, c2) as f64, dot(c1, c2) as f64);
                let top = 0.5 * (p + q + ((p - q) * (p - q) + 4.0 * r * r).sqrt());
                if top > r2 * (1.0 + 1e-9) {
                    continue;
                }
                for c3 in &columns {
                    if dot(&cross, c3) != 1 {
                        continue;
                    }
                    let g = [c1[0], c2[0], c3[0], c1[1], c2[1], c3[1], c1[2], c2[2], c3[2]];
                    if member_test(spec, &g, s) {
                        out.push(g.to_vec());
                    }
                }
            }
            out
        })
        .collect()
}

/// Brute force over every integer matrix with entries bounded by `X`; only for
/// cross-checking [`enumerate_ball`] on small radii.
pub fn enumerate_ball_naive(spec: &BallSpec) -> Result<BallEnumeration> {
    spec.validate()?;
    let b = spec.x.floor() as i64;
    let n = spec.n;
    let cells = ((2 * b + 1) as f64).powi((n * n) as i32);
    if cells > 1e8 {
        return Err(Error::Budget(format!("naive box has {cells:e} cells")));
    }
    let s = ExactSquare::of(spec.x);
    let members = (0..n * n)
        .map(|_| -b..=b)
        .multi_cartesian_product()
        .filter(|g| {
            let m = IntMatrix::from_i64(n, g);
            m.det() == BigInt::from(1) && member_test(spec, g, &s)
        })
        .collect();
    Ok(BallEnumeration::from_members(*spec, members))
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Enumeration backed by an on-disk cache when `cache_dir` is given.
pub fn load_or_enumerate(spec: &BallSpec, cache_dir: Option<&Path>) -> Result<BallEnumeration> {
    let Some(dir) = cache_dir else {
        return enumerate_ball(spec);
    };
    spec.validate()?;
    let path: PathBuf = dir.join(spec.cache_name());
    if let Ok(file) = fs::File::open(&path) {
        if let Ok(e) = BallEnumeration::read_jsonl(BufReader::new(file)) {
            if e.spec == *spec {
                return Ok(e);
            }
        }
    }
    let e = enumerate_ball(spec)?;
    fs::create_dir_all(dir).map_err(|err| Error::io(dir, err))?;
    // write-then-rename keeps concurrent readers from seeing a partial file
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let file = fs::File::create(&tmp).map_err(|err| Error::io(&tmp, err))?;
        let mut w = BufWriter::new(file);
        e.write_jsonl(&mut w)?;
        w.flush().map_err(|err| Error::io(&tmp, err))?;
    }
    fs::rename(&tmp, &path).map_err(|err| Error::io(&path, err))?;
    Ok(e)
}

/// Member indices of `count` independent uniform ordered pairs.
pub fn sample_pair_indices(e: &BallEnumeration, count: usize, seed: u64) -> Result<Vec<(usize, usize)>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if e.is_empty() {
        return Err(Error::EmptyEnumeration);
    }
    let len = e.count() as u64;
    let mut rng = seeded(seed);
    Ok((0..count)
        .map(|_| {
            let i = rng.random_range(0..len) as usize;
            let j = rng.random_range(0..len) as usize;
            (i, j)
        })
        .collect())
}

/// `count` independent uniform ordered pairs, with replacement.
pub fn sample_pairs(e: &BallEnumeration, count: usize, seed: u64) -> Result<Vec<(IntMatrix, IntMatrix)>> {
    Ok(sample_pair_indices(e, count, seed)?
        .into_iter()
        .map(|(i, j)| (e.member(i), e.member(j)))
        .collect())
}
