//! Monte Carlo experiments over norm balls and their reports.
//!
//! For each radius the ball is enumerated (or read from the cache), ordered
//! pairs are sampled uniformly, and each pair is classified by trace, singular
//! value gaps, proximality and the certificates. Certified pairs are then
//! handed to the exact oracle, which must never find a relation.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certify::{choose_k, hausdorff_upper_bound, ping_pong_check, schottky_sl2, very_proximal};
use crate::dynamics::{estimate_lyapunov_pair, falsify_freeness, MAX_ORACLE_LEN};
use crate::error::{Error, Result};
use crate::matrix::IntMatrix;
use crate::rng::derive_seed;
use crate::sampler::{load_or_enumerate, sample_pair_indices, BallEnumeration, BallSpec};
use crate::spectral::svd;
use crate::wedge::{attractor_repeller_from_svd, point_hyperplane_distance};

/// Directory for cached enumerations.
pub const CACHE_ENV: &str = "THINPAIR_CACHE_DIR";
/// Pairs that get a Lyapunov estimate per radius.
pub const LYAPUNOV_PAIRS: usize = 10;

fn default_lyapunov_m() -> usize {
    200
}

fn default_lyapunov_trials() -> usize {
    8
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    #[serde(rename = "X_grid")]
    pub x_grid: Vec<f64>,
    pub symmetrized: bool,
    #[serde(rename = "pairs_per_X")]
    pub pairs_per_x: usize,
    pub eps: f64,
    pub r: f64,
    pub eta: f64,
    pub oracle_depth: usize,
    pub seed: u64,
    #[serde(default = "default_lyapunov_m")]
    pub lyapunov_m: usize,
    #[serde(default = "default_lyapunov_trials")]
    pub lyapunov_trials: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.eps > 0.0 && self.eps < 0.25) {
            return fail(format!("eps must lie in (0, 1/4), got {}", self.eps));
        }
        if !(self.r > 2.0 * self.eps) {
            return fail(format!("need r > 2 eps, got r = {}", self.r));
        }
        if !(self.eta > 1.0) {
            return fail(format!("eta must exceed 1, got {}", self.eta));
        }
        if self.oracle_depth > MAX_ORACLE_LEN {
            return Err(Error::Budget(format!(
                "oracle depth {} exceeds {MAX_ORACLE_LEN}",
                self.oracle_depth
            )));
        }
        if self.lyapunov_m == 0 || self.lyapunov_trials == 0 {
            return fail("lyapunov_m and lyapunov_trials must be positive".into());
        }
        for &x in &self.x_grid {
            BallSpec::new(self.n, x, self.symmetrized).validate()?;
        }
        Ok(())
    }
}

/// One radius of an experiment. Fractions are over sampled ordered pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    #[serde(rename = "X")]
    pub x: f64,
    pub count_ball: usize,
    pub pairs: usize,
    /// Both generators have `|tr| > n`.
    pub frac_trace_large: f64,
    /// Both generators have the middle gap(s) at least `eta^2`.
    pub frac_gapped: f64,
    /// Gapped, and both generators are `(r, eps)`-very proximal.
    pub frac_very_proximal: f64,
    /// Very proximal, and a ping-pong certificate was issued.
    pub frac_pingpong: f64,
    /// `n = 2` only.
    pub frac_schottky: Option<f64>,
    /// Over Schottky-certified pairs with a finite bound; `n = 2` only.
    pub median_hausdorff_bound: Option<f64>,
    /// Generators with `d(v_g, H_g) <= 2 eps`, among those with a strict gap.
    pub frac_near_repeller: f64,
    pub oracle_tested: usize,
    pub oracle_falsifications: usize,
    pub control_tested: usize,
    pub control_falsified: usize,
    pub lyapunov_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub library_version: String,
    pub config: ExperimentConfig,
    pub rows: Vec<ExperimentRow>,
}

/// Rounds to 12 significant digits so reports re-emit byte-identically.
fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn frac(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        round12(hits as f64 / total as f64)
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// Per-generator spectral facts, computed once per ball member.
#[derive(Clone, Debug)]
struct GenInfo {
    trace_large: bool,
    gapped: bool,
    very_proximal: bool,
    /// `Some(d(v_g, H_g))` when `a_k > a_{k+1}`.
    repeller_distance: Option<f64>,
}

fn gen_info(g: &IntMatrix, cfg: &ExperimentConfig) -> Result<GenInfo> {
    let n = g.dim();
    let k = choose_k(n);
    let s = svd(g)?;
    let eta2 = cfg.eta * cfg.eta;
    let gap_ok = |i: usize| s.sigma[i - 1] >= eta2 * s.sigma[i];
    let gapped = if n % 2 == 0 {
        gap_ok(k)
    } else {
        gap_ok(k) && gap_ok(k + 1)
    };
    let repeller_distance = (s.sigma[k - 1] > s.sigma[k] * (1.0 + 1e-12)).then(|| {
        let (v, h) = attractor_repeller_from_svd(&s, k);
        point_hyperplane_distance(&v, &h).expect("same space")
    });
    let very_proximal = gapped && very_proximal(g, k, cfg.r, cfg.eps)?.is_some();
    let trace = g.trace();
    Ok(GenInfo {
        trace_large: trace.magnitude() > &num_bigint::BigUint::from(n),
        gapped,
        very_proximal,
        repeller_distance,
    })
}

#[derive(Clone, Debug, Default)]
struct PairOutcome {
    trace_large: bool,
    gapped: bool,
    very_proximal: bool,
    pingpong: bool,
    schottky: bool,
    hausdorff: Option<f64>,
}

fn classify(
    g1: &IntMatrix,
    g2: &IntMatrix,
    i1: &GenInfo,
    i2: &GenInfo,
    cfg: &ExperimentConfig,
) -> Result<PairOutcome> {
    let mut out = PairOutcome {
        trace_large: i1.trace_large && i2.trace_large,
        gapped: i1.gapped && i2.gapped,
        ..Default::default()
    };
    out.very_proximal = out.gapped && i1.very_proximal && i2.very_proximal;
    if out.very_proximal {
        out.pingpong = ping_pong_check(g1, g2, choose_k(cfg.n), cfg.r, cfg.eps)?.is_ok();
    }
    if cfg.n == 2 {
        if let Some(cert) = schottky_sl2(g1, g2)? {
            out.schottky = true;
            out.hausdorff = hausdorff_upper_bound(&cert);
        }
    }
    Ok(out)
}

fn run_radius(cfg: &ExperimentConfig, x: f64, cache: Option<&Path>) -> Result<ExperimentRow> {
    let spec = BallSpec::new(cfg.n, x, cfg.symmetrized);
    let ball: BallEnumeration = load_or_enumerate(&spec, cache)?;
    let seed = derive_seed(cfg.seed, x.to_bits());
    let picks = sample_pair_indices(&ball, cfg.pairs_per_x, seed)?;

    // spectral data once per distinct member
    let mut used: Vec<usize> = picks.iter().flat_map(|&(a, b)| [a, b]).collect();
    used.sort_unstable();
    used.dedup();
    let infos: Vec<GenInfo> = used
        .par_iter()
        .map(|&i| gen_info(&ball.member(i), cfg))
        .collect::<Result<_>>()?;
    let info = |i: usize| &infos[used.binary_search(&i).expect("member was collected")];

    let outcomes: Vec<PairOutcome> = picks
        .par_iter()
        .map(|&(a, b)| classify(&ball.member(a), &ball.member(b), info(a), info(b), cfg))
        .collect::<Result<_>>()?;

    let count = |f: fn(&PairOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    let total = picks.len();

    let mut defined = 0;
    let mut near = 0;
    for &(a, b) in &picks {
        for i in [a, b] {
            if let Some(d) = info(i).repeller_distance {
                defined += 1;
                near += usize::from(d <= 2.0 * cfg.eps);
            }
        }
    }

    let certified: Vec<usize> = (0..total).filter(|&p| outcomes[p].pingpong || outcomes[p].schottky).collect();
    let control: Vec<usize> = (0..total)
        .filter(|&p| !(outcomes[p].pingpong || outcomes[p].schottky))
        .take(certified.len())
        .collect();
    let oracle = |p: usize| -> Result<bool> {
        let (a, b) = picks[p];
        Ok(falsify_freeness(&ball.member(a), &ball.member(b), cfg.oracle_depth)?.is_some())
    };
    let hits: Vec<(usize, bool)> = certified
        .par_iter()
        .map(|&p| oracle(p).map(|hit| (p, hit)))
        .collect::<Result<_>>()?;
    if let Some(&(p, _)) = hits.iter().find(|(_, hit)| *hit) {
        let (a, b) = picks[p];
        let (g1, g2) = (ball.member(a), ball.member(b));
        let word = falsify_freeness(&g1, &g2, cfg.oracle_depth)?.expect("relation found above");
        return Err(Error::Invariant(format!(
            "certified pair satisfies a relation: X = {x}, g1 = {g1}, g2 = {g2}, word {word}, \
             pingpong = {}, schottky = {}",
            outcomes[p].pingpong, outcomes[p].schottky
        )));
    }
    let control_falsified = control
        .par_iter()
        .map(|&p| oracle(p))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&h| h)
        .count();

    let lyap: Vec<f64> = picks
        .iter()
        .take(LYAPUNOV_PAIRS)
        .enumerate()
        .map(|(i, &(a, b))| {
            estimate_lyapunov_pair(
                &ball.member(a),
                &ball.member(b),
                cfg.lyapunov_m,
                cfg.lyapunov_trials,
                derive_seed(seed, i as u64 + 1),
            )
            .map(|e| e.mean)
        })
        .collect::<Result<_>>()?;

    let bounds: Vec<f64> = outcomes.iter().filter_map(|o| o.hausdorff).collect();
    Ok(ExperimentRow {
        x,
        count_ball: ball.count(),
        pairs: total,
        frac_trace_large: frac(count(|o| o.trace_large), total),
        frac_gapped: frac(count(|o| o.gapped), total),
        frac_very_proximal: frac(count(|o| o.very_proximal), total),
        frac_pingpong: frac(count(|o| o.pingpong), total),
        frac_schottky: (cfg.n == 2).then(|| frac(count(|o| o.schottky), total)),
        median_hausdorff_bound: if cfg.n == 2 { median(bounds).map(round12) } else { None },
        frac_near_repeller: frac(near, defined),
        oracle_tested: certified.len(),
        oracle_falsifications: 0,
        control_tested: control.len(),
        control_falsified,
        lyapunov_mean: (!lyap.is_empty()).then(|| round12(lyap.iter().sum::<f64>() / lyap.len() as f64)),
    })
}

/// Cache directory from [`CACHE_ENV`], if set and non-empty.
pub fn cache_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// Runs the experiment, caching enumerations in `cache` when given.
pub fn run_experiment_with_cache(cfg: &ExperimentConfig, cache: Option<&Path>) -> Result<ExperimentReport> {
    cfg.validate()?;
    let rows = cfg
        .x_grid
        .iter()
        .map(|&x| run_radius(cfg, x, cache))
        .collect::<Result<_>>()?;
    Ok(ExperimentReport {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        rows,
    })
}

/// Runs the experiment with the cache directory taken from the environment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with_cache(cfg, cache_dir_from_env().as_deref())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!("unknown report format {other:?}"))),
        }
    }
}

/// CSV columns, in order.
pub const CSV_COLUMNS: [&str; 15] = [
    "X",
    "count_ball",
    "pairs",
    "frac_trace_large",
    "frac_gapped",
    "frac_very_proximal",
    "frac_pingpong",
    "frac_schottky",
    "median_hausdorff_bound",
    "frac_near_repeller",
    "oracle_tested",
    "oracle_falsifications",
    "control_tested",
    "control_falsified",
    "lyapunov_mean",
];

fn csv_record(row: &ExperimentRow) -> Vec<String> {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    vec![
        row.x.to_string(),
        row.count_ball.to_string(),
        row.pairs.to_string(),
        row.frac_trace_large.to_string(),
        row.frac_gapped.to_string(),
        row.frac_very_proximal.to_string(),
        row.frac_pingpong.to_string(),
        opt(row.frac_schottky),
        opt(row.median_hausdorff_bound),
        row.frac_near_repeller.to_string(),
        row.oracle_tested.to_string(),
        row.oracle_falsifications.to_string(),
        row.control_tested.to_string(),
        row.control_falsified.to_string(),
        opt(row.lyapunov_mean),
    ]
}

/// Writes the report in the given format.
pub fn write_report(rep: &ExperimentReport, format: ReportFormat, out: &mut impl Write) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, rep)?;
            out.write_all(b"\n").map_err(|e| Error::io("<report>", e))?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_COLUMNS)?;
            for row in &rep.rows {
                w.write_record(csv_record(row))?;
            }
            w.flush().map_err(|e| Error::io("<report>", e))?;
        }
    }
    Ok(())
}

pub fn report_to_string(rep: &ExperimentReport, format: ReportFormat) -> Result<String> {
    let mut buf = Vec::new();
    write_report(rep, format, &mut buf)?;
    Ok(String::from_utf8(buf).expect("reports are UTF-8"))
}

/// Writes the report to `path`.
pub fn emit_report(rep: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_report(rep, format, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
