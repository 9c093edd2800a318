//! `thinpair` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use thinpair::certify::{
    choose_k, hausdorff_upper_bound, ping_pong_check, schottky_check, SchottkyCertificate, DEFAULT_EPS,
    DEFAULT_R_FACTOR,
};
use thinpair::dynamics::{estimate_lyapunov_pair, falsify_freeness, reduced_length_stats};
use thinpair::harness::{cache_dir_from_env, emit_report, run_experiment, write_report, ExperimentConfig, ReportFormat};
use thinpair::sampler::{load_or_enumerate, BallSpec};
use thinpair::{integrate_region, CartanRegion, Error, IntMatrix};

#[derive(Parser)]
#[command(name = "thinpair", version, about = "Freeness certificates and genericity experiments in SL_n(Z)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count (and optionally list) the members of a norm ball.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long = "X", alias = "x")]
        x: f64,
        #[arg(long)]
        symmetrized: bool,
        /// Write the members as JSON lines.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ping-pong certificate on the k-th exterior power.
    Certify {
        #[arg(long)]
        pair: PathBuf,
        /// Checked against the pair when given.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Defaults to 2.5 eps.
        #[arg(long)]
        r: Option<f64>,
    },
    /// Schottky certificate from isometric circles (2x2 only).
    Schottky {
        #[arg(long)]
        pair: PathBuf,
    },
    /// Hausdorff dimension bound from a Schottky certificate.
    Hausdorff {
        #[arg(long)]
        cert: PathBuf,
    },
    /// Exact search for a relation between the generators.
    Oracle {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
    },
    /// Lyapunov exponent of the uniform walk on g1, g1^-1, g2, g2^-1.
    Lyapunov {
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, default_value_t = 400)]
        m: usize,
        #[arg(long, default_value_t = 32)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reduced length of uniform random words.
    Wordstats {
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Haar volume of a Cartan region.
    Volume {
        #[arg(long)]
        n: usize,
        #[arg(long = "logX", alias = "log-x")]
        log_x: f64,
        #[arg(long)]
        symmetrized: bool,
        /// Gap constraints `k:T,...` meaning `j_k - j_{k+1} >= T`.
        #[arg(long, value_parser = parse_gaps, default_value = "")]
        gaps: Gaps,
        #[arg(long, default_value_t = 512)]
        resolution: usize,
    },
    /// Run a Monte Carlo experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Report file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
    },
}

#[derive(Clone, Debug)]
struct Gaps(Vec<(usize, f64)>);

fn parse_gaps(s: &str) -> Result<Gaps, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, t) = part.split_once(':').ok_or_else(|| format!("expected k:T, got {part:?}"))?;
        let k = k.trim().parse().map_err(|e| format!("bad position {k:?}: {e}"))?;
        let t = t.trim().parse().map_err(|e| format!("bad threshold {t:?}: {e}"))?;
        out.push((k, t));
    }
    Ok(Gaps(out))
}

#[derive(Deserialize)]
struct PairFile {
    g1: IntMatrix,
    g2: IntMatrix,
}

/// A bare certificate or the output of `schottky`.
#[derive(Deserialize)]
#[serde(untagged)]
enum CertInput {
    Wrapped { certificate: SchottkyCertificate },
    Bare(SchottkyCertificate),
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> thinpair::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn print(value: &impl Serialize) -> thinpair::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cmd: Command) -> thinpair::Result<()> {
    match cmd {
        Command::Enumerate { n, x, symmetrized, out } => {
            let spec = BallSpec::new(n, x, symmetrized);
            let ball = load_or_enumerate(&spec, cache_dir_from_env().as_deref())?;
            if let Some(path) = &out {
                let io = |source| Error::Io {
                    path: path.clone(),
                    source,
                };
                let file = std::fs::File::create(path).map_err(io)?;
                let mut w = std::io::BufWriter::new(file);
                ball.write_jsonl(&mut w)?;
                std::io::Write::flush(&mut w).map_err(io)?;
            }
            print(&json!({ "n": n, "X": x, "symmetrized": symmetrized, "count": ball.count() }))
        }
        Command::Certify { pair, n, k, eps, r } => {
            let p: PairFile = read_json(&pair)?;
            let dim = p.g1.dim();
            if let Some(n) = n {
                if n != dim {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: dim,
                    });
                }
            }
            let k = k.unwrap_or_else(|| choose_k(dim));
            let r = r.unwrap_or(DEFAULT_R_FACTOR * eps);
            match ping_pong_check(&p.g1, &p.g2, k, r, eps)? {
                Ok(cert) => print(&json!({ "certified": true, "certificate": cert })),
                Err(refusal) => print(&json!({ "certified": false, "refusal": refusal })),
            }
        }
        Command::Schottky { pair } => {
            let p: PairFile = read_json(&pair)?;
            match schottky_check(&p.g1, &p.g2)? {
                Ok(cert) => print(&json!({ "certified": true, "certificate": cert })),
                Err(refusal) => print(&json!({ "certified": false, "refusal": refusal })),
            }
        }
        Command::Hausdorff { cert } => {
            let cert = match read_json::<CertInput>(&cert)? {
                CertInput::Wrapped { certificate } => certificate,
                CertInput::Bare(c) => c,
            };
            match hausdorff_upper_bound(&cert) {
                Some(b) => print(&json!({ "bound": b })),
                None => print(&json!({ "bound": null, "reason": "lambda >= 1: no bound" })),
            }
        }
        Command::Oracle { pair, max_len } => {
            let p: PairFile = read_json(&pair)?;
            let word = falsify_freeness(&p.g1, &p.g2, max_len)?;
            print(&json!({
                "max_len": max_len,
                "relation": word.as_ref().map(|w| w.to_string()),
                "length": word.as_ref().map(|w| w.len()),
            }))
        }
        Command::Lyapunov { pair, m, trials, seed } => {
            let p: PairFile = read_json(&pair)?;
            print(&estimate_lyapunov_pair(&p.g1, &p.g2, m, trials, seed)?)
        }
        Command::Wordstats { m, trials, seed } => print(&reduced_length_stats(m, trials, seed)?),
        Command::Volume {
            n,
            log_x,
            symmetrized,
            gaps,
            resolution,
        } => {
            let mut region = if symmetrized {
                CartanRegion::symmetrized(n, log_x)
            } else {
                CartanRegion::plain(n, log_x)
            };
            region.gap_constraints = gaps.0;
            print(&integrate_region(&region, resolution)?)
        }
        Command::Experiment { config, out, format } => {
            let cfg: ExperimentConfig = read_json(&config)?;
            let start = Instant::now();
            let report = run_experiment(&cfg)?;
            eprintln!(
                "experiment: {} radii in {:.2} s",
                report.rows.len(),
                start.elapsed().as_secs_f64()
            );
            match out {
                Some(path) => emit_report(&report, format, &path),
                None => write_report(&report, format, &mut std::io::stdout().lock()),
            }
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Budget(_) => 3,
        Error::Invariant(_) => 4,
        Error::Io { .. } => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
