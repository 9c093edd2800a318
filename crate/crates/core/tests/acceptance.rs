//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always print. Exits non-zero
//! if a criterion fails, except for those listed in `KNOWN_UNATTAINABLE`,
//! which are still evaluated at full strictness and reported as FAIL.

use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;

use thinpair::certify::{choose_k, empirical_contraction, epsilon_contracting, hausdorff_bound_from_circles, Circle};
use thinpair::dynamics::{
    check_twoops, estimate_lyapunov, exact_mean_reduced_ratio, falsify_freeness, reduced_length_stats, TwoOpsStatus,
};
use thinpair::harness::{report_to_string, run_experiment_with_cache, ExperimentConfig, ExperimentReport, ReportFormat};
use thinpair::sampler::{enumerate_ball, enumerate_ball_naive, BallSpec};
use thinpair::wedge::{wedge_matrix, ProjElement, WedgeVector};
use thinpair::{gap_fraction, integrate_region, rng, svd, CartanRegion, GroupWord, IntMatrix, Letter};

/// Criteria whose stated bound is contradicted by an exact computation.
const KNOWN_UNATTAINABLE: &[u32] = &[7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn m(rows: &[&[i64]]) -> IntMatrix {
    IntMatrix::from_rows(rows).unwrap()
}

fn n2_config(grid: &[f64], pairs: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        n: 2,
        x_grid: grid.to_vec(),
        symmetrized: true,
        pairs_per_x: pairs,
        eps: 0.2,
        r: 0.5,
        eta: 5.0,
        oracle_depth: 8,
        seed,
        lyapunov_m: 200,
        lyapunov_trials: 8,
    }
}

fn n3_config() -> ExperimentConfig {
    ExperimentConfig {
        n: 3,
        x_grid: vec![2.0, 3.0, 4.0],
        symmetrized: true,
        pairs_per_x: 400,
        eps: 0.2,
        r: 0.5,
        eta: 2f64.sqrt(),
        oracle_depth: 8,
        seed: 11,
        lyapunov_m: 200,
        lyapunov_trials: 8,
    }
}

struct Suite {
    schottky: ExperimentReport,
    lyapunov: ExperimentReport,
    n3: ExperimentReport,
}

fn run_suite() -> Suite {
    Suite {
        schottky: run_experiment_with_cache(&n2_config(&[20.0, 60.0, 180.0], 1000, 7), None).unwrap(),
        lyapunov: run_experiment_with_cache(&n2_config(&[5.0, 20.0, 100.0], 50, 3), None).unwrap(),
        n3: run_experiment_with_cache(&n3_config(), None).unwrap(),
    }
}

fn c1() -> Outcome {
    let unit = enumerate_ball(&BallSpec::new(2, 1.0, false)).unwrap().count();
    let mut agree = true;
    for x in [1.0, 1.5, 2.0, 2.9, 3.0, 4.2, 5.0] {
        let spec = BallSpec::new(2, x, false);
        agree &= enumerate_ball(&spec).unwrap() == enumerate_ball_naive(&spec).unwrap();
    }
    let c50 = enumerate_ball(&BallSpec::new(2, 50.0, false)).unwrap().count();
    let c100 = enumerate_ball(&BallSpec::new(2, 100.0, false)).unwrap().count();
    let ratio = c100 as f64 / c50 as f64;
    outcome(
        unit == 4 && agree && (3.4..=4.6).contains(&ratio),
        format!("|B_1| = {unit}, naive agreement {agree}, |B_100|/|B_50| = {c100}/{c50} = {ratio:.4}"),
    )
}

fn random_points(n: usize, k: usize, count: usize, rng: &mut impl Rng) -> Vec<ProjElement> {
    let dim = thinpair::wedge::binomial(n, k);
    (0..count)
        .map(|_| {
            let c: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            ProjElement::point(WedgeVector::new(n, k, DVector::from_vec(c)).unwrap())
        })
        .collect()
}

/// Random element of `SL_n(Z)` as a product of elementary matrices.
fn random_sl(n: usize, factors: usize, rng: &mut impl Rng) -> IntMatrix {
    let mut g = IntMatrix::identity(n);
    for _ in 0..factors {
        let i = rng.random_range(0..n as u64) as usize;
        let mut j = rng.random_range(0..n as u64 - 1) as usize;
        if j >= i {
            j += 1;
        }
        let t = rng.random_range(-2..=2i64);
        let mut e = vec![0i64; n * n];
        for d in 0..n {
            e[d * n + d] = 1;
        }
        e[i * n + j] = t;
        g = &g * &IntMatrix::from_i64(n, &e);
    }
    g
}

fn c2() -> Outcome {
    let eps = 0.2;
    let mut r = rng::seeded(2);
    let mut candidates: Vec<IntMatrix> = Vec::new();
    let ball = enumerate_ball(&BallSpec::new(2, 40.0, true)).unwrap();
    for _ in 0..200 {
        candidates.push(ball.member(r.random_range(0..ball.count() as u64) as usize));
    }
    // balls in SL_3 within budget are too small for an eps^2 gap
    for n in [3, 4] {
        candidates.extend((0..600).map(|_| random_sl(n, 20, &mut r)));
    }
    let mut witnesses = Vec::new();
    let mut per_n = [0usize; 5];
    for g in &candidates {
        let n = g.dim();
        if per_n[n] >= 34 {
            continue;
        }
        let k = choose_k(n);
        if let Some(w) = epsilon_contracting(g, k, eps).unwrap() {
            per_n[n] += 1;
            witnesses.push((g.clone(), w));
        }
    }
    witnesses.truncate(100);
    let mut violations = 0;
    for (g, w) in &witnesses {
        let pts = random_points(g.dim(), w.k, 1000, &mut r);
        let action = wedge_matrix(g, w.k);
        for p in &pts {
            if !empirical_contraction(&action, &w.v, &w.h, eps, std::slice::from_ref(p), 1e-9) {
                violations += 1;
            }
        }
    }
    outcome(
        witnesses.len() == 100 && violations == 0,
        format!(
            "{} witnesses (n=2: {}, n=3: {}, n=4: {}), {} test points, {violations} violations",
            witnesses.len(),
            per_n[2],
            per_n[3],
            per_n[4],
            witnesses.len() * 1000
        ),
    )
}

fn unit(theta: f64) -> DVector<f64> {
    DVector::from_vec(vec![theta.cos(), theta.sin()])
}

/// Whether `g` maps every grid point at distance >= eps from the line with
/// normal angle `h` into the eps-ball around the direction angle `v`.
fn grid_contracting(g: &nalgebra::DMatrix<f64>, v: f64, h: f64, eps: f64, grid: usize) -> bool {
    let vp = unit(v);
    let hn = unit(h);
    (0..grid).all(|i| {
        let x = unit(std::f64::consts::PI * i as f64 / grid as f64);
        if x.dot(&hn).abs() < eps {
            return true;
        }
        let y = (g * &x).normalize();
        let cos = y.dot(&vp).abs().min(1.0);
        (1.0 - cos * cos).sqrt() <= eps
    })
}

fn c3() -> Outcome {
    let ball = enumerate_ball(&BallSpec::new(2, 12.0, false)).unwrap();
    let epsilons = [0.05, 0.1, 0.15, 0.2, 0.24];
    let mut verified = 0;
    let mut strict = 0;
    let mut worst = 0.0f64;
    let mut bad = 0;
    for g in ball.members() {
        let s = svd(&g).unwrap();
        let gap = s.sigma[1] / s.sigma[0];
        let gf = g.to_f64();
        let u = s.top_left();
        let vr = s.top_right();
        let v_angle = u[1].atan2(u[0]);
        let h_angle = vr[1].atan2(vr[0]);
        for &eps in &epsilons {
            if grid_contracting(&gf, v_angle, h_angle, eps, 2000) {
                verified += 1;
                strict += usize::from(gap > eps * eps);
                worst = worst.max(gap / (4.0 * eps * eps));
                if gap > 4.0 * eps * eps + 1e-8 {
                    bad += 1;
                }
            }
        }
    }
    // free choice of attractor and repeller on a coarse grid for a few shears
    let mut searched = 0;
    for t in [3i64, 5, 8, 13, 21] {
        let g = m(&[&[1, t], &[0, 1]]);
        let s = svd(&g).unwrap();
        let gap = s.sigma[1] / s.sigma[0];
        let gf = g.to_f64();
        for &eps in &[0.1, 0.2] {
            let steps = 90;
            let found = (0..steps).any(|a| {
                (0..steps).any(|b| {
                    let va = std::f64::consts::PI * a as f64 / steps as f64;
                    let hb = std::f64::consts::PI * b as f64 / steps as f64;
                    grid_contracting(&gf, va, hb, eps, 400)
                })
            });
            if found {
                searched += 1;
                if gap > 4.0 * eps * eps + 1e-8 {
                    bad += 1;
                }
            }
        }
    }
    outcome(
        verified > 0 && bad == 0,
        format!(
            "{verified} grid-verified (g, eps) cases from B_12 ({strict} with a2/a1 > eps^2), \
             {searched} via free (v, H) search; max (a2/a1)/(4 eps^2) = {worst:.4}; {bad} violations"
        ),
    )
}

fn c4(suite: &Suite) -> Outcome {
    let falsified: usize = [&suite.schottky, &suite.lyapunov, &suite.n3]
        .iter()
        .flat_map(|r| r.rows.iter())
        .map(|row| row.oracle_falsifications)
        .sum();
    let tested: usize = [&suite.schottky, &suite.lyapunov, &suite.n3]
        .iter()
        .flat_map(|r| r.rows.iter())
        .map(|row| row.oracle_tested)
        .sum();
    let rot = falsify_freeness(&m(&[&[0, -1], &[1, 0]]), &m(&[&[1, 1], &[0, 1]]), 8).unwrap();
    let sanov = falsify_freeness(&m(&[&[1, 2], &[0, 1]]), &m(&[&[1, 0], &[2, 1]]), 12).unwrap();
    let rot_len = rot.as_ref().map(|w| w.len());
    outcome(
        falsified == 0 && rot_len == Some(4) && sanov.is_none(),
        format!(
            "{tested} certified pairs tested at depth 8, {falsified} relations; rotation relation {}; Sanov pair {}",
            rot.map(|w| w.to_string()).unwrap_or_else(|| "none".into()),
            if sanov.is_none() { "free to depth 12" } else { "FALSIFIED" }
        ),
    )
}

fn c5(suite: &Suite, secs: f64) -> Outcome {
    let f: Vec<f64> = suite.schottky.rows.iter().map(|r| r.frac_schottky.unwrap()).collect();
    outcome(
        f[2] > f[1] && f[1] > f[0] && f[2] >= 0.5 && secs < 600.0,
        format!("frac_schottky at X = 20, 60, 180: {:.3}, {:.3}, {:.3} ({secs:.1} s)", f[0], f[1], f[2]),
    )
}

fn c6(suite: &Suite) -> Outcome {
    let med: Vec<Option<f64>> = suite.schottky.rows.iter().map(|r| r.median_hausdorff_bound).collect();
    let circles: Vec<Circle> = (0..4)
        .map(|i| Circle {
            center: 2.0 * i as f64,
            radius: 0.01,
        })
        .collect();
    let hand = hausdorff_bound_from_circles(&circles).unwrap();
    let trend = matches!((med[0], med[2]), (Some(a), Some(b)) if b < a);
    outcome(
        trend && (hand - 0.1037).abs() <= 1e-3,
        format!("median bound X=20: {:?}, X=180: {:?}; hand fixture {hand:.5}", med[0], med[2]),
    )
}

fn c7() -> Outcome {
    let start = Instant::now();
    let eta: f64 = 5.0;
    let f = gap_fraction(&CartanRegion::plain(3, 14.0), &[(1, 2.0 * eta.ln())], 512).unwrap();
    let bound = eta.powi(-4);
    let secs = start.elapsed().as_secs_f64();
    outcome(
        f > 0.0 && f < bound && secs < 120.0,
        format!(
            "gap fraction {f:.7} vs bound {bound} ({secs:.1} s); exact limit 2 eta^-4 - eta^-8 = {:.7}",
            2.0 * eta.powi(-4) - eta.powi(-8)
        ),
    )
}

fn c8() -> Outcome {
    let t = 2.0 * 5f64.ln();
    let at = |l: f64| gap_fraction(&CartanRegion::symmetrized(3, l), &[(1, t), (2, t)], 512).unwrap();
    let (lo, hi) = (at(4.0), at(14.0));
    outcome(hi > 0.9 && 0.9 > lo, format!("symmetrized middle-gap fraction logX=4: {lo:.5}, logX=14: {hi:.5}"))
}

fn c9() -> Outcome {
    let mut worst = 0.0f64;
    for l in [1.0f64, 3.0, 5.0] {
        let want = ((2.0 * l).cosh() - 1.0) / 2.0;
        let got = integrate_region(&CartanRegion::plain(2, l), 512).unwrap().value;
        worst = worst.max((got - want).abs() / want);
    }
    outcome(worst < 1e-6, format!("max relative error {worst:.2e}"))
}

fn c10(suite: &Suite) -> Outcome {
    let means: Vec<f64> = suite.lyapunov.rows.iter().map(|r| r.lyapunov_mean.unwrap()).collect();
    let fib = m(&[&[2, 1], &[1, 1]]);
    let cal = estimate_lyapunov(&[fib], &[1.0], 400, 4, 1).unwrap().mean;
    let phi2 = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    let rel = (cal - phi2).abs() / phi2;
    outcome(
        means.windows(2).all(|w| w[1] > w[0]) && rel < 0.01,
        format!(
            "mean exponent at R = 5, 20, 100: {:.4}, {:.4}, {:.4}; calibration {cal:.5} vs log phi^2 = {phi2:.5}",
            means[0], means[1], means[2]
        ),
    )
}

fn all_reduced_words(max_len: usize) -> Vec<GroupWord> {
    let mut out = vec![GroupWord::empty()];
    let mut frontier = vec![Vec::<Letter>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for l in Letter::ALL {
                if w.last().is_some_and(|&p| p == l.inverse()) {
                    continue;
                }
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned().map(GroupWord::new));
        frontier = next;
    }
    out
}

fn c11() -> Outcome {
    let fib = m(&[&[2, 1], &[1, 1]]);
    let other = m(&[&[1, 1], &[1, 2]]);
    let shear = m(&[&[1, 0], &[3, 1]]);
    let pairs = [
        (fib.pow(8), fib.pow(8)),
        (fib.pow(6), other.pow(6)),
        (fib.pow(8), other.pow(5)),
        (fib.pow(5), (&shear * &fib).pow(4)),
        (m(&[&[34, 21], &[21, 13]]), m(&[&[34, -21], &[-21, 13]])),
    ];
    let words = all_reduced_words(6);
    let (mut pass, mut fail, mut unmet) = (0, 0, 0);
    for (a, b) in &pairs {
        let lambda = thinpair::spectral_norm(a).min(thinpair::spectral_norm(b)) * 0.9;
        for eps in [0.1, 0.3, 0.5] {
            for w in &words {
                match check_twoops(a, b, w, eps, lambda).unwrap().status {
                    TwoOpsStatus::Pass => pass += 1,
                    TwoOpsStatus::Fail => fail += 1,
                    TwoOpsStatus::PreconditionsUnmet => unmet += 1,
                }
            }
        }
    }
    // the adversarial fixture must be refused, not failed
    let a = fib.pow(8);
    let adversarial = check_twoops(&a, &a.inverse().unwrap(), &"b".parse().unwrap(), 0.5, 10.0).unwrap();
    outcome(
        fail == 0 && pass > 0 && adversarial.status == TwoOpsStatus::PreconditionsUnmet,
        format!(
            "{pass} pass, {fail} fail, {unmet} preconditions unmet; adversarial fixture: {}",
            adversarial.status
        ),
    )
}

fn c12() -> Outcome {
    let exact2 = exact_mean_reduced_ratio(2);
    let s = reduced_length_stats(200, 10_000, 12).unwrap();
    let mut r = rng::seeded(12);
    // fraction at least m/4, counted directly on a fresh sample
    let long_enough = (0..10_000)
        .filter(|_| {
            let w = GroupWord::new((0..200).map(|_| Letter::ALL[r.random_range(0..4u64) as usize]).collect());
            w.reduced_len() * 4 >= 200
        })
        .count();
    let share = long_enough as f64 / 10_000.0;
    outcome(
        exact2 == 0.75 && s.q01 >= 0.25 && share >= 0.99,
        format!(
            "m=2 exact mean {exact2}; m=200: mean ratio {:.4} (claimed lower ratio 0.75 not observed), \
             1% quantile {:.3}, share >= m/4: {share:.4}",
            s.mean, s.q01
        ),
    )
}

fn c13(suite: &Suite) -> Outcome {
    let rerun = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(run_suite);
    let mut same = true;
    for (a, b) in [
        (&suite.schottky, &rerun.schottky),
        (&suite.lyapunov, &rerun.lyapunov),
        (&suite.n3, &rerun.n3),
    ] {
        for f in [ReportFormat::Json, ReportFormat::Csv] {
            same &= report_to_string(a, f).unwrap() == report_to_string(b, f).unwrap();
        }
    }
    outcome(same, "suite re-run on one thread: JSON and CSV reports byte-identical".to_string())
}

fn main() {
    // libtest-style flags are accepted and ignored
    let start = Instant::now();
    let suite = run_suite();
    let suite_secs = start.elapsed().as_secs_f64();

    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut record = |i: u32, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && KNOWN_UNATTAINABLE.contains(&i) {
            " [known unattainable]"
        } else {
            ""
        };
        println!("criterion {i:>2}: {tag}{note}  {}", o.detail);
        results.push((i, o));
    };
    record(1, c1());
    record(2, c2());
    record(3, c3());
    record(4, c4(&suite));
    record(5, c5(&suite, suite_secs));
    record(6, c6(&suite));
    record(7, c7());
    record(8, c8());
    record(9, c9());
    record(10, c10(&suite));
    record(11, c11());
    record(12, c12());
    record(13, c13(&suite));

    let n3 = suite
        .n3
        .rows
        .iter()
        .map(|r| format!("X={}: {:.3}", r.x, r.frac_gapped))
        .collect::<Vec<_>>()
        .join(", ");
    println!("note: n=3 symmetrized frac_gapped (eta^2 = 2): {n3}");

    let unexpected: Vec<u32> = results
        .iter()
        .filter(|(i, o)| !o.pass && !KNOWN_UNATTAINABLE.contains(i))
        .map(|(i, _)| *i)
        .collect();
    let passed = results.iter().filter(|(_, o)| o.pass).count();
    println!(
        "acceptance: {passed}/{} passed in {:.1} s",
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
