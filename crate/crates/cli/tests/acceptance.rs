//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod oracle;

use std::f64::consts::SQRT_2;
use std::process::Command;
use std::time::{Duration, Instant};

use onebit_mac_core::info::i_lambda;
use onebit_mac_core::region::{trace_boundary, Corner, RegionPoint};
use onebit_mac_core::solver::{alternate_maximize, cardinality_cap, verify_input};
use onebit_mac_core::{ChannelParams, MassPointDistribution, PowerBudget, ProductInput, SolveResult, SolverConfig};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_onebit-mac");

fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

fn hb(t: f64) -> f64 {
    -t * t.log2() - (1.0 - t) * (1.0 - t).log2()
}

/// `1 - h_b(Q(√2))`, evaluated independently of the library.
fn benchmark() -> f64 {
    1.0 - hb(q(SQRT_2))
}

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn run_cli(args: &[&str]) -> (i32, String, Duration) {
    let t = Instant::now();
    let out = Command::new(BIN).args(args).output().expect("spawning the CLI");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned(), t.elapsed())
}

fn num(v: &Value, path: &[&str]) -> f64 {
    path.iter().fold(v, |v, k| &v[*k]).as_f64().unwrap_or(f64::NAN)
}

fn single_user() -> Verdict {
    let (code, out, dt) = run_cli(&["solve", "--lambda", "1", "--p1", "2", "--p2", "0"]);
    let Ok(v) = serde_json::from_str::<Value>(&out) else {
        return verdict(false, format!("exit {code}, unparsable output"));
    };
    let value = num(&v, &["value"]);
    let pts: Vec<f64> = v["input"]["f1"]["points"].as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default();
    let wts: Vec<f64> = v["input"]["f1"]["weights"].as_array().map(|a| a.iter().filter_map(Value::as_f64).collect()).unwrap_or_default();
    let err = (value - benchmark()).abs();
    let shape = pts.len() == 2
        && (pts[0] + SQRT_2).abs() <= 1e-2
        && (pts[1] - SQRT_2).abs() <= 1e-2
        && wts.iter().all(|w| (w - 0.5).abs() <= 1e-3);
    verdict(
        code == 0 && err <= 1e-4 && shape && dt < Duration::from_secs(10),
        format!("value {value:.12} vs {:.12} (error {err:.1e}), atoms {pts:?}, weights {wts:?}, {dt:.2?}", benchmark()),
    )
}

fn product_gap() -> Verdict {
    let (c_fine, fine, dt) = run_cli(&["remark2"]);
    let (c_coarse, coarse, _) = run_cli(&["remark2", "--grid-n", "11"]);
    let (Ok(f), Ok(c)) = (serde_json::from_str::<Value>(&fine), serde_json::from_str::<Value>(&coarse)) else {
        return verdict(false, "unparsable output");
    };
    let levy = num(&f, &["min_levy_distance"]);
    let (max_f, max_c) = (num(&f, &["max_sum_rate"]), num(&c, &["max_sum_rate"]));
    let gap = num(&f, &["gap"]);
    let bench = num(&f, &["benchmark"]);
    let construction = num(&f, &["construction_sum_rate"]);
    let a = (levy - 3.0 / 16.0).abs() <= 1e-9;
    let b = max_f < bench && gap > 0.0 && (max_f - max_c).abs() < 1e-6 && (num(&c, &["gap"]) - gap).abs() < 1e-6;
    let c_ok = (construction - benchmark()).abs() <= 1e-9 && (bench - benchmark()).abs() <= 1e-9;
    verdict(
        c_fine == 0 && c_coarse == 0 && a && b && c_ok && dt < Duration::from_secs(30),
        format!(
            "Levy {levy} (a {a}), max {max_f:.12} gap {gap:.6} grid 11 vs 101 diff {:.1e} (b {b}), construction {construction:.12} (c {c_ok}), {dt:.2?}",
            (max_f - max_c).abs()
        ),
    )
}

const SWEEP: [f64; 7] = [0.25, 0.5, 0.75, 1.0, 4.0 / 3.0, 2.0, 4.0];

fn sweep() -> (Vec<SolveResult>, Duration) {
    let t = Instant::now();
    let budget = PowerBudget::new(1.0, 1.0).unwrap();
    let cfg = SolverConfig::default();
    let results = SWEEP
        .iter()
        .map(|&l| alternate_maximize(l, budget, ChannelParams::default(), &cfg).expect("solver failed"))
        .collect();
    (results, t.elapsed())
}

fn caps(results: &[SolveResult], dt: Duration) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for r in results.iter().filter(|r| r.converged) {
        let (n1, n2) = cardinality_cap(r.lambda).unwrap();
        let (a1, a2) = (r.input.f1.len(), r.input.f2.len());
        ok &= a1 <= n1 && a2 <= n2;
        parts.push(format!("{:.3}: {a1}/{n1} {a2}/{n2}", r.lambda));
    }
    let converged = results.iter().filter(|r| r.converged).count();
    verdict(
        ok && converged > 0 && dt < Duration::from_secs(300),
        format!("{converged}/{} converged; atoms/cap {}; {dt:.2?}", results.len(), parts.join(", ")),
    )
}

fn shifted(d: &MassPointDistribution, k: usize, by: f64) -> MassPointDistribution {
    let mut pts = d.points().to_vec();
    pts[k] += by;
    MassPointDistribution::from_unnormalized(pts, d.weights().to_vec()).unwrap()
}

fn certification(results: &[SolveResult]) -> Verdict {
    let cfg = SolverConfig::default();
    let ch = ChannelParams::default();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut controls = 0;
    let mut flipped = 0;
    let mut theta1_zero = Vec::new();
    for r in results.iter().filter(|r| r.converged) {
        let k = &r.kkt;
        let slack = k.atom_slack_1.iter().chain(&k.atom_slack_2).fold(0.0f64, |m, s| m.max(s.abs()));
        worst = worst.max(k.max_grid_violation_1).max(k.max_grid_violation_2).max(slack);
        let lead_theta = if r.lambda <= 1.0 { k.theta1 } else { k.theta2 };
        ok &= k.passed && k.max_grid_violation_1 <= 1e-6 && k.max_grid_violation_2 <= 1e-6 && slack <= 1e-6;
        ok &= lead_theta.is_some_and(|t| t > 0.0);
        if !k.theta1.is_some_and(|t| t > 0.0) {
            theta1_zero.push(format!("{:.3}", r.lambda));
        }
        for user in 0..2 {
            let d = if user == 0 { &r.input.f1 } else { &r.input.f2 };
            for a in 0..d.len() {
                let input = if user == 0 {
                    ProductInput::new(shifted(d, a, 0.3), r.input.f2.clone())
                } else {
                    ProductInput::new(r.input.f1.clone(), shifted(d, a, 0.3))
                };
                controls += 1;
                if !verify_input(&input, r.lambda, r.budget, &cfg, ch).unwrap().passed {
                    flipped += 1;
                }
            }
        }
    }
    ok &= controls > 0 && flipped == controls;
    verdict(
        ok,
        format!(
            "max violation/slack {worst:.1e}; lead-user multiplier > 0 everywhere; user-1 multiplier zero at lambda {:?}; {flipped}/{controls} shifted atoms rejected",
            theta1_zero
        ),
    )
}

fn oracle_match() -> Verdict {
    let t = Instant::now();
    let ch = ChannelParams::default();
    let cfg = SolverConfig::default();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (p1, p2) in [(0.5, 0.5), (1.0, 1.0), (2.0, 1.0)] {
        for lambda in [0.5, 1.0, 2.0] {
            let b = 4f64.max(3.0 * (f64::sqrt(p1) + f64::sqrt(p2)));
            let o = oracle::grid_optimum(lambda, p1, p2, 0.0, b);
            let s = alternate_maximize(lambda, PowerBudget::new(p1, p2).unwrap(), ch, &cfg).expect("solver failed");
            // Rates recomputed by the library must agree with the solver's value.
            let direct = i_lambda(&s.input, lambda, ch).unwrap();
            worst = worst.max((s.value - o).abs()).max((direct - s.value).abs());
            parts.push(format!("({p1},{p2},{lambda}) {:+.1e}", s.value - o));
        }
    }
    let dt = t.elapsed();
    verdict(
        worst <= 2e-3 && dt < Duration::from_secs(900),
        format!("max |solver - oracle| {worst:.1e}; {}; {dt:.2?}", parts.join(", ")),
    )
}

fn property_suites() -> Verdict {
    let (code, out, dt) = run_cli(&["selftest"]);
    let checks = out.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count();
    let failed: Vec<&str> = out.lines().filter(|l| l.starts_with("FAIL")).collect();
    verdict(
        code == 0 && checks > 0 && failed.is_empty() && dt < Duration::from_secs(60),
        format!("{}/{checks} checks passed, {dt:.2?}", checks - failed.len()),
    )
}

fn region() -> Verdict {
    let t = Instant::now();
    let cfg = SolverConfig { multistarts: 4, ..SolverConfig::default() };
    let lambdas = [0.25, 0.5, 1.0, 2.0, 4.0];
    let points = trace_boundary(&lambdas, PowerBudget::new(1.0, 1.0).unwrap(), ChannelParams::default(), &cfg)
        .expect("trace failed");
    let mut pairs: Vec<(f64, f64)> = points.iter().map(|p| p.corner).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
    let mut chord_worst = f64::NEG_INFINITY;
    for w in pairs.windows(3) {
        let (p, m, r) = (w[0], w[1], w[2]);
        if r.0 - p.0 > 1e-9 {
            let chord = p.1 + (r.1 - p.1) * (m.0 - p.0) / (r.0 - p.0);
            chord_worst = chord_worst.max(chord - m.1);
        }
    }
    let mirror = |p: &RegionPoint| {
        let kind = if p.kind == Corner::A { Corner::B } else { Corner::A };
        points.iter().find(|o| (o.lambda * p.lambda - 1.0).abs() < 1e-12 && o.kind == kind)
    };
    let mut sym_worst: f64 = 0.0;
    let mut sym_ok = true;
    for p in &points {
        match mirror(p) {
            Some(o) => sym_worst = sym_worst.max((p.corner.0 - o.corner.1).abs()).max((p.corner.1 - o.corner.0).abs()),
            None => sym_ok = false,
        }
    }
    let max_atoms = points.iter().map(|p| p.solution.atoms.len()).max().unwrap_or(0);
    let certified = points.iter().filter(|p| p.kkt_passed).count();
    let dt = t.elapsed();
    verdict(
        chord_worst <= 1e-6 && sym_ok && sym_worst <= 1e-4 && (1..=5).contains(&max_atoms),
        format!(
            "{} points, chord excess {chord_worst:.1e}, swap asymmetry {sym_worst:.1e}, max atoms {max_atoms}, {certified} fully certified, {dt:.2?}",
            points.len()
        ),
    )
}

fn main() {
    // The harness passes flags such as --list; this target has no cases to list.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failures = 0;
    let mut report = |id: u32, name: &str, v: Verdict| {
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("criterion {id} {name}: {tag} ({})", v.detail);
        if !v.passed {
            failures += 1;
        }
    };
    report(1, "single-user reduction", single_user());
    report(2, "product inputs vs time sharing", product_gap());
    let (results, dt) = sweep();
    report(3, "cardinality caps", caps(&results, dt));
    report(4, "KKT certification", certification(&results));
    report(5, "grid oracle equivalence", oracle_match());
    report(6, "property suites", property_suites());
    report(7, "region sanity", region());
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
