//! Subcommand handlers. Each returns the exit status on completion.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use onebit_mac_core::info::{i_lambda, rate_tuple};
use onebit_mac_core::region::{remark2_scan, trace_boundary, Corner, RegionPoint};
use onebit_mac_core::solver::{alternate_maximize, verify_input};
use onebit_mac_core::{
    Bits, ChannelParams, KktReport, MassPointDistribution, PowerBudget, ProductInput, RateTuple, SolverConfig,
};
use serde::Serialize;

use crate::args::{check_lambda, ChannelArgs, Remark2Args, SelftestArgs, SolveArgs, SolverArgs, TraceArgs, VerifyArgs};
use crate::exit::{DataError, Exit};
use crate::output::{emit, fmt_real, to_json};
use crate::selftest;

/// Slack allowed on the power constraint of a verified input.
const POWER_TOL: f64 = 1e-9;

fn channel(args: &ChannelArgs) -> Result<ChannelParams> {
    args.validate()?;
    Ok(ChannelParams::new(args.threshold)?)
}

fn solver_config(args: &SolverArgs) -> Result<SolverConfig> {
    args.validate()?;
    Ok(SolverConfig {
        multistarts: args.multistarts,
        rng_seed: args.seed,
        ..SolverConfig::default()
    })
}

fn verdict(passed: bool) -> Exit {
    if passed {
        Exit::Ok
    } else {
        Exit::Unverified
    }
}

pub fn solve(args: &SolveArgs) -> Result<Exit> {
    check_lambda("lambda", args.lambda)?;
    args.budget.validate()?;
    let ch = channel(&args.channel)?;
    let cfg = solver_config(&args.solver)?;
    let budget = PowerBudget::new(args.budget.p1, args.budget.p2)?;
    let result = alternate_maximize(args.lambda, budget, ch, &cfg).context("solver failed")?;
    if !result.kkt.passed {
        log::warn!("optimality certificate did not pass");
    }
    emit(&to_json(&result)?, args.out.as_deref())?;
    Ok(verdict(result.kkt.passed))
}

fn corner_label(kind: Corner) -> &'static str {
    match kind {
        Corner::A => "A",
        Corner::B => "B",
    }
}

fn region_csv(points: &[RegionPoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["lambda", "r1", "r2", "corner", "atoms", "kkt_passed"])?;
    for p in points {
        w.write_record([
            fmt_real(p.lambda),
            fmt_real(p.corner.0),
            fmt_real(p.corner.1),
            corner_label(p.kind).to_string(),
            p.solution.atoms.len().to_string(),
            p.kkt_passed.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().context("flushing CSV")?)?)
}

/// Two columns `r1 r2`, ordered along the boundary by increasing `r1`.
fn boundary_dat(points: &[RegionPoint]) -> String {
    let mut pairs: Vec<(f64, f64)> = points.iter().map(|p| p.corner).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut s = String::from("# r1 r2\n");
    for (r1, r2) in pairs {
        s.push_str(&format!("{} {}\n", fmt_real(r1), fmt_real(r2)));
    }
    s
}

pub fn trace(args: &TraceArgs) -> Result<Exit> {
    for &l in &args.lambdas {
        check_lambda("lambdas", l)?;
    }
    args.budget.validate()?;
    let ch = channel(&args.channel)?;
    let cfg = solver_config(&args.solver)?;
    let budget = PowerBudget::new(args.budget.p1, args.budget.p2)?;
    let points = trace_boundary(&args.lambdas, budget, ch, &cfg).context("tracing failed")?;
    let csv = region_csv(&points)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            emit(&csv, Some(&dir.join("region.csv")))?;
            emit(&to_json(&points)?, Some(&dir.join("region.json")))?;
            emit(&boundary_dat(&points), Some(&dir.join("boundary.dat")))?;
        }
        None => emit(&csv, None)?,
    }
    let failed = points.iter().filter(|p| !p.kkt_passed).count();
    if failed > 0 {
        log::warn!("{failed} of {} boundary points carry uncertified atoms", points.len());
    }
    Ok(verdict(failed == 0))
}

fn read_distribution(path: &Path) -> Result<MassPointDistribution> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| DataError(format!("{}: {e}", path.display())).into())
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    lambda: f64,
    budget: PowerBudget,
    input: ProductInput,
    powers: (f64, f64),
    power_feasible: bool,
    value: Bits,
    rates: RateTuple,
    kkt: KktReport,
    passed: bool,
}

pub fn verify(args: &VerifyArgs) -> Result<Exit> {
    check_lambda("lambda", args.lambda)?;
    args.budget.validate()?;
    let ch = channel(&args.channel)?;
    let input = ProductInput::new(read_distribution(&args.f1)?, read_distribution(&args.f2)?);
    let budget = PowerBudget::new(args.budget.p1, args.budget.p2)?;
    let powers = (input.f1.second_moment(), input.f2.second_moment());
    let power_feasible = powers.0 <= budget.p1 + POWER_TOL && powers.1 <= budget.p2 + POWER_TOL;
    if !power_feasible {
        log::warn!("input powers {powers:?} exceed the budget ({}, {})", budget.p1, budget.p2);
    }
    let kkt = verify_input(&input, args.lambda, budget, &SolverConfig::default(), ch)?;
    let report = VerifyReport {
        lambda: args.lambda,
        budget,
        value: i_lambda(&input, args.lambda, ch)?,
        rates: rate_tuple(&input, ch),
        powers,
        power_feasible,
        passed: power_feasible && kkt.passed,
        kkt,
        input,
    };
    emit(&to_json(&report)?, args.out.as_deref())?;
    Ok(verdict(report.passed))
}

pub fn remark2(args: &Remark2Args) -> Result<Exit> {
    args.validate()?;
    let ch = ChannelParams::new(args.channel.threshold)?;
    let report = remark2_scan(args.grid_n, ch)?;
    emit(&to_json(&report)?, args.out.as_deref())?;
    Ok(Exit::Ok)
}

pub fn selftest(args: &SelftestArgs) -> Result<Exit> {
    let checks = selftest::run(args.inject_fault)?;
    let mut text = String::new();
    for c in &checks {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        text.push_str(&format!("{tag} {:<28} margin={:+.3e}  {}\n", c.name, c.margin, c.detail));
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    text.push_str(&format!(
        "{passed}/{} checks passed ({} instances each)\n",
        checks.len(),
        selftest::INSTANCES
    ));
    emit(&text, None)?;
    Ok(verdict(passed == checks.len()))
}
