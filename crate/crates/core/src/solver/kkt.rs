//! Multiplier estimation and certification of first-order optimality.

use serde::{Deserialize, Serialize};

use crate::dist::{MassPointDistribution, PowerBudget};
use crate::error::Result;
use crate::info::{check_lambda, i_lambda, ChannelParams, ProductInput};

use super::frame::{Field, Frame, Role};
use super::side::MAX_RANGE;
use super::{support_bound, support_floor, KktReport, SolveResult, SolverConfig, User};

/// Fitted power multiplier of one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    /// `None` when the data cannot identify the multiplier.
    pub theta: Option<f64>,
    /// Largest absolute residual of the fitted optimality equations.
    pub residual: f64,
    /// Whether the side spends its whole budget.
    pub power_active: bool,
}

fn side_data<'a>(
    frame: &Frame,
    input: &'a ProductInput,
    budget: PowerBudget,
    user: User,
    ch: ChannelParams,
) -> (Field, &'a MassPointDistribution, f64) {
    let (lead, other) = frame.split(input);
    let role = frame.role(user);
    let field = frame.field_of(role, lead, other, ch);
    let dist = match role {
        Role::Lead => lead,
        Role::Other => other,
    };
    let power = match user {
        User::One => budget.p1,
        User::Two => budget.p2,
    };
    (field, dist, power)
}

fn fit(field: &Field, dist: &MassPointDistribution, power: f64) -> ThetaEstimate {
    let d: Vec<f64> = dist.points().iter().map(|&x| field.value(x)).collect();
    let s: Vec<f64> = dist.points().iter().map(|&x| field.slope(x)).collect();
    let xs = dist.points();
    let residual = |theta: f64, c: f64| {
        let value = xs.iter().zip(&d).map(|(x, d)| (d - c - theta * x * x).abs());
        let slope = xs.iter().zip(&s).map(|(x, s)| (s - 2.0 * theta * x).abs());
        value.chain(slope).fold(0.0, f64::max)
    };
    let mean_d = dist.weights().iter().zip(&d).map(|(w, d)| w * d).sum::<f64>();
    let active = dist.second_moment() >= power - 1e-6 * power.max(1.0);
    if !active {
        return ThetaEstimate {
            theta: Some(0.0),
            residual: residual(0.0, mean_d),
            power_active: false,
        };
    }
    if xs.iter().all(|&x| x == 0.0) {
        return ThetaEstimate {
            theta: None,
            residual: residual(0.0, mean_d),
            power_active: true,
        };
    }
    // Least squares in (θ, c) over rows [x², 1] = D and [2x, 0] = D'.
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&x, &dv), &sv) in xs.iter().zip(&d).zip(&s) {
        let x2 = x * x;
        a11 += x2 * x2 + 4.0 * x2;
        a12 += x2;
        a22 += 1.0;
        b1 += x2 * dv + 2.0 * x * sv;
        b2 += dv;
    }
    let det = a11 * a22 - a12 * a12;
    let (mut theta, mut c) = ((b1 * a22 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det);
    if !(theta >= 0.0) {
        theta = 0.0;
        c = b2 / a22;
    }
    ThetaEstimate {
        theta: Some(theta),
        residual: residual(theta, c),
        power_active: true,
    }
}

/// Fits the power multipliers `(θ1, θ2)` so that each side's density plus
/// `θ(P - x²)` is level and stationary across its atoms.
///
/// A side whose budget is slack gets `θ = 0` by complementary slackness.
pub fn estimate_theta(
    input: &ProductInput,
    lambda: f64,
    budget: PowerBudget,
    ch: ChannelParams,
) -> Result<(ThetaEstimate, ThetaEstimate)> {
    check_lambda("estimate_theta", lambda)?;
    let frame = Frame::new(lambda);
    let est = |user| {
        let (field, dist, power) = side_data(&frame, input, budget, user, ch);
        fit(&field, dist, power)
    };
    Ok((est(User::One), est(User::Two)))
}

struct SideCheck {
    violation: f64,
    slacks: Vec<f64>,
    halfwidth: f64,
    tails_ok: bool,
}

#[allow(clippy::too_many_arguments)]
fn check_side(
    frame: &Frame,
    input: &ProductInput,
    budget: PowerBudget,
    user: User,
    theta: f64,
    target: f64,
    cfg: &SolverConfig,
    ch: ChannelParams,
) -> SideCheck {
    let (field, dist, power) = side_data(frame, input, budget, user, ch);
    let g = |x: f64| field.value(x) + theta * (power - x * x) - target;
    let slacks: Vec<f64> = dist.points().iter().map(|&x| g(x)).collect();
    if power == 0.0 {
        // Only the unit mass at the origin is feasible.
        return SideCheck {
            violation: 0.0,
            slacks,
            halfwidth: 0.0,
            tails_ok: true,
        };
    }
    let (lead, other) = frame.split(input);
    let counterpart = if frame.role(user) == Role::Lead { other } else { lead };
    let halfwidth = cfg.kkt_grid_halfwidth.unwrap_or_else(|| {
        let base = support_floor(budget).max(counterpart.max_abs() + 6.0 + power.sqrt());
        let b = if theta > 0.0 {
            base.max(support_bound(budget, frame.lambda, theta).unwrap_or(base))
        } else {
            base
        };
        b.min(MAX_RANGE)
    });
    let n = (2.0 * halfwidth / cfg.kkt_grid_step).round() as usize;
    let grid = (0..=n).map(|i| -halfwidth + cfg.kkt_grid_step * i as f64);
    let violation = grid
        .map(g)
        .chain(slacks.iter().copied())
        .fold(0.0, f64::max);
    let (lo, hi) = field.tail_limits();
    let beyond = lo.max(hi) + theta * (power - halfwidth * halfwidth) - target;
    SideCheck {
        violation,
        slacks,
        halfwidth,
        tails_ok: beyond <= cfg.kkt_tol,
    }
}

/// Certifies a solution: for each side the density plus `θ(P - x²)` may
/// not exceed the objective anywhere on the grid, and must meet it at
/// every atom.
pub fn verify_kkt(result: &SolveResult, cfg: &SolverConfig, ch: ChannelParams) -> Result<KktReport> {
    verify_input(&result.input, result.lambda, result.budget, cfg, ch)
}

/// [`verify_kkt`] for an arbitrary product input.
pub fn verify_input(
    input: &ProductInput,
    lambda: f64,
    budget: PowerBudget,
    cfg: &SolverConfig,
    ch: ChannelParams,
) -> Result<KktReport> {
    check_lambda("verify_kkt", lambda)?;
    cfg.validate()?;
    let frame = Frame::new(lambda);
    let target = i_lambda(input, lambda, ch)?;
    let (t1, t2) = estimate_theta(input, lambda, budget, ch)?;
    let c1 = check_side(&frame, input, budget, User::One, t1.theta.unwrap_or(0.0), target, cfg, ch);
    let c2 = check_side(&frame, input, budget, User::Two, t2.theta.unwrap_or(0.0), target, cfg, ch);
    let tol = cfg.kkt_tol;
    let slack_ok = c1.slacks.iter().chain(&c2.slacks).all(|s| s.abs() <= tol);
    let passed = c1.violation <= tol && c2.violation <= tol && slack_ok && c1.tails_ok && c2.tails_ok;
    Ok(KktReport {
        theta1: t1.theta,
        theta2: t2.theta,
        theta_fit_residual_1: t1.residual,
        theta_fit_residual_2: t2.residual,
        max_grid_violation_1: c1.violation,
        max_grid_violation_2: c2.violation,
        atom_slack_1: c1.slacks,
        atom_slack_2: c2.slacks,
        grid_halfwidth_1: c1.halfwidth,
        grid_halfwidth_2: c2.halfwidth,
        tails_ok: c1.tails_ok && c2.tails_ok,
        passed,
    })
}
