//! Maximization of the weighted rate objective over product inputs.
//!
//! For a slope `λ` the solver alternates between the two input laws. Each
//! half-step is a concave maximization over one law; see [`side`] for how
//! it is carried out. Multistarts hedge against the joint problem being
//! nonconcave, and [`verify_kkt`] certifies the result independently.

mod alternate;
mod frame;
mod kkt;
mod polish;
mod side;
mod weights;

use serde::{Deserialize, Serialize};

use crate::dist::{MassPointDistribution, PowerBudget, DEFAULT_WEIGHT_FLOOR};
use crate::error::{domain, Result};
use crate::info::{check_lambda, ChannelParams, ProductInput, RateTuple};
use crate::scalar::{log2_gaussian_tail, Bits};

pub use alternate::alternate_maximize;
pub use kkt::{estimate_theta, verify_input, verify_kkt, ThetaEstimate};
pub use weights::WeightSolution;

use frame::Frame;
use side::SideContext;

/// One of the two transmitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum User {
    One,
    Two,
}

/// Tuning knobs of the solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Cap on alternations between the two laws per start.
    pub max_alternations: usize,
    /// Alternation stops once the objective changes by less than this.
    pub rate_tol: Bits,
    /// Number of starts; start 0 is deterministic.
    pub multistarts: usize,
    pub rng_seed: u64,
    /// Half-width of the certification grid; derived from the multiplier
    /// when absent.
    pub kkt_grid_halfwidth: Option<f64>,
    pub kkt_grid_step: f64,
    pub kkt_tol: Bits,
    pub weight_floor: f64,
    /// Merge radius; `1e-3 · max(1, √P)` per side when absent.
    pub merge_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_alternations: 500,
            rate_tol: 1e-9,
            multistarts: 16,
            rng_seed: 0,
            kkt_grid_halfwidth: None,
            kkt_grid_step: 1e-2,
            kkt_tol: 1e-6,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
            merge_tol: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rate_tol", self.rate_tol),
            ("kkt_grid_step", self.kkt_grid_step),
            ("kkt_tol", self.kkt_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain("SolverConfig", format!("{name} = {v} must be positive")));
            }
        }
        if self.multistarts == 0 || self.max_alternations == 0 {
            return Err(domain("SolverConfig", "multistarts and max_alternations must be >= 1"));
        }
        if !(self.weight_floor >= 0.0 && self.weight_floor < 1.0) {
            return Err(domain("SolverConfig", "weight_floor must lie in [0, 1)"));
        }
        if let Some(m) = self.merge_tol {
            if !(m.is_finite() && m >= 0.0) {
                return Err(domain("SolverConfig", "merge_tol must be >= 0"));
            }
        }
        if let Some(b) = self.kkt_grid_halfwidth {
            if !(b.is_finite() && b > 0.0) {
                return Err(domain("SolverConfig", "kkt_grid_halfwidth must be positive"));
            }
        }
        Ok(())
    }
}

/// First-order optimality certificate of a product input.
///
/// The multipliers are fitted from the input alone; `None` means the fit
/// is indeterminate (every atom at the origin). Violations and slacks are
/// measured in bits against the objective value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub theta_fit_residual_1: f64,
    pub theta_fit_residual_2: f64,
    pub max_grid_violation_1: f64,
    pub max_grid_violation_2: f64,
    pub atom_slack_1: Vec<f64>,
    pub atom_slack_2: Vec<f64>,
    pub grid_halfwidth_1: f64,
    pub grid_halfwidth_2: f64,
    /// Whether the density limits at `±∞` stay below the objective once
    /// the power penalty is included.
    pub tails_ok: bool,
    pub passed: bool,
}

/// Output of [`alternate_maximize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub input: ProductInput,
    pub lambda: f64,
    pub budget: PowerBudget,
    pub value: Bits,
    pub rates: RateTuple,
    pub kkt: KktReport,
    /// Whether alternation met `rate_tol` before `max_alternations`.
    pub converged: bool,
    /// Atom caps `(n1, n2)` for this slope.
    pub cap: (usize, usize),
    /// Slope `-1/λ` of the boundary tangent in the `(R1, R2)` plane.
    pub tangent_slope: f64,
    pub alternations: usize,
    pub start_index: usize,
}

/// Outcome of a single-side maximization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideOutcome {
    pub dist: MassPointDistribution,
    pub theta: f64,
    pub value: Bits,
}

/// Maximum numbers of atoms `(n1, n2)` of an optimal input for slope `λ`.
pub fn cardinality_cap(lambda: f64) -> Result<(usize, usize)> {
    check_lambda("cardinality_cap", lambda)?;
    Ok(if lambda < 1.0 {
        (5, 3)
    } else if lambda == 1.0 {
        (3, 3)
    } else {
        (3, 5)
    })
}

fn support_floor(budget: PowerBudget) -> f64 {
    4f64.max(3.0 * (budget.p1.sqrt() + budget.p2.sqrt()))
}

/// Upper bound on the density of the weighted objective far from the
/// origin, in objective units.
pub(crate) fn tail_constant(budget: PowerBudget, lambda: f64) -> f64 {
    let f = Frame::new(lambda);
    -(2.0 - f.mu) * f.scale * log2_gaussian_tail(budget.p1.sqrt() + budget.p2.sqrt())
}

/// Half-width `B` outside of which no optimal atom can lie when the power
/// multiplier is at least `theta_lower`.
///
/// Solves `L - θ(B² - P) ≤ 0` for the far-field density bound `L`, with a
/// floor of `max(4, 3(√P1 + √P2))`.
pub fn support_bound(budget: PowerBudget, lambda: f64, theta_lower: f64) -> Result<f64> {
    check_lambda("support_bound", lambda)?;
    if !(theta_lower.is_finite() && theta_lower > 0.0) {
        return Err(domain("support_bound", format!("theta_lower = {theta_lower} must be > 0")));
    }
    let floor = support_floor(budget);
    if budget.p1 == 0.0 && budget.p2 == 0.0 {
        return Ok(floor);
    }
    let p = budget.p1.max(budget.p2);
    Ok(floor.max((p + tail_constant(budget, lambda) / theta_lower).sqrt()))
}

/// Optimal weights of `side` on a fixed support, the other law held fixed.
pub fn optimize_weights(
    side: User,
    support: &[f64],
    other: &MassPointDistribution,
    lambda: f64,
    power: f64,
    ch: ChannelParams,
) -> Result<WeightSolution> {
    check_lambda("optimize_weights", lambda)?;
    check_power("optimize_weights", power)?;
    if support.iter().any(|x| !x.is_finite()) {
        return Err(domain("optimize_weights", "support points must be finite"));
    }
    let frame = Frame::new(lambda);
    let problem = frame.problem(frame.role(side), support, other, power, ch);
    weights::solve(&problem)
}

/// Best law of `side` given the other law.
pub fn optimize_side(
    side: User,
    other: &MassPointDistribution,
    lambda: f64,
    power: f64,
    ch: ChannelParams,
    cfg: &SolverConfig,
) -> Result<SideOutcome> {
    check_lambda("optimize_side", lambda)?;
    check_power("optimize_side", power)?;
    cfg.validate()?;
    let frame = Frame::new(lambda);
    let role = frame.role(side);
    let budget = match side {
        User::One => PowerBudget::new(power, other.second_moment())?,
        User::Two => PowerBudget::new(other.second_moment(), power)?,
    };
    let ctx = SideContext {
        frame: &frame,
        role,
        counterpart: other,
        power,
        ch,
        cfg,
        floor: support_floor(budget),
    };
    let sol = ctx.solve(&[])?;
    let input = match side {
        User::One => ProductInput::new(sol.dist.clone(), other.clone()),
        User::Two => ProductInput::new(other.clone(), sol.dist.clone()),
    };
    let value = crate::info::i_lambda(&input, lambda, ch)?;
    Ok(SideOutcome {
        dist: sol.dist,
        theta: sol.theta,
        value,
    })
}

fn check_power(op: &'static str, p: f64) -> Result<()> {
    if p.is_finite() && p >= 0.0 {
        Ok(())
    } else {
        Err(domain(op, format!("power {p} must be finite and >= 0")))
    }
}
