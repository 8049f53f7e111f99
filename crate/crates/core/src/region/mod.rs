//! Power-allocation envelope and boundary tracing.
//!
//! For a slope `λ` the best single-letter value `g_λ(p1, p2)` is tabulated
//! over a power grid. Time sharing over an auxiliary variable `U` then
//! amounts to the upper concave envelope of the table at the budget, a
//! three-row linear program whose basic solutions use at most three cells.

mod envelope;
mod remark2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::PowerBudget;
use crate::error::{domain, Error, Result};
use crate::info::{check_lambda, i_lambda_of, rate_tuple, ChannelParams, ProductInput, RateTuple};
use crate::scalar::{Bits, Prob};
use crate::solver::{alternate_maximize, SolveResult, SolverConfig};

pub use remark2::{remark2_scan, Remark2Report};

/// Points per power axis of the default grid.
pub const GRID_POINTS: usize = 17;

/// One cell of a power table: the best product input at powers `(p1, p2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub p1: f64,
    pub p2: f64,
    /// `None` when the solver failed on this cell; see `failure`.
    pub result: Option<SolveResult>,
    pub failure: Option<String>,
}

impl GridCell {
    pub fn value(&self) -> Option<Bits> {
        self.result.as_ref().map(|r| r.value)
    }
}

/// One atom of the time-sharing variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeShareAtom {
    pub prob: Prob,
    pub input: ProductInput,
    pub rates: RateTuple,
    pub powers: (f64, f64),
    pub kkt_passed: bool,
}

/// A law of `U` with one product input per atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSharedSolution {
    pub lambda: f64,
    pub atoms: Vec<TimeShareAtom>,
}

impl TimeSharedSolution {
    /// `Σ p_u I_λ(u)`.
    pub fn value(&self) -> Bits {
        self.atoms.iter().map(|a| a.prob.get() * i_lambda_of(&a.rates, self.lambda)).sum()
    }

    /// Average powers `Σ p_u (p1_u, p2_u)`.
    pub fn mean_powers(&self) -> (f64, f64) {
        self.atoms.iter().fold((0.0, 0.0), |(a, b), u| {
            (a + u.prob.get() * u.powers.0, b + u.prob.get() * u.powers.1)
        })
    }

    /// `Σ p_u I(X1, X2; Y | U = u)`.
    pub fn sum_rate(&self) -> Bits {
        self.atoms.iter().map(|a| a.prob.get() * a.rates.sum).sum()
    }

    pub fn kkt_passed(&self) -> bool {
        self.atoms.iter().all(|a| a.kkt_passed)
    }
}

/// Which corner of the pentagon a boundary point is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Corner {
    /// `(I(X1;Y|X2,U), I(X2;Y|U))`: user 2 decoded first.
    A,
    /// `(I(X1;Y|U), I(X2;Y|X1,U))`: user 1 decoded first.
    B,
}

/// A rate pair `(R1, R2)` in bits.
pub type RatePair = (Bits, Bits);

/// One traced boundary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub lambda: f64,
    pub corner: RatePair,
    pub kind: Corner,
    /// Both pentagon corners of `solution`.
    pub pentagon: (RatePair, RatePair),
    pub solution: TimeSharedSolution,
    pub kkt_passed: bool,
}

/// Geometric power axis `{0} ∪ {2P·2^{-k/4} : k = 0..n-2}`, ascending.
pub fn power_axis(p: f64, n: usize) -> Result<Vec<f64>> {
    if !(p.is_finite() && p >= 0.0) {
        return Err(domain("power_axis", format!("power {p} must be finite and >= 0")));
    }
    if n < 2 {
        return Err(domain("power_axis", "at least two points are needed"));
    }
    if p == 0.0 {
        return Ok(vec![0.0]);
    }
    let mut axis: Vec<f64> = (0..n - 1).map(|k| 2.0 * p * 2f64.powf(-(k as f64) / 4.0)).collect();
    axis.push(0.0);
    axis.reverse();
    Ok(axis)
}

/// The default table grid for `budget`: the product of the two axes.
pub fn power_grid(budget: PowerBudget) -> Result<Vec<(f64, f64)>> {
    let a1 = power_axis(budget.p1, GRID_POINTS)?;
    let a2 = power_axis(budget.p2, GRID_POINTS)?;
    Ok(a1.iter().flat_map(|&p1| a2.iter().map(move |&p2| (p1, p2))).collect())
}

/// Tabulates `g_λ` over `grid`. Cells are solved independently; a failed
/// cell is recorded, not propagated.
pub fn solve_power_grid(
    lambda: f64,
    grid: &[(f64, f64)],
    ch: ChannelParams,
    cfg: &SolverConfig,
) -> Result<Vec<GridCell>> {
    check_lambda("solve_power_grid", lambda)?;
    cfg.validate()?;
    let budgets = grid
        .iter()
        .map(|&(p1, p2)| PowerBudget::new(p1, p2))
        .collect::<Result<Vec<_>>>()?;
    Ok(budgets
        .into_par_iter()
        .map(|b| match alternate_maximize(lambda, b, ch, cfg) {
            Ok(r) => GridCell {
                p1: b.p1,
                p2: b.p2,
                result: Some(r),
                failure: None,
            },
            Err(e) => {
                log::warn!("cell ({}, {}) failed: {e}", b.p1, b.p2);
                GridCell {
                    p1: b.p1,
                    p2: b.p2,
                    result: None,
                    failure: Some(e.to_string()),
                }
            }
        })
        .collect())
}

/// Upper concave envelope of the table at `budget`: the best mixture of
/// cells whose average powers fit the budget.
pub fn concave_envelope(table: &[GridCell], budget: PowerBudget) -> Result<TimeSharedSolution> {
    let cells: Vec<&SolveResult> = table.iter().filter_map(|c| c.result.as_ref()).collect();
    if cells.is_empty() {
        return Err(Error::Infeasible("no solved cells in the power table".into()));
    }
    let lambda = cells[0].lambda;
    if cells.iter().any(|c| c.lambda != lambda) {
        return Err(domain("concave_envelope", "table mixes different slopes"));
    }
    let g: Vec<f64> = cells.iter().map(|c| c.value).collect();
    let a: Vec<f64> = cells.iter().map(|c| c.budget.p1).collect();
    let b: Vec<f64> = cells.iter().map(|c| c.budget.p2).collect();
    let basis = envelope::allocate(&g, &a, &b, budget.p1, budget.p2)?;
    let atoms = basis
        .into_iter()
        .map(|(k, w)| {
            let c = cells[k];
            Ok(TimeShareAtom {
                prob: Prob::new(w.min(1.0))?,
                input: c.input.clone(),
                rates: c.rates,
                powers: (c.budget.p1, c.budget.p2),
                kkt_passed: c.kkt.passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSharedSolution { lambda, atoms })
}

/// Both corners of the pentagon achieved by `sol`: `A` decodes user 2
/// first, `B` decodes user 1 first.
pub fn pentagon_corners(sol: &TimeSharedSolution) -> (RatePair, RatePair) {
    let mut a = (0.0, 0.0);
    let mut b = (0.0, 0.0);
    for u in &sol.atoms {
        let p = u.prob.get();
        a.0 += p * u.rates.r1_given_2;
        a.1 += p * u.rates.r2;
        b.0 += p * u.rates.r1;
        b.1 += p * u.rates.r2_given_1;
    }
    (a, b)
}

/// Traces the boundary for each slope in `lambdas`: corner `A` supports
/// `R1 + λR2` for `λ ≤ 1` and corner `B` for `λ > 1`. At `λ = 1` both
/// endpoints of the sum-rate face are emitted. Output is sorted by `λ`.
pub fn trace_boundary(
    lambdas: &[f64],
    budget: PowerBudget,
    ch: ChannelParams,
    cfg: &SolverConfig,
) -> Result<Vec<RegionPoint>> {
    for &l in lambdas {
        check_lambda("trace_boundary", l)?;
    }
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let grid = power_grid(budget)?;
    let mut out = Vec::new();
    for lambda in sorted {
        let table = solve_power_grid(lambda, &grid, ch, cfg)?;
        let solution = concave_envelope(&table, budget)?;
        let pentagon = pentagon_corners(&solution);
        let kkt_passed = solution.kkt_passed();
        let kinds: &[Corner] = if lambda < 1.0 {
            &[Corner::A]
        } else if lambda == 1.0 {
            &[Corner::A, Corner::B]
        } else {
            &[Corner::B]
        };
        for &kind in kinds {
            out.push(RegionPoint {
                lambda,
                corner: match kind {
                    Corner::A => pentagon.0,
                    Corner::B => pentagon.1,
                },
                kind,
                pentagon,
                solution: solution.clone(),
                kkt_passed,
            });
        }
    }
    Ok(out)
}

/// Builds a single-atom solution from a product input, for callers that
/// already hold an input.
pub fn single_letter(input: ProductInput, lambda: f64, ch: ChannelParams) -> Result<TimeSharedSolution> {
    check_lambda("single_letter", lambda)?;
    let rates = rate_tuple(&input, ch);
    let powers = (input.f1.second_moment(), input.f2.second_moment());
    Ok(TimeSharedSolution {
        lambda,
        atoms: vec![TimeShareAtom {
            prob: Prob::new(1.0)?,
            input,
            rates,
            powers,
            kkt_passed: true,
        }],
    })
}
