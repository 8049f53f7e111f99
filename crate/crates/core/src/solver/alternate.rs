//! Alternating maximization with multistarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dist::{MassPointDistribution, PowerBudget};
use crate::error::{Error, Result};
use crate::info::{check_lambda, rate_tuple, ChannelParams, i_lambda_of};

use super::frame::{Frame, Role};
use super::kkt::verify_input;
use super::polish::{polish, SideState};
use super::side::{SideContext, SideSolution};
use super::{cardinality_cap, support_floor, SolveResult, SolverConfig};

const ACCEL_STABLE: usize = 3;
const ACCEL_EVERY: usize = 4;

struct StartOutcome {
    index: usize,
    lead: MassPointDistribution,
    other: MassPointDistribution,
    value: f64,
    converged: bool,
    alternations: usize,
}

/// Maximizes the weighted objective for slope `λ` under `budget`.
///
/// For each start the lead law (user 1 when `λ ≤ 1`, user 2 otherwise) is
/// optimized given the other, then the other given the lead, until the
/// objective changes by less than `rate_tol`. A final joint Newton step
/// sharpens both laws together. The best start is returned, ties within
/// `rate_tol` going to fewer atoms and then to the lower start index.
pub fn alternate_maximize(
    lambda: f64,
    budget: PowerBudget,
    ch: ChannelParams,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    check_lambda("alternate_maximize", lambda)?;
    cfg.validate()?;
    let budget = PowerBudget::new(budget.p1, budget.p2)?;
    let frame = Frame::new(lambda);
    let p_lead = frame.power(budget, Role::Lead);
    let p_other = frame.power(budget, Role::Other);
    let starts = if p_lead == 0.0 || p_other == 0.0 { 1 } else { cfg.multistarts };

    let outcomes: Vec<Result<StartOutcome>> = (0..starts)
        .into_par_iter()
        .map(|k| run_start(&frame, budget, ch, cfg, k))
        .collect();

    let mut best: Option<StartOutcome> = None;
    let mut first_err = None;
    for o in outcomes {
        match o {
            Ok(o) => {
                log::debug!("start {} value {:.12} atoms {}+{}", o.index, o.value, o.lead.len(), o.other.len());
                let better = match &best {
                    None => true,
                    Some(b) => {
                        o.value > b.value + cfg.rate_tol
                            || (o.value > b.value - cfg.rate_tol
                                && o.lead.len() + o.other.len() < b.lead.len() + b.other.len())
                    }
                };
                if better {
                    best = Some(o);
                }
            }
            Err(e) => {
                log::warn!("start failed: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    let best = best.ok_or_else(|| first_err.unwrap_or_else(|| Error::Numerical("no start ran".into())))?;
    let input = frame.join(best.lead, best.other);
    let rates = rate_tuple(&input, ch);
    let kkt = verify_input(&input, lambda, budget, cfg, ch)?;
    Ok(SolveResult {
        value: i_lambda_of(&rates, lambda),
        input,
        lambda,
        budget,
        rates,
        kkt,
        converged: best.converged,
        cap: cardinality_cap(lambda)?,
        tangent_slope: -1.0 / lambda,
        alternations: best.alternations,
        start_index: best.index,
    })
}

fn initial_other(frame: &Frame, budget: PowerBudget, cfg: &SolverConfig, k: usize) -> Result<MassPointDistribution> {
    let p = frame.power(budget, Role::Other);
    if k == 0 || p == 0.0 {
        return Ok(MassPointDistribution::antipodal(p.sqrt()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(k as u64));
    let b = support_floor(budget);
    let n = rng.gen_range(1..=frame.cap(Role::Other));
    let mut points: Vec<f64> = (0..n).map(|_| rng.gen_range(-b..=b)).collect();
    let m: f64 = points.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if m > 0.0 {
        let s = (p / m).sqrt();
        points.iter_mut().for_each(|x| *x *= s);
    }
    MassPointDistribution::from_unnormalized(points, vec![1.0; n])
}

fn run_start(
    frame: &Frame,
    budget: PowerBudget,
    ch: ChannelParams,
    cfg: &SolverConfig,
    index: usize,
) -> Result<StartOutcome> {
    let p_lead = frame.power(budget, Role::Lead);
    let p_other = frame.power(budget, Role::Other);
    let floor = support_floor(budget);
    let mut other = initial_other(frame, budget, cfg, index)?;
    let mut lead = MassPointDistribution::point(0.0);
    let mut warm_lead: Vec<f64> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    let mut converged = false;
    let mut alternations = 0;
    let mut last: Option<(SideSolution, SideSolution)> = None;
    let mut last_shape = (0, 0);
    let mut stable = 0;
    for it in 1..=cfg.max_alternations {
        alternations = it;
        let ls = SideContext {
            frame,
            role: Role::Lead,
            counterpart: &other,
            power: p_lead,
            ch,
            cfg,
            floor,
        }
        .solve(&warm_lead)?;
        lead = ls.dist.clone();
        warm_lead = lead.points().to_vec();
        let os = SideContext {
            frame,
            role: Role::Other,
            counterpart: &lead,
            power: p_other,
            ch,
            cfg,
            floor,
        }
        .solve(other.points())?;
        other = os.dist.clone();
        let value = frame.objective(&lead, &other, ch);
        log::trace!("start {index} alternation {it}: {value:.15}");

        let shape = (lead.len(), other.len());
        stable = if shape == last_shape { stable + 1 } else { 0 };
        last_shape = shape;
        if (value - prev).abs() < cfg.rate_tol {
            last = Some((ls, os));
            converged = true;
            break;
        }
        prev = value;
        // Block ascent converges linearly near boundary optima; once the atom
        // counts settle, a joint Newton step usually lands on the fixed point.
        if stable >= ACCEL_STABLE && it % ACCEL_EVERY == 0 && p_lead > 0.0 && p_other > 0.0 {
            if let Some((l, o, v)) = joint_polish(frame, ch, &lead, &other, &ls, &os, p_lead, p_other) {
                if v >= value - 1e-12 {
                    lead = l;
                    other = o;
                    warm_lead = lead.points().to_vec();
                    prev = v;
                }
            }
        }
        last = Some((ls, os));
    }
    let mut value = frame.objective(&lead, &other, ch);
    if let Some((ls, os)) = last {
        if p_lead > 0.0 && p_other > 0.0 {
            if let Some((l, o, v)) = joint_polish(frame, ch, &lead, &other, &ls, &os, p_lead, p_other) {
                if v >= value - 1e-12 {
                    lead = l;
                    other = o;
                    value = v;
                }
            }
        }
    }
    Ok(StartOutcome {
        index,
        lead,
        other,
        value,
        converged,
        alternations,
    })
}

#[allow(clippy::too_many_arguments)]
fn joint_polish(
    frame: &Frame,
    ch: ChannelParams,
    lead: &MassPointDistribution,
    other: &MassPointDistribution,
    ls: &SideSolution,
    os: &SideSolution,
    p_lead: f64,
    p_other: f64,
) -> Option<(MassPointDistribution, MassPointDistribution, f64)> {
    let state = |d: &MassPointDistribution, s: &SideSolution, p: f64| SideState {
        points: d.points().to_vec(),
        weights: d.weights().to_vec(),
        theta: s.theta,
        level: s.level,
        power: p,
        active: s.active,
    };
    let mut states = [state(lead, ls, p_lead), state(other, os, p_other)];
    if !polish(frame, ch, &[Role::Lead, Role::Other], &mut states, None) {
        log::debug!("joint polish did not converge");
        return None;
    }
    let mut out = Vec::with_capacity(2);
    for s in &states {
        if !s.points.windows(2).all(|w| w[0] < w[1]) {
            return None;
        }
        let d = MassPointDistribution::from_unnormalized(s.points.clone(), s.weights.clone()).ok()?;
        if d.second_moment() > s.power * (1.0 + 1e-12) + 1e-15 {
            return None;
        }
        out.push(d);
    }
    let other = out.pop()?;
    let lead = out.pop()?;
    let v = frame.objective(&lead, &other, ch);
    Some((lead, other, v))
}
