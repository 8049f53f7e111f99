//! Product inputs alone do not reach capacity.
//!
//! Under unit power per user, the sum rate of the best product input is
//! compared with an on/off time-sharing scheme in which exactly one user
//! transmits `±√2` at a time. The ternary family `pδ_{-√2} + (1-2p)δ_0 +
//! pδ_{√2}` with `p ≤ 1/4` covers the zero-mean product inputs on that
//! lattice, and its sum law stays at Lévy distance at least `3/16` from the
//! single-user optimum.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::dist::{levy_distance, remark2_sum_distribution, ternary, MassPointDistribution};
use crate::error::{domain, Result};
use crate::info::{rate_tuple, ChannelParams, ProductInput};
use crate::scalar::{h_b_value, q, Bits, Prob};

use super::{TimeShareAtom, TimeSharedSolution};

/// Outcome of [`remark2_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Remark2Report {
    pub grid_n: usize,
    /// Largest `I(X1, X2; Y)` over the ternary product grid.
    pub max_sum_rate: Bits,
    /// `(p, p')` attaining `max_sum_rate`.
    pub argmax: (f64, f64),
    /// `1 - h_b(Q(√2))`, the sum rate of the on/off scheme.
    pub benchmark: Bits,
    /// `benchmark - max_sum_rate`.
    pub gap: Bits,
    /// Smallest Lévy distance between the sum law and `½δ_{-√2} + ½δ_{√2}`.
    pub min_levy_distance: f64,
    pub levy_argmin: (f64, f64),
    /// The on/off scheme as a two-atom time-sharing law.
    pub construction: TimeSharedSolution,
    /// `I(X1, X2; Y | U)` of the construction.
    pub construction_sum_rate: Bits,
}

/// Scans `(p, p') ∈ [0, 1/4]²` on a `grid_n × grid_n` grid.
pub fn remark2_scan(grid_n: usize, ch: ChannelParams) -> Result<Remark2Report> {
    if grid_n < 2 {
        return Err(domain("remark2_scan", format!("grid_n = {grid_n} must be >= 2")));
    }
    let axis: Vec<f64> = (0..grid_n).map(|i| 0.25 * i as f64 / (grid_n - 1) as f64).collect();
    let laws = axis.iter().map(|&p| ternary(p)).collect::<Result<Vec<_>>>()?;
    let target = MassPointDistribution::antipodal(SQRT_2);
    let mut max_sum_rate = f64::NEG_INFINITY;
    let mut argmax = (0.0, 0.0);
    let mut min_levy = f64::INFINITY;
    let mut levy_argmin = (0.0, 0.0);
    for (i, &p) in axis.iter().enumerate() {
        for (j, &pp) in axis.iter().enumerate() {
            let input = ProductInput::new(laws[i].clone(), laws[j].clone());
            let r = rate_tuple(&input, ch).sum;
            if r > max_sum_rate {
                max_sum_rate = r;
                argmax = (p, pp);
            }
            let d = levy_distance(&remark2_sum_distribution(p, pp)?, &target);
            if d < min_levy {
                min_levy = d;
                levy_argmin = (p, pp);
            }
        }
    }
    let construction = on_off_construction(ch)?;
    let construction_sum_rate = construction.sum_rate();
    let benchmark = 1.0 - h_b_value(q(SQRT_2 - ch.threshold)?.get())?;
    Ok(Remark2Report {
        grid_n,
        max_sum_rate,
        argmax,
        benchmark,
        gap: benchmark - max_sum_rate,
        min_levy_distance: min_levy,
        levy_argmin,
        construction,
        construction_sum_rate,
    })
}

/// `U ~ Bern(½)`: user 1 sends `±√2` while user 2 is silent, then the
/// reverse. Each user averages unit power.
fn on_off_construction(ch: ChannelParams) -> Result<TimeSharedSolution> {
    let on = MassPointDistribution::antipodal(SQRT_2);
    let off = MassPointDistribution::point(0.0);
    let half = Prob::new(0.5)?;
    let atoms = [
        ProductInput::new(on.clone(), off.clone()),
        ProductInput::new(off, on),
    ]
    .into_iter()
    .map(|input| TimeShareAtom {
        prob: half,
        rates: rate_tuple(&input, ch),
        powers: (input.f1.second_moment(), input.f2.second_moment()),
        input,
        kkt_passed: true,
    })
    .collect();
    Ok(TimeSharedSolution { lambda: 1.0, atoms })
}
