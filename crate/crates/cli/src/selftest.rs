//! Built-in invariant suite over seeded random instances.

use std::f64::consts::SQRT_2;

use anyhow::Result;
use onebit_mac_core::info::{
    cond_output_pmf, density_i, density_tilde, hb_ratio, i_lambda, output_pmf, rate_tuple, transition,
};
use onebit_mac_core::scalar::{h_b_value, hessian_q_sqrtsum, log2_q, log_q_shift_second_difference, q};
use onebit_mac_core::solver::alternate_maximize;
use onebit_mac_core::{ChannelParams, MassPointDistribution, PowerBudget, ProductInput, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random instances per check.
pub const INSTANCES: usize = 200;
const SEED: u64 = 0x5e1f_7e57;

/// Outcome of one check. `margin` is the worst slack over all instances;
/// a check passes when it is nonnegative.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub margin: f64,
    pub detail: String,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.margin >= 0.0
    }
}

fn qv(x: f64) -> Result<f64> {
    Ok(q(x)?.get())
}

fn random_dist(rng: &mut ChaCha8Rng, max_atoms: usize, r: f64) -> Result<MassPointDistribution> {
    let n = rng.gen_range(1..=max_atoms);
    let points = (0..n).map(|_| rng.gen_range(-r..r)).collect();
    let weights = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    Ok(MassPointDistribution::from_unnormalized(points, weights)?)
}

fn random_input(rng: &mut ChaCha8Rng) -> Result<ProductInput> {
    Ok(ProductInput::new(random_dist(rng, 5, 3.0)?, random_dist(rng, 5, 3.0)?))
}

fn kl_bits(p: (f64, f64), r: (f64, f64)) -> f64 {
    let term = |a: f64, b: f64| if a > 0.0 { a * (a / b).log2() } else { 0.0 };
    term(p.0, r.0) + term(p.1, r.1)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn hessian(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut margin = f64::INFINITY;
    for _ in 0..INSTANCES {
        let (u, v) = (log_uniform(rng, 1e-3, 50.0), log_uniform(rng, 1e-3, 50.0));
        let h = hessian_q_sqrtsum(u, v)?;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        // Scale-free: det / (h11 h22) lies in (0, 1] for a PD matrix.
        margin = margin.min(det / (h[0][0] * h[1][1]).max(f64::MIN_POSITIVE));
    }
    Ok(Check { name: "hessian_positive_definite", margin, detail: "min det/(h11 h22)".into() })
}

fn log_q_convex(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut margin = f64::INFINITY;
    for _ in 0..INSTANCES {
        let (a, x) = (rng.gen_range(0.0..5.0), rng.gen_range(0.01..20.0));
        margin = margin.min(log_q_shift_second_difference(a, x, 1e-3)?);
    }
    Ok(Check { name: "log_q_shifted_root_convex", margin, detail: "min second difference".into() })
}

fn jensen(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut margin = f64::INFINITY;
    for _ in 0..INSTANCES {
        let [u1, u2, v1, v2]: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.0..10.0));
        let a = rng.gen_range(0.0..1.0);
        let mixed = qv((a * u1 + (1.0 - a) * u2).sqrt() + (a * v1 + (1.0 - a) * v2).sqrt())?;
        let chord = a * qv(u1.sqrt() + v1.sqrt())? + (1.0 - a) * qv(u2.sqrt() + v2.sqrt())?;
        margin = margin.min(chord - mixed + 1e-15);
    }
    Ok(Check { name: "jensen_q_root_sum", margin, detail: "min chord - mixed".into() })
}

/// Bounds on the pieces of the densities under power constraints.
fn density_bounds(rng: &mut ChaCha8Rng, ch: ChannelParams) -> Result<Vec<Check>> {
    let (mut kl_m, mut cross_m, mut lead_m, mut floor_m) = (f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for _ in 0..INSTANCES {
        let input = random_input(rng)?;
        let p1 = input.f1.second_moment() + rng.gen_range(0.0..2.0);
        let p2 = input.f2.second_moment() + rng.gen_range(0.0..2.0);
        let both = log2_q(p1.sqrt() + p2.sqrt())?;
        let py = output_pmf(&input, ch);
        for (a, _) in input.f1.atoms() {
            for (b, _) in input.f2.atoms() {
                let t = transition(a, b, ch);
                kl_m = kl_m.min(1.0 - 2.0 * both - kl_bits((t.p0, t.p1), (py.p0, py.p1)).abs());
                let c = cond_output_pmf(&input.f1, b, ch);
                let cross = t.p0 * (py.p0 / c.p0).log2() + t.p1 * (py.p1 / c.p1).log2();
                let single = log2_q(p1.sqrt() + b.abs())?;
                cross_m = cross_m.min(-2.0 * both - 2.0 * single - cross.abs());
            }
        }
        let lambda = rng.gen_range(0.05..=1.0);
        let x = rng.gen_range(-40.0..40.0);
        let tight = log2_q(input.f1.second_moment().sqrt() + input.f2.second_moment().sqrt())?;
        let d = density_tilde(x, &input, lambda, ch)?;
        lead_m = lead_m.min((2.0 - lambda) * (1.0 - 2.0 * tight) - d.abs());
        let x2 = rng.gen_range(-6.0..6.0);
        let c = cond_output_pmf(&input.f1, x2, ch);
        floor_m = floor_m.min(c.p0.min(c.p1) - qv(p1.sqrt() + x2.abs())?);
    }
    Ok(vec![
        Check { name: "divergence_bound", margin: kl_m, detail: "min bound - |KL|".into() },
        Check { name: "cross_term_bound", margin: cross_m, detail: "min bound - |cross term|".into() },
        Check { name: "lead_density_bound", margin: lead_m, detail: "min bound - |density|".into() },
        Check { name: "conditional_output_floor", margin: floor_m, detail: "min pmf - floor".into() },
    ])
}

/// The entropy ratio stays at most one, and for a fixed antipodal law it
/// climbs toward one as the interference grows.
fn hb_ratio_limit(rng: &mut ChaCha8Rng, ch: ChannelParams) -> Result<Check> {
    let mut margin = f64::INFINITY;
    for _ in 0..INSTANCES {
        let f1 = random_dist(rng, 5, 3.0)?;
        let x2 = rng.gen_range(-8.0..8.0);
        margin = margin.min(1.0 - hb_ratio(&f1, x2, ch)? + 1e-12);
    }
    let f1 = MassPointDistribution::antipodal(2.0);
    let ladder = [5.0, 10.0, 15.0, 20.0]
        .iter()
        .map(|&x2| hb_ratio(&f1, x2, ch))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    for w in ladder.windows(2) {
        margin = margin.min(w[1] - w[0]);
    }
    let last = ladder[ladder.len() - 1];
    margin = margin.min(0.01 - (1.0 - last));
    Ok(Check {
        name: "entropy_ratio_limit",
        margin,
        detail: format!("ratio at x2 = 5, 10, 15, 20: {ladder:.6?}"),
    })
}

fn mixture(rng: &mut ChaCha8Rng, ch: ChannelParams, fault: bool) -> Result<Check> {
    const TOL: f64 = 1e-9;
    let mut worst: f64 = 0.0;
    for _ in 0..INSTANCES {
        let input = random_input(rng)?;
        let lambda = rng.gen_range(0.05..=1.0);
        let mut target = i_lambda(&input, lambda, ch)?;
        if fault {
            target += 1e-6;
        }
        let lead: f64 = input
            .f1
            .atoms()
            .map(|(x, w)| density_tilde(x, &input, lambda, ch).map(|d| w * d))
            .sum::<std::result::Result<f64, _>>()?;
        let other: f64 = input
            .f2
            .atoms()
            .map(|(x, w)| density_i(x, &input, lambda, ch).map(|d| w * d))
            .sum::<std::result::Result<f64, _>>()?;
        worst = worst.max((lead - target).abs()).max((other - target).abs());
    }
    Ok(Check { name: "mixture_identities", margin: TOL - worst, detail: format!("max error {worst:.3e}") })
}

fn chain_rule(rng: &mut ChaCha8Rng, ch: ChannelParams) -> Result<Check> {
    const TOL: f64 = 1e-12;
    let mut worst: f64 = 0.0;
    let mut range_ok = true;
    for _ in 0..INSTANCES {
        let r = rate_tuple(&random_input(rng)?, ch);
        worst = worst.max((r.r1_given_2 + r.r2 - r.sum).abs()).max((r.r2_given_1 + r.r1 - r.sum).abs());
        range_ok &= [r.r1_given_2, r.r2_given_1, r.r1, r.r2, r.sum].iter().all(|v| (0.0..=1.0).contains(v));
    }
    let margin = if range_ok { TOL - worst } else { -1.0 };
    Ok(Check { name: "chain_rule", margin, detail: format!("max error {worst:.3e}, rates in [0, 1]: {range_ok}") })
}

fn antipodal_rate(rng: &mut ChaCha8Rng, ch: ChannelParams) -> Result<Check> {
    let hb = |t: f64| h_b_value(t);
    let mut margin = f64::INFINITY;
    for _ in 0..INSTANCES {
        let m = [2.0, 4.0, 8.0][rng.gen_range(0..3)];
        let f2 = random_dist(rng, 5, 1.0)?;
        let scaled = MassPointDistribution::new(f2.points().iter().map(|x| x * m).collect(), f2.weights().to_vec())?;
        let p2 = scaled.second_moment() + rng.gen_range(0.0..1.0);
        let input = ProductInput::new(MassPointDistribution::antipodal(2.0 * m), scaled);
        let rate = rate_tuple(&input, ch).r1_given_2;
        let bound = (1.0 - p2 / (m * m)) * hb(0.5 - 0.5 * (qv(3.0 * m)? + qv(m)?))? - hb(qv(2.0 * m)?)?;
        margin = margin.min(rate - bound + 1e-12);
    }
    Ok(Check { name: "antipodal_rate_bound", margin, detail: "min rate - bound".into() })
}

/// With one user silent the solver must return the antipodal input.
fn single_user(ch: ChannelParams) -> Result<Check> {
    const VALUE_TOL: f64 = 1e-6;
    const POINT_TOL: f64 = 1e-4;
    let cfg = SolverConfig { multistarts: 1, ..SolverConfig::default() };
    let want = 1.0 - h_b_value(qv(SQRT_2 - ch.threshold)?)?;
    let (mut dv, mut dp): (f64, f64) = (0.0, 0.0);
    for (budget, swap) in [(PowerBudget::new(2.0, 0.0)?, false), (PowerBudget::new(0.0, 2.0)?, true)] {
        let r = alternate_maximize(1.0, budget, ch, &cfg)?;
        dv = dv.max((r.value - want).abs());
        let pts = if swap { r.input.f2.points() } else { r.input.f1.points() };
        dp = dp.max(match pts {
            [a, b] => (a + SQRT_2).abs().max((b - SQRT_2).abs()),
            _ => f64::INFINITY,
        });
    }
    Ok(Check {
        name: "single_user_reduction",
        margin: (VALUE_TOL - dv).min(POINT_TOL - dp),
        detail: format!("value error {dv:.3e}, atom error {dp:.3e}"),
    })
}

/// Runs every check in a fixed order.
pub fn run(fault: bool) -> Result<Vec<Check>> {
    let ch = ChannelParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out = vec![hessian(&mut rng)?, log_q_convex(&mut rng)?, jensen(&mut rng)?];
    out.extend(density_bounds(&mut rng, ch)?);
    out.push(hb_ratio_limit(&mut rng, ch)?);
    out.push(mixture(&mut rng, ch, fault)?);
    out.push(chain_rule(&mut rng, ch)?);
    out.push(antipodal_rate(&mut rng, ch)?);
    out.push(single_user(ch)?);
    Ok(out)
}
