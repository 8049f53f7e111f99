//! Weight optimization over a fixed support.
//!
//! With the support fixed, the weighted objective is
//! `f(w) = cᵀw + Σ_m α_m H(l0_m·w, l1_m·w)`, concave in `w`. It is
//! maximized over `{w ≥ 0, Σw = 1, Σ w x² ≤ P}` by a log-barrier Newton
//! method, which also yields the power multiplier.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// One entropy term `α H(l0·w, l1·w)`.
#[derive(Debug, Clone)]
pub(crate) struct EntropyTerm {
    pub alpha: f64,
    pub l0: Vec<f64>,
    pub l1: Vec<f64>,
}

/// A concave program in the weights of a fixed support.
#[derive(Debug, Clone)]
pub(crate) struct ConcaveProblem {
    pub linear: Vec<f64>,
    pub terms: Vec<EntropyTerm>,
    pub second_moments: Vec<f64>,
    pub budget: f64,
}

/// Optimal weights on a fixed support with the power multiplier `θ`
/// (zero when the budget does not bind) and the objective value.
#[derive(Debug, Clone)]
pub struct WeightSolution {
    pub weights: Vec<f64>,
    pub theta: f64,
    pub value: f64,
    pub power_active: bool,
}

const GAP_TOL: f64 = 1e-12;
const FEAS_TOL: f64 = 1e-12;

fn xlog(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

impl ConcaveProblem {
    fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().zip(w).map(|(c, w)| c * w).sum();
        let ent: f64 = self
            .terms
            .iter()
            .map(|t| {
                let p0 = dot(&t.l0, w);
                let p1 = dot(&t.l1, w);
                -t.alpha * (xlog(p0) + xlog(p1))
            })
            .sum();
        lin + ent
    }

    fn gradient_hessian(&self, w: &[f64], sel: &[usize]) -> (DVector<f64>, DMatrix<f64>) {
        let n = sel.len();
        let mut g = DVector::from_iterator(n, sel.iter().map(|&k| self.linear[k]));
        let mut h = DMatrix::zeros(n, n);
        for t in &self.terms {
            for l in [&t.l0, &t.l1] {
                let p: f64 = sel.iter().map(|&k| l[k] * w[k]).sum();
                if !(p > 0.0) {
                    continue;
                }
                let dl = p.log2() + 1.0 / LN_2;
                let c = t.alpha / (LN_2 * p);
                for (a, &ka) in sel.iter().enumerate() {
                    g[a] -= t.alpha * l[ka] * dl;
                    let la = l[ka] * c;
                    if la == 0.0 {
                        continue;
                    }
                    for (b, &kb) in sel.iter().enumerate() {
                        h[(a, b)] -= la * l[kb];
                    }
                }
            }
        }
        (g, h)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximizes the concave program. Atoms with `x² > P` are admitted only
/// when the budget leaves no interior (every atom sits on the boundary).
pub(crate) fn solve(problem: &ConcaveProblem) -> Result<WeightSolution> {
    let n = problem.n();
    if n == 0 {
        return Err(Error::Infeasible("empty support".into()));
    }
    let s = &problem.second_moments;
    let p = problem.budget;
    let s_min = s.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = FEAS_TOL * p.max(1.0);
    if s_min > p + tol {
        return Err(Error::Infeasible(format!(
            "every support point exceeds the power budget {p}"
        )));
    }
    // Degenerate case: no strictly feasible point, or every atom already
    // within budget so the constraint can never bind.
    let degenerate = s_min >= p - tol;
    let s_max = s.iter().copied().fold(0.0, f64::max);
    let unconstrained = s_max <= p;
    let sel: Vec<usize> = if degenerate {
        (0..n).filter(|&k| s[k] <= p + tol).collect()
    } else {
        (0..n).collect()
    };
    let use_power = !degenerate && !unconstrained;

    let m = sel.len();
    let mut w = vec![0.0; n];
    if use_power {
        let k_min = sel.iter().copied().min_by(|&a, &b| s[a].total_cmp(&s[b])).unwrap();
        let mean_s: f64 = sel.iter().map(|&k| s[k]).sum::<f64>() / m as f64;
        let beta = if mean_s > s_min {
            (0.5 * (p - s_min) / (mean_s - s_min)).min(1.0)
        } else {
            1.0
        };
        for &k in &sel {
            w[k] = beta / m as f64;
        }
        w[k_min] += 1.0 - beta;
    } else {
        for &k in &sel {
            w[k] = 1.0 / m as f64;
        }
    }

    let barrier_count = m as f64 + if use_power { 1.0 } else { 0.0 };
    let mut t = 1.0;
    let mut last_r = f64::INFINITY;
    loop {
        newton_center(problem, &sel, &mut w, t, use_power)?;
        if use_power {
            last_r = p - sel.iter().map(|&k| s[k] * w[k]).sum::<f64>();
        }
        if barrier_count / t < GAP_TOL {
            break;
        }
        t *= 8.0;
    }
    let theta = if use_power { 1.0 / (t * last_r) } else { 0.0 };
    let power_active = use_power && theta > 1e-9 || degenerate && p > 0.0;
    let value = problem.value(&w);
    Ok(WeightSolution {
        weights: w,
        theta,
        value,
        power_active,
    })
}

fn barrier_value(problem: &ConcaveProblem, sel: &[usize], w: &[f64], t: f64, use_power: bool) -> f64 {
    let mut v = -t * problem.value(w);
    for &k in sel {
        if w[k] <= 0.0 {
            return f64::INFINITY;
        }
        v -= w[k].ln();
    }
    if use_power {
        let r = problem.budget - sel.iter().map(|&k| problem.second_moments[k] * w[k]).sum::<f64>();
        if r <= 0.0 {
            return f64::INFINITY;
        }
        v -= r.ln();
    }
    v
}

fn newton_center(
    problem: &ConcaveProblem,
    sel: &[usize],
    w: &mut [f64],
    t: f64,
    use_power: bool,
) -> Result<()> {
    let m = sel.len();
    if m == 1 {
        return Ok(());
    }
    let s = &problem.second_moments;
    for _ in 0..100 {
        let (gf, hf) = problem.gradient_hessian(w, sel);
        let mut g = -t * gf;
        let mut h = -t * hf;
        for (a, &k) in sel.iter().enumerate() {
            g[a] -= 1.0 / w[k];
            h[(a, a)] += 1.0 / (w[k] * w[k]);
        }
        let r = if use_power {
            let r = problem.budget - sel.iter().map(|&k| s[k] * w[k]).sum::<f64>();
            for (a, &ka) in sel.iter().enumerate() {
                g[a] += s[ka] / r;
                for (b, &kb) in sel.iter().enumerate() {
                    h[(a, b)] += s[ka] * s[kb] / (r * r);
                }
            }
            r
        } else {
            f64::INFINITY
        };
        // Equality-constrained Newton step on the simplex.
        let mut kkt = DMatrix::zeros(m + 1, m + 1);
        kkt.view_mut((0, 0), (m, m)).copy_from(&h);
        for a in 0..m {
            kkt[(a, m)] = 1.0;
            kkt[(m, a)] = 1.0;
        }
        let mut rhs = DVector::zeros(m + 1);
        rhs.rows_mut(0, m).copy_from(&(-&g));
        let Some(sol) = kkt.lu().solve(&rhs) else {
            // Barrier terms of vanishing weights swamp the system; the
            // current iterate is as centered as rounding allows.
            log::trace!("singular Newton system at t = {t}");
            return Ok(());
        };
        let dw = sol.rows(0, m);
        let decrement = -g.dot(&dw);
        if !decrement.is_finite() {
            return Err(Error::Numerical("non-finite Newton decrement".into()));
        }
        if decrement < 1e-11 {
            return Ok(());
        }
        let mut alpha: f64 = 1.0;
        for (a, &k) in sel.iter().enumerate() {
            if dw[a] < 0.0 {
                alpha = alpha.min(-0.99 * w[k] / dw[a]);
            }
        }
        if use_power {
            let dr: f64 = -sel.iter().enumerate().map(|(a, &k)| s[k] * dw[a]).sum::<f64>();
            if dr < 0.0 {
                alpha = alpha.min(-0.99 * r / dr);
            }
        }
        let f0 = barrier_value(problem, sel, w, t, use_power);
        let mut trial = w.to_vec();
        let mut accepted = false;
        for _ in 0..60 {
            for (a, &k) in sel.iter().enumerate() {
                trial[k] = w[k] + alpha * dw[a];
            }
            let f1 = barrier_value(problem, sel, &trial, t, use_power);
            if f1 <= f0 - 0.25 * alpha * decrement {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // Rounding floor reached.
            return Ok(());
        }
        w.copy_from_slice(&trial);
    }
    Ok(())
}
