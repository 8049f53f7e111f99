//! Newton refinement of the first-order optimality system.
//!
//! For each variable side with atoms `(x_k, w_k)`, multiplier `θ` and level
//! `c`, the unknowns satisfy
//!
//! ```text
//! D(x_k) + θ (P - x_k²) = c,    D'(x_k) = 2 θ x_k,
//! Σ w_k = 1,                   Σ w_k x_k² = P   (or θ = 0 if slack),
//! ```
//!
//! where `D` is the side's density in objective units. The Jacobian is
//! taken by central differences and steps are least-squares solves, so a
//! rank-deficient system (non-unique optimum) still makes progress.

use nalgebra::{DMatrix, DVector};

use crate::info::ChannelParams;

use super::frame::{Frame, Role};

/// Current iterate of one side.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SideState {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub theta: f64,
    pub level: f64,
    pub power: f64,
    pub active: bool,
}

impl SideState {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        self.points.iter().copied().zip(self.weights.iter().copied()).collect()
    }
}

const RESIDUAL_TOL: f64 = 1e-12;

struct System<'a> {
    frame: &'a Frame,
    ch: ChannelParams,
    roles: Vec<Role>,
    template: Vec<SideState>,
    fixed: Option<Vec<(f64, f64)>>,
}

impl System<'_> {
    fn pack(&self, states: &[SideState]) -> DVector<f64> {
        let mut z = Vec::new();
        for s in states {
            z.extend(&s.points);
            z.extend(&s.weights);
            z.push(s.theta);
            z.push(s.level);
        }
        DVector::from_vec(z)
    }

    fn unpack(&self, z: &DVector<f64>) -> Vec<SideState> {
        let mut at = 0;
        self.template
            .iter()
            .map(|t| {
                let n = t.len();
                let s = SideState {
                    points: z.as_slice()[at..at + n].to_vec(),
                    weights: z.as_slice()[at + n..at + 2 * n].to_vec(),
                    theta: z[at + 2 * n],
                    level: z[at + 2 * n + 1],
                    power: t.power,
                    active: t.active,
                };
                at += 2 * n + 2;
                s
            })
            .collect()
    }

    fn residual(&self, z: &DVector<f64>) -> Option<DVector<f64>> {
        let states = self.unpack(z);
        if states.iter().any(|s| s.weights.iter().any(|&w| !(w > 0.0))) {
            return None;
        }
        let mut lead = None;
        let mut other = None;
        for (r, s) in self.roles.iter().zip(&states) {
            match r {
                Role::Lead => lead = Some(s.atoms()),
                Role::Other => other = Some(s.atoms()),
            }
        }
        let lead = lead.or_else(|| self.fixed.clone())?;
        let other = other.or_else(|| self.fixed.clone())?;
        let mut out = Vec::with_capacity(z.len());
        for (r, s) in self.roles.iter().zip(&states) {
            let field = self.frame.field(*r, &lead, &other, self.ch);
            for &x in &s.points {
                out.push(field.value(x) + s.theta * (s.power - x * x) - s.level);
            }
            for &x in &s.points {
                out.push(field.slope(x) - 2.0 * s.theta * x);
            }
            out.push(s.weights.iter().sum::<f64>() - 1.0);
            if s.active {
                out.push(s.atoms().iter().map(|(x, w)| w * x * x).sum::<f64>() - s.power);
            } else {
                out.push(s.theta);
            }
        }
        let v = DVector::from_vec(out);
        v.iter().all(|x| x.is_finite()).then_some(v)
    }

    fn jacobian(&self, z: &DVector<f64>) -> Option<DMatrix<f64>> {
        let n = z.len();
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            let h = 1e-6 * z[i].abs().max(1.0);
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[i] += h;
            zm[i] -= h;
            let fp = self.residual(&zp)?;
            let fm = self.residual(&zm)?;
            jac.set_column(i, &((fp - fm) / (2.0 * h)));
        }
        Some(jac)
    }
}

/// Refines `states` (one per entry of `roles`) in place. The law of any
/// side not listed is `fixed`. Returns `false`, leaving the input
/// untouched, when Newton fails to drive the residual below tolerance.
pub(crate) fn polish(
    frame: &Frame,
    ch: ChannelParams,
    roles: &[Role],
    states: &mut [SideState],
    fixed: Option<&[(f64, f64)]>,
) -> bool {
    let sys = System {
        frame,
        ch,
        roles: roles.to_vec(),
        template: states.to_vec(),
        fixed: fixed.map(|f| f.to_vec()),
    };
    let mut z = sys.pack(states);
    let Some(mut f) = sys.residual(&z) else {
        return false;
    };
    let mut norm = f.amax();
    for _ in 0..40 {
        if norm < RESIDUAL_TOL {
            break;
        }
        let Some(jac) = sys.jacobian(&z) else {
            return false;
        };
        let svd = jac.svd(true, true);
        let eps = 1e-13 * svd.singular_values.max();
        let Ok(step) = svd.solve(&(-&f), eps) else {
            return false;
        };
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial = &z + alpha * &step;
            if let Some(ft) = sys.residual(&trial) {
                let nt = ft.amax();
                if nt < norm {
                    z = trial;
                    f = ft;
                    norm = nt;
                    improved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    if norm >= 1e-10 {
        log::trace!("polish failed");
        return false;
    }
    let out = sys.unpack(&z);
    if out.iter().any(|s| s.active && s.theta < -1e-12) {
        return false;
    }
    states.clone_from_slice(&out);
    true
}
