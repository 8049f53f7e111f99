//! Maximization over one input law with the other held fixed.
//!
//! Atoms are found by column generation: the weight program is solved on
//! the current support, the Lagrangian density `D(x) + θ(P - x²)` is
//! scanned for points exceeding its level on the support, and those points
//! are added. The resulting clusters are collapsed and refined by Newton
//! on the optimality system, then reduced to the atom cap if needed.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dist::{default_merge_tol, prune_merge, MassPointDistribution};
use crate::error::{Error, Result};
use crate::info::ChannelParams;

use super::frame::{Field, Frame, Role};
use super::polish::{polish, SideState};
use super::weights::{self, ConcaveProblem};
use super::SolverConfig;

/// Step of the coarse scan for local maxima of the Lagrangian density.
pub(crate) const SCAN_STEP: f64 = 0.05;
/// Largest half-width ever scanned.
pub(crate) const MAX_RANGE: f64 = 40.0;
const CG_TOL: f64 = 1e-2;
const CHECK_TOL: f64 = 1e-9;
const CLUSTER_TOL: f64 = 0.05;
const KEEP_WEIGHT: f64 = 1e-12;
const MAX_CG_ITERS: usize = 40;
/// Atoms lighter than this after clustering are dropped before Newton.
const POLISH_DROP: f64 = 1e-6;
const MAX_ROUNDS: usize = 6;

pub(crate) struct SideContext<'a> {
    pub frame: &'a Frame,
    pub role: Role,
    pub counterpart: &'a MassPointDistribution,
    pub power: f64,
    pub ch: ChannelParams,
    pub cfg: &'a SolverConfig,
    pub floor: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct SideSolution {
    pub dist: MassPointDistribution,
    pub theta: f64,
    pub level: f64,
    pub active: bool,
}

impl SideContext<'_> {
    fn counterpart_atoms(&self) -> Vec<(f64, f64)> {
        self.counterpart.atoms().collect()
    }

    pub fn field(&self, atoms: &[(f64, f64)]) -> Field {
        let c = self.counterpart_atoms();
        match self.role {
            Role::Lead => self.frame.field(Role::Lead, atoms, &c, self.ch),
            Role::Other => self.frame.field(Role::Other, &c, atoms, self.ch),
        }
    }

    fn problem(&self, support: &[f64]) -> ConcaveProblem {
        self.frame.problem(self.role, support, self.counterpart, self.power, self.ch)
    }

    /// Half-width beyond which no point can exceed the level.
    pub fn range(&self, field: &Field, theta: f64, level: f64) -> f64 {
        let mut b = self.floor.max(self.counterpart.max_abs() + 6.0 + self.power.sqrt());
        if theta > 0.0 {
            let (lo, hi) = field.tail_limits();
            let excess = (lo.max(hi) - level).max(0.0);
            b = b.max((self.power + excess / theta).sqrt());
        }
        b.min(MAX_RANGE)
    }

    /// Local maxima of `g(x) = D(x) + θ(P - x²) - level` on `[-b, b]` with
    /// `g > tol`, refined to stationary points.
    pub fn maxima(&self, field: &Field, theta: f64, level: f64, b: f64, tol: f64) -> Vec<(f64, f64)> {
        let g = |x: f64| field.value(x) + theta * (self.power - x * x) - level;
        let dg = |x: f64| field.slope(x) - 2.0 * theta * x;
        let n = (2.0 * b / SCAN_STEP).ceil() as usize;
        let xs: Vec<f64> = (0..=n).map(|i| -b + 2.0 * b * i as f64 / n as f64).collect();
        let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        let mut out = Vec::new();
        for i in 0..=n {
            let left = i == 0 || gs[i] >= gs[i - 1];
            let right = i == n || gs[i] > gs[i + 1];
            if !(left && right) {
                continue;
            }
            let mut x = xs[i];
            if i > 0 && i < n {
                let (a, c) = (xs[i - 1], xs[i + 1]);
                if dg(a) > 0.0 && dg(c) < 0.0 {
                    x = bracket_root(&dg, a, c);
                }
            }
            let v = g(x).max(gs[i]);
            if v > tol {
                out.push((if g(x) >= gs[i] { x } else { xs[i] }, v));
            }
        }
        out
    }

    fn level(&self, field: &Field, atoms: &[(f64, f64)], theta: f64) -> f64 {
        atoms
            .iter()
            .map(|&(x, w)| w * (field.value(x) + theta * (self.power - x * x)))
            .sum()
    }

    fn column_generation(&self, candidates: &[f64]) -> Result<(Vec<(f64, f64)>, f64, bool)> {
        let mut support = with_origin(candidates.to_vec());
        let mut last = None;
        let mut best_value = f64::NEG_INFINITY;
        for _ in 0..MAX_CG_ITERS {
            let sol = weights::solve(&self.problem(&support))?;
            let atoms: Vec<(f64, f64)> = support
                .iter()
                .copied()
                .zip(sol.weights.iter().copied())
                .filter(|&(_, w)| w > KEEP_WEIGHT)
                .collect();
            let field = self.field(&atoms);
            let theta = if sol.power_active {
                stationary_theta(&field, &atoms).unwrap_or(sol.theta)
            } else {
                sol.theta
            };
            let stalled = sol.value <= best_value + 1e-13;
            best_value = best_value.max(sol.value);
            let level = self.level(&field, &atoms, theta);
            let b = self.range(&field, theta, level);
            let fresh: Vec<f64> = self
                .maxima(&field, theta, level, b, CG_TOL)
                .into_iter()
                .map(|(x, _)| x)
                .filter(|x| !atoms.iter().any(|(a, _)| (a - x).abs() < 1e-9))
                .collect();
            let done = fresh.is_empty() || stalled;
            last = Some((atoms.clone(), theta, sol.power_active));
            if done {
                break;
            }
            support = with_origin(atoms.iter().map(|a| a.0).chain(fresh).collect());
        }
        last.ok_or_else(|| Error::Numerical("column generation did not run".into()))
    }

    /// Maximizes over this side, starting from the points in `warm`.
    pub fn solve(&self, warm: &[f64]) -> Result<SideSolution> {
        if self.power == 0.0 {
            let atoms = [(0.0, 1.0)];
            let field = self.field(&atoms);
            return Ok(SideSolution {
                dist: MassPointDistribution::point(0.0),
                theta: 0.0,
                level: field.value(0.0),
                active: true,
            });
        }
        let sp = self.power.sqrt();
        let mut candidates: Vec<f64> = warm.iter().copied().chain([-sp, sp]).collect();
        let mut best: Option<SideState> = None;
        for _ in 0..MAX_ROUNDS {
            let (atoms, theta, active) = self.column_generation(&candidates)?;
            let field = self.field(&atoms);
            let level = self.level(&field, &atoms, theta);
            let raw = SideState {
                points: atoms.iter().map(|a| a.0).collect(),
                weights: atoms.iter().map(|a| a.1).collect(),
                theta,
                level,
                power: self.power,
                active,
            };
            let mut state = [drop_light(cluster(&raw))];
            let c = self.counterpart_atoms();
            let refined = polish(self.frame, self.ch, &[self.role], &mut state, Some(&c));
            let [mut state] = state;
            if !refined || !increasing(&state.points) {
                state = raw.clone();
            }
            self.reduce_to_cap(&mut state)?;
            let field = self.field(&atoms_of(&state));
            let b = self.range(&field, state.theta.max(0.0), state.level);
            let missed = self.maxima(&field, state.theta.max(0.0), state.level, b, CHECK_TOL);
            best = Some(state.clone());
            if missed.is_empty() {
                break;
            }
            candidates = state
                .points
                .iter()
                .copied()
                .chain(raw.points.iter().copied())
                .chain(missed.iter().map(|m| m.0))
                .collect();
        }
        let state = best.expect("at least one round");
        let dist = MassPointDistribution::from_unnormalized(state.points.clone(), state.weights.clone())?;
        let merge_tol = self.cfg.merge_tol.unwrap_or_else(|| default_merge_tol(self.power));
        let dist = prune_merge(&dist, self.cfg.weight_floor, merge_tol)?;
        Ok(SideSolution {
            dist,
            theta: state.theta.max(0.0),
            level: state.level,
            active: state.active,
        })
    }

    /// Removes atoms without lowering the objective until the cap holds.
    ///
    /// Every entropy term of the weight program is a linear function of the
    /// weights, so moving along a direction that preserves those linear
    /// functions, the total mass and the power changes only the linear part
    /// of the objective. Stepping in the non-decreasing sense until a weight
    /// vanishes removes one atom at a time.
    fn reduce_to_cap(&self, state: &mut SideState) -> Result<()> {
        let cap = self.frame.cap(self.role);
        while state.points.len() > cap {
            let problem = self.problem(&state.points);
            let n = state.points.len();
            let mut rows: Vec<Vec<f64>> = vec![vec![1.0; n]];
            if state.active {
                rows.push(problem.second_moments.clone());
            }
            rows.extend(problem.terms.iter().map(|t| t.l0.clone()));
            let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
            let ata = a.transpose() * &a;
            let eig = SymmetricEigen::new(ata);
            let (k, &ev) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .min_by(|x, y| x.1.total_cmp(y.1))
                .expect("nonempty");
            if ev > 1e-20 * eig.eigenvalues.amax().max(1.0) {
                log::debug!("no mass-preserving direction to reduce {n} atoms to {cap}");
                return Ok(());
            }
            let mut d: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let gain: f64 = d.iter().zip(&problem.linear).map(|(d, c)| d * c).sum();
            if gain < 0.0 {
                d.iter_mut().for_each(|v| *v = -*v);
            }
            let (drop, step) = d
                .iter()
                .zip(&state.weights)
                .enumerate()
                .filter(|(_, (d, _))| **d < 0.0)
                .map(|(i, (d, w))| (i, w / -d))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .ok_or_else(|| Error::Numerical("reduction direction has no descent".into()))?;
            for (w, d) in state.weights.iter_mut().zip(&d) {
                *w += step * d;
            }
            state.points.remove(drop);
            state.weights.remove(drop);
            let total: f64 = state.weights.iter().sum();
            if state.weights.iter().any(|&w| w <= 0.0) || total <= 0.0 {
                return Err(Error::Numerical("support reduction produced a nonpositive weight".into()));
            }
        }
        Ok(())
    }
}

/// When every atom carrying weight has the same `|x|`, the weight program
/// leaves `θ` undetermined; stationarity `D'(x) = 2θx` then fixes it.
fn stationary_theta(field: &Field, atoms: &[(f64, f64)]) -> Option<f64> {
    let (lo, hi) = atoms
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (x, _)| (lo.min(x * x), hi.max(x * x)));
    if hi == 0.0 || hi - lo > 1e-9 * hi.max(1.0) {
        return None;
    }
    let (num, den) = atoms.iter().fold((0.0, 0.0), |(n, d), &(x, w)| {
        (n + w * 2.0 * x * field.slope(x), d + w * 4.0 * x * x)
    });
    Some((num / den).max(0.0))
}

pub(crate) fn atoms_of(state: &SideState) -> Vec<(f64, f64)> {
    state.points.iter().copied().zip(state.weights.iter().copied()).collect()
}

fn increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

fn with_origin(mut xs: Vec<f64>) -> Vec<f64> {
    xs.push(0.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    xs
}

/// Collapses runs of atoms closer than the cluster tolerance.
fn cluster(state: &SideState) -> SideState {
    let mut points: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (&x, &w) in state.points.iter().zip(&state.weights) {
        if x - last <= CLUSTER_TOL && !points.is_empty() {
            let k = points.len() - 1;
            let total = weights[k] + w;
            points[k] = (points[k] * weights[k] + x * w) / total;
            weights[k] = total;
        } else {
            points.push(x);
            weights.push(w);
        }
        last = x;
    }
    SideState {
        points,
        weights,
        ..state.clone()
    }
}

fn drop_light(mut state: SideState) -> SideState {
    let keep: Vec<bool> = state.weights.iter().map(|&w| w >= POLISH_DROP).collect();
    if keep.iter().any(|&k| k) {
        let mut it = keep.iter();
        state.points.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        state.weights.retain(|_| *it.next().unwrap());
        let total: f64 = state.weights.iter().sum();
        state.weights.iter_mut().for_each(|w| *w /= total);
    }
    state
}

/// Root of a function with `f(a) > 0 > f(b)`, by the Illinois method.
fn bracket_root(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let (mut fa, mut fb) = (f(a), f(b));
    let mut side = 0;
    for _ in 0..100 {
        let c = (a * fb - b * fa) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) || (b - a).abs() < 1e-14 {
            break;
        }
        let fc = f(c);
        if fc == 0.0 {
            return c;
        }
        if (fc > 0.0) == (fa > 0.0) {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() < 1e-13 {
            break;
        }
    }
    0.5 * (a + b)
}
