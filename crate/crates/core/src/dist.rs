//! Finitely supported distributions on the real line.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Tolerance on the total mass of a user-supplied distribution.
pub const MASS_TOLERANCE: f64 = 1e-10;

/// Default weight below which atoms are discarded by [`prune_merge`].
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-7;

/// Default merge radius for a side with power `p`: `1e-3 * max(1, √p)`.
pub fn default_merge_tol(p: f64) -> f64 {
    1e-3 * p.max(1.0).sqrt()
}

/// A probability distribution with finitely many atoms.
///
/// Points are strictly increasing and every weight is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct MassPointDistribution {
    points: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistribution {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<RawDistribution> for MassPointDistribution {
    type Error = Error;
    fn try_from(raw: RawDistribution) -> Result<Self> {
        MassPointDistribution::new(raw.points, raw.weights)
    }
}

impl MassPointDistribution {
    /// Validates and normalizes a distribution.
    ///
    /// Points are sorted, exact duplicates merged and zero weights dropped.
    /// Weights must be finite, nonnegative and sum to one within
    /// [`MASS_TOLERANCE`]; the result is renormalized exactly.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total = check_atoms(&points, &weights)?;
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self::canonical(points, weights, total))
    }

    /// Builds a distribution from nonnegative weights of arbitrary positive
    /// total, normalizing them.
    pub fn from_unnormalized(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let total = check_atoms(&points, &weights)?;
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("total weight is zero".into()));
        }
        Ok(Self::canonical(points, weights, total))
    }

    fn canonical(points: Vec<f64>, weights: Vec<f64>, total: f64) -> Self {
        let mut atoms: Vec<(f64, f64)> = points
            .into_iter()
            .zip(weights)
            .filter(|&(_, w)| w > 0.0)
            .collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points = Vec::with_capacity(atoms.len());
        let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            if points.last() == Some(&x) {
                *weights.last_mut().unwrap() += w;
            } else {
                points.push(x);
                weights.push(w);
            }
        }
        if total != 1.0 {
            weights.iter_mut().for_each(|w| *w /= total);
        }
        MassPointDistribution { points, weights }
    }

    /// The unit mass at `x`.
    pub fn point(x: f64) -> Self {
        MassPointDistribution {
            points: vec![x],
            weights: vec![1.0],
        }
    }

    /// `½δ_{-a} + ½δ_{a}`, or `δ_0` when `a = 0`.
    pub fn antipodal(a: f64) -> Self {
        let a = a.abs();
        if a == 0.0 {
            Self::point(0.0)
        } else {
            MassPointDistribution {
                points: vec![-a, a],
                weights: vec![0.5, 0.5],
            }
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Iterates over `(point, weight)` pairs in increasing point order.
    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn second_moment(&self) -> f64 {
        self.atoms().map(|(x, w)| w * x * x).sum()
    }

    pub fn mean(&self) -> f64 {
        self.atoms().map(|(x, w)| w * x).sum()
    }

    /// Largest absolute atom position.
    pub fn max_abs(&self) -> f64 {
        self.points.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Right-continuous CDF `P(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.points.partition_point(|&p| p <= x);
        self.weights[..k].iter().sum()
    }

    /// Distribution of the sum of two independent variables.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut points = Vec::with_capacity(self.len() * other.len());
        let mut weights = Vec::with_capacity(self.len() * other.len());
        for (x, w) in self.atoms() {
            for (y, v) in other.atoms() {
                points.push(x + y);
                weights.push(w * v);
            }
        }
        let total = weights.iter().sum();
        Self::canonical(points, weights, total)
    }

    /// The same atoms with positions reflected through the origin.
    pub fn reflected(&self) -> Self {
        MassPointDistribution {
            points: self.points.iter().rev().map(|x| -x).collect(),
            weights: self.weights.iter().rev().copied().collect(),
        }
    }
}

fn check_atoms(points: &[f64], weights: &[f64]) -> Result<f64> {
    if points.len() != weights.len() {
        return Err(Error::InvalidDistribution(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    if points.is_empty() {
        return Err(Error::InvalidDistribution("no atoms".into()));
    }
    if let Some(x) = points.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidDistribution(format!("non-finite point {x}")));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("invalid weight {w}")));
    }
    Ok(weights.iter().sum())
}

/// Per-user average power constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub p1: f64,
    pub p2: f64,
}

impl PowerBudget {
    pub fn new(p1: f64, p2: f64) -> Result<Self> {
        for (name, p) in [("p1", p1), ("p2", p2)] {
            if !(p.is_finite() && p >= 0.0) {
                return Err(domain("PowerBudget::new", format!("{name} = {p} must be finite and >= 0")));
            }
        }
        Ok(PowerBudget { p1, p2 })
    }

    pub fn swapped(self) -> Self {
        PowerBudget {
            p1: self.p2,
            p2: self.p1,
        }
    }
}

/// Coalesces atoms closer than `merge_tol` (single linkage, placed at the
/// weighted mean) and then removes atoms lighter than `weight_floor`.
///
/// Mass is renormalized only when something was removed, which makes the
/// operation idempotent.
pub fn prune_merge(
    d: &MassPointDistribution,
    weight_floor: f64,
    merge_tol: f64,
) -> Result<MassPointDistribution> {
    if !(weight_floor >= 0.0 && merge_tol >= 0.0) {
        return Err(domain("prune_merge", "tolerances must be nonnegative"));
    }
    let mut points = Vec::with_capacity(d.len());
    let mut weights = Vec::with_capacity(d.len());
    let mut start = 0;
    for k in 1..=d.len() {
        if k < d.len() && d.points[k] - d.points[k - 1] <= merge_tol {
            continue;
        }
        if k - start == 1 {
            points.push(d.points[start]);
            weights.push(d.weights[start]);
        } else {
            let w: f64 = d.weights[start..k].iter().sum();
            let m: f64 = d.points[start..k]
                .iter()
                .zip(&d.weights[start..k])
                .map(|(x, v)| x * v)
                .sum::<f64>()
                / w;
            points.push(m);
            weights.push(w);
        }
        start = k;
    }
    let before = weights.len();
    let kept: Vec<(f64, f64)> = points
        .into_iter()
        .zip(weights)
        .filter(|&(_, w)| w >= weight_floor)
        .collect();
    if kept.is_empty() {
        return Err(Error::InvalidDistribution(
            "every atom fell below the weight floor".into(),
        ));
    }
    let (points, mut weights): (Vec<f64>, Vec<f64>) = kept.into_iter().unzip();
    if weights.len() < before {
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
    }
    Ok(MassPointDistribution { points, weights })
}

/// Lévy distance between two CDFs, found by bisection on ε to 1e-12.
pub fn levy_distance(f: &MassPointDistribution, g: &MassPointDistribution) -> f64 {
    // sup_x A(x) - B(x + eps) over the breakpoints of the step difference.
    fn one_sided(a: &MassPointDistribution, b: &MassPointDistribution, eps: f64) -> f64 {
        let at_a = a.points.iter().map(|&x| a.cdf(x) - b.cdf(x + eps));
        let at_b = b.points.iter().map(|&y| a.cdf(y - eps) - b.cdf(y));
        at_a.chain(at_b).fold(0.0, f64::max)
    }
    let ok = |eps: f64| one_sided(g, f, eps) <= eps && one_sided(f, g, eps) <= eps;
    if ok(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn check_quarter(op: &'static str, p: f64) -> Result<()> {
    if p.is_finite() && (0.0..=0.25).contains(&p) {
        Ok(())
    } else {
        Err(domain(op, format!("{p} is not in [0, 1/4]")))
    }
}

/// `p(1 - 2q) + q(1 - 2p)`: mass the sum of two ternary variables puts on
/// each of `±√2`.
pub fn hat_star(p: f64, q: f64) -> Result<f64> {
    check_quarter("hat_star", p)?;
    check_quarter("hat_star", q)?;
    Ok(p * (1.0 - 2.0 * q) + q * (1.0 - 2.0 * p))
}

/// Zero-mean ternary law `pδ_{-√2} + (1 - 2p)δ_0 + pδ_{√2}` with power `4p`.
pub fn ternary(p: f64) -> Result<MassPointDistribution> {
    check_quarter("ternary", p)?;
    MassPointDistribution::new(vec![-SQRT_2, 0.0, SQRT_2], vec![p, 1.0 - 2.0 * p, p])
}

/// Law of `X1 + X2` for independent ternary inputs with parameters `p`, `q`.
pub fn remark2_sum_distribution(p: f64, q: f64) -> Result<MassPointDistribution> {
    let s = hat_star(p, q)?;
    let pq = p * q;
    MassPointDistribution::new(
        vec![-2.0 * SQRT_2, -SQRT_2, 0.0, SQRT_2, 2.0 * SQRT_2],
        vec![pq, s, 1.0 - 2.0 * pq - 2.0 * s, s, pq],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(points: &[f64], weights: &[f64]) -> MassPointDistribution {
        MassPointDistribution::new(points.to_vec(), weights.to_vec()).unwrap()
    }

    #[test]
    fn construction_validates_and_canonicalizes() {
        let x = d(&[1.0, -1.0, 1.0, 3.0], &[0.25, 0.5, 0.25, 0.0]);
        assert_eq!(x.points(), &[-1.0, 1.0]);
        assert_eq!(x.weights(), &[0.5, 0.5]);
        assert!(MassPointDistribution::new(vec![0.0], vec![0.9]).is_err());
        assert!(MassPointDistribution::new(vec![0.0, 1.0], vec![1.5, -0.5]).is_err());
        assert!(MassPointDistribution::new(vec![f64::NAN], vec![1.0]).is_err());
        assert!(MassPointDistribution::new(vec![], vec![]).is_err());
        assert!(MassPointDistribution::new(vec![0.0], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let x: MassPointDistribution =
            serde_json::from_str(r#"{"points":[-1.0,1.0],"weights":[0.5,0.5]}"#).unwrap();
        assert_eq!(x, MassPointDistribution::antipodal(1.0));
        let back: MassPointDistribution =
            serde_json::from_str(&serde_json::to_string(&x).unwrap()).unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<MassPointDistribution>(
            r#"{"points":[0.0,1.0],"weights":[0.5,0.6]}"#
        )
        .is_err());
        assert!(serde_json::from_str::<MassPointDistribution>(
            r#"{"points":[0.0],"weights":[1.0],"extra":1}"#
        )
        .is_err());
    }

    #[test]
    fn second_moment_examples() {
        assert_eq!(MassPointDistribution::point(0.0).second_moment(), 0.0);
        assert!((MassPointDistribution::antipodal(SQRT_2).second_moment() - 2.0).abs() < 1e-15);
        assert!((ternary(0.25).unwrap().second_moment() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn prune_merge_examples() {
        let x = d(&[-1.0, 0.0, 1.0], &[0.5 - 1e-12, 1e-12, 0.5]);
        let y = prune_merge(&x, DEFAULT_WEIGHT_FLOOR, 1e-3).unwrap();
        assert_eq!(y.points(), &[-1.0, 1.0]);
        assert!((y.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);

        let x = d(&[-2.0, 1.0, 1.0005], &[0.5, 0.25, 0.25]);
        let y = prune_merge(&x, DEFAULT_WEIGHT_FLOOR, 1e-2).unwrap();
        assert_eq!(y.len(), 2);
        assert!((y.points()[1] - 1.000_25).abs() < 1e-12);
        assert_eq!(prune_merge(&y, DEFAULT_WEIGHT_FLOOR, 1e-2).unwrap(), y);

        assert!(prune_merge(&x, 0.9, 0.0).is_err());
    }

    #[test]
    fn levy_distance_examples() {
        let star = MassPointDistribution::antipodal(SQRT_2);
        assert_eq!(levy_distance(&star, &star), 0.0);
        let at_quarter = remark2_sum_distribution(0.25, 0.25).unwrap();
        assert!((levy_distance(&at_quarter, &star) - 3.0 / 16.0).abs() < 1e-9);
        let at_zero = remark2_sum_distribution(0.0, 0.0).unwrap();
        assert!((levy_distance(&at_zero, &star) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn hat_star_examples() {
        assert_eq!(hat_star(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(hat_star(0.25, 0.25).unwrap(), 0.25);
        assert_eq!(hat_star(0.1, 0.0).unwrap(), 0.1);
        assert!(hat_star(0.3, 0.0).is_err());
        assert!(hat_star(0.0, -0.1).is_err());
    }

    #[test]
    fn remark2_sum_examples() {
        assert_eq!(remark2_sum_distribution(0.0, 0.0).unwrap(), MassPointDistribution::point(0.0));
        let s = remark2_sum_distribution(0.25, 0.25).unwrap();
        assert_eq!(s.weights(), &[1.0 / 16.0, 0.25, 0.375, 0.25, 1.0 / 16.0]);
        assert!(remark2_sum_distribution(0.26, 0.0).is_err());
    }

    #[test]
    fn cdf_is_right_continuous() {
        let x = MassPointDistribution::antipodal(1.0);
        assert_eq!(x.cdf(-1.0), 0.5);
        assert_eq!(x.cdf(-1.0 - 1e-12), 0.0);
        assert_eq!(x.cdf(1.0), 1.0);
    }
}
