//! Output laws and information measures for finite product inputs.
//!
//! The receiver sees `Y = 1{x1 + x2 + N > τ}`, so `P(Y = 0 | x1, x2) =
//! Q(x1 + x2 - τ)`. Every quantity here is an exact finite sum.

use serde::{Deserialize, Serialize};

use crate::dist::MassPointDistribution;
use crate::error::{domain, Error, Result};
use crate::scalar::{entropy_pair, gaussian_density, gaussian_tail, log2_gaussian_tail, Bits};

/// Receiver quantizer settings.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelParams {
    pub threshold: f64,
}

impl ChannelParams {
    pub fn new(threshold: f64) -> Result<Self> {
        if threshold.is_finite() {
            Ok(ChannelParams { threshold })
        } else {
            Err(domain("ChannelParams::new", "threshold must be finite"))
        }
    }
}

/// A pmf on the binary output alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutputPmf {
    pub p0: f64,
    pub p1: f64,
}

impl OutputPmf {
    pub fn entropy(&self) -> Bits {
        entropy_pair(self.p0, self.p1)
    }
}

/// An independent pair of input laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductInput {
    pub f1: MassPointDistribution,
    pub f2: MassPointDistribution,
}

impl ProductInput {
    pub fn new(f1: MassPointDistribution, f2: MassPointDistribution) -> Self {
        ProductInput { f1, f2 }
    }

    /// Exchanges the users. The channel depends on `x1 + x2` only, so rates
    /// are exchanged accordingly.
    pub fn swapped(&self) -> Self {
        ProductInput {
            f1: self.f2.clone(),
            f2: self.f1.clone(),
        }
    }
}

/// The five mutual informations of a product input, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RateTuple {
    /// `I(X1; Y | X2)`
    pub r1_given_2: Bits,
    /// `I(X2; Y | X1)`
    pub r2_given_1: Bits,
    /// `I(X1; Y)`
    pub r1: Bits,
    /// `I(X2; Y)`
    pub r2: Bits,
    /// `I(X1, X2; Y)`
    pub sum: Bits,
}

impl RateTuple {
    pub fn swapped(&self) -> Self {
        RateTuple {
            r1_given_2: self.r2_given_1,
            r2_given_1: self.r1_given_2,
            r1: self.r2,
            r2: self.r1,
            sum: self.sum,
        }
    }
}

/// Output law at a single effective input `s = x1 + x2 - τ`, with logs.
///
/// Only the smaller tail is evaluated through `erfc`; the larger is its
/// complement, which is exact to rounding.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TailPair {
    pub p0: f64,
    pub p1: f64,
    pub l0: f64,
    pub l1: f64,
}

impl TailPair {
    #[inline]
    pub fn at(s: f64) -> Self {
        let a = s.abs();
        let small = gaussian_tail(a);
        let l_small = log2_gaussian_tail(a);
        let big = 1.0 - small;
        let l_big = (-small).ln_1p() / std::f64::consts::LN_2;
        if s >= 0.0 {
            TailPair { p0: small, p1: big, l0: l_small, l1: l_big }
        } else {
            TailPair { p0: big, p1: small, l0: l_big, l1: l_small }
        }
    }

    #[inline]
    pub fn entropy(&self) -> f64 {
        -(plogp(self.p0, self.l0) + plogp(self.p1, self.l1))
    }

    #[inline]
    pub fn log_ratio(&self) -> f64 {
        self.l1 - self.l0
    }
}

#[inline]
fn plogp(p: f64, l: f64) -> f64 {
    if p > 0.0 {
        p * l
    } else {
        0.0
    }
}

/// `log2 Σ w_k 2^{l_k}` without underflow.
pub(crate) fn log2_sum_exp2(terms: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let max = terms
        .clone()
        .filter(|&(w, _)| w > 0.0)
        .fold(f64::NEG_INFINITY, |m, (_, l)| m.max(l));
    if max == f64::NEG_INFINITY {
        return max;
    }
    let s: f64 = terms
        .filter(|&(w, _)| w > 0.0)
        .map(|(w, l)| w * (l - max).exp2())
        .sum();
    max + s.log2()
}

/// Mixture of tail pairs with the given weights, with accurate logs.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MixedPmf {
    pub p0: f64,
    pub p1: f64,
    pub l0: f64,
    pub l1: f64,
}

impl MixedPmf {
    pub fn from_pairs(pairs: &[(f64, TailPair)]) -> Self {
        // The smaller entry is summed directly; the larger is its
        // complement so that `p log p` stays accurate near one.
        let p0: f64 = pairs.iter().map(|(w, t)| w * t.p0).sum();
        let p1: f64 = pairs.iter().map(|(w, t)| w * t.p1).sum();
        let ln2 = std::f64::consts::LN_2;
        if p0 <= p1 {
            let l0 = log2_sum_exp2(pairs.iter().map(|(w, t)| (*w, t.l0)));
            MixedPmf { p0, p1: 1.0 - p0, l0, l1: (-p0).ln_1p() / ln2 }
        } else {
            let l1 = log2_sum_exp2(pairs.iter().map(|(w, t)| (*w, t.l1)));
            MixedPmf { p0: 1.0 - p1, p1, l0: (-p1).ln_1p() / ln2, l1 }
        }
    }

    pub fn entropy(&self) -> f64 {
        -(plogp(self.p0, self.l0) + plogp(self.p1, self.l1))
    }

    pub fn pmf(&self) -> OutputPmf {
        OutputPmf { p0: self.p0, p1: self.p1 }
    }
}

/// Channel law for one input pair.
pub fn transition(x1: f64, x2: f64, ch: ChannelParams) -> OutputPmf {
    let t = TailPair::at(x1 + x2 - ch.threshold);
    OutputPmf { p0: t.p0, p1: t.p1 }
}

fn pairs_given_x2(f1: &MassPointDistribution, x2: f64, ch: ChannelParams) -> Vec<(f64, TailPair)> {
    f1.atoms()
        .map(|(x, w)| (w, TailPair::at(x + x2 - ch.threshold)))
        .collect()
}

fn pairs_at(a: &[(f64, f64)], y: f64, ch: ChannelParams) -> Vec<(f64, TailPair)> {
    a.iter()
        .map(|&(x, w)| (w, TailPair::at(x + y - ch.threshold)))
        .collect()
}

/// Output law of the product input.
pub fn output_pmf(input: &ProductInput, ch: ChannelParams) -> OutputPmf {
    let mut pairs = Vec::with_capacity(input.f1.len() * input.f2.len());
    for (y, v) in input.f2.atoms() {
        for (x, w) in input.f1.atoms() {
            pairs.push((w * v, TailPair::at(x + y - ch.threshold)));
        }
    }
    MixedPmf::from_pairs(&pairs).pmf()
}

/// Output law given `X2 = x2`.
pub fn cond_output_pmf(f1: &MassPointDistribution, x2: f64, ch: ChannelParams) -> OutputPmf {
    MixedPmf::from_pairs(&pairs_given_x2(f1, x2, ch)).pmf()
}

/// All five mutual informations of a product input.
pub fn rate_tuple(input: &ProductInput, ch: ChannelParams) -> RateTuple {
    let (f1, f2) = (&input.f1, &input.f2);
    let table: Vec<Vec<TailPair>> = f1
        .points()
        .iter()
        .map(|&x| f2.points().iter().map(|&y| TailPair::at(x + y - ch.threshold)).collect())
        .collect();
    let mut h_noise = 0.0;
    let mut all = Vec::with_capacity(f1.len() * f2.len());
    for (i, w) in f1.weights().iter().enumerate() {
        for (j, v) in f2.weights().iter().enumerate() {
            h_noise += w * v * table[i][j].entropy();
            all.push((w * v, table[i][j]));
        }
    }
    let h_y = MixedPmf::from_pairs(&all).entropy();
    // H(Y | X2): mix over X1 for each atom of X2.
    let h_given_2: f64 = f2
        .weights()
        .iter()
        .enumerate()
        .map(|(j, v)| {
            let col: Vec<_> = f1.weights().iter().enumerate().map(|(i, w)| (*w, table[i][j])).collect();
            v * MixedPmf::from_pairs(&col).entropy()
        })
        .sum();
    let h_given_1: f64 = f1
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let row: Vec<_> = f2.weights().iter().enumerate().map(|(j, v)| (*v, table[i][j])).collect();
            w * MixedPmf::from_pairs(&row).entropy()
        })
        .sum();
    RateTuple {
        r1_given_2: (h_given_2 - h_noise).max(0.0),
        r2_given_1: (h_given_1 - h_noise).max(0.0),
        r1: (h_y - h_given_1).max(0.0),
        r2: (h_y - h_given_2).max(0.0),
        sum: (h_y - h_noise).max(0.0),
    }
}

pub(crate) fn check_lambda(op: &'static str, lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(domain(op, format!("lambda = {lambda} must be finite and > 0")))
    }
}

fn check_unit_lambda(op: &'static str, lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(domain(op, format!("lambda = {lambda} must lie in (0, 1]")))
    }
}

/// Weighted rate objective whose maximum supports the region with slope
/// `R1 + λR2`.
///
/// For `λ ≤ 1` this is `I(X1;Y|X2) + λ I(X2;Y)`; for `λ > 1` it is
/// `I(X1;Y) + λ I(X2;Y|X1)`. Both equal `I(X1,X2;Y)` at `λ = 1`.
pub fn i_lambda(input: &ProductInput, lambda: f64, ch: ChannelParams) -> Result<Bits> {
    check_lambda("i_lambda", lambda)?;
    Ok(i_lambda_of(&rate_tuple(input, ch), lambda))
}

/// The weighted objective evaluated on precomputed rates.
pub fn i_lambda_of(rates: &RateTuple, lambda: f64) -> Bits {
    if lambda <= 1.0 {
        rates.r1_given_2 + lambda * rates.r2
    } else {
        rates.r1 + lambda * rates.r2_given_1
    }
}

/// Per-letter density of `I(A;Y|B) + μ I(B;Y)` with respect to the law of
/// `A`, for `0 < μ ≤ 1`. Averaging it over `A` returns the objective.
#[derive(Debug, Clone)]
pub struct LeadDensity {
    mu: f64,
    threshold: f64,
    /// `(weight, position, log2 m_j(0), log2 m_j(1))` per atom of `B`.
    other: Vec<(f64, f64, f64, f64)>,
    lpy0: f64,
    lpy1: f64,
}

impl LeadDensity {
    pub fn new(a: &MassPointDistribution, b: &MassPointDistribution, mu: f64, ch: ChannelParams) -> Self {
        let a: Vec<_> = a.atoms().collect();
        let b: Vec<_> = b.atoms().collect();
        Self::from_atoms(&a, &b, mu, ch)
    }

    /// Builds the density from `(position, weight)` lists of `A` and `B`.
    /// Weights must be positive but need not be normalized.
    pub fn from_atoms(a: &[(f64, f64)], b: &[(f64, f64)], mu: f64, ch: ChannelParams) -> Self {
        let mut all = Vec::with_capacity(a.len() * b.len());
        let other = b
            .iter()
            .map(|&(y, v)| {
                let col = pairs_at(a, y, ch);
                all.extend(col.iter().map(|(w, t)| (w * v, *t)));
                let m = MixedPmf::from_pairs(&col);
                (v, y, m.l0, m.l1)
            })
            .collect();
        let py = MixedPmf::from_pairs(&all);
        LeadDensity {
            mu,
            threshold: ch.threshold,
            other,
            lpy0: py.l0,
            lpy1: py.l1,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let mu = self.mu;
        self.other
            .iter()
            .map(|&(v, y, lm0, lm1)| {
                let t = TailPair::at(x + y - self.threshold);
                let k0 = mu * self.lpy0 + (1.0 - mu) * lm0;
                let k1 = mu * self.lpy1 + (1.0 - mu) * lm1;
                v * (-t.entropy() - plogp_k(t.p0, k0) - plogp_k(t.p1, k1))
            })
            .sum()
    }

    pub fn slope(&self, x: f64) -> f64 {
        let mu = self.mu;
        let dpy = self.lpy1 - self.lpy0;
        self.other
            .iter()
            .map(|&(v, y, lm0, lm1)| {
                let s = x + y - self.threshold;
                let t = TailPair::at(s);
                v * gaussian_density(s) * (t.log_ratio() - mu * dpy - (1.0 - mu) * (lm1 - lm0))
            })
            .sum()
    }

    /// Limits of the density as `x → -∞` and `x → +∞`.
    pub fn tail_limits(&self) -> (f64, f64) {
        let mu = self.mu;
        let lo = self.other.iter().map(|&(v, _, lm0, _)| v * (-mu * self.lpy0 - (1.0 - mu) * lm0)).sum();
        let hi = self.other.iter().map(|&(v, _, _, lm1)| v * (-mu * self.lpy1 - (1.0 - mu) * lm1)).sum();
        (lo, hi)
    }
}

#[inline]
fn plogp_k(p: f64, k: f64) -> f64 {
    if p > 0.0 {
        p * k
    } else {
        0.0
    }
}

/// Per-letter density of `I(A;Y|B) + μ I(B;Y)` with respect to the law of
/// `B`, for `0 < μ ≤ 1`.
#[derive(Debug, Clone)]
pub struct OtherDensity {
    mu: f64,
    threshold: f64,
    lead: Vec<(f64, f64)>,
    lpy0: f64,
    lpy1: f64,
}

impl OtherDensity {
    pub fn new(a: &MassPointDistribution, b: &MassPointDistribution, mu: f64, ch: ChannelParams) -> Self {
        let a: Vec<_> = a.atoms().collect();
        let b: Vec<_> = b.atoms().collect();
        Self::from_atoms(&a, &b, mu, ch)
    }

    /// Builds the density from `(position, weight)` lists of `A` and `B`.
    pub fn from_atoms(a: &[(f64, f64)], b: &[(f64, f64)], mu: f64, ch: ChannelParams) -> Self {
        let mut all = Vec::with_capacity(a.len() * b.len());
        for &(y, v) in b {
            all.extend(pairs_at(a, y, ch).into_iter().map(|(w, t)| (w * v, t)));
        }
        let py = MixedPmf::from_pairs(&all);
        OtherDensity {
            mu,
            threshold: ch.threshold,
            lead: a.iter().map(|&(x, w)| (w, x)).collect(),
            lpy0: py.l0,
            lpy1: py.l1,
        }
    }

    fn pairs(&self, y: f64) -> Vec<(f64, TailPair)> {
        self.lead
            .iter()
            .map(|&(w, x)| (w, TailPair::at(x + y - self.threshold)))
            .collect()
    }

    pub fn value(&self, y: f64) -> f64 {
        let pairs = self.pairs(y);
        let kl_pairs: f64 = pairs
            .iter()
            .map(|(w, t)| w * (-t.entropy() - plogp_k(t.p0, self.lpy0) - plogp_k(t.p1, self.lpy1)))
            .sum();
        let m = MixedPmf::from_pairs(&pairs);
        let kl_mix = -m.entropy() - plogp_k(m.p0, self.lpy0) - plogp_k(m.p1, self.lpy1);
        kl_pairs - (1.0 - self.mu) * kl_mix
    }

    pub fn slope(&self, y: f64) -> f64 {
        let dpy = self.lpy1 - self.lpy0;
        let pairs = self.pairs(y);
        let mut direct = 0.0;
        let mut dm = 0.0;
        for (&(w, x), (_, t)) in self.lead.iter().zip(&pairs) {
            let phi = w * gaussian_density(x + y - self.threshold);
            direct += phi * (t.log_ratio() - dpy);
            dm += phi;
        }
        let m = MixedPmf::from_pairs(&pairs);
        direct - (1.0 - self.mu) * dm * ((m.l1 - m.l0) - dpy)
    }

    /// Limits of the density as `y → -∞` and `y → +∞`.
    pub fn tail_limits(&self) -> (f64, f64) {
        (-self.mu * self.lpy0, -self.mu * self.lpy1)
    }
}

/// Density of the weighted objective with respect to `X1`, for `0 < λ ≤ 1`.
pub fn density_tilde(x1: f64, input: &ProductInput, lambda: f64, ch: ChannelParams) -> Result<f64> {
    check_unit_lambda("density_tilde", lambda)?;
    Ok(LeadDensity::new(&input.f1, &input.f2, lambda, ch).value(x1))
}

/// Density of the weighted objective with respect to `X2`, for `0 < λ ≤ 1`.
pub fn density_i(x2: f64, input: &ProductInput, lambda: f64, ch: ChannelParams) -> Result<f64> {
    check_unit_lambda("density_i", lambda)?;
    Ok(OtherDensity::new(&input.f1, &input.f2, lambda, ch).value(x2))
}

/// `Σ w_i H_b(Q(x_i + x2)) / H_b(Σ w_i Q(x_i + x2))`, at most one by
/// concavity of the binary entropy.
pub fn hb_ratio(f1: &MassPointDistribution, x2: f64, ch: ChannelParams) -> Result<f64> {
    let pairs = pairs_given_x2(f1, x2, ch);
    let num: f64 = pairs.iter().map(|(w, t)| w * t.entropy()).sum();
    let den = MixedPmf::from_pairs(&pairs).entropy();
    if !(den > 0.0) {
        return Err(Error::Numerical(format!("mixed entropy underflows at x2 = {x2}")));
    }
    Ok(num / den)
}
