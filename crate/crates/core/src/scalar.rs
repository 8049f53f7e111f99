//! Numerically stable scalar functions: the Gaussian tail `Q`, its base-2
//! logarithm, binary entropy and the two convexity primitives built on `Q`.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Information quantity in bits. Densities of the weighted objective may be
/// negative and also use this alias.
pub type Bits = f64;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Prob(f64);

impl Prob {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Prob(value))
        } else {
            Err(domain("Prob::new", format!("{value} is not in [0, 1]")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `1 - p`.
    pub fn complement(self) -> Prob {
        Prob(1.0 - self.0)
    }
}

impl TryFrom<f64> for Prob {
    type Error = crate::error::Error;
    fn try_from(value: f64) -> Result<Self> {
        Prob::new(value)
    }
}

impl From<Prob> for f64 {
    fn from(p: Prob) -> f64 {
        p.0
    }
}

/// Above this argument the tail is evaluated through its asymptotic series.
/// `erfc` keeps full relative accuracy until its result approaches the
/// subnormal range near 37.5.
const ASYMPTOTIC_SWITCH: f64 = 37.0;

const LOG2_SQRT_2PI: f64 = 1.325_748_064_736_159;

/// Gaussian upper tail without argument checks. NaN propagates.
#[inline]
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn gaussian_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `log2 Q(x)` without argument checks.
pub fn log2_gaussian_tail(x: f64) -> f64 {
    if x > ASYMPTOTIC_SWITCH {
        let z = 1.0 / (x * x);
        let series = 1.0 - z + 3.0 * z * z - 15.0 * z * z * z;
        -0.5 * x * x / LN_2 - x.log2() - LOG2_SQRT_2PI + series.log2()
    } else if x < 0.0 {
        (-gaussian_tail(-x)).ln_1p() / LN_2
    } else {
        gaussian_tail(x).log2()
    }
}

/// Gaussian upper-tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q(x: f64) -> Result<Prob> {
    if !x.is_finite() {
        return Err(domain("q", format!("non-finite argument {x}")));
    }
    Ok(Prob(gaussian_tail(x)))
}

/// `log2 Q(x)`, finite for every finite `x`.
pub fn log2_q(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain("log2_q", format!("non-finite argument {x}")));
    }
    Ok(log2_gaussian_tail(x))
}

/// `-p log2 p` with `0 log 0 = 0`.
#[inline]
pub fn neg_xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Entropy of the pmf `(p0, p1)`, each entry computed independently so that
/// a tiny `p1` is not lost to `1 - p0` rounding.
#[inline]
pub fn entropy_pair(p0: f64, p1: f64) -> f64 {
    neg_xlog2x(p0) + neg_xlog2x(p1)
}

/// Binary entropy `H_b(t)` in bits.
pub fn h_b(t: Prob) -> Bits {
    entropy_pair(t.0, 1.0 - t.0)
}

/// Binary entropy of a raw value, with domain check.
pub fn h_b_value(t: f64) -> Result<Bits> {
    Ok(h_b(Prob::new(t).map_err(|_| domain("h_b", format!("{t} is not in [0, 1]")))?))
}

/// Closed-form Hessian of `f(u, v) = Q(√u + √v)`.
pub fn hessian_q_sqrtsum(u: f64, v: f64) -> Result<[[f64; 2]; 2]> {
    if !(u > 0.0 && v > 0.0 && u.is_finite() && v.is_finite()) {
        return Err(domain(
            "hessian_q_sqrtsum",
            format!("arguments must be positive and finite, got ({u}, {v})"),
        ));
    }
    let (su, sv) = (u.sqrt(), v.sqrt());
    let s = su + sv;
    let phi = gaussian_density(s);
    let huu = phi * (s / (4.0 * u) + 1.0 / (4.0 * u * su));
    let hvv = phi * (s / (4.0 * v) + 1.0 / (4.0 * v * sv));
    let huv = phi * s / (4.0 * su * sv);
    Ok([[huu, huv], [huv, hvv]])
}

/// Central second difference of `x ↦ log2 Q(a + √x)` with step `h`.
pub fn log_q_shift_second_difference(a: f64, x: f64, h: f64) -> Result<f64> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(domain("log_q_shift_second_difference", format!("a = {a} must be >= 0")));
    }
    if !(h.is_finite() && h > 0.0 && x.is_finite() && x - h > 0.0) {
        return Err(domain(
            "log_q_shift_second_difference",
            format!("need h > 0 and x - h > 0, got x = {x}, h = {h}"),
        ));
    }
    let f = |t: f64| log2_gaussian_tail(a + t.sqrt());
    Ok((f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h))
}

#[cfg(test)]
mod tests {
    use super::*;

    // High-precision reference values (50-digit arithmetic).
    const Q_TABLE: &[(f64, f64, f64)] = &[
        (-5.0, 0.999_999_713_348_428_1, -4.135_508_604_856_442_3e-7),
        (-1.7, 0.955_434_537_241_456_9, -0.065_771_066_302_600_74),
        (0.3, 0.382_088_577_811_047_36, -1.388_020_964_597_497),
        (1.0, 0.158_655_253_931_457_05, -2.656_032_797_424_106),
        (1.7, 0.044_565_462_758_543_04, -4.487_930_103_155_705),
        (3.0, 1.349_898_031_630_094_5e-3, -9.532_933_851_324_95),
        (5.0, 2.866_515_718_791_939e-7, -21.734_198_474_007_733),
        (8.0, 6.220_960_574_271_784e-16, -50.513_712_155_086_07),
        (10.0, 7.619_853_024_160_526e-24, -76.796_511_106_790_66),
        (15.0, 3.670_966_199_312_751e-51, -167.542_173_008_475_98),
        (20.0, 2.753_624_118_606_233_7e-89, -294.190_268_806_066_27),
        (25.0, 3.056_696_706_382_561e-138, -456.814_103_683_187_95),
        (30.0, 4.906_713_927_148_187e-198, -655.447_005_626_321_3),
        (35.0, 1.124_910_706_472_406_2e-268, -890.106_918_942_541_6),
        (37.0, 5.725_571_222_524_577e-300, -994.061_008_832_598_6),
        (37.5, 4.605_353_009_581_955e-308, -1020.950_541_479_272_4),
    ];

    #[test]
    fn q_matches_reference_to_relative_1e_12() {
        for &(x, want, _) in Q_TABLE {
            let got = q(x).unwrap().get();
            assert!(((got - want) / want).abs() <= 1e-12, "x={x} got={got} want={want}");
        }
    }

    #[test]
    fn log2_q_matches_reference() {
        for &(x, _, want) in Q_TABLE {
            let got = log2_q(x).unwrap();
            assert!((got - want).abs() <= 1e-9, "x={x} got={got} want={want}");
        }
        assert_eq!(log2_q(0.0).unwrap(), -1.0);
        let far = log2_q(-10.0).unwrap();
        assert!(far.abs() < 1e-9 && far <= 0.0);
        assert!(log2_q(60.0).unwrap().is_finite());
    }

    #[test]
    fn log2_q_is_continuous_at_series_switch() {
        let below = log2_q(ASYMPTOTIC_SWITCH - 1e-9).unwrap();
        let above = log2_q(ASYMPTOTIC_SWITCH + 1e-9).unwrap();
        assert!((below - above).abs() < 1e-6);
    }

    #[test]
    fn q_reference_points() {
        assert_eq!(q(0.0).unwrap().get(), 0.5);
        let x = 1.7;
        assert!((q(x).unwrap().get() - (1.0 - q(-x).unwrap().get())).abs() < 1e-15);
        let v = q(2f64.sqrt()).unwrap().get();
        assert!((v - 0.078_649_603_525_142_57).abs() < 1e-15);
        assert!(q(f64::NAN).is_err());
        assert!(q(f64::INFINITY).is_err());
    }

    #[test]
    fn binary_entropy_reference_points() {
        assert_eq!(h_b(Prob::new(0.5).unwrap()), 1.0);
        assert_eq!(h_b(Prob::new(0.0).unwrap()), 0.0);
        assert_eq!(h_b(Prob::new(1.0).unwrap()), 0.0);
        let v = h_b_value(0.078_649_6).unwrap();
        assert!((v - 0.397_403_006_769_572_3).abs() < 1e-12);
        assert!(h_b_value(1.5).is_err());
        assert!(h_b_value(-0.1).is_err());
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let (u, v, h) = (0.7, 2.3, 1e-4);
        let f = |a: f64, b: f64| gaussian_tail(a.sqrt() + b.sqrt());
        let fd_uu = (f(u + h, v) - 2.0 * f(u, v) + f(u - h, v)) / (h * h);
        let fd_vv = (f(u, v + h) - 2.0 * f(u, v) + f(u, v - h)) / (h * h);
        let fd_uv = (f(u + h, v + h) - f(u + h, v - h) - f(u - h, v + h) + f(u - h, v - h))
            / (4.0 * h * h);
        let hm = hessian_q_sqrtsum(u, v).unwrap();
        assert!((hm[0][0] - fd_uu).abs() < 1e-5);
        assert!((hm[1][1] - fd_vv).abs() < 1e-5);
        assert!((hm[0][1] - fd_uv).abs() < 1e-5);
        assert_eq!(hm[0][1], hm[1][0]);
    }

    #[test]
    fn hessian_symmetric_point_and_definiteness() {
        let hm = hessian_q_sqrtsum(1.0, 1.0).unwrap();
        assert_eq!(hm[0][0], hm[1][1]);
        let hm = hessian_q_sqrtsum(2.0, 2.0).unwrap();
        assert!(hm[0][0] * hm[1][1] - hm[0][1] * hm[1][0] > 0.0);
        assert!(hm[0][0] + hm[1][1] > 0.0);
        assert!(hessian_q_sqrtsum(0.0, 1.0).is_err());
        assert!(hessian_q_sqrtsum(1.0, -1.0).is_err());
    }

    #[test]
    fn second_difference_reference_values() {
        let cases = [
            (0.0, 1.0, 0.261_211_905_866_469_06),
            (3.0, 5.0, 0.104_739_831_433_525_55),
            (1.0, 50.0, 1.244_586_271_054_355e-3),
            (2.0, 100.0, 7.750_595_757_115_382e-4),
            (0.0, 200.0, 1.768_590_949_787_790_9e-5),
        ];
        for (a, x, want) in cases {
            let got = log_q_shift_second_difference(a, x, 1e-3).unwrap();
            assert!(got > 0.0);
            assert!(((got - want) / want).abs() < 1e-2, "a={a} x={x} got={got}");
        }
        assert!(log_q_shift_second_difference(0.0, 1e-4, 1e-3).is_err());
        assert!(log_q_shift_second_difference(-1.0, 1.0, 1e-3).is_err());
    }
}
