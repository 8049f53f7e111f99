//! Independent grid oracle for the weighted rate objective.
//!
//! Both laws live on the lattice `0.05 Z ∩ [-B, B]`. Each law is improved
//! in turn by Frank-Wolfe over its power-constrained simplex; the other law
//! is held fixed, which keeps every step a concave problem. Entropies,
//! gradients and the Gaussian tail are computed here from scratch so the
//! check shares no numerics with the library.

pub const STEP: f64 = 0.05;
const FW_ITERS: usize = 60;
const ROUNDS: usize = 40;
const LINE_ITERS: usize = 30;
const STALL: f64 = 1e-10;

fn q(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn h(t: f64) -> f64 {
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    term(t) + term(1.0 - t)
}

fn dh(t: f64) -> f64 {
    let t = t.clamp(1e-300, 1.0 - 1e-16);
    ((1.0 - t) / t).log2()
}

/// Entropy coefficients of `a H(Y|X2) + b H(Y|X1) + c H(Y) - d H(Y|X1,X2)`.
#[derive(Clone, Copy)]
struct Coeffs {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Coeffs {
    /// `I(X1;Y|X2) + λ I(X2;Y)` below unit slope, `I(X1;Y) + λ I(X2;Y|X1)` above.
    fn new(lambda: f64) -> Self {
        if lambda <= 1.0 {
            Coeffs { a: 1.0 - lambda, b: 0.0, c: lambda, d: 1.0 }
        } else {
            Coeffs { a: 0.0, b: lambda - 1.0, c: 1.0, d: lambda }
        }
    }

    fn swapped(self) -> Self {
        Coeffs { a: self.b, b: self.a, ..self }
    }
}

struct Lattice {
    x: Vec<f64>,
    s: Vec<f64>,
    /// `Q(x_i + x_j - τ)`, symmetric.
    tail: Vec<Vec<f64>>,
    hq: Vec<Vec<f64>>,
}

impl Lattice {
    fn new(b: f64, tau: f64) -> Self {
        let k = (b / STEP).floor() as i64;
        let x: Vec<f64> = (-k..=k).map(|i| i as f64 * STEP).collect();
        let s = x.iter().map(|v| v * v).collect();
        let tail: Vec<Vec<f64>> = x.iter().map(|&u| x.iter().map(|&v| q(u + v - tau)).collect()).collect();
        let hq = tail.iter().map(|row| row.iter().map(|&t| h(t)).collect()).collect();
        Lattice { x, s, tail, hq }
    }

    fn n(&self) -> usize {
        self.x.len()
    }
}

fn support(w: &[f64]) -> Vec<usize> {
    (0..w.len()).filter(|&i| w[i] > 0.0).collect()
}

/// Objective and gradient in the first law, the second held fixed.
fn value_and_grad(l: &Lattice, k: Coeffs, w: &[f64], v: &[f64], grad: bool) -> (f64, Vec<f64>) {
    let sw = support(w);
    let sv = support(v);
    // m_w(i) = P(Y=0 | X = x_i), averaging over the fixed law.
    let mw: Vec<f64> = (0..l.n()).map(|i| sv.iter().map(|&j| v[j] * l.tail[i][j]).sum()).collect();
    let mv: Vec<f64> = sv.iter().map(|&j| sw.iter().map(|&i| w[i] * l.tail[i][j]).sum()).collect();
    let py: f64 = sw.iter().map(|&i| w[i] * mw[i]).sum();
    let joint: f64 = sw
        .iter()
        .map(|&i| w[i] * sv.iter().map(|&j| v[j] * l.hq[i][j]).sum::<f64>())
        .sum();
    let h_given_v: f64 = sv.iter().zip(&mv).map(|(&j, &m)| v[j] * h(m)).sum();
    let h_given_w: f64 = sw.iter().map(|&i| w[i] * h(mw[i])).sum();
    // `a` weighs H(Y | other), `b` weighs H(Y | this).
    let value = k.a * h_given_v + k.b * h_given_w + k.c * h(py) - k.d * joint;
    if !grad {
        return (value, Vec::new());
    }
    let dpy = dh(py);
    let dmv: Vec<f64> = mv.iter().map(|&m| dh(m)).collect();
    let g = (0..l.n())
        .map(|i| {
            let mut acc = k.b * h(mw[i]) + k.c * dpy * mw[i];
            for (&j, &dm) in sv.iter().zip(&dmv) {
                acc += v[j] * (k.a * dm * l.tail[i][j] - k.d * l.hq[i][j]);
            }
            acc
        })
        .collect();
    (value, g)
}

/// Best vertex of `{simplex, Σ s_i v_i ≤ P}` for the linear objective `g`.
fn lmo(l: &Lattice, g: &[f64], p: f64) -> Vec<(usize, f64)> {
    let inside: Vec<usize> = (0..l.n()).filter(|&i| l.s[i] <= p).collect();
    let outside: Vec<usize> = (0..l.n()).filter(|&i| l.s[i] > p).collect();
    let mut best = (f64::NEG_INFINITY, vec![]);
    for &i in &inside {
        if g[i] > best.0 {
            best = (g[i], vec![(i, 1.0)]);
        }
    }
    for &a in &inside {
        for &b in &outside {
            let wb = (p - l.s[a]) / (l.s[b] - l.s[a]);
            let val = (1.0 - wb) * g[a] + wb * g[b];
            if val > best.0 {
                best = (val, vec![(a, 1.0 - wb), (b, wb)]);
            }
        }
    }
    best.1
}

fn blend(w: &[f64], vertex: &[(usize, f64)], gamma: f64) -> Vec<f64> {
    let mut out: Vec<f64> = w.iter().map(|x| (1.0 - gamma) * x).collect();
    for &(i, m) in vertex {
        out[i] += gamma * m;
    }
    out
}

/// Frank-Wolfe on the first law with exact line search.
fn improve(l: &Lattice, k: Coeffs, w: &mut Vec<f64>, v: &[f64], p: f64) -> f64 {
    let mut value = value_and_grad(l, k, w, v, false).0;
    for _ in 0..FW_ITERS {
        let (_, g) = value_and_grad(l, k, w, v, true);
        let vertex = lmo(l, &g, p);
        let dual_gap: f64 = vertex.iter().map(|&(i, m)| m * g[i]).sum::<f64>()
            - w.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>();
        if dual_gap < STALL {
            break;
        }
        let phi = |gamma: f64| value_and_grad(l, k, &blend(w, &vertex, gamma), v, false).0;
        let (mut lo, mut hi) = (0.0, 1.0);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..LINE_ITERS {
            let m1 = hi - r * (hi - lo);
            let m2 = lo + r * (hi - lo);
            if phi(m1) < phi(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        let gamma = 0.5 * (lo + hi);
        let next = phi(gamma);
        if next > value {
            *w = blend(w, &vertex, gamma);
            value = next;
        }
    }
    value
}

fn antipodal(l: &Lattice, p: f64) -> Vec<f64> {
    let mut w = vec![0.0; l.n()];
    let mid = l.n() / 2;
    let k = (0..=mid).rev().find(|&k| l.s[mid + k] <= p).unwrap_or(0);
    w[mid - k] += 0.5;
    w[mid + k] += 0.5;
    w
}

fn point(l: &Lattice) -> Vec<f64> {
    let mut w = vec![0.0; l.n()];
    w[l.n() / 2] = 1.0;
    w
}

/// Zero-mean two-point law `¾δ_{-a} + ¼δ_{3a}` with `3a² ≈ P`, snapped to
/// the lattice; `sign` mirrors it.
fn skewed(l: &Lattice, p: f64, sign: f64) -> Vec<f64> {
    let mid = l.n() as i64 / 2;
    let k = ((p / 3.0).sqrt() / STEP).floor() as i64;
    let mut w = vec![0.0; l.n()];
    w[(mid - sign as i64 * k) as usize] += 0.75;
    w[(mid + sign as i64 * 3 * k) as usize] += 0.25;
    w
}

/// Largest objective found over a few alternating starts.
pub fn grid_optimum(lambda: f64, p1: f64, p2: f64, tau: f64, b: f64) -> f64 {
    let l = Lattice::new(b, tau);
    let k = Coeffs::new(lambda);
    let starts = [
        (antipodal(&l, p1), antipodal(&l, p2)),
        (antipodal(&l, p1), point(&l)),
        (point(&l), antipodal(&l, p2)),
        (skewed(&l, p1, 1.0), skewed(&l, p2, 1.0)),
        (skewed(&l, p1, 1.0), skewed(&l, p2, -1.0)),
    ];
    let mut best = f64::NEG_INFINITY;
    for (mut w1, mut w2) in starts {
        let mut value = f64::NEG_INFINITY;
        for _ in 0..ROUNDS {
            improve(&l, k, &mut w1, &w2, p1);
            let next = improve(&l, k.swapped(), &mut w2, &w1, p2);
            if next - value < STALL {
                value = value.max(next);
                break;
            }
            value = next;
        }
        best = best.max(value);
    }
    best
}
