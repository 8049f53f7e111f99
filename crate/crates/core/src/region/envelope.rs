//! Dense two-phase simplex for the power-allocation linear program.
//!
//! The program has three rows (two power budgets and the normalization),
//! so the tableau stays tiny. Bland's rule prevents cycling.

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

/// Maximizes `Σ π_c g_c` subject to `Σ π_c a_c ≤ P1`, `Σ π_c b_c ≤ P2`,
/// `Σ π_c = 1`, `π ≥ 0`. Returns the basic optimal `π` as
/// `(column, weight)` pairs with positive weight.
pub(crate) fn allocate(g: &[f64], a: &[f64], b: &[f64], p1: f64, p2: f64) -> Result<Vec<(usize, f64)>> {
    let n = g.len();
    if n == 0 {
        return Err(Error::Infeasible("empty power table".into()));
    }
    // Columns: cells, slack 1, slack 2, artificial.
    let cols = n + 3;
    let (s1, s2, art) = (n, n + 1, n + 2);
    let mut t = vec![vec![0.0; cols + 1]; 3];
    for c in 0..n {
        t[0][c] = a[c];
        t[1][c] = b[c];
        t[2][c] = 1.0;
    }
    t[0][s1] = 1.0;
    t[1][s2] = 1.0;
    t[2][art] = 1.0;
    t[0][cols] = p1;
    t[1][cols] = p2;
    t[2][cols] = 1.0;
    let mut basis = [s1, s2, art];

    // Phase 1: drive the artificial variable out.
    let mut cost = vec![0.0; cols];
    cost[art] = -1.0;
    run(&mut t, &mut basis, &cost, cols)?;
    let infeasibility: f64 = (0..3).filter(|&r| basis[r] == art).map(|r| t[r][cols]).sum();
    if infeasibility > 1e-9 {
        return Err(Error::Infeasible("the power table does not cover the budget".into()));
    }
    // A degenerate artificial left in the basis is pivoted onto any cell.
    for r in 0..3 {
        if basis[r] == art {
            if let Some(c) = (0..art).find(|&c| t[r][c].abs() > EPS) {
                pivot(&mut t, r, c);
                basis[r] = c;
            }
        }
    }

    // Phase 2 with the artificial column frozen out.
    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(g);
    cost[art] = f64::NEG_INFINITY;
    run(&mut t, &mut basis, &cost, cols)?;
    let mut out: Vec<(usize, f64)> = (0..3)
        .filter(|&r| basis[r] < n && t[r][cols] > EPS)
        .map(|r| (basis[r], t[r][cols]))
        .collect();
    let total: f64 = out.iter().map(|o| o.1).sum();
    out.iter_mut().for_each(|o| o.1 /= total);
    out.sort_by_key(|o| o.0);
    Ok(out)
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let p = t[row][col];
    t[row].iter_mut().for_each(|v| *v /= p);
    let pivot_row = t[row].clone();
    for (r, line) in t.iter_mut().enumerate() {
        if r == row {
            continue;
        }
        let f = line[col];
        if f != 0.0 {
            line.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= f * pv);
        }
    }
}

fn run(t: &mut [Vec<f64>], basis: &mut [usize; 3], cost: &[f64], cols: usize) -> Result<()> {
    for _ in 0..10_000 {
        // Reduced cost of column c: cost_c - Σ_r cost_{basis r} t[r][c].
        let price = |c: usize| {
            let base: f64 = (0..3)
                .map(|r| {
                    let cb = cost[basis[r]];
                    if cb.is_finite() {
                        cb * t[r][c]
                    } else {
                        0.0
                    }
                })
                .sum();
            cost[c] - base
        };
        let Some(enter) = (0..cols).find(|&c| cost[c].is_finite() && !basis.contains(&c) && price(c) > EPS) else {
            return Ok(());
        };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..3 {
            if t[r][enter] > EPS {
                let ratio = t[r][cols] / t[r][enter];
                let better = match leave {
                    None => true,
                    Some((lr, lv)) => ratio < lv - EPS || (ratio <= lv + EPS && basis[r] < basis[lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::Numerical("unbounded power allocation".into()));
        };
        pivot(t, row, enter);
        basis[row] = enter;
    }
    Err(Error::Numerical("simplex iteration limit reached".into()))
}
