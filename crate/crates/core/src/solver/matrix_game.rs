//! Exact values of finite zero-sum matrix games.
//!
//! The row player minimizes, the column player maximizes. Solved as the
//! linear program `max Σx s.t. A'ᵀx ≤ 1, x ≥ 0` on the affinely rescaled
//! matrix `A' = 1 + (A - min A)/(max A - min A)` with a dense tableau simplex
//! and Bland's rule; the
//! column strategy is read off the dual prices of the slack columns.

use serde::Serialize;

use crate::error::{MroError, Result};

const PIVOT_EPS: f64 = 1e-12;

/// Value and optimal mixed strategies of a matrix game.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixGameSolution {
    pub value: f64,
    /// Minimizing (row) player's strategy.
    pub row_strategy: Vec<f64>,
    /// Maximizing (column) player's strategy.
    pub column_strategy: Vec<f64>,
}

/// `min_{p ∈ Δ(rows)} max_{q ∈ Δ(cols)} pᵀ A q` for `payoff[row][col]`.
pub fn mixed_game_value(payoff: &[Vec<f64>]) -> Result<MatrixGameSolution> {
    let rows = payoff.len();
    if rows == 0 || payoff[0].is_empty() {
        return Err(MroError::InvalidArgument("empty payoff matrix".into()));
    }
    let cols = payoff[0].len();
    if payoff.iter().any(|r| r.len() != cols) {
        return Err(MroError::InvalidArgument("ragged payoff matrix".into()));
    }
    if payoff.iter().flatten().any(|v| !v.is_finite()) {
        return Err(MroError::NonFinite("payoff matrix entry".into()));
    }
    let min = payoff.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let max = payoff.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    // scale keeps the tableau well conditioned for tiny or huge payoffs
    let scale = (max - min).max(1e-300);
    let shifted = |r: usize, c: usize| 1.0 + (payoff[r][c] - min) / scale;

    // Tableau: `cols` constraint rows over `rows` structural + `cols` slack
    // variables, plus the objective row. Last column is the right-hand side.
    let width = rows + cols + 1;
    let mut t = vec![vec![0.0; width]; cols + 1];
    for c in 0..cols {
        for r in 0..rows {
            t[c][r] = shifted(r, c);
        }
        t[c][rows + c] = 1.0;
        t[c][width - 1] = 1.0;
    }
    for r in 0..rows {
        t[cols][r] = -1.0;
    }
    let mut basis: Vec<usize> = (rows..rows + cols).collect();

    let max_iter = 50 * (rows + cols + 10);
    let mut iter = 0;
    loop {
        iter += 1;
        if iter > max_iter {
            return Err(MroError::Oracle("simplex did not terminate".into()));
        }
        // Bland: lowest-index improving column
        let Some(enter) = (0..rows + cols).find(|&j| t[cols][j] < -PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..cols {
            let a = t[i][enter];
            if a > PIVOT_EPS {
                let ratio = t[i][width - 1] / a;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - PIVOT_EPS || (ratio <= lr + PIVOT_EPS && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let (pivot_row, _) = leave.ok_or_else(|| MroError::Oracle("unbounded game LP".into()))?;
        let p = t[pivot_row][enter];
        for v in t[pivot_row].iter_mut() {
            *v /= p;
        }
        let pivot = t[pivot_row].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i == pivot_row {
                continue;
            }
            let factor = row[enter];
            if factor != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot) {
                    *v -= factor * pv;
                }
            }
        }
        basis[pivot_row] = enter;
    }

    let mut x = vec![0.0; rows];
    for (i, &b) in basis.iter().enumerate() {
        if b < rows {
            x[b] = t[i][width - 1];
        }
    }
    let total: f64 = x.iter().sum();
    if total <= 0.0 {
        return Err(MroError::Oracle("degenerate game LP".into()));
    }
    let row_strategy = normalize(x);
    let column_strategy = normalize((0..cols).map(|c| t[cols][rows + c]).collect());
    let shifted_value = 1.0 / total;
    let value = (shifted_value - 1.0) * scale + min;
    Ok(MatrixGameSolution {
        value,
        row_strategy,
        column_strategy,
    })
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

/// `max_col pᵀA` for a row strategy `p`.
pub fn row_strategy_value(payoff: &[Vec<f64>], p: &[f64]) -> f64 {
    (0..payoff[0].len())
        .map(|c| payoff.iter().zip(p).map(|(r, pr)| pr * r[c]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `min_row A q` for a column strategy `q`.
pub fn column_strategy_value(payoff: &[Vec<f64>], q: &[f64]) -> f64 {
    payoff
        .iter()
        .map(|r| r.iter().zip(q).map(|(a, qc)| a * qc).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}
