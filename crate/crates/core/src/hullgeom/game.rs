//! Zero-sum matrix games solved by a dense tableau simplex.
//!
//! The column player picks `λ ∈ Δ_cols` to minimize `max_i (Pλ)_i`; the row
//! player picks `μ ∈ Δ_rows` to maximize `min_c (μᵀP)_c`. After shifting `P`
//! to be positive the column player's problem is
//! `max Σw  s.t.  Qw ≤ 1, w ≥ 0`, whose slack basis is feasible, and the row
//! strategy is read off the optimal reduced costs of the slacks.

const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct GameSolution {
    #[allow(dead_code)]
    pub value: f64,
    pub col_strategy: Vec<f64>,
    pub row_strategy: Vec<f64>,
}

/// `payoff[i][c]`: payoff to the row player when row `i` meets column `c`.
pub(crate) fn solve_game(payoff: &[Vec<f64>]) -> GameSolution {
    let rows = payoff.len();
    let cols = payoff[0].len();
    let min = payoff.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let max = payoff.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = (max - min).max(1e-300);
    // Q = (P − min)/scale + 1 has entries in [1, 2].
    let width = cols + rows + 1;
    let mut t = vec![0.0; (rows + 1) * width];
    for i in 0..rows {
        let row = &mut t[i * width..(i + 1) * width];
        for c in 0..cols {
            row[c] = (payoff[i][c] - min) / scale + 1.0;
        }
        row[cols + i] = 1.0;
        row[width - 1] = 1.0;
    }
    let obj = rows * width;
    for c in 0..cols {
        t[obj + c] = -1.0;
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    let max_pivots = 50 * (rows + cols) + 1000;
    let mut degenerate_run = 0usize;
    for _ in 0..max_pivots {
        let bland = degenerate_run > rows + cols;
        let entering = if bland {
            (0..cols + rows).find(|&j| t[obj + j] < -PIVOT_TOL)
        } else {
            let mut best: Option<(usize, f64)> = None;
            for j in 0..cols + rows {
                let r = t[obj + j];
                if r < -PIVOT_TOL && best.is_none_or(|(_, b)| r < b) {
                    best = Some((j, r));
                }
            }
            best.map(|(j, _)| j)
        };
        let Some(e) = entering else { break };

        let mut leave: Option<(usize, f64)> = None;
        for i in 0..rows {
            let a = t[i * width + e];
            if a > PIVOT_TOL {
                let ratio = t[i * width + width - 1] / a;
                let better = match leave {
                    None => true,
                    Some((li, lr)) => ratio < lr - 1e-15 || (ratio <= lr + 1e-15 && basis[i] < basis[li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        // Q > 0 bounds the problem, so a leaving row always exists.
        let Some((l, ratio)) = leave else { break };
        degenerate_run = if ratio <= 1e-15 { degenerate_run + 1 } else { 0 };
        pivot(&mut t, width, rows, l, e);
        basis[l] = e;
    }

    let mut w = vec![0.0; cols];
    for (i, &b) in basis.iter().enumerate() {
        if b < cols {
            w[b] = t[i * width + width - 1].max(0.0);
        }
    }
    let mut u: Vec<f64> = (0..rows).map(|i| t[obj + cols + i].max(0.0)).collect();
    normalize(&mut w);
    normalize(&mut u);
    let total = t[obj + width - 1];
    let value_q = if total > 0.0 { 1.0 / total } else { 1.0 };
    GameSolution { value: (value_q - 1.0) * scale + min, col_strategy: w, row_strategy: u }
}

fn pivot(t: &mut [f64], width: usize, rows: usize, l: usize, e: usize) {
    let p = t[l * width + e];
    for j in 0..width {
        t[l * width + j] /= p;
    }
    let pivot_row: Vec<f64> = t[l * width..(l + 1) * width].to_vec();
    for i in 0..=rows {
        if i == l {
            continue;
        }
        let f = t[i * width + e];
        if f == 0.0 {
            continue;
        }
        let row = &mut t[i * width..(i + 1) * width];
        for (x, pr) in row.iter_mut().zip(&pivot_row) {
            *x -= f * pr;
        }
        row[e] = 0.0;
    }
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else if !v.is_empty() {
        let k = v.len() as f64;
        v.iter_mut().for_each(|x| *x = 1.0 / k);
    }
}
