use serde::{Deserialize, Serialize};

/// One-to-one partial matching of rows (detections) to columns (VEs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

/// Min-cost matching of size `min(rows, cols)` over a row-major `rows × cols`
/// matrix, using the shortest-augmenting-path Hungarian method with row and
/// column potentials. Requires `rows ≤ cols`.
fn hungarian_tall(c: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    debug_assert!(rows <= cols);
    let inf = f64::INFINITY;
    // 1-based arrays with a virtual column 0.
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut p = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    for i in 1..=rows {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; cols + 1];
        let mut used = vec![false; cols + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=cols {
                if !used[j] {
                    let cur = c[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![usize::MAX; rows];
    for j in 1..=cols {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Optimal assignment value and pairs for an arbitrary rectangular matrix.
///
/// The matrix is padded to a square with a constant sentinel larger than any
/// real entry; padded rows or columns absorb the surplus side.
pub fn min_cost_matching(c: &[f64], rows: usize, cols: usize) -> Assignment {
    if rows == 0 || cols == 0 {
        return Assignment { pairs: Vec::new(), total_cost: 0.0 };
    }
    let n = rows.max(cols);
    let max_abs = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sentinel = 2.0 * max_abs + 1.0;
    let mut sq = vec![sentinel; n * n];
    for r in 0..rows {
        sq[r * n..r * n + cols].copy_from_slice(&c[r * cols..(r + 1) * cols]);
    }
    let r2c = hungarian_tall(&sq, n, n);
    let mut pairs = Vec::new();
    let mut total = 0.0;
    for (r, &col) in r2c.iter().enumerate().take(rows) {
        if col < cols {
            pairs.push((r, col));
            total += c[r * cols + col];
        }
    }
    Assignment { pairs, total_cost: total }
}

/// Optimal assignment whose sorted pair list is lexicographically smallest
/// among all optima (within a relative tolerance of `1e-9`).
pub fn solve_lexicographic(c: &[f64], rows: usize, cols: usize) -> Assignment {
    let opt = min_cost_matching(c, rows, cols);
    let size = rows.min(cols);
    if size == 0 {
        return opt;
    }
    let tol = 1e-9 * opt.total_cost.abs().max(1.0);
    let mut row_free: Vec<bool> = vec![true; rows];
    let mut col_free: Vec<bool> = vec![true; cols];
    let mut fixed: Vec<(usize, usize)> = Vec::new();
    let mut fixed_cost = 0.0;

    // Cost of the best completion using rows after `k` and free columns.
    let completion = |k: usize, row_free: &[bool], col_free: &[bool], need: usize| -> Option<f64> {
        let rs: Vec<usize> = (k + 1..rows).filter(|&r| row_free[r]).collect();
        let cs: Vec<usize> = (0..cols).filter(|&j| col_free[j]).collect();
        if need == 0 {
            return Some(0.0);
        }
        if rs.len() < need || cs.len() < need {
            return None;
        }
        let sub: Vec<f64> = rs.iter().flat_map(|&r| cs.iter().map(move |&j| c[r * cols + j])).collect();
        Some(min_cost_matching(&sub, rs.len(), cs.len()).total_cost)
    };

    for k in 0..rows {
        if fixed.len() == size {
            break;
        }
        let mut placed = false;
        for j in 0..cols {
            if !col_free[j] {
                continue;
            }
            col_free[j] = false;
            let need = size - fixed.len() - 1;
            let ok = completion(k, &row_free, &col_free, need)
                .is_some_and(|rest| fixed_cost + c[k * cols + j] + rest <= opt.total_cost + tol);
            if ok {
                fixed.push((k, j));
                fixed_cost += c[k * cols + j];
                row_free[k] = false;
                placed = true;
                break;
            }
            col_free[j] = true;
        }
        if !placed {
            row_free[k] = false;
        }
    }
    if fixed.len() != size {
        // Numerical corner case; fall back to the plain optimum.
        return opt;
    }
    Assignment { pairs: fixed, total_cost: fixed_cost }
}

/// Exhaustive minimum over all matchings of size `min(rows, cols)`; the
/// reference for small matrices.
pub fn brute_force_min(c: &[f64], rows: usize, cols: usize) -> f64 {
    fn rec(c: &[f64], rows: usize, cols: usize, r: usize, used: &mut Vec<bool>, left: usize, acc: f64, best: &mut f64) {
        if left == 0 {
            *best = best.min(acc);
            return;
        }
        if rows - r < left {
            return;
        }
        // Skip row r (only if enough rows remain).
        if rows - r - 1 >= left {
            rec(c, rows, cols, r + 1, used, left, acc, best);
        }
        for j in 0..cols {
            if !used[j] {
                used[j] = true;
                rec(c, rows, cols, r + 1, used, left - 1, acc + c[r * cols + j], best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    let size = rows.min(cols);
    if size == 0 {
        return 0.0;
    }
    rec(c, rows, cols, 0, &mut vec![false; cols], size, 0.0, &mut best);
    best
}
