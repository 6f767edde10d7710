//! Rectangular minimum-cost assignment (Kuhn–Munkres with potentials).
//!
//! Forbidden pairs are marked with `f64::INFINITY`. The solver first
//! maximises the number of admissible pairs, then minimises their total
//! cost. Ties are resolved by scan order: lowest row first, then lowest
//! column.

use super::AssociationError;

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `row_to_col[i]` is the column assigned to row `i`, if any.
    pub row_to_col: Vec<Option<usize>>,
    pub total_cost: f64,
}

impl Assignment {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_to_col.iter().enumerate().filter_map(|(r, c)| c.map(|c| (r, c)))
    }

    pub fn col_to_row(&self, cols: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; cols];
        for (r, c) in self.pairs() {
            out[c] = Some(r);
        }
        out
    }
}

/// Solves the assignment problem for an `n × m` cost matrix.
///
/// With `strict` set, a row whose entries are all forbidden is an error
/// rather than an unassigned row.
pub fn hungarian_assign(cost: &[Vec<f64>], strict: bool) -> Result<Assignment, AssociationError> {
    let n = cost.len();
    if n == 0 {
        return Ok(Assignment { row_to_col: Vec::new(), total_cost: 0.0 });
    }
    let m = cost[0].len();
    if cost.iter().any(|r| r.len() != m) || cost.iter().flatten().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
        return Err(AssociationError::InvalidCostMatrix);
    }
    if strict {
        if let Some(i) = cost.iter().position(|r| r.iter().all(|c| c.is_infinite())) {
            return Err(AssociationError::AllForbiddenRow(i));
        }
    }
    if m == 0 {
        return Ok(Assignment { row_to_col: vec![None; n], total_cost: 0.0 });
    }

    // A forbidden pair costs more than any difference between finite
    // assignments, so cardinality dominates cost.
    let finite = cost.iter().flatten().copied().filter(|c| c.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c), hi.max(c)));
    let big = if lo.is_finite() { (hi - lo) * n.min(m) as f64 + hi.abs() + 1.0 } else { 1.0 };
    let at = |i: usize, j: usize| {
        let c = cost[i][j];
        if c.is_finite() {
            c
        } else {
            big
        }
    };

    let row_to_col = if n <= m {
        solve_rows_le_cols(n, m, at)
    } else {
        let by_col = solve_rows_le_cols(m, n, |i, j| at(j, i));
        let mut out = vec![None; n];
        for (c, r) in by_col.into_iter().enumerate() {
            if let Some(r) = r {
                out[r] = Some(c);
            }
        }
        out
    };

    let mut total = 0.0;
    let row_to_col: Vec<Option<usize>> = row_to_col
        .into_iter()
        .enumerate()
        .map(|(i, c)| c.filter(|&j| cost[i][j].is_finite()))
        .collect();
    for (i, c) in row_to_col.iter().enumerate() {
        if let Some(j) = c {
            total += cost[i][*j];
        }
    }
    Ok(Assignment { row_to_col, total_cost: total })
}

/// Shortest augmenting path with dual potentials; requires `n <= m`.
fn solve_rows_le_cols(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Vec<Option<usize>> {
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // p[j]: row (1-based) matched to column j; 0 = free.
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
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

    let mut out = vec![None; n];
    for j in 1..=m {
        if p[j] > 0 {
            out[p[j] - 1] = Some(j - 1);
        }
    }
    out
}
