//! Rectangular linear assignment with a deterministic tie-break.

/// A partial matching of rows (ground truth) to columns (predictions).
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `row_to_col[i]` is the column matched to row `i`, if any.
    pub row_to_col: Vec<Option<usize>>,
    /// Sum of the matched costs, added in row order.
    pub total: f64,
}

impl Assignment {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_to_col.iter().enumerate().filter_map(|(i, c)| c.map(|j| (i, j)))
    }
}

/// Minimum cost of a matching of size `min(rows, cols)` over the given rows
/// and columns of `cost`, with the column chosen for each row.
///
/// Shortest augmenting paths with potentials; requires `rows.len() <=
/// cols.len()` (callers transpose otherwise).
fn solve_wide(cost: &dyn Fn(usize, usize) -> f64, n: usize, m: usize) -> (f64, Vec<usize>) {
    debug_assert!(n <= m);
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // p[j]: 1-based row matched to column j; column 0 is the virtual root
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
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
    let mut row_to_col = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    let total = row_to_col.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
    (total, row_to_col)
}

/// Optimal cost of a maximum matching restricted to `rows` x `cols`.
fn min_cost(cost: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() || cols.is_empty() {
        return 0.0;
    }
    if rows.len() <= cols.len() {
        solve_wide(&|i, j| cost[rows[i]][cols[j]], rows.len(), cols.len()).0
    } else {
        solve_wide(&|i, j| cost[rows[j]][cols[i]], cols.len(), rows.len()).0
    }
}

/// Minimum-cost maximum matching of an `N_gt x N_pred` cost matrix.
///
/// Among optimal matchings, rows are fixed in order to the lowest column that
/// still admits an optimum (leaving a row unmatched is tried last). Costs
/// within `1e-9 * (1 + |optimum|)` of the optimum count as ties.
pub fn hungarian_assign(cost: &[Vec<f64>]) -> Assignment {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    assert!(cost.iter().all(|r| r.len() == m), "ragged cost matrix");
    if n == 0 || m == 0 {
        return Assignment {
            row_to_col: vec![None; n],
            total: 0.0,
        };
    }
    let k = n.min(m);
    let all_rows: Vec<usize> = (0..n).collect();
    let all_cols: Vec<usize> = (0..m).collect();
    let optimum = min_cost(cost, &all_rows, &all_cols);
    let tol = 1e-9 * (1.0 + optimum.abs());

    let mut row_to_col = vec![None; n];
    let mut free_cols = all_cols;
    let mut fixed_cost = 0.0;
    let mut matched = 0usize;
    for i in 0..n {
        let rest: Vec<usize> = (i + 1..n).collect();
        let need = k - matched;
        let mut chosen = false;
        for (pos, &j) in free_cols.iter().enumerate() {
            let mut cols = free_cols.clone();
            cols.remove(pos);
            if rest.len().min(cols.len()) < need - 1 {
                continue;
            }
            let c = fixed_cost + cost[i][j] + min_cost(cost, &rest, &cols);
            if (c - optimum).abs() <= tol {
                row_to_col[i] = Some(j);
                fixed_cost += cost[i][j];
                matched += 1;
                free_cols.remove(pos);
                chosen = true;
                break;
            }
        }
        if !chosen {
            // leaving row i unmatched must be the remaining optimum
            debug_assert!(rest.len().min(free_cols.len()) >= need);
        }
    }
    let total = row_to_col
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|j| cost[i][j]))
        .sum();
    Assignment { row_to_col, total }
}
