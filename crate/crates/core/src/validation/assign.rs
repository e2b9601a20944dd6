//! Minimum-cost assignment (Kuhn-Munkres with potentials).

/// Solves a rectangular assignment problem. `cost[i][j]` of `None` marks a
/// forbidden pair. Among assignments with the most allowed pairs, returns one
/// with minimum total cost as `(row, col)` pairs sorted by row.
pub fn assign(cost: &[Vec<Option<f64>>]) -> Vec<(usize, usize)> {
    let rows = cost.len();
    let cols = cost.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let max_cost = cost.iter().flatten().flatten().fold(0.0f64, |m, &c| m.max(c.abs()));
    // any allowed pair outweighs the total cost of every other allowed pair
    let big = (max_cost + 1.0) * (rows.min(cols) as f64 + 1.0);
    let n = rows.max(cols);
    let w = |i: usize, j: usize| -> f64 {
        match cost.get(i).and_then(|r| r.get(j)).copied().flatten() {
            Some(c) => c - big,
            None => 0.0,
        }
    };
    let col_of_row = hungarian(n, w);
    (0..rows)
        .filter_map(|i| {
            let j = col_of_row[i];
            (j < cols && cost[i][j].is_some()).then_some((i, j))
        })
        .collect()
}

/// Square `n x n` Hungarian algorithm; returns the column assigned to each row.
fn hungarian(n: usize, w: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let inf = f64::INFINITY;
    // 1-based potentials and matching; p[j] = row matched to column j
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = w(i0 - 1, j - 1) - u[i0] - v[j];
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
            for j in 0..=n {
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
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        col_of_row[p[j] - 1] = j - 1;
    }
    col_of_row
}
