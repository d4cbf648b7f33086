//! Bipartite matching helpers.

/// Whether every left vertex can be matched when left vertex `i` is
/// adjacent to the first `prefix[i]` right vertices of a common order.
///
/// Nested neighborhoods satisfy Hall's condition iff, after sorting, the
/// `t`-th smallest prefix length is at least `t`.
pub fn nested_matching_exists(prefix: &mut [usize]) -> bool {
    prefix.sort_unstable();
    prefix.iter().enumerate().all(|(t, &k)| k > t)
}

/// Maximum matching size by augmenting paths. `adj[i]` lists the right
/// vertices adjacent to left vertex `i`.
pub fn max_matching(adj: &[Vec<usize>], right: usize) -> usize {
    let mut match_right = vec![usize::MAX; right];
    let mut size = 0;
    for i in 0..adj.len() {
        let mut seen = vec![false; right];
        if augment(i, adj, &mut match_right, &mut seen) {
            size += 1;
        }
    }
    size
}

fn augment(i: usize, adj: &[Vec<usize>], match_right: &mut [usize], seen: &mut [bool]) -> bool {
    for &r in &adj[i] {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        if match_right[r] == usize::MAX || augment(match_right[r], adj, match_right, seen) {
            match_right[r] = i;
            return true;
        }
    }
    false
}

/// Minimum-cost assignment of `rows` rows to distinct columns (`rows <= cols`)
/// with row-major `cost`. Returns the column of each row.
///
/// Shortest augmenting path form of the Hungarian method, `O(rows^2 cols)`.
pub fn hungarian(cost: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    assert!(rows <= cols, "more rows than columns");
    assert_eq!(cost.len(), rows * cols);
    // 1-based potentials; column 0 is a virtual start
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut col_row = vec![0usize; cols + 1];
    let mut minv = vec![0.0; cols + 1];
    let mut used = vec![false; cols + 1];
    for i in 1..=rows {
        col_row[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = col_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=cols {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * cols + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[col_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![usize::MAX; rows];
    for j in 1..=cols {
        if col_row[j] != 0 {
            assignment[col_row[j] - 1] = j - 1;
        }
    }
    assignment
}
