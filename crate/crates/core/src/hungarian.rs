//! Rectangular linear assignment (shortest augmenting path with potentials).

use faer::Mat;

/// Optimal injective assignment of rows to columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `row_to_col[i]` is the column matched to row `i`, if any.
    pub row_to_col: Vec<Option<usize>>,
    pub total_cost: f64,
}

impl Assignment {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_to_col.iter().enumerate().filter_map(|(i, c)| c.map(|c| (i, c)))
    }

    /// Inverse map: the row matched to each of `ncols` columns.
    pub fn col_to_row(&self, ncols: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; ncols];
        for (i, j) in self.pairs() {
            out[j] = Some(i);
        }
        out
    }
}

/// Minimum-cost matching of `min(M, N)` pairs for an `M × N` cost matrix.
///
/// Entries must be finite. Rows are inserted in index order and columns are
/// scanned in index order with strict comparisons, so ties resolve towards
/// lower indices and results are reproducible.
pub fn hungarian(cost: &Mat<f64>) -> Assignment {
    let (nr, nc) = (cost.nrows(), cost.ncols());
    debug_assert!((0..nr).all(|i| (0..nc).all(|j| cost[(i, j)].is_finite())), "cost entries must be finite");
    if nr == 0 || nc == 0 {
        return Assignment { row_to_col: vec![None; nr], total_cost: 0.0 };
    }
    if nr > nc {
        let t = hungarian(&cost.transpose().to_owned());
        let mut row_to_col = vec![None; nr];
        for (c, r) in t.pairs() {
            row_to_col[r] = Some(c);
        }
        return Assignment { row_to_col, total_cost: t.total_cost };
    }

    // 1-based potentials; column 0 is the virtual root.
    let (n, m) = (nr, nc);
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
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

    let mut row_to_col = vec![None; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = Some(j - 1);
        }
    }
    let total_cost = row_to_col.iter().enumerate().filter_map(|(i, c)| c.map(|c| cost[(i, c)])).sum();
    Assignment { row_to_col, total_cost }
}
