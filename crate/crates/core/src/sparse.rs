//! Compressed sparse row storage for the assembled real matrices.

use faer::Mat;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// the order given, so the result is deterministic for a fixed input order.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let p = next[r];
            cols[p] = c;
            vals[p] = v;
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for r in 0..nrows {
            let (lo, hi) = (counts[r], counts[r + 1]);
            // Stable sort keeps duplicate accumulation order fixed.
            let mut entries: Vec<(usize, f64)> = (lo..hi).map(|p| (cols[p], vals[p])).collect();
            entries.sort_by_key(|e| e.0);
            let mut iter = entries.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn from_dense(a: &Mat<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match cols.binary_search(&j) {
            Ok(p) => self.values[self.row_ptr[i] + p],
            Err(_) => 0.0,
        }
    }

    /// Iterates `(row, col, value)` over stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (r, self.col_idx[p], self.values[p]))
        })
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut a = Mat::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.iter() {
            a[(r, c)] = v;
        }
        a
    }

    pub fn transpose(&self) -> Self {
        let t: Vec<_> = self.iter().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|p| self.values[p] * x[self.col_idx[p]]).sum())
            .collect()
    }

    /// `self · B` for a dense real or complex right-hand side.
    pub fn mul_dense<T>(&self, b: &Mat<T>) -> Mat<T>
    where
        T: Copy + std::ops::AddAssign + std::ops::Mul<f64, Output = T> + num_traits::Zero,
    {
        assert_eq!(b.nrows(), self.ncols);
        let mut out = Mat::from_fn(self.nrows, b.ncols(), |_, _| T::zero());
        for j in 0..b.ncols() {
            for r in 0..self.nrows {
                let mut acc = T::zero();
                for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += b[(self.col_idx[p], j)] * self.values[p];
                }
                out[(r, j)] = acc;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// max |A - sign·Aᵀ| over entries; `sign = 1` checks symmetry, `-1` skewness.
    pub fn max_deviation_from_transpose(&self, sign: f64) -> f64 {
        self.iter().map(|(r, c, v)| (v - sign * self.get(c, r)).abs()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Writes `i j value` lines (0-based), one per stored entry.
    pub fn to_triplet_text(&self) -> String {
        let mut s = String::new();
        for (r, c, v) in self.iter() {
            s.push_str(&format!("{r} {c} {v:?}\n"));
        }
        s
    }
}
