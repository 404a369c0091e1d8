//! Compressed sparse row matrix, the input type of every solver.

use crate::error::{Error, Result};

/// Row-compressed sparse matrix of `f64` values.
///
/// Column indices are strictly increasing within a row and no explicit
/// zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// An empty matrix with `n_cols` columns, to be filled with [`push_row`](Self::push_row).
    pub fn with_cols(n_cols: usize) -> Self {
        CsrMatrix {
            n_rows: 0,
            n_cols,
            indptr: vec![0],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Appends a row given as `(column, value)` pairs in strictly increasing
    /// column order. Zero values are dropped.
    pub fn push_row<I>(&mut self, entries: I) -> Result<()>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let start = self.indices.len();
        let mut last: Option<usize> = None;
        for (col, value) in entries {
            if col >= self.n_cols || last.is_some_and(|l| col <= l) {
                self.indices.truncate(start);
                self.values.truncate(start);
                return Err(Error::Dimension(format!(
                    "row {}: column {col} out of order or out of range (n_cols = {})",
                    self.n_rows, self.n_cols
                )));
            }
            last = Some(col);
            if value != 0.0 {
                self.indices.push(col as u32);
                self.values.push(value);
            }
        }
        self.n_rows += 1;
        self.indptr.push(self.indices.len());
        Ok(())
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut m = CsrMatrix::with_cols(n_cols);
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged dense input");
            m.push_row(row.iter().copied().enumerate())
                .expect("dense rows are ordered");
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CsrMatrix::with_cols(n);
        for i in 0..n {
            m.push_row([(i, 1.0)]).expect("ordered");
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows)
            .map(|i| {
                let mut row = vec![0.0; self.n_cols];
                let (idx, val) = self.row(i);
                for (&j, &v) in idx.iter().zip(val) {
                    row[j as usize] = v;
                }
                row
            })
            .collect()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    /// Row `i` as `(column, value)` pairs.
    pub fn row_entries(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (idx, val) = self.row(i);
        idx.iter().map(|&j| j as usize).zip(val.iter().copied())
    }

    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        let mut acc = 0.0;
        for (&j, &x) in idx.iter().zip(val) {
            acc += x * v[j as usize];
        }
        acc
    }

    pub fn row_sq_norm(&self, i: usize) -> f64 {
        self.row(i).1.iter().map(|v| v * v).sum()
    }

    /// `out = X v`.
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n_cols);
        debug_assert_eq!(out.len(), self.n_rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row_dot(i, v);
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        self.mul_vec_into(v, &mut out);
        out
    }

    /// `out = Xᵀ u`.
    pub fn tmul_vec_into(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.n_rows);
        debug_assert_eq!(out.len(), self.n_cols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &ui) in u.iter().enumerate() {
            if ui == 0.0 {
                continue;
            }
            let (idx, val) = self.row(i);
            for (&j, &x) in idx.iter().zip(val) {
                out[j as usize] += x * ui;
            }
        }
    }

    pub fn tmul_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cols];
        self.tmul_vec_into(u, &mut out);
        out
    }

    /// Fused `out[k] = X v[k]` for several vectors; each output is
    /// bit-identical to the corresponding [`mul_vec_into`](Self::mul_vec_into).
    pub fn mul_multi_into(&self, vs: &[&[f64]], out: &mut [Vec<f64>]) {
        let k = vs.len();
        let mut acc = vec![0.0; k];
        for i in 0..self.n_rows {
            acc.iter_mut().for_each(|a| *a = 0.0);
            let (idx, val) = self.row(i);
            for (&j, &x) in idx.iter().zip(val) {
                let j = j as usize;
                for (a, v) in acc.iter_mut().zip(vs) {
                    *a += x * v[j];
                }
            }
            for (o, a) in out.iter_mut().zip(&acc) {
                o[i] = *a;
            }
        }
    }

    /// Fused `out[k] = Xᵀ u[k]`; bit-identical to separate
    /// [`tmul_vec_into`](Self::tmul_vec_into) calls.
    pub fn tmul_multi_into(&self, us: &[&[f64]], out: &mut [Vec<f64>]) {
        for o in out.iter_mut() {
            o.iter_mut().for_each(|x| *x = 0.0);
        }
        for i in 0..self.n_rows {
            let (idx, val) = self.row(i);
            for (o, u) in out.iter_mut().zip(us) {
                let ui = u[i];
                if ui == 0.0 {
                    continue;
                }
                for (&j, &x) in idx.iter().zip(val) {
                    o[j as usize] += x * ui;
                }
            }
        }
    }

    /// Per-column mean over rows.
    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for (&j, &x) in self.indices.iter().zip(&self.values) {
            sums[j as usize] += x;
        }
        if self.n_rows > 0 {
            let n = self.n_rows as f64;
            sums.iter_mut().for_each(|s| *s /= n);
        }
        sums
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> CsrMatrix {
        let nnz: usize = rows.iter().map(|&i| self.indptr[i + 1] - self.indptr[i]).sum();
        let mut out = CsrMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            indptr: Vec::with_capacity(rows.len() + 1),
            indices: Vec::with_capacity(nnz),
            values: Vec::with_capacity(nnz),
        };
        out.indptr.push(0);
        for &i in rows {
            let (idx, val) = self.row(i);
            out.indices.extend_from_slice(idx);
            out.values.extend_from_slice(val);
            out.indptr.push(out.indices.len());
        }
        out
    }

    /// Checks the storage invariants; used by tests.
    pub fn check_invariants(&self) -> bool {
        self.indptr.len() == self.n_rows + 1
            && (0..self.n_rows).all(|i| {
                let (idx, val) = self.row(i);
                idx.windows(2).all(|w| w[0] < w[1])
                    && idx.iter().all(|&j| (j as usize) < self.n_cols)
                    && val.iter().all(|&v| v != 0.0)
            })
    }
}
