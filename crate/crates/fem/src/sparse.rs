//! Compressed-row storage and linear systems with essential constraints.

use std::collections::BTreeMap;
use std::sync::Arc;

/// Sorted compressed-row sparsity pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrPattern {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
}

impl CsrPattern {
    /// Builds from per-row column lists (duplicates allowed).
    pub fn from_rows(n_cols: usize, mut rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let total: usize = rows.iter().map(|r| r.len()).sum();
        let mut col_idx = Vec::with_capacity(total);
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col_idx.extend_from_slice(r);
            row_ptr.push(col_idx.len());
        }
        Self { n_rows: rows.len(), n_cols, row_ptr, col_idx }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    #[inline]
    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let (a, b) = (self.row_ptr[row], self.row_ptr[row + 1]);
        self.col_idx[a..b].binary_search(&col).ok().map(|k| a + k)
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub pattern: Arc<CsrPattern>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<CsrPattern>) -> Self {
        let n = pattern.nnz();
        Self { pattern, values: vec![0.0; n] }
    }

    pub fn identity(n: usize) -> Self {
        let p = CsrPattern::from_rows(n, (0..n).map(|i| vec![i]).collect());
        Self { pattern: Arc::new(p), values: vec![1.0; n] }
    }

    /// Dense row-major input, keeping exact zeros out of the pattern except the diagonal.
    pub fn from_dense(rows: usize, cols: usize, a: &[f64]) -> Self {
        let pat: Vec<Vec<usize>> =
            (0..rows).map(|i| (0..cols).filter(|&j| a[i * cols + j] != 0.0 || i == j).collect()).collect();
        let pattern = Arc::new(CsrPattern::from_rows(cols, pat));
        let mut m = Self::zeros(pattern);
        for i in 0..rows {
            for j in 0..cols {
                if a[i * cols + j] != 0.0 {
                    m.add(i, j, a[i * cols + j]);
                }
            }
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.pattern.n_cols
    }

    /// Adds to an entry of the pattern; panics if absent.
    #[inline]
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let k = self.pattern.find(row, col).unwrap_or_else(|| panic!("entry ({row},{col}) outside pattern"));
        self.values[k] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern.find(row, col).map_or(0.0, |k| self.values[k])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let p = &self.pattern;
        (0..p.n_rows)
            .map(|r| (p.row_ptr[r]..p.row_ptr[r + 1]).map(|k| self.values[k] * x[p.col_idx[k]]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let (r, c) = (self.n_rows(), self.n_cols());
        let mut d = vec![0.0; r * c];
        for i in 0..r {
            for k in self.pattern.row_ptr[i]..self.pattern.row_ptr[i + 1] {
                d[i * c + self.pattern.col_idx[k]] += self.values[k];
            }
        }
        d
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    /// Replaces row `r` by the unit row `e_r`.
    pub fn set_identity_row(&mut self, r: usize) {
        let (a, b) = (self.pattern.row_ptr[r], self.pattern.row_ptr[r + 1]);
        for k in a..b {
            self.values[k] = if self.pattern.col_idx[k] == r { 1.0 } else { 0.0 };
        }
        assert!(self.pattern.find(r, r).is_some(), "pattern lacks diagonal entry {r}");
    }
}

/// Matrix, right-hand side and essential (Dirichlet) data.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub constrained: BTreeMap<usize, f64>,
}

impl SparseSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>) -> Self {
        Self { matrix, rhs, constrained: BTreeMap::new() }
    }

    pub fn constrain(&mut self, dof: usize, value: f64) {
        self.constrained.insert(dof, value);
    }

    /// Makes constrained rows identity rows with the prescribed value.
    pub fn apply_constraints(&mut self) {
        for (&r, &v) in &self.constrained {
            self.matrix.set_identity_row(r);
            self.rhs[r] = v;
        }
    }

    /// Residual `A x − b`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.matrix.matvec(x);
        r.iter_mut().zip(&self.rhs).for_each(|(a, b)| *a -= b);
        r
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
