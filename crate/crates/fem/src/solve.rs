//! Direct sparse LU solves.
//!
//! The fill-reducing ordering and the supernode partition come from a symbolic
//! Cholesky analysis of the symmetrized pattern (AMD and supernodal symbolic
//! factorization from `faer`). The numeric factorization is a right-looking
//! supernodal LU with row pivoting inside each diagonal block, applied to the
//! row- and column-equilibrated matrix. Pivots that stay below `√ε` are
//! perturbed; solves refine iteratively against the original matrix.

use std::sync::Arc;

use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_unit_lower_triangular_in_place};
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, SymbolicCholeskyRaw, SymmetricOrdering,
};
use faer::sparse::linalg::SupernodalThreshold;
use faer::sparse::SymbolicSparseColMatRef;
use faer::{Accum, Mat, MatMut, MatRef, Par, Side};

use crate::error::{FemError, Result};
use crate::sparse::{norm2, CsrMatrix, CsrPattern, SparseSystem};

/// Ordering, supernodes and the scatter map of one sparsity pattern.
#[derive(Debug)]
struct Symbolic {
    /// New index to original index.
    fwd: Vec<usize>,
    /// Original index to new index.
    inv: Vec<usize>,
    begin: Vec<usize>,
    /// Off-diagonal row pattern of each supernode, sorted, in new numbering.
    rows: Vec<Vec<usize>>,
    owner: Vec<usize>,
    l_off: Vec<usize>,
    u_off: Vec<usize>,
    len: usize,
    /// Storage offset of every stored entry of the pattern.
    scatter: Vec<usize>,
}

impl Symbolic {
    fn new(p: &CsrPattern) -> Result<Self> {
        let n = p.n_rows;
        let mut upper: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for r in 0..n {
            for &c in p.row(r) {
                upper[r.max(c)].push(r.min(c));
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for col in upper.iter_mut() {
            col.sort_unstable();
            col.dedup();
            row_idx.extend_from_slice(col);
            col_ptr.push(row_idx.len());
        }
        drop(upper);
        let sym_ref = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
        let params = CholeskySymbolicParams {
            supernodal_flop_ratio_threshold: SupernodalThreshold::FORCE_SUPERNODAL,
            ..Default::default()
        };
        let sym = factorize_symbolic_cholesky(sym_ref, Side::Upper, SymmetricOrdering::Amd, params)
            .map_err(|e| FemError::Solve(format!("symbolic analysis: {e:?}")))?;
        let (fwd, inv) = match sym.perm() {
            Some(perm) => {
                let (f, i) = perm.arrays();
                (f.to_vec(), i.to_vec())
            }
            None => ((0..n).collect(), (0..n).collect()),
        };
        let (begin, rows): (Vec<usize>, Vec<Vec<usize>>) = match sym.raw() {
            SymbolicCholeskyRaw::Supernodal(sn) => {
                let ns = sn.n_supernodes();
                let mut begin: Vec<usize> = sn.supernode_begin().to_vec();
                begin.push(n);
                (begin, (0..ns).map(|s| sn.supernode(s).pattern().to_vec()).collect())
            }
            // Very sparse factors come back column by column.
            SymbolicCholeskyRaw::Simplicial(sc) => {
                let (cp, ri) = (sc.col_ptr(), sc.row_idx());
                let rows = (0..n).map(|j| ri[cp[j]..cp[j + 1]].iter().copied().filter(|&i| i > j).collect()).collect();
                ((0..=n).collect(), rows)
            }
        };
        let ns = rows.len();
        let mut owner = vec![0; n];
        for s in 0..ns {
            owner[begin[s]..begin[s + 1]].iter_mut().for_each(|o| *o = s);
        }
        let (mut l_off, mut u_off) = (Vec::with_capacity(ns), Vec::with_capacity(ns));
        let mut len = 0;
        for s in 0..ns {
            let (k, r) = (begin[s + 1] - begin[s], rows[s].len());
            l_off.push(len);
            len += (k + r) * k;
            u_off.push(len);
            len += k * r;
        }
        let mut this = Self { fwd, inv, begin, rows, owner, l_off, u_off, len, scatter: Vec::new() };
        let mut scatter = Vec::with_capacity(p.nnz());
        for r in 0..n {
            for &c in p.row(r) {
                scatter.push(this.offset(this.inv[r], this.inv[c])?);
            }
        }
        this.scatter = scatter;
        Ok(this)
    }

    /// Storage offset of entry `(i, j)` in new numbering.
    fn offset(&self, i: usize, j: usize) -> Result<usize> {
        let s = self.owner[i.min(j)];
        let (b, e) = (self.begin[s], self.begin[s + 1]);
        let (k, rows) = (e - b, &self.rows[s]);
        let below = |g: usize| {
            rows.binary_search(&g).map_err(|_| FemError::Solve(format!("entry ({i}, {j}) outside the symbolic pattern")))
        };
        if j < e {
            let pi = if i < e { i - b } else { k + below(i)? };
            Ok(self.l_off[s] + (j - b) * (k + rows.len()) + pi)
        } else {
            Ok(self.u_off[s] + below(j)? * k + (i - b))
        }
    }

    fn n_supernodes(&self) -> usize {
        self.rows.len()
    }
}

/// Reuses symbolic analysis across matrices sharing a pattern.
#[derive(Default)]
pub struct LuSolver {
    symbolic: Option<(Arc<CsrPattern>, Arc<Symbolic>)>,
}

pub struct Factorization {
    symbolic: Arc<Symbolic>,
    values: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
    /// Local pivot row of each column inside its supernode.
    pivots: Vec<usize>,
    perturbed: usize,
    matrix: CsrMatrix,
}

fn check_structure(m: &CsrMatrix) -> Result<()> {
    if m.n_rows() != m.n_cols() {
        return Err(FemError::Solve(format!("matrix is {}x{}, not square", m.n_rows(), m.n_cols())));
    }
    let p = &m.pattern;
    let mut col_seen = vec![false; p.n_cols];
    for r in 0..p.n_rows {
        let mut any = false;
        for k in p.row_ptr[r]..p.row_ptr[r + 1] {
            let v = m.values[k];
            if !v.is_finite() {
                return Err(FemError::Solve(format!("non-finite entry in row {r}")));
            }
            if v != 0.0 {
                any = true;
                col_seen[p.col_idx[k]] = true;
            }
        }
        if !any {
            return Err(FemError::ZeroPivot { row: r });
        }
    }
    if let Some(c) = col_seen.iter().position(|&s| !s) {
        return Err(FemError::ZeroPivot { row: c });
    }
    Ok(())
}

impl LuSolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factorize(&mut self, matrix: CsrMatrix) -> Result<Factorization> {
        check_structure(&matrix)?;
        let p = matrix.pattern.clone();
        let reuse = matches!(&self.symbolic, Some((q, _)) if Arc::ptr_eq(q, &p) || **q == *p);
        if !reuse {
            self.symbolic = Some((p.clone(), Arc::new(Symbolic::new(&p)?)));
        }
        let symbolic = self.symbolic.as_ref().unwrap().1.clone();
        let (row_scale, col_scale) = equilibrate(&matrix);
        let (values, pivots, perturbed) = factor_numeric(&symbolic, &matrix, &row_scale, &col_scale);
        Ok(Factorization { symbolic, values, row_scale, col_scale, pivots, perturbed, matrix })
    }
}

/// Unblocked LU of the leading `k×k` block of a column-major panel with leading
/// dimension `ld`, swapping rows of `right` (column-major, leading dimension `k`)
/// along. Returns the number of perturbed pivots.
fn factor_diagonal(panel: &mut [f64], ld: usize, k: usize, right: &mut [f64], pivots: &mut [usize], tau: f64) -> usize {
    let r = if k == 0 { 0 } else { right.len() / k };
    let mut perturbed = 0;
    let mut col = vec![0.0; k];
    for j in 0..k {
        let base = j * ld;
        let (mut piv, mut amax) = (j, 0.0);
        for i in j..k {
            let a = panel[base + i].abs();
            if a > amax {
                amax = a;
                piv = i;
            }
        }
        if amax < tau {
            piv = j;
            panel[base + j] = if panel[base + j] < 0.0 { -tau } else { tau };
            perturbed += 1;
        }
        pivots[j] = piv;
        if piv != j {
            for c in 0..k {
                panel.swap(c * ld + j, c * ld + piv);
            }
            for c in 0..r {
                right.swap(c * k + j, c * k + piv);
            }
        }
        let d = panel[base + j];
        for i in j + 1..k {
            panel[base + i] /= d;
        }
        col[j + 1..k].copy_from_slice(&panel[base + j + 1..base + k]);
        for c in j + 1..k {
            let f = panel[c * ld + j];
            if f != 0.0 {
                let dst = &mut panel[c * ld + j + 1..c * ld + k];
                for (x, l) in dst.iter_mut().zip(&col[j + 1..k]) {
                    *x -= l * f;
                }
            }
        }
    }
    perturbed
}

/// Row then column max-norm scaling, rounded to powers of two.
fn equilibrate(m: &CsrMatrix) -> (Vec<f64>, Vec<f64>) {
    let p = &m.pattern;
    let pow2 = |a: f64| if a > 0.0 { (2.0f64).powi(-(a.log2().round() as i32)) } else { 1.0 };
    let mut row = vec![1.0; p.n_rows];
    for r in 0..p.n_rows {
        let a = m.values[p.row_ptr[r]..p.row_ptr[r + 1]].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        row[r] = pow2(a);
    }
    let mut cmax = vec![0.0f64; p.n_cols];
    for r in 0..p.n_rows {
        for k in p.row_ptr[r]..p.row_ptr[r + 1] {
            let c = p.col_idx[k];
            cmax[c] = cmax[c].max((m.values[k] * row[r]).abs());
        }
    }
    (row, cmax.into_iter().map(pow2).collect())
}

fn factor_numeric(sym: &Symbolic, m: &CsrMatrix, row_scale: &[f64], col_scale: &[f64]) -> (Vec<f64>, Vec<usize>, usize) {
    let n = m.n_rows();
    let p = &m.pattern;
    let mut vals = vec![0.0; sym.len];
    for r in 0..n {
        for k in p.row_ptr[r]..p.row_ptr[r + 1] {
            vals[sym.scatter[k]] += m.values[k] * row_scale[r] * col_scale[p.col_idx[k]];
        }
    }
    let tau = f64::EPSILON.sqrt();
    let mut pivots = vec![0; n];
    let mut perturbed = 0;
    let mut map = vec![0usize; n];
    let mut schur: Vec<f64> = Vec::new();
    for s in 0..sym.n_supernodes() {
        let (b, e) = (sym.begin[s], sym.begin[s + 1]);
        let rows = &sym.rows[s];
        let (k, r) = (e - b, rows.len());
        let ld = k + r;
        let next = if s + 1 < sym.n_supernodes() { sym.l_off[s + 1] } else { sym.len };
        let (head, rest) = vals.split_at_mut(next);
        let cur = &mut head[sym.l_off[s]..];
        let (lp, up) = cur.split_at_mut(ld * k);
        perturbed += factor_diagonal(lp, ld, k, up, &mut pivots[b..e], tau);
        if r == 0 {
            continue;
        }
        let mut diag = Mat::<f64>::zeros(k, k);
        for c in 0..k {
            for i in 0..k {
                diag[(i, c)] = lp[c * ld + i];
            }
        }
        solve_unit_lower_triangular_in_place(diag.as_ref(), MatMut::from_column_major_slice_mut(&mut *up, k, r), Par::Seq);
        let lfull = MatMut::from_column_major_slice_mut(&mut *lp, ld, k);
        let below = lfull.submatrix_mut(k, 0, r, k);
        solve_lower_triangular_in_place(diag.as_ref().transpose(), below.transpose_mut(), Par::Seq);
        schur.clear();
        schur.resize(r * r, 0.0);
        {
            let lref = MatRef::from_column_major_slice(&*lp, ld, k).submatrix(k, 0, r, k);
            let uref = MatRef::from_column_major_slice(&*up, k, r);
            matmul(MatMut::from_column_major_slice_mut(&mut schur, r, r), Accum::Replace, lref, uref, 1.0, Par::Seq);
        }
        let mut a0 = 0;
        while a0 < r {
            let t = sym.owner[rows[a0]];
            let (bt, et) = (sym.begin[t], sym.begin[t + 1]);
            let mut a1 = a0;
            while a1 < r && rows[a1] < et {
                a1 += 1;
            }
            let kt = et - bt;
            let rt = &sym.rows[t];
            let ldt = kt + rt.len();
            for (q, &g) in rt.iter().enumerate() {
                map[g] = kt + q;
            }
            let lt = sym.l_off[t] - next;
            let ut = sym.u_off[t] - next;
            for bc in a0..a1 {
                let c = rows[bc] - bt;
                let dst = lt + c * ldt;
                let src = &schur[bc * r..(bc + 1) * r];
                for a in a0..r {
                    let g = rows[a];
                    let pos = if g < et { g - bt } else { map[g] };
                    rest[dst + pos] -= src[a];
                }
            }
            for bc in a1..r {
                let dst = ut + (map[rows[bc]] - kt) * kt;
                let src = &schur[bc * r..(bc + 1) * r];
                for a in a0..a1 {
                    rest[dst + rows[a] - bt] -= src[a];
                }
            }
            a0 = a1;
        }
    }
    (vals, pivots, perturbed)
}

impl Factorization {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Number of pivots replaced by the perturbation floor.
    pub fn perturbed_pivots(&self) -> usize {
        self.perturbed
    }

    fn raw_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let sym = &*self.symbolic;
        let v = &self.values;
        let mut x: Vec<f64> = sym.fwd.iter().map(|&o| rhs[o] * self.row_scale[o]).collect();
        for s in 0..sym.n_supernodes() {
            let (b, e) = (sym.begin[s], sym.begin[s + 1]);
            let rows = &sym.rows[s];
            let (k, ld) = (e - b, e - b + rows.len());
            let l = &v[sym.l_off[s]..];
            for j in 0..k {
                let p = self.pivots[b + j];
                if p != j {
                    x.swap(b + j, b + p);
                }
            }
            for j in 0..k {
                let xj = x[b + j];
                if xj == 0.0 {
                    continue;
                }
                let colj = &l[j * ld..(j + 1) * ld];
                for i in j + 1..k {
                    x[b + i] -= colj[i] * xj;
                }
                for (q, &g) in rows.iter().enumerate() {
                    x[g] -= colj[k + q] * xj;
                }
            }
        }
        for s in (0..sym.n_supernodes()).rev() {
            let (b, e) = (sym.begin[s], sym.begin[s + 1]);
            let rows = &sym.rows[s];
            let (k, ld) = (e - b, e - b + rows.len());
            let l = &v[sym.l_off[s]..];
            let u = &v[sym.u_off[s]..];
            for (q, &g) in rows.iter().enumerate() {
                let xr = x[g];
                if xr != 0.0 {
                    for i in 0..k {
                        x[b + i] -= u[q * k + i] * xr;
                    }
                }
            }
            for j in (0..k).rev() {
                x[b + j] /= l[j * ld + j];
                let xj = x[b + j];
                for i in 0..j {
                    x[b + i] -= l[j * ld + i] * xj;
                }
            }
        }
        let mut out = vec![0.0; x.len()];
        for (i, &o) in sym.fwd.iter().enumerate() {
            out[o] = x[i] * self.col_scale[o];
        }
        out
    }

    /// Solves with up to three steps of iterative refinement; returns the
    /// solution and the final residual norm.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        let mut x = self.raw_solve(b);
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(FemError::ZeroPivot { row: i });
        }
        let bn = norm2(b);
        let mut rn = f64::INFINITY;
        for _ in 0..4 {
            let ax = self.matrix.matvec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
            rn = norm2(&r);
            if rn <= 1e-13 * (bn + 1.0) {
                break;
            }
            let dx = self.raw_solve(&r);
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
        }
        Ok((x, rn))
    }
}

/// Factorizes and solves a constrained system, enforcing the residual bound
/// `‖Ax − b‖ ≤ 1e-10 (‖b‖ + 1)`.
pub fn solve_linear(system: &SparseSystem) -> Result<Vec<f64>> {
    let mut sys = system.clone();
    sys.apply_constraints();
    let f = LuSolver::new().factorize(sys.matrix)?;
    let (x, rn) = f.solve(&sys.rhs)?;
    if rn > 1e-10 * (norm2(&sys.rhs) + 1.0) {
        return Err(FemError::Solve(format!("residual {rn:e} above tolerance; matrix is numerically singular")));
    }
    Ok(x)
}
