//! Cell-by-cell assembly of residual vectors and sparse Jacobians.
//!
//! Local contributions are computed in parallel batches and scattered serially
//! in cell order, so results do not depend on the thread count.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{FemError, Result};
use crate::mesh::{Facet, Mesh};
use crate::parallel::pool;
use crate::sparse::{CsrMatrix, CsrPattern, SparseSystem};
use crate::space::FunctionSpace;

const BATCH: usize = 256;

#[derive(Debug, Clone)]
pub struct Block {
    pub space: Arc<FunctionSpace>,
    pub offset: usize,
}

/// Concatenation of spaces on one mesh into a global unknown vector.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    blocks: Vec<Block>,
    n_dofs: usize,
    local_size: usize,
}

impl BlockLayout {
    pub fn new(spaces: &[Arc<FunctionSpace>]) -> Result<Self> {
        let first = spaces.first().ok_or_else(|| FemError::Assembly("empty layout".into()))?;
        let mut blocks = Vec::new();
        let mut offset = 0;
        let mut local_size = 0;
        for s in spaces {
            if !Arc::ptr_eq(s.mesh(), first.mesh()) {
                return Err(FemError::Assembly("layout spaces live on different meshes".into()));
            }
            blocks.push(Block { space: s.clone(), offset });
            offset += s.n_dofs();
            local_size += s.nodes_per_cell() * s.components();
        }
        Ok(Self { blocks, n_dofs: offset, local_size })
    }

    pub fn single(space: Arc<FunctionSpace>) -> Self {
        Self::new(&[space]).expect("single space")
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn local_size(&self) -> usize {
        self.local_size
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.blocks[0].space.mesh()
    }

    /// Offset of block `b` inside the local cell vector.
    pub fn local_offset(&self, b: usize) -> usize {
        self.blocks[..b].iter().map(|k| k.space.nodes_per_cell() * k.space.components()).sum()
    }

    /// Global (dof, weight) lists for every local entry of cell `c`.
    pub fn expand_cell(&self, c: usize, ptr: &mut Vec<usize>, ents: &mut Vec<(usize, f64)>) {
        ptr.clear();
        ents.clear();
        ptr.push(0);
        for b in &self.blocks {
            let s = &b.space;
            for comp in 0..s.components() {
                for &n in s.cell_nodes(c) {
                    for &(k, w) in s.node_expansion(n as usize) {
                        ents.push((b.offset + s.dof(comp, k as usize), w));
                    }
                    ptr.push(ents.len());
                }
            }
        }
    }

    /// Rows of `self` against columns of `cols`, with the diagonal when square.
    pub fn pattern(&self, cols: &BlockLayout) -> CsrPattern {
        let key = |s: &Arc<FunctionSpace>| Arc::as_ptr(s) as usize;
        let mut adjacency: HashMap<(usize, usize), Vec<Vec<u32>>> = HashMap::new();
        for rb in &self.blocks {
            for cb in &cols.blocks {
                let k = (key(&rb.space), key(&cb.space));
                adjacency.entry(k).or_insert_with(|| scalar_adjacency(&rb.space, &cb.space));
            }
        }
        let mut rows: Vec<Vec<usize>> = Vec::with_capacity(self.n_dofs);
        for rb in &self.blocks {
            let rs = &rb.space;
            for _comp in 0..rs.components() {
                for k in 0..rs.n_scalar_dofs() {
                    let mut row = Vec::new();
                    for cb in &cols.blocks {
                        let adj = &adjacency[&(key(rs), key(&cb.space))][k];
                        for cc in 0..cb.space.components() {
                            let base = cb.offset + cc * cb.space.n_scalar_dofs();
                            row.extend(adj.iter().map(|&j| base + j as usize));
                        }
                    }
                    rows.push(row);
                }
            }
        }
        if self.n_dofs == cols.n_dofs {
            for (i, r) in rows.iter_mut().enumerate() {
                r.push(i);
            }
        }
        CsrPattern::from_rows(cols.n_dofs, rows)
    }
}

fn scalar_adjacency(rows: &FunctionSpace, cols: &FunctionSpace) -> Vec<Vec<u32>> {
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); rows.n_scalar_dofs()];
    let mut rset = Vec::new();
    let mut cset = Vec::new();
    for c in 0..rows.mesh().num_cells() {
        rset.clear();
        cset.clear();
        for &n in rows.cell_nodes(c) {
            rset.extend(rows.node_expansion(n as usize).iter().map(|e| e.0));
        }
        for &n in cols.cell_nodes(c) {
            cset.extend(cols.node_expansion(n as usize).iter().map(|e| e.0));
        }
        rset.sort_unstable();
        rset.dedup();
        cset.sort_unstable();
        cset.dedup();
        for &r in &rset {
            adj[r as usize].extend_from_slice(&cset);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Dense local contribution of one cell or facet, row-major.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub rows: usize,
    pub cols: usize,
    pub matrix: Vec<f64>,
    pub vector: Vec<f64>,
    pub want_matrix: bool,
}

impl LocalSystem {
    pub fn new(rows: usize, cols: usize, want_matrix: bool) -> Self {
        Self { rows, cols, matrix: vec![0.0; if want_matrix { rows * cols } else { 0 }], vector: vec![0.0; rows], want_matrix }
    }

    pub fn clear(&mut self) {
        self.matrix.iter_mut().for_each(|v| *v = 0.0);
        self.vector.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    pub fn add_matrix(&mut self, i: usize, j: usize, v: f64) {
        self.matrix[i * self.cols + j] += v;
    }
}

/// Weak-form integrand supplying local cell and facet contributions.
pub trait Kernel: Sync {
    /// Local (rows, cols) the kernel produces per cell.
    fn local_dims(&self) -> (usize, usize);

    fn cell(&self, cell: usize, local: &mut LocalSystem) -> Result<()>;

    /// Boundary tags whose facets are visited by [`Kernel::facet`].
    fn facet_tags(&self) -> Vec<String> {
        Vec::new()
    }

    fn facet(&self, _tag: &str, _facet: Facet, _local: &mut LocalSystem) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Want {
    Vector,
    Both,
}

/// Assembles `kernel` with `test` rows and `trial` columns.
pub fn assemble<K: Kernel + ?Sized>(kernel: &K, trial: &BlockLayout, test: &BlockLayout) -> Result<SparseSystem> {
    let pattern = Arc::new(test.pattern(trial));
    assemble_with_pattern(kernel, trial, test, &pattern, Want::Both)
}

pub fn assemble_with_pattern<K: Kernel + ?Sized>(
    kernel: &K,
    trial: &BlockLayout,
    test: &BlockLayout,
    pattern: &Arc<CsrPattern>,
    want: Want,
) -> Result<SparseSystem> {
    let (lr, lc) = kernel.local_dims();
    if lr != test.local_size() || lc != trial.local_size() {
        return Err(FemError::Assembly(format!(
            "kernel block {lr}x{lc} does not match local space sizes {}x{}",
            test.local_size(),
            trial.local_size()
        )));
    }
    if !Arc::ptr_eq(test.mesh(), trial.mesh()) {
        return Err(FemError::Assembly("trial and test spaces live on different meshes".into()));
    }
    if pattern.n_rows != test.n_dofs() || pattern.n_cols != trial.n_dofs() {
        return Err(FemError::Assembly("pattern does not match layouts".into()));
    }
    let want_matrix = want == Want::Both;
    let mut matrix = CsrMatrix::zeros(pattern.clone());
    let mut rhs = vec![0.0; test.n_dofs()];
    let n_cells = test.mesh().num_cells();
    let (mut rp, mut re, mut cp, mut ce) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());

    let mut scatter = |c: usize, local: &LocalSystem, matrix: &mut CsrMatrix, rhs: &mut [f64]| {
        test.expand_cell(c, &mut rp, &mut re);
        for i in 0..lr {
            let v = local.vector[i];
            if v != 0.0 {
                for &(g, w) in &re[rp[i]..rp[i + 1]] {
                    rhs[g] += w * v;
                }
            }
        }
        if want_matrix {
            trial.expand_cell(c, &mut cp, &mut ce);
            for i in 0..lr {
                let rows = &re[rp[i]..rp[i + 1]];
                for j in 0..lc {
                    let v = local.matrix[i * lc + j];
                    if v == 0.0 {
                        continue;
                    }
                    for &(gr, wr) in rows {
                        for &(gc, wc) in &ce[cp[j]..cp[j + 1]] {
                            matrix.add(gr, gc, wr * wc * v);
                        }
                    }
                }
            }
        }
    };

    let mut start = 0;
    while start < n_cells {
        let end = (start + BATCH).min(n_cells);
        let locals: Vec<Result<LocalSystem>> = pool().install(|| {
            (start..end)
                .into_par_iter()
                .map(|c| {
                    let mut l = LocalSystem::new(lr, lc, want_matrix);
                    kernel.cell(c, &mut l).map(|_| l)
                })
                .collect()
        });
        for (k, l) in locals.into_iter().enumerate() {
            scatter(start + k, &l?, &mut matrix, &mut rhs);
        }
        start = end;
    }
    let mesh = test.mesh().clone();
    let mut local = LocalSystem::new(lr, lc, want_matrix);
    for tag in kernel.facet_tags() {
        for &f in mesh.facets(&tag)? {
            local.clear();
            kernel.facet(&tag, f, &mut local)?;
            scatter(f.cell, &local, &mut matrix, &mut rhs);
        }
    }
    Ok(SparseSystem::new(matrix, rhs))
}
