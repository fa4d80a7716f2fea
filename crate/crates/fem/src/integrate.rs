//! Quadrature of pointwise expressions over the domain or a tagged boundary.

use crate::error::{FemError, Result};
use crate::geometry::{CellEval, Configuration, FacetEval, ReferenceTables, Symmetry};
use crate::space::Field;

#[derive(Debug, Clone, Copy)]
pub enum Region<'a> {
    Domain,
    Boundary(&'a str),
}

/// Basis data at one quadrature point, used to evaluate fields.
pub struct PointEval<'a> {
    pub cell: usize,
    pub x: [f64; 2],
    /// Outward unit normal on boundary regions.
    pub normal: Option<[f64; 2]>,
    v2: &'a [f64],
    g2: &'a [[f64; 2]],
    v1: &'a [f64],
    g1: &'a [[f64; 2]],
}

impl PointEval<'_> {
    fn local(&self, f: &Field, comp: usize) -> Result<(Vec<f64>, bool)> {
        let s = &f.space;
        if comp >= s.components() {
            return Err(FemError::UnsupportedExpression(format!("component {comp} of a {}-component field", s.components())));
        }
        let off = comp * s.n_scalar_dofs();
        let vals = s
            .cell_nodes(self.cell)
            .iter()
            .map(|&n| s.node_expansion(n as usize).iter().map(|&(k, w)| w * f.coefficients[off + k as usize]).sum())
            .collect();
        Ok((vals, s.degree() == 2))
    }

    pub fn value(&self, f: &Field, comp: usize) -> Result<f64> {
        let (vals, q2) = self.local(f, comp)?;
        let b = if q2 { self.v2 } else { self.v1 };
        Ok(vals.iter().zip(b).map(|(a, n)| a * n).sum())
    }

    pub fn gradient(&self, f: &Field, comp: usize) -> Result<[f64; 2]> {
        let (vals, q2) = self.local(f, comp)?;
        let g = if q2 { self.g2 } else { self.g1 };
        Ok(vals.iter().zip(g).fold([0.0, 0.0], |acc, (a, n)| [acc[0] + a * n[0], acc[1] + a * n[1]]))
    }

    /// Derivative of total order `order` (0 or 1); higher orders are rejected.
    pub fn derivative(&self, f: &Field, comp: usize, order: usize, axis: usize) -> Result<f64> {
        match order {
            0 => self.value(f, comp),
            1 if axis < 2 => Ok(self.gradient(f, comp)?[axis]),
            _ => Err(FemError::UnsupportedExpression(format!("derivative of order {order} along axis {axis}"))),
        }
    }
}

/// `∫_region expr` on the given configuration.
pub fn integrate<F>(
    config: &Configuration,
    symmetry: Symmetry,
    region: Region,
    tables: &ReferenceTables,
    expr: F,
) -> Result<f64>
where
    F: Fn(&PointEval) -> Result<f64>,
{
    let mut total = 0.0;
    match region {
        Region::Domain => {
            let mut ce = CellEval::default();
            for c in 0..config.num_cells() {
                ce.compute(tables, &config.cell_coords(c), symmetry, c)?;
                for q in 0..ce.n_qp {
                    let p = PointEval {
                        cell: c,
                        x: ce.x[q],
                        normal: None,
                        v2: tables.q2.values_at(q),
                        g2: ce.grad2_at(q),
                        v1: tables.q1.values_at(q),
                        g1: ce.grad1_at(q),
                    };
                    total += ce.dv[q] * expr(&p)?;
                }
            }
        }
        Region::Boundary(tag) => {
            let mesh = config.space.mesh();
            let mut fe = FacetEval::default();
            for &f in mesh.facets(tag)? {
                fe.compute(tables, &config.cell_coords(f.cell), symmetry, f)?;
                for q in 0..fe.n_qp {
                    let p = PointEval {
                        cell: f.cell,
                        x: fe.x[q],
                        normal: Some(fe.normal[q]),
                        v2: tables.edge_q2[f.edge].values_at(q),
                        g2: fe.grad2_at(q),
                        v1: tables.edge_q1[f.edge].values_at(q),
                        g1: fe.grad1_at(q),
                    };
                    total += fe.ds[q] * expr(&p)?;
                }
            }
        }
    }
    Ok(total)
}
