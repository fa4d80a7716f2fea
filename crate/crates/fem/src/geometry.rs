//! Isoparametric (biquadratic) cell maps on reference or deformed configurations.

use std::f64::consts::PI;

use crate::basis::{edge_point, edge_tangent, LagrangeQuad, Tabulation};
use crate::error::{FemError, Result};
use crate::mesh::Facet;
use crate::quadrature::QuadratureRule;
use crate::space::FunctionSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Planar,
    /// Coordinates are `(r, z)`; measures carry `2πr`.
    Axisymmetric,
}

impl Symmetry {
    #[inline]
    pub fn measure(self, x: [f64; 2]) -> f64 {
        match self {
            Symmetry::Planar => 1.0,
            Symmetry::Axisymmetric => 2.0 * PI * x[0],
        }
    }

    pub fn is_axisymmetric(self) -> bool {
        self == Symmetry::Axisymmetric
    }
}

/// A biquadratic geometry space plus optional nodal displacement.
#[derive(Clone, Copy)]
pub struct Configuration<'a> {
    pub space: &'a FunctionSpace,
    pub displacement: Option<&'a [[f64; 2]]>,
}

impl<'a> Configuration<'a> {
    pub fn reference(space: &'a FunctionSpace) -> Self {
        assert_eq!(space.degree(), 2, "geometry is described by the biquadratic space");
        Self { space, displacement: None }
    }

    pub fn deformed(space: &'a FunctionSpace, displacement: &'a [[f64; 2]]) -> Self {
        assert_eq!(space.degree(), 2, "geometry is described by the biquadratic space");
        assert_eq!(displacement.len(), space.n_nodes());
        Self { space, displacement: Some(displacement) }
    }

    #[inline]
    pub fn node(&self, n: usize) -> [f64; 2] {
        let x = self.space.node_position(n);
        match self.displacement {
            Some(d) => [x[0] + d[n][0], x[1] + d[n][1]],
            None => x,
        }
    }

    pub fn cell_coords(&self, c: usize) -> [[f64; 2]; 9] {
        let mut out = [[0.0; 2]; 9];
        for (k, &n) in self.space.cell_nodes(c).iter().enumerate() {
            out[k] = self.node(n as usize);
        }
        out
    }

    pub fn num_cells(&self) -> usize {
        self.space.mesh().num_cells()
    }
}

/// Basis tables for cells and each of the four edges.
#[derive(Debug, Clone)]
pub struct ReferenceTables {
    pub rule: QuadratureRule,
    pub line: QuadratureRule,
    pub q2: Tabulation,
    pub q1: Tabulation,
    pub edge_q2: [Tabulation; 4],
    pub edge_q1: [Tabulation; 4],
}

impl ReferenceTables {
    pub fn new(rule: QuadratureRule, line: QuadratureRule) -> Self {
        let b2 = LagrangeQuad::new(2).unwrap();
        let b1 = LagrangeQuad::new(1).unwrap();
        let edge_pts = |e: usize| -> Vec<[f64; 2]> { line.points.iter().map(|p| edge_point(e, p[0])).collect() };
        let edge_q2 = std::array::from_fn(|e| Tabulation::new(&b2, &edge_pts(e)));
        let edge_q1 = std::array::from_fn(|e| Tabulation::new(&b1, &edge_pts(e)));
        Self { q2: Tabulation::new(&b2, &rule.points), q1: Tabulation::new(&b1, &rule.points), rule, line, edge_q2, edge_q1 }
    }

    /// Rules for biquadratic trial/test functions.
    pub fn standard() -> Self {
        Self::new(QuadratureRule::for_element_degree(2), QuadratureRule::line_for_degree(6))
    }
}

#[inline]
fn jacobian(coords: &[[f64; 2]; 9], grads: &[[f64; 2]]) -> [[f64; 2]; 2] {
    let mut j = [[0.0; 2]; 2];
    for a in 0..9 {
        for i in 0..2 {
            j[i][0] += coords[a][i] * grads[a][0];
            j[i][1] += coords[a][i] * grads[a][1];
        }
    }
    j
}

#[inline]
fn physical(j: &[[f64; 2]; 2], det: f64, g: [f64; 2]) -> [f64; 2] {
    [(j[1][1] * g[0] - j[1][0] * g[1]) / det, (-j[0][1] * g[0] + j[0][0] * g[1]) / det]
}

/// Per-cell quadrature data: positions, measures and physical gradients.
#[derive(Debug, Clone, Default)]
pub struct CellEval {
    pub n_qp: usize,
    pub x: Vec<[f64; 2]>,
    pub det: Vec<f64>,
    /// Weight times Jacobian determinant times symmetry measure.
    pub dv: Vec<f64>,
    /// `n_qp × 9` biquadratic gradients.
    pub grad2: Vec<[f64; 2]>,
    /// `n_qp × 4` bilinear gradients.
    pub grad1: Vec<[f64; 2]>,
}

impl CellEval {
    pub fn compute(
        &mut self,
        tables: &ReferenceTables,
        coords: &[[f64; 2]; 9],
        symmetry: Symmetry,
        cell: usize,
    ) -> Result<()> {
        let nq = tables.rule.len();
        self.n_qp = nq;
        self.x.resize(nq, [0.0; 2]);
        self.det.resize(nq, 0.0);
        self.dv.resize(nq, 0.0);
        self.grad2.resize(nq * 9, [0.0; 2]);
        self.grad1.resize(nq * 4, [0.0; 2]);
        for q in 0..nq {
            let g2 = tables.q2.grads_at(q);
            let v2 = tables.q2.values_at(q);
            let j = jacobian(coords, g2);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det > 0.0) {
                return Err(FemError::DegenerateCell { cell, det });
            }
            let mut x = [0.0; 2];
            for a in 0..9 {
                x[0] += v2[a] * coords[a][0];
                x[1] += v2[a] * coords[a][1];
                self.grad2[q * 9 + a] = physical(&j, det, g2[a]);
            }
            let g1 = tables.q1.grads_at(q);
            for a in 0..4 {
                self.grad1[q * 4 + a] = physical(&j, det, g1[a]);
            }
            self.x[q] = x;
            self.det[q] = det;
            self.dv[q] = tables.rule.weights[q] * det * symmetry.measure(x);
        }
        Ok(())
    }

    #[inline]
    pub fn grad2_at(&self, q: usize) -> &[[f64; 2]] {
        &self.grad2[q * 9..q * 9 + 9]
    }

    #[inline]
    pub fn grad1_at(&self, q: usize) -> &[[f64; 2]] {
        &self.grad1[q * 4..q * 4 + 4]
    }
}

/// Quadrature data on one cell edge.
#[derive(Debug, Clone, Default)]
pub struct FacetEval {
    pub edge: usize,
    pub n_qp: usize,
    pub x: Vec<[f64; 2]>,
    pub normal: Vec<[f64; 2]>,
    /// Line weight times length element times symmetry measure.
    pub ds: Vec<f64>,
    pub grad2: Vec<[f64; 2]>,
    pub grad1: Vec<[f64; 2]>,
}

impl FacetEval {
    pub fn compute(
        &mut self,
        tables: &ReferenceTables,
        coords: &[[f64; 2]; 9],
        symmetry: Symmetry,
        facet: Facet,
    ) -> Result<()> {
        let e = facet.edge;
        let nq = tables.line.len();
        self.edge = e;
        self.n_qp = nq;
        self.x.resize(nq, [0.0; 2]);
        self.normal.resize(nq, [0.0; 2]);
        self.ds.resize(nq, 0.0);
        self.grad2.resize(nq * 9, [0.0; 2]);
        self.grad1.resize(nq * 4, [0.0; 2]);
        let t_ref = edge_tangent(e);
        for q in 0..nq {
            let g2 = tables.edge_q2[e].grads_at(q);
            let v2 = tables.edge_q2[e].values_at(q);
            let j = jacobian(coords, g2);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if !(det > 0.0) {
                return Err(FemError::DegenerateCell { cell: facet.cell, det });
            }
            let t = [j[0][0] * t_ref[0] + j[0][1] * t_ref[1], j[1][0] * t_ref[0] + j[1][1] * t_ref[1]];
            let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
            let mut x = [0.0; 2];
            for a in 0..9 {
                x[0] += v2[a] * coords[a][0];
                x[1] += v2[a] * coords[a][1];
                self.grad2[q * 9 + a] = physical(&j, det, g2[a]);
            }
            let g1 = tables.edge_q1[e].grads_at(q);
            for a in 0..4 {
                self.grad1[q * 4 + a] = physical(&j, det, g1[a]);
            }
            self.x[q] = x;
            self.normal[q] = [t[1] / len, -t[0] / len];
            self.ds[q] = tables.line.weights[q] * len * symmetry.measure(x);
        }
        Ok(())
    }

    #[inline]
    pub fn grad2_at(&self, q: usize) -> &[[f64; 2]] {
        &self.grad2[q * 9..q * 9 + 9]
    }

    #[inline]
    pub fn grad1_at(&self, q: usize) -> &[[f64; 2]] {
        &self.grad1[q * 4..q * 4 + 4]
    }
}

/// Smallest Jacobian determinant over all cell quadrature points.
pub fn min_jacobian(config: &Configuration, tables: &ReferenceTables) -> (usize, f64) {
    let mut worst = (0, f64::INFINITY);
    for c in 0..config.num_cells() {
        let coords = config.cell_coords(c);
        for q in 0..tables.rule.len() {
            let j = jacobian(&coords, tables.q2.grads_at(q));
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det < worst.1 {
                worst = (c, det);
            }
        }
        // Corners catch folds the interior points can miss.
        let b = LagrangeQuad::new(2).unwrap();
        let mut v = [0.0; 9];
        let mut g = [[0.0; 2]; 9];
        for xi in [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] {
            b.eval(xi, &mut v, &mut g);
            let j = jacobian(&coords, &g);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det < worst.1 {
                worst = (c, det);
            }
        }
    }
    worst
}

/// Maps reference coordinates of cell `c` to the configuration.
pub fn map_point(coords: &[[f64; 2]; 9], xi: [f64; 2]) -> [f64; 2] {
    let b = LagrangeQuad::new(2).unwrap();
    let mut v = [0.0; 9];
    let mut g = [[0.0; 2]; 9];
    b.eval(xi, &mut v, &mut g);
    let mut x = [0.0; 2];
    for a in 0..9 {
        x[0] += v[a] * coords[a][0];
        x[1] += v[a] * coords[a][1];
    }
    x
}

/// Finds the cell containing `p` and its reference coordinates.
pub fn locate(config: &Configuration, p: [f64; 2]) -> Result<(usize, [f64; 2])> {
    let b = LagrangeQuad::new(2).unwrap();
    let mut v = [0.0; 9];
    let mut g = [[0.0; 2]; 9];
    for c in 0..config.num_cells() {
        let coords = config.cell_coords(c);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for x in &coords {
            for i in 0..2 {
                lo[i] = lo[i].min(x[i]);
                hi[i] = hi[i].max(x[i]);
            }
        }
        let pad = 1e-9 * ((hi[0] - lo[0]) + (hi[1] - lo[1]));
        if p[0] < lo[0] - pad || p[0] > hi[0] + pad || p[1] < lo[1] - pad || p[1] > hi[1] + pad {
            continue;
        }
        let mut xi = [0.5, 0.5];
        for _ in 0..30 {
            b.eval(xi, &mut v, &mut g);
            let mut x = [0.0; 2];
            for a in 0..9 {
                x[0] += v[a] * coords[a][0];
                x[1] += v[a] * coords[a][1];
            }
            let j = jacobian(&coords, &g);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let r = [p[0] - x[0], p[1] - x[1]];
            let d = [(j[1][1] * r[0] - j[0][1] * r[1]) / det, (-j[1][0] * r[0] + j[0][0] * r[1]) / det];
            xi = [xi[0] + d[0], xi[1] + d[1]];
            if d[0].abs() + d[1].abs() < 1e-14 {
                break;
            }
        }
        let tol = 1e-9;
        if xi.iter().all(|&t| t >= -tol && t <= 1.0 + tol) {
            return Ok((c, [xi[0].clamp(0.0, 1.0), xi[1].clamp(0.0, 1.0)]));
        }
    }
    Err(FemError::PointOutside { x: p[0], y: p[1] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, Rect};
    use crate::space::Family;
    use std::sync::Arc;

    #[test]
    fn outward_normals_and_measures() {
        let m = Arc::new(build_structured_mesh(Rect::new(0.0, 2.0, 0.0, 1.0), (1, 1), &[]).unwrap());
        let s = FunctionSpace::new(m.clone(), Family::Scalar, 2).unwrap();
        let conf = Configuration::reference(&s);
        let t = ReferenceTables::standard();
        let coords = conf.cell_coords(0);
        let mut ce = CellEval::default();
        ce.compute(&t, &coords, Symmetry::Planar, 0).unwrap();
        assert!((ce.dv.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let expect = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        let mut fe = FacetEval::default();
        for e in 0..4 {
            fe.compute(&t, &coords, Symmetry::Planar, Facet { cell: 0, edge: e }).unwrap();
            assert!((fe.normal[0][0] - expect[e][0]).abs() < 1e-15 && (fe.normal[0][1] - expect[e][1]).abs() < 1e-15);
            let len: f64 = fe.ds.iter().sum();
            assert!((len - if e % 2 == 0 { 2.0 } else { 1.0 }).abs() < 1e-14);
        }
    }

    #[test]
    fn locate_inverts_the_map() {
        let m = Arc::new(build_structured_mesh(Rect::new(0.0, 3.0, 0.0, 2.0), (3, 2), &[]).unwrap());
        let s = FunctionSpace::new(m, Family::Scalar, 2).unwrap();
        let disp: Vec<[f64; 2]> = s.node_positions().iter().map(|p| [0.05 * p[1] * p[1], 0.02 * p[0]]).collect();
        let conf = Configuration::deformed(&s, &disp);
        let (c, xi) = locate(&conf, [1.7, 0.9]).unwrap();
        let x = map_point(&conf.cell_coords(c), xi);
        assert!((x[0] - 1.7).abs() < 1e-12 && (x[1] - 0.9).abs() < 1e-12);
        assert!(locate(&conf, [10.0, 0.0]).is_err());
    }
}
