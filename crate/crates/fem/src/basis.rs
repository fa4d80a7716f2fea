//! Tensor-product Lagrange bases on the reference square `[0,1]^2`.
//!
//! Local node `(i, j)` sits at `(i/p, j/p)` and has index `j*(p+1) + i`.

use crate::error::{FemError, Result};

pub const MAX_LOCAL: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagrangeQuad {
    degree: usize,
}

fn lagrange_1d(p: usize, t: f64) -> ([f64; 3], [f64; 3]) {
    match p {
        1 => ([1.0 - t, t, 0.0], [-1.0, 1.0, 0.0]),
        _ => (
            [2.0 * (t - 0.5) * (t - 1.0), 4.0 * t * (1.0 - t), 2.0 * t * (t - 0.5)],
            [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0],
        ),
    }
}

impl LagrangeQuad {
    pub fn new(degree: usize) -> Result<Self> {
        match degree {
            1 | 2 => Ok(Self { degree }),
            d => Err(FemError::UnsupportedDegree(d)),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_1d(&self) -> usize {
        self.degree + 1
    }

    pub fn len(&self) -> usize {
        self.n_1d() * self.n_1d()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Reference coordinates of local node `k`.
    pub fn node(&self, k: usize) -> [f64; 2] {
        let n = self.n_1d();
        let p = self.degree as f64;
        [(k % n) as f64 / p, (k / n) as f64 / p]
    }

    /// Values and reference gradients at `xi`.
    pub fn eval(&self, xi: [f64; 2], values: &mut [f64], grads: &mut [[f64; 2]]) {
        let n = self.n_1d();
        let (vx, dx) = lagrange_1d(self.degree, xi[0]);
        let (vy, dy) = lagrange_1d(self.degree, xi[1]);
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                values[k] = vx[i] * vy[j];
                grads[k] = [dx[i] * vy[j], vx[i] * dy[j]];
            }
        }
    }

    /// Local nodes on reference edge `e` (0 bottom, 1 right, 2 top, 3 left), ordered
    /// counter-clockwise around the cell.
    pub fn edge_nodes(&self, e: usize) -> Vec<usize> {
        let n = self.n_1d();
        let last = n - 1;
        (0..n)
            .map(|s| match e {
                0 => s,
                1 => s * n + last,
                2 => last * n + (last - s),
                _ => (last - s) * n,
            })
            .collect()
    }
}

/// Basis values and reference gradients tabulated at the points of a rule.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_basis: usize,
    pub n_points: usize,
    pub values: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
}

impl Tabulation {
    pub fn new(basis: &LagrangeQuad, points: &[[f64; 2]]) -> Self {
        let nb = basis.len();
        let mut values = vec![0.0; nb * points.len()];
        let mut grads = vec![[0.0; 2]; nb * points.len()];
        for (q, &xi) in points.iter().enumerate() {
            basis.eval(xi, &mut values[q * nb..(q + 1) * nb], &mut grads[q * nb..(q + 1) * nb]);
        }
        Self { n_basis: nb, n_points: points.len(), values, grads }
    }

    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_basis..(q + 1) * self.n_basis]
    }

    pub fn grads_at(&self, q: usize) -> &[[f64; 2]] {
        &self.grads[q * self.n_basis..(q + 1) * self.n_basis]
    }
}

/// Reference point on edge `e` at edge parameter `s ∈ [0,1]`, counter-clockwise.
pub fn edge_point(e: usize, s: f64) -> [f64; 2] {
    match e {
        0 => [s, 0.0],
        1 => [1.0, s],
        2 => [1.0 - s, 1.0],
        _ => [0.0, 1.0 - s],
    }
}

/// Reference tangent `d xi / d s` of edge `e`.
pub fn edge_tangent(e: usize) -> [f64; 2] {
    match e {
        0 => [1.0, 0.0],
        1 => [0.0, 1.0],
        2 => [-1.0, 0.0],
        _ => [0.0, -1.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::QuadratureRule;

    #[test]
    fn kronecker_property() {
        for p in [1, 2] {
            let b = LagrangeQuad::new(p).unwrap();
            let mut v = vec![0.0; b.len()];
            let mut g = vec![[0.0; 2]; b.len()];
            for k in 0..b.len() {
                b.eval(b.node(k), &mut v, &mut g);
                for (m, &vm) in v.iter().enumerate() {
                    let e = if m == k { 1.0 } else { 0.0 };
                    assert!((vm - e).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_at_quadrature_points() {
        let q = QuadratureRule::gauss_square(4);
        for p in [1, 2] {
            let t = Tabulation::new(&LagrangeQuad::new(p).unwrap(), &q.points);
            for k in 0..t.n_points {
                let s: f64 = t.values_at(k).iter().sum();
                let gs = t.grads_at(k).iter().fold([0.0, 0.0], |a, g| [a[0] + g[0], a[1] + g[1]]);
                assert!((s - 1.0).abs() < 1e-13);
                assert!(gs[0].abs() < 1e-13 && gs[1].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn edge_nodes_lie_on_edges() {
        let b = LagrangeQuad::new(2).unwrap();
        for e in 0..4 {
            let nodes = b.edge_nodes(e);
            for (s, &k) in nodes.iter().enumerate() {
                let expect = edge_point(e, s as f64 / 2.0);
                let got = b.node(k);
                assert!((got[0] - expect[0]).abs() < 1e-15 && (got[1] - expect[1]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degree_three_is_rejected() {
        assert_eq!(LagrangeQuad::new(3), Err(FemError::UnsupportedDegree(3)));
    }
}
