//! Scalar mass and Laplace kernels, with optional source terms.

use crate::assembly::{Kernel, LocalSystem};
use crate::error::Result;
use crate::geometry::{CellEval, Configuration, ReferenceTables, Symmetry};

/// Which reference basis the kernel integrates against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Bilinear,
    Biquadratic,
}

impl Order {
    fn n(self) -> usize {
        match self {
            Order::Bilinear => 4,
            Order::Biquadratic => 9,
        }
    }
}

/// `a(u, v) = ∫ (mass·u v + stiffness·∇u·∇v)` and `l(v) = ∫ f v`, vector part set to `A u − l`
/// when `state` is given and `−l` otherwise.
pub struct ScalarKernel<'a> {
    pub config: Configuration<'a>,
    pub tables: &'a ReferenceTables,
    pub symmetry: Symmetry,
    pub order: Order,
    pub mass: f64,
    pub stiffness: f64,
    pub source: Option<&'a (dyn Fn([f64; 2]) -> f64 + Sync)>,
    /// Nodal values of the current iterate at all nodes of the kernel's space.
    pub state: Option<(&'a crate::space::FunctionSpace, &'a [f64])>,
}

impl Kernel for ScalarKernel<'_> {
    fn local_dims(&self) -> (usize, usize) {
        (self.order.n(), self.order.n())
    }

    fn cell(&self, cell: usize, local: &mut LocalSystem) -> Result<()> {
        let mut ce = CellEval::default();
        ce.compute(self.tables, &self.config.cell_coords(cell), self.symmetry, cell)?;
        let n = self.order.n();
        let u: Option<Vec<f64>> =
            self.state.map(|(s, vals)| s.cell_nodes(cell).iter().map(|&k| vals[k as usize]).collect());
        for q in 0..ce.n_qp {
            let (v, g) = match self.order {
                Order::Bilinear => (self.tables.q1.values_at(q), ce.grad1_at(q)),
                Order::Biquadratic => (self.tables.q2.values_at(q), ce.grad2_at(q)),
            };
            let dv = ce.dv[q];
            let f = self.source.map_or(0.0, |s| s(ce.x[q]));
            let (uq, gq) = match &u {
                Some(u) => (
                    (0..n).map(|a| u[a] * v[a]).sum::<f64>(),
                    (0..n).fold([0.0, 0.0], |acc, a| [acc[0] + u[a] * g[a][0], acc[1] + u[a] * g[a][1]]),
                ),
                None => (0.0, [0.0, 0.0]),
            };
            for a in 0..n {
                local.vector[a] += dv * (self.mass * uq * v[a] + self.stiffness * (gq[0] * g[a][0] + gq[1] * g[a][1]) - f * v[a]);
                if local.want_matrix {
                    for b in 0..n {
                        let m = self.mass * v[a] * v[b] + self.stiffness * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                        local.add_matrix(a, b, dv * m);
                    }
                }
            }
        }
        Ok(())
    }
}
