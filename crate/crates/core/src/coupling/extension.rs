use std::collections::BTreeMap;
use std::sync::Arc;

use elastocap_fem::assembly::{assemble, BlockLayout};
use elastocap_fem::geometry::min_jacobian;
use elastocap_fem::kernels::{Order, ScalarKernel};
use elastocap_fem::{Configuration, Factorization, FunctionSpace, LuSolver, ReferenceTables, Symmetry};

use crate::error::{PhysicsError, Result};

/// Componentwise discrete Laplace extension of interface motion into the
/// fluid reference mesh, factored once per component.
pub struct HarmonicExtension {
    space: Arc<FunctionSpace>,
    interface: String,
    factors: [Factorization; 2],
    fixed: [Vec<usize>; 2],
    tables: ReferenceTables,
}

impl HarmonicExtension {
    /// `sliding` tags fix only the normal component; every other
    /// non-interface boundary is held fixed.
    pub fn new(space: Arc<FunctionSpace>, interface: &str, sliding: &[&str]) -> Result<Self> {
        let mesh = space.mesh().clone();
        if !mesh.has_tag(interface) {
            return Err(PhysicsError::Configuration(format!("unknown interface tag `{interface}`")));
        }
        let tables = ReferenceTables::standard();
        let kernel = ScalarKernel {
            config: Configuration::reference(&space),
            tables: &tables,
            symmetry: Symmetry::Planar,
            order: Order::Biquadratic,
            mass: 0.0,
            stiffness: 1.0,
            source: None,
            state: None,
        };
        let layout = BlockLayout::single(space.clone());
        let laplace = assemble(&kernel, &layout, &layout)?.matrix;
        let mut fixed: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for c in 0..2 {
            let mut set = std::collections::BTreeSet::new();
            for tag in mesh.boundary_tags() {
                if let Some(_) = sliding.iter().find(|s| **s == tag) {
                    let f = mesh.facets(tag)?[0];
                    let [a, b] = mesh.facet_endpoints(f);
                    let normal_axis = if (a[0] - b[0]).abs() < (a[1] - b[1]).abs() { 0 } else { 1 };
                    if normal_axis != c {
                        continue;
                    }
                }
                set.extend(space.boundary_dofs(tag)?);
            }
            fixed[c] = set.into_iter().collect();
        }
        let mut lu = LuSolver::new();
        let factors = [0, 1].map(|c| {
            let mut m = laplace.clone();
            for &d in &fixed[c] {
                m.set_identity_row(d);
            }
            lu.factorize(m)
        });
        let [f0, f1] = factors;
        Ok(Self { space, interface: interface.to_string(), factors: [f0?, f1?], fixed, tables })
    }

    /// Nodal extension of `trace` (interface node → displacement); other
    /// boundary data is zero.
    pub fn extend(&self, trace: &BTreeMap<u32, [f64; 2]>) -> Result<Vec<[f64; 2]>> {
        let sp = &self.space;
        let n = sp.n_scalar_dofs();
        let mut out = vec![[0.0; 2]; sp.n_nodes()];
        let on_interface: std::collections::BTreeSet<usize> = sp.boundary_dofs(&self.interface)?.into_iter().collect();
        for c in 0..2 {
            let mut rhs = vec![0.0; n];
            for &d in &self.fixed[c] {
                if on_interface.contains(&d) {
                    let node = sp.free_node(d) as u32;
                    rhs[d] = trace.get(&node).map_or(0.0, |v| v[c]);
                }
            }
            let (x, _) = self.factors[c].solve(&rhs)?;
            for (k, v) in sp.expand_scalar(&x).into_iter().enumerate() {
                out[k][c] = v;
            }
        }
        self.check(&out)?;
        Ok(out)
    }

    /// Fails with the worst cell when the deformed fluid mesh folds.
    pub fn check(&self, displacement: &[[f64; 2]]) -> Result<()> {
        let (cell, det) = min_jacobian(&Configuration::deformed(&self.space, displacement), &self.tables);
        if det > 0.0 {
            Ok(())
        } else {
            Err(PhysicsError::MeshTangling { cell, det })
        }
    }
}

/// Backward-difference mesh velocity `(χⁿ − χⁿ⁻¹)/Δt` at every node.
pub fn mesh_velocity(current: &[[f64; 2]], previous: &[[f64; 2]], dt: f64) -> Vec<[f64; 2]> {
    current.iter().zip(previous).map(|(a, b)| [(a[0] - b[0]) / dt, (a[1] - b[1]) / dt]).collect()
}
