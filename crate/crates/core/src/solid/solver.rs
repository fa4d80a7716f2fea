use std::collections::BTreeMap;
use std::sync::Arc;

use elastocap_fem::assembly::Want;
use elastocap_fem::sparse::norm_inf;
use elastocap_fem::{CsrMatrix, CsrPattern, LuSolver};

use super::kernel::{assemble_solid, SolidLoads};
use super::{SolidBcs, SolidSpace, SolidState};
use crate::coupling::SurfaceTension;
use crate::error::{PhysicsError, Result};
use crate::mixture::SolidParams;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolidReport {
    pub iterations: usize,
    pub history: Vec<f64>,
}

/// Newton solver for the solid with essential conditions from [`SolidBcs`].
pub struct SolidSolver {
    pub space: Arc<SolidSpace>,
    pub params: SolidParams,
    pub bcs: SolidBcs,
    /// Drop inertia and solve for static equilibrium.
    pub quasi_static: bool,
    /// Bound on the update, relative to the substrate extent.
    pub tolerance: f64,
    pub max_iterations: usize,
    pattern: Arc<CsrPattern>,
    lu: LuSolver,
}

impl SolidSolver {
    pub fn new(space: Arc<SolidSpace>, params: SolidParams, bcs: SolidBcs) -> Result<Self> {
        bcs.validate(&space.mesh)?;
        let pattern = Arc::new(space.layout.pattern(&space.layout));
        Ok(Self { space, params, bcs, quasi_static: false, tolerance: 1e-12, max_iterations: 25, pattern, lu: LuSolver::new() })
    }

    pub fn constraints(&self) -> Result<BTreeMap<usize, f64>> {
        let sp = &self.space.space;
        let mut out = BTreeMap::new();
        for (tag, bc) in &self.bcs.dirichlet {
            for &n in sp.boundary_nodes(tag)? {
                let Some(k) = sp.scalar_dof_of_node(n as usize) else { continue };
                let v = bc.value.as_ref().map_or([0.0; 2], |f| f(sp.node_position(n as usize)));
                for i in 0..2 {
                    if bc.components[i] {
                        out.insert(sp.dof(i, k), v[i]);
                    }
                }
            }
        }
        Ok(out)
    }

    fn loads<'a>(
        &self,
        prev: &'a (Vec<[f64; 2]>, Vec<[f64; 2]>),
        dt: Option<f64>,
        interface: Option<&'a [f64]>,
        surface: Option<SurfaceTension<'a>>,
    ) -> SolidLoads<'a> {
        let dt = if self.quasi_static { None } else { dt };
        SolidLoads { interface, surface, dt, previous: dt.map(|_| (prev.0.as_slice(), prev.1.as_slice())) }
    }

    fn history(&self, state: &SolidState) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
        (self.space.space.expand_vector(&state.previous), self.space.space.expand_vector(&state.previous2))
    }

    /// Raw residual with no essential conditions applied.
    pub fn residual(
        &self,
        state: &SolidState,
        dt: Option<f64>,
        interface: Option<&[f64]>,
        surface: Option<SurfaceTension>,
    ) -> Result<Vec<f64>> {
        let prev = self.history(state);
        let loads = self.loads(&prev, dt, interface, surface);
        Ok(assemble_solid(&self.space, &self.params, &self.bcs, &state.displacement, loads, &self.pattern, Want::Vector)?.rhs)
    }

    /// Raw Jacobian with no essential conditions applied.
    pub fn jacobian(&self, state: &SolidState, dt: Option<f64>, surface: Option<SurfaceTension>) -> Result<CsrMatrix> {
        let prev = self.history(state);
        let loads = self.loads(&prev, dt, None, surface);
        Ok(assemble_solid(&self.space, &self.params, &self.bcs, &state.displacement, loads, &self.pattern, Want::Both)?.matrix)
    }

    /// Newton iteration on `state.displacement` for the given loads.
    pub fn solve(
        &mut self,
        state: &mut SolidState,
        dt: Option<f64>,
        interface: Option<&[f64]>,
        surface: Option<SurfaceTension>,
    ) -> Result<SolidReport> {
        let cons = self.constraints()?;
        for (&d, &v) in &cons {
            state.displacement[d] = v;
        }
        let ext = self.space.mesh.extent();
        let scale = ext.width().max(ext.height());
        let prev = self.history(state);
        let mut report = SolidReport::default();
        for it in 1..=self.max_iterations {
            let loads = self.loads(&prev, dt, interface, surface);
            let sys = assemble_solid(&self.space, &self.params, &self.bcs, &state.displacement, loads, &self.pattern, Want::Both)?;
            let mut m = sys.matrix;
            let mut rhs: Vec<f64> = sys.rhs.iter().map(|r| -r).collect();
            for &d in cons.keys() {
                m.set_identity_row(d);
                rhs[d] = 0.0;
            }
            let (dx, _) = self.lu.factorize(m)?.solve(&rhs)?;
            for (x, d) in state.displacement.iter_mut().zip(&dx) {
                *x += d;
            }
            let measure = norm_inf(&dx) / scale;
            report.iterations = it;
            report.history.push(measure);
            if !measure.is_finite() {
                break;
            }
            if measure < self.tolerance {
                return Ok(report);
            }
        }
        Err(PhysicsError::NewtonFailure { iterations: report.iterations, last: report.history.last().copied().unwrap_or(f64::NAN) })
    }
}
