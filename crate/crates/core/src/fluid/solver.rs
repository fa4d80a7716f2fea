use std::collections::BTreeMap;
use std::sync::Arc;

use elastocap_fem::assembly::Want;
use elastocap_fem::sparse::norm_inf;
use elastocap_fem::{solve_linear, CsrMatrix, CsrPattern, Factorization, FemError, LuSolver, SparseSystem};

use super::kernel::{assemble_fluid, FluidFrame, Rows};
use super::{FluidBcs, FluidSpaces, FluidState, PhaseBc, PotentialBc, VelocityBc, VelocityData};
use crate::error::{PhysicsError, Result};
use crate::mixture::FluidParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Bound on the block-scaled update norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Refactor when successive updates contract by less than this.
    pub refactor_ratio: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tolerance: 1e-9, max_iterations: 25, refactor_ratio: 0.5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub factorizations: usize,
    pub history: Vec<f64>,
}

/// Monolithic fluid solver with a cached Jacobian factorization.
pub struct FluidSolver {
    pub spaces: Arc<FluidSpaces>,
    pub params: FluidParams,
    pub bcs: FluidBcs,
    pub settings: NewtonSettings,
    pattern: Arc<CsrPattern>,
    lu: LuSolver,
    factor: Option<Factorization>,
    floors: [f64; 4],
}

pub(crate) fn tangling(e: PhysicsError) -> PhysicsError {
    match e {
        PhysicsError::Fem(FemError::DegenerateCell { cell, det }) => PhysicsError::MeshTangling { cell, det },
        e => e,
    }
}

impl FluidSolver {
    pub fn new(spaces: Arc<FluidSpaces>, params: FluidParams, bcs: FluidBcs) -> Result<Self> {
        params.validate()?;
        bcs.validate(&spaces.mesh)?;
        let pattern = Arc::new(spaces.layout.pattern(&spaces.layout));
        let ext = spaces.mesh.extent();
        let length = ext.width().max(ext.height());
        let floors = [
            params.sigma / params.nu1.max(params.nu2),
            params.sigma / length,
            1.0,
            params.sigma_tilde() / params.epsilon,
        ];
        Ok(Self { spaces, params, bcs, settings: NewtonSettings::default(), pattern, lu: LuSolver::new(), factor: None, floors })
    }

    /// Drop the cached factorization, forcing a fresh Jacobian next solve.
    pub fn invalidate(&mut self) {
        self.factor = None;
    }

    /// Essential values keyed by monolithic dof.
    pub fn constraints(&self, frame: &FluidFrame) -> Result<BTreeMap<usize, f64>> {
        let s = &*self.spaces;
        let pos = |n: usize| {
            let x = s.phase.node_position(n);
            frame.displacement.map_or(x, |d| [x[0] + d[n][0], x[1] + d[n][1]])
        };
        let mut out = BTreeMap::new();
        for (tag, bc) in &self.bcs.velocity {
            let VelocityBc::Dirichlet { components, data } = bc else { continue };
            for &n in s.velocity.boundary_nodes(tag)? {
                let n = n as usize;
                let Some(k) = s.velocity.scalar_dof_of_node(n) else { continue };
                let value = match data {
                    VelocityData::Zero => [0.0; 2],
                    VelocityData::Function(f) => f(pos(n)),
                    VelocityData::Nodal(m) => m.get(&(n as u32)).copied().unwrap_or([0.0; 2]),
                };
                for i in 0..2 {
                    if components[i] {
                        out.insert(s.u_offset(i) + k, value[i]);
                    }
                }
            }
        }
        for (tag, bc) in &self.bcs.phase {
            if let PhaseBc::Dirichlet(f) = bc {
                for &n in s.phase.boundary_nodes(tag)? {
                    if let Some(k) = s.phase.scalar_dof_of_node(n as usize) {
                        out.insert(s.phi_offset() + k, f(pos(n as usize)));
                    }
                }
            }
        }
        for (tag, bc) in &self.bcs.potential {
            if let PotentialBc::Dirichlet(f) = bc {
                for &n in s.phase.boundary_nodes(tag)? {
                    if let Some(k) = s.phase.scalar_dof_of_node(n as usize) {
                        out.insert(s.mu_offset() + k, f(pos(n as usize)));
                    }
                }
            }
        }
        if let Some(p) = self.bcs.pressure_pin {
            let k = (0..s.n1())
                .min_by(|&a, &b| {
                    let da = dist2(s.pressure.node_position(s.pressure.free_node(a)), p);
                    let db = dist2(s.pressure.node_position(s.pressure.free_node(b)), p);
                    da.total_cmp(&db)
                })
                .ok_or_else(|| PhysicsError::Configuration("empty pressure space".into()))?;
            out.insert(s.p_offset() + k, 0.0);
        }
        Ok(out)
    }

    fn assemble(&self, x: &[f64], frame: &FluidFrame, rows: Rows, want: Want) -> Result<SparseSystem> {
        let s = &*self.spaces;
        let nodal = FluidState::from_vector(s, x).nodal(s);
        assemble_fluid(s, &self.params, &self.bcs, &nodal, frame, rows, &self.pattern, want).map_err(tangling)
    }

    /// Raw residual with no essential conditions applied.
    pub fn residual(&self, state: &FluidState, frame: &FluidFrame) -> Result<Vec<f64>> {
        Ok(self.assemble(&state.to_vector(), frame, Rows::ALL, Want::Vector)?.rhs)
    }

    /// Raw Jacobian with no essential conditions applied.
    pub fn jacobian(&self, state: &FluidState, frame: &FluidFrame) -> Result<CsrMatrix> {
        Ok(self.assemble(&state.to_vector(), frame, Rows::ALL, Want::Both)?.matrix)
    }

    fn scaled_update(&self, x: &[f64], dx: &[f64]) -> f64 {
        let s = &*self.spaces;
        let ranges = [0..s.p_offset(), s.p_offset()..s.phi_offset(), s.phi_offset()..s.mu_offset(), s.mu_offset()..s.n_dofs()];
        ranges
            .into_iter()
            .zip(self.floors)
            .map(|(r, floor)| norm_inf(&dx[r.clone()]) / (norm_inf(&x[r]) + floor))
            .fold(0.0, f64::max)
    }

    /// Modified Newton iteration; `fresh` forces a new Jacobian at the start.
    pub fn solve(&mut self, state: &mut FluidState, frame: &FluidFrame, fresh: bool) -> Result<NewtonReport> {
        let s = self.spaces.clone();
        let cons = self.constraints(frame)?;
        let mut x = state.to_vector();
        for (&d, &v) in &cons {
            x[d] = v;
        }
        let mut report = NewtonReport::default();
        let mut need = fresh || self.factor.is_none();
        let mut prev = f64::INFINITY;
        let mut last = f64::NAN;
        for it in 1..=self.settings.max_iterations {
            let refreshed = need;
            let sys = self.assemble(&x, frame, Rows::ALL, if need { Want::Both } else { Want::Vector })?;
            if need {
                let mut m = sys.matrix;
                for &d in cons.keys() {
                    m.set_identity_row(d);
                }
                self.factor = Some(self.lu.factorize(m)?);
                report.factorizations += 1;
                need = false;
            }
            let mut rhs: Vec<f64> = sys.rhs.iter().map(|r| -r).collect();
            for &d in cons.keys() {
                rhs[d] = 0.0;
            }
            let (dx, _) = self.factor.as_ref().expect("factorization present").solve(&rhs)?;
            let measure = self.scaled_update(&x, &dx);
            report.iterations = it;
            report.history.push(measure);
            last = measure;
            if !measure.is_finite() || (!refreshed && measure > prev) {
                if refreshed {
                    break;
                }
                need = true;
                continue;
            }
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            if measure < self.settings.tolerance {
                *state = FluidState::from_vector(&s, &x);
                return Ok(report);
            }
            if it > 1 && measure > self.settings.refactor_ratio * prev {
                need = true;
            }
            prev = measure;
        }
        Err(PhysicsError::NewtonFailure { iterations: report.iterations, last })
    }

    /// Sets μ consistent with φ by solving the (linear) chemical-potential rows.
    pub fn project_potential(&self, state: &mut FluidState, frame: &FluidFrame) -> Result<()> {
        let s = &*self.spaces;
        let x = state.to_vector();
        let sys = self.assemble(&x, frame, Rows::PHASE, Want::Both)?;
        let cons = self.constraints(frame)?;
        let mut lin = SparseSystem::new(sys.matrix, sys.rhs.iter().map(|r| -r).collect());
        for d in 0..s.mu_offset() {
            lin.constrain(d, 0.0);
        }
        for (&d, &v) in cons.range(s.mu_offset()..) {
            lin.constrain(d, v - x[d]);
        }
        let dx = solve_linear(&lin)?;
        for k in 0..s.n2() {
            state.mu[k] += dx[s.mu_offset() + k];
        }
        Ok(())
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}
