use elastocap_fem::sparse::norm_inf;

use super::{kinematic_bc, mesh_velocity, traction_from_residual, HarmonicExtension, Lifting, MeshPair, SurfaceTension};
use crate::error::{PhysicsError, Result};
use crate::fluid::{FluidFrame, FluidSolver, FluidState, Transient, VelocityBc};
use crate::solid::{SolidSolver, SolidState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSettings {
    /// Fixed relaxation factor, or the first one under Aitken.
    pub omega: f64,
    pub aitken: bool,
    /// Interface residual bound relative to the interface extent.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub lifting: Lifting,
}

impl Default for CouplingSettings {
    fn default() -> Self {
        Self { omega: 0.5, aitken: true, tolerance: 1e-8, max_iterations: 50, lifting: Lifting::OneLayer }
    }
}

/// Interface motion carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingState {
    pub interface_displacement: Vec<[f64; 2]>,
    pub interface_velocity: Vec<[f64; 2]>,
    pub omega: f64,
    pub history: Vec<f64>,
}

impl CouplingState {
    pub fn new(pair: &MeshPair, omega: f64) -> Self {
        let n = pair.nodes.len();
        Self { interface_displacement: vec![[0.0; 2]; n], interface_velocity: vec![[0.0; 2]; n], omega, history: Vec::new() }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoupledStep {
    pub subiterations: usize,
    pub history: Vec<f64>,
    pub fluid_iterations: usize,
}

/// Fluid and solid solvers sharing an interface, with the fluid mesh motion.
pub struct CoupledSystem {
    pub pair: MeshPair,
    pub fluid: FluidSolver,
    pub solid: SolidSolver,
    pub extension: HarmonicExtension,
    pub settings: CouplingSettings,
    /// Nodal fluid mesh displacement at the last accepted level.
    pub fluid_displacement: Vec<[f64; 2]>,
}

impl CoupledSystem {
    pub fn new(
        pair: MeshPair,
        fluid: FluidSolver,
        solid: SolidSolver,
        extension: HarmonicExtension,
        settings: CouplingSettings,
    ) -> Result<Self> {
        fluid.bcs.validate_interface(&pair.fluid_tag)?;
        if solid.bcs.interface_tag.as_deref() != Some(pair.solid_tag.as_str()) {
            return Err(PhysicsError::Configuration("solid interface tag does not match the mesh pairing".into()));
        }
        let n = pair.fluid.phase.n_nodes();
        Ok(Self { pair, fluid, solid, extension, settings, fluid_displacement: vec![[0.0; 2]; n] })
    }

    fn interface_extent(&self) -> f64 {
        let ext = self.pair.fluid.mesh.extent();
        ext.width().max(ext.height())
    }

    /// One backward-Euler step by Dirichlet–Neumann subiteration.
    pub fn step(
        &mut self,
        fluid: &mut FluidState,
        solid: &mut SolidState,
        coupling: &mut CouplingState,
        dt: f64,
    ) -> Result<CoupledStep> {
        let fs = self.pair.fluid.clone();
        let old_disp = self.fluid_displacement.clone();
        let transient = Transient::new(&fs, &self.fluid.params, fluid, Some(&old_disp), dt)?;
        let d_old = coupling.interface_displacement.clone();
        let mut d = d_old.clone();
        let mut omega = self.settings.omega;
        let mut prev_r: Option<Vec<[f64; 2]>> = None;
        let mut report = CoupledStep::default();
        let scale = self.interface_extent();
        let tag = self.pair.fluid_tag.clone();
        let solid_tag = self.pair.solid_tag.clone();
        for k in 1..=self.settings.max_iterations {
            let disp = self.extension.extend(&self.pair.fluid_trace(&d))?;
            let w = mesh_velocity(&disp, &old_disp, dt);
            let data = kinematic_bc(&self.pair, &d, &d_old, dt);
            self.fluid.bcs.velocity.insert(tag.clone(), VelocityBc::Dirichlet { components: [true, true], data });
            let frame = FluidFrame { displacement: Some(&disp), mesh_velocity: Some(&w), transient: Some(&transient) };
            let nr = self.fluid.solve(fluid, &frame, k == 1)?;
            report.fluid_iterations += nr.iterations;
            let r = self.fluid.residual(fluid, &frame)?;
            let load = traction_from_residual(&r, &self.pair, self.settings.lifting)?;
            let phi = self.pair.phi_on_solid(fluid);
            let st = SurfaceTension { params: &self.fluid.params, tag: &solid_tag, phi: &phi };
            self.solid.solve(solid, Some(dt), Some(&load), Some(st))?;
            let star = self.pair.solid_trace(&solid.displacement);
            let res: Vec<[f64; 2]> = star.iter().zip(&d).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
            let flat: Vec<f64> = res.iter().flat_map(|v| [v[0], v[1]]).collect();
            let measure = norm_inf(&flat) / scale;
            report.subiterations = k;
            report.history.push(measure);
            if !measure.is_finite() {
                break;
            }
            if measure < self.settings.tolerance {
                coupling.interface_velocity = star.iter().zip(&d_old).map(|(a, b)| [(a[0] - b[0]) / dt, (a[1] - b[1]) / dt]).collect();
                coupling.interface_displacement = star;
                coupling.omega = omega;
                coupling.history = report.history.clone();
                self.fluid_displacement = disp;
                solid.advance();
                return Ok(report);
            }
            if self.settings.aitken {
                if let Some(pr) = &prev_r {
                    let (mut num, mut den) = (0.0, 0.0);
                    for (a, b) in res.iter().zip(pr) {
                        for i in 0..2 {
                            let dr = a[i] - b[i];
                            num += b[i] * dr;
                            den += dr * dr;
                        }
                    }
                    if den > 0.0 {
                        omega = (-omega * num / den).clamp(0.05, 1.0);
                    }
                }
            }
            for (x, r) in d.iter_mut().zip(&res) {
                x[0] += omega * r[0];
                x[1] += omega * r[1];
            }
            prev_r = Some(res);
        }
        Err(PhysicsError::CouplingFailure { iterations: report.subiterations, history: report.history })
    }
}
