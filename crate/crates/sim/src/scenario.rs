//! Meshes, boundary conditions, solvers and initial data for a configured run.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use elastocap_core::coupling::{CoupledSystem, CouplingSettings, CouplingState, HarmonicExtension, Lifting, MeshPair};
use elastocap_core::fluid::{FluidBcs, FluidFrame, FluidSolver, FluidSpaces, FluidState, PhaseBc, PotentialBc, VelocityBc};
use elastocap_core::solid::{SolidBcs, SolidDirichlet, SolidSolver, SolidSpace, SolidState};
use elastocap_fem::{QuadtreeBuilder, Rect, RefineBox, Symmetry};

use crate::config::{Config, Derived, RefinementBox, Substrate};
use crate::error::{SimError, SimResult};

/// Fluid tag shared with the substrate.
pub const WALL: &str = "bottom";
/// Substrate tag shared with the fluid.
pub const SOLID_INTERFACE: &str = "top";

pub enum Model {
    Fluid(FluidSolver),
    Coupled(Box<CoupledSystem>),
}

/// Everything that stays fixed during a run.
pub struct Scenario {
    pub config: Config,
    pub derived: Derived,
    pub symmetry: Symmetry,
    pub spaces: Arc<FluidSpaces>,
    pub model: Model,
}

/// Time-level data advanced by the run loop.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub step: usize,
    /// Internal time, μs.
    pub time: f64,
    pub fluid: FluidState,
    pub solid: Option<SolidState>,
    pub coupling: Option<CouplingState>,
    /// Nodal fluid mesh displacement of the accepted level.
    pub fluid_displacement: Option<Vec<[f64; 2]>>,
    /// ∫φ of the initial state.
    pub phase_total0: f64,
}

/// Distance between the circle of radius `r` about `c` and the rectangle.
fn circle_rect_distance(rect: &Rect, c: [f64; 2], r: f64) -> f64 {
    let near = [c[0].clamp(rect.x0, rect.x1), c[1].clamp(rect.y0, rect.y1)];
    let far = [
        if (rect.x0 - c[0]).abs() > (rect.x1 - c[0]).abs() { rect.x0 } else { rect.x1 },
        if (rect.y0 - c[1]).abs() > (rect.y1 - c[1]).abs() { rect.y0 } else { rect.y1 },
    ];
    let dmin = (near[0] - c[0]).hypot(near[1] - c[1]);
    let dmax = (far[0] - c[0]).hypot(far[1] - c[1]);
    if dmin <= r && r <= dmax {
        0.0
    } else {
        (dmin - r).abs().min((dmax - r).abs())
    }
}

fn refine_boxes(b: &mut QuadtreeBuilder, boxes: &[RefinementBox]) -> SimResult<()> {
    for rb in boxes {
        let [x0, x1, y0, y1] = rb.region;
        b.refine_box(&RefineBox { region: Rect::new(x0, x1, y0, y1), levels: rb.levels }).map_err(SimError::setup)?;
    }
    Ok(())
}

/// Droplet order parameter: +1 inside, −1 outside.
pub fn droplet_profile(config: &Config, epsilon: f64) -> impl Fn([f64; 2]) -> f64 {
    let c = config.geometry.droplet_center;
    let r = config.geometry.droplet_radius;
    move |x: [f64; 2]| (-((x[0] - c[0]).hypot(x[1] - c[1]) - r) / (SQRT_2 * epsilon)).tanh()
}

impl Scenario {
    pub fn build(config: Config) -> SimResult<Self> {
        let derived = config.validate()?;
        let symmetry: Symmetry = config.symmetry.into();
        let g = &config.geometry;
        let d = &config.discretization;
        let domain = derived.domain;

        let mut fluid_mesh = QuadtreeBuilder::new(domain, (d.base_resolution[0], d.base_resolution[1])).map_err(SimError::setup)?;
        let (level, band, c, r) = (derived.band_level, derived.band_half_width, g.droplet_center, g.droplet_radius);
        fluid_mesh.refine_where(|rect, l| l < level && circle_rect_distance(rect, c, r) < band).map_err(SimError::setup)?;
        refine_boxes(&mut fluid_mesh, &d.refine_boxes)?;

        let fp = derived.fluid;
        let mut bcs = FluidBcs::default();
        let neutral = (PhaseBc::Neutral, PotentialBc::NoFlux);
        match g.substrate {
            Substrate::None => {
                for tag in ["bottom", "right", "top", "left"] {
                    bcs.set(tag, VelocityBc::no_slip(), neutral.0.clone(), neutral.1.clone());
                }
                bcs.pressure_pin = Some([domain.x1, domain.y1]);
            }
            Substrate::Rigid | Substrate::Elastic => {
                bcs.set(WALL, VelocityBc::no_slip(), PhaseBc::Wetting, PotentialBc::NoFlux);
                bcs.set("left", VelocityBc::slip(0), neutral.0.clone(), neutral.1.clone());
                bcs.set("right", VelocityBc::slip(0), neutral.0.clone(), neutral.1.clone());
                bcs.set("top", VelocityBc::Open, neutral.0.clone(), neutral.1.clone());
            }
        }

        let s = &config.solver;
        let (spaces, model) = if g.substrate == Substrate::Elastic {
            let thickness = g.substrate_thickness.expect("validated");
            let h0 = domain.width() / d.base_resolution[0] as f64;
            let layers = ((thickness / h0).round() as usize).max(1);
            let solid_rect = Rect::new(domain.x0, domain.x1, domain.y0 - thickness, domain.y0);
            let mut solid_mesh = QuadtreeBuilder::new(solid_rect, (d.base_resolution[0], layers)).map_err(SimError::setup)?;
            refine_boxes(&mut solid_mesh, &d.solid_refine_boxes)?;
            QuadtreeBuilder::match_shared_edge(&mut fluid_mesh, &mut solid_mesh).map_err(SimError::setup)?;
            let spaces = Arc::new(FluidSpaces::new(Arc::new(fluid_mesh.build()), symmetry)?);
            let solid_space = Arc::new(SolidSpace::new(Arc::new(solid_mesh.build()), symmetry)?);
            let pair = MeshPair::new(spaces.clone(), solid_space.clone(), WALL, SOLID_INTERFACE)?;
            let mut fluid = FluidSolver::new(spaces.clone(), fp, bcs)?;
            fluid.settings.tolerance = s.newton_tolerance;
            fluid.settings.max_iterations = s.newton_max_iterations;
            let mut sb = SolidBcs { interface_tag: Some(SOLID_INTERFACE.into()), ..SolidBcs::default() };
            sb.dirichlet.insert("bottom".into(), SolidDirichlet::clamped());
            sb.dirichlet.insert("right".into(), SolidDirichlet::clamped());
            sb.dirichlet.insert("left".into(), SolidDirichlet::roller(0));
            let mut solid = SolidSolver::new(solid_space, derived.solid.expect("validated"), sb)?;
            solid.quasi_static = config.time.quasi_static;
            let ext = HarmonicExtension::new(spaces.phase.clone(), WALL, &["left"])?;
            let settings = CouplingSettings {
                omega: s.omega,
                aitken: s.aitken,
                tolerance: s.coupling_tolerance,
                max_iterations: s.coupling_max_iterations,
                lifting: Lifting::OneLayer,
            };
            let sys = CoupledSystem::new(pair, fluid, solid, ext, settings)?;
            (spaces, Model::Coupled(Box::new(sys)))
        } else {
            let spaces = Arc::new(FluidSpaces::new(Arc::new(fluid_mesh.build()), symmetry)?);
            let mut fluid = FluidSolver::new(spaces.clone(), fp, bcs)?;
            fluid.settings.tolerance = s.newton_tolerance;
            fluid.settings.max_iterations = s.newton_max_iterations;
            (spaces, Model::Fluid(fluid))
        };
        if spaces.velocity.node_positions() != spaces.phase.node_positions() {
            return Err(SimError::Setup("velocity and phase spaces disagree on node ordering".into()));
        }
        log::info!(
            "fluid mesh: {} cells, {} unknowns, {:.2} cells per ε in the band (level {})",
            spaces.mesh.num_cells(),
            spaces.n_dofs(),
            derived.cells_per_epsilon,
            derived.band_level
        );
        if let Model::Coupled(sys) = &model {
            log::info!("substrate mesh: {} cells, {} unknowns", sys.pair.solid.mesh.num_cells(), sys.pair.solid.n_dofs());
        }
        Ok(Self { config, derived, symmetry, spaces, model })
    }

    pub fn fluid_solver(&self) -> &FluidSolver {
        match &self.model {
            Model::Fluid(f) => f,
            Model::Coupled(sys) => &sys.fluid,
        }
    }

    pub fn solid_space(&self) -> Option<&Arc<SolidSpace>> {
        match &self.model {
            Model::Fluid(_) => None,
            Model::Coupled(sys) => Some(&sys.pair.solid),
        }
    }

    /// Quiescent droplet with a consistent chemical potential and an undeformed substrate.
    pub fn initial_state(&self) -> SimResult<RunState> {
        let s = &self.spaces;
        let mut fluid = FluidState::zeros(s);
        fluid.phi = s.phase.interpolate(droplet_profile(&self.config, self.derived.fluid.epsilon));
        self.fluid_solver().project_potential(&mut fluid, &FluidFrame::default())?;
        let phase_total0 = elastocap_core::fluid::phase_total(s, &fluid, None)?;
        let (solid, coupling, fluid_displacement) = match &self.model {
            Model::Fluid(_) => (None, None, None),
            Model::Coupled(sys) => (
                Some(SolidState::zeros(&sys.pair.solid)),
                Some(CouplingState::new(&sys.pair, sys.settings.omega)),
                Some(vec![[0.0; 2]; s.phase.n_nodes()]),
            ),
        };
        Ok(RunState { step: 0, time: 0.0, fluid, solid, coupling, fluid_displacement, phase_total0 })
    }

    /// Reference substrate volume in the measure of the run.
    pub fn solid_reference_volume(&self) -> Option<f64> {
        let thickness = self.config.geometry.substrate_thickness?;
        let d = self.derived.domain;
        Some(match self.symmetry {
            Symmetry::Planar => d.width() * thickness,
            Symmetry::Axisymmetric => std::f64::consts::PI * (d.x1 * d.x1 - d.x0 * d.x0) * thickness,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_distance_cases() {
        let r = Rect::new(0.0, 1.0, 0.0, 1.0);
        assert_eq!(circle_rect_distance(&r, [0.0, 0.0], 0.5), 0.0);
        assert!((circle_rect_distance(&r, [0.0, 0.0], 3.0) - (3.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!((circle_rect_distance(&r, [3.0, 0.5], 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(circle_rect_distance(&r, [0.5, 0.5], 0.1), 0.0);
    }
}
