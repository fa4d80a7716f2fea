//! Two-phase Navier–Stokes–Cahn–Hilliard fluid in ALE form.
//!
//! Unknowns are a biquadratic velocity, bilinear pressure, and biquadratic
//! order parameter φ and chemical potential μ, assembled into one monolithic
//! vector `[u_x, u_y, p, φ, μ]`.

mod diagnostics;
mod kernel;
mod solver;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use elastocap_fem::{BlockLayout, Family, FunctionSpace, Mesh, ReferenceTables, Symmetry};

use crate::error::{PhysicsError, Result};

pub use diagnostics::{free_energy, max_phase_overshoot, phase_total, strong_traction, EnergyParts};
pub use kernel::{assemble_cahn_hilliard, assemble_fluid, assemble_momentum_mass, FluidFrame, Rows, Transient};
pub use solver::{FluidSolver, NewtonReport, NewtonSettings};

pub type ScalarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Prescribed velocity values.
#[derive(Clone)]
pub enum VelocityData {
    Zero,
    Function(VectorFn),
    /// Values at geometric nodes; nodes not listed get zero.
    Nodal(Arc<HashMap<u32, [f64; 2]>>),
}

#[derive(Clone)]
pub enum VelocityBc {
    /// Essential data on the flagged components; the others are traction-free.
    Dirichlet { components: [bool; 2], data: VelocityData },
    /// Prescribed traction `g_N^u`.
    Traction(VectorFn),
    /// Traction-free open boundary.
    Open,
}

impl VelocityBc {
    pub fn no_slip() -> Self {
        VelocityBc::Dirichlet { components: [true, true], data: VelocityData::Zero }
    }

    /// Zero normal velocity on an axis-aligned boundary whose normal is `axis`.
    pub fn slip(axis: usize) -> Self {
        let mut components = [false; 2];
        components[axis] = true;
        VelocityBc::Dirichlet { components, data: VelocityData::Zero }
    }
}

#[derive(Clone)]
pub enum PhaseBc {
    /// Natural condition `∂_n φ = 0`.
    Neutral,
    /// Wetting condition with the fluid–solid surface energy.
    Wetting,
    /// Natural condition with data `g_N^φ`.
    Flux(ScalarFn),
    Dirichlet(ScalarFn),
}

#[derive(Clone)]
pub enum PotentialBc {
    NoFlux,
    Flux(ScalarFn),
    Dirichlet(ScalarFn),
}

/// Boundary conditions keyed by mesh tag; one condition per tag and variable.
#[derive(Clone, Default)]
pub struct FluidBcs {
    pub velocity: BTreeMap<String, VelocityBc>,
    pub phase: BTreeMap<String, PhaseBc>,
    pub potential: BTreeMap<String, PotentialBc>,
    /// Pin the pressure at the bilinear node nearest to this point.
    pub pressure_pin: Option<[f64; 2]>,
}

impl FluidBcs {
    /// Same condition set on every listed tag.
    pub fn uniform(tags: &[&str], velocity: VelocityBc, phase: PhaseBc, potential: PotentialBc) -> Self {
        let mut b = FluidBcs::default();
        for t in tags {
            b.velocity.insert(t.to_string(), velocity.clone());
            b.phase.insert(t.to_string(), phase.clone());
            b.potential.insert(t.to_string(), potential.clone());
        }
        b
    }

    pub fn set(&mut self, tag: &str, velocity: VelocityBc, phase: PhaseBc, potential: PotentialBc) {
        self.velocity.insert(tag.to_string(), velocity);
        self.phase.insert(tag.to_string(), phase);
        self.potential.insert(tag.to_string(), potential);
    }

    /// Every boundary facet must be covered for every variable.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        let mut missing = Vec::new();
        for tag in mesh.boundary_tags() {
            let n = mesh.facets(tag)?.len();
            for (what, ok) in [
                ("velocity", self.velocity.contains_key(tag)),
                ("phase", self.phase.contains_key(tag)),
                ("potential", self.potential.contains_key(tag)),
            ] {
                if !ok {
                    missing.push(format!("{tag} ({n} facets, no {what} condition)"));
                }
            }
        }
        for tag in self.velocity.keys().chain(self.phase.keys()).chain(self.potential.keys()) {
            if !mesh.has_tag(tag) {
                return Err(PhysicsError::Configuration(format!("condition given for unknown boundary tag `{tag}`")));
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(PhysicsError::Configuration(format!("untagged facets: {}", missing.join(", "))))
        }
    }

    /// A fluid–solid interface must carry full velocity data, wetting and no flux.
    pub fn validate_interface(&self, tag: &str) -> Result<()> {
        let ok_u = matches!(self.velocity.get(tag), Some(VelocityBc::Dirichlet { components: [true, true], .. }));
        let ok_phi = matches!(self.phase.get(tag), Some(PhaseBc::Wetting));
        let ok_mu = matches!(self.potential.get(tag), Some(PotentialBc::NoFlux));
        if ok_u && ok_phi && ok_mu {
            Ok(())
        } else {
            Err(PhysicsError::Configuration(format!(
                "interface `{tag}` needs Dirichlet velocity, wetting and zero chemical-potential flux"
            )))
        }
    }
}

/// Spaces and layout of the monolithic fluid system.
pub struct FluidSpaces {
    pub mesh: Arc<Mesh>,
    pub velocity: Arc<FunctionSpace>,
    pub pressure: Arc<FunctionSpace>,
    /// Shared by φ and μ; also describes the geometry.
    pub phase: Arc<FunctionSpace>,
    pub layout: BlockLayout,
    pub symmetry: Symmetry,
    pub tables: ReferenceTables,
}

impl FluidSpaces {
    pub fn new(mesh: Arc<Mesh>, symmetry: Symmetry) -> Result<Self> {
        let velocity = Arc::new(FunctionSpace::new(mesh.clone(), Family::Vector, 2)?);
        let pressure = Arc::new(FunctionSpace::new(mesh.clone(), Family::Scalar, 1)?);
        let phase = Arc::new(FunctionSpace::new(mesh.clone(), Family::Scalar, 2)?);
        let layout = BlockLayout::new(&[velocity.clone(), pressure.clone(), phase.clone(), phase.clone()])?;
        Ok(Self { mesh, velocity, pressure, phase, layout, symmetry, tables: ReferenceTables::standard() })
    }

    pub fn n2(&self) -> usize {
        self.phase.n_scalar_dofs()
    }

    pub fn n1(&self) -> usize {
        self.pressure.n_scalar_dofs()
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.n_dofs()
    }

    pub fn u_offset(&self, comp: usize) -> usize {
        comp * self.n2()
    }

    pub fn p_offset(&self) -> usize {
        2 * self.n2()
    }

    pub fn phi_offset(&self) -> usize {
        2 * self.n2() + self.n1()
    }

    pub fn mu_offset(&self) -> usize {
        3 * self.n2() + self.n1()
    }
}

/// Coefficients of (u, p, φ, μ).
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
}

impl FluidState {
    pub fn zeros(s: &FluidSpaces) -> Self {
        Self { u: vec![0.0; 2 * s.n2()], p: vec![0.0; s.n1()], phi: vec![0.0; s.n2()], mu: vec![0.0; s.n2()] }
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.u.len() + self.p.len() + 2 * self.phi.len());
        v.extend_from_slice(&self.u);
        v.extend_from_slice(&self.p);
        v.extend_from_slice(&self.phi);
        v.extend_from_slice(&self.mu);
        v
    }

    pub fn from_vector(s: &FluidSpaces, v: &[f64]) -> Self {
        Self {
            u: v[..s.p_offset()].to_vec(),
            p: v[s.p_offset()..s.phi_offset()].to_vec(),
            phi: v[s.phi_offset()..s.mu_offset()].to_vec(),
            mu: v[s.mu_offset()..].to_vec(),
        }
    }

    /// Nodal values at every geometric node.
    pub fn nodal(&self, s: &FluidSpaces) -> NodalFluid {
        NodalFluid {
            u: s.velocity.expand_vector(&self.u),
            p: s.pressure.expand_scalar(&self.p),
            phi: s.phase.expand_scalar(&self.phi),
            mu: s.phase.expand_scalar(&self.mu),
        }
    }
}

/// Fluid fields expanded to all nodes (hanging nodes included).
#[derive(Debug, Clone)]
pub struct NodalFluid {
    pub u: Vec<[f64; 2]>,
    pub p: Vec<f64>,
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
}
