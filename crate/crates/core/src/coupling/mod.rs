//! Fluid–solid interface: mesh motion, load transfer, surface tension and the
//! partitioned subiteration.

mod extension;
mod subiterate;
mod surface;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{PhysicsError, Result};
use crate::fluid::{FluidFrame, FluidSolver, FluidSpaces, FluidState, VelocityData};
use crate::solid::SolidSpace;

pub use extension::{mesh_velocity, HarmonicExtension};
pub use subiterate::{CoupledStep, CoupledSystem, CouplingSettings, CouplingState};
pub(crate) use surface::surface_tension_facet;
pub use surface::{surface_tension_form, SurfaceTension};

/// A shared interface node with its scalar dof on each side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterfaceNode {
    pub fluid_node: u32,
    pub solid_node: u32,
    pub fluid_dof: usize,
    pub solid_dof: usize,
}

/// Reference fluid and solid meshes matched along the interface.
pub struct MeshPair {
    pub fluid: Arc<FluidSpaces>,
    pub solid: Arc<SolidSpace>,
    pub fluid_tag: String,
    pub solid_tag: String,
    pub nodes: Vec<InterfaceNode>,
}

fn position_key(x: [f64; 2], scale: f64) -> (i64, i64) {
    ((x[0] / scale).round() as i64, (x[1] / scale).round() as i64)
}

impl MeshPair {
    pub fn new(fluid: Arc<FluidSpaces>, solid: Arc<SolidSpace>, fluid_tag: &str, solid_tag: &str) -> Result<Self> {
        let fs = &fluid.phase;
        let ss = &solid.space;
        let ext = fluid.mesh.extent();
        let scale = 1e-9 * ext.width().max(ext.height());
        let mut solid_at: HashMap<(i64, i64), u32> = HashMap::new();
        for &n in ss.boundary_nodes(solid_tag)? {
            solid_at.insert(position_key(ss.node_position(n as usize), scale), n);
        }
        let fluid_nodes = fs.boundary_nodes(fluid_tag)?;
        if fluid_nodes.len() != solid_at.len() {
            return Err(PhysicsError::Configuration(format!(
                "interface traces differ: {} fluid nodes on `{fluid_tag}`, {} solid nodes on `{solid_tag}`",
                fluid_nodes.len(),
                solid_at.len()
            )));
        }
        let mut nodes = Vec::with_capacity(fluid_nodes.len());
        for &fnode in fluid_nodes {
            let x = fs.node_position(fnode as usize);
            let snode = *solid_at.get(&position_key(x, scale)).ok_or_else(|| {
                PhysicsError::Configuration(format!("fluid interface node at ({}, {}) has no solid partner", x[0], x[1]))
            })?;
            let dofs = (fs.scalar_dof_of_node(fnode as usize), ss.scalar_dof_of_node(snode as usize));
            let (Some(fluid_dof), Some(solid_dof)) = dofs else {
                return Err(PhysicsError::Configuration("hanging node on the interface".into()));
            };
            nodes.push(InterfaceNode { fluid_node: fnode, solid_node: snode, fluid_dof, solid_dof });
        }
        Ok(Self { fluid, solid, fluid_tag: fluid_tag.to_string(), solid_tag: solid_tag.to_string(), nodes })
    }

    /// Solid displacement sampled at each interface node, in pairing order.
    pub fn solid_trace(&self, solid_coeffs: &[f64]) -> Vec<[f64; 2]> {
        let ss = &self.solid.space;
        self.nodes.iter().map(|p| [solid_coeffs[ss.dof(0, p.solid_dof)], solid_coeffs[ss.dof(1, p.solid_dof)]]).collect()
    }

    /// Per-pair values keyed by fluid node.
    pub fn fluid_trace(&self, values: &[[f64; 2]]) -> BTreeMap<u32, [f64; 2]> {
        self.nodes.iter().zip(values).map(|(p, v)| (p.fluid_node, *v)).collect()
    }

    /// Fluid φ transferred to solid nodes; zero away from the interface.
    pub fn phi_on_solid(&self, fluid: &FluidState) -> Vec<f64> {
        let mut out = vec![0.0; self.solid.space.n_nodes()];
        for p in &self.nodes {
            out[p.solid_node as usize] = fluid.phi[p.fluid_dof];
        }
        out
    }
}

/// Extension of interface test functions into the fluid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Lifting {
    /// Interface values only.
    #[default]
    OneLayer,
    /// Adds half the interface value on the next row of nodes.
    TwoLayer,
}

impl Lifting {
    /// Sparse operator as `(fluid scalar dof, pair index, weight)`.
    pub fn operator(self, pair: &MeshPair) -> Result<Vec<(usize, usize, f64)>> {
        let mut out: Vec<(usize, usize, f64)> = pair.nodes.iter().enumerate().map(|(k, p)| (p.fluid_dof, k, 1.0)).collect();
        if self == Lifting::OneLayer {
            return Ok(out);
        }
        let fs = &pair.fluid.phase;
        let mesh = &pair.fluid.mesh;
        let by_node: HashMap<u32, usize> = pair.nodes.iter().enumerate().map(|(k, p)| (p.fluid_node, k)).collect();
        let mut boundary = std::collections::HashSet::new();
        for tag in mesh.boundary_tags() {
            boundary.extend(fs.boundary_nodes(tag)?.iter().copied());
        }
        let mut seen = std::collections::HashSet::new();
        for &f in mesh.facets(&pair.fluid_tag)? {
            let nodes = fs.cell_nodes(f.cell);
            for s in 0..3 {
                let (from, to) = match f.edge {
                    0 => (s, 3 + s),
                    1 => (3 * s + 2, 3 * s + 1),
                    2 => (6 + s, 3 + s),
                    _ => (3 * s, 3 * s + 1),
                };
                let (a, b) = (nodes[from], nodes[to]);
                if boundary.contains(&b) || !seen.insert(b) {
                    continue;
                }
                if let (Some(&k), Some(d)) = (by_node.get(&a), fs.scalar_dof_of_node(b as usize)) {
                    out.push((d, k, 0.5));
                }
            }
        }
        Ok(out)
    }
}

/// Fluid velocity coefficients of the lifting of per-pair values `x`.
pub fn lift_interface_function(pair: &MeshPair, x: &[[f64; 2]], lifting: Lifting) -> Result<Vec<f64>> {
    let fs = &pair.fluid;
    let mut out = vec![0.0; 2 * fs.n2()];
    for (d, k, w) in lifting.operator(pair)? {
        out[fs.u_offset(0) + d] += w * x[k][0];
        out[fs.u_offset(1) + d] += w * x[k][1];
    }
    Ok(out)
}

/// Weak fluid traction as a functional on solid coefficients: the raw
/// momentum residual tested with the lifting of each interface basis function.
pub fn weak_fluid_traction(
    solver: &FluidSolver,
    state: &FluidState,
    frame: &FluidFrame,
    pair: &MeshPair,
    lifting: Lifting,
) -> Result<Vec<f64>> {
    let r = solver.residual(state, frame)?;
    Ok(traction_from_residual(&r, pair, lifting)?)
}

pub(crate) fn traction_from_residual(r: &[f64], pair: &MeshPair, lifting: Lifting) -> Result<Vec<f64>> {
    let fs = &pair.fluid;
    let ss = &pair.solid.space;
    let mut out = vec![0.0; ss.n_dofs()];
    for (d, k, w) in lifting.operator(pair)? {
        let sd = pair.nodes[k].solid_dof;
        for i in 0..2 {
            out[ss.dof(i, sd)] += w * r[fs.u_offset(i) + d];
        }
    }
    Ok(out)
}

/// Interface fluid velocity from the backward-difference solid velocity.
pub fn kinematic_bc(pair: &MeshPair, current: &[[f64; 2]], previous: &[[f64; 2]], dt: f64) -> VelocityData {
    let map = pair
        .nodes
        .iter()
        .zip(current.iter().zip(previous))
        .map(|(p, (a, b))| (p.fluid_node, [(a[0] - b[0]) / dt, (a[1] - b[1]) / dt]))
        .collect();
    VelocityData::Nodal(Arc::new(map))
}
