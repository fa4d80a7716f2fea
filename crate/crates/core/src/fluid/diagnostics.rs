use elastocap_fem::geometry::{CellEval, FacetEval};
use elastocap_fem::Configuration;

use super::{FluidBcs, FluidSpaces, FluidState, PhaseBc};
use crate::error::Result;
use crate::mixture::{double_well, wall_energy, FluidParams};

/// Contributions to the total energy.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyParts {
    pub kinetic: f64,
    pub mixing: f64,
    pub wall: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.mixing + self.wall
    }
}

/// Kinetic, mixing and fluid–solid wall energy of `state`.
pub fn free_energy(
    s: &FluidSpaces,
    params: &FluidParams,
    bcs: &FluidBcs,
    state: &FluidState,
    displacement: Option<&[[f64; 2]]>,
) -> Result<EnergyParts> {
    let nodal = state.nodal(s);
    let config = Configuration { space: &s.phase, displacement };
    let st = params.sigma_tilde();
    let eps = params.epsilon;
    let mut e = EnergyParts::default();
    let mut ce = CellEval::default();
    for c in 0..s.mesh.num_cells() {
        ce.compute(&s.tables, &config.cell_coords(c), s.symmetry, c)?;
        let nodes = s.phase.cell_nodes(c);
        for q in 0..ce.n_qp {
            let nv = s.tables.q2.values_at(q);
            let g = ce.grad2_at(q);
            let (mut u, mut phi, mut gphi) = ([0.0; 2], 0.0, [0.0; 2]);
            for a in 0..9 {
                let n = nodes[a] as usize;
                for i in 0..2 {
                    u[i] += nv[a] * nodal.u[n][i];
                    gphi[i] += g[a][i] * nodal.phi[n];
                }
                phi += nv[a] * nodal.phi[n];
            }
            let dv = ce.dv[q];
            e.kinetic += dv * 0.5 * params.density(phi) * (u[0] * u[0] + u[1] * u[1]);
            e.mixing += dv * st * (0.5 * eps * (gphi[0] * gphi[0] + gphi[1] * gphi[1]) + double_well(phi) / eps);
        }
    }
    let mut fe = FacetEval::default();
    for (tag, bc) in &bcs.phase {
        if !matches!(bc, PhaseBc::Wetting) {
            continue;
        }
        for &f in s.mesh.facets(tag)? {
            fe.compute(&s.tables, &config.cell_coords(f.cell), s.symmetry, f)?;
            let nodes = s.phase.cell_nodes(f.cell);
            let tab = &s.tables.edge_q2[f.edge];
            for q in 0..fe.n_qp {
                let nv = tab.values_at(q);
                let phi: f64 = (0..9).map(|a| nv[a] * nodal.phi[nodes[a] as usize]).sum();
                e.wall += fe.ds[q] * wall_energy(phi, params);
            }
        }
    }
    Ok(e)
}

/// Integral of φ over the current configuration.
pub fn phase_total(s: &FluidSpaces, state: &FluidState, displacement: Option<&[[f64; 2]]>) -> Result<f64> {
    let phi = s.phase.expand_scalar(&state.phi);
    let config = Configuration { space: &s.phase, displacement };
    let mut total = 0.0;
    let mut ce = CellEval::default();
    for c in 0..s.mesh.num_cells() {
        ce.compute(&s.tables, &config.cell_coords(c), s.symmetry, c)?;
        let nodes = s.phase.cell_nodes(c);
        for q in 0..ce.n_qp {
            let nv = s.tables.q2.values_at(q);
            total += ce.dv[q] * (0..9).map(|a| nv[a] * phi[nodes[a] as usize]).sum::<f64>();
        }
    }
    Ok(total)
}

/// Largest nodal excursion of |φ| beyond 1.
pub fn max_phase_overshoot(state: &FluidState) -> f64 {
    state.phi.iter().map(|p| p.abs() - 1.0).fold(0.0, f64::max)
}

/// Pointwise fluid traction `(τ − pI − σ̃ε∇φ⊗∇φ)n` at the facet quadrature
/// points of `tag`, as `(x, n, t, ds)`.
pub fn strong_traction(
    s: &FluidSpaces,
    params: &FluidParams,
    state: &FluidState,
    displacement: Option<&[[f64; 2]]>,
    tag: &str,
) -> Result<Vec<([f64; 2], [f64; 2], [f64; 2], f64)>> {
    let nodal = state.nodal(s);
    let config = Configuration { space: &s.phase, displacement };
    let cap = params.sigma_tilde() * params.epsilon;
    let mut out = Vec::new();
    let mut fe = FacetEval::default();
    for &f in s.mesh.facets(tag)? {
        fe.compute(&s.tables, &config.cell_coords(f.cell), s.symmetry, f)?;
        let nodes = s.phase.cell_nodes(f.cell);
        let pnodes = s.pressure.cell_nodes(f.cell);
        let tab = &s.tables.edge_q2[f.edge];
        let tab1 = &s.tables.edge_q1[f.edge];
        for q in 0..fe.n_qp {
            let nv = tab.values_at(q);
            let g = fe.grad2_at(q);
            let m = tab1.values_at(q);
            let (mut phi, mut gphi, mut gu) = (0.0, [0.0; 2], [[0.0; 2]; 2]);
            for a in 0..9 {
                let n = nodes[a] as usize;
                phi += nv[a] * nodal.phi[n];
                for i in 0..2 {
                    gphi[i] += g[a][i] * nodal.phi[n];
                    for j in 0..2 {
                        gu[i][j] += g[a][j] * nodal.u[n][i];
                    }
                }
            }
            let p: f64 = (0..4).map(|k| m[k] * nodal.p[pnodes[k] as usize]).sum();
            let nu = params.viscosity(phi);
            let n = fe.normal[q];
            let mut t = [0.0; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let sig = nu * (gu[i][j] + gu[j][i]) - cap * gphi[i] * gphi[j] - if i == j { p } else { 0.0 };
                    t[i] += sig * n[j];
                }
            }
            out.push((fe.x[q], n, t, fe.ds[q]));
        }
    }
    Ok(out)
}
