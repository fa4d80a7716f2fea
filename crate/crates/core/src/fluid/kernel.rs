use std::sync::Arc;

use elastocap_fem::assembly::{assemble_with_pattern, Kernel, LocalSystem, Want};
use elastocap_fem::geometry::{CellEval, FacetEval};
use elastocap_fem::{Configuration, CsrPattern, Facet, SparseSystem};

use super::{FluidBcs, FluidSpaces, FluidState, NodalFluid, PhaseBc, PotentialBc, ScalarFn, VectorFn, VelocityBc};
use crate::error::Result;
use crate::mixture::{double_well_prime, double_well_second, wall_energy_prime, wall_energy_second, FluidParams};

const NU: usize = 9;
const P0: usize = 18;
const PHI0: usize = 22;
const MU0: usize = 31;
const LOCAL: usize = 40;

#[inline]
fn iu(a: usize, i: usize) -> usize {
    i * NU + a
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Which equation rows to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rows {
    pub momentum: bool,
    pub phase: bool,
}

impl Rows {
    pub const ALL: Rows = Rows { momentum: true, phase: true };
    pub const MOMENTUM: Rows = Rows { momentum: true, phase: false };
    pub const PHASE: Rows = Rows { momentum: false, phase: true };
}

/// Backward-Euler data: step size and the old-level mass contribution, which
/// is integrated over the old configuration.
#[derive(Debug, Clone)]
pub struct Transient {
    pub dt: f64,
    pub old_mass: Vec<f64>,
}

impl Transient {
    pub fn new(
        s: &FluidSpaces,
        params: &FluidParams,
        old: &FluidState,
        old_displacement: Option<&[[f64; 2]]>,
        dt: f64,
    ) -> Result<Self> {
        let nodal = old.nodal(s);
        let config = Configuration { space: &s.phase, displacement: old_displacement };
        let kernel = OldMass { s, params, config, nodal: &nodal, dt };
        let pattern = Arc::new(elastocap_fem::CsrPattern::from_rows(s.n_dofs(), vec![Vec::new(); s.n_dofs()]));
        let sys = assemble_with_pattern(&kernel, &s.layout, &s.layout, &pattern, Want::Vector)?;
        Ok(Self { dt, old_mass: sys.rhs })
    }
}

/// Current geometry and mesh velocity, both at every geometric node.
#[derive(Clone, Copy, Default)]
pub struct FluidFrame<'a> {
    pub displacement: Option<&'a [[f64; 2]]>,
    pub mesh_velocity: Option<&'a [[f64; 2]]>,
    pub transient: Option<&'a Transient>,
}

struct OldMass<'a> {
    s: &'a FluidSpaces,
    params: &'a FluidParams,
    config: Configuration<'a>,
    nodal: &'a NodalFluid,
    dt: f64,
}

impl Kernel for OldMass<'_> {
    fn local_dims(&self) -> (usize, usize) {
        (LOCAL, LOCAL)
    }

    fn cell(&self, c: usize, local: &mut LocalSystem) -> elastocap_fem::Result<()> {
        let coords = self.config.cell_coords(c);
        let mut ce = CellEval::default();
        ce.compute(&self.s.tables, &coords, self.s.symmetry, c)?;
        let nodes = self.s.phase.cell_nodes(c);
        for q in 0..ce.n_qp {
            let nv = self.s.tables.q2.values_at(q);
            let (mut u, mut phi) = ([0.0; 2], 0.0);
            for a in 0..NU {
                let n = nodes[a] as usize;
                u[0] += nv[a] * self.nodal.u[n][0];
                u[1] += nv[a] * self.nodal.u[n][1];
                phi += nv[a] * self.nodal.phi[n];
            }
            let rho = self.params.density(phi);
            let f = ce.dv[q] / self.dt;
            for a in 0..NU {
                local.vector[iu(a, 0)] -= f * rho * u[0] * nv[a];
                local.vector[iu(a, 1)] -= f * rho * u[1] * nv[a];
                local.vector[PHI0 + a] -= f * phi * nv[a];
            }
        }
        Ok(())
    }
}

enum FacetLoad {
    Traction(VectorFn),
    Wetting,
    PhaseFlux(ScalarFn),
}

struct FluidKernel<'a> {
    s: &'a FluidSpaces,
    params: &'a FluidParams,
    config: Configuration<'a>,
    nodal: &'a NodalFluid,
    w: Option<&'a [[f64; 2]]>,
    dt: Option<f64>,
    rows: Rows,
    tags: Vec<(String, Vec<FacetLoad>, Option<ScalarFn>)>,
}

impl<'a> FluidKernel<'a> {
    fn new(
        s: &'a FluidSpaces,
        params: &'a FluidParams,
        bcs: &'a FluidBcs,
        nodal: &'a NodalFluid,
        frame: &FluidFrame<'a>,
        rows: Rows,
    ) -> Self {
        let mut tags = Vec::new();
        for tag in s.mesh.boundary_tags() {
            let mut loads = Vec::new();
            if let Some(VelocityBc::Traction(g)) = bcs.velocity.get(tag) {
                loads.push(FacetLoad::Traction(g.clone()));
            }
            match bcs.phase.get(tag) {
                Some(PhaseBc::Wetting) => loads.push(FacetLoad::Wetting),
                Some(PhaseBc::Flux(g)) => loads.push(FacetLoad::PhaseFlux(g.clone())),
                _ => {}
            }
            let mu_flux = match bcs.potential.get(tag) {
                Some(PotentialBc::Flux(g)) => Some(g.clone()),
                _ => None,
            };
            tags.push((tag.to_string(), loads, mu_flux));
        }
        Self {
            s,
            params,
            config: Configuration { space: &s.phase, displacement: frame.displacement },
            nodal,
            w: frame.mesh_velocity,
            dt: frame.transient.map(|t| t.dt),
            rows,
            tags,
        }
    }

    fn mesh_velocity(&self, n: usize) -> [f64; 2] {
        self.w.map_or([0.0; 2], |w| w[n])
    }
}

impl Kernel for FluidKernel<'_> {
    fn local_dims(&self) -> (usize, usize) {
        (LOCAL, LOCAL)
    }

    fn cell(&self, c: usize, local: &mut LocalSystem) -> elastocap_fem::Result<()> {
        let s = self.s;
        let prm = self.params;
        let coords = self.config.cell_coords(c);
        let mut ce = CellEval::default();
        ce.compute(&s.tables, &coords, s.symmetry, c)?;
        let nodes = s.phase.cell_nodes(c);
        let pnodes = s.pressure.cell_nodes(c);
        let mut ul = [[0.0; 2]; NU];
        let mut wl = [[0.0; 2]; NU];
        let mut phil = [0.0; NU];
        let mut mul = [0.0; NU];
        for a in 0..NU {
            let n = nodes[a] as usize;
            ul[a] = self.nodal.u[n];
            wl[a] = self.mesh_velocity(n);
            phil[a] = self.nodal.phi[n];
            mul[a] = self.nodal.mu[n];
        }
        let pl: [f64; 4] = std::array::from_fn(|k| self.nodal.p[pnodes[k] as usize]);
        let axi = s.symmetry.is_axisymmetric();
        let st = prm.sigma_tilde();
        let cap = st * prm.epsilon;
        let cw = st / prm.epsilon;
        let drho = prm.density_prime();
        let dnu = prm.viscosity_prime();
        let inv_dt = self.dt.map_or(0.0, |d| 1.0 / d);
        let jac = local.want_matrix;

        for q in 0..ce.n_qp {
            let nv = s.tables.q2.values_at(q);
            let g = ce.grad2_at(q);
            let m = s.tables.q1.values_at(q);
            let mut u = [0.0; 2];
            let mut w = [0.0; 2];
            let mut gu = [[0.0; 2]; 2];
            let (mut phi, mut gphi, mut mu, mut gmu) = (0.0, [0.0; 2], 0.0, [0.0; 2]);
            for a in 0..NU {
                for i in 0..2 {
                    u[i] += nv[a] * ul[a][i];
                    w[i] += nv[a] * wl[a][i];
                    gphi[i] += phil[a] * g[a][i];
                    gmu[i] += mul[a] * g[a][i];
                    for j in 0..2 {
                        gu[i][j] += ul[a][i] * g[a][j];
                    }
                }
                phi += nv[a] * phil[a];
                mu += nv[a] * mul[a];
            }
            let p: f64 = (0..4).map(|k| m[k] * pl[k]).sum();
            let inv_r = if axi { 1.0 / ce.x[q][0] } else { 0.0 };
            let rho = prm.density(phi);
            let nu = prm.viscosity(phi);
            let adv = [u[0] - w[0], u[1] - w[1]];
            let dv = ce.dv[q];

            if self.rows.momentum {
                let divu = gu[0][0] + gu[1][1] + u[0] * inv_r;
                let mut t = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        t[i][j] = nu * (gu[i][j] + gu[j][i]) - rho * u[i] * adv[j] - cap * gphi[i] * gphi[j];
                    }
                }
                let hoop = 2.0 * nu * u[0] * inv_r - p;
                for a in 0..NU {
                    for i in 0..2 {
                        let mut v = rho * u[i] * nv[a] * inv_dt + g[a][0] * t[i][0] + g[a][1] * t[i][1] - p * g[a][i];
                        if i == 0 {
                            v += nv[a] * inv_r * hoop;
                        }
                        local.vector[iu(a, i)] += dv * v;
                    }
                }
                for k in 0..4 {
                    local.vector[P0 + k] -= dv * m[k] * divu;
                }
                if jac {
                    for a in 0..NU {
                        let ga_adv = dot(g[a], adv);
                        let ga_gphi = dot(g[a], gphi);
                        for i in 0..2 {
                            let row = iu(a, i);
                            for b in 0..NU {
                                let gab = dot(g[a], g[b]);
                                for k in 0..2 {
                                    let mut v = nu * g[a][k] * g[b][i] - rho * nv[b] * u[i] * g[a][k];
                                    if i == k {
                                        v += rho * nv[a] * nv[b] * inv_dt + nu * gab - rho * nv[b] * ga_adv;
                                        if i == 0 {
                                            v += 2.0 * nu * nv[a] * nv[b] * inv_r * inv_r;
                                        }
                                    }
                                    local.add_matrix(row, iu(b, k), dv * v);
                                }
                                let mut sym = g[a][0] * (gu[i][0] + gu[0][i]) + g[a][1] * (gu[i][1] + gu[1][i]);
                                if i == 0 {
                                    sym += nv[a] * 2.0 * u[0] * inv_r * inv_r;
                                }
                                let v = drho * nv[b] * u[i] * nv[a] * inv_dt + dnu * nv[b] * sym
                                    - drho * nv[b] * u[i] * ga_adv
                                    - cap * (g[b][i] * ga_gphi + gphi[i] * gab);
                                local.add_matrix(row, PHI0 + b, dv * v);
                            }
                            for k in 0..4 {
                                let mut v = -m[k] * g[a][i];
                                if i == 0 {
                                    v -= nv[a] * m[k] * inv_r;
                                }
                                local.add_matrix(row, P0 + k, dv * v);
                            }
                        }
                    }
                    for k in 0..4 {
                        for b in 0..NU {
                            local.add_matrix(P0 + k, iu(b, 0), -dv * m[k] * (g[b][0] + nv[b] * inv_r));
                            local.add_matrix(P0 + k, iu(b, 1), -dv * m[k] * g[b][1]);
                        }
                    }
                }
            }

            if self.rows.phase {
                let wp = double_well_prime(phi);
                for a in 0..NU {
                    local.vector[PHI0 + a] +=
                        dv * (phi * nv[a] * inv_dt + prm.gamma * dot(g[a], gmu) - phi * dot(g[a], adv));
                    local.vector[MU0 + a] += dv * (nv[a] * (mu - cw * wp) - cap * dot(g[a], gphi));
                }
                if jac {
                    let wpp = double_well_second(phi);
                    for a in 0..NU {
                        let ga_adv = dot(g[a], adv);
                        for b in 0..NU {
                            let gab = dot(g[a], g[b]);
                            let nab = nv[a] * nv[b];
                            local.add_matrix(PHI0 + a, PHI0 + b, dv * (nab * inv_dt - nv[b] * ga_adv));
                            local.add_matrix(PHI0 + a, MU0 + b, dv * prm.gamma * gab);
                            for k in 0..2 {
                                local.add_matrix(PHI0 + a, iu(b, k), -dv * phi * g[a][k] * nv[b]);
                            }
                            local.add_matrix(MU0 + a, MU0 + b, dv * nab);
                            local.add_matrix(MU0 + a, PHI0 + b, -dv * (cw * wpp * nab + cap * gab));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn facet_tags(&self) -> Vec<String> {
        self.tags.iter().map(|t| t.0.clone()).collect()
    }

    fn facet(&self, tag: &str, facet: Facet, local: &mut LocalSystem) -> elastocap_fem::Result<()> {
        let s = self.s;
        let prm = self.params;
        let Some((_, loads, mu_flux)) = self.tags.iter().find(|t| t.0 == tag) else {
            return Ok(());
        };
        let coords = self.config.cell_coords(facet.cell);
        let mut fe = FacetEval::default();
        fe.compute(&s.tables, &coords, s.symmetry, facet)?;
        let nodes = s.phase.cell_nodes(facet.cell);
        let tab = &s.tables.edge_q2[facet.edge];
        let drho = prm.density_prime();
        let jac = local.want_matrix;
        for q in 0..fe.n_qp {
            let nv = tab.values_at(q);
            let n = fe.normal[q];
            let x = fe.x[q];
            let ds = fe.ds[q];
            let (mut u, mut w, mut phi) = ([0.0; 2], [0.0; 2], 0.0);
            for a in 0..NU {
                if nv[a] == 0.0 {
                    continue;
                }
                let node = nodes[a] as usize;
                let wn = self.mesh_velocity(node);
                for i in 0..2 {
                    u[i] += nv[a] * self.nodal.u[node][i];
                    w[i] += nv[a] * wn[i];
                }
                phi += nv[a] * self.nodal.phi[node];
            }
            let un = (u[0] - w[0]) * n[0] + (u[1] - w[1]) * n[1];
            let rho = prm.density(phi);

            if self.rows.momentum {
                let traction = loads.iter().find_map(|l| match l {
                    FacetLoad::Traction(g) => Some(g(x)),
                    _ => None,
                });
                for a in 0..NU {
                    if nv[a] == 0.0 {
                        continue;
                    }
                    for i in 0..2 {
                        let mut v = nv[a] * rho * u[i] * un;
                        if let Some(t) = traction {
                            v -= nv[a] * t[i];
                        }
                        local.vector[iu(a, i)] += ds * v;
                        if jac {
                            for b in 0..NU {
                                for k in 0..2 {
                                    let mut d = u[i] * nv[b] * n[k];
                                    if i == k {
                                        d += nv[b] * un;
                                    }
                                    local.add_matrix(iu(a, i), iu(b, k), ds * nv[a] * rho * d);
                                }
                                local.add_matrix(iu(a, i), PHI0 + b, ds * nv[a] * drho * nv[b] * u[i] * un);
                            }
                        }
                    }
                }
            }

            if self.rows.phase {
                let mut phi_load = 0.0;
                let mut phi_load_d = 0.0;
                for l in loads {
                    match l {
                        FacetLoad::Wetting => {
                            phi_load += wall_energy_prime(phi, prm);
                            phi_load_d += wall_energy_second(phi, prm);
                        }
                        FacetLoad::PhaseFlux(g) => phi_load += g(x),
                        FacetLoad::Traction(_) => {}
                    }
                }
                let mu_load = mu_flux.as_ref().map_or(0.0, |g| g(x));
                for a in 0..NU {
                    if nv[a] == 0.0 {
                        continue;
                    }
                    local.vector[PHI0 + a] += ds * nv[a] * (phi * un - mu_load);
                    local.vector[MU0 + a] -= ds * nv[a] * phi_load;
                    if jac {
                        for b in 0..NU {
                            local.add_matrix(PHI0 + a, PHI0 + b, ds * nv[a] * nv[b] * un);
                            for k in 0..2 {
                                local.add_matrix(PHI0 + a, iu(b, k), ds * nv[a] * phi * nv[b] * n[k]);
                            }
                            local.add_matrix(MU0 + a, PHI0 + b, -ds * nv[a] * phi_load_d * nv[b]);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn mask_rows(s: &FluidSpaces, rows: Rows, v: &mut [f64], src: &[f64]) {
    let (a, b) = (s.p_offset() + s.n1(), s.n_dofs());
    for (k, (dst, &x)) in v.iter_mut().zip(src).enumerate() {
        let momentum = k < a;
        if (momentum && rows.momentum) || (!momentum && k < b && rows.phase) {
            *dst += x;
        }
    }
}

/// Raw (unconstrained) residual and, if requested, Jacobian of the selected rows.
pub fn assemble_fluid(
    s: &FluidSpaces,
    params: &FluidParams,
    bcs: &FluidBcs,
    nodal: &NodalFluid,
    frame: &FluidFrame,
    rows: Rows,
    pattern: &Arc<CsrPattern>,
    want: Want,
) -> Result<SparseSystem> {
    let kernel = FluidKernel::new(s, params, bcs, nodal, frame, rows);
    let mut sys = assemble_with_pattern(&kernel, &s.layout, &s.layout, pattern, want)?;
    if let Some(t) = frame.transient {
        mask_rows(s, rows, &mut sys.rhs, &t.old_mass);
    }
    Ok(sys)
}

/// Momentum and continuity rows with their Jacobian.
pub fn assemble_momentum_mass(
    s: &FluidSpaces,
    params: &FluidParams,
    bcs: &FluidBcs,
    state: &FluidState,
    frame: &FluidFrame,
) -> Result<SparseSystem> {
    let pattern = Arc::new(s.layout.pattern(&s.layout));
    assemble_fluid(s, params, bcs, &state.nodal(s), frame, Rows::MOMENTUM, &pattern, Want::Both)
}

/// Cahn–Hilliard rows (φ and μ) with their Jacobian.
pub fn assemble_cahn_hilliard(
    s: &FluidSpaces,
    params: &FluidParams,
    bcs: &FluidBcs,
    state: &FluidState,
    frame: &FluidFrame,
) -> Result<SparseSystem> {
    let pattern = Arc::new(s.layout.pattern(&s.layout));
    assemble_fluid(s, params, bcs, &state.nodal(s), frame, Rows::PHASE, &pattern, Want::Both)
}
