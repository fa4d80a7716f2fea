use std::sync::Arc;

use elastocap_fem::assembly::{assemble_with_pattern, Kernel, LocalSystem, Want};
use elastocap_fem::geometry::{CellEval, FacetEval};
use elastocap_fem::{Configuration, CsrPattern, Facet, FemError, SparseSystem};

use super::{kinematics, pk2_stress, stored_energy_density, Mat2, SolidBcs, SolidSpace};
use crate::coupling::{surface_tension_facet, SurfaceTension};
use crate::error::{PhysicsError, Result};
use crate::mixture::SolidParams;

/// Loads and time data for one solid evaluation.
#[derive(Clone, Copy, Default)]
pub struct SolidLoads<'a> {
    /// Fixed linear functional on solid coefficients added to the residual.
    pub interface: Option<&'a [f64]>,
    pub surface: Option<SurfaceTension<'a>>,
    /// Step size; `None` drops inertia.
    pub dt: Option<f64>,
    pub previous: Option<(&'a [[f64; 2]], &'a [[f64; 2]])>,
}

struct SolidKernel<'a> {
    s: &'a SolidSpace,
    params: &'a SolidParams,
    bcs: &'a SolidBcs,
    d: &'a [[f64; 2]],
    loads: SolidLoads<'a>,
    tags: Vec<String>,
}

impl Kernel for SolidKernel<'_> {
    fn local_dims(&self) -> (usize, usize) {
        (18, 18)
    }

    fn cell(&self, c: usize, local: &mut LocalSystem) -> elastocap_fem::Result<()> {
        let s = self.s;
        let p = self.params;
        let coords = Configuration::reference(&s.space).cell_coords(c);
        let mut ce = CellEval::default();
        ce.compute(&s.tables, &coords, s.symmetry, c)?;
        let nodes = s.space.cell_nodes(c);
        let dl: [[f64; 2]; 9] = std::array::from_fn(|a| self.d[nodes[a] as usize]);
        let axi = s.symmetry.is_axisymmetric();
        let acc: Option<([[f64; 2]; 9], f64)> = match (self.loads.dt, self.loads.previous) {
            (Some(dt), Some((d1, d2))) if p.rho_hat > 0.0 => Some((
                std::array::from_fn(|a| {
                    let n = nodes[a] as usize;
                    [dl[a][0] - 2.0 * d1[n][0] + d2[n][0], dl[a][1] - 2.0 * d1[n][1] + d2[n][1]]
                }),
                p.rho_hat / (dt * dt),
            )),
            _ => None,
        };
        let jac = local.want_matrix;
        for q in 0..ce.n_qp {
            let nv = s.tables.q2.values_at(q);
            let g = ce.grad2_at(q);
            let dv = ce.dv[q];
            let inv_r = if axi { 1.0 / ce.x[q][0] } else { 0.0 };
            let mut grad = [[0.0; 2]; 2];
            let mut dr = 0.0;
            for a in 0..9 {
                for i in 0..2 {
                    for j in 0..2 {
                        grad[i][j] += dl[a][i] * g[a][j];
                    }
                }
                dr += nv[a] * dl[a][0];
            }
            // The reference mesh is valid, so a degenerate cell here means det F ≤ 0.
            let (def, strain) = kinematics(grad, dr * inv_r, c).map_err(|e| match e {
                PhysicsError::InvertedElement { det, .. } => FemError::DegenerateCell { cell: c, det },
                e => FemError::Assembly(e.to_string()),
            })?;
            let (sm, s33) = pk2_stress(&strain, p);
            let f = def.f;
            let f33 = def.f33;
            let mut pk = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    pk[i][j] = f[i][0] * sm[0][j] + f[i][1] * sm[1][j];
                }
            }
            let p33 = f33 * s33;
            let mut a_q = [0.0; 2];
            if let Some((al, _)) = &acc {
                for a in 0..9 {
                    a_q[0] += nv[a] * al[a][0];
                    a_q[1] += nv[a] * al[a][1];
                }
            }
            let rho = acc.as_ref().map_or(0.0, |x| x.1);
            for a in 0..9 {
                for i in 0..2 {
                    let mut v = pk[i][0] * g[a][0] + pk[i][1] * g[a][1] + rho * a_q[i] * nv[a];
                    if i == 0 {
                        v += p33 * nv[a] * inv_r;
                    }
                    local.vector[i * 9 + a] += dv * v;
                }
            }
            if !jac {
                continue;
            }
            for b in 0..9 {
                for k in 0..2 {
                    // δF = e_k ⊗ g_b, δf33 = N_b / r on the radial component.
                    let df33 = if k == 0 { nv[b] * inv_r } else { 0.0 };
                    let mut de: Mat2 = [[0.0; 2]; 2];
                    for i in 0..2 {
                        for j in 0..2 {
                            de[i][j] = 0.5 * (f[k][i] * g[b][j] + f[k][j] * g[b][i]);
                        }
                    }
                    let de33 = f33 * df33;
                    let dtr = de[0][0] + de[1][1] + de33;
                    let mut ds: Mat2 = [[0.0; 2]; 2];
                    for i in 0..2 {
                        for j in 0..2 {
                            ds[i][j] = 2.0 * p.mu * de[i][j] + if i == j { p.lambda * dtr } else { 0.0 };
                        }
                    }
                    let ds33 = p.lambda * dtr + 2.0 * p.mu * de33;
                    let mut dp: Mat2 = [[0.0; 2]; 2];
                    for i in 0..2 {
                        for j in 0..2 {
                            let geo = if i == k { g[b][0] * sm[0][j] + g[b][1] * sm[1][j] } else { 0.0 };
                            dp[i][j] = geo + f[i][0] * ds[0][j] + f[i][1] * ds[1][j];
                        }
                    }
                    let dp33 = df33 * s33 + f33 * ds33;
                    for a in 0..9 {
                        for i in 0..2 {
                            let mut v = dp[i][0] * g[a][0] + dp[i][1] * g[a][1];
                            if i == 0 {
                                v += dp33 * nv[a] * inv_r;
                            }
                            if i == k {
                                v += rho * nv[a] * nv[b];
                            }
                            local.add_matrix(i * 9 + a, k * 9 + b, dv * v);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn facet_tags(&self) -> Vec<String> {
        self.tags.clone()
    }

    fn facet(&self, tag: &str, facet: Facet, local: &mut LocalSystem) -> elastocap_fem::Result<()> {
        let s = self.s;
        let nodes = s.space.cell_nodes(facet.cell);
        let reference = Configuration::reference(&s.space).cell_coords(facet.cell);
        if let Some(g) = self.bcs.neumann.get(tag) {
            let mut fe = FacetEval::default();
            fe.compute(&s.tables, &reference, s.symmetry, facet)?;
            let tab = &s.tables.edge_q2[facet.edge];
            for q in 0..fe.n_qp {
                let nv = tab.values_at(q);
                let t = g(fe.x[q]);
                for a in 0..9 {
                    for i in 0..2 {
                        local.vector[i * 9 + a] -= fe.ds[q] * nv[a] * t[i];
                    }
                }
            }
        }
        if let Some(st) = &self.loads.surface {
            if st.tag == tag {
                let current: [[f64; 2]; 9] = std::array::from_fn(|a| {
                    let n = nodes[a] as usize;
                    [reference[a][0] + self.d[n][0], reference[a][1] + self.d[n][1]]
                });
                let phi: [f64; 9] = std::array::from_fn(|a| st.phi[nodes[a] as usize]);
                let want = local.want_matrix;
                let (vec, mat) = (&mut local.vector, &mut local.matrix);
                surface_tension_facet(
                    &s.tables,
                    s.symmetry,
                    &current,
                    facet.edge,
                    &phi,
                    st.params,
                    vec,
                    if want { Some(mat.as_mut_slice()) } else { None },
                );
            }
        }
        Ok(())
    }
}

/// Residual and Jacobian of the solid equation without essential conditions.
pub fn assemble_solid(
    s: &SolidSpace,
    params: &SolidParams,
    bcs: &SolidBcs,
    displacement: &[f64],
    loads: SolidLoads,
    pattern: &Arc<CsrPattern>,
    want: Want,
) -> Result<SparseSystem> {
    let d = s.space.expand_vector(displacement);
    let mut tags: Vec<String> = bcs.neumann.keys().cloned().collect();
    if let Some(st) = &loads.surface {
        if !tags.iter().any(|t| t == st.tag) {
            tags.push(st.tag.to_string());
        }
    }
    let kernel = SolidKernel { s, params, bcs, d: &d, loads, tags };
    let mut sys = assemble_with_pattern(&kernel, &s.layout, &s.layout, pattern, want).map_err(|e| match e {
        FemError::DegenerateCell { cell, det } => PhysicsError::InvertedElement { cell, det },
        e => PhysicsError::Fem(e),
    })?;
    if let Some(f) = loads.interface {
        for (r, v) in sys.rhs.iter_mut().zip(f) {
            *r += v;
        }
    }
    Ok(sys)
}

/// Total stored energy of `displacement`.
pub fn stored_energy(s: &SolidSpace, params: &SolidParams, displacement: &[f64]) -> Result<f64> {
    integrate_cells(s, displacement, |_, strain| stored_energy_density(&strain, params))
}

/// Current minus reference substrate volume.
pub fn solid_volume_change(s: &SolidSpace, displacement: &[f64]) -> Result<f64> {
    integrate_cells(s, displacement, |def, _| def.det() - 1.0)
}

fn integrate_cells(
    s: &SolidSpace,
    displacement: &[f64],
    f: impl Fn(super::Deformation, super::Strain) -> f64,
) -> Result<f64> {
    let d = s.space.expand_vector(displacement);
    let axi = s.symmetry.is_axisymmetric();
    let reference = Configuration::reference(&s.space);
    let mut ce = CellEval::default();
    let mut total = 0.0;
    for c in 0..s.mesh.num_cells() {
        ce.compute(&s.tables, &reference.cell_coords(c), s.symmetry, c)?;
        let nodes = s.space.cell_nodes(c);
        for q in 0..ce.n_qp {
            let nv = s.tables.q2.values_at(q);
            let g = ce.grad2_at(q);
            let mut grad = [[0.0; 2]; 2];
            let mut dr = 0.0;
            for a in 0..9 {
                let da = d[nodes[a] as usize];
                for i in 0..2 {
                    for j in 0..2 {
                        grad[i][j] += da[i] * g[a][j];
                    }
                }
                dr += nv[a] * da[0];
            }
            let hoop = if axi { dr / ce.x[q][0] } else { 0.0 };
            let (def, strain) = kinematics(grad, hoop, c)?;
            total += ce.dv[q] * f(def, strain);
        }
    }
    Ok(total)
}
