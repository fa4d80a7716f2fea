use std::f64::consts::PI;
use std::sync::Arc;

use elastocap_fem::assembly::{assemble_with_pattern, Kernel, LocalSystem, Want};
use elastocap_fem::basis::edge_tangent;
use elastocap_fem::{Configuration, CsrMatrix, Facet, ReferenceTables, Symmetry};

use crate::error::Result;
use crate::mixture::{wall_energy, FluidParams};
use crate::solid::SolidSpace;

/// Fluid–solid surface energy acting along the deformed interface.
#[derive(Clone, Copy)]
pub struct SurfaceTension<'a> {
    pub params: &'a FluidParams,
    /// Solid boundary tag of the interface.
    pub tag: &'a str,
    /// φ at every solid node (zero away from the interface).
    pub phi: &'a [f64],
}

/// Adds `∫ σ_W(φ) ∇_Γ x̄ : ∇_Γ v` on one edge of a cell with current node
/// positions `coords`; local ordering is `[component][node]`, 18 wide.
pub(crate) fn surface_tension_facet(
    tables: &ReferenceTables,
    symmetry: Symmetry,
    coords: &[[f64; 2]; 9],
    edge: usize,
    phi: &[f64; 9],
    params: &FluidParams,
    vector: &mut [f64],
    mut matrix: Option<&mut [f64]>,
) {
    let tab = &tables.edge_q2[edge];
    let t = edge_tangent(edge);
    let axi = symmetry.is_axisymmetric();
    for q in 0..tables.line.len() {
        let nv = tab.values_at(q);
        let gr = tab.grads_at(q);
        let dn: [f64; 9] = std::array::from_fn(|a| gr[a][0] * t[0] + gr[a][1] * t[1]);
        let (mut x, mut xp, mut ph) = ([0.0; 2], [0.0; 2], 0.0);
        for a in 0..9 {
            for i in 0..2 {
                x[i] += nv[a] * coords[a][i];
                xp[i] += dn[a] * coords[a][i];
            }
            ph += nv[a] * phi[a];
        }
        let len = (xp[0] * xp[0] + xp[1] * xp[1]).sqrt();
        let w = tables.line.weights[q] * wall_energy(ph, params) * if axi { 2.0 * PI } else { 1.0 };
        let r = if axi { x[0] } else { 1.0 };
        for a in 0..9 {
            for i in 0..2 {
                let mut v = r * dn[a] * xp[i] / len;
                if axi && i == 0 {
                    v += nv[a] * len;
                }
                vector[i * 9 + a] += w * v;
            }
        }
        let Some(m) = matrix.as_deref_mut() else { continue };
        let l3 = len * len * len;
        for a in 0..9 {
            for i in 0..2 {
                for b in 0..9 {
                    for k in 0..2 {
                        let proj = if i == k { 1.0 / len } else { 0.0 } - xp[i] * xp[k] / l3;
                        let mut v = r * dn[a] * dn[b] * proj;
                        if axi {
                            if k == 0 {
                                v += nv[b] * dn[a] * xp[i] / len;
                            }
                            if i == 0 {
                                v += nv[a] * xp[k] * dn[b] / len;
                            }
                        }
                        m[(i * 9 + a) * 18 + k * 9 + b] += w * v;
                    }
                }
            }
        }
    }
}

struct SurfaceKernel<'a> {
    s: &'a SolidSpace,
    st: SurfaceTension<'a>,
    d: &'a [[f64; 2]],
}

impl Kernel for SurfaceKernel<'_> {
    fn local_dims(&self) -> (usize, usize) {
        (18, 18)
    }

    fn cell(&self, _: usize, _: &mut LocalSystem) -> elastocap_fem::Result<()> {
        Ok(())
    }

    fn facet_tags(&self) -> Vec<String> {
        vec![self.st.tag.to_string()]
    }

    fn facet(&self, _: &str, f: Facet, local: &mut LocalSystem) -> elastocap_fem::Result<()> {
        let nodes = self.s.space.cell_nodes(f.cell);
        let reference = Configuration::reference(&self.s.space).cell_coords(f.cell);
        let coords: [[f64; 2]; 9] = std::array::from_fn(|a| {
            let n = nodes[a] as usize;
            [reference[a][0] + self.d[n][0], reference[a][1] + self.d[n][1]]
        });
        let phi: [f64; 9] = std::array::from_fn(|a| self.st.phi[nodes[a] as usize]);
        let want = local.want_matrix;
        surface_tension_facet(
            &self.s.tables,
            self.s.symmetry,
            &coords,
            f.edge,
            &phi,
            self.st.params,
            &mut local.vector,
            if want { Some(local.matrix.as_mut_slice()) } else { None },
        );
        Ok(())
    }
}

/// Residual and shape Jacobian of the surface-tension form on solid coefficients.
pub fn surface_tension_form(s: &SolidSpace, st: SurfaceTension, displacement: &[f64]) -> Result<(Vec<f64>, CsrMatrix)> {
    let d = s.space.expand_vector(displacement);
    let kernel = SurfaceKernel { s, st, d: &d };
    let pattern = Arc::new(s.layout.pattern(&s.layout));
    let sys = assemble_with_pattern(&kernel, &s.layout, &s.layout, &pattern, Want::Both)?;
    Ok((sys.rhs, sys.matrix))
}
