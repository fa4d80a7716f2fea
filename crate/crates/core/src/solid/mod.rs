//! Saint Venant–Kirchhoff substrate in the reference configuration.
//!
//! Planar problems are plane strain. In axisymmetric mode the hoop stretch
//! `1 + d_r / r` enters the strain and the measure carries `2πr`.

mod kernel;
mod solver;

use std::collections::BTreeMap;
use std::sync::Arc;

use elastocap_fem::{BlockLayout, Family, FunctionSpace, Mesh, ReferenceTables, Symmetry};

use crate::error::{PhysicsError, Result};
use crate::fluid::VectorFn;
use crate::mixture::SolidParams;

pub use kernel::{assemble_solid, solid_volume_change, stored_energy, SolidLoads};
pub use solver::{SolidReport, SolidSolver};

pub type Mat2 = [[f64; 2]; 2];

/// Deformation gradient with the out-of-plane stretch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deformation {
    pub f: Mat2,
    pub f33: f64,
}

/// Green–Lagrange strain; `e33` is zero in plane strain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strain {
    pub e: Mat2,
    pub e33: f64,
}

impl Deformation {
    pub fn planar(f: Mat2) -> Self {
        Self { f, f33: 1.0 }
    }

    pub fn det(&self) -> f64 {
        (self.f[0][0] * self.f[1][1] - self.f[0][1] * self.f[1][0]) * self.f33
    }

    pub fn strain(&self) -> Strain {
        let f = &self.f;
        let mut e = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                e[i][j] = 0.5 * (f[0][i] * f[0][j] + f[1][i] * f[1][j] - if i == j { 1.0 } else { 0.0 });
            }
        }
        Strain { e, e33: 0.5 * (self.f33 * self.f33 - 1.0) }
    }
}

impl Strain {
    pub fn trace(&self) -> f64 {
        self.e[0][0] + self.e[1][1] + self.e33
    }
}

/// `F = I + ∇d` and `E = ½(FᵀF − I)`; fails on non-positive `det F`.
pub fn kinematics(grad: Mat2, hoop: f64, cell: usize) -> Result<(Deformation, Strain)> {
    let d = Deformation { f: [[1.0 + grad[0][0], grad[0][1]], [grad[1][0], 1.0 + grad[1][1]]], f33: 1.0 + hoop };
    let det = d.det();
    if !(det > 0.0) || d.f33 <= 0.0 {
        return Err(PhysicsError::InvertedElement { cell, det });
    }
    Ok((d, d.strain()))
}

/// `½λ (tr E)² + μ tr(E²)`.
pub fn stored_energy_density(e: &Strain, p: &SolidParams) -> f64 {
    let tr = e.trace();
    let sq = e.e[0][0].powi(2) + e.e[1][1].powi(2) + 2.0 * e.e[0][1] * e.e[1][0] + e.e33.powi(2);
    0.5 * p.lambda * tr * tr + p.mu * sq
}

/// Second Piola–Kirchhoff stress `λ tr(E) I + 2μE`, returned with its 33 part.
pub fn pk2_stress(e: &Strain, p: &SolidParams) -> (Mat2, f64) {
    let tr = e.trace();
    let mut s = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            s[i][j] = 2.0 * p.mu * e.e[i][j] + if i == j { p.lambda * tr } else { 0.0 };
        }
    }
    (s, p.lambda * tr + 2.0 * p.mu * e.e33)
}

/// First Piola–Kirchhoff stress `P = F S`, returned with its 33 part.
pub fn pk1_stress(d: &Deformation, p: &SolidParams) -> (Mat2, f64) {
    let (s, s33) = pk2_stress(&d.strain(), p);
    let f = &d.f;
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = f[i][0] * s[0][j] + f[i][1] * s[1][j];
        }
    }
    (out, d.f33 * s33)
}

/// Essential condition on selected displacement components.
#[derive(Clone)]
pub struct SolidDirichlet {
    pub components: [bool; 2],
    /// Prescribed displacement; zero when absent.
    pub value: Option<VectorFn>,
}

impl SolidDirichlet {
    pub fn clamped() -> Self {
        Self { components: [true, true], value: None }
    }

    pub fn roller(axis: usize) -> Self {
        let mut components = [false; 2];
        components[axis] = true;
        Self { components, value: None }
    }
}

#[derive(Clone, Default)]
pub struct SolidBcs {
    pub dirichlet: BTreeMap<String, SolidDirichlet>,
    /// Reference tractions.
    pub neumann: BTreeMap<String, VectorFn>,
    pub interface_tag: Option<String>,
}

impl SolidBcs {
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        for tag in self.dirichlet.keys().chain(self.neumann.keys()).chain(self.interface_tag.iter()) {
            if !mesh.has_tag(tag) {
                return Err(PhysicsError::Configuration(format!("solid condition on unknown tag `{tag}`")));
            }
        }
        for tag in self.dirichlet.keys() {
            if self.neumann.contains_key(tag) {
                return Err(PhysicsError::Configuration(format!("solid tag `{tag}` is both Dirichlet and Neumann")));
            }
        }
        if let Some(t) = &self.interface_tag {
            if self.dirichlet.contains_key(t) || self.neumann.contains_key(t) {
                return Err(PhysicsError::Configuration(format!(
                    "interface tag `{t}` must not carry solid Dirichlet or Neumann data"
                )));
            }
        }
        Ok(())
    }
}

/// Space and quadrature data of the substrate.
pub struct SolidSpace {
    pub mesh: Arc<Mesh>,
    pub space: Arc<FunctionSpace>,
    pub layout: BlockLayout,
    pub symmetry: Symmetry,
    pub tables: ReferenceTables,
}

impl SolidSpace {
    pub fn new(mesh: Arc<Mesh>, symmetry: Symmetry) -> Result<Self> {
        let space = Arc::new(FunctionSpace::new(mesh.clone(), Family::Vector, 2)?);
        let layout = BlockLayout::single(space.clone());
        Ok(Self { mesh, space, layout, symmetry, tables: ReferenceTables::standard() })
    }

    pub fn n_dofs(&self) -> usize {
        self.space.n_dofs()
    }
}

/// Displacement at the current and two previous levels.
#[derive(Debug, Clone, PartialEq)]
pub struct SolidState {
    pub displacement: Vec<f64>,
    pub previous: Vec<f64>,
    pub previous2: Vec<f64>,
}

impl SolidState {
    pub fn zeros(s: &SolidSpace) -> Self {
        let z = vec![0.0; s.n_dofs()];
        Self { displacement: z.clone(), previous: z.clone(), previous2: z }
    }

    /// Shifts the time levels after an accepted step.
    pub fn advance(&mut self) {
        std::mem::swap(&mut self.previous2, &mut self.previous);
        self.previous.clone_from(&self.displacement);
    }

    /// Backward-difference velocity coefficients.
    pub fn velocity(&self, dt: f64) -> Vec<f64> {
        self.displacement.iter().zip(&self.previous).map(|(a, b)| (a - b) / dt).collect()
    }

    pub fn nodal(&self, s: &SolidSpace) -> Vec<[f64; 2]> {
        s.space.expand_vector(&self.displacement)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SolidParams {
        SolidParams::from_lame(499333.0, 1000.667, 0.0).unwrap()
    }

    #[test]
    fn stretch_strain() {
        let (_, e) = kinematics([[0.1, 0.0], [0.0, 0.0]], 0.0, 0).unwrap();
        assert!((e.e[0][0] - 0.105).abs() < 1e-15 && e.e[1][1] == 0.0 && e.e[0][1] == 0.0);
    }

    #[test]
    fn rotation_has_no_strain() {
        let t: f64 = 0.7;
        let (_, e) = kinematics([[t.cos() - 1.0, -t.sin()], [t.sin(), t.cos() - 1.0]], 0.0, 0).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(e.e[i][j].abs() < 1e-15);
            }
        }
    }

    #[test]
    fn inversion_is_reported() {
        let err = kinematics([[-2.0, 0.0], [0.0, 0.0]], 0.0, 7).unwrap_err();
        assert!(matches!(err, PhysicsError::InvertedElement { cell: 7, .. }));
    }

    #[test]
    fn energy_examples() {
        let p = params();
        let e = Strain { e: [[0.01, 0.0], [0.0, 0.01]], e33: 0.0 };
        let w = stored_energy_density(&e, &p);
        assert!((w - (0.5 * 499333.0 * 4e-4 + 1000.667 * 2e-4)).abs() < 1e-9);
        assert!((w - 100.07).abs() < 0.01);
        let e = Strain { e: [[0.02, 0.0], [0.0, 0.0]], e33: 0.0 };
        assert!((stored_energy_density(&e, &p) - (0.5 * p.lambda + p.mu) * 4e-4).abs() < 1e-9);
    }

    #[test]
    fn uniaxial_pk1_matches_closed_form_and_energy_derivative() {
        let p = SolidParams::from_lame(3.0, 1.5, 0.0).unwrap();
        let l = 1.2;
        let (pk, _) = pk1_stress(&Deformation::planar([[l, 0.0], [0.0, 1.0]]), &p);
        let a = l * l - 1.0;
        assert!((pk[0][0] - l * (0.5 * p.lambda * a + p.mu * a)).abs() < 1e-12);
        assert!((pk[1][1] - 0.5 * p.lambda * a).abs() < 1e-12);
        let w = |f: Mat2| stored_energy_density(&Deformation::planar(f).strain(), &p);
        let f0 = [[1.1, 0.2], [-0.15, 0.95]];
        let (pk, _) = pk1_stress(&Deformation::planar(f0), &p);
        let h = 1e-6;
        for i in 0..2 {
            for j in 0..2 {
                let (mut fp, mut fm) = (f0, f0);
                fp[i][j] += h;
                fm[i][j] -= h;
                let fd = (w(fp) - w(fm)) / (2.0 * h);
                assert!((fd - pk[i][j]).abs() < 1e-7 * pk[i][j].abs().max(1.0));
            }
        }
    }

    #[test]
    fn pk1_is_objective() {
        let p = params();
        let f = [[1.01, 0.003], [-0.002, 0.995]];
        let t: f64 = 0.4;
        let r = [[t.cos(), -t.sin()], [t.sin(), t.cos()]];
        let rf = [
            [r[0][0] * f[0][0] + r[0][1] * f[1][0], r[0][0] * f[0][1] + r[0][1] * f[1][1]],
            [r[1][0] * f[0][0] + r[1][1] * f[1][0], r[1][0] * f[0][1] + r[1][1] * f[1][1]],
        ];
        let (pf, _) = pk1_stress(&Deformation::planar(f), &p);
        let (prf, _) = pk1_stress(&Deformation::planar(rf), &p);
        for i in 0..2 {
            for j in 0..2 {
                let rp = r[i][0] * pf[0][j] + r[i][1] * pf[1][j];
                assert!((rp - prf[i][j]).abs() < 1e-9 * pf[0][0].abs());
            }
        }
        let w0 = stored_energy_density(&Deformation::planar(f).strain(), &p);
        let w1 = stored_energy_density(&Deformation::planar(rf).strain(), &p);
        assert!((w0 - w1).abs() < 1e-12 * w0);
    }
}
