//! Scenario configuration: TOML schema, validation and conversion to
//! internal units.

use std::fmt;
use std::path::{Path, PathBuf};

use elastocap_core::mixture::{lame_from_young_poisson, static_contact_angle};
use elastocap_core::units;
use elastocap_core::{FluidParams, SolidParams};
use elastocap_fem::{Rect, Symmetry};
use serde::{Deserialize, Serialize};

/// A rejected configuration, naming the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.to_string(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            write!(f, "invalid configuration: {}", self.message)
        } else {
            write!(f, "invalid configuration: `{}` {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryMode {
    Planar,
    Axisymmetric,
}

impl From<SymmetryMode> for Symmetry {
    fn from(m: SymmetryMode) -> Self {
        match m {
            SymmetryMode::Planar => Symmetry::Planar,
            SymmetryMode::Axisymmetric => Symmetry::Axisymmetric,
        }
    }
}

/// What lies below the fluid domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Substrate {
    /// Closed box with neutral walls.
    None,
    Rigid,
    Elastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    /// Fluid domain `[x0, x1, y0, y1]` in μm; the substrate surface is `y = y0`.
    pub domain: [f64; 4],
    /// μm.
    pub droplet_radius: f64,
    /// μm; may lie below the substrate surface for a cap.
    pub droplet_center: [f64; 2],
    pub substrate: Substrate,
    /// μm, elastic substrates only.
    #[serde(default)]
    pub substrate_thickness: Option<f64>,
}

/// Constants in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    /// kg/m³, droplet then ambient.
    pub density_1: f64,
    pub density_2: f64,
    /// Pa·s.
    pub viscosity_1: f64,
    pub viscosity_2: f64,
    /// N/m.
    pub surface_tension: f64,
    /// N/m, droplet against the solid.
    pub wall_tension_1: f64,
    /// N/m, ambient against the solid.
    pub wall_tension_2: f64,
    /// m.
    pub interface_thickness: f64,
    /// m³·s/kg.
    pub mobility: f64,
    /// Pa.
    #[serde(default)]
    pub young_modulus: Option<f64>,
    #[serde(default)]
    pub poisson_ratio: Option<f64>,
    /// kg/m³.
    #[serde(default)]
    pub solid_density: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementBox {
    /// `[x0, x1, y0, y1]` in μm.
    pub region: [f64; 4],
    pub levels: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    /// Coarse cells per axis of the fluid domain.
    pub base_resolution: [usize; 2],
    /// Target resolution of the diffuse interface inside the band.
    pub cells_per_epsilon: f64,
    /// Half-width of the refined band around the initial droplet surface, in units of ε.
    #[serde(default = "default_band")]
    pub band_half_width: f64,
    #[serde(default)]
    pub refine_boxes: Vec<RefinementBox>,
    /// Extra refinement boxes for the substrate mesh.
    #[serde(default)]
    pub solid_refine_boxes: Vec<RefinementBox>,
}

fn default_band() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Time {
    /// ms.
    pub dt: f64,
    /// ms.
    pub t_end: f64,
    #[serde(default)]
    pub quasi_static: bool,
    /// Steady when the interfaces move less than this many ε per step.
    #[serde(default)]
    pub steady_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solver {
    #[serde(default = "default_newton_tol")]
    pub newton_tolerance: f64,
    #[serde(default = "default_newton_max")]
    pub newton_max_iterations: usize,
    #[serde(default = "default_coupling_tol")]
    pub coupling_tolerance: f64,
    #[serde(default = "default_coupling_max")]
    pub coupling_max_iterations: usize,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_true")]
    pub aitken: bool,
}

impl Default for Solver {
    fn default() -> Self {
        Self {
            newton_tolerance: default_newton_tol(),
            newton_max_iterations: default_newton_max(),
            coupling_tolerance: default_coupling_tol(),
            coupling_max_iterations: default_coupling_max(),
            omega: default_omega(),
            aitken: true,
        }
    }
}

fn default_newton_tol() -> f64 {
    1e-9
}

fn default_newton_max() -> usize {
    25
}

fn default_coupling_tol() -> f64 {
    1e-8
}

fn default_coupling_max() -> usize {
    50
}

fn default_omega() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub directory: PathBuf,
    /// Snapshot every this many steps; 0 writes only the final state.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub vtk: bool,
    /// μm, reference coordinates.
    pub droplet_probe: [f64; 2],
    pub ambient_probe: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub symmetry: SymmetryMode,
    pub geometry: Geometry,
    pub physics: Physics,
    pub discretization: Discretization,
    pub time: Time,
    #[serde(default)]
    pub solver: Solver,
    pub output: Output,
}

/// Physical constants and derived discretization data in internal units.
#[derive(Debug, Clone, PartialEq)]
pub struct Derived {
    pub fluid: FluidParams,
    pub solid: Option<SolidParams>,
    pub domain: Rect,
    pub dt: f64,
    pub t_end: f64,
    pub band_level: u8,
    pub cells_per_epsilon: f64,
    pub band_half_width: f64,
    pub steady_tolerance: Option<f64>,
}

pub const DEFAULT_STEADY_TOLERANCE: f64 = 1e-4;
const MAX_LEVEL: u8 = 10;

fn rect(field: &str, r: [f64; 4]) -> Result<Rect, ConfigError> {
    if r.iter().any(|v| !v.is_finite()) {
        return Err(ConfigError::new(field, "must be finite"));
    }
    if !(r[1] > r[0] && r[3] > r[2]) {
        return Err(ConfigError::new(field, format!("must satisfy x0 < x1 and y0 < y1 (got {r:?})")));
    }
    Ok(Rect::new(r[0], r[1], r[2], r[3]))
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(field, format!("must be positive (got {v})")))
    }
}

fn unit_interval(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(field, format!("must lie in (0, 1) (got {v})")))
    }
}

fn required(field: &str, v: Option<f64>) -> Result<f64, ConfigError> {
    v.ok_or_else(|| ConfigError::new(field, "is required for an elastic substrate"))
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::new("", e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Checks every field and converts to internal units.
    pub fn validate(&self) -> Result<Derived, ConfigError> {
        let g = &self.geometry;
        let domain = rect("geometry.domain", g.domain)?;
        if self.symmetry == SymmetryMode::Axisymmetric && g.domain[0] != 0.0 {
            return Err(ConfigError::new("geometry.domain", "must start at x = 0 (the symmetry axis) in axisymmetric mode"));
        }
        positive("geometry.droplet_radius", g.droplet_radius)?;
        if g.droplet_center.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::new("geometry.droplet_center", "must be finite"));
        }
        match (g.substrate, g.substrate_thickness) {
            (Substrate::Elastic, None) => {
                return Err(ConfigError::new("geometry.substrate_thickness", "is required for an elastic substrate"))
            }
            (Substrate::Elastic, Some(t)) => {
                positive("geometry.substrate_thickness", t)?;
            }
            (_, Some(_)) => {
                return Err(ConfigError::new("geometry.substrate_thickness", "is only valid with an elastic substrate"))
            }
            _ => {}
        }

        let p = &self.physics;
        let fluid = FluidParams {
            rho1: units::density_from_si(positive("physics.density_1", p.density_1)?),
            rho2: units::density_from_si(positive("physics.density_2", p.density_2)?),
            nu1: units::viscosity_from_si(positive("physics.viscosity_1", p.viscosity_1)?),
            nu2: units::viscosity_from_si(positive("physics.viscosity_2", p.viscosity_2)?),
            sigma: units::tension_from_si(positive("physics.surface_tension", p.surface_tension)?),
            sigma1: units::tension_from_si(positive("physics.wall_tension_1", p.wall_tension_1)?),
            sigma2: units::tension_from_si(positive("physics.wall_tension_2", p.wall_tension_2)?),
            epsilon: units::length_from_si(positive("physics.interface_thickness", p.interface_thickness)?),
            gamma: units::mobility_from_si(positive("physics.mobility", p.mobility)?),
        };
        if g.substrate != Substrate::None {
            static_contact_angle(&fluid).map_err(|e| ConfigError::new("physics.wall_tension_2", e.to_string()))?;
        }
        let solid = if g.substrate == Substrate::Elastic {
            let e = positive("physics.young_modulus", required("physics.young_modulus", p.young_modulus)?)?;
            let nu = required("physics.poisson_ratio", p.poisson_ratio)?;
            lame_from_young_poisson(e, nu).map_err(|err| ConfigError::new("physics.poisson_ratio", err.to_string()))?;
            let rho = required("physics.solid_density", p.solid_density)?;
            if !(rho >= 0.0 && rho.is_finite()) {
                return Err(ConfigError::new("physics.solid_density", format!("must be non-negative (got {rho})")));
            }
            let sp = SolidParams::from_young_poisson(units::pressure_from_pa(e), nu, units::density_from_si(rho))
                .map_err(|err| ConfigError::new("physics.young_modulus", err.to_string()))?;
            Some(sp)
        } else {
            for (name, v) in
                [("physics.young_modulus", p.young_modulus), ("physics.poisson_ratio", p.poisson_ratio), ("physics.solid_density", p.solid_density)]
            {
                if v.is_some() {
                    return Err(ConfigError::new(name, "is only valid with an elastic substrate"));
                }
            }
            None
        };

        let d = &self.discretization;
        let [nx, ny] = d.base_resolution;
        if nx == 0 || ny == 0 {
            return Err(ConfigError::new("discretization.base_resolution", "needs at least one cell per axis"));
        }
        let cpe = d.cells_per_epsilon;
        if !(cpe >= 2.0 && cpe.is_finite()) {
            return Err(ConfigError::new("discretization.cells_per_epsilon", format!("must be at least 2 (got {cpe})")));
        }
        if cpe < 4.0 {
            log::warn!("discretization.cells_per_epsilon = {cpe} is below 4; interface quantities will be under-resolved");
        }
        positive("discretization.band_half_width", d.band_half_width)?;
        let h0 = (domain.width() / nx as f64).min(domain.height() / ny as f64);
        let ratio = h0 * cpe / fluid.epsilon;
        let band_level = if ratio <= 1.0 { 0 } else { ratio.log2().ceil() as u32 };
        if band_level > MAX_LEVEL as u32 {
            return Err(ConfigError::new(
                "discretization.cells_per_epsilon",
                format!("needs {band_level} refinement levels from the base mesh; at most {MAX_LEVEL} are supported"),
            ));
        }
        let boxes = d.refine_boxes.iter().map(|b| ("discretization.refine_boxes", b));
        let solid_boxes = d.solid_refine_boxes.iter().map(|b| ("discretization.solid_refine_boxes", b));
        for (name, b) in boxes.chain(solid_boxes) {
            rect(name, b.region)?;
            if b.levels == 0 || b.levels > MAX_LEVEL {
                return Err(ConfigError::new(name, format!("levels must be in 1..={MAX_LEVEL} (got {})", b.levels)));
            }
        }
        if !d.solid_refine_boxes.is_empty() && g.substrate != Substrate::Elastic {
            return Err(ConfigError::new("discretization.solid_refine_boxes", "is only valid with an elastic substrate"));
        }

        let t = &self.time;
        let dt = positive("time.dt", t.dt)?;
        let t_end = positive("time.t_end", t.t_end)?;
        if t_end < dt {
            return Err(ConfigError::new("time.t_end", format!("must be at least one step (dt = {dt} ms, got {t_end})")));
        }
        let steady_tolerance = match t.steady_tolerance {
            Some(v) => Some(unit_interval("time.steady_tolerance", v)?),
            None => Some(DEFAULT_STEADY_TOLERANCE),
        };
        if t.quasi_static && g.substrate != Substrate::Elastic {
            return Err(ConfigError::new("time.quasi_static", "only applies to an elastic substrate"));
        }

        let s = &self.solver;
        unit_interval("solver.newton_tolerance", s.newton_tolerance)?;
        unit_interval("solver.coupling_tolerance", s.coupling_tolerance)?;
        if s.newton_max_iterations == 0 {
            return Err(ConfigError::new("solver.newton_max_iterations", "must be at least 1"));
        }
        if s.coupling_max_iterations == 0 {
            return Err(ConfigError::new("solver.coupling_max_iterations", "must be at least 1"));
        }
        if !(s.omega > 0.0 && s.omega <= 1.0) {
            return Err(ConfigError::new("solver.omega", format!("must lie in (0, 1] (got {})", s.omega)));
        }

        let o = &self.output;
        if o.directory.as_os_str().is_empty() {
            return Err(ConfigError::new("output.directory", "must not be empty"));
        }
        for (name, x) in [("output.droplet_probe", o.droplet_probe), ("output.ambient_probe", o.ambient_probe)] {
            if !domain.contains(x) {
                return Err(ConfigError::new(name, format!("({}, {}) lies outside the fluid domain", x[0], x[1])));
            }
        }

        Ok(Derived {
            fluid,
            solid,
            domain,
            dt: units::time_from_ms(dt),
            t_end: units::time_from_ms(t_end),
            band_level: band_level as u8,
            cells_per_epsilon: fluid.epsilon / (h0 / 2f64.powi(band_level as i32)),
            band_half_width: d.band_half_width * fluid.epsilon,
            steady_tolerance,
        })
    }

    /// Number of steps to reach `t_end`.
    pub fn total_steps(&self) -> usize {
        (self.time.t_end / self.time.dt - 1e-9).ceil().max(1.0) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const SAMPLE: &str = r#"
symmetry = "axisymmetric"

[geometry]
domain = [0.0, 400.0, 0.0, 320.0]
droplet_radius = 178.0
droplet_center = [0.0, 19.3]
substrate = "elastic"
substrate_thickness = 50.0

[physics]
density_1 = 1260.0
density_2 = 1260.0
viscosity_1 = 1.412
viscosity_2 = 1.412
surface_tension = 0.046
wall_tension_1 = 0.036
wall_tension_2 = 0.031
interface_thickness = 2e-6
mobility = 1e-11
young_modulus = 3000.0
poisson_ratio = 0.499
solid_density = 12600.0

[discretization]
base_resolution = [25, 20]
cells_per_epsilon = 2.0

[time]
dt = 0.5
t_end = 16.0

[output]
directory = "out"
droplet_probe = [0.0, 100.0]
ambient_probe = [390.0, 310.0]
"#;

    #[test]
    fn sample_converts_to_internal_units() {
        let c = Config::from_toml(SAMPLE).unwrap();
        let d = c.validate().unwrap();
        let f = d.fluid;
        assert!((f.rho1 - 1.26).abs() < 1e-12);
        assert!((f.nu1 - 1412.0).abs() < 1e-9);
        assert!((f.sigma - 46.0).abs() < 1e-12 && (f.sigma1 - 36.0).abs() < 1e-12);
        assert!((f.epsilon - 2.0).abs() < 1e-12);
        assert!((f.gamma - 0.01).abs() < 1e-15);
        let s = d.solid.unwrap();
        assert!((s.young_modulus - 3.0).abs() < 1e-12 && (s.rho_hat - 12.6).abs() < 1e-12);
        assert_eq!(d.dt, 500.0);
        assert_eq!(c.total_steps(), 32);
        // 16 μm base cells need 2^4 subdivisions for 2 cells per ε.
        assert_eq!(d.band_level, 4);
        assert!((d.cells_per_epsilon - 2.0).abs() < 1e-12);
    }

    #[test]
    fn round_trip_through_toml() {
        let c = Config::from_toml(SAMPLE).unwrap();
        assert_eq!(Config::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = SAMPLE.replace("t_end = 16.0", "t_end = 16.0\ntend = 3.0");
        let err = Config::from_toml(&text).unwrap_err();
        assert!(err.message.contains("tend"), "{err}");
    }

    fn invalid(from: &str, to: &str) -> ConfigError {
        Config::from_toml(&SAMPLE.replace(from, to)).unwrap().validate().unwrap_err()
    }

    #[test]
    fn invalid_values_name_the_field() {
        assert_eq!(invalid("dt = 0.5", "dt = -0.5").field, "time.dt");
        assert_eq!(invalid("cells_per_epsilon = 2.0", "cells_per_epsilon = 1.5").field, "discretization.cells_per_epsilon");
        assert_eq!(invalid("poisson_ratio = 0.499", "poisson_ratio = 0.5").field, "physics.poisson_ratio");
        assert_eq!(invalid("wall_tension_2 = 0.031", "wall_tension_2 = 0.1").field, "physics.wall_tension_2");
        assert_eq!(invalid("domain = [0.0, 400.0", "domain = [10.0, 400.0").field, "geometry.domain");
        assert_eq!(invalid("substrate_thickness = 50.0", "").field, "geometry.substrate_thickness");
        assert_eq!(invalid("ambient_probe = [390.0, 310.0]", "ambient_probe = [390.0, 330.0]").field, "output.ambient_probe");
        let text = SAMPLE.replace("[output]", "[solver]\nomega = 1.5\n\n[output]");
        assert_eq!(Config::from_toml(&text).unwrap().validate().unwrap_err().field, "solver.omega");
        let text = SAMPLE.replace("t_end = 16.0", "t_end = 16.0\nsteady_tolerance = 2.0");
        assert_eq!(Config::from_toml(&text).unwrap().validate().unwrap_err().field, "time.steady_tolerance");
    }

    #[test]
    fn display_names_the_field() {
        let e = invalid("dt = 0.5", "dt = -0.5");
        assert!(e.to_string().contains("`time.dt`"), "{e}");
    }
}
