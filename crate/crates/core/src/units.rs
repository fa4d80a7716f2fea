//! Conversions between SI and the internal μm / μs / pg system.
//!
//! Derived internal units: stress 1 kPa, dynamic viscosity 1 mPa·s, surface
//! tension 1 mN/m, density 1000 kg/m³, energy 1e-15 J.

pub const LENGTH_SI: f64 = 1e-6;
pub const TIME_SI: f64 = 1e-6;
pub const MASS_SI: f64 = 1e-15;
pub const PRESSURE_SI: f64 = MASS_SI / (LENGTH_SI * TIME_SI * TIME_SI);
pub const VISCOSITY_SI: f64 = MASS_SI / (LENGTH_SI * TIME_SI);
pub const TENSION_SI: f64 = MASS_SI / (TIME_SI * TIME_SI);
pub const DENSITY_SI: f64 = MASS_SI / (LENGTH_SI * LENGTH_SI * LENGTH_SI);
pub const MOBILITY_SI: f64 = LENGTH_SI * LENGTH_SI * LENGTH_SI * TIME_SI / MASS_SI;
pub const ENERGY_SI: f64 = MASS_SI * LENGTH_SI * LENGTH_SI / (TIME_SI * TIME_SI);

pub fn pressure_from_pa(p: f64) -> f64 {
    p / PRESSURE_SI
}

pub fn pressure_to_pa(p: f64) -> f64 {
    p * PRESSURE_SI
}

pub fn viscosity_from_si(v: f64) -> f64 {
    v / VISCOSITY_SI
}

pub fn tension_from_si(s: f64) -> f64 {
    s / TENSION_SI
}

pub fn density_from_si(r: f64) -> f64 {
    r / DENSITY_SI
}

pub fn mobility_from_si(g: f64) -> f64 {
    g / MOBILITY_SI
}

pub fn length_from_si(l: f64) -> f64 {
    l / LENGTH_SI
}

pub fn time_from_ms(t: f64) -> f64 {
    t * 1e3
}

pub fn time_to_ms(t: f64) -> f64 {
    t * 1e-3
}
