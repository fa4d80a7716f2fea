//! Constitutive laws of the binary mixture and of the substrate.

use std::f64::consts::SQRT_2;

use crate::error::{PhysicsError, Result};

/// Fluid constants in internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidParams {
    pub rho1: f64,
    pub rho2: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub sigma: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub epsilon: f64,
    pub gamma: f64,
}

impl FluidParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("nu1", self.nu1),
            ("nu2", self.nu2),
            ("sigma", self.sigma),
            ("sigma1", self.sigma1),
            ("sigma2", self.sigma2),
            ("epsilon", self.epsilon),
            ("gamma", self.gamma),
        ];
        for (name, v) in named {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PhysicsError::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn sigma_tilde(&self) -> f64 {
        3.0 * self.sigma / (2.0 * SQRT_2)
    }

    pub fn density(&self, phi: f64) -> f64 {
        mixture_density(phi, self)
    }

    pub fn density_prime(&self) -> f64 {
        0.5 * (self.rho1 - self.rho2)
    }

    pub fn viscosity(&self, phi: f64) -> f64 {
        mixture_viscosity(phi, self)
    }

    pub fn viscosity_prime(&self) -> f64 {
        0.5 * (self.nu1 - self.nu2)
    }
}

/// Substrate constants in internal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolidParams {
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    pub lambda: f64,
    pub mu: f64,
    pub rho_hat: f64,
}

impl SolidParams {
    pub fn from_young_poisson(young: f64, poisson: f64, rho_hat: f64) -> Result<Self> {
        let (lambda, mu) = lame_from_young_poisson(young, poisson)?;
        if !(rho_hat >= 0.0) {
            return Err(PhysicsError::InvalidParameter(format!("solid density must be non-negative, got {rho_hat}")));
        }
        Ok(Self { young_modulus: young, poisson_ratio: poisson, lambda, mu, rho_hat })
    }

    pub fn from_lame(lambda: f64, mu: f64, rho_hat: f64) -> Result<Self> {
        if !(mu > 0.0) || !(lambda >= 0.0) {
            return Err(PhysicsError::InvalidParameter(format!("Lamé parameters must satisfy μ>0, λ≥0 (got {lambda}, {mu})")));
        }
        let young = mu * (3.0 * lambda + 2.0 * mu) / (lambda + mu);
        let poisson = lambda / (2.0 * (lambda + mu));
        Ok(Self { young_modulus: young, poisson_ratio: poisson, lambda, mu, rho_hat })
    }
}

pub fn double_well(phi: f64) -> f64 {
    let a = phi * phi - 1.0;
    0.25 * a * a
}

pub fn double_well_prime(phi: f64) -> f64 {
    phi * phi * phi - phi
}

pub fn double_well_second(phi: f64) -> f64 {
    3.0 * phi * phi - 1.0
}

pub fn mixture_density(phi: f64, p: &FluidParams) -> f64 {
    0.5 * p.rho1 * (1.0 + phi) + 0.5 * p.rho2 * (1.0 - phi)
}

pub fn mixture_viscosity(phi: f64, p: &FluidParams) -> f64 {
    0.5 * p.nu1 * (1.0 + phi) + 0.5 * p.nu2 * (1.0 - phi)
}

/// Rescaled tension σ̃ with `2√2 σ̃ = 3σ`.
pub fn sigma_tilde(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(PhysicsError::InvalidParameter(format!("surface tension must be positive, got {sigma}")));
    }
    Ok(3.0 * sigma / (2.0 * SQRT_2))
}

/// Fluid–solid surface energy interpolating σ₂ at φ=−1 and σ₁ at φ=1.
pub fn wall_energy(phi: f64, p: &FluidParams) -> f64 {
    0.25 * (phi * phi * phi - 3.0 * phi) * (p.sigma2 - p.sigma1) + 0.5 * (p.sigma1 + p.sigma2)
}

pub fn wall_energy_prime(phi: f64, p: &FluidParams) -> f64 {
    0.75 * (phi * phi - 1.0) * (p.sigma2 - p.sigma1)
}

pub fn wall_energy_second(phi: f64, p: &FluidParams) -> f64 {
    1.5 * phi * (p.sigma2 - p.sigma1)
}

/// Equilibrium angle measured inside fluid 1, in radians.
pub fn static_contact_angle(p: &FluidParams) -> Result<f64> {
    let diff = p.sigma2 - p.sigma1;
    if diff.abs() > p.sigma {
        return Err(PhysicsError::TotalWetting { diff: diff.abs(), sigma: p.sigma });
    }
    Ok((diff / p.sigma).clamp(-1.0, 1.0).acos())
}

/// Stationary flat profile at signed distance `d` from the interface.
pub fn equilibrium_profile(d: f64, epsilon: f64) -> f64 {
    (d / (SQRT_2 * epsilon)).tanh()
}

pub fn lame_from_young_poisson(young: f64, nu: f64) -> Result<(f64, f64)> {
    if !(young > 0.0) {
        return Err(PhysicsError::InvalidParameter(format!("Young's modulus must be positive, got {young}")));
    }
    if nu >= 0.5 {
        return Err(PhysicsError::IncompressibleLimit(nu));
    }
    if !(nu >= 0.0) {
        return Err(PhysicsError::InvalidParameter(format!("Poisson ratio must be in [0, 0.5), got {nu}")));
    }
    let mu = young / (2.0 + 2.0 * nu);
    let lambda = nu * young / ((1.0 + nu) * (1.0 - 2.0 * nu));
    Ok((lambda, mu))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn reference() -> FluidParams {
        FluidParams {
            rho1: 1.26,
            rho2: 1.26,
            nu1: 1412.0,
            nu2: 1412.0,
            sigma: 46.0,
            sigma1: 36.0,
            sigma2: 31.0,
            epsilon: 2.0,
            gamma: 0.01,
        }
    }

    #[test]
    fn double_well_values() {
        assert_eq!(double_well(1.0), 0.0);
        assert_eq!(double_well_prime(1.0), 0.0);
        assert_eq!(double_well(0.0), 0.25);
        assert_eq!(double_well_prime(0.0), 0.0);
        assert!((double_well(0.5) - 0.140625).abs() < 1e-15);
        assert!((double_well_prime(0.5) + 0.375).abs() < 1e-15);
    }

    #[test]
    fn mixture_interpolation() {
        let mut p = reference();
        p.rho1 = 2.0;
        p.rho2 = 1.0;
        assert_eq!(mixture_density(1.0, &p), 2.0);
        assert_eq!(mixture_density(-1.0, &p), 1.0);
        assert!((mixture_density(0.0, &reference()) - 1.26).abs() < 1e-15);
        assert_eq!(mixture_viscosity(1.0, &reference()), 1412.0);
    }

    #[test]
    fn sigma_tilde_values() {
        assert!((sigma_tilde(2.0 * SQRT_2 / 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((sigma_tilde(46.0).unwrap() - 48.790).abs() < 5e-4);
        assert!(sigma_tilde(0.0).is_err());
    }

    #[test]
    fn wall_energy_anchors() {
        let p = reference();
        assert!((wall_energy(1.0, &p) - 36.0).abs() < 1e-13);
        assert!((wall_energy(-1.0, &p) - 31.0).abs() < 1e-13);
        assert!((wall_energy(0.0, &p) - 33.5).abs() < 1e-13);
    }

    #[test]
    fn contact_angles() {
        let mut p = reference();
        let th = static_contact_angle(&p).unwrap();
        assert!((th - (-5.0f64 / 46.0).acos()).abs() < 1e-15);
        assert!((th - 1.6797).abs() < 1e-4);
        assert!((th.to_degrees() - 96.24).abs() < 0.01);
        p.sigma2 = p.sigma1;
        assert!((static_contact_angle(&p).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        p.sigma2 = p.sigma1 + p.sigma;
        assert_eq!(static_contact_angle(&p).unwrap(), 0.0);
        p.sigma2 = p.sigma1 + 1.1 * p.sigma;
        assert!(matches!(static_contact_angle(&p), Err(PhysicsError::TotalWetting { .. })));
    }

    #[test]
    fn profile_values_and_ode() {
        let eps = 2.0;
        assert_eq!(equilibrium_profile(0.0, eps), 0.0);
        assert!((equilibrium_profile(1e3, eps) - 1.0).abs() < 1e-15);
        assert!((equilibrium_profile(SQRT_2 * eps, eps) - 0.76159).abs() < 1e-5);
        // ε φ'' = W'(φ)/ε pointwise, by central differences.
        let h = 1e-4;
        for d in [-3.0, -0.7, 0.0, 0.4, 2.5] {
            let f = |x: f64| equilibrium_profile(x, eps);
            let fpp = (f(d + h) - 2.0 * f(d) + f(d - h)) / (h * h);
            assert!((eps * fpp - double_well_prime(f(d)) / eps).abs() < 1e-6);
        }
    }

    #[test]
    fn lame_values() {
        let (l, m) = lame_from_young_poisson(1.0, 0.0).unwrap();
        assert_eq!((l, m), (0.0, 0.5));
        let (l, m) = lame_from_young_poisson(3000.0, 0.499).unwrap();
        assert!((m - 1000.667).abs() < 1e-3);
        assert!((l - 499333.0).abs() < 1.0);
        assert!(matches!(lame_from_young_poisson(3000.0, 0.5), Err(PhysicsError::IncompressibleLimit(_))));
    }
}
