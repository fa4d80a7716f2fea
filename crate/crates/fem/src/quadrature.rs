//! Gauss–Legendre rules on the unit interval and the unit square.

/// Tensor or line rule on the reference cell `[0,1]^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Highest total polynomial degree per coordinate integrated exactly.
    pub degree: usize,
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[0,1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "at least one quadrature point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

impl QuadratureRule {
    /// Tensor Gauss rule with `n` points per direction on `[0,1]^2`.
    pub fn gauss_square(n: usize) -> Self {
        let (x, w) = gauss_legendre_unit(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                points.push([x[i], x[j]]);
                weights.push(w[i] * w[j]);
            }
        }
        Self { points, weights, degree: 2 * n - 1 }
    }

    /// Gauss rule with `n` points on `[0,1]`; the second coordinate is unused.
    pub fn gauss_line(n: usize) -> Self {
        let (x, w) = gauss_legendre_unit(n);
        Self { points: x.iter().map(|&t| [t, 0.0]).collect(), weights: w, degree: 2 * n - 1 }
    }

    /// Smallest square rule exact to `degree` per coordinate.
    pub fn square_for_degree(degree: usize) -> Self {
        Self::gauss_square(degree / 2 + 1)
    }

    pub fn line_for_degree(degree: usize) -> Self {
        Self::gauss_line(degree / 2 + 1)
    }

    /// Default rule for trial/test degree `p`: exact to `2p + 2`.
    pub fn for_element_degree(p: usize) -> Self {
        Self::square_for_degree(2 * p + 2)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}
