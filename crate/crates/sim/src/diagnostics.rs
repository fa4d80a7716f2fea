//! Observables of a fluid state: point values, interface curves and the
//! apparent contact angle.

use elastocap_core::fluid::{FluidSpaces, NodalFluid};
use elastocap_fem::basis::LagrangeQuad;
use elastocap_fem::geometry::locate;
use elastocap_fem::{Configuration, Result};

/// Values of the Q1 pressure and Q2 fields at a point of the reference configuration.
pub struct PointValues {
    pub p: f64,
    pub phi: f64,
    pub u: [f64; 2],
}

pub fn evaluate(s: &FluidSpaces, nodal: &NodalFluid, x: [f64; 2]) -> Result<PointValues> {
    let (c, xi) = locate(&Configuration::reference(&s.phase), x)?;
    let (mut v1, mut g1) = ([0.0; 4], [[0.0; 2]; 4]);
    LagrangeQuad::new(1)?.eval(xi, &mut v1, &mut g1);
    let (mut v2, mut g2) = ([0.0; 9], [[0.0; 2]; 9]);
    LagrangeQuad::new(2)?.eval(xi, &mut v2, &mut g2);
    let p = s.pressure.cell_nodes(c).iter().zip(&v1).map(|(&n, w)| w * nodal.p[n as usize]).sum();
    let nodes = s.phase.cell_nodes(c);
    let phi = nodes.iter().zip(&v2).map(|(&n, w)| w * nodal.phi[n as usize]).sum();
    let mut u = [0.0; 2];
    for (&n, w) in nodes.iter().zip(&v2) {
        u[0] += w * nodal.u[n as usize][0];
        u[1] += w * nodal.u[n as usize][1];
    }
    Ok(PointValues { p, phi, u })
}

/// Wall nodes of the fluid mesh ordered by reference abscissa.
pub fn wall_nodes(s: &FluidSpaces, tag: &str) -> Result<Vec<u32>> {
    let mut nodes = s.phase.boundary_nodes(tag)?.to_vec();
    nodes.sort_by(|&a, &b| s.phase.node_position(a as usize)[0].total_cmp(&s.phase.node_position(b as usize)[0]));
    Ok(nodes)
}

fn position(s: &FluidSpaces, n: usize, disp: Option<&[[f64; 2]]>) -> [f64; 2] {
    let x = s.phase.node_position(n);
    match disp {
        Some(d) => [x[0] + d[n][0], x[1] + d[n][1]],
        None => x,
    }
}

/// Deformed fluid–solid interface as an ordered polyline.
pub fn interface_polyline(s: &FluidSpaces, tag: &str, disp: Option<&[[f64; 2]]>) -> Result<Vec<[f64; 2]>> {
    Ok(wall_nodes(s, tag)?.into_iter().map(|n| position(s, n as usize, disp)).collect())
}

/// Abscissa of the first sign change of φ along the wall, linearly interpolated.
pub fn contact_line_radius(s: &FluidSpaces, tag: &str, phi: &[f64], disp: Option<&[[f64; 2]]>) -> Result<f64> {
    let nodes = wall_nodes(s, tag)?;
    for w in nodes.windows(2) {
        let (a, b) = (w[0] as usize, w[1] as usize);
        if phi[a] >= 0.0 && phi[b] < 0.0 {
            let t = phi[a] / (phi[a] - phi[b]);
            let (xa, xb) = (position(s, a, disp), position(s, b, disp));
            return Ok(xa[0] + t * (xb[0] - xa[0]));
        }
    }
    Ok(f64::NAN)
}

/// Segments of the φ = 0 level set by marching squares on the 2×2 sub-cells
/// spanned by the biquadratic nodes of every cell.
pub fn phase_contour(s: &FluidSpaces, phi: &[f64], disp: Option<&[[f64; 2]]>) -> Vec<[[f64; 2]; 2]> {
    let mut out = Vec::new();
    for c in 0..s.mesh.num_cells() {
        let nodes = s.phase.cell_nodes(c);
        for j in 0..2 {
            for i in 0..2 {
                let corners = [j * 3 + i, j * 3 + i + 1, (j + 1) * 3 + i + 1, (j + 1) * 3 + i];
                let x: Vec<[f64; 2]> = corners.iter().map(|&k| position(s, nodes[k] as usize, disp)).collect();
                let f: Vec<f64> = corners.iter().map(|&k| phi[nodes[k] as usize]).collect();
                marching_square(&x, &f, &mut out);
            }
        }
    }
    out
}

fn marching_square(x: &[[f64; 2]], f: &[f64], out: &mut Vec<[[f64; 2]; 2]>) {
    let mut cuts = Vec::with_capacity(4);
    for e in 0..4 {
        let (a, b) = (e, (e + 1) % 4);
        if (f[a] >= 0.0) != (f[b] >= 0.0) {
            let t = f[a] / (f[a] - f[b]);
            cuts.push([x[a][0] + t * (x[b][0] - x[a][0]), x[a][1] + t * (x[b][1] - x[a][1])]);
        }
    }
    match cuts.len() {
        2 => out.push([cuts[0], cuts[1]]),
        4 => {
            let centre = f.iter().sum::<f64>() >= 0.0;
            if centre == (f[0] >= 0.0) {
                out.push([cuts[0], cuts[3]]);
                out.push([cuts[1], cuts[2]]);
            } else {
                out.push([cuts[0], cuts[1]]);
                out.push([cuts[2], cuts[3]]);
            }
        }
        _ => {}
    }
}

/// Least-squares circle `(centre, radius)` through the points.
pub fn fit_circle(points: &[[f64; 2]]) -> Option<([f64; 2], f64)> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let my = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut suu, mut suv, mut svv, mut suuu, mut svvv, mut suvv, mut svuu) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (u, v) = (p[0] - mx, p[1] - my);
        suu += u * u;
        suv += u * v;
        svv += v * v;
        suuu += u * u * u;
        svvv += v * v * v;
        suvv += u * v * v;
        svuu += v * u * u;
    }
    let det = suu * svv - suv * suv;
    if det.abs() < 1e-300 {
        return None;
    }
    let (b0, b1) = (0.5 * (suuu + suvv), 0.5 * (svvv + svuu));
    let uc = (b0 * svv - b1 * suv) / det;
    let vc = (suu * b1 - suv * b0) / det;
    let r = (uc * uc + vc * vc + (suu + svv) / n).sqrt();
    Some(([mx + uc, my + vc], r))
}

/// Apparent contact angle inside the droplet, in degrees, from a circle fit to
/// the φ = 0 contour at least `clearance` above the wall `y = wall`.
pub fn contact_angle(contour: &[[[f64; 2]; 2]], wall: f64, clearance: f64) -> Option<f64> {
    let points: Vec<[f64; 2]> = contour
        .iter()
        .map(|s| [0.5 * (s[0][0] + s[1][0]), 0.5 * (s[0][1] + s[1][1])])
        .filter(|p| p[1] >= wall + clearance)
        .collect();
    let (c, r) = fit_circle(&points)?;
    Some(((wall - c[1]) / r).clamp(-1.0, 1.0).acos().to_degrees())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use elastocap_core::fluid::FluidState;
    use elastocap_fem::{build_structured_mesh, Rect, Symmetry};

    #[test]
    fn circle_fit_recovers_an_arc() {
        let pts: Vec<[f64; 2]> = (0..40).map(|k| {
            let t = 0.1 + 1.2 * k as f64 / 39.0;
            [3.0 + 5.0 * t.cos(), -1.0 + 5.0 * t.sin()]
        }).collect();
        let (c, r) = fit_circle(&pts).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-10 && (c[1] + 1.0).abs() < 1e-10 && (r - 5.0).abs() < 1e-10);
    }

    #[test]
    fn contact_angle_of_exact_caps() {
        for theta in [60.0f64, 90.0, 96.24, 130.0] {
            let r = 10.0;
            let b = -r * theta.to_radians().cos();
            let seg: Vec<[[f64; 2]; 2]> = (0..200)
                .map(|k| {
                    let t = std::f64::consts::PI * k as f64 / 200.0;
                    let p = [r * t.cos(), b + r * t.sin()];
                    [p, p]
                })
                .filter(|s| s[0][1] > 0.0)
                .collect();
            let got = contact_angle(&seg, 0.0, 1.0).unwrap();
            assert!((got - theta).abs() < 1e-8, "{got} vs {theta}");
        }
    }

    fn spaces() -> Arc<FluidSpaces> {
        let m = build_structured_mesh(Rect::new(0.0, 4.0, 0.0, 2.0), (8, 4), &[]).unwrap();
        Arc::new(FluidSpaces::new(Arc::new(m), Symmetry::Planar).unwrap())
    }

    #[test]
    fn linear_fields_are_evaluated_exactly() {
        let s = spaces();
        let mut st = FluidState::zeros(&s);
        st.phi = s.phase.interpolate(|x| 0.5 * x[0] - x[1]);
        st.p = s.pressure.interpolate(|x| 2.0 + x[0] * x[1]);
        st.u = s.velocity.interpolate_vector(|x| [x[1], -x[0]]);
        let v = evaluate(&s, &st.nodal(&s), [1.3, 0.7]).unwrap();
        assert!((v.phi - (0.65 - 0.7)).abs() < 1e-13);
        assert!((v.p - (2.0 + 1.3 * 0.7)).abs() < 1e-13);
        assert!((v.u[0] - 0.7).abs() < 1e-13 && (v.u[1] + 1.3).abs() < 1e-13);
    }

    #[test]
    fn contour_and_contact_line_of_a_straight_interface() {
        let s = spaces();
        let phi = s.phase.interpolate(|x| 1.7 - x[0] + 0.1 * x[1]);
        let nodal = s.phase.expand_scalar(&phi);
        let segs = phase_contour(&s, &nodal, None);
        assert!(!segs.is_empty());
        for seg in &segs {
            for p in seg {
                assert!((1.7 - p[0] + 0.1 * p[1]).abs() < 1e-12);
            }
        }
        let x = contact_line_radius(&s, "bottom", &nodal, None).unwrap();
        assert!((x - 1.7).abs() < 1e-12);
        let line = interface_polyline(&s, "bottom", None).unwrap();
        assert_eq!(line.len(), 17);
        assert!(line.iter().all(|p| p[1] == 0.0) && line.windows(2).all(|w| w[0][0] < w[1][0]));
    }
}
