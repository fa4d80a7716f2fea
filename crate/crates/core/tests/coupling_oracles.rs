use std::collections::BTreeMap;
use std::sync::Arc;

use elastocap_core::coupling::{
    kinematic_bc, lift_interface_function, mesh_velocity, weak_fluid_traction, CoupledSystem, CouplingSettings,
    CouplingState, HarmonicExtension, Lifting, MeshPair,
};
use elastocap_core::fluid::{
    FluidBcs, FluidFrame, FluidSolver, FluidSpaces, FluidState, PhaseBc, PotentialBc, Transient, VelocityBc,
    VelocityData,
};
use elastocap_core::solid::{SolidBcs, SolidDirichlet, SolidSolver, SolidSpace, SolidState};
use elastocap_core::{FluidParams, PhysicsError, SolidParams};
use elastocap_fem::sparse::norm_inf;
use elastocap_fem::{QuadtreeBuilder, Rect, Symmetry};

fn fluid_params() -> FluidParams {
    FluidParams { rho1: 1.0, rho2: 0.5, nu1: 1.0, nu2: 0.5, sigma: 1.0, sigma1: 1.1, sigma2: 0.8, epsilon: 0.15, gamma: 0.05 }
}

fn pair(sym: Symmetry, refine_band: bool) -> MeshPair {
    let mut up = QuadtreeBuilder::new(Rect::new(0.0, 2.0, 0.0, 1.5), (4, 3)).unwrap();
    let mut low = QuadtreeBuilder::new(Rect::new(0.0, 2.0, -0.5, 0.0), (4, 1)).unwrap();
    if refine_band {
        up.refine_where(|r, l| l < 1 && r.y0 < 0.5 && r.x0 < 1.0).unwrap();
    }
    QuadtreeBuilder::match_shared_edge(&mut up, &mut low).unwrap();
    let fluid = Arc::new(FluidSpaces::new(Arc::new(up.build()), sym).unwrap());
    let solid = Arc::new(SolidSpace::new(Arc::new(low.build()), sym).unwrap());
    MeshPair::new(fluid, solid, "bottom", "top").unwrap()
}

fn fluid_bcs() -> FluidBcs {
    let mut b = FluidBcs::default();
    b.set("bottom", VelocityBc::no_slip(), PhaseBc::Wetting, PotentialBc::NoFlux);
    b.set("left", VelocityBc::slip(0), PhaseBc::Neutral, PotentialBc::NoFlux);
    b.set("right", VelocityBc::no_slip(), PhaseBc::Neutral, PotentialBc::NoFlux);
    b.set("top", VelocityBc::Open, PhaseBc::Neutral, PotentialBc::NoFlux);
    b
}

fn solid_bcs(clamp_interface: bool) -> SolidBcs {
    let mut b = SolidBcs { interface_tag: Some("top".into()), ..SolidBcs::default() };
    b.dirichlet.insert("bottom".into(), SolidDirichlet::clamped());
    b.dirichlet.insert("right".into(), SolidDirichlet::clamped());
    b.dirichlet.insert("left".into(), SolidDirichlet::roller(0));
    if clamp_interface {
        b.interface_tag = None;
        b.dirichlet.insert("top".into(), SolidDirichlet::clamped());
    }
    b
}

fn droplet(s: &FluidSpaces, eps: f64) -> FluidState {
    let mut st = FluidState::zeros(s);
    st.phi = s.phase.interpolate(|x| (-((x[0] * x[0] + (x[1] + 0.1).powi(2)).sqrt() - 0.8) / (2f64.sqrt() * eps)).tanh());
    st
}

#[test]
fn zero_trace_gives_zero_extension() {
    let p = pair(Symmetry::Planar, true);
    let ext = HarmonicExtension::new(p.fluid.phase.clone(), "bottom", &["left"]).unwrap();
    let d = ext.extend(&BTreeMap::new()).unwrap();
    assert!(d.iter().all(|v| v[0] == 0.0 && v[1] == 0.0));
}

#[test]
fn extension_reproduces_compatible_affine_motion() {
    let p = pair(Symmetry::Planar, true);
    let ext = HarmonicExtension::new(p.fluid.phase.clone(), "bottom", &["left", "right"]).unwrap();
    let c = 0.02;
    let trace: Vec<[f64; 2]> = p.nodes.iter().map(|_| [0.0, c * 1.5]).collect();
    let d = ext.extend(&p.fluid_trace(&trace)).unwrap();
    for (x, v) in p.fluid.phase.node_positions().iter().zip(&d) {
        assert!(v[0].abs() < 1e-13 && (v[1] - c * (1.5 - x[1])).abs() < 1e-13, "{x:?}: {v:?}");
    }
}

#[test]
fn bump_extension_obeys_maximum_principle() {
    let p = pair(Symmetry::Planar, false);
    let ext = HarmonicExtension::new(p.fluid.phase.clone(), "bottom", &[]).unwrap();
    let a = 0.05;
    let trace: Vec<[f64; 2]> = p
        .nodes
        .iter()
        .map(|n| {
            let x = p.fluid.phase.node_position(n.fluid_node as usize)[0];
            let b = a * (std::f64::consts::PI * x / 2.0).sin().powi(2);
            [b, b]
        })
        .collect();
    let d = ext.extend(&p.fluid_trace(&trace)).unwrap();
    let mx = d.iter().map(|v| v[0].max(v[1])).fold(f64::MIN, f64::max);
    let mn = d.iter().map(|v| v[0].min(v[1])).fold(f64::MAX, f64::min);
    assert!(mx <= a + 1e-12 && mn >= -1e-12, "range [{mn:e}, {mx:e}]");
}

#[test]
fn folded_mesh_is_reported() {
    let p = pair(Symmetry::Planar, false);
    let ext = HarmonicExtension::new(p.fluid.phase.clone(), "bottom", &[]).unwrap();
    let trace: Vec<[f64; 2]> = p
        .nodes
        .iter()
        .map(|n| if p.fluid.phase.node_position(n.fluid_node as usize)[0] == 1.0 { [0.0, 3.0] } else { [0.0; 2] })
        .collect();
    let err = ext.extend(&p.fluid_trace(&trace)).unwrap_err();
    assert!(matches!(err, PhysicsError::MeshTangling { .. }), "{err}");
}

#[test]
fn translation_gives_uniform_mesh_velocity() {
    let old = vec![[0.1, -0.2]; 7];
    let new: Vec<[f64; 2]> = old.iter().map(|v| [v[0] + 0.3 * 0.5, v[1] - 0.1 * 0.5]).collect();
    for w in mesh_velocity(&new, &old, 0.5) {
        assert!((w[0] - 0.3).abs() < 1e-15 && (w[1] + 0.1).abs() < 1e-15);
    }
    assert!(mesh_velocity(&old, &old, 0.5).iter().all(|w| w == &[0.0, 0.0]));
}

#[test]
fn static_solid_gives_wall_condition_and_translation_is_recovered() {
    let p = pair(Symmetry::Planar, false);
    let z = vec![[0.0; 2]; p.nodes.len()];
    let VelocityData::Nodal(m) = kinematic_bc(&p, &z, &z, 0.1) else { unreachable!() };
    assert!(m.values().all(|v| v == &[0.0, 0.0]));
    let moved: Vec<[f64; 2]> = z.iter().map(|_| [0.02, 0.01]).collect();
    let VelocityData::Nodal(m) = kinematic_bc(&p, &moved, &z, 0.1) else { unreachable!() };
    assert!(m.values().all(|v| (v[0] - 0.2).abs() < 1e-15 && (v[1] - 0.1).abs() < 1e-15));
}

#[test]
fn liftings_vanish_off_the_interface() {
    let p = pair(Symmetry::Planar, true);
    let x: Vec<[f64; 2]> = (0..p.nodes.len()).map(|k| [1.0 + k as f64, -0.5 * k as f64]).collect();
    for lifting in [Lifting::OneLayer, Lifting::TwoLayer] {
        let l = lift_interface_function(&p, &x, lifting).unwrap();
        let fs = &p.fluid;
        for tag in ["left", "right", "top"] {
            for d in fs.phase.boundary_dofs(tag).unwrap() {
                let node = fs.phase.free_node(d) as u32;
                if p.nodes.iter().any(|n| n.fluid_node == node) {
                    continue;
                }
                assert_eq!(l[fs.u_offset(0) + d], 0.0);
                assert_eq!(l[fs.u_offset(1) + d], 0.0);
            }
        }
        for (k, n) in p.nodes.iter().enumerate() {
            assert_eq!(l[fs.u_offset(0) + n.fluid_dof], x[k][0]);
        }
    }
}

#[test]
fn quiescent_pressure_gives_pressure_functional_and_matches_neumann_load() {
    let p = pair(Symmetry::Axisymmetric, true);
    let fs = p.fluid.clone();
    let params = fluid_params();
    let solver = FluidSolver::new(fs.clone(), params, fluid_bcs()).unwrap();
    let c = 0.37;
    let mut state = FluidState::zeros(&fs);
    state.phi = vec![1.0; fs.n2()];
    state.p = vec![c; fs.n1()];
    let zero = weak_fluid_traction(&solver, &FluidState { p: vec![0.0; fs.n1()], ..state.clone() }, &FluidFrame::default(), &p, Lifting::OneLayer).unwrap();
    assert!(norm_inf(&zero) < 1e-14);
    let load = weak_fluid_traction(&solver, &state, &FluidFrame::default(), &p, Lifting::OneLayer).unwrap();

    let mut neumann = SolidBcs::default();
    neumann.dirichlet = solid_bcs(false).dirichlet;
    neumann.neumann.insert("top".into(), Arc::new(move |_| [0.0, -c]));
    let sp = SolidParams::from_young_poisson(3.0, 0.3, 0.0).unwrap();
    let ns = SolidSolver::new(p.solid.clone(), sp, neumann).unwrap();
    let expect = ns.residual(&SolidState::zeros(&p.solid), None, None, None).unwrap();
    // Constrained solid dofs (the clamped corner) carry reactions, not loads.
    let cons = ns.constraints().unwrap();
    let diff: Vec<f64> =
        load.iter().zip(&expect).enumerate().map(|(k, (a, b))| if cons.contains_key(&k) { 0.0 } else { a - b }).collect();
    assert!(norm_inf(&diff) < 1e-10 * norm_inf(&expect), "{:e}", norm_inf(&diff));

    let mut s1 = SolidSolver::new(p.solid.clone(), sp, solid_bcs(false)).unwrap();
    let mut s2 = SolidSolver::new(p.solid.clone(), sp, ns.bcs.clone()).unwrap();
    s1.quasi_static = true;
    s2.quasi_static = true;
    let (mut a, mut b) = (SolidState::zeros(&p.solid), SolidState::zeros(&p.solid));
    s1.solve(&mut a, None, Some(&load), None).unwrap();
    s2.solve(&mut b, None, None, None).unwrap();
    let diff: Vec<f64> = a.displacement.iter().zip(&b.displacement).map(|(x, y)| x - y).collect();
    assert!(norm_inf(&diff) < 1e-9 * norm_inf(&b.displacement));
}

#[test]
fn liftings_agree_on_a_converged_state() {
    let p = pair(Symmetry::Axisymmetric, true);
    let fs = p.fluid.clone();
    let params = fluid_params();
    let mut solver = FluidSolver::new(fs.clone(), params, fluid_bcs()).unwrap();
    let mut state = droplet(&fs, params.epsilon);
    solver.project_potential(&mut state, &FluidFrame::default()).unwrap();
    let transient = Transient::new(&fs, &params, &state, None, 0.05).unwrap();
    let frame = FluidFrame { transient: Some(&transient), ..FluidFrame::default() };
    solver.settings.tolerance = 1e-12;
    solver.solve(&mut state, &frame, true).unwrap();
    let one = weak_fluid_traction(&solver, &state, &frame, &p, Lifting::OneLayer).unwrap();
    let two = weak_fluid_traction(&solver, &state, &frame, &p, Lifting::TwoLayer).unwrap();
    let diff: Vec<f64> = one.iter().zip(&two).map(|(a, b)| a - b).collect();
    assert!(norm_inf(&diff) < 1e-8 * norm_inf(&one), "{:e} of {:e}", norm_inf(&diff), norm_inf(&one));
}

fn coupled(settings: CouplingSettings) -> (CoupledSystem, FluidState, SolidState, CouplingState) {
    let p = pair(Symmetry::Axisymmetric, true);
    let fs = p.fluid.clone();
    let params = fluid_params();
    let fluid = FluidSolver::new(fs.clone(), params, fluid_bcs()).unwrap();
    let sp = SolidParams::from_young_poisson(40.0, 0.45, 0.5).unwrap();
    let solid = SolidSolver::new(p.solid.clone(), sp, solid_bcs(false)).unwrap();
    let ext = HarmonicExtension::new(fs.phase.clone(), "bottom", &["left"]).unwrap();
    let mut state = droplet(&fs, params.epsilon);
    fluid.project_potential(&mut state, &FluidFrame::default()).unwrap();
    let cs = CouplingState::new(&p, settings.omega);
    let ss = SolidState::zeros(&p.solid);
    (CoupledSystem::new(p, fluid, solid, ext, settings).unwrap(), state, ss, cs)
}

#[test]
fn clamped_interface_is_not_a_coupling_interface() {
    let p = pair(Symmetry::Axisymmetric, false);
    let fs = p.fluid.clone();
    let fluid = FluidSolver::new(fs.clone(), fluid_params(), fluid_bcs()).unwrap();
    let sp = SolidParams::from_young_poisson(4.0, 0.3, 0.0).unwrap();
    let solid = SolidSolver::new(p.solid.clone(), sp, solid_bcs(true)).unwrap();
    let ext = HarmonicExtension::new(fs.phase.clone(), "bottom", &["left"]).unwrap();
    assert!(CoupledSystem::new(p, fluid, solid, ext, CouplingSettings::default()).is_err());
}

#[test]
fn stiff_substrate_converges_immediately() {
    let p = pair(Symmetry::Axisymmetric, true);
    let fs = p.fluid.clone();
    let params = fluid_params();
    let fluid = FluidSolver::new(fs.clone(), params, fluid_bcs()).unwrap();
    let sp = SolidParams::from_young_poisson(1e14, 0.3, 0.0).unwrap();
    let solid = SolidSolver::new(p.solid.clone(), sp, solid_bcs(false)).unwrap();
    let ext = HarmonicExtension::new(fs.phase.clone(), "bottom", &["left"]).unwrap();
    let mut state = droplet(&fs, params.epsilon);
    fluid.project_potential(&mut state, &FluidFrame::default()).unwrap();
    let mut cs = CouplingState::new(&p, 0.5);
    let mut ss = SolidState::zeros(&p.solid);
    let mut sys = CoupledSystem::new(p, fluid, solid, ext, CouplingSettings::default()).unwrap();
    let rep = sys.step(&mut state, &mut ss, &mut cs, 0.05).unwrap();
    assert_eq!(rep.subiterations, 1, "{:?}", rep.history);
}

#[test]
fn soft_step_converges_with_consistent_interface_motion() {
    for aitken in [false, true] {
        let settings = CouplingSettings { aitken, ..CouplingSettings::default() };
        let (mut sys, mut fluid, mut solid, mut cs) = coupled(settings);
        let dt = 0.05;
        let mut counts = Vec::new();
        for _ in 0..2 {
            let rep = sys.step(&mut fluid, &mut solid, &mut cs, dt).unwrap();
            counts.push(rep.subiterations);
        }
        println!("aitken={aitken}: subiterations {counts:?}");
        let moved = cs.interface_displacement.iter().map(|v| v[1].abs()).fold(0.0, f64::max);
        assert!(moved > 1e-6, "interface did not move");
        // Interface fluid velocity equals the mesh velocity there.
        let fs = sys.pair.fluid.clone();
        let u = fs.velocity.expand_vector(&fluid.u);
        for (k, n) in sys.pair.nodes.iter().enumerate() {
            let v = cs.interface_velocity[k];
            let un = u[n.fluid_node as usize];
            assert!((un[0] - v[0]).abs() < 1e-6 * moved / dt && (un[1] - v[1]).abs() < 1e-6 * moved / dt);
        }
    }
}
