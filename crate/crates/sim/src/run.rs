//! Backward-Euler time loop with diagnostics, snapshots and checkpoints.

use std::f64::consts::SQRT_2;
use std::fs;
use std::path::{Path, PathBuf};

use elastocap_core::fluid::{free_energy, phase_total, FluidFrame, FluidState, Transient};
use elastocap_core::solid::{solid_volume_change, stored_energy, SolidState};
use elastocap_core::units::{pressure_to_pa, time_to_ms};

use crate::config::{Config, Substrate};
use crate::diagnostics::{contact_line_radius, evaluate, interface_polyline, phase_contour, wall_nodes};
use crate::error::{SimError, SimResult};
use crate::output::{
    append_record, read_record, snapshot_path, write_record, Checkpoint, NodalMesh, RecordRow, Snapshot, CHECKPOINT_FILE,
    RECORD_FILE,
};
use crate::scenario::{Model, RunState, Scenario, WALL};

/// Why a call to [`Simulation::run`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Finished,
    Steady,
    StepLimit,
}

pub struct Simulation {
    pub scenario: Scenario,
    pub state: RunState,
    pub record: Vec<RecordRow>,
    output: Option<PathBuf>,
}

impl Simulation {
    pub fn new(config: Config) -> SimResult<Self> {
        let scenario = Scenario::build(config)?;
        let state = scenario.initial_state()?;
        let mut sim = Self { scenario, state, record: Vec::new(), output: None };
        let row = sim.diagnostics(None, 0, 0)?;
        sim.record.push(row);
        Ok(sim)
    }

    /// Continues from a checkpoint written by an earlier run of the same configuration.
    pub fn resume(config: Config, checkpoint: &Path) -> SimResult<Self> {
        let scenario = Scenario::build(config)?;
        let cp = Checkpoint::read(checkpoint)?;
        let state = restore(&scenario, cp)?;
        let mut sim = Self { scenario, state, record: Vec::new(), output: None };
        let row = sim.diagnostics(None, 0, 0)?;
        sim.record.push(row);
        Ok(sim)
    }

    /// Writes record, checkpoints and snapshots below `dir`. Rows of an earlier
    /// run beyond the current step are discarded.
    pub fn attach_output(&mut self, dir: &Path) -> SimResult<()> {
        fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
        let record_path = dir.join(RECORD_FILE);
        if self.state.step > 0 && record_path.exists() {
            let mut rows = read_record(&record_path)?;
            rows.retain(|r| r.step <= self.state.step);
            if rows.last().map(|r| r.step) != Some(self.state.step) {
                rows.extend(self.record.iter().copied());
            }
            self.record = rows;
        }
        write_record(&record_path, &self.record)?;
        fs::write(dir.join("config.toml"), self.scenario.config.to_toml()).map_err(|e| SimError::io(dir, e))?;
        self.output = Some(dir.to_path_buf());
        if self.state.step == 0 {
            self.write_checkpoint()?;
            self.write_snapshot()?;
        }
        Ok(())
    }

    pub fn output_dir(&self) -> Option<&Path> {
        self.output.as_deref()
    }

    pub fn total_steps(&self) -> usize {
        self.scenario.config.total_steps()
    }

    /// Advances until `t_end`, steady state, or `max_steps` further steps.
    pub fn run(&mut self, max_steps: Option<usize>) -> SimResult<Outcome> {
        let mut taken = 0;
        let tol = self.scenario.derived.steady_tolerance;
        let outcome = loop {
            if self.state.step >= self.total_steps() {
                break Outcome::Finished;
            }
            if max_steps.is_some_and(|m| taken >= m) {
                break Outcome::StepLimit;
            }
            let row = self.step()?;
            taken += 1;
            if tol.is_some_and(|t| row.interface_change < t) {
                log::info!("steady state at step {} (interface change {:.3e} ε)", row.step, row.interface_change);
                break Outcome::Steady;
            }
        };
        if self.output.is_some() && self.last_snapshot_step() != Some(self.state.step) {
            self.write_snapshot()?;
        }
        Ok(outcome)
    }

    fn last_snapshot_step(&self) -> Option<usize> {
        let every = self.scenario.config.output.snapshot_every;
        (every > 0 && self.state.step % every == 0).then_some(self.state.step)
    }

    /// One accepted backward-Euler step; the state is unchanged on failure.
    pub fn step(&mut self) -> SimResult<RecordRow> {
        let dt = self.scenario.derived.dt;
        let step = self.state.step + 1;
        let mut next = self.state.clone();
        let fail = |source| SimError::Solver { step, source };
        let (subiterations, newton) = match &mut self.scenario.model {
            Model::Fluid(solver) => {
                let s = solver.spaces.clone();
                let tr = Transient::new(&s, &solver.params, &next.fluid, None, dt).map_err(fail)?;
                let frame = FluidFrame { transient: Some(&tr), ..Default::default() };
                let rep = solver.solve(&mut next.fluid, &frame, true).map_err(fail)?;
                (1, rep.iterations)
            }
            Model::Coupled(sys) => {
                sys.fluid_displacement = next.fluid_displacement.clone().expect("coupled state");
                let solid = next.solid.as_mut().expect("coupled state");
                let coupling = next.coupling.as_mut().expect("coupled state");
                let rep = sys.step(&mut next.fluid, solid, coupling, dt).map_err(fail)?;
                next.fluid_displacement = Some(sys.fluid_displacement.clone());
                (rep.subiterations, rep.fluid_iterations)
            }
        };
        next.step = step;
        next.time = step as f64 * dt;
        let change = self.interface_change(&self.state, &next)?;
        let previous = std::mem::replace(&mut self.state, next);
        let row = match self.diagnostics(Some(change), subiterations, newton) {
            Ok(r) => r,
            Err(e) => {
                self.state = previous;
                return Err(e);
            }
        };
        log::info!(
            "step {step}: t = {:.3} ms, E = {:.9e}, Δp = {:.2} Pa, {subiterations} subiterations, {newton} Newton iterations, change {:.2e} ε",
            row.time_ms,
            row.free_energy,
            row.pressure_probe,
            row.interface_change
        );
        self.record.push(row);
        if let Some(dir) = &self.output {
            append_record(&dir.join(RECORD_FILE), &row)?;
            self.write_checkpoint()?;
            if self.last_snapshot_step() == Some(step) {
                self.write_snapshot()?;
            }
        }
        Ok(row)
    }

    /// Largest motion of the wall or the diffuse interface over a step, in ε.
    fn interface_change(&self, old: &RunState, new: &RunState) -> SimResult<f64> {
        let eps = self.scenario.derived.fluid.epsilon;
        let dphi = old.fluid.phi.iter().zip(&new.fluid.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let mut change = SQRT_2 * dphi;
        if let (Some(a), Some(b)) = (&old.coupling, &new.coupling) {
            for (x, y) in a.interface_displacement.iter().zip(&b.interface_displacement) {
                change = change.max((x[0] - y[0]).hypot(x[1] - y[1]) / eps);
            }
        }
        Ok(change)
    }

    /// Record row of the current state.
    pub fn diagnostics(&self, change: Option<f64>, subiterations: usize, newton_iterations: usize) -> SimResult<RecordRow> {
        let sc = &self.scenario;
        let s = &sc.spaces;
        let st = &self.state;
        let disp = st.fluid_displacement.as_deref();
        let solver = sc.fluid_solver();
        let wrap = |e: elastocap_core::PhysicsError| SimError::Solver { step: st.step, source: e };
        let mut energy = free_energy(s, &solver.params, &solver.bcs, &st.fluid, disp).map_err(wrap)?.total();
        let total = phase_total(s, &st.fluid, disp).map_err(wrap)?;
        let nodal = st.fluid.nodal(s);
        let out = &sc.config.output;
        let fem = |e: elastocap_fem::FemError| wrap(e.into());
        let pd = evaluate(s, &nodal, out.droplet_probe).map_err(fem)?.p;
        let pa = evaluate(s, &nodal, out.ambient_probe).map_err(fem)?.p;
        let (mut radius, mut ridge, mut center, mut volume) = (f64::NAN, f64::NAN, f64::NAN, 0.0);
        if sc.config.geometry.substrate != Substrate::None {
            radius = contact_line_radius(s, WALL, &nodal.phi, disp).map_err(fem)?;
            ridge = 0.0;
            center = 0.0;
        }
        if let (Some(space), Some(solid), Some(d)) = (sc.solid_space(), &st.solid, disp) {
            let params = sc.derived.solid.expect("elastic substrate");
            energy += stored_energy(space, &params, &solid.displacement).map_err(wrap)?;
            volume = solid_volume_change(space, &solid.displacement).map_err(wrap)?
                / sc.solid_reference_volume().expect("elastic substrate");
            let nodes = wall_nodes(s, WALL).map_err(fem)?;
            ridge = nodes.iter().map(|&n| d[n as usize][1]).fold(f64::NEG_INFINITY, f64::max);
            center = d[nodes[0] as usize][1];
        }
        Ok(RecordRow {
            step: st.step,
            time_ms: time_to_ms(st.time),
            free_energy: energy,
            phase_total: total,
            pressure_probe: pressure_to_pa(pd - pa),
            contact_line_radius: radius,
            ridge_height: ridge,
            center_indentation: center,
            solid_volume_change: volume,
            subiterations,
            newton_iterations,
            interface_change: change.unwrap_or(f64::NAN),
        })
    }

    /// Relative drift of ∫φ from the initial state.
    pub fn phase_drift(&self) -> f64 {
        let last = self.record.last().expect("record has the initial row");
        (last.phase_total - self.state.phase_total0) / self.state.phase_total0.abs()
    }

    pub fn checkpoint(&self) -> Checkpoint {
        let st = &self.state;
        let (idisp, ivel, omega) = match &st.coupling {
            Some(c) => (c.interface_displacement.clone(), c.interface_velocity.clone(), c.omega),
            None => (Vec::new(), Vec::new(), 0.0),
        };
        Checkpoint {
            step: st.step,
            time: st.time,
            phase_total0: st.phase_total0,
            fluid: st.fluid.to_vector(),
            solid: st.solid.as_ref().map(|s| [s.displacement.clone(), s.previous.clone(), s.previous2.clone()]),
            interface_displacement: idisp,
            interface_velocity: ivel,
            omega,
            fluid_displacement: st.fluid_displacement.clone().unwrap_or_default(),
        }
    }

    fn write_checkpoint(&self) -> SimResult<()> {
        match &self.output {
            Some(dir) => self.checkpoint().write(&dir.join(CHECKPOINT_FILE)),
            None => Ok(()),
        }
    }

    fn write_snapshot(&self) -> SimResult<()> {
        let Some(dir) = &self.output else { return Ok(()) };
        let snap = self.snapshot()?;
        let path = snapshot_path(dir, self.state.step);
        snap.write(&path)?;
        if self.scenario.config.output.vtk {
            let vtk = path.with_extension("vtk");
            fs::write(&vtk, snap.to_vtk()).map_err(|e| SimError::io(&vtk, e))?;
        }
        Ok(())
    }

    pub fn snapshot(&self) -> SimResult<Snapshot> {
        let sc = &self.scenario;
        let s = &sc.spaces;
        let st = &self.state;
        let nodal = st.fluid.nodal(s);
        let n = s.phase.n_nodes();
        let zero = vec![[0.0; 2]; n];
        let disp = st.fluid_displacement.as_deref().unwrap_or(&zero);
        let cells = |space: &elastocap_fem::FunctionSpace| -> Vec<[u32; 9]> {
            (0..space.mesh().num_cells()).map(|c| space.cell_nodes(c).try_into().expect("biquadratic cells")).collect()
        };
        let mut pressure = vec![0.0; n];
        let q1 = elastocap_fem::basis::LagrangeQuad::new(1).map_err(SimError::setup)?;
        let (mut v, mut g) = ([0.0; 4], [[0.0; 2]; 4]);
        for c in 0..s.mesh.num_cells() {
            let pn = s.pressure.cell_nodes(c);
            for (k, &node) in s.phase.cell_nodes(c).iter().enumerate() {
                q1.eval([(k % 3) as f64 * 0.5, (k / 3) as f64 * 0.5], &mut v, &mut g);
                pressure[node as usize] = pressure_to_pa(pn.iter().zip(&v).map(|(&p, w)| w * nodal.p[p as usize]).sum());
            }
        }
        let solid = match (sc.solid_space(), &st.solid) {
            (Some(space), Some(state)) => Some(NodalMesh {
                position: space.space.node_positions().to_vec(),
                displacement: state.nodal(space),
                cells: cells(&space.space),
            }),
            _ => None,
        };
        let fem = |e: elastocap_fem::FemError| SimError::Format(e.to_string());
        Ok(Snapshot {
            step: st.step,
            time_ms: time_to_ms(st.time),
            symmetry: format!("{:?}", sc.symmetry).to_lowercase(),
            fluid: NodalMesh { position: s.phase.node_positions().to_vec(), displacement: disp.to_vec(), cells: cells(&s.phase) },
            velocity: nodal.u,
            pressure,
            phi: nodal.phi.clone(),
            mu: nodal.mu,
            solid,
            interface: interface_polyline(s, WALL, Some(disp)).map_err(fem)?,
            contour: phase_contour(s, &nodal.phi, Some(disp)),
        })
    }
}

fn restore(sc: &Scenario, cp: Checkpoint) -> SimResult<RunState> {
    let s = &sc.spaces;
    let bad = |what: &str| SimError::Format(format!("checkpoint does not match this configuration: {what}"));
    if cp.fluid.len() != s.n_dofs() {
        return Err(bad(&format!("{} fluid unknowns, expected {}", cp.fluid.len(), s.n_dofs())));
    }
    let fluid = FluidState::from_vector(s, &cp.fluid);
    let (solid, coupling, fluid_displacement) = match &sc.model {
        Model::Fluid(_) => {
            if cp.solid.is_some() {
                return Err(bad("substrate data present for a rigid or absent substrate"));
            }
            (None, None, None)
        }
        Model::Coupled(sys) => {
            let [displacement, previous, previous2] = cp.solid.ok_or_else(|| bad("no substrate data"))?;
            let n = sys.pair.solid.n_dofs();
            if [&displacement, &previous, &previous2].iter().any(|v| v.len() != n) {
                return Err(bad("substrate unknowns"));
            }
            if cp.interface_displacement.len() != sys.pair.nodes.len() || cp.interface_velocity.len() != sys.pair.nodes.len() {
                return Err(bad("interface nodes"));
            }
            if cp.fluid_displacement.len() != s.phase.n_nodes() {
                return Err(bad("fluid mesh nodes"));
            }
            let mut c = elastocap_core::coupling::CouplingState::new(&sys.pair, cp.omega);
            c.interface_displacement = cp.interface_displacement;
            c.interface_velocity = cp.interface_velocity;
            (Some(SolidState { displacement, previous, previous2 }), Some(c), Some(cp.fluid_displacement))
        }
    };
    Ok(RunState { step: cp.step, time: cp.time, fluid, solid, coupling, fluid_displacement, phase_total0: cp.phase_total0 })
}
