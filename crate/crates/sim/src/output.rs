//! Run record CSV, snapshots, checkpoints and VTK export.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use elastocap_fem::basis::LagrangeQuad;

use crate::error::{SimError, SimResult};

pub const RECORD_FILE: &str = "run_record.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const SNAPSHOT_DIR: &str = "snapshots";

const SNAPSHOT_MAGIC: &str = "elastocap-snapshot";
const CHECKPOINT_MAGIC: &str = "elastocap-checkpoint";
const FORMAT_VERSION: u32 = 1;

/// One line of the run record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordRow {
    pub step: usize,
    pub time_ms: f64,
    /// Kinetic + mixing + wall + stored elastic energy, fJ (per radian when axisymmetric).
    pub free_energy: f64,
    /// ∫φ, μm³ (per radian when axisymmetric).
    pub phase_total: f64,
    /// Droplet probe minus ambient probe, Pa.
    pub pressure_probe: f64,
    /// μm.
    pub contact_line_radius: f64,
    /// Largest upward interface displacement, μm.
    pub ridge_height: f64,
    /// Vertical interface displacement on the axis, μm.
    pub center_indentation: f64,
    /// Substrate volume change relative to the reference volume.
    pub solid_volume_change: f64,
    pub subiterations: usize,
    pub newton_iterations: usize,
    /// Interface motion over the step, in units of ε.
    pub interface_change: f64,
}

pub const RECORD_HEADER: &str = "step,time_ms,free_energy,phase_total,pressure_probe_pa,contact_line_radius_um,ridge_height_um,center_indentation_um,solid_volume_change,subiterations,newton_iterations,interface_change";

impl RecordRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.step,
            self.time_ms,
            self.free_energy,
            self.phase_total,
            self.pressure_probe,
            self.contact_line_radius,
            self.ridge_height,
            self.center_indentation,
            self.solid_volume_change,
            self.subiterations,
            self.newton_iterations,
            self.interface_change
        )
    }

    pub fn from_csv(line: &str) -> SimResult<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 12 {
            return Err(SimError::Format(format!("run record line has {} fields, expected 12", f.len())));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|e| SimError::Format(format!("run record field {k}: {e}")));
        let int = |k: usize| f[k].parse::<usize>().map_err(|e| SimError::Format(format!("run record field {k}: {e}")));
        Ok(Self {
            step: int(0)?,
            time_ms: num(1)?,
            free_energy: num(2)?,
            phase_total: num(3)?,
            pressure_probe: num(4)?,
            contact_line_radius: num(5)?,
            ridge_height: num(6)?,
            center_indentation: num(7)?,
            solid_volume_change: num(8)?,
            subiterations: int(9)?,
            newton_iterations: int(10)?,
            interface_change: num(11)?,
        })
    }
}

pub fn write_record(path: &Path, rows: &[RecordRow]) -> SimResult<()> {
    let mut text = String::from(RECORD_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&r.to_csv());
        text.push('\n');
    }
    write_atomic(path, &text)
}

pub fn append_record(path: &Path, row: &RecordRow) -> SimResult<()> {
    use std::io::Write;
    let mut f = fs::OpenOptions::new().append(true).open(path).map_err(|e| SimError::io(path, e))?;
    writeln!(f, "{}", row.to_csv()).map_err(|e| SimError::io(path, e))
}

pub fn read_record(path: &Path) -> SimResult<Vec<RecordRow>> {
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(RECORD_HEADER) {
        return Err(SimError::Format(format!("{} does not start with the run record header", path.display())));
    }
    lines.filter(|l| !l.trim().is_empty()).map(RecordRow::from_csv).collect()
}

fn write_atomic(path: &Path, text: &str) -> SimResult<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| SimError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| SimError::io(path, e))
}

pub fn snapshot_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(SNAPSHOT_DIR).join(format!("snapshot_{step:06}.txt"))
}

/// A mesh with nodal positions, displacements and biquadratic cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodalMesh {
    pub position: Vec<[f64; 2]>,
    pub displacement: Vec<[f64; 2]>,
    pub cells: Vec<[u32; 9]>,
}

impl NodalMesh {
    pub fn deformed(&self, n: usize) -> [f64; 2] {
        [self.position[n][0] + self.displacement[n][0], self.position[n][1] + self.displacement[n][1]]
    }
}

/// Self-describing state dump.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time_ms: f64,
    pub symmetry: String,
    pub fluid: NodalMesh,
    pub velocity: Vec<[f64; 2]>,
    /// Pa.
    pub pressure: Vec<f64>,
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
    pub solid: Option<NodalMesh>,
    /// Deformed fluid–solid interface, ordered along the wall.
    pub interface: Vec<[f64; 2]>,
    /// φ = 0 segments in the current configuration.
    pub contour: Vec<[[f64; 2]; 2]>,
}

/// Field selectable by the probe command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeField {
    Pressure,
    Phi,
    Velocity,
}

fn push_row(out: &mut String, vals: &[f64]) {
    for (k, v) in vals.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        write!(out, "{v:.16e}").unwrap();
    }
    out.push('\n');
}

fn write_cells(out: &mut String, cells: &[[u32; 9]]) {
    for c in cells {
        let line: Vec<String> = c.iter().map(|n| n.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

struct Reader<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
    what: &'a str,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str, what: &'a str) -> Self {
        Self { lines: text.lines().peekable(), what }
    }

    fn err(&self, msg: impl std::fmt::Display) -> SimError {
        SimError::Format(format!("malformed {}: {msg}", self.what))
    }

    fn line(&mut self) -> SimResult<&'a str> {
        self.lines.next().ok_or_else(|| self.err("unexpected end of file"))
    }

    /// A `key value...` line with the expected key.
    fn keyed(&mut self, key: &str) -> SimResult<Vec<&'a str>> {
        let line = self.line()?;
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`, found `{line}`")));
        }
        Ok(it.collect())
    }

    fn peek_key(&mut self) -> Option<&'a str> {
        self.lines.peek().and_then(|l| l.split_whitespace().next())
    }

    fn count(&mut self, key: &str, columns: usize) -> SimResult<usize> {
        let f = self.keyed(key)?;
        let n = f.first().and_then(|v| v.parse::<usize>().ok()).ok_or_else(|| self.err(format!("`{key}` needs a count")))?;
        if f.len() > 1 && f.len() - 1 != columns {
            return Err(self.err(format!("`{key}` lists {} columns, expected {columns}", f.len() - 1)));
        }
        Ok(n)
    }

    fn floats(&mut self, n: usize) -> SimResult<Vec<f64>> {
        let line = self.line()?;
        let v: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
        let v = v.map_err(|e| self.err(e))?;
        if v.len() != n {
            return Err(self.err(format!("row `{line}` has {} values, expected {n}", v.len())));
        }
        Ok(v)
    }

    fn cells(&mut self, n: usize) -> SimResult<Vec<[u32; 9]>> {
        (0..n)
            .map(|_| {
                let line = self.line()?;
                let v: Result<Vec<u32>, _> = line.split_whitespace().map(str::parse::<u32>).collect();
                let v = v.map_err(|e| self.err(e))?;
                v.try_into().map_err(|_| self.err("cell rows need 9 node indices"))
            })
            .collect()
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> SimResult<T>
    where
        T::Err: std::fmt::Display,
    {
        let f = self.keyed(key)?;
        let v = f.first().ok_or_else(|| self.err(format!("`{key}` needs a value")))?;
        v.parse::<T>().map_err(|e| self.err(format!("`{key}`: {e}")))
    }
}

fn check_cells(cells: &[[u32; 9]], nodes: usize, what: &str) -> SimResult<()> {
    if cells.iter().flatten().any(|&n| n as usize >= nodes) {
        return Err(SimError::Format(format!("{what} cell refers to a missing node")));
    }
    Ok(())
}

impl Snapshot {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{SNAPSHOT_MAGIC} {FORMAT_VERSION}").unwrap();
        writeln!(s, "step {}", self.step).unwrap();
        writeln!(s, "time_ms {:.16e}", self.time_ms).unwrap();
        writeln!(s, "symmetry {}", self.symmetry).unwrap();
        writeln!(s, "units length=um displacement=um velocity=m/s pressure=Pa").unwrap();
        let f = &self.fluid;
        writeln!(s, "fluid_nodes {} x y dx dy ux uy p phi mu", f.position.len()).unwrap();
        for n in 0..f.position.len() {
            let (x, d, u) = (f.position[n], f.displacement[n], self.velocity[n]);
            push_row(&mut s, &[x[0], x[1], d[0], d[1], u[0], u[1], self.pressure[n], self.phi[n], self.mu[n]]);
        }
        writeln!(s, "fluid_cells {} n0 n1 n2 n3 n4 n5 n6 n7 n8", f.cells.len()).unwrap();
        write_cells(&mut s, &f.cells);
        if let Some(m) = &self.solid {
            writeln!(s, "solid_nodes {} x y dx dy", m.position.len()).unwrap();
            for n in 0..m.position.len() {
                push_row(&mut s, &[m.position[n][0], m.position[n][1], m.displacement[n][0], m.displacement[n][1]]);
            }
            writeln!(s, "solid_cells {} n0 n1 n2 n3 n4 n5 n6 n7 n8", m.cells.len()).unwrap();
            write_cells(&mut s, &m.cells);
        }
        writeln!(s, "interface {} x y", self.interface.len()).unwrap();
        for p in &self.interface {
            push_row(&mut s, p);
        }
        writeln!(s, "contour {} x0 y0 x1 y1", self.contour.len()).unwrap();
        for seg in &self.contour {
            push_row(&mut s, &[seg[0][0], seg[0][1], seg[1][0], seg[1][1]]);
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> SimResult<Self> {
        let mut r = Reader::new(text, "snapshot");
        let version: u32 = r.scalar(SNAPSHOT_MAGIC)?;
        if version != FORMAT_VERSION {
            return Err(r.err(format!("unsupported version {version}")));
        }
        let mut snap = Snapshot { step: r.scalar("step")?, time_ms: r.scalar("time_ms")?, symmetry: r.scalar("symmetry")?, ..Default::default() };
        r.keyed("units")?;
        let n = r.count("fluid_nodes", 9)?;
        for _ in 0..n {
            let v = r.floats(9)?;
            snap.fluid.position.push([v[0], v[1]]);
            snap.fluid.displacement.push([v[2], v[3]]);
            snap.velocity.push([v[4], v[5]]);
            snap.pressure.push(v[6]);
            snap.phi.push(v[7]);
            snap.mu.push(v[8]);
        }
        let nc = r.count("fluid_cells", 9)?;
        snap.fluid.cells = r.cells(nc)?;
        check_cells(&snap.fluid.cells, n, "fluid")?;
        if r.peek_key() == Some("solid_nodes") {
            let n = r.count("solid_nodes", 4)?;
            let mut m = NodalMesh::default();
            for _ in 0..n {
                let v = r.floats(4)?;
                m.position.push([v[0], v[1]]);
                m.displacement.push([v[2], v[3]]);
            }
            let nc = r.count("solid_cells", 9)?;
            m.cells = r.cells(nc)?;
            check_cells(&m.cells, n, "solid")?;
            snap.solid = Some(m);
        }
        let n = r.count("interface", 2)?;
        for _ in 0..n {
            let v = r.floats(2)?;
            snap.interface.push([v[0], v[1]]);
        }
        let n = r.count("contour", 4)?;
        for _ in 0..n {
            let v = r.floats(4)?;
            snap.contour.push([[v[0], v[1]], [v[2], v[3]]]);
        }
        r.keyed("end")?;
        Ok(snap)
    }

    pub fn write(&self, path: &Path) -> SimResult<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
        }
        write_atomic(path, &self.to_text())
    }

    pub fn read(path: &Path) -> SimResult<Self> {
        Self::from_text(&fs::read_to_string(path).map_err(|e| SimError::io(path, e))?)
    }

    /// Cell and reference coordinates of a point of the current configuration.
    pub fn locate(&self, x: [f64; 2]) -> Option<(usize, [f64; 2])> {
        let basis = LagrangeQuad::new(2).expect("biquadratic basis");
        let (mut v, mut g) = ([0.0; 9], [[0.0; 2]; 9]);
        for (c, cell) in self.fluid.cells.iter().enumerate() {
            let coords: Vec<[f64; 2]> = cell.iter().map(|&n| self.fluid.deformed(n as usize)).collect();
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in &coords {
                for i in 0..2 {
                    lo[i] = lo[i].min(p[i]);
                    hi[i] = hi[i].max(p[i]);
                }
            }
            let pad = 1e-9 * ((hi[0] - lo[0]) + (hi[1] - lo[1]));
            if (0..2).any(|i| x[i] < lo[i] - pad || x[i] > hi[i] + pad) {
                continue;
            }
            let mut xi = [0.5, 0.5];
            for _ in 0..30 {
                basis.eval(xi, &mut v, &mut g);
                let (mut y, mut j) = ([0.0; 2], [[0.0; 2]; 2]);
                for a in 0..9 {
                    for i in 0..2 {
                        y[i] += v[a] * coords[a][i];
                        for k in 0..2 {
                            j[i][k] += g[a][k] * coords[a][i];
                        }
                    }
                }
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                let r = [x[0] - y[0], x[1] - y[1]];
                let d = [(j[1][1] * r[0] - j[0][1] * r[1]) / det, (-j[1][0] * r[0] + j[0][0] * r[1]) / det];
                xi = [xi[0] + d[0], xi[1] + d[1]];
                if !(d[0].abs() + d[1].abs() > 1e-14) {
                    break;
                }
            }
            let tol = 1e-9;
            if xi.iter().all(|&t| t >= -tol && t <= 1.0 + tol) {
                return Some((c, [xi[0].clamp(0.0, 1.0), xi[1].clamp(0.0, 1.0)]));
            }
        }
        None
    }

    /// Field value at a point of the current configuration.
    pub fn probe(&self, x: [f64; 2], field: ProbeField) -> Option<Vec<f64>> {
        let (c, xi) = self.locate(x)?;
        let basis = LagrangeQuad::new(2).expect("biquadratic basis");
        let (mut v, mut g) = ([0.0; 9], [[0.0; 2]; 9]);
        basis.eval(xi, &mut v, &mut g);
        let cell = &self.fluid.cells[c];
        let sum = |f: &dyn Fn(usize) -> f64| cell.iter().zip(&v).map(|(&n, w)| w * f(n as usize)).sum::<f64>();
        Some(match field {
            ProbeField::Pressure => vec![sum(&|n| self.pressure[n])],
            ProbeField::Phi => vec![sum(&|n| self.phi[n])],
            ProbeField::Velocity => vec![sum(&|n| self.velocity[n][0]), sum(&|n| self.velocity[n][1])],
        })
    }

    /// Legacy ASCII VTK of the deformed fluid (and substrate) meshes.
    pub fn to_vtk(&self) -> String {
        const ORDER: [usize; 9] = [0, 2, 8, 6, 1, 5, 7, 3, 4];
        let f = &self.fluid;
        let solid = self.solid.clone().unwrap_or_default();
        let nf = f.position.len();
        let np = nf + solid.position.len();
        let cells: Vec<[u32; 9]> =
            f.cells.iter().copied().chain(solid.cells.iter().map(|c| c.map(|n| n + nf as u32))).collect();
        let mut s = String::new();
        writeln!(s, "# vtk DataFile Version 3.0\nelastocap step {} t = {} ms\nASCII\nDATASET UNSTRUCTURED_GRID", self.step, self.time_ms).unwrap();
        writeln!(s, "POINTS {np} double").unwrap();
        for n in 0..nf {
            let x = f.deformed(n);
            writeln!(s, "{:.16e} {:.16e} 0", x[0], x[1]).unwrap();
        }
        for n in 0..solid.position.len() {
            let x = solid.deformed(n);
            writeln!(s, "{:.16e} {:.16e} 0", x[0], x[1]).unwrap();
        }
        writeln!(s, "CELLS {} {}", cells.len(), 10 * cells.len()).unwrap();
        for c in &cells {
            let ids: Vec<String> = ORDER.iter().map(|&k| c[k].to_string()).collect();
            writeln!(s, "9 {}", ids.join(" ")).unwrap();
        }
        writeln!(s, "CELL_TYPES {}", cells.len()).unwrap();
        for _ in &cells {
            s.push_str("28\n");
        }
        writeln!(s, "POINT_DATA {np}").unwrap();
        let scalar = |s: &mut String, name: &str, vals: &[f64]| {
            writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
            for v in vals.iter().chain(std::iter::repeat(&0.0).take(np - nf)) {
                writeln!(s, "{v:.16e}").unwrap();
            }
        };
        scalar(&mut s, "pressure", &self.pressure);
        scalar(&mut s, "phi", &self.phi);
        scalar(&mut s, "mu", &self.mu);
        writeln!(s, "VECTORS velocity double").unwrap();
        for u in self.velocity.iter().chain(std::iter::repeat(&[0.0; 2]).take(np - nf)) {
            writeln!(s, "{:.16e} {:.16e} 0", u[0], u[1]).unwrap();
        }
        writeln!(s, "VECTORS displacement double").unwrap();
        for d in f.displacement.iter().chain(&solid.displacement) {
            writeln!(s, "{:.16e} {:.16e} 0", d[0], d[1]).unwrap();
        }
        s
    }
}

/// Exact text state of an accepted step.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: usize,
    pub time: f64,
    pub phase_total0: f64,
    pub fluid: Vec<f64>,
    pub solid: Option<[Vec<f64>; 3]>,
    pub interface_displacement: Vec<[f64; 2]>,
    pub interface_velocity: Vec<[f64; 2]>,
    pub omega: f64,
    pub fluid_displacement: Vec<[f64; 2]>,
}

fn write_vec(s: &mut String, key: &str, v: &[f64]) {
    writeln!(s, "{key} {}", v.len()).unwrap();
    for x in v {
        writeln!(s, "{x:e}").unwrap();
    }
}

fn write_pairs(s: &mut String, key: &str, v: &[[f64; 2]]) {
    writeln!(s, "{key} {}", v.len()).unwrap();
    for x in v {
        writeln!(s, "{:e} {:e}", x[0], x[1]).unwrap();
    }
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{CHECKPOINT_MAGIC} {FORMAT_VERSION}").unwrap();
        writeln!(s, "step {}", self.step).unwrap();
        writeln!(s, "time {:e}", self.time).unwrap();
        writeln!(s, "phase_total0 {:e}", self.phase_total0).unwrap();
        writeln!(s, "omega {:e}", self.omega).unwrap();
        write_vec(&mut s, "fluid", &self.fluid);
        if let Some([a, b, c]) = &self.solid {
            write_vec(&mut s, "solid_displacement", a);
            write_vec(&mut s, "solid_previous", b);
            write_vec(&mut s, "solid_previous2", c);
        }
        write_pairs(&mut s, "interface_displacement", &self.interface_displacement);
        write_pairs(&mut s, "interface_velocity", &self.interface_velocity);
        write_pairs(&mut s, "fluid_displacement", &self.fluid_displacement);
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> SimResult<Self> {
        let mut r = Reader::new(text, "checkpoint");
        let version: u32 = r.scalar(CHECKPOINT_MAGIC)?;
        if version != FORMAT_VERSION {
            return Err(r.err(format!("unsupported version {version}")));
        }
        let step = r.scalar("step")?;
        let time = r.scalar("time")?;
        let phase_total0 = r.scalar("phase_total0")?;
        let omega = r.scalar("omega")?;
        let vec = |r: &mut Reader, key: &str| -> SimResult<Vec<f64>> {
            let n = r.count(key, 0)?;
            (0..n).map(|_| Ok(r.floats(1)?[0])).collect()
        };
        let fluid = vec(&mut r, "fluid")?;
        let solid = if r.peek_key() == Some("solid_displacement") {
            Some([vec(&mut r, "solid_displacement")?, vec(&mut r, "solid_previous")?, vec(&mut r, "solid_previous2")?])
        } else {
            None
        };
        let pairs = |r: &mut Reader, key: &str| -> SimResult<Vec<[f64; 2]>> {
            let n = r.count(key, 0)?;
            (0..n).map(|_| r.floats(2).map(|v| [v[0], v[1]])).collect()
        };
        let interface_displacement = pairs(&mut r, "interface_displacement")?;
        let interface_velocity = pairs(&mut r, "interface_velocity")?;
        let fluid_displacement = pairs(&mut r, "fluid_displacement")?;
        r.keyed("end")?;
        Ok(Self { step, time, phase_total0, fluid, solid, interface_displacement, interface_velocity, omega, fluid_displacement })
    }

    pub fn write(&self, path: &Path) -> SimResult<()> {
        write_atomic(path, &self.to_text())
    }

    pub fn read(path: &Path) -> SimResult<Self> {
        Self::from_text(&fs::read_to_string(path).map_err(|e| SimError::io(path, e))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: usize) -> RecordRow {
        RecordRow {
            step,
            time_ms: 0.5 * step as f64,
            free_energy: 1.0 / 3.0,
            phase_total: -12345.678901234567,
            pressure_probe: 517.25,
            contact_line_radius: f64::NAN,
            ridge_height: 1e-300,
            center_indentation: -0.25,
            solid_volume_change: 0.0,
            subiterations: 7,
            newton_iterations: 30,
            interface_change: 2.5e-5,
        }
    }

    #[test]
    fn record_lines_round_trip_exactly() {
        let r = row(3);
        let back = RecordRow::from_csv(&r.to_csv()).unwrap();
        assert!(back.contact_line_radius.is_nan());
        assert_eq!(RecordRow { contact_line_radius: 0.0, ..back }, RecordRow { contact_line_radius: 0.0, ..r });
        assert_eq!(RECORD_HEADER.split(',').count(), 12);
        assert!(RecordRow::from_csv("1,2,3").is_err());
    }

    fn square_snapshot() -> Snapshot {
        let mut snap = Snapshot { step: 4, time_ms: 2.0, symmetry: "planar".into(), ..Default::default() };
        for k in 0..9 {
            let x = [(k % 3) as f64, (k / 3) as f64];
            snap.fluid.position.push(x);
            snap.fluid.displacement.push([0.1 * x[1], 0.0]);
            let y = [x[0] + 0.1 * x[1], x[1]];
            snap.velocity.push([y[1], -y[0]]);
            snap.pressure.push(3.0 + y[0] - 2.0 * y[1]);
            snap.phi.push(y[0] * y[1]);
            snap.mu.push(0.0);
        }
        snap.fluid.cells.push([0, 1, 2, 3, 4, 5, 6, 7, 8]);
        snap.interface = vec![[0.0, 0.0], [2.0, 0.0]];
        snap.contour = vec![[[0.0, 0.0], [1.0, 1.0]]];
        snap
    }

    #[test]
    fn snapshot_text_round_trip() {
        let mut snap = square_snapshot();
        snap.solid = Some(NodalMesh { position: snap.fluid.position.clone(), displacement: snap.fluid.displacement.clone(), cells: snap.fluid.cells.clone() });
        let back = Snapshot::from_text(&snap.to_text()).unwrap();
        assert_eq!(back, snap);
        assert!(Snapshot::from_text(&snap.to_text().replace("fluid_cells 1", "fluid_cells 2")).is_err());
    }

    #[test]
    fn probe_interpolates_on_the_deformed_cell() {
        let snap = square_snapshot();
        let p = snap.probe([1.2, 0.5], ProbeField::Pressure).unwrap()[0];
        assert!((p - (3.0 + 1.2 - 1.0)).abs() < 1e-12);
        let u = snap.probe([1.2, 0.5], ProbeField::Velocity).unwrap();
        assert!((u[0] - 0.5).abs() < 1e-12 && (u[1] + 1.2).abs() < 1e-12);
        let phi = snap.probe([1.2, 0.5], ProbeField::Phi).unwrap()[0];
        assert!((phi - 0.6).abs() < 1e-12);
        assert!(snap.probe([0.05, 1.9], ProbeField::Pressure).is_none());
    }

    #[test]
    fn checkpoint_text_round_trip_is_bit_exact() {
        let c = Checkpoint {
            step: 9,
            time: 4500.0,
            phase_total0: std::f64::consts::PI * 1e5,
            fluid: vec![0.1, -2.0 / 3.0, 1e-310, 5e300],
            solid: Some([vec![1.0 / 7.0], vec![0.0], vec![-0.0]]),
            interface_displacement: vec![[1e-17, 2.0]],
            interface_velocity: vec![[3.0, f64::MIN_POSITIVE]],
            omega: 0.37,
            fluid_displacement: vec![[0.0, 0.0], [1.0 / 3.0, 2.0 / 3.0]],
        };
        let back = Checkpoint::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.solid.as_ref().unwrap()[2][0].to_bits(), (-0.0f64).to_bits());
    }

    #[test]
    fn vtk_lists_every_point_and_cell() {
        let vtk = square_snapshot().to_vtk();
        assert!(vtk.contains("POINTS 9 double") && vtk.contains("CELLS 1 10") && vtk.contains("\n28\n"));
        assert!(vtk.contains("9 0 2 8 6 1 5 7 3 4"));
    }
}
