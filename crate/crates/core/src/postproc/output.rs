//! Series (CSV) and field (legacy VTK) writers.
//!
//! Series CSV columns, one row per converged increment:
//! `increment,cycle,t,F,control,CTOD,CMOD,CMSD,a,max_phi,dissipated_energy`.
//!
//! Field files are legacy VTK, ASCII, `DATASET UNSTRUCTURED_GRID`:
//!
//! ```text
//! # vtk DataFile Version 3.0
//! <title line>
//! ASCII
//! DATASET UNSTRUCTURED_GRID
//! POINTS <n> double          n lines of x y z
//! CELLS <m> <m + Σ nodes>    m lines of k i_1 .. i_k
//! CELL_TYPES <m>             m lines (5 tri3, 9 quad4, 10 tet4)
//! POINT_DATA <n>
//! SCALARS phi double 1
//! LOOKUP_TABLE default       n values
//! VECTORS u double           n lines of ux uy uz
//! CELL_DATA <m>
//! SCALARS H double 1         then alpha_bar and f, each:
//! LOOKUP_TABLE default       m element means over quadrature points
//! ```
//!
//! Reals are written in Rust's shortest round-trip exponent form, so equal
//! fields give byte-identical files.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::assembly::Discretization;
use crate::error::{Error, Result};
use crate::postproc::fatigue::csv_err;
use crate::solver::{Fields, Observer, RunLog, StepRecord};

pub const SERIES_COLUMNS: [&str; 11] = [
    "increment",
    "cycle",
    "t",
    "F",
    "control",
    "CTOD",
    "CMOD",
    "CMSD",
    "a",
    "max_phi",
    "dissipated_energy",
];

#[derive(Serialize)]
struct Row {
    increment: usize,
    cycle: usize,
    t: f64,
    #[serde(rename = "F")]
    force: f64,
    control: f64,
    #[serde(rename = "CTOD")]
    ctod: f64,
    #[serde(rename = "CMOD")]
    cmod: f64,
    #[serde(rename = "CMSD")]
    cmsd: f64,
    a: f64,
    max_phi: f64,
    dissipated_energy: f64,
}

impl From<&StepRecord> for Row {
    fn from(r: &StepRecord) -> Self {
        Row {
            increment: r.increment,
            cycle: r.cycle,
            t: r.t,
            force: r.force,
            control: r.control,
            ctod: r.ctod,
            cmod: r.cmod,
            cmsd: r.cmsd,
            a: r.crack_length,
            max_phi: r.max_phi,
            dissipated_energy: r.dissipated_energy,
        }
    }
}

/// Streams the series CSV; rows are flushed at the end of every cycle.
pub struct SeriesWriter<W: Write> {
    inner: csv::Writer<W>,
    path: PathBuf,
}

impl SeriesWriter<File> {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        SeriesWriter::new(file, path)
    }
}

impl<W: Write> SeriesWriter<W> {
    pub fn new(sink: W, path: &Path) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
        inner.write_record(SERIES_COLUMNS).map_err(csv_err)?;
        Ok(SeriesWriter {
            inner,
            path: path.to_path_buf(),
        })
    }

    pub fn push(&mut self, r: &StepRecord) -> Result<()> {
        self.inner.serialize(Row::from(r)).map_err(csv_err)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }

    pub fn into_inner(self) -> Result<W> {
        let path = self.path;
        self.inner
            .into_inner()
            .map_err(|e| Error::io(&path, std::io::Error::other(e.to_string())))
    }
}

impl<W: Write> Observer for SeriesWriter<W> {
    fn step(&mut self, record: &StepRecord, _: &Fields) -> Result<()> {
        self.push(record)
    }

    fn cycle_end(&mut self, _: usize) -> Result<()> {
        self.flush()
    }
}

pub fn series_csv(log: &RunLog) -> Result<String> {
    let mut w = SeriesWriter::new(Vec::new(), Path::new("<memory>"))?;
    for r in &log.records {
        w.push(r)?;
    }
    let bytes = w.into_inner()?;
    String::from_utf8(bytes).map_err(|e| Error::Postproc(e.to_string()))
}

pub fn write_series_csv(log: &RunLog, path: &Path) -> Result<()> {
    std::fs::write(path, series_csv(log)?).map_err(|e| Error::io(path, e))
}

/// Legacy VTK text of the fields at one output step.
pub fn vtk_string(disc: &Discretization, fields: &Fields, step: usize) -> String {
    let mesh = &disc.mesh;
    let n = mesh.num_nodes();
    let m = mesh.num_elements();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "pfczm fields, increment {step}");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {n} double");
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:e} {:e} {:e}", p[0], p[1], p[2]);
    }
    let size: usize = mesh.elements.iter().map(|e| e.nodes.len() + 1).sum();
    let _ = writeln!(s, "CELLS {m} {size}");
    for el in &mesh.elements {
        let _ = write!(s, "{}", el.nodes.len());
        for a in &el.nodes {
            let _ = write!(s, " {a}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for el in &mesh.elements {
        let _ = writeln!(s, "{}", el.kind.vtk_cell_type());
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    let _ = writeln!(s, "SCALARS phi double 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for v in fields.phi {
        let _ = writeln!(s, "{v:e}");
    }
    let _ = writeln!(s, "VECTORS u double");
    let d = disc.ndof;
    for a in 0..n {
        let c = |k: usize| if k < d { fields.u[d * a + k] } else { 0.0 };
        let _ = writeln!(s, "{:e} {:e} {:e}", c(0), c(1), c(2));
    }
    let _ = writeln!(s, "CELL_DATA {m}");
    type Getter = fn(&crate::constitutive::QuadPointState) -> f64;
    let cell_fields: [(&str, Getter); 3] = [
        ("H", |q| q.h),
        ("alpha_bar", |q| q.alpha_bar),
        ("f", |q| q.f_fat),
    ];
    for (name, get) in cell_fields {
        let _ = writeln!(s, "SCALARS {name} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for e in 0..m {
            let qs = &fields.qp[disc.qp_offset[e]..disc.qp_offset[e] + disc.qp[e].len()];
            let mean = qs.iter().map(get).sum::<f64>() / qs.len() as f64;
            let _ = writeln!(s, "{mean:e}");
        }
    }
    s
}

pub fn write_fields_vtk(disc: &Discretization, fields: &Fields, path: &Path, step: usize) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(vtk_string(disc, fields, step).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Writes `fields_NNNNNN.vtk` every `stride` increments (and never when
/// `stride` is zero).
pub struct FieldWriter<'a> {
    pub disc: &'a Discretization,
    pub dir: PathBuf,
    pub stride: usize,
    pub written: Vec<PathBuf>,
}

impl<'a> FieldWriter<'a> {
    pub fn new(disc: &'a Discretization, dir: &Path, stride: usize) -> Self {
        FieldWriter {
            disc,
            dir: dir.to_path_buf(),
            stride,
            written: Vec::new(),
        }
    }
}

impl Observer for FieldWriter<'_> {
    fn step(&mut self, record: &StepRecord, fields: &Fields) -> Result<()> {
        if self.stride == 0 || record.increment % self.stride != 0 {
            return Ok(());
        }
        let path = self.dir.join(format!("fields_{:06}.vtk", record.increment));
        write_fields_vtk(self.disc, fields, &path, record.increment)?;
        self.written.push(path);
        Ok(())
    }
}

/// Forwards every event to each observer in turn.
pub struct Tee<'a>(pub Vec<&'a mut dyn Observer>);

impl Observer for Tee<'_> {
    fn step(&mut self, record: &StepRecord, fields: &Fields) -> Result<()> {
        for o in self.0.iter_mut() {
            o.step(record, fields)?;
        }
        Ok(())
    }

    fn cycle_end(&mut self, cycle: usize) -> Result<()> {
        for o in self.0.iter_mut() {
            o.cycle_end(cycle)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(i: usize) -> StepRecord {
        StepRecord {
            increment: i,
            cycle: 0,
            t: 0.5,
            force: 1234.5,
            control: 0.01,
            ctod: 0.002,
            cmod: 0.003,
            cmsd: -1e-5,
            crack_length: 0.0,
            max_phi: 0.25,
            dissipated_energy: 1.5e-3,
        }
    }

    #[test]
    fn one_increment_gives_header_and_one_row() {
        let log = RunLog {
            records: vec![record(1)],
            failure: None,
            mesh_hash: String::new(),
            quadrature: String::new(),
            failure_criterion: String::new(),
        };
        let text = series_csv(&log).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], SERIES_COLUMNS.join(","));
        assert_eq!(lines[1], "1,0,0.5,1234.5,0.01,0.002,0.003,-0.00001,0.0,0.25,0.0015");
    }
}
