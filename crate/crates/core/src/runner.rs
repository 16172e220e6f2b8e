//! Configuration-driven runs, sweeps and post-processing of run directories.
//!
//! A run directory holds:
//! `config.json` (effective configuration), `series.csv`, `runlog.json`,
//! `run_meta.json`, `crack_thresholds.csv`, optional `fields_NNNNNN.vtk`, and
//! the derived tables `creep.csv`, `paris.csv` and `paris_fit.json`.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::assembly::Discretization;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::postproc::crack::threshold_sensitivity;
use crate::postproc::fatigue::{creep_curve, fit_paris, paris_csv, paris_series, ParisFit, SnRow, SnTable};
use crate::postproc::output::{FieldWriter, SeriesWriter, Tee};
use crate::solver::{reference_force, run_program, Failure, RunLog, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub mesh_hash: String,
    pub nodes: usize,
    pub elements: usize,
    pub quadrature: String,
    pub failure_criterion: String,
    pub increments: usize,
    pub peak_force: f64,
    pub cycles_to_failure: Option<usize>,
    pub failure: Option<Failure>,
    pub reference_force: Option<f64>,
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Postproc(e.to_string()))
}

/// Fills `program.reference_force` from the reference run when missing.
pub fn resolve_reference(cfg: &mut RunConfig, disc: &Discretization) -> Result<()> {
    if !cfg.program.is_cyclic_force() || cfg.program.reference_force.is_some() {
        return Ok(());
    }
    let reference = cfg
        .reference
        .as_ref()
        .ok_or_else(|| Error::Config("a reference run is required".into()))?;
    let bc = cfg.boundary_spec()?;
    let fu = reference_force(disc, &cfg.material, &bc, reference, &cfg.solver)?;
    cfg.program.reference_force = Some(fu);
    Ok(())
}

/// Runs one configuration into `dir`. Partial series output is flushed
/// before a solver error is returned.
pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<RunMeta> {
    let mesh = cfg.build_mesh()?;
    let disc = Discretization::new(mesh, cfg.solver.quadrature)?;
    execute_on(cfg, &disc, dir)
}

fn execute_on(cfg: &RunConfig, disc: &Discretization, dir: &Path) -> Result<RunMeta> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut cfg = cfg.clone();
    resolve_reference(&mut cfg, disc)?;
    cfg.output.dir = dir.to_path_buf();
    write(&dir.join("config.json"), &cfg.to_json()?)?;

    let bc = cfg.boundary_spec()?;
    let mut series = SeriesWriter::create(&dir.join("series.csv"))?;
    let mut fields = FieldWriter::new(disc, dir, cfg.output.field_stride);
    let result = {
        let mut tee = Tee(vec![&mut series, &mut fields]);
        run_program(disc, &cfg.material, &bc, &cfg.program, &cfg.solver, &mut tee)
    };
    series.flush()?;
    let (log, sim) = result?;

    write(&dir.join("runlog.json"), &to_json(&log)?)?;
    if let Some(tracer) = sim.tracer() {
        let mut w = csv::Writer::from_writer(Vec::new());
        let enc = |e: csv::Error| Error::Postproc(e.to_string());
        w.write_record(["threshold", "a"]).map_err(enc)?;
        for (t, a) in threshold_sensitivity(tracer, &sim.phi) {
            w.write_record([t.to_string(), a.to_string()]).map_err(enc)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Postproc(e.to_string()))?;
        write(&dir.join("crack_thresholds.csv"), &String::from_utf8_lossy(&bytes))?;
    }
    let meta = RunMeta {
        mesh_hash: log.mesh_hash.clone(),
        nodes: disc.mesh.num_nodes(),
        elements: disc.mesh.num_elements(),
        quadrature: log.quadrature.clone(),
        failure_criterion: log.failure_criterion.clone(),
        increments: log.records.len(),
        peak_force: log.peak_force(),
        cycles_to_failure: log.cycles_to_failure(),
        failure: log.failure.clone(),
        reference_force: cfg.program.reference_force,
    };
    write(&dir.join("run_meta.json"), &to_json(&meta)?)?;
    derive_tables(&cfg, &log, dir)?;
    Ok(meta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParisReport {
    pub fit: Option<ParisFit>,
    pub note: Option<String>,
}

fn derive_tables(cfg: &RunConfig, log: &RunLog, dir: &Path) -> Result<()> {
    if !cfg.program.is_cyclic_force() {
        return Ok(());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| Error::Postproc(e.to_string());
    w.write_record(["cycle", "CMOD"]).map_err(enc)?;
    for (n, c) in creep_curve(log) {
        w.write_record([n.to_string(), c.to_string()]).map_err(enc)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Postproc(e.to_string()))?;
    write(&dir.join("creep.csv"), &String::from_utf8_lossy(&bytes))?;

    let report = match cfg.senb_geometry() {
        Some(g) => {
            let series = paris_series(log, &g)?;
            write(&dir.join("paris.csv"), &paris_csv(&series)?)?;
            match fit_paris(&series, &cfg.postproc.paris_window) {
                Ok(fit) => ParisReport { fit: Some(fit), note: None },
                Err(e) => ParisReport {
                    fit: None,
                    note: Some(e.to_string()),
                },
            }
        }
        None => ParisReport {
            fit: None,
            note: Some("Paris fitting covers the symmetric SENB geometry only".into()),
        },
    };
    write(&dir.join("paris_fit.json"), &to_json(&report)?)
}

/// Recomputes the derived tables of a stored run.
pub fn postprocess(dir: &Path) -> Result<()> {
    let cfg_path = dir.join("config.json");
    let log_path = dir.join("runlog.json");
    if !log_path.exists() {
        return Err(Error::Postproc(format!("no runlog.json in {}", dir.display())));
    }
    let text = std::fs::read_to_string(&cfg_path).map_err(|e| Error::io(&cfg_path, e))?;
    let cfg = RunConfig::from_json(&text, &cfg_path.display().to_string())?;
    let text = std::fs::read_to_string(&log_path).map_err(|e| Error::io(&log_path, e))?;
    let log: RunLog = serde_json::from_str(&text)
        .map_err(|e| Error::Postproc(format!("{}: corrupt run log: {e}", log_path.display())))?;
    derive_tables(&cfg, &log, dir)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub row: SnRow,
    pub dir: PathBuf,
    /// `ok`, or the error that stopped the run.
    pub status: String,
}

/// Runs kf × Smax on `workers` threads; rows come back in deterministic
/// (kf, Smax) order whatever the completion order.
pub fn sweep(cfg: &RunConfig, dir: &Path, workers: usize) -> Result<Vec<SweepRow>> {
    if cfg.sweep.is_none() {
        return Err(Error::Config("no sweep block in the configuration".into()));
    }
    if cfg.program.scenario != Scenario::Ls4 {
        return Err(Error::Config("sweep: needs an ls4 program".into()));
    }
    let mesh = cfg.build_mesh()?;
    let disc = Discretization::new(mesh, cfg.solver.quadrature)?;
    let mut base = cfg.clone();
    resolve_reference(&mut base, &disc)?;
    sweep_with(&base, dir, workers, |c, d| execute_on(c, &disc, d))
}

/// Sweep driver with an arbitrary per-run executor. A failing run is
/// recorded in its row and does not stop the others.
pub fn sweep_with<F>(cfg: &RunConfig, dir: &Path, workers: usize, run: F) -> Result<Vec<SweepRow>>
where
    F: Fn(&RunConfig, &Path) -> Result<RunMeta> + Sync,
{
    let s = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::Config("no sweep block in the configuration".into()))?;
    if s.kf.is_empty() || s.smax.is_empty() {
        return Err(Error::Config("sweep: kf and smax lists must be non-empty".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut base = cfg.clone();
    base.sweep = None;
    let smin = base.program.blocks[0].smin;

    let jobs: Vec<(f64, f64)> = s.kf.iter().flat_map(|&k| s.smax.iter().map(move |&m| (k, m))).collect();
    let results: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1).min(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let (kf, smax) = jobs[i];
                let mut c = base.clone();
                c.material.kf = kf;
                c.program.blocks[0].smax = smax;
                let sub = dir.join(format!("kf{kf}_smax{smax}"));
                let (cycles, status) = match run(&c, &sub) {
                    Ok(meta) => (meta.cycles_to_failure, "ok".to_string()),
                    Err(e) => (None, e.to_string()),
                };
                let row = SweepRow {
                    row: SnRow { smax, smin, kf, cycles },
                    dir: sub,
                    status,
                };
                results.lock().unwrap()[i] = Some(row);
            });
        }
    });
    let rows: Vec<SweepRow> = results.into_inner().unwrap().into_iter().flatten().collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| Error::Postproc(e.to_string());
    w.write_record(["kf", "smax", "smin", "cycles_to_failure", "status"]).map_err(enc)?;
    for r in &rows {
        w.write_record([
            r.row.kf.to_string(),
            r.row.smax.to_string(),
            r.row.smin.to_string(),
            r.row.cycles.map_or(String::new(), |n| n.to_string()),
            r.status.clone(),
        ])
        .map_err(enc)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Postproc(e.to_string()))?;
    write(&dir.join("sweep.csv"), &String::from_utf8_lossy(&bytes))?;
    let table = SnTable {
        rows: rows.iter().filter(|r| r.status == "ok").map(|r| r.row).collect(),
    };
    write(&dir.join("sn.csv"), &table.to_csv()?)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWEEP: &str = r#"{
        "mesh": { "generator": { "type": "bar", "length": 20, "height": 2, "size": 0.5 } },
        "program": { "scenario": "ls4", "blocks": [{ "smax": 0.8, "smin": 0.05, "cycles": 10 }],
                     "reference_force": 100.0 },
        "sweep": { "kf": [0.005, 0.01, 0.02, 0.04], "smax": [0.85, 0.7] }
    }"#;

    fn fake(c: &RunConfig) -> Result<RunMeta> {
        let (kf, smax) = (c.material.kf, c.program.blocks[0].smax);
        if kf == 0.02 && smax == 0.7 {
            return Err(Error::Config("planted failure".into()));
        }
        Ok(RunMeta {
            mesh_hash: String::new(),
            nodes: 0,
            elements: 0,
            quadrature: String::new(),
            failure_criterion: String::new(),
            increments: 0,
            peak_force: 0.0,
            cycles_to_failure: Some((10.0 / (smax * kf)).round() as usize),
            failure: None,
            reference_force: c.program.reference_force,
        })
    }

    #[test]
    fn sweep_isolates_failures_and_keeps_order() {
        let cfg = RunConfig::from_json(SWEEP, "sweep").unwrap();
        let tmp = tempfile::tempdir().unwrap();
        let rows = sweep_with(&cfg, tmp.path(), 3, |c, _| fake(c)).unwrap();
        assert_eq!(rows.len(), 8);
        let bad: Vec<&SweepRow> = rows.iter().filter(|r| r.status != "ok").collect();
        assert_eq!(bad.len(), 1);
        assert!(bad[0].status.contains("planted failure"));
        let order: Vec<(f64, f64)> = rows.iter().map(|r| (r.row.kf, r.row.smax)).collect();
        assert_eq!(order[0], (0.005, 0.85));
        assert_eq!(order[5], (0.02, 0.7));
        assert_eq!(order[7], (0.04, 0.7));
        let sweep_csv = std::fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
        assert_eq!(sweep_csv.lines().count(), 9);
        let sn = std::fs::read_to_string(tmp.path().join("sn.csv")).unwrap();
        assert_eq!(sn.lines().count(), 8);

        let serial = sweep_with(&cfg, &tmp.path().join("serial"), 1, |c, _| fake(c)).unwrap();
        let strip = |r: &[SweepRow]| r.iter().map(|x| (x.row, x.status.clone())).collect::<Vec<_>>();
        assert_eq!(strip(&rows), strip(&serial));
    }
}
