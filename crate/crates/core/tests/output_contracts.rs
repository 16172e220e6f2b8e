mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use pfczm::assembly::Discretization;
use pfczm::config::RunConfig;
use pfczm::constitutive::QuadPointState;
use pfczm::mesh::{Element, ElementKind, Mesh, QuadratureOrder};
use pfczm::postproc::output::{vtk_string, SERIES_COLUMNS};
use pfczm::runner;
use pfczm::solver::Fields;

use common::parse_vtk;

fn unit_square() -> Discretization {
    let mesh = Mesh {
        dim: 2,
        nodes: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
        elements: vec![Element {
            kind: ElementKind::Quad4,
            nodes: vec![0, 1, 2, 3],
        }],
        node_sets: BTreeMap::new(),
        side_sets: BTreeMap::new(),
        thickness: 1.0,
        attributes: BTreeMap::new(),
    };
    Discretization::new(mesh, QuadratureOrder::Full).unwrap()
}

#[test]
fn one_element_vtk_matches_golden_file() {
    let disc = unit_square();
    let phi = [0.0, 0.25, 0.5, 1.0];
    let u = [0.0, 0.0, 1e-3, 0.0, 1e-3, 2e-3, 0.0, 2e-3];
    let qp: Vec<QuadPointState> = (0..4)
        .map(|i| QuadPointState {
            h: 1.0 + i as f64,
            alpha_bar: 0.5,
            alpha_prev: 0.0,
            f_fat: 0.75,
        })
        .collect();
    let text = vtk_string(&disc, &Fields { u: &u, phi: &phi, qp: &qp }, 7);
    let golden = include_str!("golden/one_quad.vtk");
    assert_eq!(text, golden);
    let v = parse_vtk(&text).unwrap();
    assert_eq!(v.points.len(), 4);
    assert_eq!(v.cell_types, vec![9]);
    assert_eq!(v.point_scalars["phi"], phi.to_vec());
    assert_eq!(v.point_vectors["u"][2], [1e-3, 2e-3, 0.0]);
    assert_eq!(v.cell_scalars["H"], vec![2.5]);
    assert_eq!(v.cell_scalars["f"], vec![0.75]);
}

#[test]
fn parser_rejects_malformed_files() {
    let golden = include_str!("golden/one_quad.vtk");
    assert!(parse_vtk(&golden.replace("CELLS 1 5", "CELLS 1 6")).is_err());
    assert!(parse_vtk(&golden.replace("\n9\n", "\n5\n")).is_err());
    assert!(parse_vtk(&golden.replace("POINT_DATA 4", "POINT_DATA 3")).is_err());
    assert!(parse_vtk(&golden.replace("4 0 1 2 3", "4 0 1 2 4")).is_err());
}

const BAR: &str = r#"{
    "material": { "ell": 2.5 },
    "mesh": { "generator": { "type": "bar", "length": 20, "height": 2, "size": 0.5 } },
    "program": { "scenario": "ls1", "control": "displacement", "target": 0.02, "increments": 12 },
    "output": { "field_stride": 4 }
}"#;

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
    }
    out
}

#[test]
fn run_directory_contracts_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_json(BAR, "bar").unwrap();
    cfg.validate().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let meta = runner::execute(&cfg, &a).unwrap();
    runner::execute(&cfg, &b).unwrap();
    assert_eq!(meta.increments, 12);

    let series = fs::read_to_string(a.join("series.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(lines.next().unwrap(), SERIES_COLUMNS.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert_eq!(r.split(',').count(), SERIES_COLUMNS.len());
    }

    let fa = files(&a);
    let fb = files(&b);
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        if name != "config.json" {
            assert!(bytes == &fb[name], "{name} differs between identical runs");
        }
    }
    let vtk: Vec<&String> = fa.keys().filter(|k| k.ends_with(".vtk")).collect();
    assert_eq!(vtk.len(), 3);
    for name in vtk {
        let v = parse_vtk(std::str::from_utf8(&fa[name]).unwrap()).unwrap();
        assert_eq!(v.points.len(), meta.nodes);
        assert_eq!(v.cells.len(), meta.elements);
    }

    // re-running from the echoed configuration reproduces the run
    let echo = RunConfig::load(&a.join("config.json")).unwrap();
    let c = tmp.path().join("c");
    runner::execute(&echo, &c).unwrap();
    assert_eq!(fs::read(a.join("series.csv")).unwrap(), fs::read(c.join("series.csv")).unwrap());
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pfczm"))
}

#[test]
fn cli_run_validate_and_postproc() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("bar.json");
    fs::write(&cfg_path, BAR).unwrap();
    let out = cli().arg("validate").arg(&cfg_path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let dir = tmp.path().join("run");
    let out = cli().arg("run").arg(&cfg_path).arg("--out").arg(&dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("peak force"));
    assert!(dir.join("run_meta.json").exists());

    let out = cli().arg("postproc").arg(&dir).output().unwrap();
    assert!(out.status.success());
    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = cli().arg("postproc").arg(&empty).output().unwrap();
    assert!(!out.status.success());

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, BAR.replace(r#""ell": 2.5"#, r#""ell": 2.5, "gf": -0.1"#)).unwrap();
    let out = cli().arg("validate").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("material.gf"));

    let both = tmp.path().join("both.json");
    fs::write(&both, BAR.replace(r#""mesh": {"#, r#""mesh": { "file": "bar.json","#)).unwrap();
    let out = cli().arg("run").arg(&both).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not both"));
}

#[test]
fn fatigue_run_postproc_is_repeatable() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"{
        "material": { "ell": 2.5, "kf": 0.05 },
        "mesh": { "generator": { "type": "bar", "length": 20, "height": 2, "size": 0.5 } },
        "program": { "scenario": "ls4", "blocks": [{ "smax": 0.9, "smin": 0.05, "cycles": 6 }],
                     "max_cycles": 6 },
        "reference": { "scenario": "ls1", "control": "displacement", "target": 0.01, "increments": 10 },
        "boundary": {
            "supports": [ { "set": "left", "components": [0] }, { "set": "origin", "components": [1] } ],
            "load": { "kind": "face", "set": "right", "component": 0, "sign": 1.0 },
            "deflection": { "set": "right", "component": 0 }
        }
    }"#;
    let cfg = RunConfig::from_json(text, "fatigue").unwrap();
    cfg.validate().unwrap();
    let dir = tmp.path().join("run");
    let meta = runner::execute(&cfg, &dir).unwrap();
    assert!(meta.reference_force.unwrap() > 0.0);
    let creep = fs::read(dir.join("creep.csv")).unwrap();
    let fit = fs::read(dir.join("paris_fit.json")).unwrap();
    runner::postprocess(&dir).unwrap();
    assert_eq!(creep, fs::read(dir.join("creep.csv")).unwrap());
    assert_eq!(fit, fs::read(dir.join("paris_fit.json")).unwrap());
    // the bar is not an SENB: the fit is declined with a note
    assert!(String::from_utf8_lossy(&fit).contains("SENB"));
}
