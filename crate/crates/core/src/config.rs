//! JSON run configuration.
//!
//! Units are N, mm and MPa throughout. Every block has explicit defaults;
//! the fully defaulted configuration is echoed into the run directory.
//!
//! ```json
//! {
//!   "material": { "e0": 30000, "nu": 0.2, "ft": 4.8, "gf": 0.03, "ell": 2.5, "kf": 0.01, ... },
//!   "mesh": { "generator": { "type": "senb", ... } }   or   { "file": "beam.json" },
//!   "boundary": { ... },            optional, derived from the generator kind
//!   "program": { "scenario": "ls4", "blocks": [...], "reference_force": 14000 },
//!   "reference": { "scenario": "ls1", ... },   optional LS1 run giving F_u
//!   "solver": { "newton_tol": 1e-6, ... },
//!   "output": { "dir": "out", "field_stride": 0 },
//!   "sweep": { "kf": [0.005, 0.01], "smax": [0.7, 0.85] },   optional
//!   "postproc": { "paris_window": { "min_ratio": 0.0, "max_ratio": 0.9 } }
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constitutive::MaterialParams;
use crate::error::{Error, Result};
use crate::mesh::generate::{generate_bar, generate_senb, generate_slant_beam, BarParams, SenbParams, SlantBeamParams};
use crate::mesh::read_mesh;
use crate::mesh::Mesh;
use crate::postproc::fatigue::{ParisWindow, SenbGeometry};
use crate::solver::{BoundarySpec, LoadProgram, Scenario, SolverSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeshGenerator {
    Senb(SenbParams),
    Bar(BarParams),
    SlantBeam(SlantBeamParams),
}

/// Exactly one of `generator` and `file`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<MeshGenerator>,
    /// Mesh file (JSON mesh format), relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Field (VTK) output every this many increments; 0 disables it.
    pub field_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            field_stride: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kf: Vec<f64>,
    pub smax: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PostprocConfig {
    pub paris_window: ParisWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub material: MaterialParams,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub boundary: Option<BoundarySpec>,
    pub program: LoadProgram,
    /// Monotonic run whose peak force becomes `program.reference_force`
    /// when that is not given.
    #[serde(default)]
    pub reference: Option<LoadProgram>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub postproc: PostprocConfig,
}

impl RunConfig {
    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
            context: context.to_string(),
            message: format!("at `{}`: {}", e.path(), e.inner()),
        })
    }

    /// Reads and validates a config; relative mesh paths are resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        if let Some(f) = &cfg.mesh.file {
            if f.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.mesh.file = Some(base.join(f));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Schema-level checks that need no simulation.
    pub fn validate(&self) -> Result<()> {
        self.material.validate()?;
        self.solver.validate()?;
        match (&self.mesh.generator, &self.mesh.file) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("mesh: give either `generator` or `file`, not both".into()))
            }
            (None, None) => return Err(Error::Config("mesh: one of `generator` or `file` is required".into())),
            (None, Some(f)) if !f.exists() => {
                return Err(Error::Config(format!("mesh.file `{}` does not exist", f.display())))
            }
            _ => {}
        }
        if self.boundary.is_none() && self.mesh.generator.is_none() {
            return Err(Error::Config("boundary: required when the mesh comes from a file".into()));
        }
        let cyclic = self.program.is_cyclic_force();
        if cyclic && self.program.reference_force.is_none() {
            match &self.reference {
                Some(r) if r.scenario == Scenario::Ls1 => r.validate()?,
                Some(_) => return Err(Error::Config("reference: must be an ls1 program".into())),
                None => {
                    return Err(Error::Config(
                        "program.reference_force or a `reference` run is required for ls3/ls4".into(),
                    ))
                }
            }
        } else {
            self.program.validate()?;
        }
        if let Some(s) = &self.sweep {
            if s.kf.is_empty() || s.smax.is_empty() {
                return Err(Error::Config("sweep: kf and smax lists must be non-empty".into()));
            }
            if self.program.scenario != Scenario::Ls4 {
                return Err(Error::Config("sweep: needs an ls4 program".into()));
            }
            for &k in &s.kf {
                if !(k.is_finite() && k >= 0.0) {
                    return Err(Error::param("sweep.kf", format!("must be >= 0, got {k}")));
                }
            }
            for &v in &s.smax {
                if !(v > 0.0 && v <= 1.0) {
                    return Err(Error::param("sweep.smax", format!("must lie in (0, 1], got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        match (&self.mesh.generator, &self.mesh.file) {
            (Some(MeshGenerator::Senb(p)), _) => generate_senb(p, self.material.ell),
            (Some(MeshGenerator::Bar(p)), _) => generate_bar(p),
            (Some(MeshGenerator::SlantBeam(p)), _) => generate_slant_beam(p),
            (None, Some(f)) => read_mesh(f),
            (None, None) => Err(Error::Config("mesh: nothing to build".into())),
        }
    }

    pub fn boundary_spec(&self) -> Result<BoundarySpec> {
        if let Some(b) = &self.boundary {
            return Ok(b.clone());
        }
        match &self.mesh.generator {
            Some(MeshGenerator::Senb(_)) => Ok(BoundarySpec::senb()),
            Some(MeshGenerator::Bar(_)) => Ok(BoundarySpec::bar()),
            Some(MeshGenerator::SlantBeam(_)) => Ok(BoundarySpec::slant_beam()),
            None => Err(Error::Config("boundary: required when the mesh comes from a file".into())),
        }
    }

    /// Stress intensity geometry; only the symmetric SENB qualifies.
    pub fn senb_geometry(&self) -> Option<SenbGeometry> {
        match &self.mesh.generator {
            Some(MeshGenerator::Senb(p)) if p.notch_offset == 0.0 => Some(SenbGeometry {
                span: p.span,
                thickness: p.thickness,
                height: p.height,
                notch_depth: p.notch_depth,
            }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "mesh": { "generator": { "type": "bar", "length": 20, "height": 2, "size": 1 } },
        "program": { "scenario": "ls1", "control": "displacement", "target": 0.05, "increments": 10 }
    }"#;

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_json(MINIMAL, "test").unwrap();
        c.validate().unwrap();
        assert_eq!(c.material, MaterialParams::default());
        assert_eq!(c.solver, SolverSettings::default());
        assert_eq!(c.boundary_spec().unwrap(), BoundarySpec::bar());
        // the echo reads back to the same config
        let echo = RunConfig::from_json(&c.to_json().unwrap(), "echo").unwrap();
        assert_eq!(echo, c);
    }

    #[test]
    fn negative_fracture_energy_names_the_field() {
        let text = MINIMAL.replacen('{', r#"{ "material": { "gf": -0.1 },"#, 1);
        let c = RunConfig::from_json(&text, "test").unwrap();
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("material.gf"), "{msg}");
    }

    #[test]
    fn unknown_and_mistyped_fields_report_the_path() {
        let text = MINIMAL.replacen('{', r#"{ "material": { "ft": "high" },"#, 1);
        let msg = RunConfig::from_json(&text, "test").unwrap_err().to_string();
        assert!(msg.contains("material.ft"), "{msg}");
        let text = MINIMAL.replacen('{', r#"{ "materiel": {},"#, 1);
        assert!(RunConfig::from_json(&text, "test").is_err());
    }

    #[test]
    fn mesh_file_and_generator_are_exclusive() {
        let text = MINIMAL.replace(r#""mesh": {"#, r#""mesh": { "file": "x.json","#);
        let c = RunConfig::from_json(&text, "test").unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("not both"));
    }

    #[test]
    fn empty_sweep_lists_are_rejected() {
        let text = r#"{
            "mesh": { "generator": { "type": "bar", "length": 20, "height": 2, "size": 1 } },
            "program": { "scenario": "ls4", "blocks": [{ "smax": 0.8, "smin": 0.05, "cycles": 10 }],
                         "reference_force": 100 },
            "sweep": { "kf": [], "smax": [0.8] }
        }"#;
        let c = RunConfig::from_json(text, "test").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn fatigue_program_needs_a_reference() {
        let text = r#"{
            "mesh": { "generator": { "type": "bar", "length": 20, "height": 2, "size": 1 } },
            "program": { "scenario": "ls4", "blocks": [{ "smax": 0.8, "smin": 0.05, "cycles": 10 }] }
        }"#;
        let c = RunConfig::from_json(text, "test").unwrap();
        assert!(c.validate().is_err());
    }
}
