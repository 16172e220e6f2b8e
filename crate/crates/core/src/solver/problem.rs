//! Supports, loading and monitor definitions in terms of named mesh sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Support {
    pub set: String,
    /// Fixed displacement components (0 = x, 1 = y, 2 = z).
    pub components: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LoadSpec {
    /// Force spread over a side set; `sign` gives the direction of a positive load.
    Face { set: String, component: usize, sign: f64 },
    /// Uniform displacement of a node set; the force is the reaction.
    Prescribed { set: String, component: usize },
}

/// Node-pair relative displacement `u_c(right) − u_c(left)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairMonitor {
    pub left: String,
    pub right: String,
}

/// Mean displacement component over a node set, times `sign`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMonitor {
    pub set: String,
    pub component: usize,
    #[serde(default = "one")]
    pub sign: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    pub supports: Vec<Support>,
    pub load: LoadSpec,
    /// Notch-tip pair; CTOD is the horizontal opening.
    #[serde(default)]
    pub ctod: Option<PairMonitor>,
    /// Notch-mouth pair; CMOD is the horizontal opening, CMSD the vertical sliding.
    #[serde(default)]
    pub cmod: Option<PairMonitor>,
    /// Displacement monitor used for displacement control and the divergence guard.
    pub deflection: PointMonitor,
    /// Seed node set for crack tracing.
    #[serde(default)]
    pub crack_seed: Option<String>,
    /// Axis along which a 3D crack front is binned.
    #[serde(default)]
    pub front_axis: Option<usize>,
}

impl BoundarySpec {
    /// Three-point bending: pinned left support, roller right support, load
    /// pressed down over the contact strip.
    pub fn senb() -> Self {
        BoundarySpec {
            supports: vec![
                Support {
                    set: "left_support".into(),
                    components: vec![0, 1],
                },
                Support {
                    set: "right_support".into(),
                    components: vec![1],
                },
            ],
            load: LoadSpec::Face {
                set: "load".into(),
                component: 1,
                sign: -1.0,
            },
            ctod: Some(PairMonitor {
                left: "ctod_left".into(),
                right: "ctod_right".into(),
            }),
            cmod: Some(PairMonitor {
                left: "cmod_left".into(),
                right: "cmod_right".into(),
            }),
            deflection: PointMonitor {
                set: "load".into(),
                component: 1,
                sign: -1.0,
            },
            crack_seed: Some("notch_tip".into()),
            front_axis: None,
        }
    }

    /// Bar pulled at its right end, left end on rollers, origin pinned.
    pub fn bar() -> Self {
        BoundarySpec {
            supports: vec![
                Support {
                    set: "left".into(),
                    components: vec![0],
                },
                Support {
                    set: "origin".into(),
                    components: vec![1],
                },
            ],
            load: LoadSpec::Prescribed {
                set: "right".into(),
                component: 0,
            },
            ctod: None,
            cmod: None,
            deflection: PointMonitor {
                set: "right".into(),
                component: 0,
                sign: 1.0,
            },
            crack_seed: None,
            front_axis: None,
        }
    }

    /// 3D beam clamped on the left face and pulled on the right face.
    pub fn slant_beam() -> Self {
        BoundarySpec {
            supports: vec![Support {
                set: "left".into(),
                components: vec![0, 1, 2],
            }],
            load: LoadSpec::Prescribed {
                set: "right".into(),
                component: 0,
            },
            ctod: None,
            cmod: None,
            deflection: PointMonitor {
                set: "corner".into(),
                component: 0,
                sign: 1.0,
            },
            crack_seed: Some("notch_tip".into()),
            front_axis: Some(2),
        }
    }

    /// Checks every referenced set and component against the mesh.
    pub fn validate(&self, mesh: &Mesh) -> Result<()> {
        let comp = |c: usize, what: &str| {
            if c >= mesh.dim {
                Err(Error::Boundary(format!("{what}: component {c} out of range in a {}D mesh", mesh.dim)))
            } else {
                Ok(())
            }
        };
        let node_set = |name: &str| -> Result<()> {
            let s = mesh
                .node_set(name)
                .map_err(|_| Error::Boundary(format!("node set `{name}` does not exist")))?;
            if s.is_empty() {
                return Err(Error::Boundary(format!("node set `{name}` is empty")));
            }
            Ok(())
        };
        for s in &self.supports {
            node_set(&s.set)?;
            for &c in &s.components {
                comp(c, &format!("support `{}`", s.set))?;
            }
        }
        match &self.load {
            LoadSpec::Face { set, component, sign } => {
                let faces = mesh
                    .side_set(set)
                    .map_err(|_| Error::Boundary(format!("side set `{set}` does not exist")))?;
                if faces.is_empty() {
                    return Err(Error::Boundary(format!("side set `{set}` is empty")));
                }
                comp(*component, "load")?;
                if *sign != 1.0 && *sign != -1.0 {
                    return Err(Error::Boundary("load sign must be +1 or -1".into()));
                }
            }
            LoadSpec::Prescribed { set, component } => {
                node_set(set)?;
                comp(*component, "load")?;
            }
        }
        for m in [&self.ctod, &self.cmod].into_iter().flatten() {
            node_set(&m.left)?;
            node_set(&m.right)?;
        }
        node_set(&self.deflection.set)?;
        comp(self.deflection.component, "deflection monitor")?;
        if let Some(seed) = &self.crack_seed {
            node_set(seed)?;
        }
        if let Some(a) = self.front_axis {
            comp(a, "front_axis")?;
        }
        Ok(())
    }
}
