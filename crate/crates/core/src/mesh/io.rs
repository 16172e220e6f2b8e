//! JSON mesh files.
//!
//! ```json
//! {
//!   "dimension": 2,
//!   "thickness": 100.0,
//!   "nodes": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
//!   "elements": [{ "kind": "tri3", "nodes": [0, 1, 2] }],
//!   "node_sets": { "left": [0, 2] },
//!   "side_sets": { "top": [[0, 1]] },
//!   "attributes": { "ligament_length": 1.0 }
//! }
//! ```
//!
//! Coordinates are in mm. `thickness` (2D only), `node_sets`, `side_sets` and
//! `attributes` are optional. Element kinds: `tri3`, `quad4`, `tet4`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Element, Mesh};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    dimension: usize,
    #[serde(default = "one")]
    thickness: f64,
    nodes: Vec<Vec<f64>>,
    elements: Vec<Element>,
    #[serde(default)]
    node_sets: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    side_sets: BTreeMap<String, Vec<(usize, usize)>>,
    #[serde(default)]
    attributes: BTreeMap<String, f64>,
}

fn one() -> f64 {
    1.0
}

pub fn read_mesh_str(text: &str, context: &str) -> Result<Mesh> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: MeshFile = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        context: context.to_string(),
        message: format!("field `{}`: {}", e.path(), e.inner()),
    })?;
    let dim = file.dimension;
    let mut nodes = Vec::with_capacity(file.nodes.len());
    for (i, c) in file.nodes.iter().enumerate() {
        if c.len() != dim {
            return Err(Error::Schema {
                context: context.to_string(),
                message: format!("field `nodes[{i}]`: expected {dim} coordinates, got {}", c.len()),
            });
        }
        let mut x = [0.0; 3];
        x[..dim].copy_from_slice(c);
        nodes.push(x);
    }
    let mesh = Mesh {
        dim,
        nodes,
        elements: file.elements,
        node_sets: file.node_sets,
        side_sets: file.side_sets,
        thickness: file.thickness,
        attributes: file.attributes,
    };
    mesh.validate().map_err(|e| Error::Schema {
        context: context.to_string(),
        message: e.to_string(),
    })?;
    Ok(mesh)
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_mesh_str(&text, &path.display().to_string())
}

pub fn write_mesh_string(mesh: &Mesh) -> String {
    let file = MeshFile {
        dimension: mesh.dim,
        thickness: mesh.thickness,
        nodes: mesh.nodes.iter().map(|x| x[..mesh.dim].to_vec()).collect(),
        elements: mesh.elements.clone(),
        node_sets: mesh.node_sets.clone(),
        side_sets: mesh.side_sets.clone(),
        attributes: mesh.attributes.clone(),
    };
    serde_json::to_string(&file).expect("mesh serialization cannot fail")
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, write_mesh_string(mesh)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ElementKind;

    #[test]
    fn minimal_triangle_file() {
        let text = r#"{"dimension":2,"nodes":[[0,0],[1,0],[0,1]],
            "elements":[{"kind":"tri3","nodes":[0,1,2]}]}"#;
        let m = read_mesh_str(text, "inline").unwrap();
        assert_eq!(m.num_nodes(), 3);
        assert_eq!(m.num_elements(), 1);
        assert_eq!(m.elements[0].kind, ElementKind::Tri3);
        assert_eq!(m.thickness, 1.0);
    }

    #[test]
    fn out_of_range_node_names_element() {
        let text = r#"{"dimension":2,"nodes":[[0,0],[1,0],[0,1]],
            "elements":[{"kind":"tri3","nodes":[0,1,2]},{"kind":"tri3","nodes":[0,1,5]}]}"#;
        let msg = read_mesh_str(text, "bad.json").unwrap_err().to_string();
        assert!(msg.contains("bad.json") && msg.contains("element 1"), "{msg}");
    }

    #[test]
    fn unknown_kind_rejected_with_location() {
        let text = "{\"dimension\":2,\n\"nodes\":[[0,0],[1,0],[0,1]],\n\"elements\":[{\"kind\":\"hex8\",\"nodes\":[0,1,2]}]}";
        let msg = read_mesh_str(text, "k.json").unwrap_err().to_string();
        assert!(msg.contains("elements[0].kind") || msg.contains("elements[0]"), "{msg}");
        assert!(msg.contains("hex8") && msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn wrong_coordinate_count() {
        let text = r#"{"dimension":2,"nodes":[[0,0],[1,0,0],[0,1]],
            "elements":[{"kind":"tri3","nodes":[0,1,2]}]}"#;
        let msg = read_mesh_str(text, "c.json").unwrap_err().to_string();
        assert!(msg.contains("nodes[1]"), "{msg}");
    }
}
