//! Helpers shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeMap;

/// Contents of a legacy ASCII VTK unstructured grid.
#[derive(Debug, Default)]
pub struct Vtk {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub point_scalars: BTreeMap<String, Vec<f64>>,
    pub point_vectors: BTreeMap<String, Vec<[f64; 3]>>,
    pub cell_scalars: BTreeMap<String, Vec<f64>>,
}

fn nodes_of(cell_type: u8) -> Option<usize> {
    match cell_type {
        5 => Some(3),
        9 => Some(4),
        10 => Some(4),
        _ => None,
    }
}

/// Independent reader for the legacy grammar documented in the output module.
pub fn parse_vtk(text: &str) -> Result<Vtk, String> {
    let mut lines = text.lines();
    let mut next_line = || lines.next().ok_or_else(|| "unexpected end of file".to_string());
    if next_line()? != "# vtk DataFile Version 3.0" {
        return Err("bad version line".into());
    }
    let title = next_line()?.to_string();
    if title.len() > 256 {
        return Err("title longer than 256 characters".into());
    }
    if next_line()? != "ASCII" {
        return Err("not ASCII".into());
    }
    if next_line()? != "DATASET UNSTRUCTURED_GRID" {
        return Err("not an unstructured grid".into());
    }
    let rest: Vec<&str> = lines.flat_map(|l| l.split_whitespace()).collect();
    let mut i = 0;
    let mut tok = || -> Result<&str, String> {
        let t = rest.get(i).copied().ok_or("unexpected end of data")?;
        i += 1;
        Ok(t)
    };
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("bad real `{t}`: {e}"));
    let int = |t: &str| t.parse::<usize>().map_err(|e| format!("bad integer `{t}`: {e}"));
    let expect = |got: &str, want: &str| {
        if got == want {
            Ok(())
        } else {
            Err(format!("expected `{want}`, found `{got}`"))
        }
    };

    let mut v = Vtk {
        title,
        ..Default::default()
    };
    expect(tok()?, "POINTS")?;
    let n = int(tok()?)?;
    expect(tok()?, "double")?;
    for _ in 0..n {
        v.points.push([num(tok()?)?, num(tok()?)?, num(tok()?)?]);
    }
    expect(tok()?, "CELLS")?;
    let m = int(tok()?)?;
    let size = int(tok()?)?;
    let mut used = 0;
    for _ in 0..m {
        let k = int(tok()?)?;
        let mut c = Vec::with_capacity(k);
        for _ in 0..k {
            let a = int(tok()?)?;
            if a >= n {
                return Err(format!("cell node {a} out of range"));
            }
            c.push(a);
        }
        used += k + 1;
        v.cells.push(c);
    }
    if used != size {
        return Err(format!("CELLS size {size} but {used} entries"));
    }
    expect(tok()?, "CELL_TYPES")?;
    if int(tok()?)? != m {
        return Err("CELL_TYPES count mismatch".into());
    }
    for c in 0..m {
        let t: u8 = tok()?.parse().map_err(|e| format!("bad cell type: {e}"))?;
        if nodes_of(t) != Some(v.cells[c].len()) {
            return Err(format!("cell {c}: type {t} with {} nodes", v.cells[c].len()));
        }
        v.cell_types.push(t);
    }

    let mut section = "";
    let mut count = 0;
    loop {
        let Ok(key) = tok() else { break };
        match key {
            "POINT_DATA" | "CELL_DATA" => {
                section = key;
                count = int(tok()?)?;
                let want = if key == "POINT_DATA" { n } else { m };
                if count != want {
                    return Err(format!("{key} {count}, expected {want}"));
                }
            }
            "SCALARS" => {
                let name = tok()?.to_string();
                expect(tok()?, "double")?;
                expect(tok()?, "1")?;
                expect(tok()?, "LOOKUP_TABLE")?;
                expect(tok()?, "default")?;
                let vals = (0..count).map(|_| num(tok()?)).collect::<Result<Vec<_>, _>>()?;
                match section {
                    "POINT_DATA" => v.point_scalars.insert(name, vals),
                    "CELL_DATA" => v.cell_scalars.insert(name, vals),
                    _ => return Err("SCALARS outside a data section".into()),
                };
            }
            "VECTORS" => {
                if section != "POINT_DATA" {
                    return Err("VECTORS outside POINT_DATA".into());
                }
                let name = tok()?.to_string();
                expect(tok()?, "double")?;
                let vals = (0..count)
                    .map(|_| Ok([num(tok()?)?, num(tok()?)?, num(tok()?)?]))
                    .collect::<Result<Vec<_>, String>>()?;
                v.point_vectors.insert(name, vals);
            }
            other => return Err(format!("unexpected keyword `{other}`")),
        }
    }
    Ok(v)
}
