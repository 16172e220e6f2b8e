//! Built-in benchmark meshes: the notched three-point-bending beam (mode I and
//! offset-notch mixed mode), a straight tension bar, and the slant-notched 3D
//! tension beam.
//!
//! The 2D beam is meshed with a 2:1-balanced quadtree laid over a
//! piecewise-linear parameter grid. Every geometric feature (supports, notch
//! flanks, notch tip, load contact edges) sits on a grid line, so feature
//! points are always mesh nodes. Leaves with hanging edge midpoints are
//! fan-triangulated from their centre; the others are split into two
//! triangles with alternating diagonals.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Element, ElementKind, Mesh};
use crate::error::{Error, Result};

/// Notched beam in three-point bending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SenbParams {
    /// Beam height h (mm).
    pub height: f64,
    /// Out-of-plane width b (mm).
    pub thickness: f64,
    /// Support span L₀ (mm).
    pub span: f64,
    /// Total length; defaults to 1.1·span.
    #[serde(default)]
    pub length: Option<f64>,
    pub notch_depth: f64,
    pub notch_width: f64,
    /// Horizontal distance of the notch centre from mid-span (positive = right).
    #[serde(default)]
    pub notch_offset: f64,
    /// Width of the top strip over which the load is spread.
    #[serde(default = "default_contact")]
    pub contact_width: f64,
    pub fine_size: f64,
    pub coarse_size: f64,
    /// Growth of the target size per mm of distance from the band.
    #[serde(default = "default_grading")]
    pub grading: f64,
    /// Half-width of the refined corridor around the expected crack path.
    pub band_half_width: f64,
    /// End point of the refined corridor; the corridor starts at the notch tip.
    /// Defaults to a vertical corridor up to 3/4 of the height.
    #[serde(default)]
    pub band_end: Option<[f64; 2]>,
    /// Permit band elements coarser than ℓ/5 (convergence studies only).
    #[serde(default)]
    pub allow_coarse_band: bool,
}

fn default_contact() -> f64 {
    20.0
}

fn default_grading() -> f64 {
    0.35
}

impl SenbParams {
    /// Mode-I beam with the given band element size.
    pub fn mode_one(fine_size: f64) -> Self {
        SenbParams {
            height: 200.0,
            thickness: 100.0,
            span: 600.0,
            length: None,
            notch_depth: 200.0 / 6.0,
            notch_width: 8.0,
            notch_offset: 0.0,
            contact_width: 20.0,
            fine_size,
            coarse_size: 40.0,
            grading: 0.5,
            band_half_width: 8.0,
            band_end: None,
            allow_coarse_band: false,
        }
    }

    /// Offset-notch mixed-mode beam.
    pub fn mixed_mode(fine_size: f64) -> Self {
        SenbParams {
            height: 160.0,
            thickness: 80.0,
            span: 640.0,
            length: None,
            notch_depth: 80.0,
            notch_width: 2.0,
            notch_offset: 160.0,
            contact_width: 20.0,
            fine_size,
            coarse_size: 25.0,
            grading: 0.35,
            band_half_width: 30.0,
            band_end: Some([704.0 / 2.0 + 100.0, 160.0]),
            allow_coarse_band: false,
        }
    }

    pub fn total_length(&self) -> f64 {
        self.length.unwrap_or(1.1 * self.span)
    }

    fn validate(&self, ell: f64) -> Result<()> {
        let pos = [
            ("height", self.height),
            ("thickness", self.thickness),
            ("span", self.span),
            ("notch_width", self.notch_width),
            ("fine_size", self.fine_size),
            ("coarse_size", self.coarse_size),
            ("contact_width", self.contact_width),
            ("band_half_width", self.band_half_width),
        ];
        for (name, v) in pos {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("mesh.senb.{name}"), format!("must be > 0, got {v}")));
            }
        }
        if !(self.notch_depth >= 0.0 && self.notch_depth < self.height) {
            return Err(Error::param(
                "mesh.senb.notch_depth",
                format!("must lie in [0, height), got {}", self.notch_depth),
            ));
        }
        let len = self.total_length();
        if self.span > len {
            return Err(Error::param("mesh.senb.span", "span exceeds beam length"));
        }
        let xn = 0.5 * len + self.notch_offset;
        if xn - 0.5 * self.notch_width <= 0.0 || xn + 0.5 * self.notch_width >= len {
            return Err(Error::param("mesh.senb.notch_offset", "notch lies outside the beam"));
        }
        if self.fine_size > ell / 5.0 * (1.0 + 1e-9) && !self.allow_coarse_band {
            return Err(Error::param(
                "mesh.senb.fine_size",
                format!(
                    "band element size {} exceeds ell/5 = {}; mesh-objective results need at least five elements per length scale (set allow_coarse_band to override)",
                    self.fine_size,
                    ell / 5.0
                ),
            ));
        }
        if self.coarse_size < self.fine_size {
            return Err(Error::param("mesh.senb.coarse_size", "must be >= fine_size"));
        }
        Ok(())
    }
}

/// Piecewise-linear map from integer grid units to physical coordinates.
#[derive(Debug, Clone)]
struct AxisMap {
    knots: Vec<f64>,
    /// cumulative unit index at each knot
    units: Vec<i64>,
}

impl AxisMap {
    /// `knots` sorted physical positions; each interval gets about len/fine
    /// units. An interval of at least half a root cell is stretched to end on
    /// a root-cell boundary, so knots between long intervals need no refinement, and the
    /// total is padded to a multiple of `root`.
    fn new(mut knots: Vec<f64>, fine: f64, root: i64) -> Self {
        knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        knots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let mut units = vec![0i64];
        for w in knots.windows(2) {
            let u = *units.last().unwrap();
            let c = ((w[1] - w[0]) / fine - 1e-9).ceil().max(1.0) as i64;
            let end = if 2 * c >= root {
                (u + c + root - 1) / root * root
            } else {
                u + c
            };
            units.push(end);
        }
        let rem = (root - units.last().unwrap() % root) % root;
        *units.last_mut().unwrap() += rem;
        AxisMap { knots, units }
    }

    fn total(&self) -> i64 {
        *self.units.last().unwrap()
    }

    /// Unit index of a knot position.
    fn unit_of(&self, x: f64) -> i64 {
        let k = self
            .knots
            .iter()
            .position(|&k| (k - x).abs() < 1e-9)
            .expect("feature position must be a knot");
        self.units[k]
    }

    /// Physical coordinate of a (possibly fractional) unit coordinate.
    fn map(&self, u: f64) -> f64 {
        let n = self.knots.len() - 1;
        for i in 0..n {
            let (u0, u1) = (self.units[i] as f64, self.units[i + 1] as f64);
            if u <= u1 || i == n - 1 {
                return self.knots[i] + (u - u0) / (u1 - u0) * (self.knots[i + 1] - self.knots[i]);
            }
        }
        unreachable!()
    }
}

type Cell = (u32, i64, i64);

struct Quadtree {
    max_level: u32,
    /// units per root cell
    root: i64,
    leaves: BTreeSet<Cell>,
}

impl Quadtree {
    fn size(&self, level: u32) -> i64 {
        self.root >> level
    }

    fn bounds(&self, c: &Cell) -> (i64, i64, i64) {
        let s = self.size(c.0);
        (c.1 * s, c.2 * s, s)
    }

    /// Leaf containing unit cell (ux, uy).
    fn find(&self, ux: i64, uy: i64) -> Option<Cell> {
        for l in 0..=self.max_level {
            let shift = self.max_level - l;
            let c = (l, ux >> shift, uy >> shift);
            if self.leaves.contains(&c) {
                return Some(c);
            }
        }
        None
    }

    fn split(&mut self, c: Cell) {
        self.leaves.remove(&c);
        let (l, i, j) = c;
        for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            self.leaves.insert((l + 1, 2 * i + di, 2 * j + dj));
        }
    }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (qx, qy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
}

/// Generates the notched beam; `ell` is the phase-field length used for the
/// band-size check.
pub fn generate_senb(p: &SenbParams, ell: f64) -> Result<Mesh> {
    p.validate(ell)?;
    let len = p.total_length();
    let h = p.height;
    let mid = 0.5 * len;
    let xn = mid + p.notch_offset;
    let (nl, nr) = (xn - 0.5 * p.notch_width, xn + 0.5 * p.notch_width);
    let (sl, sr) = (mid - 0.5 * p.span, mid + 0.5 * p.span);
    let (cl, cr) = (mid - 0.5 * p.contact_width, mid + 0.5 * p.contact_width);
    let h0 = p.notch_depth;

    let max_level = (p.coarse_size / p.fine_size).log2().floor().max(0.0) as u32;
    let root = 1i64 << max_level;
    let xmap = AxisMap::new(vec![0.0, len, sl, sr, nl, nr, cl, cr, mid], p.fine_size, root);
    let mut yknots = vec![0.0, h];
    if h0 > 0.0 {
        yknots.push(h0);
    }
    let ymap = AxisMap::new(yknots, p.fine_size, root);

    let u_nl = xmap.unit_of(nl);
    let u_nr = xmap.unit_of(nr);
    let v_h0 = if h0 > 0.0 { ymap.unit_of(h0) } else { 0 };
    let v_top = ymap.total();
    let key_points: Vec<(i64, i64)> = vec![
        (xmap.unit_of(sl), 0),
        (xmap.unit_of(sr), 0),
        (xmap.unit_of(cl), v_top),
        (xmap.unit_of(cr), v_top),
        (xmap.unit_of(mid), v_top),
        (u_nl, 0),
        (u_nr, 0),
        (u_nl, v_h0),
        (u_nr, v_h0),
    ];

    let band_a = [xn, h0];
    let band_b = p.band_end.unwrap_or([xn, 0.75 * h]);
    let target = |x: f64, y: f64, half_diag: f64| -> f64 {
        let d = (segment_distance([x, y], band_a, band_b) - half_diag - p.band_half_width).max(0.0);
        if d <= 0.0 {
            p.fine_size
        } else {
            (p.fine_size + p.grading * d).min(p.coarse_size)
        }
    };

    // in notch: u in [u_nl, u_nr], v in [0, v_h0]
    let in_notch = |u0: i64, v0: i64, s: i64| -> (bool, bool) {
        let (u1, v1) = (u0 + s, v0 + s);
        let overlap = u0 < u_nr && u1 > u_nl && v0 < v_h0 && v1 > 0;
        let inside = u0 >= u_nl && u1 <= u_nr && v0 >= 0 && v1 <= v_h0;
        (inside, overlap && !inside)
    };

    let mut qt = Quadtree {
        max_level,
        root,
        leaves: BTreeSet::new(),
    };
    for i in 0..xmap.total() / root {
        for j in 0..ymap.total() / root {
            qt.leaves.insert((0, i, j));
        }
    }

    // refinement to target size and feature alignment
    let mut queue: Vec<Cell> = qt.leaves.iter().copied().collect();
    while let Some(c) = queue.pop() {
        if c.0 >= max_level {
            continue;
        }
        let (u0, v0, s) = qt.bounds(&c);
        let (inside, partial) = in_notch(u0, v0, s);
        if inside {
            continue;
        }
        let x0 = xmap.map(u0 as f64);
        let x1 = xmap.map((u0 + s) as f64);
        let y0 = ymap.map(v0 as f64);
        let y1 = ymap.map((v0 + s) as f64);
        let size = (x1 - x0).max(y1 - y0);
        let half_diag = 0.5 * ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
        let t = target(0.5 * (x0 + x1), 0.5 * (y0 + y1), half_diag);
        let key_inside = key_points.iter().any(|&(ku, kv)| {
            ku >= u0
                && ku <= u0 + s
                && kv >= v0
                && kv <= v0 + s
                && !((ku == u0 || ku == u0 + s) && (kv == v0 || kv == v0 + s))
        });
        if partial || key_inside || size > t * (1.0 + 1e-9) {
            qt.split(c);
            let (l, i, j) = c;
            for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                queue.push((l + 1, 2 * i + di, 2 * j + dj));
            }
        }
    }

    let is_void = |qt: &Quadtree, c: &Cell| {
        let (u0, v0, s) = qt.bounds(c);
        in_notch(u0, v0, s).0
    };
    let (nx, ny) = (xmap.total(), ymap.total());

    // 2:1 balance across edges
    loop {
        let mut to_split = Vec::new();
        for c in &qt.leaves {
            if c.0 + 1 >= max_level || is_void(&qt, c) {
                continue;
            }
            let (u0, v0, s) = qt.bounds(c);
            let mut probes = Vec::new();
            for k in 0..s {
                probes.push((u0 + k, v0 - 1));
                probes.push((u0 + k, v0 + s));
                probes.push((u0 - 1, v0 + k));
                probes.push((u0 + s, v0 + k));
            }
            let needs = probes.into_iter().any(|(pu, pv)| {
                if pu < 0 || pv < 0 || pu >= nx || pv >= ny {
                    return false;
                }
                match qt.find(pu, pv) {
                    Some(n) => n.0 > c.0 + 1 && !is_void(&qt, &n),
                    None => false,
                }
            });
            if needs {
                to_split.push(*c);
            }
        }
        if to_split.is_empty() {
            break;
        }
        for c in to_split {
            qt.split(c);
        }
    }

    let active: Vec<Cell> = qt.leaves.iter().filter(|c| !is_void(&qt, c)).copied().collect();
    // vertices in doubled unit coordinates
    let mut corners: BTreeSet<(i64, i64)> = BTreeSet::new();
    for c in &active {
        let (u0, v0, s) = qt.bounds(c);
        for (du, dv) in [(0, 0), (s, 0), (s, s), (0, s)] {
            corners.insert((2 * (u0 + du), 2 * (v0 + dv)));
        }
    }

    let mut ids: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut nodes: Vec<[f64; 3]> = Vec::new();
    let mut node_id = |key: (i64, i64), nodes: &mut Vec<[f64; 3]>| -> usize {
        *ids.entry(key).or_insert_with(|| {
            nodes.push([
                xmap.map(key.0 as f64 / 2.0),
                ymap.map(key.1 as f64 / 2.0),
                0.0,
            ]);
            nodes.len() - 1
        })
    };

    let mut elements = Vec::new();
    for c in &active {
        let (u0, v0, s) = qt.bounds(c);
        let (a0, b0, a1, b1) = (2 * u0, 2 * v0, 2 * (u0 + s), 2 * (v0 + s));
        let (am, bm) = (a0 + s, b0 + s);
        let ring_all = [
            ((a0, b0), true),
            ((am, b0), false),
            ((a1, b0), true),
            ((a1, bm), false),
            ((a1, b1), true),
            ((am, b1), false),
            ((a0, b1), true),
            ((a0, bm), false),
        ];
        let ring: Vec<(i64, i64)> = ring_all
            .iter()
            .filter(|(k, is_corner)| *is_corner || corners.contains(k))
            .map(|(k, _)| *k)
            .collect();
        if ring.len() == 4 {
            let n: Vec<usize> = ring.iter().map(|&k| node_id(k, &mut nodes)).collect();
            if (c.1 + c.2) % 2 == 0 {
                elements.push(tri(n[0], n[1], n[2]));
                elements.push(tri(n[0], n[2], n[3]));
            } else {
                elements.push(tri(n[0], n[1], n[3]));
                elements.push(tri(n[1], n[2], n[3]));
            }
        } else {
            let center = node_id((am, bm), &mut nodes);
            let n: Vec<usize> = ring.iter().map(|&k| node_id(k, &mut nodes)).collect();
            for k in 0..n.len() {
                elements.push(tri(n[k], n[(k + 1) % n.len()], center));
            }
        }
    }

    let find_node = |u: i64, v: i64| -> Result<usize> {
        ids.get(&(2 * u, 2 * v))
            .copied()
            .ok_or_else(|| Error::Mesh(format!("feature point at grid ({u}, {v}) is not a node")))
    };

    let mut node_sets = BTreeMap::new();
    node_sets.insert("left_support".to_string(), vec![find_node(xmap.unit_of(sl), 0)?]);
    node_sets.insert("right_support".to_string(), vec![find_node(xmap.unit_of(sr), 0)?]);
    node_sets.insert("ctod_left".to_string(), vec![find_node(u_nl, v_h0)?]);
    node_sets.insert("ctod_right".to_string(), vec![find_node(u_nr, v_h0)?]);
    node_sets.insert("cmod_left".to_string(), vec![find_node(u_nl, 0)?]);
    node_sets.insert("cmod_right".to_string(), vec![find_node(u_nr, 0)?]);

    let (ucl, ucr) = (2 * xmap.unit_of(cl), 2 * xmap.unit_of(cr));
    let mut load_nodes: Vec<usize> = ids
        .iter()
        .filter(|((a, b), _)| *b == 2 * v_top && *a >= ucl && *a <= ucr)
        .map(|(_, &i)| i)
        .collect();
    load_nodes.sort_unstable();
    node_sets.insert("load".to_string(), load_nodes);
    let mut tip_nodes: Vec<usize> = ids
        .iter()
        .filter(|((a, b), _)| *b == 2 * v_h0 && *a >= 2 * u_nl && *a <= 2 * u_nr)
        .map(|(_, &i)| i)
        .collect();
    tip_nodes.sort_unstable();
    node_sets.insert("notch_tip".to_string(), tip_nodes);

    // top edges inside the contact strip
    let (xcl, xcr) = (cl - 1e-9, cr + 1e-9);
    let mut load_faces = Vec::new();
    for (e, el) in elements.iter().enumerate() {
        for (f, face) in ElementKind::Tri3.faces().iter().enumerate() {
            let (a, b) = (nodes[el.nodes[face[0]]], nodes[el.nodes[face[1]]]);
            let on_top = (a[1] - h).abs() < 1e-9 && (b[1] - h).abs() < 1e-9;
            if on_top && a[0].min(b[0]) >= xcl && a[0].max(b[0]) <= xcr {
                load_faces.push((e, f));
            }
        }
    }
    let mut side_sets = BTreeMap::new();
    side_sets.insert("load".to_string(), load_faces);

    let mut attributes = BTreeMap::new();
    attributes.insert("height".to_string(), h);
    attributes.insert("span".to_string(), p.span);
    attributes.insert("notch_depth".to_string(), h0);
    attributes.insert("notch_x".to_string(), xn);
    attributes.insert("notch_width".to_string(), p.notch_width);
    attributes.insert("load_x".to_string(), mid);
    attributes.insert("ligament_length".to_string(), h - h0);
    attributes.insert("fine_size".to_string(), p.fine_size);

    let mesh = Mesh {
        dim: 2,
        nodes,
        elements,
        node_sets,
        side_sets,
        thickness: p.thickness,
        attributes,
    };
    mesh.validate()?;
    Ok(mesh)
}

fn tri(a: usize, b: usize, c: usize) -> Element {
    Element {
        kind: ElementKind::Tri3,
        nodes: vec![a, b, c],
    }
}

/// Straight 2D bar for uniaxial tension checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarParams {
    pub length: f64,
    pub height: f64,
    #[serde(default = "unit")]
    pub thickness: f64,
    pub size: f64,
    #[serde(default = "default_bar_kind")]
    pub kind: ElementKind,
}

fn unit() -> f64 {
    1.0
}

fn default_bar_kind() -> ElementKind {
    ElementKind::Quad4
}

pub fn generate_bar(p: &BarParams) -> Result<Mesh> {
    if !(p.length > 0.0 && p.height > 0.0 && p.size > 0.0) {
        return Err(Error::param("mesh.bar", "length, height and size must be > 0"));
    }
    let nx = (p.length / p.size - 1e-9).ceil().max(1.0) as usize;
    let ny = (p.height / p.size - 1e-9).ceil().max(1.0) as usize;
    let mut nodes = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([
                p.length * i as f64 / nx as f64,
                p.height * j as f64 / ny as f64,
                0.0,
            ]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            match p.kind {
                ElementKind::Quad4 => elements.push(Element {
                    kind: ElementKind::Quad4,
                    nodes: vec![a, b, c, d],
                }),
                ElementKind::Tri3 => {
                    if (i + j) % 2 == 0 {
                        elements.push(tri(a, b, c));
                        elements.push(tri(a, c, d));
                    } else {
                        elements.push(tri(a, b, d));
                        elements.push(tri(b, c, d));
                    }
                }
                ElementKind::Tet4 => {
                    return Err(Error::param("mesh.bar.kind", "a 2D bar needs tri3 or quad4"))
                }
            }
        }
    }
    let mut node_sets = BTreeMap::new();
    node_sets.insert("left".to_string(), (0..=ny).map(|j| id(0, j)).collect());
    node_sets.insert("right".to_string(), (0..=ny).map(|j| id(nx, j)).collect());
    node_sets.insert("origin".to_string(), vec![id(0, 0)]);
    let mut right_faces = Vec::new();
    for (e, el) in elements.iter().enumerate() {
        for (f, face) in el.kind.faces().iter().enumerate() {
            if face.iter().all(|&a| (nodes[el.nodes[a]][0] - p.length).abs() < 1e-9) {
                right_faces.push((e, f));
            }
        }
    }
    let mut side_sets = BTreeMap::new();
    side_sets.insert("right".to_string(), right_faces);
    let mut attributes = BTreeMap::new();
    attributes.insert("height".to_string(), p.height);
    attributes.insert("cross_section".to_string(), p.height * p.thickness);
    let mesh = Mesh {
        dim: 2,
        nodes,
        elements,
        node_sets,
        side_sets,
        thickness: p.thickness,
        attributes,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Prismatic 3D beam with a slanted notch cut from the top face, pulled along x.
///
/// Axes: x along the beam, y vertical, z across the width. The notch plane
/// contains the y axis and is rotated by `notch_angle_deg` about it. By
/// default the structured grid is sheared in the middle section so that the
/// notch is a clean layer of removed cells. With `cut_notch` the grid stays
/// orthogonal and the notch is the set of cells whose centre lies within
/// `notch_gap / 2` of the notch plane, so the ligament mesh carries no
/// preferred orientation. Each hexahedron is split into six tetrahedra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlantBeamParams {
    pub length: f64,
    pub height: f64,
    pub width: f64,
    pub notch_depth: f64,
    pub notch_gap: f64,
    #[serde(default = "default_angle")]
    pub notch_angle_deg: f64,
    /// Cell size in the sheared middle section.
    pub fine_size: f64,
    /// Cell size towards the loaded ends.
    pub coarse_size: f64,
    /// Half-length of the finely meshed middle section.
    pub middle_half_length: f64,
    /// Cut the notch out of an orthogonal grid instead of shearing the grid.
    #[serde(default)]
    pub cut_notch: bool,
}

fn default_angle() -> f64 {
    45.0
}

impl SlantBeamParams {
    pub fn desk_scale() -> Self {
        SlantBeamParams {
            length: 60.0,
            height: 12.0,
            width: 12.0,
            notch_depth: 3.0,
            notch_gap: 1.0,
            notch_angle_deg: 45.0,
            fine_size: 1.0,
            coarse_size: 3.0,
            middle_half_length: 12.0,
            cut_notch: false,
        }
    }
}

pub fn generate_slant_beam(p: &SlantBeamParams) -> Result<Mesh> {
    let t = p.notch_angle_deg.to_radians().tan();
    if !(p.length > 0.0 && p.height > 0.0 && p.width > 0.0) {
        return Err(Error::param("mesh.slant_beam", "dimensions must be > 0"));
    }
    if !(p.notch_depth > 0.0 && p.notch_depth < p.height) {
        return Err(Error::param("mesh.slant_beam.notch_depth", "must lie in (0, height)"));
    }
    let mid = 0.5 * p.length;
    let shear_reach = 0.5 * p.width * t.abs();
    if p.middle_half_length < shear_reach + p.notch_gap || mid - p.middle_half_length < shear_reach {
        return Err(Error::param(
            "mesh.slant_beam.middle_half_length",
            "middle section must contain the sheared notch and leave room for the transition",
        ));
    }

    let cell_extent = p.fine_size * (1.0 + t.abs()) / (1.0 + t * t).sqrt();
    if p.cut_notch && p.notch_gap < cell_extent {
        return Err(Error::param(
            "mesh.slant_beam.notch_gap",
            format!("a cut notch must be at least one cell wide across its plane ({cell_extent:.4})"),
        ));
    }

    // ξ grid: coarse | transition | fine middle (with notch layer) | transition | coarse
    let mut xi: Vec<f64> = Vec::new();
    let push_range = |xi: &mut Vec<f64>, a: f64, b: f64, size: f64| {
        let n = ((b - a) / size - 1e-9).ceil().max(1.0) as usize;
        for k in 0..n {
            xi.push(a + (b - a) * k as f64 / n as f64);
        }
    };
    let (m0, m1) = (mid - p.middle_half_length, mid + p.middle_half_length);
    let (g0, g1) = (mid - 0.5 * p.notch_gap, mid + 0.5 * p.notch_gap);
    push_range(&mut xi, 0.0, m0, p.coarse_size);
    if p.cut_notch {
        push_range(&mut xi, m0, m1, p.fine_size);
    } else {
        push_range(&mut xi, m0, g0, p.fine_size);
        push_range(&mut xi, g0, g1, p.notch_gap);
        push_range(&mut xi, g1, m1, p.fine_size);
    }
    push_range(&mut xi, m1, p.length, p.coarse_size);
    xi.push(p.length);

    let ny = (p.height / p.fine_size - 1e-9).ceil().max(1.0) as usize;
    let nz = (p.width / p.fine_size - 1e-9).ceil().max(1.0) as usize;
    let ys: Vec<f64> = (0..=ny).map(|j| p.height * j as f64 / ny as f64).collect();
    let zs: Vec<f64> = (0..=nz).map(|k| p.width * k as f64 / nz as f64).collect();
    let zc = 0.5 * p.width;
    let blend = shear_reach.max(p.fine_size) * 2.0;
    let shear = |x: f64| -> f64 {
        if p.cut_notch {
            return 0.0;
        }
        let d = (x - mid).abs();
        let inner = p.middle_half_length - blend;
        if d <= inner {
            1.0
        } else if d >= p.middle_half_length {
            0.0
        } else {
            let s = (p.middle_half_length - d) / blend;
            s * s * (3.0 - 2.0 * s)
        }
    };

    let nx = xi.len() - 1;
    let id = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut nodes = vec![[0.0; 3]; (nx + 1) * (ny + 1) * (nz + 1)];
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let x = xi[i] - shear(xi[i]) * t * (zs[k] - zc);
                nodes[id(i, j, k)] = [x, ys[j], zs[k]];
            }
        }
    }

    let y_notch = p.height - p.notch_depth;
    // signed distance from the notch plane x − mid + t (z − zc) = 0
    let plane_dist = |x: f64, z: f64| (x - mid + t * (z - zc)) / (1.0 + t * t).sqrt();
    let in_notch = |x: f64, z: f64| {
        if p.cut_notch {
            plane_dist(x, z).abs() <= 0.5 * p.notch_gap
        } else {
            x > g0 && x < g1
        }
    };
    let mut elements = Vec::new();
    // Kuhn subdivision: six tetrahedra sharing the 0-6 diagonal
    const KUHN: [[usize; 4]; 6] = [
        [0, 1, 2, 6],
        [0, 2, 3, 6],
        [0, 3, 7, 6],
        [0, 7, 4, 6],
        [0, 4, 5, 6],
        [0, 5, 1, 6],
    ];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let xc = 0.5 * (xi[i] + xi[i + 1]);
                let yc = 0.5 * (ys[j] + ys[j + 1]);
                let zcell = 0.5 * (zs[k] + zs[k + 1]);
                if yc > y_notch && in_notch(xc, zcell) {
                    continue;
                }
                let hex = [
                    id(i, j, k),
                    id(i + 1, j, k),
                    id(i + 1, j + 1, k),
                    id(i, j + 1, k),
                    id(i, j, k + 1),
                    id(i + 1, j, k + 1),
                    id(i + 1, j + 1, k + 1),
                    id(i, j + 1, k + 1),
                ];
                for t4 in KUHN {
                    let mut n = t4.map(|a| hex[a]);
                    if tet_volume(&nodes, &n) < 0.0 {
                        n.swap(1, 2);
                    }
                    elements.push(Element {
                        kind: ElementKind::Tet4,
                        nodes: n.to_vec(),
                    });
                }
            }
        }
    }

    // drop nodes inside the notch that no element references
    let mut used = vec![false; nodes.len()];
    for el in &elements {
        for &a in &el.nodes {
            used[a] = true;
        }
    }
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut kept = Vec::new();
    for (i, x) in nodes.iter().enumerate() {
        if used[i] {
            remap[i] = kept.len();
            kept.push(*x);
        }
    }
    for el in &mut elements {
        for a in &mut el.nodes {
            *a = remap[*a];
        }
    }
    let old_ids = |pred: &dyn Fn(usize, usize, usize) -> bool| -> Vec<usize> {
        let mut v = Vec::new();
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    if pred(i, j, k) && used[id(i, j, k)] {
                        v.push(remap[id(i, j, k)]);
                    }
                }
            }
        }
        v.sort_unstable();
        v
    };
    let i_g0 = xi.iter().position(|&x| (x - g0).abs() < 1e-9).unwrap_or(0);
    let i_g1 = xi.iter().position(|&x| (x - g1).abs() < 1e-9).unwrap_or(0);
    let j_notch = ys
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - y_notch).abs().partial_cmp(&(b.1 - y_notch).abs()).unwrap())
        .unwrap()
        .0;
    let mut node_sets = BTreeMap::new();
    node_sets.insert("left".to_string(), old_ids(&|i, _, _| i == 0));
    node_sets.insert("right".to_string(), old_ids(&|i, _, _| i == nx));
    node_sets.insert("corner".to_string(), old_ids(&|i, j, k| i == nx && j == ny && k == nz));
    let tip_band = 0.5 * p.notch_gap + p.fine_size;
    node_sets.insert(
        "notch_tip".to_string(),
        old_ids(&|i, j, k| {
            j == j_notch
                && if p.cut_notch {
                    plane_dist(xi[i], zs[k]).abs() <= tip_band
                } else {
                    i >= i_g0 && i <= i_g1
                }
        }),
    );

    let mut right_faces = Vec::new();
    for (e, el) in elements.iter().enumerate() {
        for (f, face) in ElementKind::Tet4.faces().iter().enumerate() {
            if face.iter().all(|&a| (kept[el.nodes[a]][0] - p.length).abs() < 1e-9) {
                right_faces.push((e, f));
            }
        }
    }
    let mut side_sets = BTreeMap::new();
    side_sets.insert("right".to_string(), right_faces);

    let mut attributes = BTreeMap::new();
    attributes.insert("height".to_string(), p.height);
    attributes.insert("width".to_string(), p.width);
    attributes.insert("notch_depth".to_string(), p.notch_depth);
    attributes.insert("notch_x".to_string(), mid);
    attributes.insert("notch_angle_deg".to_string(), p.notch_angle_deg);
    attributes.insert("ligament_length".to_string(), y_notch);
    attributes.insert("cross_section".to_string(), p.height * p.width);
    attributes.insert("fine_size".to_string(), p.fine_size);

    let mesh = Mesh {
        dim: 3,
        nodes: kept,
        elements,
        node_sets,
        side_sets,
        thickness: 1.0,
        attributes,
    };
    mesh.validate()?;
    Ok(mesh)
}

fn tet_volume(nodes: &[[f64; 3]], n: &[usize; 4]) -> f64 {
    let a = nodes[n[0]];
    let d = |k: usize| {
        let b = nodes[n[k]];
        [b[0] - a[0], b[1] - a[1], b[2] - a[2]]
    };
    let (u, v, w) = (d(1), d(2), d(3));
    (u[0] * (v[1] * w[2] - v[2] * w[1]) - u[1] * (v[0] * w[2] - v[2] * w[0])
        + u[2] * (v[0] * w[1] - v[1] * w[0]))
        / 6.0
}
