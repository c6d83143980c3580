//! Space-frame extraction and exact overlap testing.
//!
//! A frame is the node/strut graph of a design: every solid vertex becomes a
//! pin joint (coincident vertices merged exactly) and every solid edge an
//! axial member (shared edges counted once).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use num_integer::Integer;
use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_geom::{ExactScalar, Vec3};
use crate::grammar::{Design, PolyShape};
use crate::polyhedra::{canonical_shape, point_group, FaceFrame, ShapeKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("invalid design: {0}")]
    InvalidDesign(String),
}

/// Face normal directions and edge directions of a canonical solid, each
/// listed once up to sign.
struct AxisSource {
    normals: Vec<Vec3>,
    edge_dirs: Vec<Vec3>,
}

fn dedupe_up_to_sign(dirs: impl Iterator<Item = Vec3>) -> Vec<Vec3> {
    let mut out: Vec<Vec3> = Vec::new();
    for d in dirs {
        let neg = -&d;
        if !out.iter().any(|e| *e == d || *e == neg) {
            out.push(d);
        }
    }
    out
}

fn axis_source(kind: ShapeKind) -> &'static AxisSource {
    fn build(kind: ShapeKind) -> AxisSource {
        let mesh = canonical_shape(kind);
        let normals = dedupe_up_to_sign(
            (0..mesh.faces.len()).map(|f| FaceFrame::from_vertices(mesh.face_vertices(f)).normal),
        );
        let edge_dirs = dedupe_up_to_sign(
            mesh.edges
                .iter()
                .map(|&(a, b)| &mesh.vertices[b] - &mesh.vertices[a]),
        );
        AxisSource { normals, edge_dirs }
    }
    static TET: Lazy<AxisSource> = Lazy::new(|| build(ShapeKind::Tet));
    static OCT: Lazy<AxisSource> = Lazy::new(|| build(ShapeKind::Oct));
    match kind {
        ShapeKind::Tet => &TET,
        ShapeKind::Oct => &OCT,
    }
}

fn projection_range(points: &[Vec3], axis: &Vec3) -> (ExactScalar, ExactScalar) {
    let mut it = points.iter().map(|p| p.dot(axis));
    let first = it.next().expect("non-empty solid");
    it.fold((first.clone(), first), |(lo, hi), x| {
        if x < lo {
            (x, hi)
        } else if x > hi {
            (lo, x)
        } else {
            (lo, hi)
        }
    })
}

fn separated_along(a: &[Vec3], b: &[Vec3], axis: &Vec3) -> bool {
    let (alo, ahi) = projection_range(a, axis);
    let (blo, bhi) = projection_range(b, axis);
    ahi <= blo || bhi <= alo
}

/// Upper bound on the squared distance from centroid to any vertex.
fn circumradius_bound(kind: ShapeKind) -> ExactScalar {
    // TET: √3/2 ≤ 7/8; OCT: exactly 1
    match kind {
        ShapeKind::Tet => ExactScalar::ratio(7, 8),
        ShapeKind::Oct => ExactScalar::one(),
    }
}

/// True iff the interiors of the two convex solids share a point.
///
/// Exact separating-axis test over both solids' face normals and the cross
/// products of their edge directions. Touching along a face, edge or vertex
/// counts as separated.
pub fn interiors_intersect(a: &PolyShape, b: &PolyShape) -> bool {
    let ca = a.centroid();
    let cb = b.centroid();
    let reach = circumradius_bound(a.kind) + circumradius_bound(b.kind);
    if ca.dist2(&cb) >= &reach * &reach {
        return false;
    }
    let sa = axis_source(a.kind);
    let sb = axis_source(b.kind);
    let (va, vb) = (&a.vertices, &b.vertices);
    let normals = sa
        .normals
        .iter()
        .map(|n| a.placement.apply_linear(n))
        .chain(sb.normals.iter().map(|n| b.placement.apply_linear(n)));
    for axis in normals {
        if separated_along(va, vb, &axis) {
            return false;
        }
    }
    let ea: Vec<Vec3> = sa
        .edge_dirs
        .iter()
        .map(|e| a.placement.apply_linear(e))
        .collect();
    let eb: Vec<Vec3> = sb
        .edge_dirs
        .iter()
        .map(|e| b.placement.apply_linear(e))
        .collect();
    for x in &ea {
        for y in &eb {
            let axis = x.cross(y);
            if axis.is_zero() {
                continue;
            }
            if separated_along(va, vb, &axis) {
                return false;
            }
        }
    }
    true
}

/// True iff every vertex is an integer point with even coordinate sum.
pub fn fcc_residency(d: &Design) -> bool {
    d.all_vertices().all(|p| {
        p.components().iter().all(|c| c.is_integer())
            && (p.x.numer() + p.y.numer() + p.z.numer()).is_even()
    })
}

/// `fcc_residency` in the root solid's own embedding. The canonical OCT has
/// odd-sum vertices, so OCT-rooted designs are first shifted by (1, 0, 0).
pub fn rooted_fcc_residency(d: &Design) -> bool {
    match d.initial_kind {
        ShapeKind::Tet => fcc_residency(d),
        ShapeKind::Oct => d.all_vertices().all(|p| {
            p.components().iter().all(|c| c.is_integer())
                && (p.x.numer() + p.y.numer() + p.z.numer()).is_odd()
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameGraph {
    pub nodes: Vec<Vec3>,
    pub struts: Vec<(usize, usize)>,
    /// Physical edge length in meters; `None` means lattice units.
    pub scale: Option<ScaleMeters>,
}

/// Edge length in meters, kept as text so the graph stays `Eq`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaleMeters(String);

impl ScaleMeters {
    pub fn new(meters: f64) -> Option<Self> {
        (meters.is_finite() && meters > 0.0).then(|| ScaleMeters(format!("{meters}")))
    }

    pub fn meters(&self) -> f64 {
        self.0.parse().unwrap_or(1.0)
    }
}

impl FrameGraph {
    /// Merges exactly coincident points and deduplicates segments.
    /// Nodes keep first-appearance order; struts are sorted index pairs.
    pub fn from_segments<'a>(
        points: impl IntoIterator<Item = &'a Vec3>,
        segments: impl IntoIterator<Item = (&'a Vec3, &'a Vec3)>,
    ) -> FrameGraph {
        let mut index: HashMap<Vec3, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut id = |p: &Vec3, nodes: &mut Vec<Vec3>| -> usize {
            *index.entry(p.clone()).or_insert_with(|| {
                nodes.push(p.clone());
                nodes.len() - 1
            })
        };
        for p in points {
            id(p, &mut nodes);
        }
        let mut struts = BTreeSet::new();
        for (p, q) in segments {
            let (i, j) = (id(p, &mut nodes), id(q, &mut nodes));
            if i != j {
                struts.insert((i.min(j), i.max(j)));
            }
        }
        FrameGraph {
            nodes,
            struts: struts.into_iter().collect(),
            scale: None,
        }
    }

    pub fn with_scale(mut self, scale: Option<ScaleMeters>) -> Self {
        self.scale = scale;
        self
    }

    /// Re-extracts the graph from its own nodes and struts.
    pub fn rebuilt(&self) -> FrameGraph {
        FrameGraph::from_segments(
            &self.nodes,
            self.struts
                .iter()
                .map(|&(i, j)| (&self.nodes[i], &self.nodes[j])),
        )
        .with_scale(self.scale.clone())
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for &(i, j) in &self.struts {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(i, j) in &self.struts {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    fn obj_factor(&self) -> f64 {
        self.scale
            .as_ref()
            .map_or(1.0, |s| s.meters() / std::f64::consts::SQRT_2)
    }

    /// Wavefront OBJ with `v` lines (9 decimals) and 1-based `l` lines.
    pub fn to_obj(&self) -> String {
        let k = self.obj_factor();
        let mut out = String::new();
        let unit = match &self.scale {
            Some(s) => format!("meters (edge length {} m)", s.meters()),
            None => "lattice units (edge length sqrt 2)".to_string(),
        };
        let _ = writeln!(out, "# radiogram space frame");
        let _ = writeln!(out, "# units: {unit}");
        let _ = writeln!(
            out,
            "# nodes {} struts {}",
            self.nodes.len(),
            self.struts.len()
        );
        let _ = writeln!(out, "o frame");
        for p in &self.nodes {
            let [x, y, z] = p.to_f64();
            let _ = writeln!(out, "v {:.9} {:.9} {:.9}", x * k, y * k, z * k);
        }
        for &(i, j) in &self.struts {
            let _ = writeln!(out, "l {} {}", i + 1, j + 1);
        }
        out
    }

    pub fn to_doc(&self) -> FrameDoc {
        FrameDoc {
            nodes: self
                .nodes
                .iter()
                .map(|p| NodeDoc {
                    exact: p.clone(),
                    approx: p.to_f64().map(round_significant),
                })
                .collect(),
            struts: self.struts.iter().map(|&(i, j)| [i, j]).collect(),
            scale_m: self.scale.as_ref().map(ScaleMeters::meters),
        }
    }
}

/// Rounds to 9 significant digits.
pub fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub exact: Vec3,
    pub approx: [f64; 3],
}

/// JSON form of a frame: exact node coordinates with float approximations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameDoc {
    pub nodes: Vec<NodeDoc>,
    pub struts: Vec<[usize; 2]>,
    pub scale_m: Option<f64>,
}

fn check_overlaps(d: &Design) -> Result<(), FrameError> {
    for i in 0..d.shapes.len() {
        for j in i + 1..d.shapes.len() {
            if interiors_intersect(&d.shapes[i], &d.shapes[j]) {
                return Err(FrameError::InvalidDesign(format!(
                    "shapes {i} and {j} overlap"
                )));
            }
        }
    }
    Ok(())
}

pub fn extract_frame(d: &Design) -> Result<FrameGraph, FrameError> {
    if d.shapes.is_empty() {
        return Err(FrameError::InvalidDesign("design has no shapes".into()));
    }
    check_overlaps(d)?;
    Ok(frame_unchecked(d))
}

/// Node/strut union without the overlap check.
pub(crate) fn frame_unchecked(d: &Design) -> FrameGraph {
    let segments = d.shapes.iter().flat_map(|s| {
        canonical_shape(s.kind)
            .edges
            .iter()
            .map(move |&(a, b)| (&s.vertices[a], &s.vertices[b]))
    });
    FrameGraph::from_segments(d.all_vertices(), segments)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameStats {
    pub node_count: usize,
    pub strut_count: usize,
    pub degree_histogram: BTreeMap<usize, usize>,
    pub connected: bool,
    pub bbox_min: Vec3,
    pub bbox_max: Vec3,
    pub chiral: bool,
    pub point_group_order: usize,
}

pub fn frame_stats(g: &FrameGraph) -> Result<FrameStats, FrameError> {
    if g.nodes.is_empty() {
        return Err(FrameError::InvalidDesign("empty frame".into()));
    }
    let mut degree_histogram = BTreeMap::new();
    for d in g.degrees() {
        *degree_histogram.entry(d).or_insert(0) += 1;
    }
    let mut lo = g.nodes[0].clone();
    let mut hi = g.nodes[0].clone();
    for p in &g.nodes {
        for (l, (h, c)) in [&mut lo.x, &mut lo.y, &mut lo.z].into_iter().zip(
            [&mut hi.x, &mut hi.y, &mut hi.z]
                .into_iter()
                .zip(p.components()),
        ) {
            if c < l {
                *l = c.clone();
            }
            if c > h {
                *h = c.clone();
            }
        }
    }
    let group = point_group(&g.nodes, Some(&g.struts), true);
    Ok(FrameStats {
        node_count: g.nodes.len(),
        strut_count: g.struts.len(),
        degree_histogram,
        connected: g.is_connected(),
        bbox_min: lo,
        bbox_max: hi,
        chiral: !group.has_improper(),
        point_group_order: group.order(),
    })
}
