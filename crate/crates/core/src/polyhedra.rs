//! Canonical tetrahedron and octahedron, their combinatorics, and brute-force
//! symmetry groups.
//!
//! Both solids have edge length √2 in lattice units so that every vertex is
//! an integer point:
//!
//! * TET: `(0,0,0) (1,1,0) (1,0,1) (0,1,1)`
//! * OCT: `(±1,0,0) (0,±1,0) (0,0,±1)`
//!
//! Faces are listed in lexicographic order of their sorted vertex-index
//! triple and each face starts at its lowest vertex index, continuing
//! counterclockwise as seen from outside the solid.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_geom::{cmp_isometry, ExactScalar, Isometry, Mat3, Vec3};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("face index {index} out of range (solid has {count} faces)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("unknown shape kind {0:?}")]
    UnknownKind(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShapeKind {
    #[serde(rename = "TET")]
    Tet,
    #[serde(rename = "OCT")]
    Oct,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 2] = [ShapeKind::Tet, ShapeKind::Oct];

    pub fn face_count(self) -> usize {
        match self {
            ShapeKind::Tet => 4,
            ShapeKind::Oct => 8,
        }
    }

    pub fn vertex_count(self) -> usize {
        match self {
            ShapeKind::Tet => 4,
            ShapeKind::Oct => 6,
        }
    }

    pub fn edge_count(self) -> usize {
        match self {
            ShapeKind::Tet => 6,
            ShapeKind::Oct => 12,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ShapeKind::Tet => "TET",
            ShapeKind::Oct => "OCT",
        }
    }

    pub fn other(self) -> ShapeKind {
        match self {
            ShapeKind::Tet => ShapeKind::Oct,
            ShapeKind::Oct => ShapeKind::Tet,
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShapeKind {
    type Err = PolyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tet" | "tetrahedron" => Ok(ShapeKind::Tet),
            "oct" | "octahedron" => Ok(ShapeKind::Oct),
            _ => Err(PolyError::UnknownKind(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CanonicalMesh {
    pub kind: ShapeKind,
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    #[serde(skip)]
    pub edges: Vec<(usize, usize)>,
}

impl CanonicalMesh {
    pub fn centroid(&self) -> Vec3 {
        Vec3::centroid(&self.vertices)
    }

    pub fn face_vertices(&self, face: usize) -> [Vec3; 3] {
        self.faces[face].map(|i| self.vertices[i].clone())
    }
}

/// The three vertices of a triangle together with its unnormalized normal
/// `(v1 − v0) × (v2 − v0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceFrame {
    pub vertices: [Vec3; 3],
    pub normal: Vec3,
}

impl FaceFrame {
    pub fn from_vertices(vertices: [Vec3; 3]) -> Self {
        let normal = (&vertices[1] - &vertices[0]).cross(&(&vertices[2] - &vertices[0]));
        FaceFrame { vertices, normal }
    }

    pub fn origin(&self) -> &Vec3 {
        &self.vertices[0]
    }

    /// Signed side of `p` relative to the face plane: positive on the
    /// normal side.
    pub fn side(&self, p: &Vec3) -> i32 {
        (p - &self.vertices[0]).dot(&self.normal).signum()
    }
}

fn build_mesh(kind: ShapeKind, vertices: Vec<Vec3>) -> CanonicalMesh {
    let n = vertices.len();
    let centroid = Vec3::centroid(&vertices);
    let mut faces = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let frame = FaceFrame::from_vertices([
                    vertices[i].clone(),
                    vertices[j].clone(),
                    vertices[k].clone(),
                ]);
                if frame.normal.is_zero() {
                    continue;
                }
                // supporting plane: every other vertex strictly on one side
                let sides: Vec<i32> = (0..n)
                    .filter(|&m| m != i && m != j && m != k)
                    .map(|m| frame.side(&vertices[m]))
                    .collect();
                let all_neg = sides.iter().all(|&s| s < 0);
                let all_pos = sides.iter().all(|&s| s > 0);
                if !(all_neg || all_pos) {
                    continue;
                }
                if frame.side(&centroid) < 0 {
                    faces.push([i, j, k]);
                } else {
                    faces.push([i, k, j]);
                }
            }
        }
    }
    let mut edges: Vec<(usize, usize)> = faces
        .iter()
        .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    CanonicalMesh {
        kind,
        vertices,
        faces,
        edges,
    }
}

static TET_MESH: Lazy<CanonicalMesh> = Lazy::new(|| {
    build_mesh(
        ShapeKind::Tet,
        vec![
            Vec3::from_ints(0, 0, 0),
            Vec3::from_ints(1, 1, 0),
            Vec3::from_ints(1, 0, 1),
            Vec3::from_ints(0, 1, 1),
        ],
    )
});

static OCT_MESH: Lazy<CanonicalMesh> = Lazy::new(|| {
    build_mesh(
        ShapeKind::Oct,
        vec![
            Vec3::from_ints(1, 0, 0),
            Vec3::from_ints(-1, 0, 0),
            Vec3::from_ints(0, 1, 0),
            Vec3::from_ints(0, -1, 0),
            Vec3::from_ints(0, 0, 1),
            Vec3::from_ints(0, 0, -1),
        ],
    )
});

pub fn canonical_shape(kind: ShapeKind) -> &'static CanonicalMesh {
    match kind {
        ShapeKind::Tet => &TET_MESH,
        ShapeKind::Oct => &OCT_MESH,
    }
}

pub fn face_frame(mesh: &CanonicalMesh, face_index: usize) -> Result<FaceFrame, PolyError> {
    if face_index >= mesh.faces.len() {
        return Err(PolyError::IndexOutOfRange {
            index: face_index,
            count: mesh.faces.len(),
        });
    }
    Ok(FaceFrame::from_vertices(mesh.face_vertices(face_index)))
}

/// A finite group of isometries. The identity is always listed first,
/// followed by the remaining proper elements and then the improper ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetryGroup {
    pub elements: Vec<Isometry>,
}

impl SymmetryGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, g: &Isometry) -> bool {
        self.elements.iter().any(|e| e == g)
    }

    pub fn proper(&self) -> SymmetryGroup {
        SymmetryGroup {
            elements: self
                .elements
                .iter()
                .filter(|g| g.is_proper())
                .cloned()
                .collect(),
        }
    }

    pub fn has_improper(&self) -> bool {
        self.elements.iter().any(|g| !g.is_proper())
    }

    /// Exact check of identity, closure and inverses.
    pub fn satisfies_group_axioms(&self) -> bool {
        let set: HashSet<&Isometry> = self.elements.iter().collect();
        if !set.contains(&Isometry::identity()) {
            return false;
        }
        for a in &self.elements {
            if !set.contains(&a.inverse()) {
                return false;
            }
            for b in &self.elements {
                if !set.contains(&a.compose(b)) {
                    return false;
                }
            }
        }
        true
    }
}

/// All isometries fixing the centroid that permute `points` (and `edges`,
/// when given, as unordered index pairs).
///
/// Brute force: a basis triple of centroid offsets is matched against every
/// ordered image triple with the same exact pairwise squared distances; the
/// resulting linear map is kept when it is orthogonal and permutes the
/// configuration. Returns an empty group for configurations that do not span
/// three dimensions around their centroid.
pub fn point_group(
    points: &[Vec3],
    edges: Option<&[(usize, usize)]>,
    include_reflections: bool,
) -> SymmetryGroup {
    if points.len() < 4 {
        return SymmetryGroup { elements: vec![] };
    }
    let center = Vec3::centroid(points);
    let offsets: Vec<Vec3> = points.iter().map(|p| p - &center).collect();
    let n = points.len();

    let mut basis = None;
    'outer: for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let m = Mat3::from_columns(&offsets[a], &offsets[b], &offsets[c]);
                if let Some(inv) = m.inverse() {
                    basis = Some(([a, b, c], inv));
                    break 'outer;
                }
            }
        }
    }
    let Some(([a, b, c], basis_inv)) = basis else {
        return SymmetryGroup { elements: vec![] };
    };

    let point_set: HashSet<&Vec3> = points.iter().collect();
    let edge_set: Option<HashSet<(Vec3, Vec3)>> = edges.map(|es| {
        es.iter()
            .map(|&(i, j)| ordered_pair(points[i].clone(), points[j].clone()))
            .collect()
    });
    let norms: Vec<ExactScalar> = offsets.iter().map(Vec3::norm2).collect();
    let dab = points[a].dist2(&points[b]);
    let dac = points[a].dist2(&points[c]);
    let dbc = points[b].dist2(&points[c]);

    let mut elements = Vec::new();
    for i in 0..n {
        if norms[i] != norms[a] {
            continue;
        }
        for j in 0..n {
            if j == i || norms[j] != norms[b] || points[i].dist2(&points[j]) != dab {
                continue;
            }
            for k in 0..n {
                if k == i || k == j || norms[k] != norms[c] {
                    continue;
                }
                if points[i].dist2(&points[k]) != dac || points[j].dist2(&points[k]) != dbc {
                    continue;
                }
                let target = Mat3::from_columns(&offsets[i], &offsets[j], &offsets[k]);
                let q = target.mul(&basis_inv);
                let Ok(g) = Isometry::about(q, &center) else {
                    continue;
                };
                if !include_reflections && !g.is_proper() {
                    continue;
                }
                if !points.iter().all(|p| point_set.contains(&g.apply(p))) {
                    continue;
                }
                if let Some(es) = &edge_set {
                    let ok = es
                        .iter()
                        .all(|(p, q)| es.contains(&ordered_pair(g.apply(p), g.apply(q))));
                    if !ok {
                        continue;
                    }
                }
                elements.push(g);
            }
        }
    }
    sort_group_elements(&mut elements);
    SymmetryGroup { elements }
}

fn ordered_pair(p: Vec3, q: Vec3) -> (Vec3, Vec3) {
    if p <= q {
        (p, q)
    } else {
        (q, p)
    }
}

fn sort_group_elements(elements: &mut [Isometry]) {
    let id = Isometry::identity();
    elements.sort_by(|x, y| (x != &id).cmp(&(y != &id)).then_with(|| cmp_isometry(x, y)));
}

pub fn symmetry_group(mesh: &CanonicalMesh, include_reflections: bool) -> SymmetryGroup {
    point_group(&mesh.vertices, Some(&mesh.edges), include_reflections)
}

static TET_GROUP: Lazy<SymmetryGroup> =
    Lazy::new(|| symmetry_group(canonical_shape(ShapeKind::Tet), true));
static OCT_GROUP: Lazy<SymmetryGroup> =
    Lazy::new(|| symmetry_group(canonical_shape(ShapeKind::Oct), true));

/// Full (proper and improper) symmetry group of the canonical solid, cached.
pub fn canonical_symmetries(kind: ShapeKind) -> &'static SymmetryGroup {
    match kind {
        ShapeKind::Tet => &TET_GROUP,
        ShapeKind::Oct => &OCT_GROUP,
    }
}

/// Permutation of face indices induced by a symmetry of the canonical solid.
pub fn face_permutation(kind: ShapeKind, g: &Isometry) -> Option<Vec<usize>> {
    let mesh = canonical_shape(kind);
    let keyed: Vec<Vec<Vec3>> = (0..mesh.faces.len())
        .map(|f| sorted(mesh.face_vertices(f).to_vec()))
        .collect();
    (0..mesh.faces.len())
        .map(|f| {
            let image = sorted(mesh.face_vertices(f).iter().map(|p| g.apply(p)).collect());
            keyed.iter().position(|k| *k == image)
        })
        .collect()
}

fn sorted(mut v: Vec<Vec3>) -> Vec<Vec3> {
    v.sort();
    v
}
