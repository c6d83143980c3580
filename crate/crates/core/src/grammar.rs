//! Labeled face-to-face gluing rules and derivations.
//!
//! A move glues a new solid onto a FREE face of an existing one. The new
//! solid always mates with its canonical face 0, and the move carries two
//! labels that fix the vertex correspondence between the mating face and
//! the host face:
//!
//! * `alignment` in `0..3` picks which host vertex receives mating vertex 0;
//! * `orientation` `+1` pairs the faces in reversed cyclic order (the proper
//!   placement), `-1` swaps two correspondence slots (the improper one).
//!
//! That gives 6 labeled rule applications per free face and added kind.
//! Because both solids are regular, all 6 labels place the same point set;
//! they differ only in how the new solid's vertices are labeled.

use std::fmt;
use std::str::FromStr;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_geom::{ExactScalar, Isometry, Mat3, Vec3};
use crate::frame::interiors_intersect;
use crate::polyhedra::{canonical_shape, FaceFrame, PolyError, ShapeKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("{kind} is not an initial shape of grammar {grammar}")]
    KindNotInGrammar { grammar: GrammarId, kind: ShapeKind },
    #[error("face {face} of shape {shape} is already used")]
    FaceOccupied { shape: usize, face: usize },
    #[error("move not applicable: {0}")]
    MoveNotApplicable(String),
    #[error("added solid would overlap shape {with}")]
    OverlapCreated { with: usize },
    #[error("host face is not an equilateral triangle of squared side 2")]
    DegenerateFace,
    #[error("invalid move: {0}")]
    InvalidMove(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

impl GrammarError {
    /// Short machine-readable name of the violated precondition.
    pub fn code(&self) -> &'static str {
        match self {
            GrammarError::KindNotInGrammar { .. } => "KindNotInGrammar",
            GrammarError::FaceOccupied { .. } => "FaceOccupied",
            GrammarError::MoveNotApplicable(_) => "MoveNotApplicable",
            GrammarError::OverlapCreated { .. } => "OverlapCreated",
            GrammarError::DegenerateFace => "DegenerateFace",
            GrammarError::InvalidMove(_) => "InvalidMove",
            GrammarError::Poly(_) => "IndexOutOfRange",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GrammarId {
    #[serde(rename = "TET_TET")]
    TetTet,
    #[serde(rename = "OCT_OCT")]
    OctOct,
    #[serde(rename = "TET_OCT")]
    TetOct,
}

impl GrammarId {
    pub const ALL: [GrammarId; 3] = [GrammarId::TetTet, GrammarId::OctOct, GrammarId::TetOct];

    pub fn as_str(self) -> &'static str {
        match self {
            GrammarId::TetTet => "TET_TET",
            GrammarId::OctOct => "OCT_OCT",
            GrammarId::TetOct => "TET_OCT",
        }
    }

    pub fn initial_kinds(self) -> &'static [ShapeKind] {
        match self {
            GrammarId::TetTet => &[ShapeKind::Tet],
            GrammarId::OctOct => &[ShapeKind::Oct],
            GrammarId::TetOct => &[ShapeKind::Tet, ShapeKind::Oct],
        }
    }

    /// Kinds that may be glued onto a host of `host_kind`.
    pub fn added_kinds(self, host_kind: ShapeKind, alternate: bool) -> &'static [ShapeKind] {
        match self {
            GrammarId::TetTet => &[ShapeKind::Tet],
            GrammarId::OctOct => &[ShapeKind::Oct],
            GrammarId::TetOct if alternate => match host_kind {
                ShapeKind::Tet => &[ShapeKind::Oct],
                ShapeKind::Oct => &[ShapeKind::Tet],
            },
            GrammarId::TetOct => &ShapeKind::ALL,
        }
    }
}

impl fmt::Display for GrammarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GrammarId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "tet" | "tet-tet" => Ok(GrammarId::TetTet),
            "oct" | "oct-oct" => Ok(GrammarId::OctOct),
            "tet-oct" | "oct-tet" => Ok(GrammarId::TetOct),
            _ => Err(format!("unknown grammar {s:?}")),
        }
    }
}

/// One labeled rule application.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawMove")]
pub struct Move {
    pub host_shape: usize,
    pub host_face: usize,
    pub kind: ShapeKind,
    pub alignment: u8,
    pub orientation: i8,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMove {
    host_shape: usize,
    host_face: usize,
    kind: ShapeKind,
    alignment: u8,
    orientation: i8,
}

impl TryFrom<RawMove> for Move {
    type Error = GrammarError;

    fn try_from(r: RawMove) -> Result<Self, Self::Error> {
        Move::new(
            r.host_shape,
            r.host_face,
            r.kind,
            r.alignment,
            r.orientation,
        )
    }
}

impl Move {
    /// The six `(alignment, orientation)` labels in enumeration order.
    pub const LABELS: [(u8, i8); 6] = [(0, 1), (0, -1), (1, 1), (1, -1), (2, 1), (2, -1)];

    pub fn new(
        host_shape: usize,
        host_face: usize,
        kind: ShapeKind,
        alignment: u8,
        orientation: i8,
    ) -> Result<Self, GrammarError> {
        if alignment > 2 {
            return Err(GrammarError::InvalidMove(format!(
                "alignment must be 0, 1 or 2 (got {alignment})"
            )));
        }
        if orientation != 1 && orientation != -1 {
            return Err(GrammarError::InvalidMove(format!(
                "orientation must be +1 or -1 (got {orientation})"
            )));
        }
        Ok(Move {
            host_shape,
            host_face,
            kind,
            alignment,
            orientation,
        })
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{}:{}/{}{}",
            self.host_shape,
            self.host_face,
            self.kind,
            self.alignment,
            if self.orientation > 0 { '+' } else { '-' }
        )
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FaceLabel {
    #[serde(rename = "FREE")]
    Free,
    #[serde(rename = "USED")]
    Used,
}

/// A solid placed by an isometry of its canonical pose.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolyShape {
    pub kind: ShapeKind,
    pub placement: Isometry,
    pub vertices: Vec<Vec3>,
    pub face_labels: Vec<FaceLabel>,
}

impl PolyShape {
    pub fn placed(kind: ShapeKind, placement: Isometry) -> Self {
        let mesh = canonical_shape(kind);
        let vertices = mesh.vertices.iter().map(|v| placement.apply(v)).collect();
        PolyShape {
            kind,
            placement,
            vertices,
            face_labels: vec![FaceLabel::Free; mesh.faces.len()],
        }
    }

    pub fn canonical(kind: ShapeKind) -> Self {
        PolyShape::placed(kind, Isometry::identity())
    }

    /// Face vertices ordered counterclockwise as seen from outside, starting
    /// at the lowest canonical vertex index. Improper placements reverse the
    /// stored cyclic order to keep that convention.
    pub fn face_indices(&self, face: usize) -> [usize; 3] {
        let f = canonical_shape(self.kind).faces[face];
        if self.placement.is_proper() {
            f
        } else {
            [f[0], f[2], f[1]]
        }
    }

    pub fn face_frame(&self, face: usize) -> Result<FaceFrame, PolyError> {
        let count = self.face_labels.len();
        if face >= count {
            return Err(PolyError::IndexOutOfRange { index: face, count });
        }
        Ok(FaceFrame::from_vertices(
            self.face_indices(face).map(|i| self.vertices[i].clone()),
        ))
    }

    pub fn centroid(&self) -> Vec3 {
        Vec3::centroid(&self.vertices)
    }

    pub fn sorted_vertices(&self) -> Vec<Vec3> {
        let mut v = self.vertices.clone();
        v.sort();
        v
    }

    pub fn free_faces(&self) -> impl Iterator<Item = usize> + '_ {
        self.face_labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == FaceLabel::Free)
            .map(|(i, _)| i)
    }

    pub fn transformed(&self, g: &Isometry) -> PolyShape {
        PolyShape {
            kind: self.kind,
            placement: g.compose(&self.placement),
            vertices: self.vertices.iter().map(|v| g.apply(v)).collect(),
            face_labels: self.face_labels.clone(),
        }
    }
}

/// Whether `apply_move` rejects overlapping placements.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApplyMode {
    #[default]
    Strict,
    CountOnly,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Design {
    pub grammar: GrammarId,
    pub alternate: bool,
    pub initial_kind: ShapeKind,
    pub trace: Vec<Move>,
    pub shapes: Vec<PolyShape>,
}

impl Design {
    pub fn all_vertices(&self) -> impl Iterator<Item = &Vec3> {
        self.shapes.iter().flat_map(|s| s.vertices.iter())
    }

    /// Applies `g` to every solid. The trace is kept unchanged, so the result
    /// is only replayable when `g` fixes the initial solid's labeling.
    pub fn transformed(&self, g: &Isometry) -> Design {
        Design {
            shapes: self.shapes.iter().map(|s| s.transformed(g)).collect(),
            ..self.clone()
        }
    }

    pub fn free_face_count(&self) -> usize {
        self.shapes.iter().map(|s| s.free_faces().count()).sum()
    }
}

pub fn initial_design(
    grammar: GrammarId,
    initial_kind: ShapeKind,
    alternate: bool,
) -> Result<Design, GrammarError> {
    if !grammar.initial_kinds().contains(&initial_kind) {
        return Err(GrammarError::KindNotInGrammar {
            grammar,
            kind: initial_kind,
        });
    }
    Ok(Design {
        grammar,
        alternate,
        initial_kind,
        trace: Vec::new(),
        shapes: vec![PolyShape::canonical(initial_kind)],
    })
}

/// A move together with whether strict application would succeed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CandidateMove {
    #[serde(rename = "move")]
    pub mv: Move,
    pub feasible: bool,
}

/// Every labeled move on every FREE face, ordered by
/// (shape, face, kind, alignment, orientation) with `+1` before `-1`.
pub fn applicable_moves(d: &Design) -> Vec<Move> {
    let mut out = Vec::new();
    for (si, shape) in d.shapes.iter().enumerate() {
        for face in shape.free_faces() {
            for &kind in d.grammar.added_kinds(shape.kind, d.alternate) {
                for (alignment, orientation) in Move::LABELS {
                    out.push(Move {
                        host_shape: si,
                        host_face: face,
                        kind,
                        alignment,
                        orientation,
                    });
                }
            }
        }
    }
    out
}

/// `applicable_moves` with a geometric feasibility flag per move.
pub fn candidate_moves(d: &Design) -> Vec<CandidateMove> {
    applicable_moves(d)
        .into_iter()
        .map(|mv| CandidateMove {
            mv,
            feasible: apply_move(d, &mv, ApplyMode::Strict).is_ok(),
        })
        .collect()
}

struct MatingSource {
    m0: Vec3,
    frame_inv: Mat3,
}

fn mating_source(kind: ShapeKind) -> &'static MatingSource {
    static TET: Lazy<MatingSource> = Lazy::new(|| build_source(ShapeKind::Tet));
    static OCT: Lazy<MatingSource> = Lazy::new(|| build_source(ShapeKind::Oct));
    match kind {
        ShapeKind::Tet => &TET,
        ShapeKind::Oct => &OCT,
    }
}

fn build_source(kind: ShapeKind) -> MatingSource {
    let fr = FaceFrame::from_vertices(canonical_shape(kind).face_vertices(0));
    let s1 = &fr.vertices[1] - &fr.vertices[0];
    let s2 = &fr.vertices[2] - &fr.vertices[0];
    let frame_inv = Mat3::from_columns(&s1, &s2, &fr.normal)
        .inverse()
        .expect("canonical face spans a plane");
    MatingSource {
        m0: fr.vertices[0].clone(),
        frame_inv,
    }
}

/// Host vertex slots receiving mating vertices 0, 1, 2.
pub fn correspondence(alignment: u8, orientation: i8) -> [usize; 3] {
    let a = alignment as usize;
    if orientation > 0 {
        [a, (a + 2) % 3, (a + 1) % 3]
    } else {
        [a, (a + 1) % 3, (a + 2) % 3]
    }
}

/// The isometry taking the canonical solid of `added_kind` to its glued
/// position: canonical face 0 lands on `host` under the labeled vertex
/// correspondence and the solid lies on the outward side of `host`.
///
/// `host` must list its vertices counterclockwise from outside the host
/// solid, so its normal points away from the host.
pub fn mating_isometry(
    host: &FaceFrame,
    added_kind: ShapeKind,
    alignment: u8,
    orientation: i8,
) -> Result<Isometry, GrammarError> {
    let two = ExactScalar::from_int(2);
    let h = &host.vertices;
    if h[0].dist2(&h[1]) != two || h[1].dist2(&h[2]) != two || h[2].dist2(&h[0]) != two {
        return Err(GrammarError::DegenerateFace);
    }
    if alignment > 2 || (orientation != 1 && orientation != -1) {
        return Err(GrammarError::InvalidMove(format!(
            "bad label ({alignment}, {orientation})"
        )));
    }
    let src = mating_source(added_kind);
    let slot = correspondence(alignment, orientation);
    let p0 = &h[slot[0]];
    let t1 = &h[slot[1]] - p0;
    let t2 = &h[slot[2]] - p0;
    let target = Mat3::from_columns(&t1, &t2, &-&host.normal);
    let q = target.mul(&src.frame_inv);
    let t = p0 - &q.mul_vec(&src.m0);
    Ok(Isometry::from_parts_unchecked(q, t, orientation))
}

pub fn apply_move(d: &Design, m: &Move, mode: ApplyMode) -> Result<Design, GrammarError> {
    let host = d.shapes.get(m.host_shape).ok_or_else(|| {
        GrammarError::MoveNotApplicable(format!(
            "host shape {} does not exist (design has {})",
            m.host_shape,
            d.shapes.len()
        ))
    })?;
    if m.host_face >= host.face_labels.len() {
        return Err(GrammarError::MoveNotApplicable(format!(
            "host face {} does not exist ({} has {} faces)",
            m.host_face,
            host.kind,
            host.face_labels.len()
        )));
    }
    if !d
        .grammar
        .added_kinds(host.kind, d.alternate)
        .contains(&m.kind)
    {
        return Err(GrammarError::MoveNotApplicable(format!(
            "{} may not be glued onto {} in grammar {}",
            m.kind, host.kind, d.grammar
        )));
    }
    if host.face_labels[m.host_face] == FaceLabel::Used {
        return Err(GrammarError::FaceOccupied {
            shape: m.host_shape,
            face: m.host_face,
        });
    }
    let frame = host.face_frame(m.host_face)?;
    let placement = mating_isometry(&frame, m.kind, m.alignment, m.orientation)?;
    let mut added = PolyShape::placed(m.kind, placement);
    if mode == ApplyMode::Strict {
        if let Some(with) = d.shapes.iter().position(|s| interiors_intersect(s, &added)) {
            return Err(GrammarError::OverlapCreated { with });
        }
    }
    added.face_labels[0] = FaceLabel::Used;
    let mut next = d.clone();
    next.shapes[m.host_shape].face_labels[m.host_face] = FaceLabel::Used;
    next.shapes.push(added);
    next.trace.push(*m);
    Ok(next)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("step {step}: {error}")]
pub struct ReplayError {
    pub step: usize,
    pub error: GrammarError,
}

/// Rebuilds a design from its initial shape and move trace.
pub fn replay(
    grammar: GrammarId,
    initial_kind: ShapeKind,
    alternate: bool,
    trace: &[Move],
    mode: ApplyMode,
) -> Result<Design, ReplayError> {
    let mut d = initial_design(grammar, initial_kind, alternate)
        .map_err(|error| ReplayError { step: 0, error })?;
    for (i, m) in trace.iter().enumerate() {
        d = apply_move(&d, m, mode).map_err(|error| ReplayError { step: i + 1, error })?;
    }
    Ok(d)
}

/// The move that reproduces `mv` on a design transformed by `g`, where `g`
/// fixes the initial solid. Improper `g` reverse every face's vertex order,
/// which flips the orientation label and mirrors the alignment.
pub fn transport_move(mv: &Move, g: &Isometry) -> Move {
    if g.is_proper() {
        *mv
    } else {
        Move {
            alignment: (3 - mv.alignment) % 3,
            orientation: -mv.orientation,
            ..*mv
        }
    }
}

/// A design as read back from JSON. Only the trace is trusted; recorded
/// shapes, when present, must match what the trace rebuilds.
#[derive(Clone, Debug, Deserialize)]
pub struct DesignRecord {
    pub grammar: GrammarId,
    #[serde(default)]
    pub alternate: bool,
    pub initial_kind: ShapeKind,
    #[serde(default)]
    pub trace: Vec<Move>,
    #[serde(default)]
    pub shapes: Option<serde_json::Value>,
}

#[derive(Debug, Error)]
pub enum DesignDecodeError {
    #[error("malformed design JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("recorded shapes differ from the ones rebuilt from the trace")]
    ShapesMismatch,
}

impl DesignRecord {
    pub fn rebuild(&self) -> Result<Design, DesignDecodeError> {
        let d = replay(
            self.grammar,
            self.initial_kind,
            self.alternate,
            &self.trace,
            ApplyMode::Strict,
        )?;
        if let Some(recorded) = &self.shapes {
            if *recorded != serde_json::to_value(&d.shapes)? {
                return Err(DesignDecodeError::ShapesMismatch);
            }
        }
        Ok(d)
    }
}

pub fn design_from_json(text: &str) -> Result<Design, DesignDecodeError> {
    serde_json::from_str::<DesignRecord>(text)?.rebuild()
}
