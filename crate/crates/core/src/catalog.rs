//! Exhaustive enumeration, canonical keys, mirror twins and the uniqueness
//! ladder.
//!
//! Designs are compared on four nested levels:
//!
//! | level | equal when                                              |
//! |-------|---------------------------------------------------------|
//! | L0    | same labeled derivation trace                           |
//! | L1    | same exact solids in space                              |
//! | L2    | related by a proper rigid motion                        |
//! | L3    | related by any isometry, reflections included           |
//!
//! Each level exists in a label-blind variant (a solid is its kind plus its
//! vertex set) and a label-sensitive one (a solid is its kind plus its
//! vertices in canonical label order, i.e. its placement isometry).
//!
//! L2/L3 keys are computed by anchor normalization: every solid of a chosen
//! anchor kind is moved onto the canonical pose by each admissible isometry
//! and the lexicographically smallest resulting description is kept.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::exact_geom::{reflection_through_plane, ExactScalar, Isometry, Vec3};
use crate::frame::frame_unchecked;
use crate::grammar::{
    applicable_moves, apply_move, initial_design, mating_isometry, ApplyMode, Design, GrammarError,
    GrammarId, Move, PolyShape,
};
use crate::polyhedra::{
    canonical_shape, canonical_symmetries, point_group, ShapeKind, SymmetryGroup,
};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EquivalenceLevel {
    #[serde(rename = "L0_LABELED")]
    L0Labeled,
    #[serde(rename = "L1_GEOMETRY")]
    L1Geometry,
    #[serde(rename = "L2_PROPER_CONGRUENCE")]
    L2ProperCongruence,
    #[serde(rename = "L3_FULL_CONGRUENCE")]
    L3FullCongruence,
}

impl EquivalenceLevel {
    pub const ALL: [EquivalenceLevel; 4] = [
        EquivalenceLevel::L0Labeled,
        EquivalenceLevel::L1Geometry,
        EquivalenceLevel::L2ProperCongruence,
        EquivalenceLevel::L3FullCongruence,
    ];

    pub fn short(self) -> &'static str {
        match self {
            EquivalenceLevel::L0Labeled => "l0",
            EquivalenceLevel::L1Geometry => "l1",
            EquivalenceLevel::L2ProperCongruence => "l2",
            EquivalenceLevel::L3FullCongruence => "l3",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for EquivalenceLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l0" | "l0_labeled" => Ok(EquivalenceLevel::L0Labeled),
            "l1" | "l1_geometry" => Ok(EquivalenceLevel::L1Geometry),
            "l2" | "l2_proper_congruence" => Ok(EquivalenceLevel::L2ProperCongruence),
            "l3" | "l3_full_congruence" => Ok(EquivalenceLevel::L3FullCongruence),
            _ => Err(format!("unknown equivalence level {s:?}")),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    Blind,
    Sensitive,
}

/// Canonical serialization of a design at one level; equal keys mean
/// equivalent designs.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey {
    pub level: EquivalenceLevel,
    pub labels: LabelMode,
    pub bytes: Vec<u8>,
}

impl CanonicalKey {
    /// SHA-256 of the key bytes, hex encoded.
    pub fn digest_hex(&self) -> String {
        hex::encode(Sha256::digest(&self.bytes))
    }

    pub fn as_text(&self) -> &str {
        std::str::from_utf8(&self.bytes).unwrap_or("")
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalKey({})", self.as_text())
    }
}

type ShapeForm = (ShapeKind, Vec<Vec3>);

fn shape_form(kind: ShapeKind, vertices: Vec<Vec3>, labels: LabelMode) -> ShapeForm {
    let mut v = vertices;
    if labels == LabelMode::Blind {
        v.sort();
    }
    (kind, v)
}

fn design_form(d: &Design, g: Option<&Isometry>, labels: LabelMode) -> Vec<ShapeForm> {
    let mut forms: Vec<ShapeForm> = d
        .shapes
        .iter()
        .map(|s| {
            let verts = match g {
                Some(g) => s.vertices.iter().map(|p| g.apply(p)).collect(),
                None => s.vertices.clone(),
            };
            shape_form(s.kind, verts, labels)
        })
        .collect();
    forms.sort();
    forms
}

fn encode(level: EquivalenceLevel, labels: LabelMode, forms: &[ShapeForm]) -> Vec<u8> {
    use std::fmt::Write;
    let mut s = format!(
        "{}{}|",
        level.short(),
        if labels == LabelMode::Blind { "b" } else { "s" }
    );
    for (kind, verts) in forms {
        s.push_str(kind.as_str());
        s.push('(');
        for v in verts {
            let _ = write!(s, "{},{},{};", v.x, v.y, v.z);
        }
        s.push(')');
    }
    s.into_bytes()
}

/// The anchor kind minimizing the number of normalizing candidates.
fn anchor_kind(d: &Design) -> ShapeKind {
    let cost = |k: ShapeKind| {
        let n = d.shapes.iter().filter(|s| s.kind == k).count();
        if n == 0 {
            usize::MAX
        } else {
            n * canonical_symmetries(k).order()
        }
    };
    if cost(ShapeKind::Tet) <= cost(ShapeKind::Oct) {
        ShapeKind::Tet
    } else {
        ShapeKind::Oct
    }
}

fn first_improper(kind: ShapeKind) -> &'static Isometry {
    canonical_symmetries(kind)
        .elements
        .iter()
        .find(|g| !g.is_proper())
        .expect("canonical solids have mirror planes")
}

/// Smallest description of `d` over the isometries that move some anchor
/// solid onto its canonical pose. With `proper_only`, only rotations count.
fn min_form(d: &Design, labels: LabelMode, proper_only: bool) -> Vec<ShapeForm> {
    let mut best: Option<Vec<ShapeForm>> = None;
    let mut offer = |form: Vec<ShapeForm>| {
        if best.as_ref().is_none_or(|b| form < *b) {
            best = Some(form);
        }
    };
    match labels {
        LabelMode::Blind => {
            let kind = anchor_kind(d);
            for anchor in d.shapes.iter().filter(|s| s.kind == kind) {
                // move the anchor to the canonical pose once, then run over
                // its symmetries (signed permutations, cheap to apply)
                let inv = anchor.placement.inverse();
                let base: Vec<(ShapeKind, Vec<Vec3>)> = d
                    .shapes
                    .iter()
                    .map(|s| (s.kind, s.vertices.iter().map(|p| inv.apply(p)).collect()))
                    .collect();
                for sym in &canonical_symmetries(kind).elements {
                    if proper_only && sym.det_sign() != anchor.placement.det_sign() {
                        continue;
                    }
                    let mut form: Vec<ShapeForm> = base
                        .iter()
                        .map(|(k, vs)| {
                            shape_form(*k, vs.iter().map(|p| sym.apply(p)).collect(), labels)
                        })
                        .collect();
                    form.sort();
                    offer(form);
                }
            }
        }
        LabelMode::Sensitive => {
            for s in &d.shapes {
                let inv = s.placement.inverse();
                let g = if proper_only && !s.placement.is_proper() {
                    first_improper(s.kind).compose(&inv)
                } else {
                    inv
                };
                offer(design_form(d, Some(&g), labels));
            }
        }
    }
    best.unwrap_or_default()
}

fn trace_bytes(d: &Design) -> Vec<u8> {
    let moves: Vec<String> = d.trace.iter().map(Move::to_string).collect();
    format!(
        "l0|{}|alt={}|{}|{}",
        d.grammar,
        u8::from(d.alternate),
        d.initial_kind,
        moves.join(";")
    )
    .into_bytes()
}

/// Label-blind canonical key.
pub fn canonical_key(d: &Design, level: EquivalenceLevel) -> CanonicalKey {
    canonical_key_with(d, level, LabelMode::Blind)
}

pub fn canonical_key_with(d: &Design, level: EquivalenceLevel, labels: LabelMode) -> CanonicalKey {
    let bytes = match level {
        EquivalenceLevel::L0Labeled => trace_bytes(d),
        EquivalenceLevel::L1Geometry => encode(level, labels, &design_form(d, None, labels)),
        EquivalenceLevel::L2ProperCongruence => encode(level, labels, &min_form(d, labels, true)),
        EquivalenceLevel::L3FullCongruence => encode(level, labels, &min_form(d, labels, false)),
    };
    CanonicalKey {
        level,
        labels,
        bytes,
    }
}

/// Reflection through the plane `x = y`. It equals the reflection through
/// the coordinate plane `x = 0` followed by the rotation that returns either
/// canonical solid to its pose, so the initial solid of a design is fixed.
pub fn mirror_plane() -> Isometry {
    reflection_through_plane(&Vec3::from_ints(1, -1, 0), &ExactScalar::zero())
        .expect("non-zero normal")
}

/// Re-derives a design whose solids occupy `targets` (one vertex set per
/// solid, in derivation order) by replaying `template`'s moves on matching
/// faces. Labels of `template` are kept whenever they reproduce the target
/// placement exactly.
fn rederive(template: &Design, targets: &[PolyShape]) -> Option<Design> {
    let mut t = initial_design(template.grammar, template.initial_kind, template.alternate).ok()?;
    for (step, m) in template.trace.iter().enumerate() {
        let host_src = &template.shapes[m.host_shape];
        let host_target = &targets[m.host_shape];
        let mut face_set: Vec<Vec3> = canonical_shape(host_src.kind).faces[m.host_face]
            .iter()
            .map(|&i| host_target.vertices[i].clone())
            .collect();
        face_set.sort();
        let host_now = &t.shapes[m.host_shape];
        let face = (0..host_now.face_labels.len()).find(|&f| {
            let mut fs: Vec<Vec3> = canonical_shape(host_now.kind).faces[f]
                .iter()
                .map(|&i| host_now.vertices[i].clone())
                .collect();
            fs.sort();
            fs == face_set
        })?;
        let want = &targets[step + 1];
        let want_sorted = want.sorted_vertices();
        let frame = host_now.face_frame(face).ok()?;
        let mut fallback = None;
        let mut exact = None;
        for (alignment, orientation) in Move::LABELS {
            let Ok(p) = mating_isometry(&frame, m.kind, alignment, orientation) else {
                continue;
            };
            if p == want.placement {
                exact = Some((alignment, orientation));
                break;
            }
            if fallback.is_none() && PolyShape::placed(m.kind, p).sorted_vertices() == want_sorted {
                fallback = Some((alignment, orientation));
            }
        }
        let (alignment, orientation) = exact.or(fallback)?;
        let mv = Move {
            host_face: face,
            alignment,
            orientation,
            ..*m
        };
        t = apply_move(&t, &mv, ApplyMode::CountOnly).ok()?;
    }
    Some(t)
}

/// Mirror image of `d` as a replayable design with the same initial solid.
pub fn mirror_image(d: &Design) -> Design {
    let sigma = mirror_plane();
    let targets: Vec<_> = d.shapes.iter().map(|s| s.transformed(&sigma)).collect();
    rederive(d, &targets).expect("mirror plane fixes the initial solid")
}

/// Mirror image of `d`, and whether `d` is chiral (its mirror image is not
/// a rotated copy of it).
pub fn mirror_twin(d: &Design) -> (Design, bool) {
    let twin = mirror_image(d);
    let chiral = canonical_key(d, EquivalenceLevel::L2ProperCongruence)
        != canonical_key(&twin, EquivalenceLevel::L2ProperCongruence);
    (twin, chiral)
}

/// All isometries mapping the design's node/strut geometry onto itself.
pub fn design_point_group(d: &Design) -> SymmetryGroup {
    let g = frame_unchecked(d);
    point_group(&g.nodes, Some(&g.struts), true)
}

/// A grammar together with the kind-alternation switch of the combined
/// grammar.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GrammarSpec {
    pub id: GrammarId,
    pub alternate: bool,
}

impl GrammarSpec {
    pub fn new(id: GrammarId) -> Self {
        GrammarSpec {
            id,
            alternate: false,
        }
    }

    pub fn alternating(id: GrammarId) -> Self {
        GrammarSpec {
            id,
            alternate: true,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Realization {
    Realized(Design),
    Infeasible(GrammarError),
    /// Count-only traces are never realized geometrically.
    Nominal,
}

#[derive(Clone, Debug)]
pub struct LabeledOutcome {
    pub initial_kind: ShapeKind,
    pub trace: Vec<Move>,
    /// OCT-rooted partner of a TET-rooted trace in the combined grammar's
    /// count-only product.
    pub paired: Option<Vec<Move>>,
    pub realization: Realization,
}

/// Face-label bookkeeping only, for count-only enumeration.
#[derive(Clone)]
struct NominalState {
    kinds: Vec<ShapeKind>,
    free: Vec<Vec<bool>>,
}

impl NominalState {
    fn new(kind: ShapeKind) -> Self {
        NominalState {
            kinds: vec![kind],
            free: vec![vec![true; kind.face_count()]],
        }
    }

    fn moves(&self, grammar: GrammarId, alternate: bool) -> Vec<Move> {
        let mut out = Vec::new();
        for (si, kind) in self.kinds.iter().enumerate() {
            for (face, _) in self.free[si].iter().enumerate().filter(|(_, f)| **f) {
                for &k in grammar.added_kinds(*kind, alternate) {
                    for (alignment, orientation) in Move::LABELS {
                        out.push(Move {
                            host_shape: si,
                            host_face: face,
                            kind: k,
                            alignment,
                            orientation,
                        });
                    }
                }
            }
        }
        out
    }

    fn apply(&self, m: &Move) -> Self {
        let mut next = self.clone();
        next.free[m.host_shape][m.host_face] = false;
        let mut faces = vec![true; m.kind.face_count()];
        faces[0] = false;
        next.kinds.push(m.kind);
        next.free.push(faces);
        next
    }
}

fn nominal_traces(
    grammar: GrammarId,
    alternate: bool,
    initial: ShapeKind,
    depth: usize,
) -> Vec<Vec<Move>> {
    fn walk(
        st: &NominalState,
        grammar: GrammarId,
        alternate: bool,
        prefix: &mut Vec<Move>,
        left: usize,
        out: &mut Vec<Vec<Move>>,
    ) {
        if left == 0 {
            out.push(prefix.clone());
            return;
        }
        for m in st.moves(grammar, alternate) {
            prefix.push(m);
            walk(&st.apply(&m), grammar, alternate, prefix, left - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    walk(
        &NominalState::new(initial),
        grammar,
        alternate,
        &mut Vec::new(),
        depth,
        &mut out,
    );
    out
}

fn strict_from(d: &Design, depth: usize, out: &mut Vec<LabeledOutcome>) {
    for m in applicable_moves(d) {
        match apply_move(d, &m, ApplyMode::Strict) {
            Ok(next) if depth > 1 => strict_from(&next, depth - 1, out),
            Ok(next) => out.push(LabeledOutcome {
                initial_kind: next.initial_kind,
                trace: next.trace.clone(),
                paired: None,
                realization: Realization::Realized(next),
            }),
            Err(e) => {
                let mut trace = d.trace.clone();
                trace.push(m);
                out.push(LabeledOutcome {
                    initial_kind: d.initial_kind,
                    trace,
                    paired: None,
                    realization: Realization::Infeasible(e),
                });
            }
        }
    }
}

/// Every labeled trace of exactly `depth` rule applications, in
/// deterministic order (initial kind, then moves in `applicable_moves`
/// order).
///
/// In count-only mode, traces are generated from face labels alone. For
/// the combined grammar the count-only space is the product of the
/// TET-rooted and OCT-rooted alternating trace spaces, so each outcome
/// carries an OCT-rooted `paired` trace.
///
/// In strict mode, traces whose last move would overlap an existing solid
/// are reported as infeasible and not extended.
pub fn enumerate_labeled(
    spec: GrammarSpec,
    depth: usize,
    mode: ApplyMode,
    parallel: bool,
) -> Vec<LabeledOutcome> {
    assert!(depth >= 1, "depth counts rule applications and starts at 1");
    match mode {
        ApplyMode::CountOnly if spec.id == GrammarId::TetOct => {
            let tets = nominal_traces(spec.id, true, ShapeKind::Tet, depth);
            let octs = nominal_traces(spec.id, true, ShapeKind::Oct, depth);
            let mut out = Vec::with_capacity(tets.len() * octs.len());
            for t in &tets {
                for o in &octs {
                    out.push(LabeledOutcome {
                        initial_kind: ShapeKind::Tet,
                        trace: t.clone(),
                        paired: Some(o.clone()),
                        realization: Realization::Nominal,
                    });
                }
            }
            out
        }
        ApplyMode::CountOnly => spec
            .id
            .initial_kinds()
            .iter()
            .flat_map(|&k| {
                nominal_traces(spec.id, spec.alternate, k, depth)
                    .into_iter()
                    .map(move |trace| LabeledOutcome {
                        initial_kind: k,
                        trace,
                        paired: None,
                        realization: Realization::Nominal,
                    })
            })
            .collect(),
        ApplyMode::Strict => {
            let roots: Vec<Design> = spec
                .id
                .initial_kinds()
                .iter()
                .map(|&k| initial_design(spec.id, k, spec.alternate).expect("allowed kind"))
                .collect();
            // partition by (root, first move)
            let parts: Vec<(Design, Move)> = roots
                .iter()
                .flat_map(|r| applicable_moves(r).into_iter().map(move |m| (r.clone(), m)))
                .collect();
            let run = |(root, m): &(Design, Move)| {
                let mut out = Vec::new();
                match apply_move(root, m, ApplyMode::Strict) {
                    Ok(next) if depth > 1 => strict_from(&next, depth - 1, &mut out),
                    Ok(next) => out.push(LabeledOutcome {
                        initial_kind: next.initial_kind,
                        trace: next.trace.clone(),
                        paired: None,
                        realization: Realization::Realized(next),
                    }),
                    Err(e) => out.push(LabeledOutcome {
                        initial_kind: root.initial_kind,
                        trace: vec![*m],
                        paired: None,
                        realization: Realization::Infeasible(e),
                    }),
                }
                out
            };
            if parallel {
                parts.par_iter().map(run).collect::<Vec<_>>().concat()
            } else {
                parts.iter().map(run).collect::<Vec<_>>().concat()
            }
        }
    }
}

/// Size of the labeled space. Count-only mode counts the nominal space;
/// strict mode counts realized designs.
pub fn labeled_count(spec: GrammarSpec, depth: usize, mode: ApplyMode) -> usize {
    enumerate_labeled(spec, depth, mode, false)
        .iter()
        .filter(|o| !matches!(o.realization, Realization::Infeasible(_)))
        .count()
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub initial_kind: ShapeKind,
    pub trace: Vec<Move>,
    /// Label-blind keys, indexed by level.
    pub keys: [CanonicalKey; 4],
    /// Label-sensitive keys for L1..L3, when requested.
    pub sensitive_keys: Option<[CanonicalKey; 3]>,
    pub class_ids: [usize; 4],
    pub sensitive_class_ids: Option<[usize; 3]>,
    pub chiral: bool,
    pub point_group_order: usize,
}

#[derive(Clone, Debug)]
pub struct Catalog {
    pub spec: GrammarSpec,
    pub depth: usize,
    pub nominal_count: usize,
    pub infeasible_count: usize,
    pub entries: Vec<CatalogEntry>,
}

#[derive(Copy, Clone, Debug, Default)]
pub struct CatalogOptions {
    pub label_sensitive: bool,
    pub parallel: bool,
}

/// Geometry-derived facts shared by every design of one L1 class.
#[derive(Clone)]
struct ClassFacts {
    l2: CanonicalKey,
    l3: CanonicalKey,
    chiral: bool,
    point_group_order: usize,
}

fn class_facts(d: &Design) -> ClassFacts {
    let l2 = canonical_key(d, EquivalenceLevel::L2ProperCongruence);
    let l3 = canonical_key(d, EquivalenceLevel::L3FullCongruence);
    let (twin, _) = mirror_twin(d);
    let chiral = canonical_key(&twin, EquivalenceLevel::L2ProperCongruence) != l2;
    ClassFacts {
        l2,
        l3,
        chiral,
        point_group_order: design_point_group(d).order(),
    }
}

fn maybe_par_map<T: Sync, U: Send>(
    items: &[T],
    parallel: bool,
    f: impl Fn(&T) -> U + Sync + Send,
) -> Vec<U> {
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

fn assign_ids<'a>(keys: impl Iterator<Item = &'a CanonicalKey>) -> Vec<usize> {
    let mut ids: HashMap<&CanonicalKey, usize> = HashMap::new();
    keys.map(|k| {
        let n = ids.len();
        *ids.entry(k).or_insert(n)
    })
    .collect()
}

pub fn build_catalog(spec: GrammarSpec, depth: usize, opts: CatalogOptions) -> Catalog {
    let outcomes = enumerate_labeled(spec, depth, ApplyMode::Strict, opts.parallel);
    let nominal_count = labeled_count(spec, depth, ApplyMode::CountOnly);
    let infeasible_count = outcomes
        .iter()
        .filter(|o| matches!(o.realization, Realization::Infeasible(_)))
        .count();
    let designs: Vec<Design> = outcomes
        .into_iter()
        .filter_map(|o| match o.realization {
            Realization::Realized(d) => Some(d),
            _ => None,
        })
        .collect();

    let l1: Vec<CanonicalKey> = maybe_par_map(&designs, opts.parallel, |d| {
        canonical_key(d, EquivalenceLevel::L1Geometry)
    });
    // one representative design per L1 class, in first-appearance order
    let mut first_of: HashMap<&CanonicalKey, usize> = HashMap::new();
    let mut reps = Vec::new();
    for (i, k) in l1.iter().enumerate() {
        first_of.entry(k).or_insert_with(|| {
            reps.push(i);
            reps.len() - 1
        });
    }
    let facts: Vec<ClassFacts> = maybe_par_map(&reps, opts.parallel, |&i| class_facts(&designs[i]));

    let sensitive: Option<Vec<[CanonicalKey; 3]>> = opts.label_sensitive.then(|| {
        maybe_par_map(&designs, opts.parallel, |d| {
            [
                EquivalenceLevel::L1Geometry,
                EquivalenceLevel::L2ProperCongruence,
                EquivalenceLevel::L3FullCongruence,
            ]
            .map(|lv| canonical_key_with(d, lv, LabelMode::Sensitive))
        })
    });

    let l0: Vec<CanonicalKey> = designs
        .iter()
        .map(|d| canonical_key(d, EquivalenceLevel::L0Labeled))
        .collect();
    let fact_of = |i: usize| &facts[first_of[&l1[i]]];
    let ids0 = assign_ids(l0.iter());
    let ids1 = assign_ids(l1.iter());
    let ids2 = assign_ids((0..designs.len()).map(|i| &fact_of(i).l2));
    let ids3 = assign_ids((0..designs.len()).map(|i| &fact_of(i).l3));
    let sens_ids: Option<Vec<[usize; 3]>> = sensitive.as_ref().map(|s| {
        let a = assign_ids(s.iter().map(|k| &k[0]));
        let b = assign_ids(s.iter().map(|k| &k[1]));
        let c = assign_ids(s.iter().map(|k| &k[2]));
        (0..s.len()).map(|i| [a[i], b[i], c[i]]).collect()
    });

    let entries = designs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let f = fact_of(i);
            CatalogEntry {
                initial_kind: d.initial_kind,
                trace: d.trace.clone(),
                keys: [l0[i].clone(), l1[i].clone(), f.l2.clone(), f.l3.clone()],
                sensitive_keys: sensitive.as_ref().map(|s| s[i].clone()),
                class_ids: [ids0[i], ids1[i], ids2[i], ids3[i]],
                sensitive_class_ids: sens_ids.as_ref().map(|s| s[i]),
                chiral: f.chiral,
                point_group_order: f.point_group_order,
            }
        })
        .collect();
    Catalog {
        spec,
        depth,
        nominal_count,
        infeasible_count,
        entries,
    }
}

impl Catalog {
    /// First entry of every class at `level` (label-blind).
    pub fn representatives(&self, level: EquivalenceLevel) -> Vec<&CatalogEntry> {
        let mut seen = std::collections::HashSet::new();
        self.entries
            .iter()
            .filter(|e| seen.insert(e.class_ids[level.index()]))
            .collect()
    }

    pub fn class_count(&self, level: EquivalenceLevel) -> usize {
        self.representatives(level).len()
    }

    /// `None` when the catalog was built without label-sensitive keys.
    pub fn sensitive_class_count(&self, level: EquivalenceLevel) -> Option<usize> {
        if level == EquivalenceLevel::L0Labeled {
            return Some(self.entries.len());
        }
        let idx = level.index() - 1;
        let ids: Option<std::collections::HashSet<usize>> = self
            .entries
            .iter()
            .map(|e| e.sensitive_class_ids.map(|ids| ids[idx]))
            .collect();
        ids.map(|s| s.len())
    }

    /// L3 classes that split into two mirror-image L2 classes.
    pub fn chiral_pair_count(&self) -> usize {
        let mut l2_per_l3: BTreeMap<usize, std::collections::BTreeSet<usize>> = BTreeMap::new();
        for e in &self.entries {
            l2_per_l3
                .entry(e.class_ids[3])
                .or_default()
                .insert(e.class_ids[2]);
        }
        l2_per_l3.values().filter(|s| s.len() > 1).count()
    }

    pub fn to_doc(&self) -> Vec<CatalogEntryDoc> {
        self.entries.iter().map(CatalogEntryDoc::from).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelMap<T> {
    pub l0: T,
    pub l1: T,
    pub l2: T,
    pub l3: T,
}

/// One record of `catalog.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntryDoc {
    pub initial_kind: ShapeKind,
    pub trace: Vec<Move>,
    pub level_keys: LevelMap<String>,
    pub class_id: LevelMap<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sensitive_level_keys: Option<[String; 3]>,
    pub chiral: bool,
    pub point_group_order: usize,
}

impl From<&CatalogEntry> for CatalogEntryDoc {
    fn from(e: &CatalogEntry) -> Self {
        let [k0, k1, k2, k3] = &e.keys;
        CatalogEntryDoc {
            initial_kind: e.initial_kind,
            trace: e.trace.clone(),
            level_keys: LevelMap {
                l0: k0.digest_hex(),
                l1: k1.digest_hex(),
                l2: k2.digest_hex(),
                l3: k3.digest_hex(),
            },
            class_id: LevelMap {
                l0: e.class_ids[0],
                l1: e.class_ids[1],
                l2: e.class_ids[2],
                l3: e.class_ids[3],
            },
            sensitive_level_keys: e
                .sensitive_keys
                .as_ref()
                .map(|ks| ks.clone().map(|k| k.digest_hex())),
            chiral: e.chiral,
            point_group_order: e.point_group_order,
        }
    }
}

pub const PAPER_LABELED: [(GrammarId, usize); 3] = [
    (GrammarId::TetTet, 24),
    (GrammarId::OctOct, 48),
    (GrammarId::TetOct, 1152),
];
pub const PAPER_LABELED_TOTAL: usize = 1224;
pub const PAPER_UNIQUE: [(GrammarId, usize); 3] = [
    (GrammarId::TetTet, 3),
    (GrammarId::OctOct, 6),
    (GrammarId::TetOct, 14),
];
pub const PAPER_UNIQUE_TOTAL: usize = 23;

pub fn paper_labeled_target(g: GrammarId) -> usize {
    PAPER_LABELED
        .iter()
        .find(|(id, _)| *id == g)
        .map(|p| p.1)
        .unwrap_or(0)
}

pub fn paper_unique_target(g: GrammarId) -> usize {
    PAPER_UNIQUE
        .iter()
        .find(|(id, _)| *id == g)
        .map(|p| p.1)
        .unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCounts {
    pub l1: usize,
    pub l2: usize,
    pub l3: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelMatch {
    pub labels: LabelMode,
    pub level: EquivalenceLevel,
    pub count: usize,
    pub target: usize,
    pub matches: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRepresentative {
    pub class_id: usize,
    pub initial_kind: ShapeKind,
    pub trace: Vec<Move>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderReport {
    pub grammar: GrammarId,
    pub alternate: bool,
    pub depth: usize,
    /// Size of the nominal labeled space (count-only convention).
    pub nominal_labeled_count: usize,
    /// Realized labeled designs (L0 classes).
    pub l0: usize,
    pub infeasible: usize,
    pub blind: LevelCounts,
    pub sensitive: LevelCounts,
    pub chiral_pair_count: usize,
    pub representatives: BTreeMap<String, Vec<ClassRepresentative>>,
    pub paper_unique_target: usize,
    pub paper_match: Vec<LevelMatch>,
    pub note: String,
}

pub fn ladder_report(spec: GrammarSpec, depth: usize) -> LadderReport {
    ladder_report_with(spec, depth, false)
}

pub fn ladder_report_with(spec: GrammarSpec, depth: usize, parallel: bool) -> LadderReport {
    let cat = build_catalog(
        spec,
        depth,
        CatalogOptions {
            label_sensitive: true,
            parallel,
        },
    );
    let l = |lv: EquivalenceLevel| cat.class_count(lv);
    let s = |lv: EquivalenceLevel| cat.sensitive_class_count(lv).unwrap_or(0);
    use EquivalenceLevel::*;
    let blind = LevelCounts {
        l1: l(L1Geometry),
        l2: l(L2ProperCongruence),
        l3: l(L3FullCongruence),
    };
    let sensitive = LevelCounts {
        l1: s(L1Geometry),
        l2: s(L2ProperCongruence),
        l3: s(L3FullCongruence),
    };
    let target = paper_unique_target(spec.id);
    let mut paper_match = Vec::new();
    for (labels, counts) in [
        (LabelMode::Blind, &blind),
        (LabelMode::Sensitive, &sensitive),
    ] {
        for (level, count) in [
            (L1Geometry, counts.l1),
            (L2ProperCongruence, counts.l2),
            (L3FullCongruence, counts.l3),
        ] {
            paper_match.push(LevelMatch {
                labels,
                level,
                count,
                target,
                matches: count == target,
            });
        }
    }
    let mut representatives = BTreeMap::new();
    for lv in [L1Geometry, L2ProperCongruence, L3FullCongruence] {
        let reps = cat
            .representatives(lv)
            .into_iter()
            .map(|e| ClassRepresentative {
                class_id: e.class_ids[lv.index()],
                initial_kind: e.initial_kind,
                trace: e.trace.clone(),
            })
            .collect();
        representatives.insert(format!("blind_{}", lv.short()), reps);
    }
    let note = match paper_match.iter().find(|m| m.matches) {
        Some(m) => format!(
            "{:?} {} reproduces the target {}",
            m.labels,
            m.level.short(),
            target
        ),
        None => format!(
            "no level matches the target {target}: blind l1/l2/l3 = {}/{}/{}, sensitive l1/l2/l3 = {}/{}/{}",
            blind.l1, blind.l2, blind.l3, sensitive.l1, sensitive.l2, sensitive.l3
        ),
    };
    LadderReport {
        grammar: spec.id,
        alternate: spec.alternate,
        depth,
        nominal_labeled_count: cat.nominal_count,
        l0: cat.entries.len(),
        infeasible: cat.infeasible_count,
        blind,
        sensitive,
        chiral_pair_count: cat.chiral_pair_count(),
        representatives,
        paper_unique_target: target,
        paper_match,
        note,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperTargets {
    pub labeled: BTreeMap<GrammarId, usize>,
    pub labeled_total: usize,
    pub unique: BTreeMap<GrammarId, usize>,
    pub unique_total: usize,
}

impl PaperTargets {
    pub fn constant() -> Self {
        PaperTargets {
            labeled: PAPER_LABELED.into_iter().collect(),
            labeled_total: PAPER_LABELED_TOTAL,
            unique: PAPER_UNIQUE.into_iter().collect(),
            unique_total: PAPER_UNIQUE_TOTAL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaperCheckResult {
    pub labeled_counts: BTreeMap<GrammarId, usize>,
    pub labeled_total: usize,
    pub ladders: Vec<LadderReport>,
    /// Per (labels, level): summed unique count across the three grammars.
    pub unique_totals: Vec<LevelMatch>,
    pub paper_targets: PaperTargets,
    pub labeled_match: bool,
    pub unique_match: bool,
    pub runtime_ms: u128,
}

/// Grammar variants used to reproduce the published counts: the combined
/// grammar pairs one tetrahedron with one octahedron, so it alternates.
pub fn paper_specs() -> [GrammarSpec; 3] {
    [
        GrammarSpec::new(GrammarId::TetTet),
        GrammarSpec::new(GrammarId::OctOct),
        GrammarSpec::alternating(GrammarId::TetOct),
    ]
}

pub fn paper_check() -> PaperCheckResult {
    let start = Instant::now();
    let specs = paper_specs();
    let labeled_counts: BTreeMap<GrammarId, usize> = specs
        .iter()
        .map(|s| (s.id, labeled_count(*s, 1, ApplyMode::CountOnly)))
        .collect();
    let labeled_total = labeled_counts.values().sum();
    let ladders: Vec<LadderReport> = specs.iter().map(|s| ladder_report(*s, 1)).collect();
    let mut unique_totals = Vec::new();
    let mut unique_match = false;
    for i in 0..ladders[0].paper_match.len() {
        let per: Vec<&LevelMatch> = ladders.iter().map(|r| &r.paper_match[i]).collect();
        let count = per.iter().map(|m| m.count).sum();
        let all = per.iter().all(|m| m.matches) && count == PAPER_UNIQUE_TOTAL;
        unique_match |= all;
        unique_totals.push(LevelMatch {
            labels: per[0].labels,
            level: per[0].level,
            count,
            target: PAPER_UNIQUE_TOTAL,
            matches: all,
        });
    }
    let labeled_match = PAPER_LABELED
        .iter()
        .all(|(g, n)| labeled_counts.get(g) == Some(n))
        && labeled_total == PAPER_LABELED_TOTAL;
    PaperCheckResult {
        labeled_counts,
        labeled_total,
        ladders,
        unique_totals,
        paper_targets: PaperTargets::constant(),
        labeled_match,
        unique_match,
        runtime_ms: start.elapsed().as_millis(),
    }
}

/// Breadth-first search over geometrically distinct strict derivations for
/// the first chiral design, up to `max_depth` rule applications.
pub fn find_chiral_witness(spec: GrammarSpec, max_depth: usize) -> Option<Design> {
    let mut frontier: Vec<Design> = spec
        .id
        .initial_kinds()
        .iter()
        .map(|&k| initial_design(spec.id, k, spec.alternate).expect("allowed kind"))
        .collect();
    for _ in 0..max_depth {
        let mut seen = std::collections::HashSet::new();
        let mut next = Vec::new();
        for d in &frontier {
            for m in applicable_moves(d) {
                let Ok(child) = apply_move(d, &m, ApplyMode::Strict) else {
                    continue;
                };
                if !seen.insert(canonical_key(&child, EquivalenceLevel::L1Geometry)) {
                    continue;
                }
                if mirror_twin(&child).1 {
                    return Some(child);
                }
                next.push(child);
            }
        }
        frontier = next;
    }
    None
}
