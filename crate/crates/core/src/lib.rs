//! Exact shape-grammar engine over regular tetrahedra and octahedra.
//!
//! Solids are glued face to face by labeled moves, designs are enumerated
//! exhaustively and classified up to rigid motion, and finished designs are
//! exported as node/strut frames.

pub mod catalog;
pub mod exact_geom;
pub mod frame;
pub mod grammar;
pub mod polyhedra;

pub use catalog::{
    build_catalog, canonical_key, canonical_key_with, design_point_group, enumerate_labeled,
    labeled_count, ladder_report, mirror_image, mirror_twin, paper_check, CanonicalKey, Catalog,
    CatalogOptions, EquivalenceLevel, GrammarSpec, LabelMode, LadderReport,
};
pub use exact_geom::{ExactScalar, GeomError, Isometry, Mat3, Vec3};
pub use frame::{extract_frame, frame_stats, FrameGraph, FrameStats};
pub use grammar::{
    apply_move, design_from_json, initial_design, replay, ApplyMode, Design, DesignRecord,
    GrammarError, GrammarId, Move, PolyShape,
};
pub use polyhedra::{canonical_shape, face_frame, symmetry_group, ShapeKind, SymmetryGroup};
