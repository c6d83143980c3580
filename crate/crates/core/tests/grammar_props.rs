mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use radiogram::exact_geom::ExactScalar;
use radiogram::grammar::{
    applicable_moves, apply_move, replay, transport_move, ApplyMode, Design, GrammarId, Move,
};
use radiogram::polyhedra::{canonical_shape, canonical_symmetries, ShapeKind};

use common::random_design;

fn grammar_and_kind() -> impl Strategy<Value = (GrammarId, ShapeKind, bool)> {
    prop_oneof![
        Just((GrammarId::TetTet, ShapeKind::Tet, false)),
        Just((GrammarId::OctOct, ShapeKind::Oct, false)),
        Just((GrammarId::TetOct, ShapeKind::Tet, false)),
        Just((GrammarId::TetOct, ShapeKind::Oct, false)),
        Just((GrammarId::TetOct, ShapeKind::Tet, true)),
        Just((GrammarId::TetOct, ShapeKind::Oct, true)),
    ]
}

fn sample(seed: u64, g: GrammarId, k: ShapeKind, alt: bool, depth: usize) -> (Design, Move) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = random_design(&mut rng, g, k, alt, depth);
    let moves = applicable_moves(&d);
    let m = moves[rng.gen_range(0..moves.len())];
    (d, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn apply_move_is_pure(seed in any::<u64>(), (g, k, alt) in grammar_and_kind(), depth in 0usize..4) {
        let (d, m) = sample(seed, g, k, alt, depth);
        let a = apply_move(&d, &m, ApplyMode::Strict);
        let b = apply_move(&d, &m, ApplyMode::Strict);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn glued_faces_coincide_and_lie_between(seed in any::<u64>(), (g, k, alt) in grammar_and_kind(), depth in 0usize..4) {
        let (d, m) = sample(seed, g, k, alt, depth);
        let next = apply_move(&d, &m, ApplyMode::CountOnly).unwrap();
        let host = &next.shapes[m.host_shape];
        let added = next.shapes.last().unwrap();
        let mut hf: Vec<_> = canonical_shape(host.kind).faces[m.host_face]
            .iter().map(|&i| host.vertices[i].clone()).collect();
        let mut af: Vec<_> = canonical_shape(added.kind).faces[0]
            .iter().map(|&i| added.vertices[i].clone()).collect();
        hf.sort();
        af.sort();
        prop_assert_eq!(hf, af);
        let frame = host.face_frame(m.host_face).unwrap();
        let (sh, sa) = (frame.side(&host.centroid()), frame.side(&added.centroid()));
        prop_assert!(sh != 0 && sa != 0 && sh != sa);
    }

    #[test]
    fn every_edge_keeps_squared_length_two(seed in any::<u64>(), (g, k, alt) in grammar_and_kind(), depth in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_design(&mut rng, g, k, alt, depth);
        let two = ExactScalar::from_int(2);
        for s in &d.shapes {
            for &(i, j) in &canonical_shape(s.kind).edges {
                prop_assert_eq!(s.vertices[i].dist2(&s.vertices[j]), two.clone());
            }
        }
    }

    #[test]
    fn moves_commute_with_initial_symmetries(seed in any::<u64>(), (g, k, alt) in grammar_and_kind(), depth in 0usize..3) {
        let (d, m) = sample(seed, g, k, alt, depth);
        let after = apply_move(&d, &m, ApplyMode::CountOnly).unwrap();
        for sym in &canonical_symmetries(k).elements {
            let moved = d.transformed(sym);
            let tm = transport_move(&m, sym);
            let lhs = apply_move(&moved, &tm, ApplyMode::CountOnly).unwrap();
            let rhs = after.transformed(sym);
            prop_assert_eq!(&lhs.shapes, &rhs.shapes);
        }
    }

    #[test]
    fn replay_reproduces_json(seed in any::<u64>(), (g, k, alt) in grammar_and_kind(), depth in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = random_design(&mut rng, g, k, alt, depth);
        let r = replay(g, k, alt, &d.trace, ApplyMode::Strict).unwrap();
        prop_assert_eq!(serde_json::to_string(&d).unwrap(), serde_json::to_string(&r).unwrap());
    }
}

#[test]
fn strict_mode_rejects_overlapping_growth() {
    // tetrahedra cannot close a ring around an edge (5 leave a gap), so deep
    // random growth runs into attachments that collide with earlier solids
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rejected = 0;
    for _ in 0..30 {
        let d = random_design(&mut rng, GrammarId::TetTet, ShapeKind::Tet, false, 6);
        for m in applicable_moves(&d) {
            if let Err(e) = apply_move(&d, &m, ApplyMode::Strict) {
                assert_eq!(e.code(), "OverlapCreated");
                assert!(apply_move(&d, &m, ApplyMode::CountOnly).is_ok());
                rejected += 1;
            }
        }
    }
    assert!(rejected > 0, "expected some overlapping moves by depth 6");
}
