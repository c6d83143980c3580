//! Independent oracles shared by the integration tests. Nothing here relies
//! on the canonical-key or separating-axis code under test.

#![allow(dead_code)]

use radiogram::exact_geom::{ExactScalar, Isometry, Mat3, Vec3};
use radiogram::grammar::{
    applicable_moves, apply_move, initial_design, ApplyMode, Design, GrammarId, PolyShape,
};
use radiogram::polyhedra::{canonical_symmetries, ShapeKind};
use rand::Rng;

pub fn q(n: i64, d: i64) -> ExactScalar {
    ExactScalar::ratio(n, d)
}

/// Rational rotation from a non-zero integer quaternion (Euler–Rodrigues
/// divided by the squared norm).
pub fn quaternion_rotation(a: i64, b: i64, c: i64, d: i64) -> Mat3 {
    let n = a * a + b * b + c * c + d * d;
    assert!(n > 0);
    let e = [
        [
            a * a + b * b - c * c - d * d,
            2 * (b * c - a * d),
            2 * (b * d + a * c),
        ],
        [
            2 * (b * c + a * d),
            a * a - b * b + c * c - d * d,
            2 * (c * d - a * b),
        ],
        [
            2 * (b * d - a * c),
            2 * (c * d + a * b),
            a * a - b * b - c * c + d * d,
        ],
    ];
    let mut m = Mat3::zero();
    for (r, row) in e.iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            m.0[r][k] = q(*v, n);
        }
    }
    m
}

pub fn random_rotation<R: Rng>(rng: &mut R) -> Mat3 {
    loop {
        let v: [i64; 4] = std::array::from_fn(|_| rng.gen_range(-3..=3));
        if v.iter().any(|x| *x != 0) {
            return quaternion_rotation(v[0], v[1], v[2], v[3]);
        }
    }
}

pub fn random_vec<R: Rng>(rng: &mut R, span: i64, den: i64) -> Vec3 {
    Vec3::new(
        q(rng.gen_range(-span..=span), den),
        q(rng.gen_range(-span..=span), den),
        q(rng.gen_range(-span..=span), den),
    )
}

/// Random rational isometry, improper about half the time.
pub fn random_isometry<R: Rng>(rng: &mut R) -> Isometry {
    let mut m = random_rotation(rng);
    if rng.gen_bool(0.5) {
        for r in 0..3 {
            m.0[r][0] = -&m.0[r][0];
        }
    }
    Isometry::new(m, random_vec(rng, 6, 3)).unwrap()
}

/// Uniformly random strict derivation of up to `depth` moves; stops early
/// when every applicable move would overlap.
pub fn random_design<R: Rng>(
    rng: &mut R,
    grammar: GrammarId,
    kind: ShapeKind,
    alternate: bool,
    depth: usize,
) -> Design {
    let mut d = initial_design(grammar, kind, alternate).unwrap();
    for _ in 0..depth {
        let mut moves = applicable_moves(&d);
        let mut next = None;
        while !moves.is_empty() {
            let m = moves.swap_remove(rng.gen_range(0..moves.len()));
            if let Ok(n) = apply_move(&d, &m, ApplyMode::Strict) {
                next = Some(n);
                break;
            }
        }
        match next {
            Some(n) => d = n,
            None => break,
        }
    }
    d
}

fn distinct_points(d: &Design) -> Vec<Vec3> {
    let mut pts: Vec<Vec3> = d.all_vertices().cloned().collect();
    pts.sort();
    pts.dedup();
    pts
}

fn triple(a: &Vec3, b: &Vec3, c: &Vec3) -> ExactScalar {
    a.dot(&b.cross(c))
}

/// Four affinely independent points of the set, by first-fit.
fn affine_basis(pts: &[Vec3]) -> Option<[usize; 4]> {
    let i0 = 0;
    let i1 = (1..pts.len()).find(|&i| pts[i] != pts[i0])?;
    let u = &pts[i1] - &pts[i0];
    let i2 = (1..pts.len()).find(|&i| !u.cross(&(&pts[i] - &pts[i0])).is_zero())?;
    let v = &pts[i2] - &pts[i0];
    let i3 = (1..pts.len()).find(|&i| !triple(&u, &v, &(&pts[i] - &pts[i0])).is_zero())?;
    Some([i0, i1, i2, i3])
}

fn shape_forms(
    shapes: &[PolyShape],
    g: Option<&Isometry>,
    labeled: bool,
) -> Vec<(ShapeKind, Vec<Vec3>)> {
    let mut out: Vec<_> = shapes
        .iter()
        .map(|s| {
            let mut vs: Vec<Vec3> = s
                .vertices
                .iter()
                .map(|p| g.map_or_else(|| p.clone(), |g| g.apply(p)))
                .collect();
            if !labeled {
                vs.sort();
            }
            (s.kind, vs)
        })
        .collect();
    out.sort();
    out
}

/// Exact L1 equality: same solids (blind) or same labeled solids.
pub fn same_geometry(a: &Design, b: &Design, labeled: bool) -> bool {
    shape_forms(&a.shapes, None, labeled) == shape_forms(&b.shapes, None, labeled)
}

/// Vertex data of a design prepared for the congruence oracle.
pub struct OraclePoints {
    pts: Vec<Vec3>,
    dist: Vec<Vec<ExactScalar>>,
    /// Sorted distance row of each point; isometries preserve it.
    sig: Vec<Vec<ExactScalar>>,
    basis: [usize; 4],
    basis_inv: Mat3,
}

impl OraclePoints {
    pub fn new(d: &Design) -> Self {
        let pts = distinct_points(d);
        let dist: Vec<Vec<ExactScalar>> = pts
            .iter()
            .map(|p| pts.iter().map(|q| p.dist2(q)).collect())
            .collect();
        let sig = dist
            .iter()
            .map(|row| {
                let mut r = row.clone();
                r.sort();
                r
            })
            .collect();
        let basis = affine_basis(&pts).expect("solids span space");
        let m = Mat3::from_columns(
            &(&pts[basis[1]] - &pts[basis[0]]),
            &(&pts[basis[2]] - &pts[basis[0]]),
            &(&pts[basis[3]] - &pts[basis[0]]),
        );
        OraclePoints {
            pts,
            dist,
            sig,
            basis,
            basis_inv: m.inverse().expect("affine basis"),
        }
    }
}

/// Every isometry carrying the vertex set of `a` onto that of `b`, found by
/// sending `a`'s affine basis to each distance-compatible 4-tuple of `b`.
pub fn point_set_maps(a: &OraclePoints, b: &OraclePoints) -> Vec<Isometry> {
    let mut out = Vec::new();
    if a.pts.len() != b.pts.len() {
        return out;
    }
    let n = b.pts.len();
    let src = a.basis;
    let mut pick = [0usize; 4];
    let mut stack = vec![(0usize, 0usize)];
    // iterative depth-first search over 4-tuples with distance pruning
    while let Some((k, start)) = stack.pop() {
        if k == 4 {
            let p = &b.pts;
            let dst = Mat3::from_columns(
                &(&p[pick[1]] - &p[pick[0]]),
                &(&p[pick[2]] - &p[pick[0]]),
                &(&p[pick[3]] - &p[pick[0]]),
            );
            let qm = dst.mul(&a.basis_inv);
            if qm.is_orthogonal() {
                let t = &p[pick[0]] - &qm.mul_vec(&a.pts[src[0]]);
                let g = Isometry::new(qm, t).unwrap();
                let mut img: Vec<Vec3> = a.pts.iter().map(|x| g.apply(x)).collect();
                img.sort();
                if img == b.pts {
                    out.push(g);
                }
            }
            continue;
        }
        for i in start..n {
            if pick[..k].contains(&i) {
                continue;
            }
            if b.sig[i] == a.sig[src[k]]
                && (0..k).all(|j| b.dist[pick[j]][i] == a.dist[src[j]][src[k]])
            {
                stack.push((k, i + 1));
                pick[k] = i;
                stack.push((k + 1, 0));
                break;
            }
        }
    }
    out
}

/// Oracle verdicts for the pair `(a, b)`, in the order
/// blind L1, L2, L3, then label-sensitive L1, L2, L3.
pub fn relations(a: &Design, pa: &OraclePoints, b: &Design, pb: &OraclePoints) -> [bool; 6] {
    let mut r = [
        same_geometry(a, b, false),
        false,
        false,
        same_geometry(a, b, true),
        false,
        false,
    ];
    if a.shapes.len() != b.shapes.len() {
        return r;
    }
    let blind = shape_forms(&b.shapes, None, false);
    let labeled = shape_forms(&b.shapes, None, true);
    for g in point_set_maps(pa, pb) {
        let proper = g.is_proper();
        if shape_forms(&a.shapes, Some(&g), false) == blind {
            r[2] = true;
            r[1] |= proper;
        }
        if shape_forms(&a.shapes, Some(&g), true) == labeled {
            r[5] = true;
            r[4] |= proper;
        }
    }
    r
}

/// Brute-force congruence of two designs, with or without reflections,
/// comparing solids as vertex sets or as labeled vertex lists.
pub fn congruent(a: &Design, b: &Design, proper_only: bool, labeled: bool) -> bool {
    let r = relations(a, &OraclePoints::new(a), b, &OraclePoints::new(b));
    match (proper_only, labeled) {
        (true, false) => r[1],
        (false, false) => r[2],
        (true, true) => r[4],
        (false, true) => r[5],
    }
}

/// Outward halfspaces `n·x ≤ c` of a placed solid, from its vertex set and
/// face index triples, oriented away from the centroid.
pub fn halfspaces(s: &PolyShape) -> Vec<(Vec3, ExactScalar)> {
    let c = s.centroid();
    radiogram::polyhedra::canonical_shape(s.kind)
        .faces
        .iter()
        .map(|f| {
            let (a, b, d) = (&s.vertices[f[0]], &s.vertices[f[1]], &s.vertices[f[2]]);
            let mut n = (b - a).cross(&(d - a));
            if n.dot(&(&c - a)).signum() > 0 {
                n = -&n;
            }
            let k = n.dot(a);
            (n, k)
        })
        .collect()
}

fn solve3(p: &[&(Vec3, ExactScalar); 3]) -> Option<Vec3> {
    let m = Mat3::from_columns(&p[0].0, &p[1].0, &p[2].0).transpose();
    let det = m.det();
    if det.is_zero() {
        return None;
    }
    let rhs = Vec3::new(p[0].1.clone(), p[1].1.clone(), p[2].1.clone());
    // Cramer's rule
    let col = |i: usize| {
        let mut mi = m.clone();
        for r in 0..3 {
            mi.0[r][i] = rhs.components()[r].clone();
        }
        &mi.det() / &det
    };
    Some(Vec3::new(col(0), col(1), col(2)))
}

/// Rational feasibility oracle: enumerates the vertices of the intersection
/// of both solids' halfspaces; the interiors meet iff those vertices span
/// three dimensions.
pub fn interiors_meet_oracle(a: &PolyShape, b: &PolyShape) -> bool {
    let mut hs = halfspaces(a);
    hs.extend(halfspaces(b));
    let mut verts: Vec<Vec3> = Vec::new();
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            for k in j + 1..hs.len() {
                let Some(p) = solve3(&[&hs[i], &hs[j], &hs[k]]) else {
                    continue;
                };
                if hs.iter().all(|(n, c)| (&n.dot(&p) - c).signum() <= 0) && !verts.contains(&p) {
                    verts.push(p);
                }
            }
        }
    }
    affine_basis(&verts).is_some()
}

/// Two placed solids in a random relative position: glued across a face,
/// glued then nudged, overlapping copies, or independent nearby placements.
pub fn random_placement_pair<R: Rng>(rng: &mut R) -> (PolyShape, PolyShape) {
    let kinds = [ShapeKind::Tet, ShapeKind::Oct];
    let ka = kinds[rng.gen_range(0..2)];
    let kb = kinds[rng.gen_range(0..2)];
    let base = random_isometry(rng);
    let a = PolyShape::placed(ka, base.clone());
    let b = match rng.gen_range(0..5) {
        // glued across a face
        0 => {
            let d = initial_design(GrammarId::TetOct, ka, false).unwrap();
            let moves: Vec<_> = applicable_moves(&d)
                .into_iter()
                .filter(|m| m.kind == kb)
                .collect();
            let m = moves[rng.gen_range(0..moves.len())];
            let d = apply_move(&d, &m, ApplyMode::CountOnly).unwrap();
            d.shapes[1].transformed(&base)
        }
        // glued, then nudged
        1 => {
            let d = initial_design(GrammarId::TetOct, ka, false).unwrap();
            let moves: Vec<_> = applicable_moves(&d)
                .into_iter()
                .filter(|m| m.kind == kb)
                .collect();
            let m = moves[rng.gen_range(0..moves.len())];
            let d = apply_move(&d, &m, ApplyMode::CountOnly).unwrap();
            let nudge = Isometry::translation(random_vec(rng, 1, 6));
            d.shapes[1].transformed(&base).transformed(&nudge)
        }
        // same solid under a symmetry, or a lattice translate of it
        2 => {
            let syms = &canonical_symmetries(ka).elements;
            let s = &syms[rng.gen_range(0..syms.len())];
            let v = Vec3::from_ints(
                rng.gen_range(-1..=1),
                rng.gen_range(-1..=1),
                rng.gen_range(-1..=1),
            );
            PolyShape::placed(ka, base.compose(&Isometry::translation(v)).compose(s))
        }
        // independent placement near the first
        _ => {
            let g = random_isometry(rng);
            let shift = Isometry::translation(base.t() - g.t());
            PolyShape::placed(kb, shift.compose(&g))
                .transformed(&Isometry::translation(random_vec(rng, 3, 2)))
        }
    };
    (a, b)
}
