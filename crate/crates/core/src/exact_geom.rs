//! Exact rational scalars, 3-vectors, 3×3 matrices and rigid motions.
//!
//! Every quantity in the engine is an arbitrary-precision rational. Lengths
//! are only ever compared squared, so no radicals are needed. Repeated face
//! reflections produce denominators that are powers of 3, which is why
//! fixed-width rationals are not an option here.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeomError {
    #[error("plane normal is the zero vector")]
    ZeroNormal,
    #[error("matrix is not orthogonal")]
    NotOrthogonal,
    #[error("matrix is singular")]
    Singular,
    #[error("cannot parse exact value {0:?}")]
    Parse(String),
}

/// An exact rational number, always held in lowest terms with a positive
/// denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactScalar(BigRational);

impl ExactScalar {
    pub fn zero() -> Self {
        ExactScalar(BigRational::zero())
    }

    pub fn one() -> Self {
        ExactScalar(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        ExactScalar(BigRational::from_integer(BigInt::from(n)))
    }

    /// `num / den`; panics when `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        ExactScalar(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big(r: BigRational) -> Self {
        ExactScalar(r)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn signum(&self) -> i32 {
        if self.0.is_positive() {
            1
        } else if self.0.is_negative() {
            -1
        } else {
            0
        }
    }

    pub fn abs(&self) -> Self {
        ExactScalar(self.0.abs())
    }

    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(ExactScalar(self.0.recip()))
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl Default for ExactScalar {
    fn default() -> Self {
        Self::zero()
    }
}

impl From<i64> for ExactScalar {
    fn from(n: i64) -> Self {
        Self::from_int(n)
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for ExactScalar {
    type Err = GeomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GeomError::Parse(s.to_string());
        let s = s.trim();
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let num: BigInt = num.parse().map_err(|_| bad())?;
        let den: BigInt = den.parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        Ok(ExactScalar(BigRational::new(num, den)))
    }
}

impl Serialize for ExactScalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExactScalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! scalar_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<&ExactScalar> for &ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &ExactScalar) -> ExactScalar {
                ExactScalar((&self.0).$method(&rhs.0))
            }
        }
        impl $tr<ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                ExactScalar(self.0.$method(rhs.0))
            }
        }
        impl $tr<&ExactScalar> for ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: &ExactScalar) -> ExactScalar {
                ExactScalar(self.0.$method(&rhs.0))
            }
        }
        impl $tr<ExactScalar> for &ExactScalar {
            type Output = ExactScalar;
            fn $method(self, rhs: ExactScalar) -> ExactScalar {
                ExactScalar((&self.0).$method(rhs.0))
            }
        }
    };
}

scalar_binop!(Add, add);
scalar_binop!(Sub, sub);
scalar_binop!(Mul, mul);
scalar_binop!(Div, div);

impl Neg for ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-self.0)
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar(-&self.0)
    }
}

impl AddAssign<&ExactScalar> for ExactScalar {
    fn add_assign(&mut self, rhs: &ExactScalar) {
        self.0 += &rhs.0;
    }
}

/// Exact point or direction in lattice units. Ordering is lexicographic on
/// `(x, y, z)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Vec3 {
    pub x: ExactScalar,
    pub y: ExactScalar,
    pub z: ExactScalar,
}

impl Vec3 {
    pub fn new(x: ExactScalar, y: ExactScalar, z: ExactScalar) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_ints(x: i64, y: i64, z: i64) -> Self {
        Vec3::new(x.into(), y.into(), z.into())
    }

    pub fn zero() -> Self {
        Vec3::default()
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero() && self.z.is_zero()
    }

    pub fn components(&self) -> [&ExactScalar; 3] {
        [&self.x, &self.y, &self.z]
    }

    pub fn dot(&self, o: &Vec3) -> ExactScalar {
        &self.x * &o.x + &self.y * &o.y + &self.z * &o.z
    }

    pub fn cross(&self, o: &Vec3) -> Vec3 {
        Vec3::new(
            &self.y * &o.z - &self.z * &o.y,
            &self.z * &o.x - &self.x * &o.z,
            &self.x * &o.y - &self.y * &o.x,
        )
    }

    pub fn norm2(&self) -> ExactScalar {
        self.dot(self)
    }

    pub fn dist2(&self, o: &Vec3) -> ExactScalar {
        (self - o).norm2()
    }

    pub fn scale(&self, k: &ExactScalar) -> Vec3 {
        Vec3::new(&self.x * k, &self.y * k, &self.z * k)
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [self.x.to_f64(), self.y.to_f64(), self.z.to_f64()]
    }

    /// Arithmetic mean of a non-empty point list.
    pub fn centroid(points: &[Vec3]) -> Vec3 {
        assert!(!points.is_empty(), "centroid of an empty point list");
        let mut sum = Vec3::zero();
        for p in points {
            sum = &sum + p;
        }
        sum.scale(&ExactScalar::ratio(1, points.len() as i64))
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.x, self.y, self.z)
    }
}

impl fmt::Debug for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for Vec3 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [&self.x, &self.y, &self.z].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vec3 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y, z] = <[ExactScalar; 3]>::deserialize(d)?;
        Ok(Vec3 { x, y, z })
    }
}

impl Add<&Vec3> for &Vec3 {
    type Output = Vec3;
    fn add(self, o: &Vec3) -> Vec3 {
        Vec3::new(&self.x + &o.x, &self.y + &o.y, &self.z + &o.z)
    }
}

impl Sub<&Vec3> for &Vec3 {
    type Output = Vec3;
    fn sub(self, o: &Vec3) -> Vec3 {
        Vec3::new(&self.x - &o.x, &self.y - &o.y, &self.z - &o.z)
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        &self + &o
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        &self - &o
    }
}

impl Neg for &Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-&self.x, -&self.y, -&self.z)
    }
}

/// Row-major 3×3 exact matrix.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Mat3(pub [[ExactScalar; 3]; 3]);

impl Mat3 {
    pub fn identity() -> Self {
        let mut m = Mat3::zero();
        for i in 0..3 {
            m.0[i][i] = ExactScalar::one();
        }
        m
    }

    pub fn zero() -> Self {
        Mat3(Default::default())
    }

    pub fn from_ints(rows: [[i64; 3]; 3]) -> Self {
        Mat3(rows.map(|r| r.map(ExactScalar::from_int)))
    }

    pub fn from_columns(a: &Vec3, b: &Vec3, c: &Vec3) -> Self {
        Mat3([
            [a.x.clone(), b.x.clone(), c.x.clone()],
            [a.y.clone(), b.y.clone(), c.y.clone()],
            [a.z.clone(), b.z.clone(), c.z.clone()],
        ])
    }

    pub fn get(&self, r: usize, c: usize) -> &ExactScalar {
        &self.0[r][c]
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        // symmetry matrices are mostly zeros and unit entries
        let row = |r: &[ExactScalar; 3]| {
            let mut acc = BigRational::zero();
            for (c, x) in r.iter().zip([&v.x, &v.y, &v.z]) {
                if c.0.is_zero() || x.0.is_zero() {
                    continue;
                }
                if c.0.is_one() {
                    acc += &x.0;
                } else if (-&c.0).is_one() {
                    acc -= &x.0;
                } else {
                    acc += &c.0 * &x.0;
                }
            }
            ExactScalar(acc)
        };
        Vec3::new(row(&self.0[0]), row(&self.0[1]), row(&self.0[2]))
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut out = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = &self.0[i][0] * &o.0[0][j]
                    + &self.0[i][1] * &o.0[1][j]
                    + &self.0[i][2] * &o.0[2][j];
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat3 {
        let mut out = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = self.0[j][i].clone();
            }
        }
        out
    }

    pub fn det(&self) -> ExactScalar {
        let m = &self.0;
        &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
            - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
            + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
    }

    /// Adjugate inverse; `None` for singular matrices.
    pub fn inverse(&self) -> Option<Mat3> {
        let det = self.det();
        let inv_det = det.recip()?;
        let m = &self.0;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| {
            &m[r0][c0] * &m[r1][c1] - &m[r0][c1] * &m[r1][c0]
        };
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        Some(Mat3(adj.map(|r| r.map(|x| x * &inv_det))))
    }

    pub fn is_orthogonal(&self) -> bool {
        self.transpose().mul(self) == Mat3::identity()
    }
}

/// Rigid motion `p ↦ Q·p + t` with orthogonal `Q`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Isometry {
    q: Mat3,
    t: Vec3,
    det_sign: i8,
}

impl Isometry {
    /// Validates orthogonality and caches the determinant sign.
    pub fn new(q: Mat3, t: Vec3) -> Result<Self, GeomError> {
        if !q.is_orthogonal() {
            return Err(GeomError::NotOrthogonal);
        }
        let det_sign = if q.det().signum() > 0 { 1 } else { -1 };
        Ok(Isometry { q, t, det_sign })
    }

    /// Skips the orthogonality check; callers guarantee `q` is orthogonal
    /// with determinant `det_sign`.
    pub(crate) fn from_parts_unchecked(q: Mat3, t: Vec3, det_sign: i8) -> Self {
        debug_assert!(q.is_orthogonal());
        debug_assert_eq!(q.det().signum() as i8, det_sign);
        Isometry { q, t, det_sign }
    }

    pub fn identity() -> Self {
        Isometry {
            q: Mat3::identity(),
            t: Vec3::zero(),
            det_sign: 1,
        }
    }

    pub fn translation(t: Vec3) -> Self {
        Isometry {
            q: Mat3::identity(),
            t,
            det_sign: 1,
        }
    }

    /// Linear part `Q` about the origin.
    pub fn linear(q: Mat3) -> Result<Self, GeomError> {
        Isometry::new(q, Vec3::zero())
    }

    pub fn q(&self) -> &Mat3 {
        &self.q
    }

    pub fn t(&self) -> &Vec3 {
        &self.t
    }

    pub fn det_sign(&self) -> i8 {
        self.det_sign
    }

    pub fn is_proper(&self) -> bool {
        self.det_sign > 0
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        let mut v = self.q.mul_vec(p);
        for (c, t) in [&mut v.x, &mut v.y, &mut v.z]
            .into_iter()
            .zip([&self.t.x, &self.t.y, &self.t.z])
        {
            if !t.is_zero() {
                *c += t;
            }
        }
        v
    }

    /// Applies only the linear part, for directions and normals.
    pub fn apply_linear(&self, v: &Vec3) -> Vec3 {
        self.q.mul_vec(v)
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry {
            q: self.q.mul(&other.q),
            t: self.apply(&other.t),
            det_sign: self.det_sign * other.det_sign,
        }
    }

    pub fn inverse(&self) -> Isometry {
        let qt = self.q.transpose();
        let t = -&qt.mul_vec(&self.t);
        Isometry {
            q: qt,
            t,
            det_sign: self.det_sign,
        }
    }

    /// Conjugates so that the linear part acts about `center`.
    pub fn about(q: Mat3, center: &Vec3) -> Result<Self, GeomError> {
        let t = center - &q.mul_vec(center);
        Isometry::new(q, t)
    }
}

/// Householder reflection through the plane `{p : n·p = d}`.
pub fn reflection_through_plane(n: &Vec3, d: &ExactScalar) -> Result<Isometry, GeomError> {
    if n.is_zero() {
        return Err(GeomError::ZeroNormal);
    }
    let nn = n.norm2();
    let two_over = ExactScalar::from_int(2) / &nn;
    let nc = n.components();
    let mut q = Mat3::identity();
    for (i, ni) in nc.iter().enumerate() {
        for (j, nj) in nc.iter().enumerate() {
            q.0[i][j] = &q.0[i][j] - &(&two_over * (*ni * *nj));
        }
    }
    let t = n.scale(&(&two_over * d));
    Ok(Isometry { q, t, det_sign: -1 })
}

impl Serialize for Isometry {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        IsometryDoc {
            q: self.q.0.clone(),
            t: self.t.clone(),
            det_sign: self.det_sign,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Isometry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = IsometryDoc::deserialize(d)?;
        let iso = Isometry::new(Mat3(doc.q), doc.t).map_err(serde::de::Error::custom)?;
        if iso.det_sign != doc.det_sign {
            return Err(serde::de::Error::custom("det_sign does not match matrix"));
        }
        Ok(iso)
    }
}

#[derive(Serialize, Deserialize)]
struct IsometryDoc {
    q: [[ExactScalar; 3]; 3],
    t: Vec3,
    det_sign: i8,
}

/// Total order used wherever isometries must be listed deterministically.
pub fn cmp_isometry(a: &Isometry, b: &Isometry) -> Ordering {
    b.det_sign
        .cmp(&a.det_sign)
        .then_with(|| a.q.cmp(&b.q))
        .then_with(|| a.t.cmp(&b.t))
}
