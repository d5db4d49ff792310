//! Exact planar primitives over the field: vectors, the slope order used to
//! pick winners, half-plane clipping of convex polygons, affine maps and
//! areas. Everything here is decided by exact signs; floats never appear.

use crate::realfield::{FieldElement, FieldSpec};
use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("slope comparison needs positive y components")]
    NonPositiveY,
    #[error("affine map is singular")]
    SingularMap,
    #[error("half-plane normal is zero")]
    ZeroNormal,
}

/// A point or vector with exact coordinates.
#[derive(Clone, PartialEq, Eq)]
pub struct Vec2 {
    pub x: FieldElement,
    pub y: FieldElement,
}

impl fmt::Debug for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.9}, {:.9})", self.x.to_f64(), self.y.to_f64())
    }
}

impl Vec2 {
    pub fn new(x: FieldElement, y: FieldElement) -> Self {
        Vec2 { x, y }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.x.to_f64(), self.y.to_f64())
    }

    pub fn cross(&self, other: &Vec2) -> FieldElement {
        &(&self.x * &other.y) - &(&self.y * &other.x)
    }

    pub fn norm_sq(&self) -> FieldElement {
        &(&self.x * &self.x) + &(&self.y * &self.y)
    }

    pub fn sub(&self, other: &Vec2) -> Vec2 {
        Vec2::new(&self.x - &other.x, &self.y - &other.y)
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }
}

/// Slope comparison for vectors with positive y components, in the order the
/// winner selection uses: the "smaller" vector is the shallower one, i.e. the
/// one with the larger x/y ratio. `Less` means v1 wins a slope tie-off.
pub fn slope_cmp(v1: &Vec2, v2: &Vec2) -> Result<Ordering, GeometryError> {
    if !v1.y.is_positive() || !v2.y.is_positive() {
        return Err(GeometryError::NonPositiveY);
    }
    // v1 smaller iff x1·y2 > x2·y1
    let d = &(&v1.x * &v2.y) - &(&v2.x * &v1.y);
    Ok(match d.sign() {
        s if s > 0 => Ordering::Less,
        0 => Ordering::Equal,
        _ => Ordering::Greater,
    })
}

/// Total order on the closed first quadrant used to sort lattice output:
/// ascending numeric slope y/x, with (0,0) first, horizontals next and
/// verticals last; ties resolved by squared length.
pub fn quadrant_slope_length_cmp(v1: &Vec2, v2: &Vec2) -> Ordering {
    match (v1.is_zero(), v2.is_zero()) {
        (true, true) => return Ordering::Equal,
        (true, false) => return Ordering::Less,
        (false, true) => return Ordering::Greater,
        _ => {}
    }
    // y1·x2 vs y2·x1 sorts by y/x ascending and puts verticals (x = 0) last
    let d = &(&v1.y * &v2.x) - &(&v2.y * &v1.x);
    match d.sign() {
        s if s < 0 => Ordering::Less,
        s if s > 0 => Ordering::Greater,
        _ => v1.norm_sq().cmp_exact(&v2.norm_sq()),
    }
}

/// The set {(a,b) : p·a + q·b + r ≥ 0} (or > 0 when `strict`). Strictness is
/// carried as metadata; membership-critical openness is enforced by the
/// predicates in the section module, not by the clipper.
#[derive(Clone, Debug)]
pub struct HalfPlane {
    pub p: FieldElement,
    pub q: FieldElement,
    pub r: FieldElement,
    pub strict: bool,
}

impl HalfPlane {
    pub fn new(p: FieldElement, q: FieldElement, r: FieldElement, strict: bool) -> Result<Self, GeometryError> {
        if p.is_zero() && q.is_zero() {
            return Err(GeometryError::ZeroNormal);
        }
        Ok(HalfPlane { p, q, r, strict })
    }

    pub fn eval(&self, pt: &Vec2) -> FieldElement {
        &(&(&self.p * &pt.x) + &(&self.q * &pt.y)) + &self.r
    }
}

/// A convex polygon with counterclockwise vertices; no duplicate or collinear
/// vertices survive construction. The empty polygon stands for the empty set.
#[derive(Clone)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl fmt::Debug for ConvexPolygon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConvexPolygon{:?}", self.vertices)
    }
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        ConvexPolygon { vertices: vec![] }
    }

    /// Normalize a cycle of vertices: drop repeats and collinear middles,
    /// orient counterclockwise, collapse degenerate (area zero) input to the
    /// empty polygon.
    pub fn new(vertices: Vec<Vec2>) -> Self {
        let mut vs = prune_cycle(vertices);
        if vs.len() < 3 {
            return ConvexPolygon::empty();
        }
        if signed_area_twice(&vs).sign() < 0 {
            vs.reverse();
        }
        if signed_area_twice(&vs).sign() <= 0 {
            return ConvexPolygon::empty();
        }
        ConvexPolygon { vertices: vs }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// Exact area by the shoelace formula; zero for the empty polygon.
    pub fn area(&self, spec: &Arc<FieldSpec>) -> FieldElement {
        if self.vertices.is_empty() {
            return spec.zero();
        }
        let two = spec.from_integer(2);
        &signed_area_twice(&self.vertices) / &two
    }

    /// Exact intersection with a half-plane (Sutherland–Hodgman step).
    pub fn clip(&self, hp: &HalfPlane) -> ConvexPolygon {
        if self.vertices.is_empty() {
            return ConvexPolygon::empty();
        }
        let n = self.vertices.len();
        let vals: Vec<FieldElement> = self.vertices.iter().map(|v| hp.eval(v)).collect();
        let signs: Vec<i32> = vals.iter().map(|v| v.sign()).collect();
        let mut out: Vec<Vec2> = Vec::new();
        for i in 0..n {
            let j = (i + 1) % n;
            if signs[i] >= 0 {
                out.push(self.vertices[i].clone());
            }
            if (signs[i] > 0 && signs[j] < 0) || (signs[i] < 0 && signs[j] > 0) {
                // crossing point: P + t (Q − P) with t = fP / (fP − fQ)
                let t = &vals[i] / &(&vals[i] - &vals[j]);
                let d = self.vertices[j].sub(&self.vertices[i]);
                out.push(Vec2::new(
                    &self.vertices[i].x + &(&t * &d.x),
                    &self.vertices[i].y + &(&t * &d.y),
                ));
            }
        }
        ConvexPolygon::new(out)
    }

    /// Apply an invertible affine map exactly; output is re-oriented CCW.
    pub fn map_affine(
        &self,
        m11: &FieldElement,
        m12: &FieldElement,
        m21: &FieldElement,
        m22: &FieldElement,
        t1: &FieldElement,
        t2: &FieldElement,
    ) -> Result<ConvexPolygon, GeometryError> {
        let det = &(m11 * m22) - &(m12 * m21);
        if det.is_zero() {
            return Err(GeometryError::SingularMap);
        }
        let vs = self
            .vertices
            .iter()
            .map(|v| {
                Vec2::new(
                    &(&(m11 * &v.x) + &(m12 * &v.y)) + t1,
                    &(&(m21 * &v.x) + &(m22 * &v.y)) + t2,
                )
            })
            .collect();
        Ok(ConvexPolygon::new(vs))
    }

    pub fn to_f64(&self) -> Vec<(f64, f64)> {
        self.vertices.iter().map(|v| v.to_f64()).collect()
    }
}

fn signed_area_twice(vs: &[Vec2]) -> FieldElement {
    let spec = vs[0].x.spec().clone();
    let mut acc = spec.zero();
    for i in 0..vs.len() {
        let j = (i + 1) % vs.len();
        acc = &acc + &vs[i].cross(&vs[j]);
    }
    acc
}

fn prune_cycle(vertices: Vec<Vec2>) -> Vec<Vec2> {
    // drop consecutive duplicates
    let mut vs: Vec<Vec2> = Vec::with_capacity(vertices.len());
    for v in vertices {
        if vs.last().map_or(true, |l| *l != v) {
            vs.push(v);
        }
    }
    while vs.len() > 1 && vs.first() == vs.last() {
        vs.pop();
    }
    // drop collinear middles until stable
    loop {
        let n = vs.len();
        if n < 3 {
            return vs;
        }
        let mut removed = false;
        for i in 0..n {
            let prev = &vs[(i + n - 1) % n];
            let next = &vs[(i + 1) % n];
            let cur = &vs[i];
            if cur.sub(prev).cross(&next.sub(cur)).is_zero() {
                vs.remove(i);
                removed = true;
                break;
            }
        }
        if !removed {
            return vs;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use std::collections::BTreeMap;

    fn spec() -> Arc<FieldSpec> {
        FieldSpec::new(
            vec![(-7).into(), 0.into(), 14.into(), 0.into(), (-7).into(), 0.into(), 1.into()],
            BigRational::new(15.into(), 8.into()),
            BigRational::from_integer(2.into()),
            BTreeMap::new(),
            Some(14),
        )
        .unwrap()
    }

    fn v(k: &Arc<FieldSpec>, x: i64, y: i64) -> Vec2 {
        Vec2::new(k.from_integer(x), k.from_integer(y))
    }

    fn unit_square(k: &Arc<FieldSpec>) -> ConvexPolygon {
        ConvexPolygon::new(vec![v(k, 0, 0), v(k, 1, 0), v(k, 1, 1), v(k, 0, 1)])
    }

    #[test]
    fn slope_order_basics() {
        let k = spec();
        assert_eq!(slope_cmp(&v(&k, 2, 1), &v(&k, 1, 1)).unwrap(), Ordering::Less);
        assert_eq!(slope_cmp(&v(&k, 1, 1), &v(&k, 1, 1)).unwrap(), Ordering::Equal);
        assert!(slope_cmp(&v(&k, 1, 0), &v(&k, 1, 1)).is_err());
    }

    #[test]
    fn clip_unit_square() {
        let k = spec();
        let sq = unit_square(&k);
        let hp = HalfPlane::new(k.one(), k.zero(), k.zero(), false).unwrap(); // a >= 0
        assert_eq!(sq.clip(&hp).area(&k), k.one());
        // a + b - 1 >= 0 keeps the upper triangle of area 1/2
        let hp2 = HalfPlane::new(k.one(), k.one(), &k.zero() - &k.one(), false).unwrap();
        let tri = sq.clip(&hp2);
        assert_eq!(&tri.area(&k) + &tri.area(&k), k.one());
        // clipping is idempotent
        assert_eq!(tri.clip(&hp2).area(&k), tri.area(&k));
        assert!(ConvexPolygon::empty().clip(&hp).is_empty());
        assert!(ConvexPolygon::empty().area(&k).is_zero());
    }

    #[test]
    fn affine_identity_and_scaling() {
        let k = spec();
        let sq = unit_square(&k);
        let id = sq
            .map_affine(&k.one(), &k.zero(), &k.zero(), &k.one(), &k.zero(), &k.zero())
            .unwrap();
        assert_eq!(id.area(&k), sq.area(&k));
        // area scales by |det| exactly, including orientation-reversing maps
        let m = sq
            .map_affine(&k.from_integer(3), &k.one(), &k.zero(), &k.from_integer(-2), &k.one(), &k.zero())
            .unwrap();
        assert_eq!(m.area(&k), k.from_integer(6));
        assert!(sq
            .map_affine(&k.one(), &k.one(), &k.one(), &k.one(), &k.zero(), &k.zero())
            .is_err());
    }

    #[test]
    fn collinear_vertices_are_pruned() {
        let k = spec();
        let p = ConvexPolygon::new(vec![
            v(&k, 0, 0),
            v(&k, 1, 0),
            v(&k, 2, 0),
            v(&k, 2, 2),
            v(&k, 0, 2),
        ]);
        assert_eq!(p.vertices().len(), 4);
        assert_eq!(p.area(&k), k.from_integer(4));
    }

    #[test]
    fn slope_order_transitive_on_random_triples() {
        let k = spec();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut rv = || v(&k, rng.gen_range(-30i64..30), rng.gen_range(1i64..30));
            let (a, b, c) = (rv(), rv(), rv());
            let ab = slope_cmp(&a, &b).unwrap();
            let bc = slope_cmp(&b, &c).unwrap();
            if ab == bc && ab != Ordering::Equal {
                assert_eq!(slope_cmp(&a, &c).unwrap(), ab);
            }
        }
    }

    #[test]
    fn shear_preserves_slope_order() {
        // M_{a,b} = [[a, b],[0, 1/a]] with a > 0 preserves the slope order
        let k = spec();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let a = k.from_rational(BigRational::new(
                BigInt::from(rng.gen_range(1i64..12)),
                BigInt::from(rng.gen_range(1i64..12)),
            ));
            let b = k.from_integer(rng.gen_range(-6i64..6));
            let ainv = a.inverse().unwrap();
            let mut rv = || v(&k, rng.gen_range(-30i64..30), rng.gen_range(1i64..30));
            let (v1, v2) = (rv(), rv());
            let m = |w: &Vec2| Vec2::new(&(&a * &w.x) + &(&b * &w.y), &ainv * &w.y);
            let (m1, m2) = (m(&v1), m(&v2));
            assert_eq!(
                slope_cmp(&v1, &v2).unwrap(),
                slope_cmp(&m1, &m2).unwrap()
            );
        }
    }
}
