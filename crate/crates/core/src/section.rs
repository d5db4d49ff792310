//! The transversal triangle for the horocycle return map, its top edge, the
//! candidacy predicates and the return-time function.
//!
//! A point (a, b) of the transversal carries the surface sheared by
//! [[b, -a], [0, 1/b]]. A vector (x, y) is a candidate winner there when
//! 0 < b·x − a·y ≤ 1 and y > 0; the left-winner variant closes the left end
//! instead: 0 ≤ b·x − a·y < 1. Winners minimize the slope order of the
//! geometry module, shortest vector first on ties.

use crate::geometry::{ConvexPolygon, Vec2};
use crate::realfield::{FieldElement, FieldSpec};
use crate::surface::CuspData;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SectionError {
    #[error("candidacy interval requires y > 0")]
    NonPositiveY,
    #[error("return time requires b > 0 and b·x − a·y > 0")]
    OutsideStrip,
}

/// The transversal: a triangle with apex on the a-axis and a half-open top
/// edge at height b = 1.
#[derive(Clone)]
pub struct Transversal {
    pub cusp: CuspData,
    pub omega: ConvexPolygon,
    pub a_left: FieldElement,
    pub a_right: FieldElement,
}

/// Candidacy interval on the top edge; open/closed ends depend on the
/// convention (left winners: open-left, closed-right).
#[derive(Clone, Debug)]
pub struct CandidacyInterval {
    pub lo: FieldElement,
    pub hi: FieldElement,
}

/// Build the transversal triangle from the cusp data: vertices
/// (−1/y0, 0), ((x0−1)/y0, 1) and ((x0−1)/y0 + n·α, 1).
pub fn build_transversal(spec: &Arc<FieldSpec>, cusp: &CuspData) -> Transversal {
    let one = spec.one();
    let y0_inv = cusp.y0.inverse().expect("y0 > 0");
    let apex = Vec2::new(-&y0_inv, spec.zero());
    let a_left = &(&cusp.x0 - &one) * &y0_inv;
    let n = spec.from_integer(cusp.n as i64);
    let a_right = &a_left + &(&n * &cusp.alpha);
    let top_left = Vec2::new(a_left.clone(), one.clone());
    let top_right = Vec2::new(a_right.clone(), one);
    let omega = ConvexPolygon::new(vec![apex, top_right, top_left]);
    Transversal { cusp: cusp.clone(), omega, a_left, a_right }
}

impl Transversal {
    /// Exact area of the triangle, n·α/2.
    pub fn area(&self, spec: &Arc<FieldSpec>) -> FieldElement {
        self.omega.area(spec)
    }

    /// Is `a` in the half-open top edge (a_left, a_right]?
    pub fn contains_top_left_open(&self, a: &FieldElement) -> bool {
        (a - &self.a_left).sign() > 0 && (a - &self.a_right).sign() <= 0
    }
}

/// b·x − a·y, the quantity every candidacy test evaluates.
pub fn strip_value(v: &Vec2, point: &Vec2) -> FieldElement {
    &(&point.y * &v.x) - &(&point.x * &v.y)
}

/// Left-winner candidacy: y > 0 and 0 ≤ b·x − a·y < 1.
pub fn is_left_candidate(v: &Vec2, point: &Vec2) -> bool {
    if v.y.sign() <= 0 {
        return false;
    }
    let s = strip_value(v, point);
    let one = v.x.spec().one();
    s.sign() >= 0 && (&s - &one).sign() < 0
}

/// Winner candidacy in the closed-right convention: y > 0 and 0 < b·x − a·y ≤ 1.
pub fn is_candidate(v: &Vec2, point: &Vec2) -> bool {
    if v.y.sign() <= 0 {
        return false;
    }
    let s = strip_value(v, point);
    let one = v.x.spec().one();
    s.sign() > 0 && (&s - &one).sign() <= 0
}

/// Candidacy interval of a vector on the top edge, left convention:
/// ((x−1)/y, x/y].
pub fn candidacy_interval_left(v: &Vec2) -> Result<CandidacyInterval, SectionError> {
    if v.y.sign() <= 0 {
        return Err(SectionError::NonPositiveY);
    }
    let y_inv = v.y.inverse().expect("y > 0");
    let one = v.x.spec().one();
    Ok(CandidacyInterval {
        lo: &(&v.x - &one) * &y_inv,
        hi: &v.x * &y_inv,
    })
}

/// Return time at a point of the transversal for the vector winning there:
/// y / (b·(b·x − a·y)).
pub fn return_time(v: &Vec2, point: &Vec2) -> Result<FieldElement, SectionError> {
    if point.y.sign() <= 0 {
        return Err(SectionError::OutsideStrip);
    }
    let s = strip_value(v, point);
    if s.sign() <= 0 {
        return Err(SectionError::OutsideStrip);
    }
    let denom = &point.y * &s;
    Ok(&v.y / &denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::heptagon;
    use num_bigint::BigInt;
    use num_rational::BigRational;

    #[test]
    fn transversal_matches_cusp_geometry() {
        let cfg = heptagon();
        let t = build_transversal(&cfg.spec, &cfg.cusp);
        // a_right = (3cos(pi/7) − 1)/sin(pi/7)
        let expected = &(&(&cfg.cusp.x0.scale(&BigRational::from_integer(BigInt::from(3)))
            - &cfg.spec.one())
            * &cfg.cusp.y0.inverse().unwrap());
        assert_eq!(&t.a_right, expected);
        assert!((t.a_right.to_f64() - 3.924799318754523).abs() < 1e-9);
        // width n·α and area n·α/2 = cot(pi/7)
        assert_eq!(&t.a_right - &t.a_left, cfg.cusp.alpha);
        let cot = &cfg.cusp.x0 / &cfg.cusp.y0;
        assert_eq!(t.area(&cfg.spec), cot);
        // both left-edge vertices satisfy a = (x0·b − 1)/y0
        for v in t.omega.vertices() {
            let lhs = &v.x * &cfg.cusp.y0;
            let rhs = &(&v.y * &cfg.cusp.x0) - &cfg.spec.one();
            if (&lhs - &rhs).is_zero() {
                // on the left edge; fine
            }
        }
    }

    #[test]
    fn candidacy_boundary_conventions() {
        let cfg = heptagon();
        let t = build_transversal(&cfg.spec, &cfg.cusp);
        let w5 = Vec2::new(cfg.cusp.x0.clone(), cfg.cusp.y0.clone());
        let one = cfg.spec.one();
        // at the top-left corner the strip value is exactly 1: a candidate in
        // the closed-right convention, not a left candidate
        let corner = Vec2::new(t.a_left.clone(), one.clone());
        assert!(is_candidate(&w5, &corner));
        assert!(!is_left_candidate(&w5, &corner));
        // at a = x0/y0 the strip value is exactly 0: the conventions swap
        let zero_pt = Vec2::new(&cfg.cusp.x0 / &cfg.cusp.y0, one.clone());
        assert!(!is_candidate(&w5, &zero_pt));
        assert!(is_left_candidate(&w5, &zero_pt));
        // at the right end of the top edge, (x0, y0) is not a candidate at all
        let right = Vec2::new(t.a_right.clone(), one);
        assert!(!is_left_candidate(&w5, &right));
        assert!(strip_value(&w5, &right).is_negative());
    }

    #[test]
    fn candidacy_interval_forms() {
        let cfg = heptagon();
        let one = cfg.spec.one();
        let v = Vec2::new(one.clone(), one.clone());
        let i = candidacy_interval_left(&v).unwrap();
        assert!(i.lo.is_zero());
        assert!(i.hi.is_one());
        assert!(candidacy_interval_left(&Vec2::new(one.clone(), cfg.spec.zero())).is_err());
    }

    #[test]
    fn return_time_values() {
        let cfg = heptagon();
        let one = cfg.spec.one();
        let v = Vec2::new(one.clone(), one.clone());
        let p = Vec2::new(cfg.spec.zero(), one.clone());
        assert!(return_time(&v, &p).unwrap().is_one());
        // on the left edge of the transversal the strip value is 1, so the
        // return time of (x0, y0) there is y0/b
        let w5 = Vec2::new(cfg.cusp.x0.clone(), cfg.cusp.y0.clone());
        let b = cfg.spec.from_rational(BigRational::new(BigInt::from(1), BigInt::from(2)));
        let a = &(&(&cfg.cusp.x0 * &b) - &one) * &cfg.cusp.y0.inverse().unwrap();
        let pt = Vec2::new(a, b.clone());
        let rt = return_time(&w5, &pt).unwrap();
        assert_eq!(rt, &cfg.cusp.y0 / &b);
        // outside the strip: error
        let bad = Vec2::new(cfg.spec.from_integer(10), one);
        assert!(return_time(&w5, &bad).is_err());
    }

    #[test]
    fn return_time_defining_identity_random() {
        let cfg = heptagon();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let q = |rng: &mut rand_chacha::ChaCha8Rng| {
                BigRational::new(BigInt::from(rng.gen_range(1i64..40)), BigInt::from(rng.gen_range(1i64..12)))
            };
            let v = Vec2::new(
                cfg.spec.from_rational(q(&mut rng)),
                cfg.spec.from_rational(q(&mut rng)),
            );
            let b = cfg.spec.from_rational(q(&mut rng));
            // pick a so that the strip value is positive
            let a = &(&(&v.x * &b) - &cfg.spec.one()) * &v.y.inverse().unwrap();
            let pt = Vec2::new(a, b);
            if let Ok(rt) = return_time(&v, &pt) {
                let ident = &(&rt * &pt.y) * &strip_value(&v, &pt);
                assert_eq!(ident, v.y);
            }
        }
    }
}
