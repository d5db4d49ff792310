//! Exact arithmetic in a fixed totally real number field Q(θ).
//!
//! Every coordinate in the pipeline is a [`FieldElement`]: a rational
//! polynomial in θ of degree < d, where θ is the single real root of a monic
//! irreducible integer polynomial isolated by a rational interval. Zero
//! testing is a coefficient-vector check (sound because the polynomial is
//! irreducible), and sign determination refines the isolating interval with
//! rational interval arithmetic until the value interval excludes zero.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, RwLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("minimal polynomial must be monic with degree >= 2")]
    BadPolynomial,
    #[error("root interval ({0}, {1}) does not isolate exactly one root (found {2})")]
    BadRootInterval(BigRational, BigRational, usize),
    #[error("division by zero field element")]
    DivisionByZero,
    #[error("unknown constant {0:?}; available: {1}")]
    UnknownConstant(String, String),
    #[error("constant {0:?} has {1} coefficients but the field has degree {2}")]
    BadConstantLength(String, usize, usize),
    #[error("trigonometric constants need a trig_base (generator 2cos(pi/N)) in the field spec")]
    NoTrigBase,
    #[error("elements belong to different field specs")]
    SpecMismatch,
}

/// Rational interval `[lo, hi]`, the workhorse of sign determination.
#[derive(Clone, Debug)]
struct Interval {
    lo: BigRational,
    hi: BigRational,
}

impl Interval {
    fn point(v: BigRational) -> Self {
        Interval { lo: v.clone(), hi: v }
    }

    fn add(&self, o: &Interval) -> Interval {
        Interval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    fn mul(&self, o: &Interval) -> Interval {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        let mut lo = c[0].clone();
        let mut hi = c[0].clone();
        for v in &c[1..] {
            if *v < lo {
                lo = v.clone();
            }
            if *v > hi {
                hi = v.clone();
            }
        }
        Interval { lo, hi }
    }

    fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }
}

/// Evaluate a polynomial (ascending coefficients) over an interval by Horner.
fn eval_interval(coeffs: &[BigRational], x: &Interval) -> Interval {
    let mut acc = Interval::point(BigRational::zero());
    for c in coeffs.iter().rev() {
        acc = acc.mul(x).add(&Interval::point(c.clone()));
    }
    acc
}

fn eval_rational(coeffs: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Number of sign changes of the Sturm sequence of `p` at `x`.
fn sturm_changes(seq: &[Vec<BigRational>], x: &BigRational) -> usize {
    let mut changes = 0;
    let mut last: Option<bool> = None;
    for poly in seq {
        let v = eval_rational(poly, x);
        if v.is_zero() {
            continue;
        }
        let pos = v.is_positive();
        if let Some(l) = last {
            if l != pos {
                changes += 1;
            }
        }
        last = Some(pos);
    }
    changes
}

fn poly_derivative(p: &[BigRational]) -> Vec<BigRational> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
        .collect()
}

fn poly_trim(mut p: Vec<BigRational>) -> Vec<BigRational> {
    while p.last().map_or(false, |c| c.is_zero()) {
        p.pop();
    }
    p
}

/// Remainder of polynomial division, ascending coefficients.
fn poly_rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = &b[db];
    while r.len() > db && !r.is_empty() {
        let dr = r.len() - 1;
        let q = &r[dr] / lead;
        if !q.is_zero() {
            for i in 0..=db {
                let t = &b[i] * &q;
                r[dr - db + i] = &r[dr - db + i] - t;
            }
        }
        r.pop();
        r = poly_trim(r);
        if r.len() <= db {
            break;
        }
    }
    r
}

fn sturm_sequence(p: &[BigRational]) -> Vec<Vec<BigRational>> {
    let mut seq = vec![p.to_vec(), poly_trim(poly_derivative(p))];
    loop {
        let n = seq.len();
        if seq[n - 1].is_empty() {
            seq.pop();
            break;
        }
        let r = poly_rem(&seq[n - 2], &seq[n - 1]);
        if r.is_empty() {
            break;
        }
        seq.push(r.iter().map(|c| -c).collect());
    }
    seq
}

/// Specification of the working field: minimal polynomial, isolating interval
/// for the chosen real root, and a table of named constants.
pub struct FieldSpec {
    min_poly: Vec<BigRational>,
    degree: usize,
    root: RwLock<Interval>,
    constants: BTreeMap<String, Vec<BigRational>>,
    trig_base: Option<u32>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("degree", &self.degree)
            .field("trig_base", &self.trig_base)
            .finish()
    }
}

impl FieldSpec {
    /// Build a spec from a monic integer polynomial (ascending coefficients),
    /// an isolating interval and a table of named coefficient vectors.
    ///
    /// Irreducibility is declared by the caller; single-rootedness of the
    /// interval is verified here with a Sturm sequence.
    pub fn new(
        min_poly_int: Vec<BigInt>,
        lo: BigRational,
        hi: BigRational,
        constants: BTreeMap<String, Vec<BigRational>>,
        trig_base: Option<u32>,
    ) -> Result<Arc<FieldSpec>, FieldError> {
        let min_poly: Vec<BigRational> =
            min_poly_int.iter().map(|c| BigRational::from_integer(c.clone())).collect();
        let degree = min_poly.len().saturating_sub(1);
        if degree < 2 || !min_poly[degree].is_one() {
            return Err(FieldError::BadPolynomial);
        }
        let flo = eval_rational(&min_poly, &lo);
        let fhi = eval_rational(&min_poly, &hi);
        if flo.is_zero() || fhi.is_zero() || flo.is_positive() == fhi.is_positive() {
            return Err(FieldError::BadRootInterval(lo, hi, 0));
        }
        let seq = sturm_sequence(&min_poly);
        let roots = sturm_changes(&seq, &lo) - sturm_changes(&seq, &hi);
        if roots != 1 {
            return Err(FieldError::BadRootInterval(lo, hi, roots));
        }
        for (name, v) in &constants {
            if v.len() > degree {
                return Err(FieldError::BadConstantLength(name.clone(), v.len(), degree));
            }
        }
        let spec = Arc::new(FieldSpec {
            min_poly,
            degree,
            root: RwLock::new(Interval { lo, hi }),
            constants,
            trig_base,
        });
        spec.refine_root(128);
        Ok(spec)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn min_poly(&self) -> Vec<BigRational> {
        self.min_poly.clone()
    }

    pub fn constant_names(&self) -> Vec<String> {
        self.constants.keys().cloned().collect()
    }

    /// Bisect the isolating interval `steps` times.
    fn refine_root(&self, steps: usize) {
        let mut iv = self.root.write().unwrap();
        let two = BigRational::from_integer(BigInt::from(2));
        let sign_lo = eval_rational(&self.min_poly, &iv.lo).is_positive();
        for _ in 0..steps {
            let mid = (&iv.lo + &iv.hi) / &two;
            let v = eval_rational(&self.min_poly, &mid);
            // rational roots are impossible for an irreducible polynomial of
            // degree >= 2, so the sign at the midpoint is well defined
            assert!(!v.is_zero(), "isolating interval hit an exact rational root");
            if v.is_positive() == sign_lo {
                iv.lo = mid;
            } else {
                iv.hi = mid;
            }
        }
    }

    fn root_interval(&self) -> Interval {
        self.root.read().unwrap().clone()
    }
}

/// An element of the field: rational coefficients c0 + c1 θ + … + c_{d−1} θ^{d−1}.
#[derive(Clone)]
pub struct FieldElement {
    spec: Arc<FieldSpec>,
    coeffs: Vec<BigRational>,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldElement[{}~{:.9}]", self.coeff_string(), self.to_f64())
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff_string())
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}
impl Eq for FieldElement {}

impl FieldElement {
    fn check_spec(&self, other: &FieldElement) {
        assert!(
            Arc::ptr_eq(&self.spec, &other.spec),
            "field elements from different specs"
        );
    }

    pub fn spec(&self) -> &Arc<FieldSpec> {
        &self.spec
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff_string(&self) -> String {
        self.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    /// Exact sign: −1, 0, +1.
    pub fn sign(&self) -> i32 {
        if self.is_zero() {
            return 0;
        }
        loop {
            let iv = self.spec.root_interval();
            let val = eval_interval(&self.coeffs, &iv);
            if val.lo.is_positive() {
                return 1;
            }
            if val.hi.is_negative() {
                return -1;
            }
            self.spec.refine_root(32);
        }
    }

    pub fn is_positive(&self) -> bool {
        self.sign() > 0
    }

    pub fn is_negative(&self) -> bool {
        self.sign() < 0
    }

    /// Exact comparison through the sign of the difference.
    pub fn cmp_exact(&self, other: &FieldElement) -> std::cmp::Ordering {
        match (self - other).sign() {
            s if s < 0 => std::cmp::Ordering::Less,
            0 => std::cmp::Ordering::Equal,
            _ => std::cmp::Ordering::Greater,
        }
    }

    /// A rational within `eps > 0` of the exact value, by interval refinement.
    pub fn approx(&self, eps: &BigRational) -> BigRational {
        assert!(eps.is_positive(), "approx needs eps > 0");
        let two = BigRational::from_integer(BigInt::from(2));
        loop {
            let iv = self.spec.root_interval();
            let val = eval_interval(&self.coeffs, &iv);
            if val.width() <= eps * &two {
                return (&val.lo + &val.hi) / &two;
            }
            self.spec.refine_root(32);
        }
    }

    /// Nearest-enough f64; plenty for reporting and numeric sweeps.
    pub fn to_f64(&self) -> f64 {
        // crude magnitude estimate, then an absolute tolerance below 1 ulp of it
        let iv = self.spec.root_interval();
        let val = eval_interval(&self.coeffs, &iv);
        let rough = rational_to_f64(&val.hi).abs().max(rational_to_f64(&val.lo).abs());
        let scale = if rough > 1.0 { rough } else { 1.0 };
        let eps = BigRational::new(BigInt::one(), BigInt::from(1u64 << 60))
            * BigRational::from_float(scale).unwrap_or_else(BigRational::one);
        rational_to_f64(&self.approx(&eps))
    }

    pub fn inverse(&self) -> Result<FieldElement, FieldError> {
        if self.is_zero() {
            return Err(FieldError::DivisionByZero);
        }
        // extended Euclid in Q[x]: s·e + t·p = 1 (p irreducible, e nonzero)
        let p = self.spec.min_poly.clone();
        let e = poly_trim(self.coeffs.clone());
        let (mut r0, mut r1) = (p, e);
        let mut s0: Vec<BigRational> = vec![];
        let mut s1: Vec<BigRational> = vec![BigRational::one()];
        while !r1.is_empty() && r1.len() > 1 {
            let (q, r) = poly_divmod(&r0, &r1);
            let s = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        assert!(!r1.is_empty(), "gcd degree > 0 contradicts irreducibility");
        let c = r1[0].clone(); // nonzero constant gcd
        let mut inv = poly_mul(&s1, &[BigRational::one() / c]);
        inv = poly_rem(&inv, &self.spec.min_poly);
        Ok(self.spec.element_from_rationals(inv))
    }

    pub fn checked_div(&self, other: &FieldElement) -> Result<FieldElement, FieldError> {
        self.check_spec(other);
        Ok(self * &other.inverse()?)
    }

    pub fn square(&self) -> FieldElement {
        self * self
    }

    pub fn scale(&self, q: &BigRational) -> FieldElement {
        FieldElement {
            spec: self.spec.clone(),
            coeffs: self.coeffs.iter().map(|c| c * q).collect(),
        }
    }

    pub fn abs(&self) -> FieldElement {
        if self.sign() < 0 {
            -self
        } else {
            self.clone()
        }
    }
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + x * y;
        }
    }
    poly_trim(out)
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let mut out = vec![BigRational::zero(); n];
    for (i, x) in a.iter().enumerate() {
        out[i] = x.clone();
    }
    for (i, y) in b.iter().enumerate() {
        out[i] = &out[i] - y;
    }
    poly_trim(out)
}

fn poly_divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = &b[db];
    let mut q = vec![BigRational::zero(); a.len().saturating_sub(db)];
    while r.len() > db {
        let dr = r.len() - 1;
        let c = &r[dr] / lead;
        q[dr - db] = c.clone();
        for i in 0..=db {
            let t = &b[i] * &c;
            r[dr - db + i] = &r[dr - db + i] - t;
        }
        r.pop();
        r = poly_trim(r);
    }
    (poly_trim(q), r)
}

impl FieldSpec {
    fn element_from_rationals(self: &Arc<Self>, mut coeffs: Vec<BigRational>) -> FieldElement {
        if coeffs.len() > self.degree {
            coeffs = poly_rem(&coeffs, &self.min_poly);
        }
        coeffs.resize(self.degree, BigRational::zero());
        FieldElement { spec: self.clone(), coeffs }
    }

    pub fn element(self: &Arc<Self>, coeffs: Vec<BigRational>) -> FieldElement {
        self.element_from_rationals(coeffs)
    }

    pub fn zero(self: &Arc<Self>) -> FieldElement {
        self.element_from_rationals(vec![])
    }

    pub fn one(self: &Arc<Self>) -> FieldElement {
        self.element_from_rationals(vec![BigRational::one()])
    }

    pub fn from_integer(self: &Arc<Self>, n: i64) -> FieldElement {
        self.element_from_rationals(vec![BigRational::from_integer(BigInt::from(n))])
    }

    pub fn from_rational(self: &Arc<Self>, q: BigRational) -> FieldElement {
        self.element_from_rationals(vec![q])
    }

    /// θ itself.
    pub fn generator(self: &Arc<Self>) -> FieldElement {
        self.element_from_rationals(vec![BigRational::zero(), BigRational::one()])
    }

    /// 2cos(kπ/N) for the declared trig base N, by the Chebyshev-style
    /// recurrence c_{k+1} = θ·c_k − c_{k−1} with c_0 = 2, c_1 = θ.
    pub fn two_cos(self: &Arc<Self>, k: u32) -> Result<FieldElement, FieldError> {
        if self.trig_base.is_none() {
            return Err(FieldError::NoTrigBase);
        }
        let mut c0 = self.from_integer(2);
        let mut c1 = self.generator();
        if k == 0 {
            return Ok(c0);
        }
        for _ in 1..k {
            let next = &(&self.generator() * &c1) - &c0;
            c0 = c1;
            c1 = next;
        }
        Ok(c1)
    }

    /// Look up a named constant, or derive cos(kπ/N) / sin(kπ/N) from the
    /// generator when the name has that shape.
    pub fn constant(self: &Arc<Self>, name: &str) -> Result<FieldElement, FieldError> {
        if let Some(v) = self.constants.get(name) {
            return Ok(self.element_from_rationals(v.clone()));
        }
        if let Some(e) = self.try_trig_constant(name)? {
            return Ok(e);
        }
        // bare rational literals are allowed wherever constant names are
        if let Ok(q) = name.parse::<BigRational>() {
            return Ok(self.from_rational(q));
        }
        Err(FieldError::UnknownConstant(
            name.to_string(),
            self.constants.keys().cloned().collect::<Vec<_>>().join(", "),
        ))
    }

    fn try_trig_constant(self: &Arc<Self>, name: &str) -> Result<Option<FieldElement>, FieldError> {
        let (kind, rest) = if let Some(r) = name.strip_prefix("cos(") {
            ("cos", r)
        } else if let Some(r) = name.strip_prefix("sin(") {
            ("sin", r)
        } else {
            return Ok(None);
        };
        let Some(body) = rest.strip_suffix(")") else { return Ok(None) };
        let Some((kpart, npart)) = body.split_once("pi/") else { return Ok(None) };
        let k: u32 = if kpart.is_empty() { 1 } else { match kpart.trim_end_matches('*').parse() {
            Ok(k) => k,
            Err(_) => return Ok(None),
        }};
        let n: u32 = match npart.parse() {
            Ok(n) => n,
            Err(_) => return Ok(None),
        };
        let base = self.trig_base.ok_or(FieldError::NoTrigBase)?;
        if base % n != 0 {
            return Err(FieldError::UnknownConstant(
                name.to_string(),
                format!("trig base {base} is not a multiple of {n}"),
            ));
        }
        let k = k * (base / n);
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let e = match kind {
            "cos" => self.two_cos(k)?,
            _ => {
                // sin(kπ/N) = cos((N/2 − k)π/N); needs an even base
                if base % 2 != 0 {
                    return Err(FieldError::NoTrigBase);
                }
                let j = base / 2;
                let kk = if k <= j { j - k } else { k - j };
                let c = self.two_cos(kk)?;
                if k <= j { c } else { -&c }
            }
        };
        Ok(Some(e.scale(&half)))
    }
}

impl Add for &FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &FieldElement) -> FieldElement {
        self.check_spec(rhs);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        FieldElement { spec: self.spec.clone(), coeffs }
    }
}

impl Sub for &FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &FieldElement) -> FieldElement {
        self.check_spec(rhs);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        FieldElement { spec: self.spec.clone(), coeffs }
    }
}

impl Mul for &FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &FieldElement) -> FieldElement {
        self.check_spec(rhs);
        let prod = poly_mul(&self.coeffs, &rhs.coeffs);
        self.spec.element_from_rationals(prod)
    }
}

impl Div for &FieldElement {
    type Output = FieldElement;
    /// Panics on a zero divisor; use [`FieldElement::checked_div`] to recover.
    fn div(self, rhs: &FieldElement) -> FieldElement {
        self.checked_div(rhs).expect("division by zero field element")
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            spec: self.spec.clone(),
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

/// Robust BigRational → f64 (num's ToPrimitive overflows on wide ratios).
pub fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let neg = r.is_negative();
    let num = r.numer().abs().to_biguint().unwrap();
    let den = r.denom().abs().to_biguint().unwrap();
    let shift = 64i64 + den.bits() as i64 - num.bits() as i64;
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let v = q.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(-shift as i32);
    if neg {
        -v
    } else {
        v
    }
}

/// Parse "num/den" or integer literals into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    s.trim()
        .parse::<BigRational>()
        .map_err(|e| format!("bad rational {s:?}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn heptagon_spec() -> Arc<FieldSpec> {
        // x^6 - 7x^4 + 14x^2 - 7, root 2cos(pi/14) in (15/8, 2)
        FieldSpec::new(
            vec![(-7).into(), 0.into(), 14.into(), 0.into(), (-7).into(), 0.into(), 1.into()],
            BigRational::new(15.into(), 8.into()),
            BigRational::from_integer(2.into()),
            BTreeMap::new(),
            Some(14),
        )
        .unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn construction_rejects_bad_interval() {
        let err = FieldSpec::new(
            vec![(-7).into(), 0.into(), 14.into(), 0.into(), (-7).into(), 0.into(), 1.into()],
            BigRational::from_integer(0.into()),
            BigRational::from_integer(2.into()),
            BTreeMap::new(),
            None,
        );
        assert!(err.is_err()); // (0,2) holds three roots
    }

    #[test]
    fn one_times_x_is_x() {
        let k = heptagon_spec();
        let x = k.element(vec![q(3, 7), q(-1, 2), q(5, 1), q(0, 1), q(2, 3), q(1, 9)]);
        assert_eq!(&k.one() * &x, x);
    }

    #[test]
    fn two_cos_pi_over_7_satisfies_its_cubic() {
        let k = heptagon_spec();
        let e = k.two_cos(2).unwrap(); // 2cos(2π/14) = 2cos(π/7)
        let cubic = &(&(&e * &e) * &e) - &(&e * &e);
        let val = &(&cubic - &e.scale(&q(2, 1))) + &k.one();
        assert!(val.is_zero());
    }

    #[test]
    fn inverse_roundtrip_l2() {
        let k = heptagon_spec();
        let l2 = k.two_cos(2).unwrap();
        assert!((&l2 * &l2.inverse().unwrap()).is_one());
    }

    #[test]
    fn division_by_zero_reports() {
        let k = heptagon_spec();
        assert!(matches!(k.one().checked_div(&k.zero()), Err(FieldError::DivisionByZero)));
    }

    #[test]
    fn signs_of_paper_lengths() {
        let k = heptagon_spec();
        assert_eq!(k.zero().sign(), 0);
        let l2 = k.two_cos(2).unwrap();
        let l3 = k.constant("sin(1pi/14)").unwrap().inverse().unwrap().scale(&q(1, 2));
        assert_eq!((&l2 - &k.one()).sign(), 1); // 2cos(π/7) > 1
        assert_eq!((&l3 - &l2).sign(), 1); // csc(π/14)/2 > 2cos(π/7)
    }

    #[test]
    fn approx_of_known_constants() {
        let k = heptagon_spec();
        let eps = q(1, 1_000_000);
        let sin7 = k.constant("sin(2pi/14)").unwrap();
        let v = rational_to_f64(&sin7.approx(&eps));
        assert!((v - 0.433884).abs() <= 1.1e-6);
        assert!(k.zero().approx(&eps).is_zero());
        let cot7 = k.constant("cos(2pi/14)").unwrap()
            .checked_div(&k.constant("sin(2pi/14)").unwrap())
            .unwrap();
        assert!((rational_to_f64(&cot7.approx(&eps)) - 2.076521).abs() <= 1.1e-6);
    }

    #[test]
    fn pythagorean_identities_exact() {
        let k = heptagon_spec();
        for kk in 1..=6 {
            let c = k.constant(&format!("cos({kk}pi/14)")).unwrap();
            let s = k.constant(&format!("sin({kk}pi/14)")).unwrap();
            assert!((&(&c * &c) + &(&s * &s)).is_one(), "k={kk}");
        }
    }

    #[test]
    fn ring_axioms_on_random_elements() {
        let k = heptagon_spec();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut rand_elem = |rng: &mut rand_chacha::ChaCha8Rng| {
            let coeffs = (0..6)
                .map(|_| q(rng.gen_range(-20i64..20), rng.gen_range(1i64..10)))
                .collect();
            k.element(coeffs)
        };
        for _ in 0..50 {
            let a = rand_elem(&mut rng);
            let b = rand_elem(&mut rng);
            let c = rand_elem(&mut rng);
            assert_eq!(&a + &b, &b + &a);
            assert_eq!(&a * &b, &b * &a);
            assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }
    }

    #[test]
    fn sign_matches_float_evaluation() {
        let k = heptagon_spec();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let theta = 1.9498558243636472_f64;
        let mut checked = 0;
        while checked < 1000 {
            let coeffs: Vec<BigRational> = (0..6)
                .map(|_| q(rng.gen_range(-50i64..50), rng.gen_range(1i64..20)))
                .collect();
            let fval: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| rational_to_f64(c) * theta.powi(i as i32))
                .sum();
            if fval.abs() < 1e-9 {
                continue; // too close for the float oracle to be trusted
            }
            let e = k.element(coeffs);
            assert_eq!(e.sign(), if fval > 0.0 { 1 } else { -1 });
            checked += 1;
        }
    }

    #[test]
    fn rational_to_f64_handles_wide_ratios() {
        let big = BigInt::from(10u8).pow(40);
        let r = BigRational::new(&big * BigInt::from(3), big);
        assert!((rational_to_f64(&r) - 3.0).abs() < 1e-12);
        assert_eq!(rational_to_f64(&BigRational::zero()), 0.0);
        assert!((rational_to_f64(&BigRational::from_f64(-0.625).unwrap()) + 0.625).abs() == 0.0);
    }
}
