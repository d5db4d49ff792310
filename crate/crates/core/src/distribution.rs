//! The renormalized gap distribution: exact non-analyticity breakpoints,
//! CDF/PDF evaluation by hyperbola level-set areas, and the covolume
//! integral.
//!
//! Each winner region is mapped by (a, b) ↦ (u, b) with u = b·x − a·y, which
//! costs a Jacobian factor 1/y and turns every return-time level set into
//! u·b = const. The CDF clip area then needs only polygon shoelace terms and
//! c·ln(b1/b0) arc terms; the PDF is a sum of ln(b_hi/b_lo)/t²; only the
//! covolume integral uses adaptive quadrature.

use crate::geometry::{ConvexPolygon, Vec2};
use crate::realfield::{FieldElement, FieldSpec};
use crate::section::Transversal;
use crate::subdivision::WinnerRegion;
use std::sync::Arc;
use thiserror::Error;

pub mod appendix;
pub mod quad;

#[derive(Debug, Error)]
pub enum DistributionError {
    #[error("distribution evaluation requires t > 0")]
    NonPositiveT,
    #[error("t is a non-analyticity point; one-sided densities are {left} / {right}")]
    AtBreakpoint { left: f64, right: f64 },
    #[error("integral diverges: {0}")]
    Diverged(String),
    #[error("quadrature did not reach the target accuracy: value {value}, error {error}")]
    NotConverged { value: f64, error: f64 },
    #[error("invalid sweep region: {0}")]
    BadRegion(String),
}

/// A winner region carried to (u, b) coordinates, with float caches for
/// evaluation.
pub struct SweepRegion {
    pub winner: Vec2,
    pub index: usize,
    pub uv_pieces: Vec<ConvexPolygon>,
    /// 1/y: area scale back to (a, b) coordinates.
    pub scale: FieldElement,
    pieces_f64: Vec<Vec<(f64, f64)>>,
    y_f64: f64,
    scale_f64: f64,
}

impl SweepRegion {
    /// Wrap pieces already expressed in (u, b) coordinates.
    pub fn from_uv_pieces(
        winner: Vec2,
        index: usize,
        uv_pieces: Vec<ConvexPolygon>,
    ) -> Result<Self, DistributionError> {
        if winner.y.sign() <= 0 {
            return Err(DistributionError::BadRegion("winner needs y > 0".into()));
        }
        let scale = winner.y.inverse().expect("y > 0");
        let pieces_f64 = uv_pieces.iter().map(|p| p.to_f64()).collect();
        let y_f64 = winner.y.to_f64();
        let scale_f64 = scale.to_f64();
        Ok(SweepRegion { winner, index, uv_pieces, scale, pieces_f64, y_f64, scale_f64 })
    }

    /// Build from a winner region of the transversal subdivision: apply
    /// (a, b) ↦ (b·x − a·y, b) and check the strip-membership ranges.
    pub fn from_winner_region(
        spec: &Arc<FieldSpec>,
        region: &WinnerRegion,
    ) -> Result<Self, DistributionError> {
        let v = &region.record.vector;
        let mut uv = Vec::new();
        let mut orig_area = spec.zero();
        for piece in &region.pieces {
            let mapped = piece
                .map_affine(&(-&v.y), &v.x, &spec.zero(), &spec.one(), &spec.zero(), &spec.zero())
                .map_err(|_| DistributionError::BadRegion("degenerate winner vector".into()))?;
            for vert in mapped.vertices() {
                let u_ok = vert.x.sign() >= 0 && (&vert.x - &spec.one()).sign() <= 0;
                let b_ok = vert.y.sign() >= 0 && (&vert.y - &spec.one()).sign() <= 0;
                if !u_ok || !b_ok {
                    return Err(DistributionError::BadRegion(
                        "uv vertex escapes the unit strip".into(),
                    ));
                }
            }
            orig_area = &orig_area + &piece.area(spec);
            uv.push(mapped);
        }
        let out = SweepRegion::from_uv_pieces(v.clone(), region.record.index, uv)?;
        // scale · area(uv) = area(original pieces), exactly
        let mut uv_area = spec.zero();
        for p in &out.uv_pieces {
            uv_area = &uv_area + &p.area(spec);
        }
        if !(&(&out.scale * &uv_area) - &orig_area).is_zero() {
            return Err(DistributionError::BadRegion("Jacobian accounting is off".into()));
        }
        Ok(out)
    }

    /// Non-analyticity parameters contributed by this region: level sets
    /// through vertices, and tangencies interior to edges.
    pub fn breakpoints(&self) -> Vec<FieldElement> {
        let spec = self.winner.y.spec().clone();
        let mut out: Vec<FieldElement> = Vec::new();
        let mut push = |t: FieldElement| {
            if !out.iter().any(|e| e == &t) {
                out.push(t);
            }
        };
        for piece in &self.uv_pieces {
            let vs = piece.vertices();
            let n = vs.len();
            for i in 0..n {
                let (u, b) = (&vs[i].x, &vs[i].y);
                let ub = u * b;
                if ub.sign() > 0 {
                    push(&self.winner.y / &ub);
                }
                // edge extremum of u(s)·b(s), a quadratic in s
                let j = (i + 1) % n;
                let du = &vs[j].x - u;
                let db = &vs[j].y - b;
                let qa = &du * &db;
                if qa.is_zero() {
                    continue;
                }
                let qb = &(u * &db) + &(b * &du);
                let s = &(-&qb) / &qa.scale(&num_rational::BigRational::from_integer(2.into()));
                if s.sign() > 0 && (&s - &spec.one()).sign() < 0 {
                    let uu = u + &(&s * &du);
                    let bb = b + &(&s * &db);
                    let val = &uu * &bb;
                    if val.sign() > 0 {
                        push(&self.winner.y / &val);
                    }
                }
            }
        }
        out
    }

    /// Non-normalized measure of {return time ≤ t} in this region.
    pub fn cdf_raw(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let c = self.y_f64 / t;
        let mut acc = 0.0;
        for piece in &self.pieces_f64 {
            acc += area_above_hyperbola(piece, c);
        }
        acc * self.scale_f64
    }

    /// Non-normalized density contribution: Σ ln(b_hi/b_lo) / t² over the
    /// level-arc segments inside each piece (the 1/y scale cancels the y in
    /// c = y/t).
    pub fn pdf_raw(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let c = self.y_f64 / t;
        let mut acc = 0.0;
        for piece in &self.pieces_f64 {
            if let Some((blo, bhi)) = arc_b_interval(piece, c) {
                if blo > 0.0 && bhi > blo {
                    acc += (bhi / blo).ln();
                }
            }
        }
        acc / (t * t)
    }

    /// Non-normalized covolume contribution: ∬ 1/(b·u) du db over the uv
    /// pieces (the winner's y cancels against the scale).
    pub fn volume_raw(&self, tol: f64) -> Result<(f64, f64), DistributionError> {
        let mut total = 0.0;
        let mut err = 0.0;
        for piece in &self.pieces_f64 {
            let (v, e) = piece_volume(piece, tol)?;
            total += v;
            err += e;
        }
        Ok((total, err))
    }
}

/// Sorted exact breakpoints with decimal companions.
pub struct Breakpoint {
    pub exact: FieldElement,
    pub decimal: f64,
}

pub struct PiecewiseDistribution {
    pub regions: Vec<SweepRegion>,
    pub breakpoints: Vec<Breakpoint>,
    pub normalizer: FieldElement,
    normalizer_f64: f64,
}

impl PiecewiseDistribution {
    pub fn build(
        spec: &Arc<FieldSpec>,
        transversal: &Transversal,
        winner_regions: &[WinnerRegion],
    ) -> Result<Self, DistributionError> {
        let regions = winner_regions
            .iter()
            .map(|r| SweepRegion::from_winner_region(spec, r))
            .collect::<Result<Vec<_>, _>>()?;
        let mut exacts: Vec<FieldElement> = Vec::new();
        for r in &regions {
            for t in r.breakpoints() {
                if !exacts.iter().any(|e| e == &t) {
                    exacts.push(t);
                }
            }
        }
        exacts.sort_by(|a, b| a.cmp_exact(b));
        let breakpoints = exacts
            .into_iter()
            .map(|exact| {
                let decimal = exact.to_f64();
                Breakpoint { exact, decimal }
            })
            .collect();
        let normalizer = transversal.omega.area(spec);
        let normalizer_f64 = normalizer.to_f64();
        Ok(PiecewiseDistribution { regions, breakpoints, normalizer, normalizer_f64 })
    }

    /// The normalized CDF of the renormalized gap distribution.
    pub fn cdf(&self, t: f64) -> Result<f64, DistributionError> {
        if t <= 0.0 {
            return Err(DistributionError::NonPositiveT);
        }
        let raw: f64 = self.regions.iter().map(|r| r.cdf_raw(t)).sum();
        Ok(raw / self.normalizer_f64)
    }

    /// Non-normalized per-region CDF (the closed-form comparison target).
    pub fn region_cdf_raw(&self, index: usize, t: f64) -> f64 {
        self.regions[index].cdf_raw(t)
    }

    /// The density. Exactly at a breakpoint the two one-sided values are
    /// reported through the error.
    pub fn pdf(&self, t: f64) -> Result<f64, DistributionError> {
        if t <= 0.0 {
            return Err(DistributionError::NonPositiveT);
        }
        if self.breakpoints.iter().any(|b| b.decimal == t) {
            let left = self.pdf_at(next_down(t));
            let right = self.pdf_at(next_up(t));
            return Err(DistributionError::AtBreakpoint { left, right });
        }
        Ok(self.pdf_at(t))
    }

    fn pdf_at(&self, t: f64) -> f64 {
        let raw: f64 = self.regions.iter().map(|r| r.pdf_raw(t)).sum();
        raw / self.normalizer_f64
    }

    /// Covolume of the suspension: ∫ return time over the transversal,
    /// normalized by nothing (a plain integral), with an error estimate.
    pub fn volume(&self) -> Result<(f64, f64), DistributionError> {
        let mut total = 0.0;
        let mut err = 0.0;
        for r in &self.regions {
            let (v, e) = r.volume_raw(1e-13)?;
            total += v;
            err += e;
        }
        if !total.is_finite() {
            return Err(DistributionError::Diverged("non-finite covolume".into()));
        }
        if err > 1e-10 {
            return Err(DistributionError::NotConverged { value: total, error: err });
        }
        Ok((total, err))
    }
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// Roots in (0, 1) of (p + s·dp)(q + s·dq) = c along an edge.
fn edge_roots(p: f64, q: f64, dp: f64, dq: f64, c: f64) -> Vec<f64> {
    let a = dp * dq;
    let b = p * dq + q * dp;
    let c0 = p * q - c;
    let mut rs = Vec::new();
    if a.abs() < 1e-300 {
        if b.abs() > 1e-300 {
            let s = -c0 / b;
            if s > 0.0 && s < 1.0 {
                rs.push(s);
            }
        }
    } else {
        let disc = b * b - 4.0 * a * c0;
        if disc > 0.0 {
            let sq = disc.sqrt();
            let q1 = -(b + b.signum() * sq) / 2.0;
            // stable pair q1/a and c0/q1
            let mut cands = vec![q1 / a];
            if q1.abs() > 1e-300 {
                cands.push(c0 / q1);
            }
            for s in cands {
                if s > 0.0 && s < 1.0 {
                    rs.push(s);
                }
            }
            rs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            rs.dedup_by(|x, y| (*x - *y).abs() < 1e-15);
        }
    }
    rs
}

/// Area of {(u, b) ∈ piece : u·b ≥ c} for a convex CCW piece. The boundary
/// decomposes into kept polygon segments and at most one hyperbola arc per
/// maximal excluded run; each arc contributes c·ln(b_end/b_start) to the
/// half-shoelace sum.
pub fn area_above_hyperbola(piece: &[(f64, f64)], c: f64) -> f64 {
    let n = piece.len();
    if n < 3 {
        return 0.0;
    }
    let shoelace = |vs: &[(f64, f64)]| -> f64 {
        let mut s = 0.0;
        for i in 0..vs.len() {
            let (x0, y0) = vs[i];
            let (x1, y1) = vs[(i + 1) % vs.len()];
            s += x0 * y1 - y0 * x1;
        }
        s / 2.0
    };
    if c <= 0.0 {
        return shoelace(piece);
    }
    let phi: Vec<f64> = piece.iter().map(|&(u, b)| u * b - c).collect();
    if phi.iter().all(|&f| f >= 0.0) {
        return shoelace(piece);
    }
    if phi.iter().all(|&f| f <= 0.0) {
        return 0.0;
    }
    // boundary pieces: kept (inside) segments and excluded gaps
    #[derive(Clone)]
    enum Item {
        Line((f64, f64), (f64, f64)),
        Gap((f64, f64), (f64, f64)),
    }
    let mut bound: Vec<Item> = Vec::new();
    for i in 0..n {
        let (pu, pb) = piece[i];
        let (qu, qb) = piece[(i + 1) % n];
        let (du, db) = (qu - pu, qb - pb);
        let mut events = vec![0.0];
        events.extend(edge_roots(pu, pb, du, db, c));
        events.push(1.0);
        for w in events.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            if s1 <= s0 {
                continue;
            }
            let mid = 0.5 * (s0 + s1);
            let mu = pu + mid * du;
            let mb = pb + mid * db;
            let p0 = (pu + s0 * du, pb + s0 * db);
            let p1 = (pu + s1 * du, pb + s1 * db);
            if mu * mb - c >= 0.0 {
                bound.push(Item::Line(p0, p1));
            } else {
                bound.push(Item::Gap(p0, p1));
            }
        }
    }
    if bound.iter().all(|i| matches!(i, Item::Gap(..))) {
        return 0.0;
    }
    // rotate so a kept segment starts the walk, then merge gap runs into
    // single hyperbola arcs whose endpoints are genuine crossings
    let start = bound
        .iter()
        .position(|i| matches!(i, Item::Line(..)))
        .expect("some kept segment");
    bound.rotate_left(start);
    let mut total = 0.0;
    let mut i = 0;
    while i < bound.len() {
        match bound[i].clone() {
            Item::Line((x0, y0), (x1, y1)) => {
                total += x0 * y1 - y0 * x1;
                i += 1;
            }
            Item::Gap(p0, _) => {
                let mut end = p0;
                while i < bound.len() {
                    if let Item::Gap(_, p1) = bound[i] {
                        end = p1;
                        i += 1;
                    } else {
                        break;
                    }
                }
                // arc along u = c/b from p0 to end
                if p0.1 > 0.0 && end.1 > 0.0 {
                    total += 2.0 * c * (end.1 / p0.1).ln();
                }
            }
        }
    }
    total / 2.0
}

/// b-extent of the hyperbola arc u·b = c inside a convex piece, if any.
fn arc_b_interval(piece: &[(f64, f64)], c: f64) -> Option<(f64, f64)> {
    let n = piece.len();
    let mut bs: Vec<f64> = Vec::new();
    for i in 0..n {
        let (pu, pb) = piece[i];
        let (qu, qb) = piece[(i + 1) % n];
        let (du, db) = (qu - pu, qb - pb);
        for s in edge_roots(pu, pb, du, db, c) {
            bs.push(pb + s * db);
        }
    }
    if bs.len() < 2 {
        return None;
    }
    let lo = bs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = bs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi))
}

/// ∬ 1/(b·u) du db over a convex piece, by b-strips with an exact inner
/// integral: g(b) = ln(u_hi(b)/u_lo(b)) / b.
fn piece_volume(piece: &[(f64, f64)], tol: f64) -> Result<(f64, f64), DistributionError> {
    let n = piece.len();
    let mut bs: Vec<f64> = piece.iter().map(|&(_, b)| b).collect();
    bs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    bs.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let urange = |b: f64| -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let (pu, pb) = piece[i];
            let (qu, qb) = piece[(i + 1) % n];
            if (qb - pb).abs() < 1e-300 {
                continue;
            }
            let s = (b - pb) / (qb - pb);
            if (-1e-12..=1.0 + 1e-12).contains(&s) {
                let u = pu + s * (qu - pu);
                lo = lo.min(u);
                hi = hi.max(u);
            }
        }
        (lo <= hi).then_some((lo, hi))
    };
    let mut total = 0.0;
    let mut err_total = 0.0;
    for w in bs.windows(2) {
        let (b0, b1) = (w[0], w[1]);
        if b1 - b0 < 1e-14 {
            continue;
        }
        let g = |b: f64| -> f64 {
            match urange(b) {
                Some((lo, hi)) if hi > lo => {
                    if lo <= 0.0 {
                        f64::INFINITY // the integrand is non-integrable there
                    } else {
                        (hi / lo).ln() / b
                    }
                }
                _ => 0.0,
            }
        };
        let (v, e) = quad::adaptive_gk(&g, b0, b1, tol, 64)
            .map_err(|m| DistributionError::Diverged(m))?;
        total += v;
        err_total += e;
    }
    Ok((total, err_total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::heptagon;

    #[test]
    fn toy_square_region_breakpoints_and_divergence() {
        let cfg = heptagon();
        let spec = &cfg.spec;
        let one = spec.one();
        let sq = ConvexPolygon::new(vec![
            Vec2::new(spec.zero(), spec.zero()),
            Vec2::new(one.clone(), spec.zero()),
            Vec2::new(one.clone(), one.clone()),
            Vec2::new(spec.zero(), one.clone()),
        ]);
        let region = SweepRegion::from_uv_pieces(
            Vec2::new(one.clone(), one.clone()),
            0,
            vec![sq],
        )
        .unwrap();
        // vertices with u·b = 0 are excluded; (1,1) gives t = 1; the edges
        // are axis-parallel so no interior tangency appears
        let bps = region.breakpoints();
        assert_eq!(bps.len(), 1);
        assert!(bps[0].is_one());
        // 1/(b·u) over the unit square diverges and must be reported
        assert!(region.volume_raw(1e-12).is_err());
    }

    #[test]
    fn toy_diagonal_tangency() {
        let cfg = heptagon();
        let spec = &cfg.spec;
        let one = spec.one();
        let two = spec.from_integer(2);
        // triangle (1,0), (0,1), (2,2): the edge (1,0)→(0,1) has an interior
        // tangency of u·b at s = 1/2 with value 1/4
        let tri = ConvexPolygon::new(vec![
            Vec2::new(one.clone(), spec.zero()),
            Vec2::new(two.clone(), two.clone()),
            Vec2::new(spec.zero(), one.clone()),
        ]);
        let region =
            SweepRegion::from_uv_pieces(Vec2::new(one.clone(), one.clone()), 0, vec![tri]).unwrap();
        let bps = region.breakpoints();
        let decimals: Vec<f64> = bps.iter().map(|b| b.to_f64()).collect();
        assert!(decimals.iter().any(|d| (d - 4.0).abs() < 1e-12)); // tangency 1/(1/4)
        assert!(decimals.iter().any(|d| (d - 0.25).abs() < 1e-12)); // vertex (2,2)
    }

    #[test]
    fn area_above_matches_closed_forms() {
        // unit square vs u·b >= c: area = 1 − c + c·ln(c) for c in (0,1)
        let sq = vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        for c in [0.1, 0.3, 0.7, 0.95] {
            let got = area_above_hyperbola(&sq, c);
            let want = 1.0 - c + c * c.ln();
            assert!((got - want).abs() < 1e-12, "c={c}: {got} vs {want}");
        }
        assert!((area_above_hyperbola(&sq, 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(area_above_hyperbola(&sq, 1.5), 0.0);
    }
}
