//! Assumption-light validation: enumerate saddle connections directly by
//! developing the staircase along direction wedges, build empirical
//! renormalized gap sets, and provide an exhaustive winner-at-a-point scan.
//!
//! The enumerator shoots every direction sector from every cone-point copy,
//! keeping an angular wedge per developed chart. A vertex inside the wedge
//! is a saddle connection; its direction splits the wedge, so geodesics
//! never continue through a cone point. Directions along edges (horizontal
//! and vertical runs) are walked separately.

use crate::geometry::{quadrant_slope_length_cmp, slope_cmp, Vec2};
use crate::realfield::FieldElement;
use crate::section::is_left_candidate;
use crate::surface::{
    coeffs_add, coeffs_sub, LatticeVec, Side, StaircaseSurface, SurfaceError,
};
use num_rational::BigRational;
use num_traits::FromPrimitive;
use rayon::prelude::*;
use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("radius must be positive")]
    BadRadius,
    #[error("saddle connection enumeration exceeded the state budget; reduce the radius")]
    StateBudget,
    #[error("fewer than two distinct slopes at this radius; enlarge it")]
    TooFewSlopes,
    #[error("no left candidate found within the length bound {0}; enlarge it")]
    NoCandidate(f64),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Renormalized gaps between consecutive slopes at a finite radius.
pub struct EmpiricalGaps {
    pub radius: f64,
    pub slopes: Vec<f64>,
    pub gaps: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dir {
    Lat(LatticeVec),
    /// The sheared image of the original diagonal direction (slope one).
    SlopeOne,
}

#[derive(Clone)]
struct Wedge {
    lo: Dir,
    lo_closed: bool,
    hi: Dir,
    hi_closed: bool,
}

struct Enumerator<'a> {
    surface: &'a StaircaseSurface,
    /// x_orig(w) = val(w.x) + q·val(w.y); q, r from the inverse shear.
    q: FieldElement,
    q_f64: f64,
    /// (r − q) for the slope-one comparison sign(y_orig − x_orig).
    rq: FieldElement,
    rq_f64: f64,
    radius: BigRational,
    radius_f64: f64,
    /// per rect: deduplicated boundary vertex indices
    boundary_vertices: Vec<Vec<usize>>,
    state_budget: usize,
}

impl<'a> Enumerator<'a> {
    fn new(surface: &'a StaircaseSurface, radius: f64, state_budget: usize) -> Self {
        let minv = surface.shear_inv();
        let q = minv[1].clone();
        let rq = &minv[3] - &minv[1];
        let boundary_vertices = (0..surface.rects().len())
            .map(|ri| {
                let mut vs: Vec<usize> = Side::ALL
                    .iter()
                    .flat_map(|&s| surface.side_vertices(ri, s).iter().copied())
                    .collect();
                vs.sort_unstable();
                vs.dedup();
                vs
            })
            .collect();
        Enumerator {
            surface,
            q_f64: q.to_f64(),
            rq_f64: rq.to_f64(),
            q,
            rq,
            radius: BigRational::from_f64(radius).expect("finite radius"),
            radius_f64: radius,
            boundary_vertices,
            state_budget,
        }
    }

    /// sign(cross(slope-one direction, w)) = sign(y_orig(w) − x_orig(w)).
    fn cross_slope_one(&self, w: LatticeVec) -> i32 {
        let e = &self.surface.engine;
        let wy = e.value_f64(w.y);
        let wx = e.value_f64(w.x);
        let val = self.rq_f64 * wy - wx;
        let mag = (self.rq_f64 * wy).abs() + wx.abs();
        if val.abs() > mag * 1e-12 + 1e-300 {
            return if val > 0.0 { 1 } else { -1 };
        }
        (&(&self.rq * &e.value(w.y)) - &e.value(w.x)).sign()
    }

    fn cross_dirs(&self, a: &Dir, b: &Dir) -> i32 {
        match (a, b) {
            (Dir::Lat(u), Dir::Lat(v)) => self.surface.engine.cross_sign(*u, *v),
            (Dir::SlopeOne, Dir::Lat(v)) => self.cross_slope_one(*v),
            (Dir::Lat(u), Dir::SlopeOne) => -self.cross_slope_one(*u),
            (Dir::SlopeOne, Dir::SlopeOne) => 0,
        }
    }

    fn wedge_contains(&self, w: &Wedge, v: LatticeVec) -> bool {
        let lo = self.cross_dirs(&w.lo, &Dir::Lat(v));
        if lo < 0 || (lo == 0 && !w.lo_closed) {
            return false;
        }
        let hi = self.cross_dirs(&Dir::Lat(v), &w.hi);
        hi > 0 || (hi == 0 && w.hi_closed)
    }

    /// Narrow a wedge by the open cone spanned by two corner directions.
    fn intersect_cone(&self, w: &Wedge, c_lo: LatticeVec, c_hi: LatticeVec) -> Option<Wedge> {
        if c_lo.is_zero() || c_hi.is_zero() {
            return None;
        }
        let (c_lo, c_hi) = match self.surface.engine.cross_sign(c_lo, c_hi) {
            s if s > 0 => (c_lo, c_hi),
            s if s < 0 => (c_hi, c_lo),
            _ => return None, // edge seen edge-on: no interior directions
        };
        let mut out = w.clone();
        match self.cross_dirs(&out.lo, &Dir::Lat(c_lo)) {
            s if s > 0 => {
                out.lo = Dir::Lat(c_lo);
                out.lo_closed = false;
            }
            0 => out.lo_closed = false,
            _ => {}
        }
        match self.cross_dirs(&Dir::Lat(c_hi), &out.hi) {
            s if s > 0 => {
                out.hi = Dir::Lat(c_hi);
                out.hi_closed = false;
            }
            0 => out.hi_closed = false,
            _ => {}
        }
        match self.cross_dirs(&out.lo, &out.hi) {
            s if s > 0 => Some(out),
            0 if out.lo_closed && out.hi_closed => Some(out),
            _ => None,
        }
    }

    /// x_orig(w) ≤ radius, decided exactly only near the boundary.
    fn within_radius(&self, w: LatticeVec) -> bool {
        let e = &self.surface.engine;
        let f = e.value_f64(w.x) + self.q_f64 * e.value_f64(w.y);
        if (f - self.radius_f64).abs() > 1e-6 * (1.0 + self.radius_f64) {
            return f <= self.radius_f64;
        }
        let exact = &e.value(w.x) + &(&self.q * &e.value(w.y));
        let r = e.value(w.x).spec().from_rational(self.radius.clone());
        (&exact - &r).sign() <= 0
    }

    fn beyond_radius_f64(&self, w: LatticeVec) -> bool {
        let e = &self.surface.engine;
        let f = e.value_f64(w.x) + self.q_f64 * e.value_f64(w.y);
        f > self.radius_f64 + 1.0
    }

    /// Run one direction-sector BFS from a cone-point copy.
    fn run_sector(
        &self,
        start_rect: usize,
        origin: LatticeVec,
        wedge: Wedge,
    ) -> Result<Vec<LatticeVec>, OracleError> {
        let surf = self.surface;
        let mut found = Vec::new();
        // (rect, offset, entry side or none, wedge)
        let mut stack: Vec<(usize, LatticeVec, Option<Side>, Wedge)> =
            vec![(start_rect, LatticeVec::zero(), None, wedge)];
        let mut states = 0usize;
        while let Some((rect, offset, entry, wedge)) = stack.pop() {
            states += 1;
            if states > self.state_budget {
                return Err(OracleError::StateBudget);
            }
            // emit boundary vertices inside the wedge
            for &vi in &self.boundary_vertices[rect] {
                if entry.map_or(false, |s| surf.side_vertices(rect, s).contains(&vi)) {
                    continue; // handled when the previous chart was processed
                }
                let v_dev = surf.corners()[vi].add(offset).sub(origin);
                if v_dev.is_zero() {
                    continue;
                }
                if self.wedge_contains(&wedge, v_dev) && self.within_radius(v_dev) {
                    found.push(v_dev);
                }
            }
            // propagate through the side transitions
            let r = &surf.rects()[rect];
            for side in [Side::Left, Side::Right, Side::Top] {
                if entry == Some(side) {
                    continue;
                }
                for t in surf.transitions(rect, side) {
                    let (p_lo, p_hi) = match side {
                        Side::Left => (
                            LatticeVec { x: r.x0, y: t.lo },
                            LatticeVec { x: r.x0, y: t.hi },
                        ),
                        Side::Right => (
                            LatticeVec { x: r.x1, y: t.lo },
                            LatticeVec { x: r.x1, y: t.hi },
                        ),
                        _ => (
                            LatticeVec { x: t.lo, y: r.y1 },
                            LatticeVec { x: t.hi, y: r.y1 },
                        ),
                    };
                    let d_lo = p_lo.add(offset).sub(origin);
                    let d_hi = p_hi.add(offset).sub(origin);
                    if self.beyond_radius_f64(d_lo) && self.beyond_radius_f64(d_hi) {
                        continue;
                    }
                    if let Some(narrow) = self.intersect_cone(&wedge, d_lo, d_hi) {
                        stack.push((
                            t.target,
                            offset.sub(t.shift),
                            Some(side.opposite()),
                            narrow,
                        ));
                    }
                }
            }
        }
        Ok(found)
    }

    /// Walk straight up (or right) along lattice lines from a corner,
    /// emitting the single connection that ends at the first cone point met.
    fn axis_run(&self, start: usize, up: bool) -> Result<Option<LatticeVec>, OracleError> {
        let surf = self.surface;
        let origin = surf.corners()[start];
        let (dx_sign, dy_sign) = if up { (0, 1) } else { (1, 0) };
        let mut chart: Option<(usize, LatticeVec)> = None;
        for (ri, _) in surf.rects().iter().enumerate() {
            if self.ray_enters(ri, origin, dx_sign, dy_sign) {
                chart = Some((ri, LatticeVec::zero()));
                break;
            }
        }
        let Some((mut rect, mut offset)) = chart else {
            return Ok(None);
        };
        for _ in 0..self.state_budget {
            let r = &surf.rects()[rect];
            let side = if up { Side::Top } else { Side::Right };
            // crossing point on the exit line, in developed coordinates
            let cross_pt = if up {
                LatticeVec { x: origin.x, y: coeffs_add(r.y1, offset.y) }
            } else {
                LatticeVec { x: coeffs_add(r.x1, offset.x), y: origin.y }
            };
            let hol = cross_pt.sub(origin);
            if !self.within_radius(hol) {
                return Ok(None); // the crossing only moves further out
            }
            // a vertex exactly at the crossing ends the run
            let mut at_vertex = false;
            for &vi in surf.side_vertices(rect, side) {
                if surf.corners()[vi].add(offset) == cross_pt {
                    at_vertex = true;
                    break;
                }
            }
            if at_vertex {
                return Ok(Some(hol));
            }
            // otherwise hop through the transition containing the crossing
            let e = &surf.engine;
            let var = if up { cross_pt.x } else { cross_pt.y };
            let off_var = if up { offset.x } else { offset.y };
            let mut hopped = false;
            for t in surf.transitions(rect, side) {
                let lo = coeffs_add(t.lo, off_var);
                let hi = coeffs_add(t.hi, off_var);
                if e.lin_sign(coeffs_sub(var, lo)) > 0 && e.lin_sign(coeffs_sub(hi, var)) > 0 {
                    rect = t.target;
                    offset = offset.sub(t.shift);
                    hopped = true;
                    break;
                }
            }
            if !hopped {
                return Ok(None); // crossing at a transition endpoint: a vertex elsewhere
            }
        }
        Err(OracleError::StateBudget)
    }

    fn ray_enters(&self, ri: usize, p: LatticeVec, dx_sign: i32, dy_sign: i32) -> bool {
        let e = &self.surface.engine;
        let r = &self.surface.rects()[ri];
        let in_x = e.lin_sign(coeffs_sub(p.x, r.x0)) >= 0
            && e.lin_sign(coeffs_sub(r.x1, p.x)) >= 0;
        let in_y = e.lin_sign(coeffs_sub(p.y, r.y0)) >= 0
            && e.lin_sign(coeffs_sub(r.y1, p.y)) >= 0;
        if !in_x || !in_y {
            return false;
        }
        if e.lin_sign(coeffs_sub(p.x, r.x1)) == 0 && dx_sign > 0 {
            return false;
        }
        if e.lin_sign(coeffs_sub(p.y, r.y1)) == 0 && dy_sign > 0 {
            return false;
        }
        true
    }
}

/// All holonomy vectors (original coordinates) with 0 ≤ Im ≤ Re ≤ radius,
/// sorted by slope then length.
pub fn enumerate_saddle_connections(
    surface: &StaircaseSurface,
    radius: f64,
    state_budget: usize,
) -> Result<Vec<Vec2>, OracleError> {
    if radius <= 0.0 {
        return Err(OracleError::BadRadius);
    }
    let en = Enumerator::new(surface, radius, state_budget);
    let n_corners = surface.corners().len();

    // seed sectors: the two upper quadrants at every (corner, rectangle)
    // incidence, each clipped by the global slope window
    let mut seeds: Vec<(usize, LatticeVec, Wedge)> = Vec::new();
    for ci in 0..n_corners {
        let c = surface.corners()[ci];
        for (ri, r) in surface.rects().iter().enumerate() {
            let e = &surface.engine;
            let on_box = e.lin_sign(coeffs_sub(c.x, r.x0)) >= 0
                && e.lin_sign(coeffs_sub(r.x1, c.x)) >= 0
                && e.lin_sign(coeffs_sub(c.y, r.y0)) >= 0
                && e.lin_sign(coeffs_sub(r.y1, c.y)) >= 0;
            if !on_box {
                continue;
            }
            let below_top = e.lin_sign(coeffs_sub(c.y, r.y1)) < 0;
            let left_of_right = e.lin_sign(coeffs_sub(c.x, r.x1)) < 0;
            let right_of_left = e.lin_sign(coeffs_sub(c.x, r.x0)) > 0;
            let unit_x = LatticeVec { x: [1, 0, 0], y: [0, 0, 0] };
            let unit_y = LatticeVec { x: [0, 0, 0], y: [1, 0, 0] };
            if below_top && left_of_right {
                // north-east quadrant, already inside the slope window
                seeds.push((
                    ri,
                    c,
                    Wedge { lo: Dir::Lat(unit_x), lo_closed: false, hi: Dir::Lat(unit_y), hi_closed: false },
                ));
            }
            if below_top && right_of_left {
                // north-west quadrant, capped by the slope-one direction
                let nw = Wedge {
                    lo: Dir::Lat(unit_y),
                    lo_closed: false,
                    hi: Dir::SlopeOne,
                    hi_closed: true,
                };
                // the slope-one direction must actually lie past the lo bound
                if en.cross_dirs(&nw.lo, &nw.hi) > 0 {
                    seeds.push((ri, c, nw));
                }
            }
        }
    }

    let bfs: Vec<Vec<LatticeVec>> = seeds
        .par_iter()
        .map(|(ri, c, w)| en.run_sector(*ri, *c, w.clone()))
        .collect::<Result<Vec<_>, _>>()?;

    let mut all: HashSet<LatticeVec> = HashSet::new();
    for batch in bfs {
        all.extend(batch);
    }
    // axis-aligned connections: horizontal (slope zero) and vertical runs
    for ci in 0..n_corners {
        if let Some(h) = en.axis_run(ci, false)? {
            all.insert(h);
        }
        if let Some(v) = en.axis_run(ci, true)? {
            all.insert(v);
        }
    }

    // map to original coordinates and filter the cone exactly
    let spec = surface.spec().clone();
    let r_exact = spec.from_rational(BigRational::from_f64(radius).expect("finite"));
    let mut out: Vec<Vec2> = Vec::new();
    for lv in all {
        let orig = surface.unshear_vec(&surface.lattice_to_vec2(lv));
        if orig.y.sign() < 0 {
            continue;
        }
        if (&orig.x - &orig.y).sign() < 0 {
            continue;
        }
        if (&orig.x - &r_exact).sign() > 0 {
            continue;
        }
        out.push(orig);
    }
    out.sort_by(|a, b| quadrant_slope_length_cmp(a, b));
    out.dedup();
    Ok(out)
}

/// Distinct slopes (exact dedup) and their renormalized gaps at a radius.
pub fn empirical_gaps(
    surface: &StaircaseSurface,
    radius: f64,
    state_budget: usize,
) -> Result<EmpiricalGaps, OracleError> {
    let vectors = enumerate_saddle_connections(surface, radius, state_budget)?;
    let mut slopes: Vec<FieldElement> = Vec::new();
    for v in &vectors {
        if v.x.sign() <= 0 {
            continue; // the zero vector never appears; x > 0 on the cone
        }
        let s = &v.y / &v.x;
        if !slopes.iter().any(|t| t == &s) {
            slopes.push(s);
        }
    }
    slopes.sort_by(|a, b| a.cmp_exact(b));
    if slopes.len() < 2 {
        return Err(OracleError::TooFewSlopes);
    }
    let dec: Vec<f64> = slopes.iter().map(|s| s.to_f64()).collect();
    let gaps: Vec<f64> = dec.windows(2).map(|w| radius * radius * (w[1] - w[0])).collect();
    Ok(EmpiricalGaps { radius, slopes: dec, gaps })
}

/// Kolmogorov–Smirnov distance between the empirical gap set and a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(gaps: &[f64], cdf: F) -> f64 {
    let mut sorted = gaps.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, g) in sorted.iter().enumerate() {
        let f = cdf(*g);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((i as f64 / n - f).abs());
    }
    d
}

/// Exhaustive left-winner scan: every holonomy vector whose staircase
/// coordinates fit in a box of the given bound, filtered by candidacy,
/// least slope then shortest.
pub fn brute_winner_at(
    surface: &StaircaseSurface,
    a: &FieldElement,
    length_bound: f64,
) -> Result<Vec2, OracleError> {
    let spec = a.spec().clone();
    let bound = spec.from_rational(
        BigRational::from_f64(length_bound).ok_or(OracleError::BadRadius)?,
    );
    let point = Vec2::new(a.clone(), spec.one());
    let mut best: Option<Vec2> = None;
    for lv in surface.generate_l(&bound, &bound) {
        if lv.is_zero() {
            continue;
        }
        let orig = surface.unshear_vec(&surface.lattice_to_vec2(lv));
        if orig.y.sign() <= 0 || !is_left_candidate(&orig, &point) {
            continue;
        }
        let better = match &best {
            None => true,
            Some(cur) => matches!(
                slope_cmp(&orig, cur)
                    .expect("positive y")
                    .then_with(|| orig.norm_sq().cmp_exact(&cur.norm_sq())),
                std::cmp::Ordering::Less
            ),
        };
        if better && surface.is_holonomy_lattice(lv)? {
            best = Some(orig);
        }
    }
    best.ok_or(OracleError::NoCandidate(length_bound))
}
