//! Winner determination on the transversal's top edge.
//!
//! The sweep starts at the right end of the top edge, finds the left winner
//! there, jumps to the left endpoint of its winning interval and repeats
//! until the cusp vector (x0, y0) wins. Each per-point query seeds a
//! candidate from a lattice box scan, builds the region that must contain
//! anything beating it, and enumerates exactly the holonomy vectors inside.

use crate::config::SearchConfig;
use crate::geometry::{slope_cmp, ConvexPolygon, Vec2};
use crate::realfield::FieldElement;
use crate::section::{candidacy_interval_left, is_left_candidate, Transversal};
use crate::surface::{LatticeVec, StaircaseSurface, SurfaceError};
use num_bigint::BigInt;
use num_rational::BigRational;
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WinnerError {
    #[error("no seed candidate found within the search box (margin {0}); enlarge search.initial_box_margin")]
    NoSeed(String),
    #[error("candidate is not a left candidate at the query point")]
    NotACandidate,
    #[error("region candidate enumeration exceeded max_candidates = {0}")]
    TooManyCandidates(usize),
    #[error("unbounded search region and the vertical-strip test is inconclusive: {0}")]
    FallbackInconclusive(String),
    #[error("sweep exceeded max_sweep_steps = {0}")]
    SweepRunaway(usize),
    #[error("sweep revisited a winner; the section data is inconsistent")]
    DuplicateWinner,
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// A winner together with its half-open winning interval (a_next, a_cur] on
/// the top edge.
#[derive(Clone, Debug)]
pub struct WinnerRecord {
    pub vector: Vec2,
    pub sheared: Vec2,
    pub lattice: LatticeVec,
    pub interval: (FieldElement, FieldElement),
    pub index: usize,
}

/// Search region for the winner at a point, given a known candidate.
pub enum SearchRegion {
    Bounded(ConvexPolygon),
    /// The candidate has the same slope as the point: the region is the full
    /// candidacy strip at the point.
    UnboundedStrip,
}

/// The region containing every vector that can beat `candidate` at
/// (a, 1): the candidacy strip intersected with the shallow side of the
/// candidate's direction. Bounded iff the candidate's strip value is nonzero.
pub fn winner_search_region(
    a: &FieldElement,
    candidate: &Vec2,
) -> Result<SearchRegion, WinnerError> {
    let spec = a.spec().clone();
    let one = spec.one();
    let point = Vec2::new(a.clone(), one.clone());
    if !is_left_candidate(candidate, &point) {
        return Err(WinnerError::NotACandidate);
    }
    let margin = &candidate.x - &(a * &candidate.y); // in [0, 1)
    if margin.is_zero() {
        return Ok(SearchRegion::UnboundedStrip);
    }
    // triangle (0,0), (1,0), candidate/margin
    let apex = Vec2::new(&candidate.x / &margin, &candidate.y / &margin);
    let tri = ConvexPolygon::new(vec![
        Vec2::new(spec.zero(), spec.zero()),
        Vec2::new(one, spec.zero()),
        apex,
    ]);
    Ok(SearchRegion::Bounded(tri))
}

/// Exact membership in the search region at (a, 1) with seed `candidate`:
/// the left candidacy strip plus the shallow-or-equal slope condition.
fn in_region(v: &Vec2, a: &FieldElement, candidate: &Vec2) -> bool {
    let point = Vec2::new(a.clone(), a.spec().one());
    if !is_left_candidate(v, &point) {
        return false;
    }
    // v.x·candidate.y − v.y·candidate.x >= 0 keeps slopes no steeper than the seed
    (&(&candidate.y * &v.x) - &(&candidate.x * &v.y)).sign() >= 0
}

/// Holonomy vectors (original coordinates) inside a bounded search region,
/// sorted by slope then squared length.
pub fn enumerate_region_candidates(
    region: &ConvexPolygon,
    surface: &StaircaseSurface,
    a: &FieldElement,
    candidate: &Vec2,
    max_candidates: usize,
) -> Result<Vec<(LatticeVec, Vec2)>, WinnerError> {
    let lattice = lattice_in_region(region, surface, a, candidate, max_candidates)?;
    let mut out = Vec::new();
    for (lv, orig) in lattice {
        if surface.is_holonomy_lattice(lv)? {
            out.push((lv, orig));
        }
    }
    Ok(out)
}

/// The pre-holonomy stage: lattice vectors in the sheared image of the
/// region, filtered by exact region membership, sorted.
pub fn lattice_in_region(
    region: &ConvexPolygon,
    surface: &StaircaseSurface,
    a: &FieldElement,
    candidate: &Vec2,
    max_candidates: usize,
) -> Result<Vec<(LatticeVec, Vec2)>, WinnerError> {
    let spec = a.spec().clone();
    // bounding box of the sheared region
    let m = surface.shear();
    let sheared = region
        .map_affine(&m[0], &m[1], &m[2], &m[3], &spec.zero(), &spec.zero())
        .expect("shear is invertible");
    let mut xmax = spec.zero();
    let mut ymax = spec.zero();
    for v in sheared.vertices() {
        if (&v.x - &xmax).sign() > 0 {
            xmax = v.x.clone();
        }
        if (&v.y - &ymax).sign() > 0 {
            ymax = v.y.clone();
        }
    }
    let lattice = surface.generate_l(&xmax, &ymax);
    if lattice.len() > max_candidates {
        return Err(WinnerError::TooManyCandidates(max_candidates));
    }
    let mut out = Vec::new();
    for lv in lattice {
        if lv.is_zero() {
            continue;
        }
        let sh = surface.lattice_to_vec2(lv);
        let orig = surface.unshear_vec(&sh);
        if orig.y.sign() <= 0 {
            continue;
        }
        if in_region(&orig, a, candidate) {
            out.push((lv, orig));
        }
    }
    out.sort_by(|(_, u), (_, v)| {
        slope_cmp(u, v)
            .expect("positive y by construction")
            .then_with(|| u.norm_sq().cmp_exact(&v.norm_sq()))
    });
    Ok(out)
}

/// Scan a growing lattice box for any left candidate at (a, 1), returning
/// the shallowest holonomy candidate found.
fn seed_candidate(
    a: &FieldElement,
    surface: &StaircaseSurface,
    search: &SearchConfig,
) -> Result<(LatticeVec, Vec2), WinnerError> {
    let spec = a.spec().clone();
    let point = Vec2::new(a.clone(), spec.one());
    let max_gen = surface
        .generators()
        .iter()
        .fold(spec.one(), |acc, g| if (g - &acc).sign() > 0 { g.clone() } else { acc });
    let mut bound = max_gen.scale(&search.initial_box_margin);
    for _ in 0..8 {
        let lattice = surface.generate_l(&bound, &bound);
        let mut best: Option<(LatticeVec, Vec2)> = None;
        for lv in lattice {
            if lv.is_zero() {
                continue;
            }
            let orig = surface.unshear_vec(&surface.lattice_to_vec2(lv));
            if orig.y.sign() <= 0 || !is_left_candidate(&orig, &point) {
                continue;
            }
            let better = match &best {
                None => true,
                Some((_, cur)) => matches!(
                    slope_cmp(&orig, cur)
                        .expect("positive y")
                        .then_with(|| orig.norm_sq().cmp_exact(&cur.norm_sq())),
                    Ordering::Less
                ),
            };
            if better && surface.is_holonomy_lattice(lv)? {
                best = Some((lv, orig));
            }
        }
        if let Some(b) = best {
            return Ok(b);
        }
        bound = bound.scale(&BigRational::from_integer(BigInt::from(2)));
    }
    Err(WinnerError::NoSeed(search.initial_box_margin.to_string()))
}

/// The unique left winner at a point of the top edge.
pub fn left_winner_at(
    a: &FieldElement,
    surface: &StaircaseSurface,
    transversal: &Transversal,
    search: &SearchConfig,
) -> Result<(LatticeVec, Vec2), WinnerError> {
    let _ = transversal;
    let (seed_lv, seed) = seed_candidate(a, surface, search)?;
    match winner_search_region(a, &seed)? {
        SearchRegion::Bounded(region) => {
            let cands =
                enumerate_region_candidates(&region, surface, a, &seed, search.max_candidates)?;
            // the seed is a holonomy vector in its own region
            let best = cands.into_iter().next().expect("seed at least");
            Ok(best)
        }
        SearchRegion::UnboundedStrip => {
            unbounded_fallback(a, surface, search, seed_lv, seed)
        }
    }
}

/// The candidate's direction matches the point's, so the search strip is
/// parallel to it. Shear the strip vertical, check that no lattice abscissa
/// lies strictly inside its width, then return the shortest holonomy vector
/// in the candidate's slope class.
fn unbounded_fallback(
    a: &FieldElement,
    surface: &StaircaseSurface,
    search: &SearchConfig,
    seed_lv: LatticeVec,
    seed: Vec2,
) -> Result<(LatticeVec, Vec2), WinnerError> {
    if !search.fallback_width_check {
        return Err(WinnerError::FallbackInconclusive(
            "fallback_width_check disabled in the config".into(),
        ));
    }
    let spec = a.spec().clone();
    // strip value x − a·y expressed in sheared coordinates (X, Y):
    // x − a·y = X + (minv12 − a·minv22)·Y; the strip is vertical iff the Y
    // coefficient vanishes
    let minv = surface.shear_inv();
    let y_coef = &minv[1] - &(a * &minv[3]);
    if !y_coef.is_zero() {
        return Err(WinnerError::FallbackInconclusive(
            "configured shear does not verticalize the strip".into(),
        ));
    }
    // sheared strip is {0 <= X < 1}: any lattice abscissa strictly inside?
    let one = spec.one();
    for (coeffs, val) in surface.combos_up_to(&one) {
        if coeffs == [0, 0, 0] {
            continue;
        }
        if val.sign() > 0 && (&val - &one).sign() < 0 {
            return Err(WinnerError::FallbackInconclusive(format!(
                "lattice abscissa {} lies inside the unit strip",
                val.to_f64()
            )));
        }
    }
    // only X = 0 vectors remain: the seed's slope class; return its shortest
    // holonomy representative
    let seed_sheared_y = surface.lattice_to_vec2(seed_lv).y;
    let mut ys = surface.combos_up_to(&seed_sheared_y);
    ys.retain(|(c, v)| *c != [0, 0, 0] && v.sign() > 0);
    ys.sort_by(|(_, u), (_, v)| u.cmp_exact(v));
    for (yc, _) in ys {
        let lv = LatticeVec { x: [0, 0, 0], y: yc };
        if surface.is_holonomy_lattice(lv)? {
            return Ok((lv, surface.unshear_vec(&surface.lattice_to_vec2(lv))));
        }
    }
    Ok((seed_lv, seed))
}

/// Run the right-to-left sweep over the whole top edge.
pub fn sweep_winners(
    surface: &StaircaseSurface,
    transversal: &Transversal,
    search: &SearchConfig,
) -> Result<Vec<WinnerRecord>, WinnerError> {
    let mut records: Vec<WinnerRecord> = Vec::new();
    let mut a = transversal.a_right.clone();
    let stop = Vec2::new(transversal.cusp.x0.clone(), transversal.cusp.y0.clone());
    for index in 0..search.max_sweep_steps {
        let (lattice, vector) = left_winner_at(&a, surface, transversal, search)?;
        if records.iter().any(|r| r.vector == vector) {
            return Err(WinnerError::DuplicateWinner);
        }
        let a_next = candidacy_interval_left(&vector)
            .expect("winner has positive y")
            .lo;
        let sheared = surface.lattice_to_vec2(lattice);
        let done = vector == stop;
        records.push(WinnerRecord {
            vector,
            sheared,
            lattice,
            interval: (a_next.clone(), a.clone()),
            index,
        });
        if done {
            return Ok(records);
        }
        a = a_next;
    }
    Err(WinnerError::SweepRunaway(search.max_sweep_steps))
}
