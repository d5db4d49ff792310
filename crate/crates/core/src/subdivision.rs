//! Partition of the transversal into winner regions.
//!
//! Each winner's candidacy strip covers part of the triangle; where strips
//! overlap, the vector of least slope wins. The region of the i-th winner is
//! the triangle intersected with its strip, minus the strips of all
//! strictly shallower winners, kept as a list of convex pieces from
//! clipping against each dominating strip's two boundary lines.

use crate::geometry::{slope_cmp, ConvexPolygon, HalfPlane, Vec2};
use crate::realfield::FieldSpec;
use crate::section::Transversal;
use crate::winners::WinnerRecord;
use std::cmp::Ordering;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SubdivisionError {
    #[error("winner regions fail to cover the transversal: residual area {0}")]
    Coverage(f64),
}

/// Convex pieces on which one winner's return-time formula applies.
#[derive(Clone)]
pub struct WinnerRegion {
    pub record: WinnerRecord,
    pub pieces: Vec<ConvexPolygon>,
}

/// Ω ∩ S(w_i) minus the strips of all shallower winners.
pub fn subdivide(
    spec: &Arc<FieldSpec>,
    transversal: &Transversal,
    records: &[WinnerRecord],
) -> Result<Vec<WinnerRegion>, SubdivisionError> {
    let mut regions: Vec<WinnerRegion> = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        let strip = strip_halfplanes(spec, &rec.vector);
        let mut pieces = vec![transversal
            .omega
            .clip(&strip.0)
            .clip(&strip.1)];
        for other in records.iter().take(i) {
            // order is by construction shallow-to-steep; guard anyway so a
            // tie (equal slopes) never subtracts its twin
            if slope_cmp(&other.vector, &rec.vector).expect("winners have y > 0")
                != Ordering::Less
            {
                continue;
            }
            let (lo, hi) = strip_halfplanes(spec, &other.vector);
            // complement of the strip 0 < u <= 1: u <= 0 or u >= 1
            let outside_lo = HalfPlane::new(
                &spec.zero() - &lo.p,
                &spec.zero() - &lo.q,
                &spec.zero() - &lo.r,
                false,
            )
            .expect("nonzero normal");
            let outside_hi = HalfPlane::new(
                &spec.zero() - &hi.p,
                &spec.zero() - &hi.q,
                &spec.zero() - &hi.r,
                false,
            )
            .expect("nonzero normal");
            let mut next: Vec<ConvexPolygon> = Vec::new();
            for piece in pieces {
                for half in [&outside_lo, &outside_hi] {
                    let clipped = piece.clip(half);
                    if !clipped.is_empty() {
                        next.push(clipped);
                    }
                }
            }
            pieces = next;
        }
        pieces.retain(|p| !p.is_empty());
        regions.push(WinnerRegion { record: rec.clone(), pieces });
    }

    // exact coverage: piece areas must sum to the triangle's area
    let mut total = spec.zero();
    for r in &regions {
        for p in &r.pieces {
            total = &total + &p.area(spec);
        }
    }
    let residual = &transversal.omega.area(spec) - &total;
    if !residual.is_zero() {
        return Err(SubdivisionError::Coverage(residual.to_f64()));
    }
    Ok(regions)
}

/// The two half-planes whose intersection is the candidacy strip
/// 0 < b·x − a·y ≤ 1 of a vector (strictness recorded, ignored by areas).
fn strip_halfplanes(spec: &Arc<FieldSpec>, v: &Vec2) -> (HalfPlane, HalfPlane) {
    // b·x − a·y > 0  and  1 − (b·x − a·y) >= 0, coordinates (a, b)
    let lower = HalfPlane::new(&spec.zero() - &v.y, v.x.clone(), spec.zero(), true)
        .expect("y > 0");
    let upper = HalfPlane::new(v.y.clone(), &spec.zero() - &v.x, spec.one(), false)
        .expect("y > 0");
    (lower, upper)
}
