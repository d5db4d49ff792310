//! Closed-form per-region CDFs for the double heptagon, evaluated in double
//! precision, used purely as a cross-check against the level-set sweep.
//!
//! The sweep CDF (whose breakpoints and covolume are validated
//! independently) is the reference; the published closed forms are compared
//! branch by branch and any disagreement is reported with its location, not
//! patched.

use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppendixError {
    #[error("region {region} branch {branch} at t = {t}: {reason}")]
    Domain { region: usize, branch: usize, t: f64, reason: String },
}

fn consts() -> [f64; 6] {
    [
        (PI / 14.0).cos(),
        (PI / 14.0).sin(),
        (PI / 7.0).cos(),
        (PI / 7.0).sin(),
        (3.0 * PI / 14.0).cos(),
        (3.0 * PI / 14.0).sin(),
    ]
}

/// The thirteen non-analyticity times, in closed form.
pub fn breakpoint_times() -> [f64; 13] {
    let [a1, b1, a2, b2, a3, b3] = consts();
    [
        b2,
        a3,
        4.0 / a3 * b2 * b2,
        a1,
        a1 + b2,
        2.0 * a1 - b2,
        a1 / (1.0 - 2.0 * b1),
        2.0 * a3.powi(3) / (b1 * (3.0 - 4.0 * b1)),
        8.0 * b2 * b3,
        a1 * a3 / (a3 - b2),
        4.0 * a1.powi(3) * a3 / (5.0 * a1 - 2.0 * a3 - 5.0 * b2),
        4.0 * a3,
        b2 / (6.0 - 8.0 * a2 + 6.0 * b1),
    ]
}

fn atanh_checked(x: f64, region: usize, branch: usize, t: f64) -> Result<f64, AppendixError> {
    if !(0.0..1.0).contains(&x) {
        return Err(AppendixError::Domain {
            region,
            branch,
            t,
            reason: format!("arctanh argument {x} outside [0, 1)"),
        });
    }
    Ok(0.5 * ((1.0 + x) / (1.0 - x)).ln())
}

fn sqrt_checked(x: f64, region: usize, branch: usize, t: f64) -> Result<f64, AppendixError> {
    if x < 0.0 {
        return Err(AppendixError::Domain {
            region,
            branch,
            t,
            reason: format!("square root of {x}"),
        });
    }
    Ok(x.sqrt())
}

/// Branch index (0-based) of the closed form for region `i` at time `t`.
pub fn branch_of(region: usize, t: f64) -> usize {
    let bp = breakpoint_times();
    let edges: &[f64] = match region {
        0 => &[bp[1], bp[2], bp[3]],
        1 => &[bp[3], bp[4], bp[5]],
        2 => &[bp[3], bp[6], bp[7]],
        3 => &[bp[1], bp[8], bp[9], bp[10]],
        _ => &[bp[0], bp[11], bp[12]],
    };
    edges.iter().filter(|&&e| t >= e).count()
}

/// The t-values where the closed form for region `i` changes branch.
pub fn branch_boundaries(region: usize) -> Vec<f64> {
    let bp = breakpoint_times();
    match region {
        0 => vec![bp[1], bp[2], bp[3]],
        1 => vec![bp[3], bp[4], bp[5]],
        2 => vec![bp[3], bp[6], bp[7]],
        3 => vec![bp[1], bp[8], bp[9], bp[10]],
        _ => vec![bp[0], bp[11], bp[12]],
    }
}

/// Non-normalized closed-form CDF of region `i` (0-based winner index).
pub fn region_cdf(region: usize, t: f64) -> Result<f64, AppendixError> {
    let [a1, b1, a2, b2, a3, b3] = consts();
    let branch = branch_of(region, t);
    let sq = |x: f64, br: usize| sqrt_checked(x, region, br, t);
    let ath = |x: f64, br: usize| atanh_checked(x, region, br, t);
    let v = match (region, branch) {
        (_, 0) => 0.0,
        (0, 1) => (1.0 / t) * ((a3 / t).ln() - 1.0) + 1.0 / a3,
        (0, 2) => {
            let a = sq(1.0 - (2.0 - 2.0 * b3) / (t * a3), 2)?;
            (1.0 / t) * ((a3 / t).ln() - 1.0) + 1.0 / a3 + (2.0 / t) * ath(a, 2)?
                - a3 * a / (2.0 * b2 * b2)
        }
        (0, _) => (1.0 / (2.0 * a3)) * (a3 / b2 - 2.0).powi(2),
        (1, 1) => (1.0 / t) * ((a1 / t).ln() - 1.0) + 1.0 / a1,
        (1, 2) => {
            let a = sq(1.0 - (2.0 * a2 - 2.0 * b1) / (t * a1), 2)?;
            (1.0 / t)
                * (16.0 * b1 * b1 * b3 * b3 * (2.0 * a2 - 2.0 * b1 - 1.0)
                    / (1.0 - 4.0 * b1 * b3).powi(2))
                .ln()
                + (2.0 / t) * ath(a, 2)?
                + (162.0 * b1 * b3 - 12.0 * b3 - 15.0 + (2.0 * b1 * b3 + 6.0 * b3 - 4.0) * a)
                    / (2.0 * b2 * b2)
        }
        (1, _) => 4.0 * a1 * (3.0 + 1.0 / (1.0 - 6.0 * b1)),
        (2, 1) => (1.0 / t) * ((a1 / t).ln() - 1.0) + 1.0 / a1,
        (2, 2) => {
            let a = sq(1.0 - 4.0 * b2 / t, 2)?;
            (1.0 / t) * (2.0 * b1).ln() + (2.0 / t) * ath(a, 2)? - a / (2.0 * b2)
                + (11.0 - 16.0 * a2 + 6.0 * b3) / (4.0 * a1 * b1 * (1.0 - 2.0 * a2).powi(2))
        }
        (2, _) => 8.0 * b1.powi(3) / (a1 * (1.0 - 2.0 * a2).powi(2)),
        (3, 1) => (1.0 / t) * ((a3 / t).ln() - 1.0) + 1.0 / a3,
        (3, 2) => {
            let a = sq(1.0 - 8.0 * b2 * b3 / t, 2)?;
            (1.0 / t) * ((a3 / t).ln() - 1.0) + 1.0 / a3 + (4.0 / t) * ath(a, 2)?
                + (b2 - a3) / (b2 * b2) * a
        }
        (3, 3) => {
            let a = sq(1.0 - 8.0 * b2 * b3 / t, 3)?;
            (1.0 / t) * (1.0 - 2.0 * a2 + 2.0 * b3).ln() + (2.0 / t) * ath(a, 3)?
                - a / (4.0 * b2 * b3)
                + (13.0 + 10.0 * b1 - 24.0 * b3) / (32.0 * b1 * b1 * b2.powi(3) * (1.0 + 2.0 * a2))
        }
        (3, _) => (6.0 * a2 - 2.0 * b3 - 4.0) / b2,
        (4, 1) => (1.0 / t) * ((b2 / t).ln() - 1.0) + 1.0 / b2,
        (4, 2) => {
            let a = sq(1.0 - 8.0 * a2 * b2 / t, 2)?;
            (1.0 / t) * ((b2 / t).ln() - 1.0) + 1.0 / b2 + (4.0 / t) * ath(a, 2)?
                - 4.0 * b1 * b3 / b2 * a
        }
        (_, _) => {
            let a = sq(1.0 - 8.0 * a2 * b2 / t, 3)?;
            (1.0 / t) * ((a3 / t).ln() - 1.0) + (2.0 / t) * ath(a, 3)? - a / (4.0 * a2 * b2)
                + 1.0 / (2.0 * a3)
                + (2.0 * b1 + 1.0) / a1
        }
    };
    Ok(v)
}

/// Normalized closed-form CDF: sum of the five regions over cot(pi/7).
pub fn cdf(t: f64) -> Result<f64, AppendixError> {
    let mut s = 0.0;
    for i in 0..5 {
        s += region_cdf(i, t)?;
    }
    Ok(s / ((PI / 7.0).cos() / (PI / 7.0).sin()))
}

#[derive(Debug, Serialize)]
pub struct BranchDeviation {
    pub region: usize,
    pub branch: usize,
    pub max_abs_deviation: f64,
    pub at_t: f64,
    pub samples: usize,
    pub domain_errors: usize,
}

#[derive(Debug, Serialize)]
pub struct ComparisonReport {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
    pub branches: Vec<BranchDeviation>,
    /// max deviation at the branch-boundary times themselves, evaluated from
    /// the analytic side below and above
    pub boundary_max_deviation: f64,
    /// how far each closed-form branch boundary sits from the nearest
    /// sweep-computed non-analyticity point (locations, not values)
    pub boundary_max_location_offset: f64,
}

/// Compare the closed forms against a sweep evaluator region by region over
/// a uniform grid, binning deviations per (region, branch).
pub fn compare<F: Fn(usize, f64) -> f64>(
    sweep_region_cdf: F,
    sweep_breakpoints: &[f64],
    t_min: f64,
    t_max: f64,
    samples: usize,
) -> ComparisonReport {
    let mut bins: std::collections::BTreeMap<(usize, usize), BranchDeviation> = Default::default();
    for k in 0..samples {
        let t = t_min + (t_max - t_min) * (k as f64) / ((samples - 1) as f64);
        for region in 0..5 {
            let branch = branch_of(region, t);
            let entry = bins.entry((region, branch)).or_insert(BranchDeviation {
                region,
                branch,
                max_abs_deviation: 0.0,
                at_t: t,
                samples: 0,
                domain_errors: 0,
            });
            entry.samples += 1;
            match region_cdf(region, t) {
                Ok(v) => {
                    let d = (v - sweep_region_cdf(region, t)).abs();
                    if d > entry.max_abs_deviation {
                        entry.max_abs_deviation = d;
                        entry.at_t = t;
                    }
                }
                Err(_) => entry.domain_errors += 1,
            }
        }
    }
    // boundary values: approach each split point from both sides
    let mut boundary_max: f64 = 0.0;
    let mut location_max: f64 = 0.0;
    for region in 0..5 {
        for tb in branch_boundaries(region) {
            for t in [tb * (1.0 - 1e-9), tb * (1.0 + 1e-9)] {
                if let Ok(v) = region_cdf(region, t) {
                    boundary_max = boundary_max.max((v - sweep_region_cdf(region, t)).abs());
                }
            }
            let nearest = sweep_breakpoints
                .iter()
                .map(|b| (b - tb).abs())
                .fold(f64::INFINITY, f64::min);
            location_max = location_max.max(nearest);
        }
    }
    ComparisonReport {
        t_min,
        t_max,
        samples,
        branches: bins.into_values().collect(),
        boundary_max_deviation: boundary_max,
        boundary_max_location_offset: location_max,
    }
}
