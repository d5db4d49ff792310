//! Surface configuration files: TOML with exact rationals as "num/den"
//! strings, generator-lattice coordinates as integer vectors, and constants
//! as coefficient vectors over the field generator. Loading validates every
//! cross-module invariant it can check cheaply and names the violation.

use crate::realfield::{parse_rational, FieldElement, FieldError, FieldSpec};
use crate::surface::{
    CuspData, GluingSpec, LatticeVec, Rect, SegmentSpec, StaircaseSurface, SurfaceData,
    SurfaceError,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("parse error in {0}: {1}")]
    Parse(String, toml::de::Error),
    #[error("{0}")]
    BadValue(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub initial_box_margin: BigRational,
    pub max_candidates: usize,
    pub fallback_width_check: bool,
    pub max_sweep_steps: usize,
}

#[derive(Clone, Debug)]
pub struct Defaults {
    pub grid_samples: usize,
    pub empirical_radius: f64,
    pub precision_digits: usize,
}

/// A fully validated surface configuration.
pub struct SurfaceConfig {
    pub name: String,
    pub spec: Arc<FieldSpec>,
    pub cusp: CuspData,
    pub surface: StaircaseSurface,
    pub search: SearchConfig,
    pub defaults: Defaults,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: String,
    field: RawField,
    cusp: RawCusp,
    shear: RawShear,
    staircase: RawStaircase,
    #[serde(default)]
    search: RawSearch,
    #[serde(default)]
    defaults: RawDefaults,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    min_poly: Vec<i64>,
    root_interval: [String; 2],
    trig_base: Option<u32>,
    #[serde(default)]
    constants: BTreeMap<String, Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCusp {
    x0: String,
    y0: String,
    alpha: String,
    n: u8,
    c_matrix: [String; 4],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShear {
    m: [String; 4],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStaircase {
    generators: Vec<String>,
    area_ref: String,
    rectangles: Vec<RawRect>,
    gluings: Vec<RawGluing>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRect {
    x: Vec<i64>,
    y: Vec<i64>,
    w: Vec<i64>,
    h: Vec<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGluing {
    a: RawSegment,
    b: RawSegment,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    p: [Vec<i64>; 2],
    q: [Vec<i64>; 2],
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSearch {
    initial_box_margin: Option<String>,
    max_candidates: Option<usize>,
    fallback_width_check: Option<bool>,
    max_sweep_steps: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDefaults {
    grid_samples: Option<usize>,
    empirical_radius: Option<f64>,
    precision_digits: Option<usize>,
}

fn coeffs_from(v: &[i64], gens: usize, what: &str) -> Result<[i64; 3], ConfigError> {
    if v.len() != gens {
        return Err(ConfigError::BadValue(format!(
            "{what}: expected {gens} lattice coefficients, got {}",
            v.len()
        )));
    }
    let mut out = [0i64; 3];
    out[..v.len()].copy_from_slice(v);
    Ok(out)
}

fn lattice_point(p: &[Vec<i64>; 2], gens: usize, what: &str) -> Result<LatticeVec, ConfigError> {
    Ok(LatticeVec {
        x: coeffs_from(&p[0], gens, what)?,
        y: coeffs_from(&p[1], gens, what)?,
    })
}

pub fn load_config(path: &Path) -> Result<SurfaceConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io(path.display().to_string(), e))?;
    let raw: RawConfig =
        toml::from_str(&text).map_err(|e| ConfigError::Parse(path.display().to_string(), e))?;
    build_config(raw)
}

fn build_config(raw: RawConfig) -> Result<SurfaceConfig, ConfigError> {
    let mut constants: BTreeMap<String, Vec<BigRational>> = BTreeMap::new();
    for (name, vec) in &raw.field.constants {
        let coeffs = vec
            .iter()
            .map(|s| parse_rational(s).map_err(ConfigError::BadValue))
            .collect::<Result<Vec<_>, _>>()?;
        constants.insert(name.clone(), coeffs);
    }
    let lo = parse_rational(&raw.field.root_interval[0]).map_err(ConfigError::BadValue)?;
    let hi = parse_rational(&raw.field.root_interval[1]).map_err(ConfigError::BadValue)?;
    let spec = FieldSpec::new(
        raw.field.min_poly.iter().map(|&c| BigInt::from(c)).collect(),
        lo,
        hi,
        constants,
        raw.field.trig_base,
    )?;

    let cusp = CuspData {
        x0: spec.constant(&raw.cusp.x0)?,
        y0: spec.constant(&raw.cusp.y0)?,
        alpha: spec.constant(&raw.cusp.alpha)?,
        n: raw.cusp.n,
        c_matrix: [
            spec.constant(&raw.cusp.c_matrix[0])?,
            spec.constant(&raw.cusp.c_matrix[1])?,
            spec.constant(&raw.cusp.c_matrix[2])?,
            spec.constant(&raw.cusp.c_matrix[3])?,
        ],
    };
    cusp.validate()?;

    let shear = [
        spec.constant(&raw.shear.m[0])?,
        spec.constant(&raw.shear.m[1])?,
        spec.constant(&raw.shear.m[2])?,
        spec.constant(&raw.shear.m[3])?,
    ];

    let gen_count = raw.staircase.generators.len();
    let gens = raw
        .staircase
        .generators
        .iter()
        .map(|n| spec.constant(n))
        .collect::<Result<Vec<_>, _>>()?;
    let rects = raw
        .staircase
        .rectangles
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let x0 = coeffs_from(&r.x, gen_count, &format!("rectangle {i} x"))?;
            let y0 = coeffs_from(&r.y, gen_count, &format!("rectangle {i} y"))?;
            let w = coeffs_from(&r.w, gen_count, &format!("rectangle {i} w"))?;
            let h = coeffs_from(&r.h, gen_count, &format!("rectangle {i} h"))?;
            Ok(Rect {
                x0,
                y0,
                x1: crate::surface::coeffs_add(x0, w),
                y1: crate::surface::coeffs_add(y0, h),
            })
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let gluings = raw
        .staircase
        .gluings
        .iter()
        .enumerate()
        .map(|(i, g)| {
            Ok(GluingSpec {
                a: SegmentSpec {
                    p: lattice_point(&g.a.p, gen_count, &format!("gluing {i} a.p"))?,
                    q: lattice_point(&g.a.q, gen_count, &format!("gluing {i} a.q"))?,
                },
                b: SegmentSpec {
                    p: lattice_point(&g.b.p, gen_count, &format!("gluing {i} b.p"))?,
                    q: lattice_point(&g.b.q, gen_count, &format!("gluing {i} b.q"))?,
                },
            })
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;

    let surface = StaircaseSurface::build(
        spec.clone(),
        SurfaceData {
            gens,
            rects,
            gluings,
            shear: shear.clone(),
            reference_area: spec.constant(&raw.staircase.area_ref)?,
        },
    )?;

    // the shear must carry the cusp vector to the unit vertical of the
    // staircase frame
    let sheared = surface.shear_vec(&crate::geometry::Vec2::new(cusp.x0.clone(), cusp.y0.clone()));
    if !sheared.x.is_zero() || !sheared.y.is_one() {
        return Err(ConfigError::BadValue(
            "shear does not map (x0, y0) to the unit vertical (0, 1)".into(),
        ));
    }

    let search = SearchConfig {
        initial_box_margin: raw
            .search
            .initial_box_margin
            .as_deref()
            .map(|s| parse_rational(s).map_err(ConfigError::BadValue))
            .transpose()?
            .unwrap_or_else(|| BigRational::from_integer(BigInt::from(2))),
        max_candidates: raw.search.max_candidates.unwrap_or(100_000),
        fallback_width_check: raw.search.fallback_width_check.unwrap_or(true),
        max_sweep_steps: raw.search.max_sweep_steps.unwrap_or(64),
    };
    if search.initial_box_margin < BigRational::from_integer(BigInt::from(1)) {
        return Err(ConfigError::BadValue("search.initial_box_margin must be >= 1".into()));
    }
    if search.max_candidates == 0 || search.max_sweep_steps == 0 {
        return Err(ConfigError::BadValue("search caps must be positive".into()));
    }

    let defaults = Defaults {
        grid_samples: raw.defaults.grid_samples.unwrap_or(1000),
        empirical_radius: raw.defaults.empirical_radius.unwrap_or(40.0),
        precision_digits: raw.defaults.precision_digits.unwrap_or(15),
    };

    Ok(SurfaceConfig {
        name: raw.name,
        spec,
        cusp,
        surface,
        search,
        defaults,
    })
}

/// Helper shared by tests and the CLI examples: an element printed as both
/// exact coefficients and a decimal.
pub fn element_report(e: &FieldElement) -> (String, f64) {
    (e.coeff_string(), e.to_f64())
}
