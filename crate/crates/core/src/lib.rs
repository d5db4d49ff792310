//! Exact computation of renormalized slope-gap distributions of saddle
//! connections on single-cusp Veech translation surfaces.
//!
//! The pipeline: load a surface description (number field, cusp data,
//! rectilinear staircase model), determine the winning vectors on the
//! horocycle-return transversal by an exact right-to-left sweep, partition
//! the transversal into winner regions, and integrate the return-time
//! level sets into the gap distribution's CDF/PDF, its non-analyticity
//! points and the covolume. A brute-force enumeration oracle cross-checks
//! the whole chain.

pub mod config;
pub mod distribution;
pub mod geometry;
pub mod oracle;
pub mod realfield;
pub mod section;
pub mod subdivision;
pub mod surface;
pub mod winners;

#[cfg(test)]
pub(crate) mod testutil {
    use crate::config::{load_config, SurfaceConfig};
    use std::path::Path;
    use std::sync::OnceLock;

    static HEPTAGON: OnceLock<SurfaceConfig> = OnceLock::new();
    static PENTAGON: OnceLock<SurfaceConfig> = OnceLock::new();

    pub fn heptagon() -> &'static SurfaceConfig {
        HEPTAGON.get_or_init(|| {
            let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/heptagon.toml");
            load_config(&p).expect("bundled heptagon config loads")
        })
    }

    pub fn pentagon() -> &'static SurfaceConfig {
        PENTAGON.get_or_init(|| {
            let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/pentagon.toml");
            load_config(&p).expect("bundled pentagon config loads")
        })
    }
}
