//! Content-addressed cache for computed spectral densities.
//!
//! The cache key hashes every input that determines the density, so a cache
//! hit is exact: same polynomial, factor laws, grid, smoothing, and solver
//! settings. Entries live in `$FREESPEC_CACHE_DIR` or `./.freespec-cache`.

use std::path::PathBuf;

use freespec_core::freeprob::asd::uniform_grid;
use freespec_core::{
    asd_p1, asd_p2, Error, FixedPointConfig, MpParams, PolynomialKind, Result, SpectralDensity,
};
use sha2::{Digest, Sha256};

pub struct AsdKey {
    pub kind: PolynomialKind,
    pub params0: MpParams,
    pub params1: MpParams,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_points: usize,
    pub smoothing_offset: f64,
    pub corner_eps: f64,
    pub config: FixedPointConfig,
}

impl AsdKey {
    fn canonical(&self) -> String {
        format!(
            "kind={:?};c0={:.17e};v0={:.17e};c1={:.17e};v1={:.17e};lo={:.17e};hi={:.17e};\
             points={};smoothing={:.17e};corner_eps={:.17e};tol={:.17e};max_iter={};damping={:.17e}",
            self.kind,
            self.params0.ratio_c,
            self.params0.variance,
            self.params1.ratio_c,
            self.params1.variance,
            self.grid_lo,
            self.grid_hi,
            self.grid_points,
            self.smoothing_offset,
            self.corner_eps,
            self.config.tolerance,
            self.config.max_iterations,
            self.config.damping,
        )
    }

    fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn compute(&self) -> Result<SpectralDensity> {
        let grid = uniform_grid(self.grid_lo, self.grid_hi, self.grid_points)?;
        match self.kind {
            PolynomialKind::P1 => {
                asd_p1(&self.params0, &self.params1, &grid, &self.config, self.smoothing_offset)
            }
            PolynomialKind::P2 => asd_p2(
                &self.params0,
                &self.params1,
                &grid,
                &self.config,
                self.corner_eps,
                self.smoothing_offset,
            ),
        }
    }
}

pub fn cache_dir() -> PathBuf {
    std::env::var_os("FREESPEC_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".freespec-cache"))
}

/// Load the density for `key` from the cache, or compute and store it.
/// Returns the density and whether it was a cache hit. A corrupt entry is
/// recomputed and overwritten. The store goes through a temp file and an
/// atomic rename so concurrent invocations never observe a partial entry.
pub fn cached_asd(key: &AsdKey) -> Result<(SpectralDensity, bool)> {
    let dir = cache_dir();
    std::fs::create_dir_all(&dir)?;
    let hash = key.hash();
    let path = dir.join(format!("{hash}.json"));
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(density) = serde_json::from_str::<SpectralDensity>(&text) {
            return Ok((density, true));
        }
    }
    let density = key.compute()?;
    let json = serde_json::to_string(&density).map_err(|e| Error::Parse(e.to_string()))?;
    let tmp = dir.join(format!("{hash}.json.tmp.{}", std::process::id()));
    std::fs::write(&tmp, json)?;
    std::fs::rename(&tmp, &path)?;
    Ok((density, false))
}
