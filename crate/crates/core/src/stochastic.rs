//! Reproducible Brownian increments.
//!
//! Each sample owns one ChaCha stream selected by `(master_seed, sample_index)`,
//! so a path depends only on its key and never on which worker built it or in
//! which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    wiener_dim: usize,
    resolution: f64,
    /// Row-major `len × wiener_dim`.
    increments: Vec<f64>,
    master_seed: u64,
    sample_index: u64,
}

impl BrownianPath {
    pub fn wiener_dim(&self) -> usize {
        self.wiener_dim
    }

    /// Time span of one increment.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.increments.len() / self.wiener_dim
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn sample_index(&self) -> u64 {
        self.sample_index
    }

    pub fn increment(&self, i: usize) -> &[f64] {
        let d = self.wiener_dim;
        &self.increments[i * d..(i + 1) * d]
    }

    pub fn increments(&self) -> impl Iterator<Item = &[f64]> {
        self.increments.chunks_exact(self.wiener_dim)
    }

    /// Sums consecutive blocks of `factor` increments. For power-of-two
    /// factors `coarsen(a).coarsen(b) == coarsen(a * b)` exactly.
    pub fn coarsen(&self, factor: usize) -> Result<BrownianPath> {
        if factor == 0 || !self.len().is_multiple_of(factor) {
            return Err(Error::InvalidArgument(format!(
                "coarsening factor {factor} does not divide path length {}",
                self.len()
            )));
        }
        let d = self.wiener_dim;
        let mut increments = Vec::with_capacity(self.increments.len() / factor);
        for block in self.increments.chunks_exact(d * factor) {
            for j in 0..d {
                increments.push(blocked_sum(block, d, j, 0, factor));
            }
        }
        Ok(BrownianPath {
            wiener_dim: d,
            resolution: self.resolution * factor as f64,
            increments,
            master_seed: self.master_seed,
            sample_index: self.sample_index,
        })
    }
}

/// Sum of entries `lo..hi` of column `j`, halving recursively so that
/// repeated dyadic coarsening reproduces a single coarsening bit for bit.
fn blocked_sum(block: &[f64], d: usize, j: usize, lo: usize, hi: usize) -> f64 {
    if hi - lo == 1 {
        block[lo * d + j]
    } else {
        let mid = lo + (hi - lo) / 2;
        blocked_sum(block, d, j, lo, mid) + blocked_sum(block, d, j, mid, hi)
    }
}

/// `n_fine` independent `N(0, finest_h·I)` increments for sample
/// `sample_index` of the experiment keyed by `master_seed`.
pub fn sample_path(
    master_seed: u64,
    sample_index: u64,
    wiener_dim: usize,
    finest_h: f64,
    n_fine: usize,
) -> Result<BrownianPath> {
    if !finest_h.is_finite() || finest_h <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "resolution must be positive, got {finest_h}"
        )));
    }
    if n_fine == 0 || wiener_dim == 0 {
        return Err(Error::InvalidArgument("path needs at least one increment".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(sample_index);
    let scale = finest_h.sqrt();
    let increments = (0..n_fine * wiener_dim)
        .map(|_| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    Ok(BrownianPath {
        wiener_dim,
        resolution: finest_h,
        increments,
        master_seed,
        sample_index,
    })
}

/// Derives an independent seed from `master_seed` and a label (SplitMix64
/// finaliser), used to give each refinement level of a weak study its own
/// paths.
pub fn derive_seed(master_seed: u64, label: u64) -> u64 {
    let mut z = master_seed ^ label.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
