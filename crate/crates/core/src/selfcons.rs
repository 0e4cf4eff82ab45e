//! Self-consistency estimates from k sampled decodes, and their bootstrap
//! distribution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::infotheory::{binary_entropy, jsd};
use crate::record::{BinaryDist, BinaryLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    /// Number of bootstrap trials (B).
    pub trials: usize,
    /// Fraction of the k outputs drawn (with replacement) per trial.
    pub fraction: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            trials: 100,
            fraction: 0.9,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("bootstrap trials must be >= 1".into()));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "bootstrap fraction {} is outside (0, 1]",
                self.fraction
            )));
        }
        Ok(())
    }

    /// `floor(fraction * k)`.
    pub fn resample_size(&self, k: usize) -> usize {
        (self.fraction * k as f64).floor() as usize
    }

    /// The same config with a seed specialised to one `(item, model)` record.
    pub fn for_record(&self, item_id: &str, model_id: &str) -> BootstrapConfig {
        BootstrapConfig {
            seed: derive_seed(self.seed, &[item_id, model_id]),
            ..self.clone()
        }
    }
}

/// `seed XOR h(parts)` where `h` is the first 8 bytes of SHA-256 over the
/// NUL-separated parts. Stable across platforms and releases.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part.as_bytes());
        hasher.update([0u8]);
    }
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(head)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    /// Empirical frequency over the full sample.
    pub p_hat_yes: f64,
    pub replicates: Vec<BinaryDist>,
    pub resample_size: usize,
    pub replicate_mean: f64,
    /// Population variance of the replicate estimates.
    pub variance: f64,
    /// Entropy of the replicate-mean distribution.
    pub entropy_of_mean: f64,
    /// Mean JSD between each replicate and the replicate-mean distribution.
    pub mean_pairwise_jsd: f64,
}

fn count_yes(outputs: &[BinaryLabel]) -> usize {
    outputs.iter().filter(|l| l.is_yes()).count()
}

/// `p_yes = #yes / k`.
pub fn empirical_frequency(outputs: &[BinaryLabel]) -> Result<BinaryDist> {
    if outputs.is_empty() {
        return Err(Error::EmptyList);
    }
    BinaryDist::new(count_yes(outputs) as f64 / outputs.len() as f64)
}

pub fn bootstrap(outputs: &[BinaryLabel], cfg: &BootstrapConfig) -> Result<BootstrapSummary> {
    cfg.validate()?;
    let p_hat = empirical_frequency(outputs)?;
    let k = outputs.len();
    let r = cfg.resample_size(k);
    if r == 0 {
        return Err(Error::DegenerateResampleSize {
            fraction: cfg.fraction,
            k,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let replicates: Vec<BinaryDist> = (0..cfg.trials)
        .map(|_| {
            let yes = (0..r)
                .filter(|_| outputs[rng.random_range(0..k)].is_yes())
                .count();
            BinaryDist::clamped(yes as f64 / r as f64)
        })
        .collect();

    let n = replicates.len() as f64;
    let mean = replicates.iter().map(|d| d.p_yes()).sum::<f64>() / n;
    let variance = replicates
        .iter()
        .map(|d| (d.p_yes() - mean).powi(2))
        .sum::<f64>()
        / n;
    let mean_dist = BinaryDist::clamped(mean);
    let mean_pairwise_jsd = replicates.iter().map(|&d| jsd(d, mean_dist)).sum::<f64>() / n;

    Ok(BootstrapSummary {
        p_hat_yes: p_hat.p_yes(),
        resample_size: r,
        replicate_mean: mean_dist.p_yes(),
        variance,
        entropy_of_mean: binary_entropy(mean_dist),
        mean_pairwise_jsd,
        replicates,
    })
}
