//! Seeded generator of multi-predictor data with complementary expertise.
//!
//! Each item falls in one region and has a latent probability `q` drawn
//! from that region's Beta distribution; its label is `Bernoulli(q)`. A
//! model that is expert in the region reports `q`; every other model reports
//! `sigmoid(logit(q) + miscalibration + N(0, noise_level))`. Raw outputs are
//! `k_samples` Bernoulli draws from the reported probability.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{BinaryLabel, PredictionRecord};
use crate::selfcons::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RegionWeights {
    Uniform,
    /// Region `r` has weight `1 / (r + 1)^exponent`.
    Zipf { exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_items: usize,
    pub n_models: usize,
    pub n_regions: usize,
    /// Regions each model is calibrated on. Empty means round-robin:
    /// model `m` owns every region `r` with `r % n_models == m`.
    pub expertise: BTreeMap<usize, BTreeSet<usize>>,
    pub noise_level: f64,
    pub miscalibration: f64,
    pub k_samples: usize,
    pub seed: u64,
    /// Beta `(alpha, beta)` per region, cycled when shorter than `n_regions`.
    pub region_beta: Vec<(f64, f64)>,
    pub region_weights: RegionWeights,
    pub require_coverage: bool,
    /// Also emit each model's probability as `p_yes`.
    pub emit_probability: bool,
    /// Also emit `(ln p, ln(1 - p))` as the likelihood pair.
    pub emit_likelihoods: bool,
    /// Attach ground-truth labels to the records.
    pub attach_labels: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_items: 2000,
            n_models: 4,
            n_regions: 4,
            expertise: BTreeMap::new(),
            noise_level: 2.0,
            miscalibration: 0.5,
            k_samples: 10,
            seed: 0,
            region_beta: vec![(0.5, 0.5), (2.0, 5.0), (5.0, 2.0), (1.0, 1.0)],
            region_weights: RegionWeights::Uniform,
            require_coverage: true,
            emit_probability: false,
            emit_likelihoods: false,
            attach_labels: false,
        }
    }
}

impl SynthConfig {
    pub fn expertise_of(&self, model: usize) -> BTreeSet<usize> {
        if self.expertise.is_empty() {
            (0..self.n_regions).filter(|r| r % self.n_models == model).collect()
        } else {
            self.expertise.get(&model).cloned().unwrap_or_default()
        }
    }

    pub fn region_params(&self, region: usize) -> (f64, f64) {
        self.region_beta[region % self.region_beta.len()]
    }

    /// `alpha / (alpha + beta)` of the region's Beta.
    pub fn region_mean(&self, region: usize) -> f64 {
        let (a, b) = self.region_params(region);
        a / (a + b)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_items == 0 || self.n_models == 0 || self.n_regions == 0 || self.k_samples == 0 {
            return bad("n_items, n_models, n_regions and k_samples must be positive".into());
        }
        if !(self.noise_level >= 0.0) || !self.miscalibration.is_finite() {
            return bad("noise_level must be >= 0 and miscalibration finite".into());
        }
        if self.region_beta.is_empty() || self.region_beta.iter().any(|&(a, b)| !(a > 0.0 && b > 0.0)) {
            return bad("region Beta parameters must be positive".into());
        }
        if let RegionWeights::Zipf { exponent } = self.region_weights {
            if !(exponent >= 0.0) {
                return bad("zipf exponent must be >= 0".into());
            }
        }
        if let Some((&m, _)) = self.expertise.iter().find(|(&m, rs)| {
            m >= self.n_models || rs.iter().any(|&r| r >= self.n_regions)
        }) {
            return bad(format!("expertise entry for model {m} is out of range"));
        }
        if self.require_coverage {
            let covered: BTreeSet<usize> = (0..self.n_models).flat_map(|m| self.expertise_of(m)).collect();
            if let Some(r) = (0..self.n_regions).find(|r| !covered.contains(r)) {
                return bad(format!("region {r} has no expert model"));
            }
        }
        Ok(())
    }

    fn region_sampler(&self) -> WeightedIndex<f64> {
        let weights: Vec<f64> = (0..self.n_regions)
            .map(|r| match self.region_weights {
                RegionWeights::Uniform => 1.0,
                RegionWeights::Zipf { exponent } => ((r + 1) as f64).powf(-exponent),
            })
            .collect();
        WeightedIndex::new(weights).expect("positive region weights")
    }
}

/// Ground truth for one generated item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthItem {
    pub item_id: String,
    pub region: usize,
    pub q: f64,
    pub label: BinaryLabel,
    /// Probability reported by each model, in model order.
    pub model_probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthData {
    pub records: Vec<PredictionRecord>,
    pub labels: Vec<(String, BinaryLabel)>,
    pub items: Vec<SynthItem>,
}

pub fn model_id(m: usize) -> String {
    format!("model-{m}")
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let region_sampler = cfg.region_sampler();
    let betas: Vec<Beta<f64>> = (0..cfg.n_regions)
        .map(|r| {
            let (a, b) = cfg.region_params(r);
            Beta::new(a, b).map_err(|e| Error::InvalidConfig(e.to_string()))
        })
        .collect::<Result<_>>()?;
    let noise = Normal::new(0.0, cfg.noise_level).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let expert: Vec<BTreeSet<usize>> = (0..cfg.n_models).map(|m| cfg.expertise_of(m)).collect();
    let width = cfg.n_items.saturating_sub(1).to_string().len().max(5);

    let mut data = SynthData {
        records: Vec::with_capacity(cfg.n_items * cfg.n_models),
        labels: Vec::with_capacity(cfg.n_items),
        items: Vec::with_capacity(cfg.n_items),
    };
    for i in 0..cfg.n_items {
        let item_id = format!("item-{i:0width$}");
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &["synth", &item_id]));
        let region = region_sampler.sample(&mut rng);
        let q = betas[region].sample(&mut rng);
        let label = BinaryLabel::from(rng.random_bool(q));

        let mut model_probs = Vec::with_capacity(cfg.n_models);
        for (m, regions) in expert.iter().enumerate() {
            let p = if regions.contains(&region) {
                q
            } else {
                let shifted = logit(q) + cfg.miscalibration + noise.sample(&mut rng);
                if shifted.is_nan() {
                    q
                } else {
                    sigmoid(shifted)
                }
            };
            let raw: Vec<BinaryLabel> = (0..cfg.k_samples)
                .map(|_| BinaryLabel::from(rng.random_bool(p)))
                .collect();
            let mut record = PredictionRecord::new(item_id.clone(), model_id(m)).with_raw_outputs(raw);
            if cfg.emit_probability {
                record.p_yes = Some(p);
            }
            if cfg.emit_likelihoods {
                let p: f64 = p.clamp(1e-12, 1.0 - 1e-12);
                record = record.with_likelihoods(p.ln(), (1.0 - p).ln());
            }
            if cfg.attach_labels {
                record.label = Some(label);
            }
            record.meta.insert("k".into(), cfg.k_samples.into());
            record.meta.insert("region".into(), region.into());
            data.records.push(record);
            model_probs.push(p);
        }
        data.labels.push((item_id.clone(), label));
        data.items.push(SynthItem {
            item_id,
            region,
            q,
            label,
            model_probs,
        });
    }
    Ok(data)
}
