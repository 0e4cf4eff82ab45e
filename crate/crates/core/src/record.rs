//! Domain types shared by every stage: binary distributions, prediction
//! records as they appear on disk, per-item pools, and selection results.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::selfcons::{self, BootstrapConfig};
use crate::sll::{self, LikelihoodPair};

/// A two-outcome predictive distribution `(p_yes, 1 - p_yes)`.
///
/// Only `p_yes` is stored, so the two masses always sum to one.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct BinaryDist(f64);

impl BinaryDist {
    pub const UNIFORM: BinaryDist = BinaryDist(0.5);

    pub fn new(p_yes: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p_yes) {
            Ok(BinaryDist(p_yes))
        } else {
            Err(Error::ProbabilityOutOfRange(p_yes))
        }
    }

    /// Builds a distribution from a value known to be a probability up to
    /// rounding; values are clamped into `[0, 1]`.
    pub(crate) fn clamped(p_yes: f64) -> Self {
        debug_assert!(!p_yes.is_nan());
        BinaryDist(p_yes.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn p_yes(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn p_no(self) -> f64 {
        1.0 - self.0
    }

    /// The same distribution with outcomes swapped.
    pub fn flipped(self) -> Self {
        BinaryDist(1.0 - self.0)
    }
}

impl<'de> Deserialize<'de> for BinaryDist {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let p = f64::deserialize(d)?;
        BinaryDist::new(p).map_err(serde::de::Error::custom)
    }
}

/// A yes/no outcome: a sampled decode or a ground-truth label.
///
/// Parses from `"yes"`/`"no"`, `true`/`false` or `1`/`0`; always written as
/// `"yes"`/`"no"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryLabel {
    Yes,
    No,
}

impl BinaryLabel {
    pub fn is_yes(self) -> bool {
        self == BinaryLabel::Yes
    }

    pub fn as_f64(self) -> f64 {
        if self.is_yes() {
            1.0
        } else {
            0.0
        }
    }
}

impl From<bool> for BinaryLabel {
    fn from(b: bool) -> Self {
        if b {
            BinaryLabel::Yes
        } else {
            BinaryLabel::No
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BinaryLabel::Yes => "yes",
            BinaryLabel::No => "no",
        })
    }
}

impl FromStr for BinaryLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yes" | "y" | "true" | "1" => Ok(BinaryLabel::Yes),
            "no" | "n" | "false" | "0" => Ok(BinaryLabel::No),
            other => Err(format!("not a binary label: {other:?}")),
        }
    }
}

impl Serialize for BinaryLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BinaryLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Bool(bool),
            Int(i64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Bool(b) => Ok(b.into()),
            Raw::Int(1) => Ok(BinaryLabel::Yes),
            Raw::Int(0) => Ok(BinaryLabel::No),
            Raw::Int(i) => Err(serde::de::Error::custom(format!(
                "not a binary label: {i}"
            ))),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// One predictor's output(s) for one item, as stored in the JSONL record file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    pub item_id: String,
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_outputs: Option<Vec<BinaryLabel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_yes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ll_yes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ll_no: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<BinaryLabel>,
    /// Descriptive metadata (sampling temperature, sample count, ...).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl PredictionRecord {
    pub fn new(item_id: impl Into<String>, model_id: impl Into<String>) -> Self {
        PredictionRecord {
            item_id: item_id.into(),
            model_id: model_id.into(),
            raw_outputs: None,
            p_yes: None,
            ll_yes: None,
            ll_no: None,
            label: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_raw_outputs(mut self, outputs: Vec<BinaryLabel>) -> Self {
        self.raw_outputs = Some(outputs);
        self
    }

    pub fn with_p_yes(mut self, p: f64) -> Self {
        self.p_yes = Some(p);
        self
    }

    pub fn with_likelihoods(mut self, ll_yes: f64, ll_no: f64) -> Self {
        self.ll_yes = Some(ll_yes);
        self.ll_no = Some(ll_no);
        self
    }

    pub fn with_label(mut self, label: BinaryLabel) -> Self {
        self.label = Some(label);
        self
    }

    /// The `(ll_yes, ll_no)` pair, when both halves are present.
    pub fn likelihoods(&self) -> Option<(f64, f64)> {
        self.ll_yes.zip(self.ll_no)
    }
}

/// Checks the record invariants and hands the record back unchanged.
pub fn validate_record(record: PredictionRecord) -> Result<PredictionRecord> {
    if record.raw_outputs.is_none() && record.p_yes.is_none() && record.likelihoods().is_none() {
        return Err(Error::MissingAllChannels);
    }
    if matches!(&record.raw_outputs, Some(v) if v.is_empty()) {
        return Err(Error::EmptyRawOutputs);
    }
    if let Some(p) = record.p_yes {
        BinaryDist::new(p)?;
    }
    Ok(record)
}

/// How records become pool members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionKind {
    /// One distribution per record.
    Point,
    /// One distribution per bootstrap replicate for records carrying raw
    /// outputs; other records contribute a single point member.
    Replicates,
}

impl ExpansionKind {
    /// What a pool member stands for; stamped into reports.
    pub fn pool_basis(self) -> &'static str {
        match self {
            ExpansionKind::Point => "models",
            ExpansionKind::Replicates => "model_bootstrap_replicates",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expansion {
    Point,
    Replicates(BootstrapConfig),
}

impl Expansion {
    pub fn kind(&self) -> ExpansionKind {
        match self {
            Expansion::Point => ExpansionKind::Point,
            Expansion::Replicates(_) => ExpansionKind::Replicates,
        }
    }
}

/// A pool member: a named candidate distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub source_id: String,
    pub dist: BinaryDist,
}

impl Member {
    pub fn new(source_id: impl Into<String>, dist: BinaryDist) -> Self {
        Member {
            source_id: source_id.into(),
            dist,
        }
    }
}

/// The set of candidate distributions for one item, in insertion order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionPool {
    item_id: String,
    members: Vec<Member>,
    label: Option<BinaryLabel>,
}

impl PredictionPool {
    pub fn new(
        item_id: impl Into<String>,
        members: Vec<Member>,
        label: Option<BinaryLabel>,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyPool);
        }
        let mut seen = HashSet::with_capacity(members.len());
        for m in &members {
            if !seen.insert(m.source_id.as_str()) {
                return Err(Error::DuplicateSource(m.source_id.clone()));
            }
        }
        Ok(PredictionPool {
            item_id: item_id.into(),
            members,
            label,
        })
    }

    /// Pool with generated source ids `s0, s1, ...`; handy for tests.
    pub fn from_probabilities(item_id: &str, probs: &[f64]) -> Result<Self> {
        let members = probs
            .iter()
            .enumerate()
            .map(|(i, &p)| Ok(Member::new(format!("s{i}"), BinaryDist::new(p)?)))
            .collect::<Result<Vec<_>>>()?;
        PredictionPool::new(item_id, members, None)
    }

    pub fn item_id(&self) -> &str {
        &self.item_id
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn label(&self) -> Option<BinaryLabel> {
        self.label
    }

    pub fn set_label(&mut self, label: Option<BinaryLabel>) {
        self.label = label;
    }

    pub fn dists(&self) -> impl Iterator<Item = BinaryDist> + '_ {
        self.members.iter().map(|m| m.dist)
    }
}

/// Resolves a record to a single distribution: `p_yes`, then the empirical
/// frequency of `raw_outputs`, then the softmax of the likelihood pair.
pub fn point_estimate(record: &PredictionRecord) -> Result<BinaryDist> {
    if let Some(p) = record.p_yes {
        return BinaryDist::new(p);
    }
    if let Some(outputs) = &record.raw_outputs {
        return selfcons::empirical_frequency(outputs);
    }
    if let Some((ll_yes, ll_no)) = record.likelihoods() {
        return Ok(sll::sll_probability(LikelihoodPair::new(ll_yes, ll_no)?));
    }
    Err(Error::UnresolvableRecord {
        item_id: record.item_id.clone(),
        model_id: record.model_id.clone(),
    })
}

/// Builds the candidate pool for one item.
///
/// Under [`Expansion::Replicates`] every record with raw outputs contributes
/// `trials` members named `<model_id>#<replicate_index>`, bootstrapped with a
/// seed derived from the configured seed and `(item_id, model_id)`.
pub fn build_pool(records: &[PredictionRecord], expansion: &Expansion) -> Result<PredictionPool> {
    let first = records.first().ok_or(Error::EmptyPool)?;
    let item_id = first.item_id.as_str();
    let mut label = None;
    let mut members = Vec::new();
    for record in records {
        if record.item_id != item_id {
            return Err(Error::MixedItemIds {
                expected: item_id.to_string(),
                found: record.item_id.clone(),
            });
        }
        if let Some(l) = record.label {
            match label {
                Some(prev) if prev != l => {
                    return Err(Error::InvalidConfig(format!(
                        "conflicting labels for item {item_id:?}"
                    )))
                }
                _ => label = Some(l),
            }
        }
        match (expansion, &record.raw_outputs) {
            (Expansion::Replicates(cfg), Some(outputs)) => {
                let cfg = cfg.for_record(item_id, &record.model_id);
                let summary = selfcons::bootstrap(outputs, &cfg)?;
                members.extend(
                    summary
                        .replicates
                        .iter()
                        .enumerate()
                        .map(|(i, &p)| Member::new(format!("{}#{i}", record.model_id), p)),
                );
            }
            _ => members.push(Member::new(record.model_id.clone(), point_estimate(record)?)),
        }
    }
    PredictionPool::new(item_id, members, label)
}

/// Outcome of one candidate visit during subset selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub source_id: String,
    pub accepted: bool,
    /// Epistemic uncertainty of the tentative subset.
    pub u_epis: f64,
    /// Aleatoric uncertainty of the tentative subset.
    pub u_alea: f64,
}

/// The chosen subset, its aggregate prediction, and its uncertainties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub chosen: Vec<String>,
    pub p_hat_yes: f64,
    pub u_epis: f64,
    pub u_alea: f64,
    pub u_total: f64,
    pub beta: f64,
    pub trace: Vec<TraceStep>,
    /// True when the pool was smaller than `m_min`, so the stop test could
    /// never fire.
    pub m_min_unreachable: bool,
}
