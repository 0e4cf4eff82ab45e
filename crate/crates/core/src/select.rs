//! Subset selection over a pool of candidate distributions.
//!
//! Both strategies scan the pool in order of decreasing confidence
//! `|p_yes - 0.5|`, starting from the single most confident member, and stop
//! at the first candidate that violates their criterion once the tentative
//! subset has reached `m_min` members:
//!
//! * greedy: the epistemic term may not jump by more than `eps_tol` in one step;
//! * conservative: total uncertainty must keep dropping by more than `tau`.
//!
//! Epistemic uncertainty is the mean (optionally squared) JSD of each member
//! to the subset mean; aleatoric uncertainty is the mean binary entropy.
//! Stop tests use strict `>`, so a step that leaves the criterion exactly on
//! its threshold is accepted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infotheory::{binary_entropy, jsd};
use crate::record::{BinaryDist, Member, PredictionPool, SelectionResult, TraceStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Unweighted mean of `p_yes`.
    Mean,
    /// Mean weighted by `1 - H(p)`.
    AleatoricWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuseParams {
    /// Weight of the aleatoric term in total uncertainty.
    #[serde(with = "extended_f64")]
    pub beta: f64,
    /// Largest tolerated single-step increase of epistemic uncertainty (greedy).
    #[serde(with = "extended_f64")]
    pub eps_tol: f64,
    /// Required decrease of total uncertainty per step (conservative).
    #[serde(with = "extended_f64")]
    pub tau: f64,
    /// Subset size below which the stop test is not evaluated.
    pub m_min: usize,
    /// Square each member's JSD before averaging.
    pub square_jsd: bool,
    pub aggregation: Aggregation,
}

impl Default for MuseParams {
    fn default() -> Self {
        MuseParams {
            beta: 1.0,
            eps_tol: 0.04,
            tau: 0.0,
            m_min: 20,
            square_jsd: true,
            aggregation: Aggregation::Mean,
        }
    }
}

impl MuseParams {
    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: f64| {
            if v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be >= 0, got {v}")))
            }
        };
        check("beta", self.beta)?;
        check("eps_tol", self.eps_tol)?;
        check("tau", self.tau)?;
        if self.m_min == 0 {
            return Err(Error::InvalidConfig("m_min must be >= 1".into()));
        }
        Ok(())
    }
}

/// JSON has no infinities; non-finite values travel as `"inf"`, `"-inf"`
/// or `"nan"`.
pub(crate) mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.collect_str(v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[inline]
pub fn confidence(p: BinaryDist) -> f64 {
    (p.p_yes() - 0.5).abs()
}

#[inline]
fn spread(d: f64, square: bool) -> f64 {
    if square {
        d * d
    } else {
        d
    }
}

/// Mean `p_yes`, accumulated as deviations from the first member so that a
/// subset of identical members has exactly that member as its mean.
fn mean_p(s: &[BinaryDist]) -> f64 {
    let anchor = s[0].p_yes();
    anchor + s.iter().map(|d| d.p_yes() - anchor).sum::<f64>() / s.len() as f64
}

/// Mean over `s` of `JS(p || mean(s))`, squared per member when `square`.
///
/// # Panics
/// If `s` is empty.
pub fn subset_epistemic(s: &[BinaryDist], square: bool) -> f64 {
    assert!(!s.is_empty(), "subset_epistemic of an empty subset");
    let centre = BinaryDist::clamped(mean_p(s));
    s.iter().map(|&p| spread(jsd(p, centre), square)).sum::<f64>() / s.len() as f64
}

/// Mean binary entropy over `s`.
///
/// # Panics
/// If `s` is empty.
pub fn subset_aleatoric(s: &[BinaryDist]) -> f64 {
    assert!(!s.is_empty(), "subset_aleatoric of an empty subset");
    s.iter().map(|&p| binary_entropy(p)).sum::<f64>() / s.len() as f64
}

/// # Panics
/// If `s` is empty.
pub fn aggregate(s: &[BinaryDist], strategy: Aggregation) -> BinaryDist {
    assert!(!s.is_empty(), "aggregate of an empty subset");
    let lo = s.iter().map(|d| d.p_yes()).fold(f64::INFINITY, f64::min);
    let hi = s.iter().map(|d| d.p_yes()).fold(f64::NEG_INFINITY, f64::max);
    let p = match strategy {
        Aggregation::Mean => mean_p(s),
        Aggregation::AleatoricWeighted => {
            let (num, den) = s.iter().fold((0.0, 0.0), |(num, den), &d| {
                let w = 1.0 - binary_entropy(d);
                (num + w * d.p_yes(), den + w)
            });
            if den > 0.0 {
                num / den
            } else {
                mean_p(s)
            }
        }
    };
    BinaryDist::clamped(p.clamp(lo, hi))
}

/// Running sums for a growing subset. Members with equal `p_yes` share one
/// slot so the per-step JSD pass costs O(distinct values).
struct Subset {
    anchor: f64,
    /// Sum of `p_yes - anchor`.
    sum_dev: f64,
    sum_h: f64,
    len: usize,
    distinct: Vec<(BinaryDist, usize)>,
}

impl Subset {
    fn seeded(first: BinaryDist) -> Self {
        Subset {
            anchor: first.p_yes(),
            sum_dev: 0.0,
            sum_h: binary_entropy(first),
            len: 1,
            distinct: vec![(first, 1)],
        }
    }

    /// `(u_epis, u_alea)` of this subset with `extra` added.
    fn with(&self, extra: BinaryDist, square: bool) -> (f64, f64) {
        let n = (self.len + 1) as f64;
        let centre = BinaryDist::clamped(self.anchor + (self.sum_dev + (extra.p_yes() - self.anchor)) / n);
        let epis = self
            .distinct
            .iter()
            .map(|&(p, count)| count as f64 * spread(jsd(p, centre), square))
            .sum::<f64>()
            + spread(jsd(extra, centre), square);
        let alea = (self.sum_h + binary_entropy(extra)) / n;
        (epis / n, alea)
    }

    fn push(&mut self, d: BinaryDist) {
        self.sum_dev += d.p_yes() - self.anchor;
        self.sum_h += binary_entropy(d);
        self.len += 1;
        match self.distinct.iter_mut().find(|(p, _)| p.p_yes().to_bits() == d.p_yes().to_bits()) {
            Some((_, count)) => *count += 1,
            None => self.distinct.push((d, 1)),
        }
    }

    fn aleatoric(&self) -> f64 {
        self.sum_h / self.len as f64
    }
}

#[derive(Clone, Copy)]
enum Rule {
    Greedy,
    Conservative,
}

/// Pool members by decreasing confidence; ties keep pool order.
pub fn confidence_order(pool: &PredictionPool) -> Vec<&Member> {
    let mut sorted: Vec<&Member> = pool.members().iter().collect();
    sorted.sort_by(|a, b| confidence(b.dist).total_cmp(&confidence(a.dist)));
    sorted
}

fn select(pool: &PredictionPool, params: &MuseParams, rule: Rule) -> Result<SelectionResult> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    params.validate()?;

    let sorted = confidence_order(pool);
    let (first, rest) = sorted.split_first().expect("non-empty pool");
    let mut subset = Subset::seeded(first.dist);
    let mut chosen = vec![*first];
    let mut trace = Vec::with_capacity(rest.len());

    let mut epis_prev = 0.0;
    let mut total_prev = f64::INFINITY;
    // uncertainties of the current accepted subset
    let mut current = (0.0, binary_entropy(first.dist));

    for cand in rest {
        let (u_epis, u_alea) = subset.with(cand.dist, params.square_jsd);
        let size = chosen.len() + 1;
        let stop = size >= params.m_min
            && match rule {
                Rule::Greedy => u_epis - epis_prev > params.eps_tol,
                Rule::Conservative => u_epis + params.beta * u_alea > total_prev - params.tau,
            };
        trace.push(TraceStep {
            source_id: cand.source_id.clone(),
            accepted: !stop,
            u_epis,
            u_alea,
        });
        if stop {
            break;
        }
        subset.push(cand.dist);
        chosen.push(*cand);
        epis_prev = u_epis;
        total_prev = u_epis + params.beta * u_alea;
        current = (u_epis, u_alea);
    }

    let (u_epis, u_alea) = match rule {
        Rule::Greedy => (epis_prev, subset.aleatoric()),
        Rule::Conservative => current,
    };
    let dists: Vec<BinaryDist> = chosen.iter().map(|m| m.dist).collect();
    Ok(SelectionResult {
        chosen: chosen.iter().map(|m| m.source_id.clone()).collect(),
        p_hat_yes: aggregate(&dists, params.aggregation).p_yes(),
        u_epis,
        u_alea,
        u_total: u_epis + params.beta * u_alea,
        beta: params.beta,
        trace,
        m_min_unreachable: params.m_min > pool.len(),
    })
}

/// Greedy selection: grow the subset while each step raises epistemic
/// uncertainty by at most `eps_tol` (checked once the subset has `m_min`
/// members).
pub fn muse_greedy(pool: &PredictionPool, params: &MuseParams) -> Result<SelectionResult> {
    select(pool, params, Rule::Greedy)
}

/// Conservative selection: grow the subset while total uncertainty
/// `u_epis + beta * u_alea` keeps improving by more than `tau` (checked once
/// the subset has `m_min` members).
pub fn muse_conservative(pool: &PredictionPool, params: &MuseParams) -> Result<SelectionResult> {
    select(pool, params, Rule::Conservative)
}
