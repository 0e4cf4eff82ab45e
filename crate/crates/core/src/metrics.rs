//! Discrimination and calibration metrics for binary probabilistic scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::SelectionResult;

/// Non-empty list of `(score, label)` pairs with scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledScores {
    pairs: Vec<(f64, bool)>,
}

impl LabeledScores {
    pub fn new(pairs: Vec<(f64, bool)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyScores);
        }
        if let Some(&(s, _)) = pairs.iter().find(|(s, _)| !(0.0..=1.0).contains(s)) {
            return Err(Error::ProbabilityOutOfRange(s));
        }
        Ok(LabeledScores { pairs })
    }

    pub fn pairs(&self) -> &[(f64, bool)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EceConfig {
    /// Equal-width bins over confidence in `[0.5, 1]`.
    pub n_bins: usize,
}

impl Default for EceConfig {
    fn default() -> Self {
        EceConfig { n_bins: 10 }
    }
}

/// Area under the ROC curve via the rank-sum (Mann-Whitney) statistic, with
/// tied scores given average ranks. `None` when only one class is present.
pub fn auroc(data: &LabeledScores) -> Option<f64> {
    let n_pos = data.pairs.iter().filter(|(_, y)| *y).count();
    let n_neg = data.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }

    let mut sorted: Vec<(f64, bool)> = data.pairs.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // sum of (1-based) ranks of positives, doubled to stay integral
    let mut doubled_rank_sum: u64 = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].0 == sorted[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j share the average (i + 1 + j) / 2
        let positives = sorted[i..j].iter().filter(|(_, y)| *y).count() as u64;
        doubled_rank_sum += positives * (i + 1 + j) as u64;
        i = j;
    }
    let n_pos = n_pos as u64;
    // 2U = 2R - n_pos (n_pos + 1)
    let doubled_u = doubled_rank_sum - n_pos * (n_pos + 1);
    Some(doubled_u as f64 / (2 * n_pos * n_neg as u64) as f64)
}

/// Expected calibration error over the predicted-class confidence
/// `max(s, 1 - s)`, with predicted label `s > 0.5`.
pub fn ece(data: &LabeledScores, cfg: &EceConfig) -> f64 {
    let n_bins = cfg.n_bins.max(1);
    let mut count = vec![0usize; n_bins];
    let mut correct = vec![0usize; n_bins];
    let mut conf_sum = vec![0.0f64; n_bins];

    for &(s, y) in &data.pairs {
        let conf = s.max(1.0 - s);
        let predicted = s > 0.5;
        let bin = (((conf - 0.5) * 2.0 * n_bins as f64).floor() as usize).min(n_bins - 1);
        count[bin] += 1;
        conf_sum[bin] += conf;
        if predicted == y {
            correct[bin] += 1;
        }
    }

    let n = data.len() as f64;
    (0..n_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| {
            let nb = count[b] as f64;
            (nb / n) * (correct[b] as f64 / nb - conf_sum[b] / nb).abs()
        })
        .sum()
}

pub fn brier(data: &LabeledScores) -> f64 {
    data.pairs
        .iter()
        .map(|&(s, y)| {
            let t = if y { 1.0 } else { 0.0 };
            (s - t) * (s - t)
        })
        .sum::<f64>()
        / data.len() as f64
}

/// AUROC (optional), ECE and Brier in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub auroc: Option<f64>,
    pub ece: f64,
    pub brier: f64,
}

impl MetricSet {
    pub fn compute(data: &LabeledScores, cfg: &EceConfig) -> Self {
        MetricSet {
            auroc: auroc(data),
            ece: ece(data, cfg),
            brier: brier(data),
        }
    }

    pub fn percent(&self) -> PercentMetrics {
        PercentMetrics {
            auroc: format_pct(self.auroc),
            ece: format_pct(Some(self.ece)),
            brier: format_pct(Some(self.brier)),
        }
    }
}

/// Metrics as printed in tables: ×100, two decimals, `n/a` when undefined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PercentMetrics {
    pub auroc: String,
    pub ece: String,
    pub brier: String,
}

pub fn format_pct(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{:.2}", v * 100.0),
        None => "n/a".to_string(),
    }
}

/// Which per-item quantity is used as the score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    PYes,
    TotalUncertainty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalScores {
    pub signal: Signal,
    pub scores: LabeledScores,
    /// Largest observed `u_total`, used to rescale uncertainty into a score.
    pub normalizer: Option<f64>,
}

/// Turns selection results into labeled scores.
///
/// `TotalUncertainty` scores each item as `1 - u_total / max(u_total)`, so
/// that lower uncertainty reads as higher confidence; when the maximum is 0
/// every score is 0.
pub fn score_with(
    signal: Signal,
    items: &[(&str, &SelectionResult, Option<bool>)],
) -> Result<SignalScores> {
    let missing: Vec<String> = items
        .iter()
        .filter(|(_, _, y)| y.is_none())
        .map(|(id, _, _)| id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingLabels(missing));
    }
    let labels = items.iter().map(|(_, _, y)| y.unwrap_or_default());
    let (raw, normalizer): (Vec<f64>, Option<f64>) = match signal {
        Signal::PYes => (items.iter().map(|(_, r, _)| r.p_hat_yes).collect(), None),
        Signal::TotalUncertainty => {
            let max = items.iter().map(|(_, r, _)| r.u_total).fold(0.0, f64::max);
            let scores = items
                .iter()
                .map(|(_, r, _)| {
                    if max > 0.0 {
                        (1.0 - r.u_total / max).clamp(0.0, 1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            (scores, Some(max))
        }
    };
    Ok(SignalScores {
        signal,
        scores: LabeledScores::new(raw.into_iter().zip(labels).collect())?,
        normalizer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ls(pairs: &[(f64, u8)]) -> LabeledScores {
        LabeledScores::new(pairs.iter().map(|&(s, y)| (s, y == 1)).collect()).unwrap()
    }

    fn brute_auroc(data: &LabeledScores) -> Option<f64> {
        let pos: Vec<f64> = data.pairs().iter().filter(|p| p.1).map(|p| p.0).collect();
        let neg: Vec<f64> = data.pairs().iter().filter(|p| !p.1).map(|p| p.0).collect();
        if pos.is_empty() || neg.is_empty() {
            return None;
        }
        let mut wins = 0.0;
        for &a in &pos {
            for &b in &neg {
                if a > b {
                    wins += 1.0;
                } else if a == b {
                    wins += 0.5;
                }
            }
        }
        Some(wins / (pos.len() * neg.len()) as f64)
    }

    #[test]
    fn validation() {
        assert_eq!(LabeledScores::new(vec![]).unwrap_err().kind(), "empty-scores");
        assert_eq!(LabeledScores::new(vec![(1.2, true)]).unwrap_err().kind(), "p-out-of-range");
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&ls(&[(1.0, 1), (0.0, 0), (1.0, 1), (0.0, 0)])), Some(1.0));
        assert_eq!(auroc(&ls(&[(0.4, 1), (0.4, 0), (0.4, 0), (0.4, 1)])), Some(0.5));
        assert_eq!(auroc(&ls(&[(0.1, 0), (0.4, 1), (0.35, 0), (0.8, 1)])), Some(1.0));
        assert_eq!(auroc(&ls(&[(0.1, 1), (0.4, 1)])), None);
    }

    #[test]
    fn ece_examples() {
        assert_eq!(ece(&ls(&[(1.0, 1), (0.0, 0), (1.0, 1)]), &EceConfig::default()), 0.0);
        assert_eq!(ece(&ls(&[(1.0, 1), (1.0, 0), (1.0, 1), (1.0, 0)]), &EceConfig::default()), 0.5);
        // confidence 0.5 everywhere, predicted "no", three of four labels are "no"
        assert_eq!(ece(&ls(&[(0.5, 1), (0.5, 0), (0.5, 0), (0.5, 0)]), &EceConfig::default()), 0.25);
    }

    #[test]
    fn ece_two_bin_fixture() {
        // bin [0.9, 1.0]: 0.95 (yes, correct), 0.05 (no, correct) -> conf 0.95, acc 1.0
        // bin [0.6, 0.7): 0.65 (yes, wrong), 0.35 (no, correct) -> conf 0.65, acc 0.5
        let data = ls(&[(0.95, 1), (0.05, 0), (0.65, 0), (0.35, 0)]);
        let expected = 0.5 * (1.0f64 - 0.95).abs() + 0.5 * (0.5f64 - 0.65).abs();
        assert!((ece(&data, &EceConfig::default()) - expected).abs() < 1e-15);
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier(&ls(&[(1.0, 1), (0.0, 0)])), 0.0);
        assert_eq!(brier(&ls(&[(0.5, 1), (0.5, 0), (0.5, 0)])), 0.25);
        assert!((brier(&ls(&[(0.8, 1), (0.3, 0)])) - 0.065).abs() < 1e-15);
    }

    #[test]
    fn percent_format() {
        assert_eq!(format_pct(Some(0.1883)), "18.83");
        assert_eq!(format_pct(Some(0.0)), "0.00");
        assert_eq!(format_pct(None), "n/a");
    }

    fn result(p: f64, u: f64) -> SelectionResult {
        SelectionResult {
            chosen: vec!["a".into()],
            p_hat_yes: p,
            u_epis: 0.0,
            u_alea: u,
            u_total: u,
            beta: 1.0,
            trace: vec![],
            m_min_unreachable: false,
        }
    }

    #[test]
    fn score_with_signals() {
        let rs = [result(0.2, 0.1), result(0.7, 0.4), result(0.9, 0.3)];
        let items: Vec<_> = rs
            .iter()
            .zip([Some(false), Some(true), Some(true)])
            .map(|(r, y)| ("i", r, y))
            .collect();
        let p = score_with(Signal::PYes, &items).unwrap();
        assert_eq!(p.scores.pairs().iter().map(|x| x.0).collect::<Vec<_>>(), vec![0.2, 0.7, 0.9]);

        let u = score_with(Signal::TotalUncertainty, &items[..2]).unwrap();
        assert_eq!(u.normalizer, Some(0.4));
        assert_eq!(u.scores.pairs()[0].0, 0.75);
        assert_eq!(u.scores.pairs()[1].0, 0.0);

        let flat = [result(0.2, 0.3), result(0.8, 0.3)];
        let items: Vec<_> = flat.iter().zip([Some(false), Some(true)]).map(|(r, y)| ("i", r, y)).collect();
        let u = score_with(Signal::TotalUncertainty, &items).unwrap();
        assert!(u.scores.pairs().iter().all(|x| x.0 == 0.0));
        assert_eq!(auroc(&u.scores), Some(0.5));

        let missing = [("j", &rs[0], None)];
        assert_eq!(score_with(Signal::PYes, &missing).unwrap_err().kind(), "label-mismatch");
    }

    fn arb_scores(max: usize) -> impl Strategy<Value = LabeledScores> {
        proptest::collection::vec(((0u8..=20).prop_map(|k| k as f64 / 20.0), any::<bool>()), 1..max)
            .prop_map(|v| LabeledScores::new(v).unwrap())
    }

    proptest! {
        #[test]
        fn auroc_matches_brute_force(data in arb_scores(200)) {
            prop_assert_eq!(auroc(&data), brute_auroc(&data));
        }

        #[test]
        fn auroc_complement(v in proptest::collection::vec((0.0f64..=1.0, any::<bool>()), 2..100)) {
            let data = LabeledScores::new(v.clone()).unwrap();
            let flipped = LabeledScores::new(v.iter().map(|&(s, y)| (1.0 - s, y)).collect()).unwrap();
            let mut scores: Vec<f64> = v.iter().map(|p| p.0).collect();
            scores.sort_by(f64::total_cmp);
            scores.dedup();
            if let (Some(a), Some(b)) = (auroc(&data), auroc(&flipped)) {
                if scores.len() == v.len() {
                    prop_assert!((a + b - 1.0).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn ece_brier_bounds(data in arb_scores(100), bins in 1usize..30) {
            let e = ece(&data, &EceConfig { n_bins: bins });
            prop_assert!((0.0..=1.0).contains(&e));
            let b = brier(&data);
            prop_assert!((0.0..=1.0).contains(&b));
            let mirrored = LabeledScores::new(data.pairs().iter().map(|&(s, y)| (1.0 - s, !y)).collect()).unwrap();
            prop_assert!((brier(&mirrored) - b).abs() < 1e-12);
        }
    }
}
