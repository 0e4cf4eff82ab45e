//! End-to-end evaluation: ingest records, build per-item pools, apply one
//! method, score against labels, and emit reports.

mod io;
mod report;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{load_labels, load_records, parse_records, to_json_bytes, write_labels, write_records};
pub use report::{
    summary_line, EvalReport, ItemRow, ReportHeader, SignalComparison, SignalRow, SweepCell,
    SweepGrid,
};

use crate::baselines::{majority_vote, mean_ensemble};
use crate::error::{Error, Result};
use crate::infotheory::{binary_entropy, LOG_BASE};
use crate::metrics::{score_with, EceConfig, LabeledScores, MetricSet, Signal};
use crate::record::{
    build_pool, BinaryDist, BinaryLabel, Expansion, ExpansionKind, PredictionPool,
    PredictionRecord, SelectionResult,
};
use crate::selfcons::{self, BootstrapConfig};
use crate::select::{muse_conservative, muse_greedy, subset_aleatoric, subset_epistemic, MuseParams};
use crate::sll::{sll_probability, LikelihoodPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Softmax over one model's `(ll_yes, ll_no)`.
    Sll,
    /// Bootstrap self-consistency of one model's raw outputs.
    GenBs,
    Majority,
    Mean,
    MuseGreedy,
    MuseConservative,
}

impl Method {
    pub fn is_muse(self) -> bool {
        matches!(self, Method::MuseGreedy | Method::MuseConservative)
    }

    fn single_model(self) -> bool {
        matches!(self, Method::Sll | Method::GenBs)
    }
}

/// Every knob of a run; echoed verbatim into report headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub method: Method,
    pub muse: MuseParams,
    pub bootstrap_trials: usize,
    pub bootstrap_fraction: f64,
    pub seed: u64,
    pub expansion: ExpansionKind,
    pub ece: EceConfig,
    /// Restrict to these model ids (all models when empty).
    pub models: Vec<String>,
    /// Yes-vote threshold for majority voting.
    pub vote_threshold: f64,
    pub timestamp: Option<String>,
}

impl Default for RunSettings {
    fn default() -> Self {
        let bs = BootstrapConfig::default();
        RunSettings {
            method: Method::MuseGreedy,
            muse: MuseParams::default(),
            bootstrap_trials: bs.trials,
            bootstrap_fraction: bs.fraction,
            seed: bs.seed,
            expansion: ExpansionKind::Replicates,
            ece: EceConfig::default(),
            models: Vec::new(),
            vote_threshold: 0.5,
            timestamp: None,
        }
    }
}

impl RunSettings {
    pub fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            trials: self.bootstrap_trials,
            fraction: self.bootstrap_fraction,
            seed: self.seed,
        }
    }

    pub fn expansion(&self) -> Expansion {
        match self.expansion {
            ExpansionKind::Point => Expansion::Point,
            ExpansionKind::Replicates => Expansion::Replicates(self.bootstrap()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.muse.validate()?;
        self.bootstrap().validate()?;
        if self.ece.n_bins == 0 {
            return Err(Error::InvalidConfig("ECE needs at least one bin".into()));
        }
        if !(0.0..=1.0).contains(&self.vote_threshold) {
            return Err(Error::InvalidConfig("vote threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn header(&self, n_items: usize) -> ReportHeader {
        let pool_basis = if self.method.single_model() {
            "single_model"
        } else {
            self.expansion.pool_basis()
        };
        ReportHeader {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            log_base: LOG_BASE,
            pool_basis: pool_basis.to_string(),
            settings: self.clone(),
            n_items,
            timestamp: self.timestamp.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub records: PathBuf,
    pub labels: Option<PathBuf>,
    pub settings: RunSettings,
    pub out_dir: Option<PathBuf>,
}

/// Records of one item, in file order, with its resolved label.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemInput {
    pub item_id: String,
    pub records: Vec<PredictionRecord>,
    pub label: Option<BinaryLabel>,
}

/// Groups records by item (first-appearance order) and attaches labels from
/// the records themselves and from `extra_labels`.
pub fn group_items(
    records: Vec<PredictionRecord>,
    extra_labels: &BTreeMap<String, BinaryLabel>,
) -> Result<Vec<ItemInput>> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut items: Vec<ItemInput> = Vec::new();
    for record in records {
        let slot = *index.entry(record.item_id.clone()).or_insert_with(|| {
            items.push(ItemInput {
                item_id: record.item_id.clone(),
                records: Vec::new(),
                label: None,
            });
            items.len() - 1
        });
        items[slot].records.push(record);
    }
    for item in &mut items {
        let from_records = item.records.iter().filter_map(|r| r.label);
        let from_csv = extra_labels.get(&item.item_id).copied();
        for label in from_records.chain(from_csv) {
            match item.label {
                Some(prev) if prev != label => {
                    return Err(Error::InvalidConfig(format!(
                        "conflicting labels for item {:?}",
                        item.item_id
                    )))
                }
                _ => item.label = Some(label),
            }
        }
    }
    Ok(items)
}

/// The per-item input a method works on.
#[derive(Debug, Clone)]
enum Prepared {
    Pool(PredictionPool),
    Single(PredictionRecord),
}

#[derive(Debug, Clone)]
struct PreparedItem {
    item_id: String,
    label: Option<BinaryLabel>,
    input: Prepared,
}

fn prepare(items: Vec<ItemInput>, settings: &RunSettings) -> Result<Vec<PreparedItem>> {
    let expansion = settings.expansion();
    items
        .into_par_iter()
        .map(|item| {
            let mut records = item.records;
            if !settings.models.is_empty() {
                records.retain(|r| settings.models.contains(&r.model_id));
            }
            if records.is_empty() {
                return Err(Error::UnresolvableRecord {
                    item_id: item.item_id.clone(),
                    model_id: settings.models.join(","),
                });
            }
            let input = if settings.method.single_model() {
                if records.len() != 1 {
                    return Err(Error::InvalidConfig(format!(
                        "{:?} scores a single model but item {:?} has {} records; select one with --model",
                        settings.method,
                        item.item_id,
                        records.len()
                    )));
                }
                Prepared::Single(records.pop().expect("one record"))
            } else {
                Prepared::Pool(build_pool(&records, &expansion)?)
            };
            Ok(PreparedItem {
                item_id: item.item_id,
                label: item.label,
                input,
            })
        })
        .collect()
}

struct Outcome {
    row: ItemRow,
    selection: SelectionResult,
}

/// Selection result covering the whole pool, for methods that do not select.
fn whole_pool(pool: &PredictionPool, p_hat: BinaryDist, params: &MuseParams) -> SelectionResult {
    let dists: Vec<BinaryDist> = pool.dists().collect();
    let u_epis = subset_epistemic(&dists, params.square_jsd);
    let u_alea = subset_aleatoric(&dists);
    SelectionResult {
        chosen: pool.members().iter().map(|m| m.source_id.clone()).collect(),
        p_hat_yes: p_hat.p_yes(),
        u_epis,
        u_alea,
        u_total: u_epis + params.beta * u_alea,
        beta: params.beta,
        trace: Vec::new(),
        m_min_unreachable: false,
    }
}

fn single(model_id: &str, p_hat: f64, u_epis: f64, u_alea: f64, beta: f64) -> SelectionResult {
    SelectionResult {
        chosen: vec![model_id.to_string()],
        p_hat_yes: p_hat,
        u_epis,
        u_alea,
        u_total: u_epis + beta * u_alea,
        beta,
        trace: Vec::new(),
        m_min_unreachable: false,
    }
}

fn apply(item: &PreparedItem, settings: &RunSettings) -> Result<Outcome> {
    let params = &settings.muse;
    let mut vote_tie = None;
    let mut bootstrap_variance = None;
    let (selection, pool_size) = match (&item.input, settings.method) {
        (Prepared::Single(record), Method::Sll) => {
            let (ll_yes, ll_no) = record.likelihoods().ok_or_else(|| Error::UnresolvableRecord {
                item_id: record.item_id.clone(),
                model_id: record.model_id.clone(),
            })?;
            let p = sll_probability(LikelihoodPair::new(ll_yes, ll_no)?);
            (single(&record.model_id, p.p_yes(), 0.0, binary_entropy(p), params.beta), 1)
        }
        (Prepared::Single(record), Method::GenBs) => {
            let outputs = record.raw_outputs.as_deref().ok_or_else(|| Error::UnresolvableRecord {
                item_id: record.item_id.clone(),
                model_id: record.model_id.clone(),
            })?;
            let cfg = settings.bootstrap().for_record(&record.item_id, &record.model_id);
            let s = selfcons::bootstrap(outputs, &cfg)?;
            bootstrap_variance = Some(s.variance);
            let sel = single(
                &record.model_id,
                s.replicate_mean,
                s.mean_pairwise_jsd,
                s.entropy_of_mean,
                params.beta,
            );
            (sel, 1)
        }
        (Prepared::Pool(pool), Method::Mean) => (whole_pool(pool, mean_ensemble(pool)?, params), pool.len()),
        (Prepared::Pool(pool), Method::Majority) => {
            let vote = majority_vote(pool, settings.vote_threshold)?;
            vote_tie = Some(vote.tie);
            (whole_pool(pool, vote.share, params), pool.len())
        }
        (Prepared::Pool(pool), Method::MuseGreedy) => (muse_greedy(pool, params)?, pool.len()),
        (Prepared::Pool(pool), Method::MuseConservative) => (muse_conservative(pool, params)?, pool.len()),
        _ => unreachable!("prepare matches input shape to method"),
    };
    Ok(Outcome {
        row: ItemRow {
            item_id: item.item_id.clone(),
            label: item.label,
            p_hat_yes: selection.p_hat_yes,
            u_epis: selection.u_epis,
            u_alea: selection.u_alea,
            u_total: selection.u_total,
            pool_size,
            chosen_size: selection.chosen.len(),
            chosen: selection.chosen.clone(),
            vote_tie,
            bootstrap_variance,
        },
        selection,
    })
}

/// Labels of every item, `None` when no item has one.
fn all_labels(items: &[PreparedItem]) -> Result<Option<Vec<bool>>> {
    let missing: Vec<String> = items
        .iter()
        .filter(|i| i.label.is_none())
        .map(|i| i.item_id.clone())
        .collect();
    if missing.len() == items.len() {
        Ok(None)
    } else if !missing.is_empty() {
        Err(Error::MissingLabels(missing))
    } else {
        Ok(Some(items.iter().map(|i| i.label.is_some_and(BinaryLabel::is_yes)).collect()))
    }
}

fn evaluate_prepared(items: &[PreparedItem], settings: &RunSettings) -> Result<(EvalReport, Vec<SelectionResult>)> {
    settings.validate()?;
    let outcomes: Vec<Outcome> = items.par_iter().map(|item| apply(item, settings)).collect::<Result<_>>()?;

    let metrics = match all_labels(items)? {
        Some(labels) if !outcomes.is_empty() => {
            let scores = LabeledScores::new(
                outcomes.iter().map(|o| o.row.p_hat_yes).zip(labels).collect(),
            )?;
            Some(MetricSet::compute(&scores, &settings.ece))
        }
        _ => None,
    };

    let mut warnings = Vec::new();
    let unreachable = outcomes.iter().filter(|o| o.selection.m_min_unreachable).count();
    if unreachable > 0 {
        let msg = format!(
            "m_min={} exceeds the pool size for {unreachable} of {} items; the whole pool was selected",
            settings.muse.m_min,
            outcomes.len()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let ties = outcomes.iter().filter(|o| o.row.vote_tie == Some(true)).count();
    if ties > 0 {
        let msg = format!("majority vote tied on {ties} items; predicted label is no");
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let (rows, selections) = outcomes.into_iter().map(|o| (o.row, o.selection)).unzip();
    let report = EvalReport {
        header: settings.header(items.len()),
        rows,
        metrics_pct: metrics.map(|m| m.percent()),
        metrics,
        warnings,
    };
    Ok((report, selections))
}

/// Runs one method over in-memory records.
pub fn evaluate(
    records: Vec<PredictionRecord>,
    labels: &BTreeMap<String, BinaryLabel>,
    settings: &RunSettings,
) -> Result<EvalReport> {
    settings.validate()?;
    let items = prepare(group_items(records, labels)?, settings)?;
    Ok(evaluate_prepared(&items, settings)?.0)
}

fn load(cfg: &RunConfig) -> Result<Vec<ItemInput>> {
    let records = load_records(&cfg.records)?;
    let labels = match &cfg.labels {
        Some(path) => load_labels(path)?,
        None => BTreeMap::new(),
    };
    group_items(records, &labels)
}

pub fn run(cfg: &RunConfig) -> Result<EvalReport> {
    cfg.settings.validate()?;
    let report = evaluate(
        load_records(&cfg.records)?,
        &match &cfg.labels {
            Some(path) => load_labels(path)?,
            None => BTreeMap::new(),
        },
        &cfg.settings,
    )?;
    if let Some(dir) = &cfg.out_dir {
        report.write(dir)?;
    }
    Ok(report)
}

/// Evaluates every `(m_min, eps_tol)` combination over the same pools.
pub fn sweep_items(
    items: Vec<ItemInput>,
    settings: &RunSettings,
    m_min_values: &[usize],
    eps_tol_values: &[f64],
) -> Result<SweepGrid> {
    if m_min_values.is_empty() || eps_tol_values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !settings.method.is_muse() {
        return Err(Error::InvalidConfig("sweep needs a muse_* method".into()));
    }
    settings.validate()?;
    let prepared = prepare(items, settings)?;
    if all_labels(&prepared)?.is_none() {
        return Err(Error::MissingLabels(prepared.iter().map(|i| i.item_id.clone()).collect()));
    }

    let grid: Vec<(usize, f64)> = m_min_values
        .iter()
        .flat_map(|&m| eps_tol_values.iter().map(move |&e| (m, e)))
        .collect();
    let cells = grid
        .into_par_iter()
        .map(|(m_min, eps_tol)| {
            let mut cell_settings = settings.clone();
            cell_settings.muse.m_min = m_min;
            cell_settings.muse.eps_tol = eps_tol;
            let (report, _) = evaluate_prepared(&prepared, &cell_settings)?;
            Ok(SweepCell { m_min, eps_tol, report })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepGrid { cells })
}

pub fn sweep(cfg: &RunConfig, m_min_values: &[usize], eps_tol_values: &[f64]) -> Result<SweepGrid> {
    let grid = sweep_items(load(cfg)?, &cfg.settings, m_min_values, eps_tol_values)?;
    if let Some(dir) = &cfg.out_dir {
        grid.write(dir)?;
    }
    Ok(grid)
}

/// Scores the same MUSE run twice: by `p_hat_yes` and by normalised total
/// uncertainty.
pub fn compare_signals_items(items: Vec<ItemInput>, settings: &RunSettings) -> Result<SignalComparison> {
    if !settings.method.is_muse() {
        return Err(Error::InvalidConfig("compare-signals needs a muse_* method".into()));
    }
    settings.validate()?;
    let prepared = prepare(items, settings)?;
    let (report, selections) = evaluate_prepared(&prepared, settings)?;
    let scored: Vec<(&str, &SelectionResult, Option<bool>)> = prepared
        .iter()
        .zip(&selections)
        .map(|(item, sel)| (item.item_id.as_str(), sel, item.label.map(BinaryLabel::is_yes)))
        .collect();
    let rows = [Signal::PYes, Signal::TotalUncertainty]
        .into_iter()
        .map(|signal| {
            let s = score_with(signal, &scored)?;
            let metrics = MetricSet::compute(&s.scores, &settings.ece);
            Ok(SignalRow {
                signal,
                metrics,
                metrics_pct: metrics.percent(),
                normalizer: s.normalizer,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SignalComparison {
        header: report.header,
        rows,
    })
}

pub fn compare_signals(cfg: &RunConfig) -> Result<SignalComparison> {
    let cmp = compare_signals_items(load(cfg)?, &cfg.settings)?;
    if let Some(dir) = &cfg.out_dir {
        cmp.write(dir)?;
    }
    Ok(cmp)
}

/// Counts reported by `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub records: usize,
    pub items: usize,
    pub models: Vec<String>,
    pub with_raw_outputs: usize,
    pub with_p_yes: usize,
    pub with_likelihoods: usize,
    pub labeled_items: usize,
}

pub fn validate_files(records: &std::path::Path, labels: Option<&std::path::Path>) -> Result<ValidationSummary> {
    let recs = load_records(records)?;
    let labels = match labels {
        Some(p) => load_labels(p)?,
        None => BTreeMap::new(),
    };
    let mut models: Vec<String> = recs.iter().map(|r| r.model_id.clone()).collect();
    models.sort();
    models.dedup();
    let summary_counts = (
        recs.len(),
        recs.iter().filter(|r| r.raw_outputs.is_some()).count(),
        recs.iter().filter(|r| r.p_yes.is_some()).count(),
        recs.iter().filter(|r| r.likelihoods().is_some()).count(),
    );
    let items = group_items(recs, &labels)?;
    for item in &items {
        let mut seen = std::collections::HashSet::new();
        for r in &item.records {
            if !seen.insert(r.model_id.as_str()) {
                return Err(Error::DuplicateSource(format!("{}/{}", item.item_id, r.model_id)));
            }
        }
    }
    Ok(ValidationSummary {
        records: summary_counts.0,
        items: items.len(),
        models,
        with_raw_outputs: summary_counts.1,
        with_p_yes: summary_counts.2,
        with_likelihoods: summary_counts.3,
        labeled_items: items.iter().filter(|i| i.label.is_some()).count(),
    })
}
