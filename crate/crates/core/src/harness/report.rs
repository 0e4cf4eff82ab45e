// Report types and their JSON/CSV renderings.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunSettings;
use crate::error::Result;
use crate::harness::io::write_json;
use crate::metrics::{format_pct, MetricSet, PercentMetrics, Signal};
use crate::record::BinaryLabel;

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub tool: String,
    pub version: String,
    pub log_base: u32,
    /// What one pool member stands for (models, or model bootstrap replicates).
    pub pool_basis: String,
    pub settings: RunSettings,
    pub n_items: usize,
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRow {
    pub item_id: String,
    pub label: Option<BinaryLabel>,
    pub p_hat_yes: f64,
    pub u_epis: f64,
    pub u_alea: f64,
    pub u_total: f64,
    pub pool_size: usize,
    pub chosen_size: usize,
    pub chosen: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vote_tie: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub header: ReportHeader,
    pub rows: Vec<ItemRow>,
    /// Metrics in `[0, 1]`; absent when the inputs carry no labels.
    pub metrics: Option<MetricSet>,
    /// The same metrics ×100, as printed in tables.
    pub metrics_pct: Option<PercentMetrics>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    item_id: &'a str,
    label: String,
    p_hat_yes: f64,
    u_epis: f64,
    u_alea: f64,
    u_total: f64,
    pool_size: usize,
    chosen_size: usize,
    chosen: String,
}

impl EvalReport {
    pub fn items_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(CsvRow {
                item_id: &row.item_id,
                label: row.label.map(|l| l.to_string()).unwrap_or_default(),
                p_hat_yes: row.p_hat_yes,
                u_epis: row.u_epis,
                u_alea: row.u_alea,
                u_total: row.u_total,
                pool_size: row.pool_size,
                chosen_size: row.chosen_size,
                chosen: row.chosen.join(";"),
            })?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    /// Writes `report.json` and `items.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("report.json"), self)?;
        fs::write(dir.join("items.csv"), self.items_csv()?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub m_min: usize,
    pub eps_tol: f64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    /// `m_min,eps_tol,auroc,ece,brier` with metrics ×100.
    pub fn grid_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["m_min", "eps_tol", "auroc", "ece", "brier"])?;
        for cell in &self.cells {
            let pct = cell.report.metrics.map(|m| m.percent());
            let get = |f: fn(&PercentMetrics) -> &String| pct.as_ref().map_or("n/a".to_string(), |p| f(p).clone());
            w.write_record([
                cell.m_min.to_string(),
                cell.eps_tol.to_string(),
                get(|p| &p.auroc),
                get(|p| &p.ece),
                get(|p| &p.brier),
            ])?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn cell_file_name(m_min: usize, eps_tol: f64) -> String {
        format!("m{m_min}_eps{eps_tol}.json")
    }

    /// Writes `grid.csv` plus one full report per cell under `cells/`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let cells = dir.join("cells");
        fs::create_dir_all(&cells)?;
        fs::write(dir.join("grid.csv"), self.grid_csv()?)?;
        for cell in &self.cells {
            write_json(&cells.join(Self::cell_file_name(cell.m_min, cell.eps_tol)), &cell.report)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRow {
    pub signal: Signal,
    pub metrics: MetricSet,
    pub metrics_pct: PercentMetrics,
    pub normalizer: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalComparison {
    pub header: ReportHeader,
    pub rows: Vec<SignalRow>,
}

impl SignalComparison {
    pub fn row(&self, signal: Signal) -> &SignalRow {
        self.rows.iter().find(|r| r.signal == signal).expect("both signals present")
    }

    pub fn signals_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["signal", "auroc", "ece", "brier", "normalizer"])?;
        for row in &self.rows {
            let name = match row.signal {
                Signal::PYes => "p_yes",
                Signal::TotalUncertainty => "total_uncertainty",
            };
            w.write_record([
                name.to_string(),
                row.metrics_pct.auroc.clone(),
                row.metrics_pct.ece.clone(),
                row.metrics_pct.brier.clone(),
                row.normalizer.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("signals.json"), self)?;
        fs::write(dir.join("signals.csv"), self.signals_csv()?)?;
        Ok(())
    }
}

/// One-line human summary of a metric set.
pub fn summary_line(m: Option<&MetricSet>) -> String {
    match m {
        Some(m) => format!(
            "AUROC {}  ECE {}  Brier {}",
            format_pct(m.auroc),
            format_pct(Some(m.ece)),
            format_pct(Some(m.brier))
        ),
        None => "no labels; metrics skipped".to_string(),
    }
}
