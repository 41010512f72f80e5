use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eesm::HarqMethod;
use crate::error::{Error, Result};
use crate::link_adaptation::Policy;
use crate::tables::TableId;

use super::config::{McsSelection, SimConfig};
use super::run::{PacketRecord, SimMetrics};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(Error::Config(format!(
                "unknown output format `{s}` (csv or json)"
            ))),
        }
    }
}

/// One line of a results table: the swept configuration fields followed
/// by the metrics. Column order is the field order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub seed: u64,
    pub mcs_selection: McsSelection,
    pub table: TableId,
    /// Fixed mode only.
    pub mcs_index: Option<u8>,
    /// Adaptive mode only.
    pub policy: Option<Policy>,
    pub harq: HarqMethod,
    pub max_retx: u32,
    pub distance_m: Option<f64>,
    pub mean_snr_db: f64,
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub packets_lost: u64,
    pub attempts: u64,
    pub phy_failures: u64,
    pub app_loss_pct: f64,
    pub phy_loss_pct: f64,
    pub delay_mean_ms: Option<f64>,
    pub delay_p50_ms: Option<f64>,
    pub delay_p95_ms: Option<f64>,
    pub delay_max_ms: Option<f64>,
    pub mcs_mode: u8,
}

impl ResultRow {
    pub fn new(cfg: &SimConfig, m: &SimMetrics) -> Self {
        let fixed = cfg.mcs.mode == McsSelection::Fixed;
        Self {
            seed: cfg.seed,
            mcs_selection: cfg.mcs.mode,
            table: cfg.mcs.table,
            mcs_index: fixed.then_some(cfg.mcs.index),
            policy: (!fixed).then_some(cfg.mcs.policy),
            harq: cfg.harq,
            max_retx: cfg.max_retx,
            distance_m: cfg.distance_m,
            mean_snr_db: cfg.snr_db(),
            packets_sent: m.packets_sent,
            packets_delivered: m.packets_delivered,
            packets_lost: m.packets_lost,
            attempts: m.attempts,
            phy_failures: m.phy_failures,
            app_loss_pct: m.app_loss_pct,
            phy_loss_pct: m.phy_loss_pct,
            delay_mean_ms: m.delay_mean_ms,
            delay_p50_ms: m.delay_p50_ms,
            delay_p95_ms: m.delay_p95_ms,
            delay_max_ms: m.delay_max_ms,
            mcs_mode: m.mcs_mode,
        }
    }
}

pub fn write_rows<W: Write>(rows: &[ResultRow], format: OutputFormat, out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Writes one row per run to `path`.
pub fn emit_results(
    rows: &[ResultRow],
    format: OutputFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    write_rows(rows, format, std::io::BufWriter::new(file))
}

pub fn read_rows(path: impl AsRef<Path>, format: OutputFormat) -> Result<Vec<ResultRow>> {
    match format {
        OutputFormat::Csv => csv::Reader::from_path(path)?
            .deserialize()
            .map(|r| r.map_err(Error::from))
            .collect(),
        OutputFormat::Json => Ok(serde_json::from_str(&crate::error::read_file(
            path.as_ref(),
        )?)?),
    }
}

/// Per-packet records of one run, as CSV.
pub fn emit_trace(trace: &[PacketRecord], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in trace {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
