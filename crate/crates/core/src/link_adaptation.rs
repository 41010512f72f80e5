//! MCS selection at the UE and the CQI it reports.
//!
//! Two policies: the error-model policy picks the highest MCS whose
//! predicted first-transmission TBLER meets a target over the CSI reference
//! resource; the Shannon policy picks the highest MCS whose spectral
//! efficiency is strictly below a gap-adjusted Shannon rate.

use serde::{Deserialize, Serialize};

use crate::eesm::{HarqHistory, SinrSpectrum};
use crate::error::{Error, Result};
use crate::error_model::ErrorModel;
use crate::tables::{McsEntry, McsKey, McsTableSet, TableId};

/// The SNR gap `-ln(5e-5) / 0.5`.
pub fn shannon_gap() -> f64 {
    -(5e-5f64).ln() / 0.5
}

/// An RB × OFDM-symbol allocation. One of the symbols carries DMRS.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub n_rbs: u32,
    /// OFDM symbols including the single DMRS symbol.
    pub n_symbols: u32,
}

impl Allocation {
    pub fn new(n_rbs: u32, n_symbols: u32) -> Result<Self> {
        if n_rbs == 0 || n_symbols < 2 {
            return Err(Error::Config(format!(
                "allocation needs at least 1 RB and 2 symbols, got {n_rbs} RBs x {n_symbols} symbols"
            )));
        }
        Ok(Self { n_rbs, n_symbols })
    }

    /// Data resource elements: `12 · n_rbs · (n_symbols - 1)`.
    pub fn data_res(&self) -> u64 {
        12 * u64::from(self.n_rbs) * u64::from(self.n_symbols.saturating_sub(1))
    }

    /// Coded bits the allocation carries at modulation order `Qm`.
    pub fn coded_bits(&self, mcs: &McsEntry) -> u64 {
        self.data_res() * u64::from(mcs.modulation_order)
    }
}

/// `max(24, floor8(N_RE · Qm · R))`, computed in exact integer arithmetic.
pub fn tbs_calculate(alloc: Allocation, mcs: &McsEntry) -> Result<u64> {
    let alloc = Allocation::new(alloc.n_rbs, alloc.n_symbols)?;
    let raw = alloc.coded_bits(mcs) * mcs.ecr.numer() / mcs.ecr.denom();
    Ok((raw / 8 * 8).max(24))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    ErrorModel,
    Shannon,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkAdaptResult {
    pub table_id: TableId,
    pub mcs_index: u8,
    /// Error-model policy: predicted TBLER of the selected MCS.
    pub predicted_tbler: Option<f64>,
    /// Shannon policy: mean per-RB gap-adjusted spectral efficiency.
    pub achievable_se: Option<f64>,
    pub cqi: u8,
    pub policy: Policy,
    /// No MCS qualified; `mcs_index` is the lowest one.
    pub out_of_range: bool,
}

impl LinkAdaptResult {
    pub fn mcs(&self) -> McsKey {
        McsKey::new(self.table_id, self.mcs_index)
    }
}

/// How the error-model policy walks the MCS indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    /// Descend from the top index and stop at the first qualifying one.
    /// Correct when TBLER is monotone in the index.
    #[default]
    EarlyExit,
    /// Evaluate every index and take the highest qualifying one.
    Strict,
}

pub fn select_mcs_error_model(
    sinrs: &SinrSpectrum,
    table_id: TableId,
    target_tbler: f64,
    model: &ErrorModel<'_>,
    csi_ref: Allocation,
    scan: ScanMode,
) -> Result<LinkAdaptResult> {
    if !(target_tbler > 0.0 && target_tbler < 1.0) {
        return Err(Error::InvalidInput(format!(
            "target TBLER {target_tbler} outside (0, 1)"
        )));
    }
    let tables = model.tables();
    let mut best: Option<(u8, f64)> = None;
    for index in (0..=table_id.max_index()).rev() {
        let entry = tables.mcs_lookup(table_id, index)?;
        let tbs = tbs_calculate(csi_ref, entry)?;
        let out = model.compute_tbler(
            sinrs,
            entry.key(),
            tbs,
            &HarqHistory::None,
            csi_ref.coded_bits(entry),
        )?;
        if out.tbler <= target_tbler {
            if best.is_none() {
                best = Some((index, out.tbler));
            }
            if scan == ScanMode::EarlyExit {
                break;
            }
        }
    }
    let (mcs_index, predicted, out_of_range) = match best {
        Some((i, t)) => (i, Some(t), false),
        None => {
            let entry = tables.mcs_lookup(table_id, 0)?;
            let out = model.compute_tbler(
                sinrs,
                entry.key(),
                tbs_calculate(csi_ref, entry)?,
                &HarqHistory::None,
                csi_ref.coded_bits(entry),
            )?;
            (0, Some(out.tbler), true)
        }
    };
    finish(
        tables,
        table_id,
        mcs_index,
        predicted,
        None,
        Policy::ErrorModel,
        out_of_range,
    )
}

pub fn select_mcs_shannon(
    sinrs: &SinrSpectrum,
    table_id: TableId,
    tables: &McsTableSet,
) -> Result<LinkAdaptResult> {
    if sinrs.is_empty() {
        return Err(Error::InvalidInput("empty SINR spectrum".into()));
    }
    let gap = shannon_gap();
    let se = sinrs
        .values()
        .iter()
        .map(|s| (s / gap).ln_1p())
        .sum::<f64>()
        / std::f64::consts::LN_2
        / sinrs.len() as f64;
    let pick = tables
        .table(table_id)
        .iter()
        .rev()
        .find(|e| e.spectral_efficiency < se)
        .map(|e| e.index);
    let (index, out_of_range) = match pick {
        Some(i) => (i, false),
        None => (0, true),
    };
    finish(
        tables,
        table_id,
        index,
        None,
        Some(se),
        Policy::Shannon,
        out_of_range,
    )
}

fn finish(
    tables: &McsTableSet,
    table_id: TableId,
    mcs_index: u8,
    predicted_tbler: Option<f64>,
    achievable_se: Option<f64>,
    policy: Policy,
    out_of_range: bool,
) -> Result<LinkAdaptResult> {
    let mut result = LinkAdaptResult {
        table_id,
        mcs_index,
        predicted_tbler,
        achievable_se,
        cqi: 0,
        policy,
        out_of_range,
    };
    result.cqi = report_cqi(&result, tables)?;
    Ok(result)
}

/// CQI of the selected MCS; 0 when nothing qualified.
pub fn report_cqi(result: &LinkAdaptResult, tables: &McsTableSet) -> Result<u8> {
    if result.out_of_range {
        return Ok(0);
    }
    tables.quantize_cqi(result.table_id, result.mcs_index)
}
