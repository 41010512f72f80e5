//! The link-to-system pipeline: SINR vector, MCS, TBS and HARQ history in,
//! transport BLER out. Plus the seeded Bernoulli draw that turns a BLER
//! into a decode outcome.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eesm::{self, HarqHistory, SinrSpectrum};
use crate::error::{Error, Result};
use crate::lut::{self, BlerLut};
use crate::segmentation::{self, BaseGraph};
use crate::tables::{CodeRate, McsEntry, McsKey, McsTableSet};

/// How an IR effective code rate below the nominal one reaches the LUT.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IrEcrMode {
    /// [`IrEcrMode::SinrOffset`] for synthetic LUTs, curve reselection otherwise.
    #[default]
    Auto,
    /// Look up the nominal MCS curve at `SINR + 10 log10(R/ecr)·Qm/2` dB.
    SinrOffset,
    /// Look up the curve of the same-modulation MCS with the smallest
    /// code rate still `>= ecr`.
    CurveReselection,
}

/// Everything the pipeline produced for one decode attempt.
#[derive(Clone, Debug, PartialEq)]
pub struct L2smOutput {
    /// Linear effective SINR.
    pub sinr_eff: f64,
    pub sinr_eff_db: f64,
    pub ecr_eff: CodeRate,
    pub base_graph: BaseGraph,
    pub num_code_blocks: u64,
    /// Code block size `K`.
    pub cbs: u64,
    pub cbler: f64,
    pub tbler: f64,
    /// MCS whose curve was read.
    pub lookup_mcs: McsKey,
    /// SINR shift applied before the lookup (IR offset mode), dB.
    pub sinr_offset_db: f64,
    pub cbs_fallback: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct ErrorModel<'a> {
    tables: &'a McsTableSet,
    lut: &'a BlerLut,
    ir_mode: IrEcrMode,
}

impl<'a> ErrorModel<'a> {
    pub fn new(tables: &'a McsTableSet, lut: &'a BlerLut) -> Self {
        Self {
            tables,
            lut,
            ir_mode: IrEcrMode::Auto,
        }
    }

    pub fn with_ir_mode(mut self, mode: IrEcrMode) -> Self {
        self.ir_mode = mode;
        self
    }

    pub fn tables(&self) -> &'a McsTableSet {
        self.tables
    }

    pub fn lut(&self) -> &'a BlerLut {
        self.lut
    }

    fn resolved_ir_mode(&self) -> IrEcrMode {
        match self.ir_mode {
            IrEcrMode::Auto if self.lut.is_synthetic() => IrEcrMode::SinrOffset,
            IrEcrMode::Auto => IrEcrMode::CurveReselection,
            m => m,
        }
    }

    /// Transport BLER of one attempt.
    ///
    /// `coded_bits` is `C_j` of this attempt (REs × Qm of the allocation);
    /// only HARQ-IR reads it. The history is not modified; see
    /// [`ErrorModel::record_attempt`].
    pub fn compute_tbler(
        &self,
        sinrs: &SinrSpectrum,
        mcs: McsKey,
        tbs: u64,
        history: &HarqHistory,
        coded_bits: u64,
    ) -> Result<L2smOutput> {
        let entry = self.tables.get(mcs)?;
        if let Some(bound) = history.mcs() {
            if bound != mcs {
                return Err(Error::Combining(format!(
                    "process started with {bound}, attempt uses {mcs}"
                )));
            }
        }
        let sinr_eff = history.effective_sinr(sinrs, entry.beta)?;
        let sinr_eff_db = crate::lin_to_db(sinr_eff);

        let ecr_eff = match history {
            HarqHistory::Ir(h) => {
                let info_bits = history.info_bits().unwrap_or(tbs).max(1);
                let mut all: Vec<u64> = h.coded_bits().collect();
                all.push(coded_bits);
                let pooled = eesm::effective_ecr(info_bits, &all)?;
                let first = eesm::effective_ecr(info_bits, &all[..1])?;
                // X is normalised so the first attempt runs at exactly R
                let scaled = entry.ecr * pooled / first;
                eesm::clamp_ecr_ir(scaled, entry, self.tables)?
            }
            _ => entry.ecr,
        };

        // base graph is fixed by the first transmission's nominal rate
        let base_graph = segmentation::select_base_graph(tbs, entry.ecr)?;
        let seg = segmentation::segment(tbs, base_graph)?;

        let (lookup_mcs, sinr_offset_db) = if ecr_eff < entry.ecr {
            match self.resolved_ir_mode() {
                IrEcrMode::CurveReselection => (self.reselect(entry, ecr_eff), 0.0),
                _ => (mcs, lut::ir_sinr_offset_db(entry, ecr_eff)),
            }
        } else {
            (mcs, 0.0)
        };

        let hit = self.lut.lookup_cbler(
            lookup_mcs,
            seg.code_block_size,
            sinr_eff_db + sinr_offset_db,
        )?;
        let tbler = segmentation::transport_bler(hit.cbler, seg.num_code_blocks)?;
        Ok(L2smOutput {
            sinr_eff,
            sinr_eff_db,
            ecr_eff,
            base_graph,
            num_code_blocks: seg.num_code_blocks,
            cbs: seg.code_block_size,
            cbler: hit.cbler,
            tbler,
            lookup_mcs,
            sinr_offset_db,
            cbs_fallback: hit.cbs_fallback,
        })
    }

    fn reselect(&self, entry: &McsEntry, ecr_eff: CodeRate) -> McsKey {
        self.tables
            .table(entry.table_id)
            .iter()
            .filter(|e| e.modulation_order == entry.modulation_order && e.ecr >= ecr_eff)
            .min_by_key(|e| e.ecr)
            .map(McsEntry::key)
            .unwrap_or(entry.key())
    }

    /// Appends an attempt to a HARQ process, binding it to `mcs` on first use.
    pub fn record_attempt(
        &self,
        history: &HarqHistory,
        sinrs: &SinrSpectrum,
        mcs: McsKey,
        coded_bits: u64,
    ) -> Result<HarqHistory> {
        let entry = self.tables.get(mcs)?;
        let mut next = eesm::update_history(history, sinrs, entry.beta, coded_bits)?;
        next.bind_mcs(mcs)?;
        Ok(next)
    }
}

/// Random source for decode draws and channel generation: ChaCha with 8
/// rounds (`rand_chacha` 0.9). The 256-bit key comes from
/// `SeedableRng::seed_from_u64(seed)` and `stream` selects one of 2^64
/// independent streams for the same key.
pub type SimRng = ChaCha8Rng;

pub fn sim_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `true` (decoded) with probability `1 - tbler`. Consumes one `f64` draw.
pub fn draw_decode<R: Rng + ?Sized>(tbler: f64, rng: &mut R) -> bool {
    debug_assert!((0.0..=1.0).contains(&tbler));
    let u: f64 = rng.random();
    u >= tbler
}
