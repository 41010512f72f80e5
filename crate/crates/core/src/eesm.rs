//! Exponential effective SINR mapping.
//!
//! Single transmission:
//!
//! ```text
//! SINR_eff = -β ln( 1/|υ| Σ_n exp(-SINR_n / β) )
//! ```
//!
//! HARQ-CC sums the per-RB SINRs of all attempts before the mapping. HARQ-IR
//! pools the exponentials of every RB of every attempt and lowers the
//! effective code rate to `X / Σ C_j`.
//!
//! Everything here is linear SINR. The exponential average is evaluated
//! relative to the smallest input so that large SINRs with small β do not
//! underflow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::{CodeRate, McsEntry, McsKey, McsTableSet};

/// Per-RB linear SINRs of one transmission attempt.
#[derive(Clone, Debug, PartialEq)]
pub struct SinrSpectrum {
    values: Vec<f64>,
    rb_ids: Vec<u32>,
}

impl SinrSpectrum {
    /// RB ids default to `0..n`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let rb_ids = (0..values.len() as u32).collect();
        Self::with_rb_ids(values, rb_ids)
    }

    pub fn with_rb_ids(values: Vec<f64>, rb_ids: Vec<u32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty SINR spectrum".into()));
        }
        if values.len() != rb_ids.len() {
            return Err(Error::InvalidInput(format!(
                "{} SINR values for {} RB ids",
                values.len(),
                rb_ids.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "SINR values must be finite and non-negative, got {bad}"
            )));
        }
        Ok(Self { values, rb_ids })
    }

    pub fn from_db(values_db: &[f64]) -> Result<Self> {
        Self::new(values_db.iter().map(|&d| crate::db_to_lin(d)).collect())
    }

    /// `n_rbs` RBs all at `value`.
    pub fn flat(value: f64, n_rbs: usize) -> Result<Self> {
        Self::new(vec![value; n_rbs])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rb_ids(&self) -> &[u32] {
        &self.rb_ids
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Multiplies every RB by `factor` (a linear gain).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::with_rb_ids(
            self.values.iter().map(|v| v * factor).collect(),
            self.rb_ids.clone(),
        )
    }

    pub fn to_db(&self) -> Vec<f64> {
        self.values.iter().map(|&v| crate::lin_to_db(v)).collect()
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "beta must be positive and finite, got {beta}"
        )))
    }
}

/// `-β ln(mean(exp(-x/β)))` over a non-empty slice of finite values.
fn eesm_raw(values: &[f64], beta: f64) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // mean(exp(-(x-lo)/β)) - 1, kept in expm1 form so large β stays accurate
    let excess = values
        .iter()
        .map(|&x| (-(x - lo) / beta).exp_m1())
        .sum::<f64>()
        / values.len() as f64;
    let eff = lo - beta * excess.ln_1p();
    eff.clamp(lo, hi)
}

/// Effective SINR of a single transmission.
pub fn effective_sinr(sinrs: &SinrSpectrum, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(eesm_raw(sinrs.values(), beta))
}

/// Which combining a HARQ process uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HarqMethod {
    /// Every attempt decoded on its own.
    Off,
    /// Chase combining.
    Cc,
    /// Incremental redundancy.
    Ir,
}

/// Chase-combining state: per-RB SINR sums over the attempts so far.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CcHistory {
    accumulated: Vec<f64>,
    attempts: u32,
    info_bits: u64,
    beta: Option<f64>,
    mcs: Option<McsKey>,
}

impl CcHistory {
    pub fn new(info_bits: u64) -> Self {
        Self {
            info_bits,
            ..Default::default()
        }
    }

    pub fn accumulated(&self) -> &[f64] {
        &self.accumulated
    }

    pub fn attempts(&self) -> u32 {
        self.attempts
    }

    fn combined(&self, current: &SinrSpectrum) -> Result<Vec<f64>> {
        if self.attempts == 0 {
            return Ok(current.values().to_vec());
        }
        if current.len() != self.accumulated.len() {
            return Err(Error::CombiningShape {
                expected: self.accumulated.len(),
                got: current.len(),
            });
        }
        Ok(self
            .accumulated
            .iter()
            .zip(current.values())
            .map(|(a, c)| a + c)
            .collect())
    }
}

/// One incremental-redundancy attempt as remembered by the history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IrAttempt {
    /// Linear effective SINR of that attempt alone.
    pub sinr_eff: f64,
    pub coded_bits: u64,
}

/// Incremental-redundancy state.
///
/// Only the per-attempt effective SINR is kept: with β fixed for the
/// process, `exp(-sinr_eff_j/β)` equals the RB average of attempt `j`, so
/// pooling the stored values reproduces the full double sum exactly.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IrHistory {
    attempts: Vec<IrAttempt>,
    rb_count: usize,
    info_bits: u64,
    beta: Option<f64>,
    mcs: Option<McsKey>,
    raw: Option<Vec<Vec<f64>>>,
}

impl IrHistory {
    pub fn new(info_bits: u64) -> Self {
        Self {
            info_bits,
            ..Default::default()
        }
    }

    /// Also keeps every attempt's per-RB SINRs. Debug aid for checking the
    /// compact form against a direct evaluation.
    pub fn with_raw_retention(mut self) -> Self {
        self.raw = Some(Vec::new());
        self
    }

    pub fn records(&self) -> &[IrAttempt] {
        &self.attempts
    }

    pub fn raw_attempts(&self) -> Option<&[Vec<f64>]> {
        self.raw.as_deref()
    }

    pub fn rb_count(&self) -> usize {
        self.rb_count
    }

    pub fn coded_bits(&self) -> impl Iterator<Item = u64> + '_ {
        self.attempts.iter().map(|a| a.coded_bits)
    }

    fn check_shape(&self, current: &SinrSpectrum) -> Result<()> {
        if !self.attempts.is_empty() && current.len() != self.rb_count {
            return Err(Error::CombiningShape {
                expected: self.rb_count,
                got: current.len(),
            });
        }
        Ok(())
    }
}

/// HARQ process state, by combining method.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum HarqHistory {
    #[default]
    None,
    Cc(CcHistory),
    Ir(IrHistory),
}

impl HarqHistory {
    /// An empty history for `method`. `info_bits` is X, the payload of the
    /// transport block.
    pub fn new(method: HarqMethod, info_bits: u64) -> Self {
        match method {
            HarqMethod::Off => HarqHistory::None,
            HarqMethod::Cc => HarqHistory::Cc(CcHistory::new(info_bits)),
            HarqMethod::Ir => HarqHistory::Ir(IrHistory::new(info_bits)),
        }
    }

    pub fn method(&self) -> HarqMethod {
        match self {
            HarqHistory::None => HarqMethod::Off,
            HarqHistory::Cc(_) => HarqMethod::Cc,
            HarqHistory::Ir(_) => HarqMethod::Ir,
        }
    }

    /// Completed attempts stored in the history.
    pub fn attempts(&self) -> u32 {
        match self {
            HarqHistory::None => 0,
            HarqHistory::Cc(h) => h.attempts,
            HarqHistory::Ir(h) => h.attempts.len() as u32,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.attempts() == 0
    }

    pub fn info_bits(&self) -> Option<u64> {
        match self {
            HarqHistory::None => None,
            HarqHistory::Cc(h) => Some(h.info_bits),
            HarqHistory::Ir(h) => Some(h.info_bits),
        }
    }

    /// MCS the process was started with, once bound.
    pub fn mcs(&self) -> Option<McsKey> {
        match self {
            HarqHistory::None => None,
            HarqHistory::Cc(h) => h.mcs,
            HarqHistory::Ir(h) => h.mcs,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self {
            HarqHistory::None => None,
            HarqHistory::Cc(h) => h.beta,
            HarqHistory::Ir(h) => h.beta,
        }
    }

    /// Binds the process to an MCS; a different MCS than the bound one is
    /// rejected.
    pub fn bind_mcs(&mut self, key: McsKey) -> Result<()> {
        let slot = match self {
            HarqHistory::None => return Ok(()),
            HarqHistory::Cc(h) => &mut h.mcs,
            HarqHistory::Ir(h) => &mut h.mcs,
        };
        match slot {
            Some(bound) if *bound != key => Err(Error::Combining(format!(
                "process started with {bound}, attempt uses {key}"
            ))),
            _ => {
                *slot = Some(key);
                Ok(())
            }
        }
    }

    /// Effective SINR of `current` combined with the stored attempts.
    pub fn effective_sinr(&self, current: &SinrSpectrum, beta: f64) -> Result<f64> {
        match self {
            HarqHistory::None => effective_sinr(current, beta),
            HarqHistory::Cc(h) => effective_sinr_cc(h, current, beta),
            HarqHistory::Ir(h) => effective_sinr_ir(h, current, beta),
        }
    }
}

fn check_frozen_beta(stored: Option<f64>, beta: f64) -> Result<()> {
    match stored {
        Some(b) if b != beta => Err(Error::Combining(format!(
            "process uses beta {b}, attempt uses {beta}"
        ))),
        _ => Ok(()),
    }
}

/// HARQ-CC effective SINR over the stored sums plus `current`.
pub fn effective_sinr_cc(history: &CcHistory, current: &SinrSpectrum, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    check_frozen_beta(history.beta, beta)?;
    Ok(eesm_raw(&history.combined(current)?, beta))
}

/// HARQ-IR effective SINR over the stored attempts plus `current`.
pub fn effective_sinr_ir(history: &IrHistory, current: &SinrSpectrum, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    check_frozen_beta(history.beta, beta)?;
    history.check_shape(current)?;
    let this = eesm_raw(current.values(), beta);
    if history.attempts.is_empty() {
        return Ok(this);
    }
    // each stored effective SINR stands in for its attempt's RB average
    let pooled: Vec<f64> = history
        .attempts
        .iter()
        .map(|a| a.sinr_eff)
        .chain(std::iter::once(this))
        .collect();
    Ok(eesm_raw(&pooled, beta))
}

/// `X / Σ C_j`.
pub fn effective_ecr(info_bits: u64, coded_bits: &[u64]) -> Result<CodeRate> {
    if info_bits == 0 {
        return Err(Error::InvalidInput("info bits must be positive".into()));
    }
    if coded_bits.is_empty() || coded_bits.contains(&0) {
        return Err(Error::InvalidInput(
            "coded bits must be a non-empty list of positive counts".into(),
        ));
    }
    Ok(CodeRate::new(info_bits, coded_bits.iter().sum()))
}

/// Floors an IR effective code rate at the lowest rate of the MCSs sharing
/// `mcs`'s modulation order.
pub fn clamp_ecr_ir(ecr_eff: CodeRate, mcs: &McsEntry, tables: &McsTableSet) -> Result<CodeRate> {
    if *ecr_eff.numer() == 0 {
        return Err(Error::InvalidInput(
            "effective code rate must be positive".into(),
        ));
    }
    let floor = tables.min_ecr_same_modulation(mcs.table_id, mcs.index)?;
    Ok(ecr_eff.max(floor))
}

/// Returns the history extended by one attempt. The input is untouched.
///
/// CC adds `current` to the per-RB sums; IR appends the attempt's own
/// effective SINR and coded-bit count. The first update freezes β.
pub fn update_history(
    history: &HarqHistory,
    current: &SinrSpectrum,
    beta: f64,
    coded_bits: u64,
) -> Result<HarqHistory> {
    check_beta(beta)?;
    match history {
        HarqHistory::None => Ok(HarqHistory::None),
        HarqHistory::Cc(h) => {
            check_frozen_beta(h.beta, beta)?;
            let accumulated = h.combined(current)?;
            Ok(HarqHistory::Cc(CcHistory {
                accumulated,
                attempts: h.attempts + 1,
                info_bits: h.info_bits,
                beta: Some(beta),
                mcs: h.mcs,
            }))
        }
        HarqHistory::Ir(h) => {
            check_frozen_beta(h.beta, beta)?;
            h.check_shape(current)?;
            if coded_bits == 0 {
                return Err(Error::InvalidInput("coded bits must be positive".into()));
            }
            let mut next = h.clone();
            next.attempts.push(IrAttempt {
                sinr_eff: eesm_raw(current.values(), beta),
                coded_bits,
            });
            next.rb_count = current.len();
            next.beta = Some(beta);
            if let Some(raw) = next.raw.as_mut() {
                raw.push(current.values().to_vec());
            }
            Ok(HarqHistory::Ir(next))
        }
    }
}
