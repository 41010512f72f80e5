use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eesm::{HarqHistory, SinrSpectrum};
use crate::error::{Error, Result};
use crate::error_model::{draw_decode, sim_rng, ErrorModel};
use crate::link_adaptation::{select_mcs_shannon, tbs_calculate, Allocation, Policy};
use crate::lut::BlerLut;
use crate::tables::{McsKey, McsTableSet};

use super::channel::{channel_step, retx_channel};
use super::config::{McsSelection, SimConfig};

// independent PRNG streams under one seed
const STREAM_CHANNEL: u64 = 0;
const STREAM_RETX_CHANNEL: u64 = 1;
const STREAM_DECODE: u64 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub packet: u64,
    pub mcs_index: u8,
    pub cqi: Option<u8>,
    pub tbs: u64,
    pub n_rbs: u32,
    pub first_tbler: f64,
    pub attempts: u32,
    pub delivered: bool,
    pub delay_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub packets_lost: u64,
    pub attempts: u64,
    pub phy_failures: u64,
    /// Packets that ran out of retransmissions, percent of packets sent.
    pub app_loss_pct: f64,
    /// Failed attempts, percent of attempts.
    pub phy_loss_pct: f64,
    /// Delay statistics over delivered packets; unset when none arrived.
    pub delay_mean_ms: Option<f64>,
    pub delay_p50_ms: Option<f64>,
    pub delay_p95_ms: Option<f64>,
    pub delay_max_ms: Option<f64>,
    /// Most frequent first-transmission MCS; ties go to the lower index.
    pub mcs_mode: u8,
    pub trace: Vec<PacketRecord>,
}

/// The whole band goes to the single UE; the packet must fit.
fn allocation_for(
    cfg: &SimConfig,
    tables: &McsTableSet,
    mcs: McsKey,
    bits: u64,
) -> Result<(Allocation, u64)> {
    let alloc = cfg.allocation();
    let tbs = tbs_calculate(alloc, tables.get(mcs)?)?;
    if tbs < bits {
        return Err(Error::Config(format!(
            "a {bits}-bit packet does not fit in {} RBs at {mcs} (TBS {tbs})",
            cfg.n_rbs
        )));
    }
    Ok((alloc, tbs))
}

fn select_mcs(
    cfg: &SimConfig,
    model: &ErrorModel<'_>,
    full_band: &SinrSpectrum,
) -> Result<(McsKey, Option<u8>)> {
    let table = cfg.mcs.table;
    let tables = model.tables();
    match (cfg.mcs.mode, cfg.mcs.policy) {
        (McsSelection::Fixed, _) => Ok((McsKey::new(table, cfg.mcs.index), None)),
        (McsSelection::Adaptive, Policy::ErrorModel) => {
            // TBLER is not monotone in MCS on faded spectra (a 16QAM row can
            // beat the QPSK rows below it), so test the MCS the gNB will
            // actually schedule for each CQI, highest first
            let alloc = cfg.allocation();
            for cqi in (1..=15).rev() {
                let Some(index) = tables.mcs_for_cqi(table, cqi) else {
                    continue;
                };
                let entry = tables.mcs_lookup(table, index)?;
                let out = model.compute_tbler(
                    full_band,
                    entry.key(),
                    tbs_calculate(alloc, entry)?,
                    &HarqHistory::None,
                    alloc.coded_bits(entry),
                )?;
                if out.tbler <= cfg.mcs.target_tbler {
                    return Ok((entry.key(), Some(cqi)));
                }
            }
            Ok((McsKey::new(table, 0), Some(0)))
        }
        (McsSelection::Adaptive, Policy::Shannon) => {
            let result = select_mcs_shannon(full_band, table, tables)?;
            // the gNB only sees the CQI
            let index = tables.mcs_for_cqi(table, result.cqi).unwrap_or(0);
            Ok((McsKey::new(table, index), Some(result.cqi)))
        }
    }
}

fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Runs one configuration. Sequential and bit-reproducible for a given
/// config and seed.
pub fn run_simulation(cfg: &SimConfig) -> Result<SimMetrics> {
    cfg.validate()?;
    let owned;
    let lut = match &cfg.lut_path {
        Some(p) => {
            owned = BlerLut::load(p)?;
            &owned
        }
        None => BlerLut::default_synthetic(),
    };
    let tables = McsTableSet::standard();
    let model = ErrorModel::new(tables, lut).with_ir_mode(cfg.ir_mode);

    let mut ch_rng = sim_rng(cfg.seed, STREAM_CHANNEL);
    let mut retx_rng = sim_rng(cfg.seed, STREAM_RETX_CHANNEL);
    let mut dec_rng = sim_rng(cfg.seed, STREAM_DECODE);
    let bits = u64::from(cfg.traffic.packet_bytes) * 8;
    let attempt_ms = cfg.latencies.attempt_ms();

    let mut state = None;
    let mut trace = Vec::new();
    let mut previous_lost = false;
    for packet in 0..cfg.traffic.packet_count() {
        let (full_band, next) = channel_step(state.take(), cfg, &mut ch_rng)?;
        let (mcs, cqi) = select_mcs(cfg, &model, &full_band)?;
        let (alloc, tbs) = allocation_for(cfg, tables, mcs, bits)?;
        let coded_bits = alloc.coded_bits(tables.get(mcs)?);

        let mut history = HarqHistory::new(cfg.harq, tbs);
        let mut attempts = 0;
        let mut first_tbler = f64::NAN;
        let mut delivered = false;
        while attempts <= cfg.max_retx {
            let sinrs = if attempts == 0 {
                full_band.clone()
            } else {
                retx_channel(&next, cfg, &mut retx_rng)?
            };
            let out = model.compute_tbler(&sinrs, mcs, tbs, &history, coded_bits)?;
            if attempts == 0 {
                first_tbler = out.tbler;
            }
            attempts += 1;
            if draw_decode(out.tbler, &mut dec_rng) {
                delivered = true;
                break;
            }
            if !matches!(history, HarqHistory::None) {
                history = model.record_attempt(&history, &sinrs, mcs, coded_bits)?;
            }
        }
        let delay_ms = delivered.then(|| {
            let reorder = if previous_lost {
                cfg.latencies.reorder_ms
            } else {
                0.0
            };
            f64::from(attempts) * attempt_ms + reorder
        });
        previous_lost = !delivered;
        trace.push(PacketRecord {
            packet,
            mcs_index: mcs.index,
            cqi,
            tbs,
            n_rbs: alloc.n_rbs,
            first_tbler,
            attempts,
            delivered,
            delay_ms,
        });
        state = Some(next);
    }
    Ok(summarize(trace))
}

fn summarize(trace: Vec<PacketRecord>) -> SimMetrics {
    let sent = trace.len() as u64;
    let delivered = trace.iter().filter(|p| p.delivered).count() as u64;
    let attempts: u64 = trace.iter().map(|p| u64::from(p.attempts)).sum();
    let failures: u64 = trace
        .iter()
        .map(|p| u64::from(p.attempts) - u64::from(p.delivered))
        .sum();
    let mut delays: Vec<f64> = trace.iter().filter_map(|p| p.delay_ms).collect();
    delays.sort_by(f64::total_cmp);
    let mut counts: BTreeMap<u8, u64> = BTreeMap::new();
    for p in &trace {
        *counts.entry(p.mcs_index).or_default() += 1;
    }
    // BTreeMap iterates ascending; keep the first maximum
    let mcs_mode = counts
        .iter()
        .fold(
            (0u8, 0u64),
            |best, (&m, &c)| if c > best.1 { (m, c) } else { best },
        )
        .0;
    let pct = |num: u64, den: u64| {
        if den == 0 {
            0.0
        } else {
            100.0 * num as f64 / den as f64
        }
    };
    SimMetrics {
        packets_sent: sent,
        packets_delivered: delivered,
        packets_lost: sent - delivered,
        attempts,
        phy_failures: failures,
        app_loss_pct: pct(sent - delivered, sent),
        phy_loss_pct: pct(failures, attempts),
        delay_mean_ms: (!delays.is_empty())
            .then(|| delays.iter().sum::<f64>() / delays.len() as f64),
        delay_p50_ms: percentile(&delays, 50.0),
        delay_p95_ms: percentile(&delays, 95.0),
        delay_max_ms: delays.last().copied(),
        mcs_mode,
        trace,
    }
}

/// Runs configurations in parallel; results come back in input order.
pub fn run_sweep(configs: &[SimConfig]) -> Vec<Result<SimMetrics>> {
    configs.par_iter().map(run_simulation).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eesm::HarqMethod;

    fn quick(snr: f64) -> SimConfig {
        let mut c = SimConfig::default()
            .with_override("mean_snr_db", &snr.to_string())
            .unwrap();
        c.traffic.duration_s = 10.0;
        c
    }

    #[test]
    fn saturated_channel_is_lossless() {
        let mut c = quick(60.0);
        c.mcs.index = 2;
        let m = run_simulation(&c).unwrap();
        assert_eq!((m.app_loss_pct, m.phy_loss_pct), (0.0, 0.0));
        let base = c.latencies.attempt_ms();
        assert!(m.trace.iter().all(|p| p.delay_ms == Some(base)));
        assert!((base - 0.475).abs() < 1e-12);
    }

    #[test]
    fn dead_channel_loses_everything() {
        let mut c = quick(-20.0);
        c.mcs.index = 27;
        let m = run_simulation(&c).unwrap();
        assert_eq!((m.app_loss_pct, m.phy_loss_pct), (100.0, 100.0));
        assert_eq!(m.delay_mean_ms, None);
        assert_eq!(m.attempts, m.packets_sent * 4);
    }

    #[test]
    fn conservation_and_loss_ordering() {
        for harq in [HarqMethod::Off, HarqMethod::Cc, HarqMethod::Ir] {
            let mut c = quick(8.0);
            c.harq = harq;
            let m = run_simulation(&c).unwrap();
            assert_eq!(m.packets_sent, m.packets_delivered + m.packets_lost);
            assert!(m.app_loss_pct <= m.phy_loss_pct);
        }
    }

    #[test]
    fn packet_must_fit() {
        let c = SimConfig::default();
        let t = McsTableSet::standard();
        let key = McsKey::new(c.mcs.table, 13);
        let (a, tbs) = allocation_for(&c, t, key, 800).unwrap();
        assert_eq!(a.n_rbs, c.n_rbs);
        assert_eq!(tbs, tbs_calculate(a, t.get(key).unwrap()).unwrap());
        assert!(allocation_for(&c, t, key, 10_000_000).is_err());
    }

    #[test]
    fn percentiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 50.0), Some(2.0));
        assert_eq!(percentile(&v, 95.0), Some(4.0));
        assert_eq!(percentile(&[], 50.0), None);
    }
}
