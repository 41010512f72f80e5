use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::eesm::HarqMethod;
use crate::error::{Error, Result};
use crate::error_model::IrEcrMode;
use crate::link_adaptation::{Allocation, Policy};
use crate::tables::TableId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McsSelection {
    Fixed,
    Adaptive,
}

/// `index` is used in fixed mode, `policy` and `target_tbler` in adaptive mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsConfig {
    pub mode: McsSelection,
    pub table: TableId,
    pub index: u8,
    pub policy: Policy,
    pub target_tbler: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pathloss {
    pub exponent: f64,
    /// Mean SNR at `ref_distance_m`.
    pub ref_snr_db: f64,
    pub ref_distance_m: f64,
}

impl Pathloss {
    pub fn snr_db(&self, distance_m: f64) -> f64 {
        self.ref_snr_db - 10.0 * self.exponent * (distance_m / self.ref_distance_m).log10()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coherence {
    /// Adjacent RBs sharing one fading gain.
    pub rbs: u32,
    /// Packets sharing one channel; `None` freezes the channel for the
    /// whole run, retransmissions included.
    pub packets: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Traffic {
    pub packet_bytes: u32,
    pub interval_ms: f64,
    pub duration_s: f64,
}

impl Traffic {
    pub fn packet_count(&self) -> u64 {
        (self.duration_s * 1000.0 / self.interval_ms).floor() as u64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Latencies {
    /// PHY-MAC processing delay in slots, paid once per attempt.
    pub proc_slots: u32,
    pub decode_us: f64,
    /// Added to the next delivered packet after an application-layer loss.
    pub reorder_ms: f64,
    /// Subcarrier spacing; the slot lasts `15 / scs_khz` ms.
    pub scs_khz: u32,
}

impl Latencies {
    pub fn slot_ms(&self) -> f64 {
        15.0 / f64::from(self.scs_khz)
    }

    /// Latency of one transmission attempt.
    pub fn attempt_ms(&self) -> f64 {
        f64::from(self.proc_slots + 1) * self.slot_ms() + self.decode_us / 1000.0
    }
}

/// One simulation run. Serialized as JSON; every field can be overridden by
/// its dotted path, e.g. `mcs.index=20` or `coherence.packets=null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub mcs: McsConfig,
    pub harq: HarqMethod,
    pub max_retx: u32,
    /// Exactly one of `mean_snr_db` and `distance_m` is set.
    pub mean_snr_db: Option<f64>,
    pub distance_m: Option<f64>,
    pub pathloss: Pathloss,
    pub n_rbs: u32,
    pub n_symbols: u32,
    pub coherence: Coherence,
    pub traffic: Traffic,
    pub latencies: Latencies,
    /// LUT file; the built-in synthetic LUT when unset.
    pub lut_path: Option<PathBuf>,
    pub ir_mode: IrEcrMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            mcs: McsConfig {
                mode: McsSelection::Fixed,
                table: TableId::Table1,
                index: 13,
                policy: Policy::ErrorModel,
                target_tbler: 0.1,
            },
            harq: HarqMethod::Ir,
            max_retx: 3,
            mean_snr_db: None,
            distance_m: Some(30.0),
            pathloss: Pathloss {
                exponent: 3.0,
                // puts 10/30/50/70 m at roughly 23/9/2/-2 dB
                ref_snr_db: 23.0,
                ref_distance_m: 10.0,
            },
            n_rbs: 66,
            n_symbols: 12,
            coherence: Coherence {
                rbs: 4,
                packets: Some(1),
            },
            traffic: Traffic {
                packet_bytes: 100,
                interval_ms: 200.0,
                duration_s: 50.0,
            },
            latencies: Latencies {
                proc_slots: 2,
                decode_us: 100.0,
                reorder_ms: 10.0,
                scs_khz: 120,
            },
            lut_path: None,
            ir_mode: IrEcrMode::Auto,
        }
    }
}

impl SimConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(json).map_err(|e| Error::parse("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&crate::error::read_file(path.as_ref())?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Mean SNR of the link, from `mean_snr_db` or the pathloss map.
    pub fn snr_db(&self) -> f64 {
        match (self.mean_snr_db, self.distance_m) {
            (Some(s), _) => s,
            (None, Some(d)) => self.pathloss.snr_db(d),
            (None, None) => f64::NAN,
        }
    }

    pub fn allocation(&self) -> Allocation {
        Allocation {
            n_rbs: self.n_rbs,
            n_symbols: self.n_symbols,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match (self.mean_snr_db, self.distance_m) {
            (Some(_), Some(_)) | (None, None) => {
                return bad("set exactly one of mean_snr_db and distance_m".into())
            }
            (Some(s), None) if !s.is_finite() => {
                return bad(format!("mean_snr_db {s} is not finite"))
            }
            (None, Some(d)) if !(d > 0.0 && d.is_finite()) => {
                return bad(format!("distance_m must be positive, got {d}"))
            }
            _ => {}
        }
        let p = &self.pathloss;
        if !(p.exponent.is_finite() && p.ref_snr_db.is_finite() && p.ref_distance_m > 0.0) {
            return bad(
                "pathloss needs finite exponent and SNR and a positive reference distance".into(),
            );
        }
        if self.max_retx > 7 {
            return bad(format!("max_retx must be in 0..=7, got {}", self.max_retx));
        }
        Allocation::new(self.n_rbs, self.n_symbols)?;
        if self.coherence.rbs == 0 || self.coherence.packets == Some(0) {
            return bad("coherence lengths must be positive".into());
        }
        let t = &self.traffic;
        if t.packet_bytes == 0 || !(t.interval_ms > 0.0) || !(t.duration_s > 0.0) {
            return bad("traffic needs positive packet size, interval and duration".into());
        }
        if t.packet_count() == 0 {
            return bad("duration shorter than one packet interval".into());
        }
        let l = &self.latencies;
        if !(l.decode_us >= 0.0 && l.reorder_ms >= 0.0) {
            return bad("latencies must be non-negative".into());
        }
        if ![15, 30, 60, 120, 240].contains(&l.scs_khz) {
            return bad(format!("unsupported subcarrier spacing {} kHz", l.scs_khz));
        }
        if self.mcs.index > self.mcs.table.max_index() {
            return bad(format!("{} has no MCS {}", self.mcs.table, self.mcs.index));
        }
        if !(self.mcs.target_tbler > 0.0 && self.mcs.target_tbler < 1.0) {
            return bad(format!(
                "target_tbler {} outside (0, 1)",
                self.mcs.target_tbler
            ));
        }
        Ok(())
    }

    /// Sets one field by dotted path. The value is read as JSON, falling back
    /// to a plain string (so `harq=ir` works). Setting `mean_snr_db` clears
    /// `distance_m` and the other way round.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let mut root = serde_json::to_value(self)?;
        let parsed: Value =
            serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.into()));
        let mut slot = &mut root;
        for part in key.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|o| o.get_mut(part))
                .ok_or_else(|| Error::Config(format!("unknown config key `{key}`")))?;
        }
        *slot = parsed;
        match key {
            "mean_snr_db" => root["distance_m"] = Value::Null,
            "distance_m" => root["mean_snr_db"] = Value::Null,
            _ => {}
        }
        let cfg: Self = serde_json::from_value(root)
            .map_err(|e| Error::Config(format!("`{key}={value}`: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `key=value`.
pub fn split_assignment(s: &str) -> Result<(&str, &str)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::Config(format!("expected key=value, got `{s}`")))
}
