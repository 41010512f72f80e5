//! Fitting the EESM β of one MCS.
//!
//! Given fading realizations with measured BLERs and an AWGN reference
//! curve, β minimizes the mean squared log10 mismatch
//!
//! ```text
//! 1/(|ζ||η|) Σ_k Σ_l | log10 BLER_p(H_l, σ_k²) - log10 BLER_r(SINR_eff(H_l, σ_k², β)) |²
//! ```
//!
//! The search is a log-spaced grid scan followed by golden-section
//! refinement around the best grid point. No derivatives are needed, which
//! matters when the reference is a tabulated curve.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eesm::{effective_sinr, SinrSpectrum};
use crate::error::{Error, Result};
use crate::error_model::sim_rng;
use crate::fading::block_fading_gains;
use crate::lut::{BlerLut, CbsCurve, SyntheticAwgn};
use crate::tables::{McsEntry, McsKey};

/// BLERs are clamped to `[BLER_FLOOR, 1 - BLER_FLOOR]` inside the logs.
pub const BLER_FLOOR: f64 = 1e-8;

/// SINR (dB) to BLER on an AWGN channel.
pub trait AwgnReference {
    fn bler(&self, sinr_db: f64) -> f64;
}

impl<F: Fn(f64) -> f64> AwgnReference for F {
    fn bler(&self, sinr_db: f64) -> f64 {
        self(sinr_db)
    }
}

/// A tabulated curve, interpolated log-linearly between its points.
#[derive(Clone, Debug)]
pub struct CurveReference {
    curve: CbsCurve,
}

impl CurveReference {
    pub fn new(curve: CbsCurve) -> Self {
        Self { curve }
    }

    /// The curve of `mcs` that the worst-case lookup would pick for `cbs`.
    pub fn from_lut(lut: &BlerLut, mcs: McsKey, cbs: u64) -> Result<Self> {
        Ok(Self::new(lut.select_curve(mcs, cbs)?.0.clone()))
    }
}

impl AwgnReference for CurveReference {
    fn bler(&self, sinr_db: f64) -> f64 {
        self.curve.bler_log_interp(sinr_db)
    }
}

/// The synthetic waterfall of one MCS at a fixed block size.
#[derive(Clone, Copy, Debug)]
pub struct SyntheticReference {
    pub model: SyntheticAwgn,
    pub modulation_order: u8,
    pub ecr: f64,
    pub cbs: u64,
}

impl SyntheticReference {
    pub fn new(mcs: &McsEntry, cbs: u64) -> Self {
        Self {
            model: SyntheticAwgn::default(),
            modulation_order: mcs.modulation_order,
            ecr: mcs.ecr_value(),
            cbs,
        }
    }
}

impl AwgnReference for SyntheticReference {
    fn bler(&self, sinr_db: f64) -> f64 {
        self.model
            .cbler(self.modulation_order, self.ecr, self.cbs, sinr_db)
    }
}

/// One fading realization at one noise level.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub spectrum: SinrSpectrum,
    pub measured_bler: f64,
    /// Mean SNR the channel was scaled to, when known.
    pub noise_db: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationEnsemble {
    pub mcs: McsKey,
    realizations: Vec<Realization>,
    dropped: usize,
}

impl CalibrationEnsemble {
    /// Drops samples whose measured BLER is exactly 0 or 1 (their log
    /// mismatch is undefined or saturated) and checks what remains.
    pub fn new(mcs: McsKey, realizations: Vec<Realization>) -> Result<Self> {
        let total = realizations.len();
        let kept: Vec<Realization> = realizations
            .into_iter()
            .filter(|r| r.measured_bler > 0.0 && r.measured_bler < 1.0)
            .collect();
        if let Some(r) = kept.iter().find(|r| !r.measured_bler.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "measured BLER {} is not finite",
                r.measured_bler
            )));
        }
        if kept.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "calibration needs at least 2 usable realizations, {} of {total} left",
                kept.len()
            )));
        }
        let levels: BTreeSet<u64> = kept
            .iter()
            .filter_map(|r| r.noise_db.map(f64::to_bits))
            .collect();
        if kept.iter().any(|r| r.noise_db.is_some()) && levels.len() < 2 {
            return Err(Error::InvalidInput(
                "realizations must span at least 2 noise levels".into(),
            ));
        }
        Ok(Self {
            mcs,
            dropped: total - kept.len(),
            realizations: kept,
        })
    }

    pub fn realizations(&self) -> &[Realization] {
        &self.realizations
    }

    /// Samples removed because their BLER was exactly 0 or 1.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = EnsembleFile {
            mcs: self.mcs,
            realizations: self
                .realizations
                .iter()
                .map(|r| RealizationRecord {
                    sinr_db: r.spectrum.to_db(),
                    bler: r.measured_bler,
                    noise_db: r.noise_db,
                })
                .collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: EnsembleFile =
            serde_json::from_str(json).map_err(|e| Error::parse("ensemble", e.to_string()))?;
        let mut realizations = Vec::with_capacity(file.realizations.len());
        for (i, r) in file.realizations.into_iter().enumerate() {
            let spectrum = SinrSpectrum::from_db(&r.sinr_db)
                .map_err(|e| Error::parse(format!("realizations[{i}]"), e.to_string()))?;
            if !(0.0..=1.0).contains(&r.bler) {
                return Err(Error::parse(
                    format!("realizations[{i}]"),
                    format!("BLER {} outside [0, 1]", r.bler),
                ));
            }
            realizations.push(Realization {
                spectrum,
                measured_bler: r.bler,
                noise_db: r.noise_db,
            });
        }
        Self::new(file.mcs, realizations)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&crate::error::read_file(path.as_ref())?)
    }
}

#[derive(Serialize, Deserialize)]
struct EnsembleFile {
    mcs: McsKey,
    realizations: Vec<RealizationRecord>,
}

#[derive(Serialize, Deserialize)]
struct RealizationRecord {
    sinr_db: Vec<f64>,
    bler: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_db: Option<f64>,
}

/// Objective value plus how many reference BLERs hit the floor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    /// Reference BLERs that came back 0 and were raised to [`BLER_FLOOR`].
    pub floored: usize,
}

fn clamp_log(b: f64) -> f64 {
    b.clamp(BLER_FLOOR, 1.0 - BLER_FLOOR).log10()
}

pub fn evaluate_objective(
    beta: f64,
    ensemble: &CalibrationEnsemble,
    reference: &dyn AwgnReference,
) -> Result<ObjectiveValue> {
    let mut sum = 0.0;
    let mut floored = 0;
    for r in ensemble.realizations() {
        let eff_db = crate::lin_to_db(effective_sinr(&r.spectrum, beta)?);
        let predicted = reference.bler(eff_db);
        if predicted <= 0.0 {
            floored += 1;
        }
        let d = clamp_log(r.measured_bler) - clamp_log(predicted);
        sum += d * d;
    }
    Ok(ObjectiveValue {
        value: sum / ensemble.len() as f64,
        floored,
    })
}

/// Mean squared log10 BLER mismatch at `beta`.
pub fn calibration_objective(
    beta: f64,
    ensemble: &CalibrationEnsemble,
    reference: &dyn AwgnReference,
) -> Result<f64> {
    Ok(evaluate_objective(beta, ensemble, reference)?.value)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaSearch {
    pub beta_min: f64,
    pub beta_max: f64,
    /// Absolute width at which golden-section refinement stops.
    pub tolerance: f64,
    pub grid_points: usize,
}

impl Default for BetaSearch {
    fn default() -> Self {
        Self {
            beta_min: 0.1,
            beta_max: 300.0,
            tolerance: 1e-3,
            grid_points: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationResult {
    pub beta_opt: f64,
    pub objective_value: f64,
    /// Every `(beta, objective)` evaluated, in order.
    pub search_trace: Vec<(f64, f64)>,
    /// The optimum sits on an end of the search range.
    pub at_boundary: bool,
    /// The objective did not vary over the grid (e.g. flat spectra).
    pub beta_insensitive: bool,
    /// Reference BLERs raised to the floor at the optimum.
    pub floored_samples: usize,
    /// Realizations dropped from the ensemble for BLER 0 or 1.
    pub dropped_samples: usize,
}

/// Grid scan plus golden-section refinement. Deterministic.
pub fn calibrate_beta(
    ensemble: &CalibrationEnsemble,
    reference: &dyn AwgnReference,
    search: &BetaSearch,
) -> Result<CalibrationResult> {
    let BetaSearch {
        beta_min,
        beta_max,
        tolerance,
        grid_points,
    } = *search;
    if !(beta_min > 0.0 && beta_min < beta_max && beta_max.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need 0 < beta_min < beta_max, got [{beta_min}, {beta_max}]"
        )));
    }
    if !(tolerance > 0.0) || grid_points < 3 {
        return Err(Error::InvalidInput(
            "tolerance must be positive and the grid at least 3 points".into(),
        ));
    }

    let mut trace: Vec<(f64, f64)> = Vec::new();
    let eval = |beta: f64, trace: &mut Vec<(f64, f64)>| -> Result<f64> {
        let v = calibration_objective(beta, ensemble, reference)?;
        trace.push((beta, v));
        Ok(v)
    };

    let ratio = (beta_max / beta_min).ln() / (grid_points - 1) as f64;
    let grid: Vec<f64> = (0..grid_points)
        .map(|i| {
            if i == grid_points - 1 {
                beta_max
            } else {
                beta_min * (ratio * i as f64).exp()
            }
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for &b in &grid {
        values.push(eval(b, &mut trace)?);
    }

    let finite: Vec<(usize, f64)> = values
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .collect();
    let Some(&(best_i, _)) = finite
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"))
    else {
        return Err(Error::Calibration {
            reason: "objective is not finite anywhere on the search grid".into(),
            trace,
        });
    };
    let lo_v = finite.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi_v = finite.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let beta_insensitive = hi_v - lo_v <= 1e-12 * (1.0 + lo_v.abs());

    if !beta_insensitive {
        let mut a = grid[best_i.saturating_sub(1)];
        let mut b = grid[(best_i + 1).min(grid.len() - 1)];
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = eval(c, &mut trace)?;
        let mut fd = eval(d, &mut trace)?;
        while (b - a) > tolerance {
            // NaN compares false and moves the bracket left; harmless
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = eval(c, &mut trace)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = eval(d, &mut trace)?;
            }
        }
        let mid = 0.5 * (a + b);
        eval(mid, &mut trace)?;
    }

    let &(beta_opt, objective_value) = trace
        .iter()
        .filter(|p| p.1.is_finite())
        .min_by(|x, y| x.1.partial_cmp(&y.1).expect("finite"))
        .expect("grid has a finite point");
    let at_boundary = !beta_insensitive
        && ((beta_opt - beta_min).abs() <= tolerance || (beta_max - beta_opt).abs() <= tolerance);
    let floored_samples = evaluate_objective(beta_opt, ensemble, reference)?.floored;
    Ok(CalibrationResult {
        beta_opt,
        objective_value,
        search_trace: trace,
        at_boundary,
        beta_insensitive,
        floored_samples,
        dropped_samples: ensemble.dropped(),
    })
}

/// How the generator produces "measured" BLERs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasuredBler {
    /// `BLER_r(SINR_eff(H, σ², β*))`: the EESM model is exact at `β*`.
    PlantedBeta(f64),
    /// `BLER_r` at the capacity-equivalent SINR `2^mean(log2(1+SINR_n)) - 1`,
    /// a different mapping than EESM, so no β fits perfectly.
    CapacityMapping,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FadingSpec {
    pub n_rbs: usize,
    pub coherence_rbs: usize,
    pub seed: u64,
}

/// Draws `n_channels` block-fading channels and scales each to every mean
/// SNR in `noise_grid_db` (full cross product).
pub fn gen_fading_ensemble(
    mcs: &McsEntry,
    n_channels: usize,
    noise_grid_db: &[f64],
    fading: FadingSpec,
    measured: MeasuredBler,
    reference: &dyn AwgnReference,
) -> Result<CalibrationEnsemble> {
    if n_channels == 0 || noise_grid_db.is_empty() {
        return Err(Error::InvalidInput(
            "need at least one channel and one noise level".into(),
        ));
    }
    if noise_grid_db.iter().any(|n| !n.is_finite()) {
        return Err(Error::InvalidInput("noise levels must be finite".into()));
    }
    let mut rng = sim_rng(fading.seed, 0);
    let mut out = Vec::with_capacity(n_channels * noise_grid_db.len());
    for _ in 0..n_channels {
        let gains = block_fading_gains(fading.n_rbs, fading.coherence_rbs, &mut rng)?;
        for &snr_db in noise_grid_db {
            let spectrum = SinrSpectrum::new(gains.clone())?.scaled(crate::db_to_lin(snr_db))?;
            let eff_db = match measured {
                MeasuredBler::PlantedBeta(beta) => {
                    crate::lin_to_db(effective_sinr(&spectrum, beta)?)
                }
                MeasuredBler::CapacityMapping => {
                    let mean_cap = spectrum.values().iter().map(|s| s.ln_1p()).sum::<f64>()
                        / spectrum.len() as f64;
                    crate::lin_to_db(mean_cap.exp_m1())
                }
            };
            out.push(Realization {
                spectrum,
                measured_bler: reference.bler(eff_db),
                noise_db: Some(snr_db),
            });
        }
    }
    CalibrationEnsemble::new(mcs.key(), out)
}
