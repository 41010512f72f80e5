//! SINR to code-BLER lookup tables.
//!
//! A [`BlerLut`] holds, for every MCS, a family of waterfall curves indexed
//! by code block size. Lookups are worst-case: the curve with the largest
//! stored CBS not above the requested one, and within it the point with the
//! largest stored SINR not above the requested one. No interpolation.
//!
//! # File format
//!
//! JSON, one object:
//!
//! ```json
//! {
//!   "version": 1,
//!   "generator": "synthetic-awgn/v1",
//!   "seed": 0,
//!   "tables": [
//!     {"table_id": "Table1",
//!      "mcs": [
//!        {"index": 0,
//!         "curves": [
//!           {"cbs": 1024, "bg": "BG2", "points": [[-10.0, 1.0], [-5.0, 0.2], [0.0, 0.0]]}
//!         ]}
//!      ]}
//!   ]
//! }
//! ```
//!
//! `points` are `[sinr_db, bler]` pairs, strictly increasing in SINR and
//! non-increasing in BLER. Curves of an MCS have distinct `cbs` values.
//! Externally measured curves load through the same path.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::BaseGraph;
use crate::tables::{rate_value, CodeRate, McsEntry, McsKey, McsTableSet, TableId};

pub const LUT_FORMAT_VERSION: u32 = 1;
pub const SYNTHETIC_GENERATOR: &str = "synthetic-awgn/v1";

/// One waterfall curve for a given code block size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbsCurve {
    pub cbs: u64,
    pub bg: BaseGraph,
    /// `(sinr_db, bler)`, strictly increasing SINR.
    pub points: Vec<(f64, f64)>,
}

impl CbsCurve {
    fn validate(&self, key: &str) -> Result<()> {
        let ctx = || format!("{key} cbs {}", self.cbs);
        if self.points.len() < 2 {
            return Err(Error::parse(ctx(), "a curve needs at least 2 points"));
        }
        for (i, &(s, b)) in self.points.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::parse(ctx(), format!("point {i}: SINR not finite")));
            }
            if !(0.0..=1.0).contains(&b) {
                return Err(Error::parse(
                    ctx(),
                    format!("point {i}: BLER {b} outside [0, 1]"),
                ));
            }
        }
        for (i, w) in self.points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::parse(
                    ctx(),
                    format!("point {}: SINR not strictly increasing", i + 1),
                ));
            }
            if w[1].1 > w[0].1 {
                return Err(Error::parse(
                    ctx(),
                    format!("point {}: BLER increases with SINR", i + 1),
                ));
            }
        }
        Ok(())
    }

    /// BLER at the largest stored SINR `<= sinr_db`; 1.0 below the curve,
    /// last stored value above it.
    pub fn bler_lower_bound(&self, sinr_db: f64) -> f64 {
        let n = self.points.partition_point(|p| p.0 <= sinr_db);
        if n == 0 {
            1.0
        } else {
            self.points[n - 1].1
        }
    }

    /// Interpolates linearly in (SINR dB, log10 BLER), holding the end
    /// values outside the stored range. Used where a continuous reference
    /// is needed (calibration), never for the worst-case lookup.
    pub fn bler_log_interp(&self, sinr_db: f64) -> f64 {
        const FLOOR: f64 = 1e-12;
        let pts = &self.points;
        let n = pts.partition_point(|p| p.0 <= sinr_db);
        if n == 0 {
            return pts[0].1;
        }
        if n == pts.len() {
            return pts[n - 1].1;
        }
        let (s0, b0) = pts[n - 1];
        let (s1, b1) = pts[n];
        let t = (sinr_db - s0) / (s1 - s0);
        let l0 = b0.max(FLOOR).log10();
        let l1 = b1.max(FLOOR).log10();
        let v = 10f64.powf(l0 + t * (l1 - l0));
        if v <= FLOOR {
            0.0
        } else {
            v.min(1.0)
        }
    }
}

/// Where a LUT came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LutProvenance {
    pub version: u32,
    pub generator: String,
    pub seed: u64,
}

/// Result of a worst-case lookup.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CblerLookup {
    pub cbler: f64,
    /// CBS of the curve that was used.
    pub curve_cbs: u64,
    /// The requested CBS was below every stored curve; the smallest curve
    /// was used instead.
    pub cbs_fallback: bool,
}

/// Per-MCS families of CBS curves.
#[derive(Clone, Debug, PartialEq)]
pub struct BlerLut {
    provenance: LutProvenance,
    curves: BTreeMap<McsKey, Vec<CbsCurve>>,
}

impl BlerLut {
    /// Builds a LUT, sorting each family by CBS and validating everything.
    pub fn new(provenance: LutProvenance, curves: BTreeMap<McsKey, Vec<CbsCurve>>) -> Result<Self> {
        let mut curves = curves;
        for (key, family) in curves.iter_mut() {
            let name = key.to_string();
            if key.index > key.table_id.max_index() {
                return Err(Error::parse(name, "MCS index out of range for its table"));
            }
            if family.is_empty() {
                return Err(Error::parse(name, "no curves"));
            }
            family.sort_by_key(|c| c.cbs);
            if family.windows(2).any(|w| w[0].cbs == w[1].cbs) {
                return Err(Error::parse(name, "duplicate cbs"));
            }
            for c in family.iter() {
                c.validate(&name)?;
            }
        }
        Ok(Self { provenance, curves })
    }

    pub fn provenance(&self) -> &LutProvenance {
        &self.provenance
    }

    pub fn is_synthetic(&self) -> bool {
        self.provenance.generator.starts_with("synthetic")
    }

    pub fn keys(&self) -> impl Iterator<Item = McsKey> + '_ {
        self.curves.keys().copied()
    }

    pub fn curves(&self, key: McsKey) -> Result<&[CbsCurve]> {
        self.curves
            .get(&key)
            .map(Vec::as_slice)
            .ok_or(Error::MissingCurve {
                table: key.table_id,
                index: key.index,
            })
    }

    /// Curve with the largest CBS `<= cbs`, or the smallest curve with the
    /// fallback flag set.
    pub fn select_curve(&self, key: McsKey, cbs: u64) -> Result<(&CbsCurve, bool)> {
        let family = self.curves(key)?;
        let n = family.partition_point(|c| c.cbs <= cbs);
        Ok(if n == 0 {
            (&family[0], true)
        } else {
            (&family[n - 1], false)
        })
    }

    /// Worst-case code BLER for an effective SINR (dB) and code block size.
    pub fn lookup_cbler(&self, key: McsKey, cbs: u64, sinr_eff_db: f64) -> Result<CblerLookup> {
        if sinr_eff_db.is_nan() {
            return Err(Error::InvalidInput("effective SINR is NaN".into()));
        }
        let (curve, cbs_fallback) = self.select_curve(key, cbs)?;
        Ok(CblerLookup {
            cbler: curve.bler_lower_bound(sinr_eff_db),
            curve_cbs: curve.cbs,
            cbs_fallback,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let file: LutFile =
            serde_json::from_str(json).map_err(|e| Error::parse("LUT", e.to_string()))?;
        Self::from_file(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&crate::error::read_file(path.as_ref())?)
    }

    fn to_file(&self) -> LutFile {
        let mut tables: Vec<TableRecord> = Vec::new();
        for (key, family) in &self.curves {
            if tables.last().map(|t| t.table_id) != Some(key.table_id) {
                tables.push(TableRecord {
                    table_id: key.table_id,
                    mcs: Vec::new(),
                });
            }
            let table = tables.last_mut().expect("just pushed");
            table.mcs.push(McsRecord {
                index: key.index,
                curves: family.clone(),
            });
        }
        LutFile {
            version: self.provenance.version,
            generator: self.provenance.generator.clone(),
            seed: self.provenance.seed,
            tables,
        }
    }

    fn from_file(file: LutFile) -> Result<Self> {
        if file.version != LUT_FORMAT_VERSION {
            return Err(Error::parse(
                "LUT",
                format!("unsupported version {}", file.version),
            ));
        }
        let mut curves = BTreeMap::new();
        for table in file.tables {
            for m in table.mcs {
                let key = McsKey::new(table.table_id, m.index);
                if curves.insert(key, m.curves).is_some() {
                    return Err(Error::parse(key.to_string(), "MCS listed twice"));
                }
            }
        }
        Self::new(
            LutProvenance {
                version: file.version,
                generator: file.generator,
                seed: file.seed,
            },
            curves,
        )
    }

    /// The synthetic LUT built from [`SyntheticAwgn::default`] over
    /// [`DEFAULT_CBS_GRID`] and a -15..50 dB grid in 0.25 dB steps. Built
    /// once per process.
    pub fn default_synthetic() -> &'static BlerLut {
        static LUT: OnceLock<BlerLut> = OnceLock::new();
        LUT.get_or_init(|| {
            generate_synthetic_lut(
                McsTableSet::standard(),
                &DEFAULT_CBS_GRID,
                &default_sinr_grid_db(),
                0,
            )
            .expect("default grids are valid")
        })
    }
}

#[derive(Serialize, Deserialize)]
struct LutFile {
    version: u32,
    generator: String,
    seed: u64,
    tables: Vec<TableRecord>,
}

#[derive(Serialize, Deserialize)]
struct TableRecord {
    table_id: TableId,
    mcs: Vec<McsRecord>,
}

#[derive(Serialize, Deserialize)]
struct McsRecord {
    index: u8,
    curves: Vec<CbsCurve>,
}

/// CBS values of the shipped synthetic LUT.
pub const DEFAULT_CBS_GRID: [u64; 10] = [24, 64, 128, 256, 512, 1024, 2048, 3840, 5280, 8448];

pub fn default_sinr_grid_db() -> Vec<f64> {
    (0..=260).map(|i| -15.0 + 0.25 * i as f64).collect()
}

/// Parametric AWGN waterfall standing in for link-level curves.
///
/// `BLER = Q((s - μ) / σ)` with
///
/// - `μ = 10 log10(2^(Qm·R·κ) - 1) + penalty_db·sqrt(1000/cbs)`: the SINR
///   at which a κ-backed-off constrained capacity meets `Qm·R`, plus a
///   finite-length loss that shrinks with the block size;
/// - `σ = sigma0_db` below `μ` and `sigma0_db / sqrt(cbs/1000)` above it.
///
/// The split slope keeps curves of larger blocks at or below those of
/// smaller blocks everywhere, not just past the crossing point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyntheticAwgn {
    pub kappa: f64,
    pub sigma0_db: f64,
    pub penalty_db: f64,
}

impl Default for SyntheticAwgn {
    fn default() -> Self {
        Self {
            kappa: 1.25,
            sigma0_db: 1.0,
            penalty_db: 0.5,
        }
    }
}

impl SyntheticAwgn {
    /// Waterfall midpoint (BLER 0.5) in dB.
    pub fn midpoint_db(&self, modulation_order: u8, ecr: f64, cbs: u64) -> f64 {
        let capacity_db =
            crate::lin_to_db((modulation_order as f64 * ecr * self.kappa).exp2() - 1.0);
        capacity_db + self.penalty_db * (1000.0 / cbs as f64).sqrt()
    }

    pub fn cbler(&self, modulation_order: u8, ecr: f64, cbs: u64, sinr_db: f64) -> f64 {
        let mu = self.midpoint_db(modulation_order, ecr, cbs);
        let sigma = if sinr_db < mu {
            self.sigma0_db
        } else {
            self.sigma0_db / (cbs as f64 / 1000.0).sqrt()
        };
        (0.5 * libm::erfc((sinr_db - mu) / (std::f64::consts::SQRT_2 * sigma))).clamp(0.0, 1.0)
    }
}

/// Synthetic code BLER of `mcs` operated at code rate `ecr_eff`, with the
/// default parameters.
pub fn synth_awgn_cbler(mcs: &McsEntry, ecr_eff: CodeRate, cbs: u64, sinr_db: f64) -> f64 {
    SyntheticAwgn::default().cbler(
        mcs.modulation_order,
        rate_value(&ecr_eff),
        cbs.max(1),
        sinr_db,
    )
}

/// SINR gain (dB) credited to a lowered IR code rate when the LUT is keyed
/// by nominal MCS: `10 log10(R / ecr_eff) · Qm / 2`, zero when `ecr_eff >= R`.
pub fn ir_sinr_offset_db(mcs: &McsEntry, ecr_eff: CodeRate) -> f64 {
    if ecr_eff >= mcs.ecr {
        return 0.0;
    }
    crate::lin_to_db(mcs.ecr_value() / rate_value(&ecr_eff)) * mcs.modulation_order as f64 / 2.0
}

/// Samples [`SyntheticAwgn::default`] for every MCS of both tables.
pub fn generate_synthetic_lut(
    tables: &McsTableSet,
    cbs_grid: &[u64],
    sinr_grid_db: &[f64],
    seed: u64,
) -> Result<BlerLut> {
    generate_lut_with(
        &SyntheticAwgn::default(),
        tables,
        &TableId::ALL,
        cbs_grid,
        sinr_grid_db,
        seed,
    )
}

/// Samples `model` for every MCS of the listed tables.
pub fn generate_lut_with(
    model: &SyntheticAwgn,
    tables: &McsTableSet,
    table_ids: &[TableId],
    cbs_grid: &[u64],
    sinr_grid_db: &[f64],
    seed: u64,
) -> Result<BlerLut> {
    if cbs_grid.is_empty() || sinr_grid_db.len() < 2 {
        return Err(Error::InvalidInput(
            "need at least one CBS and two SINR grid points".into(),
        ));
    }
    if cbs_grid.iter().any(|&c| c < 24) {
        return Err(Error::InvalidInput("CBS grid values must be >= 24".into()));
    }
    if sinr_grid_db.windows(2).any(|w| !(w[1] > w[0]))
        || sinr_grid_db.iter().any(|s| !s.is_finite())
    {
        return Err(Error::InvalidInput(
            "SINR grid must be finite and strictly increasing".into(),
        ));
    }
    let mut curves = BTreeMap::new();
    for &id in table_ids {
        for e in tables.table(id) {
            let family = cbs_grid
                .iter()
                .map(|&cbs| {
                    let mut floor = 1.0f64;
                    let points = sinr_grid_db
                        .iter()
                        .map(|&s| {
                            // guard against last-ulp wiggles in erfc
                            floor =
                                floor.min(model.cbler(e.modulation_order, e.ecr_value(), cbs, s));
                            (s, floor)
                        })
                        .collect();
                    CbsCurve {
                        cbs,
                        bg: if cbs <= BaseGraph::Bg2.max_code_block() {
                            BaseGraph::Bg2
                        } else {
                            BaseGraph::Bg1
                        },
                        points,
                    }
                })
                .collect();
            curves.insert(e.key(), family);
        }
    }
    BlerLut::new(
        LutProvenance {
            version: LUT_FORMAT_VERSION,
            generator: SYNTHETIC_GENERATOR.into(),
            seed,
        },
        curves,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(i: u8) -> McsKey {
        McsKey::new(TableId::Table1, i)
    }

    fn two_curve_lut() -> BlerLut {
        let mut m = BTreeMap::new();
        m.insert(
            key(3),
            vec![
                CbsCurve {
                    cbs: 4000,
                    bg: BaseGraph::Bg1,
                    points: vec![(0.0, 0.9), (1.0, 0.3), (2.0, 0.01)],
                },
                CbsCurve {
                    cbs: 500,
                    bg: BaseGraph::Bg2,
                    points: vec![(0.0, 1.0), (1.0, 0.6), (2.0, 0.1), (3.0, 0.0)],
                },
            ],
        );
        BlerLut::new(
            LutProvenance {
                version: 1,
                generator: "test".into(),
                seed: 0,
            },
            m,
        )
        .unwrap()
    }

    #[test]
    fn worst_case_lookup_rules() {
        let lut = two_curve_lut();
        let l = lut.lookup_cbler(key(3), 500, -3.0).unwrap();
        assert_eq!(l.cbler, 1.0);
        assert_eq!(lut.lookup_cbler(key(3), 500, 1.0).unwrap().cbler, 0.6);
        assert_eq!(lut.lookup_cbler(key(3), 500, 1.9).unwrap().cbler, 0.6);
        assert_eq!(lut.lookup_cbler(key(3), 500, 99.0).unwrap().cbler, 0.0);
        assert_eq!(lut.lookup_cbler(key(3), 4000, 99.0).unwrap().cbler, 0.01);

        // between curves: the smaller block's value, never better than the larger's
        let mid = lut.lookup_cbler(key(3), 2000, 1.5).unwrap();
        assert_eq!(mid.curve_cbs, 500);
        assert!(!mid.cbs_fallback);
        assert_eq!(mid.cbler, 0.6);
        assert!(mid.cbler >= lut.lookup_cbler(key(3), 4000, 1.5).unwrap().cbler);

        let low = lut.lookup_cbler(key(3), 100, 1.0).unwrap();
        assert!(low.cbs_fallback);
        assert_eq!(low.curve_cbs, 500);

        assert!(matches!(
            lut.lookup_cbler(key(4), 500, 1.0),
            Err(Error::MissingCurve { .. })
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let lut = generate_lut_with(
            &SyntheticAwgn::default(),
            McsTableSet::standard(),
            &[TableId::Table2],
            &[100, 1000],
            &[-3.3, 0.1, 4.7, 9.0],
            7,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lut.json");
        lut.save(&p).unwrap();
        assert_eq!(BlerLut::load(&p).unwrap(), lut);
    }

    #[test]
    fn load_rejects_bad_files() {
        let base = r#"{"version":1,"generator":"x","seed":0,"tables":[{"table_id":"Table1","mcs":[{"index":2,"curves":[{"cbs":100,"bg":"BG2","points":POINTS}]}]}]}"#;
        let ok = base.replace("POINTS", "[[0.0,1.0],[1.0,0.5]]");
        assert!(BlerLut::from_json(&ok).is_ok());

        let unsorted = base.replace("POINTS", "[[1.0,1.0],[0.0,0.5]]");
        let err = BlerLut::from_json(&unsorted).unwrap_err().to_string();
        assert!(err.contains("Table1 MCS2"), "{err}");

        let range = base.replace("POINTS", "[[0.0,1.2],[1.0,0.5]]");
        assert!(matches!(
            BlerLut::from_json(&range),
            Err(Error::Parse { .. })
        ));

        let short = base.replace("POINTS", "[[0.0,1.0]]");
        assert!(BlerLut::from_json(&short).is_err());

        let bad_index = ok.replace("\"index\":2", "\"index\":29");
        assert!(BlerLut::from_json(&bad_index).is_err());

        let bad_version = ok.replace("\"version\":1", "\"version\":9");
        assert!(BlerLut::from_json(&bad_version).is_err());
    }

    #[test]
    fn synthetic_shape() {
        let t = McsTableSet::standard();
        let e = t.mcs_lookup(TableId::Table1, 10).unwrap();
        let m = SyntheticAwgn::default();
        let mu = m.midpoint_db(e.modulation_order, e.ecr_value(), 1000);
        assert!((m.cbler(e.modulation_order, e.ecr_value(), 1000, mu) - 0.5).abs() < 1e-15);
        assert_eq!(synth_awgn_cbler(e, e.ecr, 1000, 200.0), 0.0);
        assert_eq!(synth_awgn_cbler(e, e.ecr, 1000, -200.0), 1.0);

        for i in 0..200 {
            let s = -10.0 + 0.2 * i as f64;
            let a = synth_awgn_cbler(e, e.ecr, 500, s);
            let b = synth_awgn_cbler(e, e.ecr, 4000, s);
            assert!(b <= a, "sinr {s}: {b} > {a}");
            let lower_rate = CodeRate::new(300, 1024);
            assert!(synth_awgn_cbler(e, lower_rate, 500, s) <= a);
            assert!(synth_awgn_cbler(e, e.ecr, 500, s + 0.1) <= a);
        }
    }

    #[test]
    fn generation_shapes() {
        let t = McsTableSet::standard();
        let one = generate_lut_with(
            &SyntheticAwgn::default(),
            t,
            &[TableId::Table1],
            &[1000],
            &[-5.0, 0.0, 5.0],
            0,
        )
        .unwrap();
        let c = &one.curves(key(0)).unwrap()[0];
        assert_eq!(c.points.len(), 3);
        assert!(c.points.windows(2).all(|w| w[1].1 <= w[0].1));
        assert_eq!(one.keys().count(), 29);

        assert!(generate_synthetic_lut(t, &[], &[0.0, 1.0], 0).is_err());
        assert!(generate_synthetic_lut(t, &[100], &[1.0, 0.0], 0).is_err());
        assert!(generate_synthetic_lut(t, &[10], &[0.0, 1.0], 0).is_err());

        let a = generate_synthetic_lut(t, &[256, 2048], &[-2.0, 0.0, 3.0], 3).unwrap();
        let b = generate_synthetic_lut(t, &[256, 2048], &[-2.0, 0.0, 3.0], 3).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn ir_offset() {
        let t = McsTableSet::standard();
        let e = t.mcs_lookup(TableId::Table1, 13).unwrap();
        assert_eq!(ir_sinr_offset_db(e, e.ecr), 0.0);
        let half = e.ecr / 2;
        assert!((ir_sinr_offset_db(e, half) - crate::lin_to_db(2.0) * 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_interp_is_bounded_by_neighbours() {
        let lut = two_curve_lut();
        let c = &lut.curves(key(3)).unwrap()[0];
        let v = c.bler_log_interp(1.5);
        assert!(v < 0.6 && v > 0.1);
        assert_eq!(c.bler_log_interp(-5.0), 1.0);
        assert_eq!(c.bler_log_interp(2.0), 0.1);
    }
}
