//! NR MCS tables (TS 38.214 Tables 5.1.3.1-1 and 5.1.3.1-2) with the
//! calibrated EESM β for every row, plus a 4-bit CQI quantization.
//!
//! The rows live in `data/mcs_table{1,2}.json` and are compiled in; the same
//! schema can be loaded from disk with [`McsTableSet::from_files`].
//!
//! File schema (one file per table):
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "table_id": "Table1",
//!   "entries": [
//!     {"index": 0, "modulation_order": 2, "ecr_numerator": 120,
//!      "ecr_denominator": 1024, "spectral_efficiency": 0.2344, "beta": 1.6}
//!   ]
//! }
//! ```

use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Code rate kept as an exact fraction (e.g. 490/1024).
pub type CodeRate = Ratio<u64>;

pub fn rate_value(rate: &CodeRate) -> f64 {
    rate.to_f64().unwrap_or(f64::NAN)
}

const SCHEMA_VERSION: u32 = 1;
const SE_TOLERANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableId {
    /// Up to 64-QAM, 29 rows.
    Table1,
    /// Up to 256-QAM, 28 rows.
    Table2,
}

impl TableId {
    pub const ALL: [TableId; 2] = [TableId::Table1, TableId::Table2];

    /// Number of rows in the table.
    pub fn len(self) -> usize {
        match self {
            TableId::Table1 => 29,
            TableId::Table2 => 28,
        }
    }

    pub fn max_index(self) -> u8 {
        (self.len() - 1) as u8
    }

    fn max_modulation_order(self) -> u8 {
        match self {
            TableId::Table1 => 6,
            TableId::Table2 => 8,
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TableId::Table1 => f.write_str("Table1"),
            TableId::Table2 => f.write_str("Table2"),
        }
    }
}

impl std::str::FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Table1" | "table1" | "1" => Ok(TableId::Table1),
            "Table2" | "table2" | "2" => Ok(TableId::Table2),
            other => Err(Error::InvalidInput(format!("unknown MCS table '{other}'"))),
        }
    }
}

/// Identifies one MCS row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct McsKey {
    pub table_id: TableId,
    pub index: u8,
}

impl McsKey {
    pub fn new(table_id: TableId, index: u8) -> Self {
        Self { table_id, index }
    }
}

impl fmt::Display for McsKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} MCS{}", self.table_id, self.index)
    }
}

/// One row of an MCS table.
#[derive(Clone, Debug, PartialEq)]
pub struct McsEntry {
    pub table_id: TableId,
    pub index: u8,
    /// Bits per modulation symbol (2, 4, 6 or 8).
    pub modulation_order: u8,
    /// Target code rate.
    pub ecr: CodeRate,
    /// Bits/s/Hz as printed in the standard table.
    pub spectral_efficiency: f64,
    /// EESM calibration parameter.
    pub beta: f64,
}

impl McsEntry {
    pub fn key(&self) -> McsKey {
        McsKey::new(self.table_id, self.index)
    }

    pub fn ecr_value(&self) -> f64 {
        rate_value(&self.ecr)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TableFile {
    schema_version: u32,
    table_id: TableId,
    entries: Vec<EntryRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EntryRecord {
    index: u8,
    modulation_order: u8,
    ecr_numerator: u64,
    ecr_denominator: u64,
    spectral_efficiency: f64,
    beta: f64,
}

/// Immutable MCS Table1 + Table2.
#[derive(Clone, Debug)]
pub struct McsTableSet {
    table1: Vec<McsEntry>,
    table2: Vec<McsEntry>,
}

impl McsTableSet {
    /// The compiled-in standard tables. Parsed once.
    pub fn standard() -> &'static McsTableSet {
        static TABLES: OnceLock<McsTableSet> = OnceLock::new();
        TABLES.get_or_init(|| {
            McsTableSet::from_json(
                include_str!("../data/mcs_table1.json"),
                include_str!("../data/mcs_table2.json"),
            )
            .expect("embedded MCS tables are valid")
        })
    }

    pub fn from_files(table1: impl AsRef<Path>, table2: impl AsRef<Path>) -> Result<Self> {
        let t1 = crate::error::read_file(table1.as_ref())?;
        let t2 = crate::error::read_file(table2.as_ref())?;
        Self::from_json(&t1, &t2)
    }

    pub fn from_json(table1: &str, table2: &str) -> Result<Self> {
        Ok(Self {
            table1: parse_table(table1, TableId::Table1)?,
            table2: parse_table(table2, TableId::Table2)?,
        })
    }

    /// Serializes one table in the file schema.
    pub fn to_json(&self, table_id: TableId) -> Result<String> {
        let file = TableFile {
            schema_version: SCHEMA_VERSION,
            table_id,
            entries: self
                .table(table_id)
                .iter()
                .map(|e| EntryRecord {
                    index: e.index,
                    modulation_order: e.modulation_order,
                    ecr_numerator: *e.ecr.numer(),
                    ecr_denominator: *e.ecr.denom(),
                    spectral_efficiency: e.spectral_efficiency,
                    beta: e.beta,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn table(&self, table_id: TableId) -> &[McsEntry] {
        match table_id {
            TableId::Table1 => &self.table1,
            TableId::Table2 => &self.table2,
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = &McsEntry> {
        self.table1.iter().chain(self.table2.iter())
    }

    pub fn mcs_lookup(&self, table_id: TableId, index: u8) -> Result<&McsEntry> {
        self.table(table_id)
            .get(index as usize)
            .ok_or(Error::InvalidMcs {
                table: table_id,
                index,
            })
    }

    pub fn get(&self, key: McsKey) -> Result<&McsEntry> {
        self.mcs_lookup(key.table_id, key.index)
    }

    pub fn beta_lookup(&self, table_id: TableId, index: u8) -> Result<f64> {
        Ok(self.mcs_lookup(table_id, index)?.beta)
    }

    /// Lowest code rate among the rows sharing this row's modulation order.
    pub fn min_ecr_same_modulation(&self, table_id: TableId, index: u8) -> Result<CodeRate> {
        let qm = self.mcs_lookup(table_id, index)?.modulation_order;
        Ok(self
            .table(table_id)
            .iter()
            .filter(|e| e.modulation_order == qm)
            .map(|e| e.ecr)
            .min()
            .expect("the row itself matches"))
    }

    /// Maps an MCS to a 4-bit CQI by quantizing its spectral efficiency onto
    /// 15 uniform levels spanning the table's SE range. CQI 0 is reserved
    /// for "out of range" and never returned here.
    pub fn quantize_cqi(&self, table_id: TableId, mcs_index: u8) -> Result<u8> {
        let se = self.mcs_lookup(table_id, mcs_index)?.spectral_efficiency;
        let rows = self.table(table_id);
        let lo = rows[0].spectral_efficiency;
        let hi = rows[rows.len() - 1].spectral_efficiency;
        let level = ((se - lo) / (hi - lo) * 14.0).floor() as i64;
        Ok((1 + level.clamp(0, 14)) as u8)
    }

    /// The MCS a gNB would schedule for a reported CQI: the lowest index
    /// whose CQI is at least the reported one. Never exceeds an index that
    /// quantized to `cqi`. `None` for CQI 0 or CQI above 15.
    pub fn mcs_for_cqi(&self, table_id: TableId, cqi: u8) -> Option<u8> {
        if cqi == 0 || cqi > 15 {
            return None;
        }
        (0..=table_id.max_index()).find(|&m| {
            self.quantize_cqi(table_id, m)
                .map(|c| c >= cqi)
                .unwrap_or(false)
        })
    }
}

fn parse_table(json: &str, expected: TableId) -> Result<Vec<McsEntry>> {
    let file: TableFile = serde_json::from_str(json)
        .map_err(|e| Error::parse(expected.to_string(), e.to_string()))?;
    let key = |i: usize| format!("{expected}[{i}]");
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::parse(
            expected.to_string(),
            format!("unsupported schema_version {}", file.schema_version),
        ));
    }
    if file.table_id != expected {
        return Err(Error::parse(
            expected.to_string(),
            format!("file holds {}", file.table_id),
        ));
    }
    if file.entries.len() != expected.len() {
        return Err(Error::parse(
            expected.to_string(),
            format!(
                "expected {} rows, found {}",
                expected.len(),
                file.entries.len()
            ),
        ));
    }
    let mut out = Vec::with_capacity(file.entries.len());
    for (i, rec) in file.entries.into_iter().enumerate() {
        if rec.index as usize != i {
            return Err(Error::parse(
                key(i),
                format!("index {} out of order", rec.index),
            ));
        }
        if ![2, 4, 6, 8].contains(&rec.modulation_order)
            || rec.modulation_order > expected.max_modulation_order()
        {
            return Err(Error::parse(
                key(i),
                format!("modulation order {} not allowed", rec.modulation_order),
            ));
        }
        if rec.ecr_denominator == 0
            || rec.ecr_numerator == 0
            || rec.ecr_numerator >= rec.ecr_denominator
        {
            return Err(Error::parse(key(i), "code rate must lie in (0, 1)"));
        }
        let ecr = Ratio::new(rec.ecr_numerator, rec.ecr_denominator);
        let qr = rec.modulation_order as f64 * rate_value(&ecr);
        if !(rec.spectral_efficiency > 0.0) || (rec.spectral_efficiency - qr).abs() > SE_TOLERANCE {
            return Err(Error::parse(
                key(i),
                format!(
                    "spectral efficiency {} inconsistent with Qm*R = {qr:.4}",
                    rec.spectral_efficiency
                ),
            ));
        }
        if !(rec.beta.is_finite() && rec.beta > 0.0) {
            return Err(Error::parse(key(i), "beta must be positive"));
        }
        out.push(McsEntry {
            table_id: expected,
            index: rec.index,
            modulation_order: rec.modulation_order,
            ecr,
            spectral_efficiency: rec.spectral_efficiency,
            beta: rec.beta,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE1_BETA: [f64; 29] = [
        1.60, 1.61, 1.63, 1.65, 1.67, 1.70, 1.73, 1.76, 1.79, 1.82, 3.97, 4.27, 4.71, 5.16, 5.66,
        6.16, 6.50, 9.95, 10.97, 12.92, 14.96, 17.06, 19.33, 21.85, 24.51, 27.14, 29.94, 32.05,
        34.28,
    ];
    const TABLE2_BETA: [f64; 28] = [
        1.60, 1.63, 1.67, 1.73, 1.79, 4.27, 4.71, 5.16, 5.66, 6.16, 6.50, 10.97, 12.92, 14.96,
        17.06, 19.33, 21.85, 24.51, 27.14, 29.94, 56.48, 65.00, 78.58, 92.48, 106.27, 118.74,
        126.36, 132.54,
    ];

    fn round2(x: f64) -> f64 {
        (x * 100.0).round() / 100.0
    }

    #[test]
    fn endpoint_rows() {
        let t = McsTableSet::standard();
        let e = t.mcs_lookup(TableId::Table1, 0).unwrap();
        assert_eq!(e.modulation_order, 2);
        assert_eq!(round2(e.ecr_value()), 0.12);
        assert!((e.spectral_efficiency - 0.23).abs() <= 0.01);

        // The standard row is 948/1024 = 0.926; printed elsewhere as 0.94,
        // which would break SE = Qm * R.
        let e = t.mcs_lookup(TableId::Table1, 28).unwrap();
        assert_eq!(e.modulation_order, 6);
        assert_eq!(e.ecr, Ratio::new(948, 1024));
        assert!((e.spectral_efficiency - 5.55).abs() <= 0.01);

        let e = t.mcs_lookup(TableId::Table2, 27).unwrap();
        assert_eq!(e.modulation_order, 8);
        assert_eq!(round2(e.ecr_value()), 0.93);
        assert!((e.spectral_efficiency - 7.40).abs() <= 0.01);
    }

    #[test]
    fn table_sizes_and_invalid_indices() {
        let t = McsTableSet::standard();
        assert_eq!(t.table(TableId::Table1).len(), 29);
        assert_eq!(t.table(TableId::Table2).len(), 28);
        assert!(matches!(
            t.mcs_lookup(TableId::Table1, 29),
            Err(Error::InvalidMcs { index: 29, .. })
        ));
        assert!(t.mcs_lookup(TableId::Table2, 28).is_err());
        assert!(t.beta_lookup(TableId::Table2, 200).is_err());
    }

    #[test]
    fn all_betas_match_published_values() {
        let t = McsTableSet::standard();
        for (i, b) in TABLE1_BETA.iter().enumerate() {
            assert_eq!(t.beta_lookup(TableId::Table1, i as u8).unwrap(), *b);
        }
        for (i, b) in TABLE2_BETA.iter().enumerate() {
            assert_eq!(t.beta_lookup(TableId::Table2, i as u8).unwrap(), *b);
        }
    }

    #[test]
    fn row_invariants() {
        let t = McsTableSet::standard();
        for id in TableId::ALL {
            let rows = t.table(id);
            for e in rows {
                let qr = e.modulation_order as f64 * e.ecr_value();
                assert!((e.spectral_efficiency - qr).abs() <= 0.01, "{}", e.key());
                assert!(e.beta > 0.0);
                assert!(e.modulation_order <= id.max_modulation_order());
            }
            assert!(rows.windows(2).all(|w| w[0].beta <= w[1].beta));
        }
    }

    #[test]
    fn min_ecr_floor() {
        let t = McsTableSet::standard();
        let r = t.min_ecr_same_modulation(TableId::Table2, 7).unwrap();
        assert_eq!(round2(rate_value(&r)), 0.37);
        let r = t.min_ecr_same_modulation(TableId::Table1, 13).unwrap();
        assert_eq!(round2(rate_value(&r)), 0.33);
        let r = t.min_ecr_same_modulation(TableId::Table1, 0).unwrap();
        assert_eq!(r, t.mcs_lookup(TableId::Table1, 0).unwrap().ecr);
        for e in t.entries() {
            assert!(t.min_ecr_same_modulation(e.table_id, e.index).unwrap() <= e.ecr);
        }
    }

    #[test]
    fn cqi_boundaries_and_round_trip() {
        let t = McsTableSet::standard();
        for id in TableId::ALL {
            assert_eq!(t.quantize_cqi(id, 0).unwrap(), 1);
            assert_eq!(t.quantize_cqi(id, id.max_index()).unwrap(), 15);
            let mut prev = 0;
            for m in 0..=id.max_index() {
                let c = t.quantize_cqi(id, m).unwrap();
                assert!((1..=15).contains(&c));
                assert!(c >= prev);
                prev = c;
                let back = t.mcs_for_cqi(id, c).unwrap();
                assert!(back <= m, "{id} MCS{m} -> CQI{c} -> MCS{back}");
            }
            assert_eq!(t.mcs_for_cqi(id, 0), None);
        }
    }

    #[test]
    fn json_round_trip_and_rejections() {
        let t = McsTableSet::standard();
        let j1 = t.to_json(TableId::Table1).unwrap();
        let j2 = t.to_json(TableId::Table2).unwrap();
        let again = McsTableSet::from_json(&j1, &j2).unwrap();
        assert_eq!(again.table(TableId::Table2), t.table(TableId::Table2));

        let bad = j1.replacen("\"beta\": 1.6", "\"beta\": -1.0", 1);
        assert!(McsTableSet::from_json(&bad, &j2).is_err());
        // swapped files
        assert!(McsTableSet::from_json(&j2, &j1).is_err());
    }
}
