//! LDPC base graph selection, code block segmentation (TS 38.212)
//! and the code-BLER to transport-BLER composition.
//!
//! Only the sizes matter here: how many code blocks a transport block
//! splits into and how long each one is. Filler bits and rate matching are
//! not modelled beyond their effect on `K`.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::{rate_value, CodeRate};

/// Largest TBS accepted by [`segment`] unless a different cap is given.
pub const DEFAULT_MAX_TBS: u64 = 1_277_992;

/// CRC attached to each code block when a transport block is segmented.
pub const CB_CRC_BITS: u64 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseGraph {
    #[serde(rename = "BG1")]
    Bg1,
    #[serde(rename = "BG2")]
    Bg2,
}

impl BaseGraph {
    /// Maximum code block size `K_cb`.
    pub fn max_code_block(self) -> u64 {
        match self {
            BaseGraph::Bg1 => 8448,
            BaseGraph::Bg2 => 3840,
        }
    }
}

impl fmt::Display for BaseGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseGraph::Bg1 => f.write_str("BG1"),
            BaseGraph::Bg2 => f.write_str("BG2"),
        }
    }
}

#[derive(Deserialize)]
struct LiftingFile {
    schema_version: u32,
    lifting_sizes: Vec<u64>,
}

/// The 51 LDPC lifting sizes of TS 38.212 Table 5.3.2-1, ascending.
pub fn lifting_sizes() -> &'static [u64] {
    static SIZES: OnceLock<Vec<u64>> = OnceLock::new();
    SIZES.get_or_init(|| {
        let file: LiftingFile = serde_json::from_str(include_str!("../data/lifting_sizes.json"))
            .expect("embedded lifting sizes are valid JSON");
        assert_eq!(file.schema_version, 1);
        assert_eq!(file.lifting_sizes.len(), 51);
        assert!(file.lifting_sizes.windows(2).all(|w| w[0] < w[1]));
        file.lifting_sizes
    })
}

/// BG2 if `A <= 292`, or `R <= 0.25`, or `A <= 3824` with `R <= 0.67`;
/// BG1 otherwise.
pub fn select_base_graph(tbs: u64, ecr: CodeRate) -> Result<BaseGraph> {
    if tbs == 0 {
        return Err(Error::InvalidInput("TBS must be positive".into()));
    }
    let r = rate_value(&ecr);
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidInput(format!("code rate {r} outside (0, 1)")));
    }
    let quarter = CodeRate::new(1, 4);
    let two_thirds_ish = CodeRate::new(67, 100);
    let bg2 = tbs <= 292 || ecr <= quarter || (tbs <= 3824 && ecr <= two_thirds_ish);
    Ok(if bg2 { BaseGraph::Bg2 } else { BaseGraph::Bg1 })
}

/// Transport block CRC length: 24 bits above 3824 payload bits, else 16.
pub fn tb_crc_length(tbs: u64) -> u64 {
    if tbs > 3824 {
        24
    } else {
        16
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationResult {
    pub base_graph: BaseGraph,
    /// Number of code blocks `C`.
    pub num_code_blocks: u64,
    /// Code block size `K`, the same for every block.
    pub code_block_size: u64,
    /// Lifting size `Z_c`.
    pub lifting_size: u64,
    /// Transport block plus its CRC, `B`.
    pub tb_with_crc: u64,
    /// CRC appended to each code block (0 when not segmented).
    pub per_cb_crc: u64,
}

impl SegmentationResult {
    /// `B'`: all bits carried by the code blocks before filler.
    pub fn total_payload(&self) -> u64 {
        self.tb_with_crc + self.num_code_blocks * self.per_cb_crc
    }
}

/// Columns of the systematic part used for lifting-size selection.
fn systematic_columns(bg: BaseGraph, tb_with_crc: u64) -> u64 {
    match bg {
        BaseGraph::Bg1 => 22,
        BaseGraph::Bg2 => match tb_with_crc {
            b if b > 640 => 10,
            b if b > 560 => 9,
            b if b > 192 => 8,
            _ => 6,
        },
    }
}

/// Segments with the default TBS cap.
pub fn segment(tbs: u64, base_graph: BaseGraph) -> Result<SegmentationResult> {
    segment_with_cap(tbs, base_graph, DEFAULT_MAX_TBS)
}

pub fn segment_with_cap(
    tbs: u64,
    base_graph: BaseGraph,
    max_tbs: u64,
) -> Result<SegmentationResult> {
    if tbs == 0 {
        return Err(Error::InvalidInput("TBS must be positive".into()));
    }
    if tbs > max_tbs {
        return Err(Error::UnsupportedSize { tbs, cap: max_tbs });
    }
    let b = tbs + tb_crc_length(tbs);
    let k_cb = base_graph.max_code_block();
    let (c, l) = if b <= k_cb {
        (1, 0)
    } else {
        (b.div_ceil(k_cb - CB_CRC_BITS), CB_CRC_BITS)
    };
    let b_prime = b + c * l;
    let k_prime = b_prime.div_ceil(c);
    let k_b = systematic_columns(base_graph, b);
    let z_c = *lifting_sizes()
        .iter()
        .find(|&&z| k_b * z >= k_prime)
        .ok_or(Error::UnsupportedSize { tbs, cap: max_tbs })?;
    let k = match base_graph {
        BaseGraph::Bg1 => 22 * z_c,
        BaseGraph::Bg2 => 10 * z_c,
    };
    Ok(SegmentationResult {
        base_graph,
        num_code_blocks: c,
        code_block_size: k,
        lifting_size: z_c,
        tb_with_crc: b,
        per_cb_crc: l,
    })
}

/// `1 - (1 - CBLER)^C`.
pub fn transport_bler(cbler: f64, num_code_blocks: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&cbler) {
        return Err(Error::InvalidInput(format!(
            "code BLER {cbler} outside [0, 1]"
        )));
    }
    if num_code_blocks == 0 {
        return Err(Error::InvalidInput("at least one code block".into()));
    }
    if num_code_blocks > 1024 {
        return Ok(-(num_code_blocks as f64 * (-cbler).ln_1p()).exp_m1());
    }
    // accumulate P(some block failed) one block at a time; exact for C = 1
    Ok((1..num_code_blocks).fold(cbler, |acc, _| acc + (1.0 - acc) * cbler))
}
