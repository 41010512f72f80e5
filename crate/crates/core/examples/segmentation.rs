//! Base graph selection and code block segmentation for a range of
//! transport block sizes.
//!
//! Run with `cargo run --example segmentation`.

use nr_l2sm::segmentation::{segment, select_base_graph, transport_bler};
use nr_l2sm::tables::CodeRate;
use nr_l2sm::Result;

fn main() -> Result<()> {
    let rate = CodeRate::new(490, 1024);
    println!(
        "{:>8} {:>4} {:>4} {:>6} {:>5}  TBLER at CBLER 1%",
        "TBS", "BG", "C", "K", "Zc"
    );
    for tbs in [24, 292, 1000, 3824, 3825, 10_000, 50_000, 200_000] {
        let bg = select_base_graph(tbs, rate)?;
        let s = segment(tbs, bg)?;
        println!(
            "{tbs:>8} {:>4} {:>4} {:>6} {:>5}  {:.4}",
            s.base_graph.to_string(),
            s.num_code_blocks,
            s.code_block_size,
            s.lifting_size,
            transport_bler(0.01, s.num_code_blocks)?
        );
    }
    Ok(())
}
