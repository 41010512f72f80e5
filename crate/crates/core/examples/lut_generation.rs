//! Builds a small synthetic LUT, saves it, reloads it and reads a few
//! values with the worst-case lookup rule.
//!
//! Run with `cargo run --example lut_generation`.

use nr_l2sm::lut::{generate_lut_with, BlerLut, SyntheticAwgn};
use nr_l2sm::tables::{McsKey, McsTableSet, TableId};
use nr_l2sm::Result;

fn main() -> Result<()> {
    let sinr: Vec<f64> = (0..=60).map(|i| -5.0 + 0.5 * i as f64).collect();
    let lut = generate_lut_with(
        &SyntheticAwgn::default(),
        McsTableSet::standard(),
        &[TableId::Table1],
        &[256, 1024, 8448],
        &sinr,
        7,
    )?;

    let path = std::env::temp_dir().join("nr_l2sm_example_lut.json");
    lut.save(&path)?;
    let lut = BlerLut::load(&path)?;
    println!(
        "saved and reloaded {} ({} MCS)",
        path.display(),
        lut.keys().count()
    );

    let key = McsKey::new(TableId::Table1, 13);
    for (cbs, sinr_db) in [
        (1024, 5.0),
        (1024, 6.3),
        (3000, 6.3),
        (100, 6.3),
        (8448, 7.0),
    ] {
        let hit = lut.lookup_cbler(key, cbs, sinr_db)?;
        println!(
            "{key} K={cbs:<5} SINR {sinr_db:4.1} dB -> curve K={:<5} CBLER {:.3e}{}",
            hit.curve_cbs,
            hit.cbler,
            if hit.cbs_fallback {
                " (below smallest curve)"
            } else {
                ""
            }
        );
    }
    Ok(())
}
