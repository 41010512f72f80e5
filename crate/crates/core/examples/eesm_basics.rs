//! Effective SINR of a frequency-selective allocation for a few β values.
//!
//! Run with `cargo run --example eesm_basics`.

use nr_l2sm::eesm::{effective_sinr, SinrSpectrum};
use nr_l2sm::tables::{McsTableSet, TableId};
use nr_l2sm::{lin_to_db, Result};

fn main() -> Result<()> {
    // one deep fade among otherwise good RBs
    let spectrum = SinrSpectrum::from_db(&[18.0, 17.5, 16.0, 2.0, 15.0, 19.0, 18.5, 17.0])?;
    println!(
        "per-RB SINR: min {:.2} dB, mean {:.2} dB, max {:.2} dB",
        lin_to_db(spectrum.min()),
        lin_to_db(spectrum.mean()),
        lin_to_db(spectrum.max())
    );

    let tables = McsTableSet::standard();
    for index in [0, 9, 13, 20, 28] {
        let mcs = tables.mcs_lookup(TableId::Table1, index)?;
        let eff = effective_sinr(&spectrum, mcs.beta)?;
        println!(
            "Table1 MCS{index:<2} (Qm {}, beta {:>6.2}): effective SINR {:6.2} dB",
            mcs.modulation_order,
            mcs.beta,
            lin_to_db(eff)
        );
    }
    Ok(())
}
