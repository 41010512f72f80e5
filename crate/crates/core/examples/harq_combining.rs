//! How HARQ-CC and HARQ-IR change the predicted transport BLER across
//! retransmissions of one transport block.
//!
//! Run with `cargo run --example harq_combining`.

use nr_l2sm::eesm::{HarqHistory, HarqMethod, SinrSpectrum};
use nr_l2sm::error_model::ErrorModel;
use nr_l2sm::link_adaptation::{tbs_calculate, Allocation};
use nr_l2sm::lut::BlerLut;
use nr_l2sm::tables::{McsTableSet, TableId};
use nr_l2sm::{db_to_lin, Result};

fn main() -> Result<()> {
    let tables = McsTableSet::standard();
    let model = ErrorModel::new(tables, BlerLut::default_synthetic());
    let alloc = Allocation::new(16, 12)?;

    for (index, snr_db) in [(13u8, 4.0), (24, 12.0)] {
        let mcs = tables.mcs_lookup(TableId::Table1, index)?;
        let tbs = tbs_calculate(alloc, mcs)?;
        let coded = alloc.coded_bits(mcs);
        let attempt = SinrSpectrum::flat(db_to_lin(snr_db), alloc.n_rbs as usize)?;
        println!("Table1 MCS{index}, TBS {tbs} bits, flat {snr_db} dB per attempt");

        for method in [HarqMethod::Cc, HarqMethod::Ir] {
            let mut history = HarqHistory::new(method, tbs);
            for q in 1..=4 {
                let out = model.compute_tbler(&attempt, mcs.key(), tbs, &history, coded)?;
                println!(
                    "  {method:?} attempt {q}: SINR_eff {:5.2} dB, ECR {:.3}, TBLER {:.3e}",
                    out.sinr_eff_db,
                    *out.ecr_eff.numer() as f64 / *out.ecr_eff.denom() as f64,
                    out.tbler
                );
                history = model.record_attempt(&history, &attempt, mcs.key(), coded)?;
            }
        }
    }
    Ok(())
}
