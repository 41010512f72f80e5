//! Plants a β in a synthetic fading ensemble and recovers it.
//!
//! Run with `cargo run --release --example calibrate_beta`.

use nr_l2sm::calibration::{
    calibrate_beta, gen_fading_ensemble, BetaSearch, FadingSpec, MeasuredBler, SyntheticReference,
};
use nr_l2sm::tables::{McsTableSet, TableId};
use nr_l2sm::Result;

fn main() -> Result<()> {
    let tables = McsTableSet::standard();
    for index in [0u8, 13, 28] {
        let mcs = tables.mcs_lookup(TableId::Table1, index)?;
        let reference = SyntheticReference::new(mcs, 1024);
        let mu = reference
            .model
            .midpoint_db(mcs.modulation_order, mcs.ecr_value(), 1024);
        let noise: Vec<f64> = (0..5).map(|k| mu + 2.0 * k as f64).collect();
        let ensemble = gen_fading_ensemble(
            mcs,
            50,
            &noise,
            FadingSpec {
                n_rbs: 48,
                coherence_rbs: 4,
                seed: 11,
            },
            MeasuredBler::PlantedBeta(mcs.beta),
            &reference,
        )?;
        let r = calibrate_beta(&ensemble, &reference, &BetaSearch::default())?;
        println!(
            "Table1 MCS{index:<2}: planted {:7.2}, recovered {:7.3} ({} realizations, {} dropped, {} evaluations)",
            mcs.beta,
            r.beta_opt,
            ensemble.len(),
            ensemble.dropped(),
            r.search_trace.len()
        );
    }
    Ok(())
}
