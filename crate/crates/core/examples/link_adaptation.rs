//! MCS chosen by the error-model and Shannon policies over an SNR sweep,
//! with the CQI each one reports.
//!
//! Run with `cargo run --example link_adaptation`.

use nr_l2sm::eesm::SinrSpectrum;
use nr_l2sm::error_model::{sim_rng, ErrorModel};
use nr_l2sm::fading::block_fading_gains;
use nr_l2sm::link_adaptation::{select_mcs_error_model, select_mcs_shannon, Allocation, ScanMode};
use nr_l2sm::lut::BlerLut;
use nr_l2sm::tables::{McsTableSet, TableId};
use nr_l2sm::{db_to_lin, Result};

fn main() -> Result<()> {
    let tables = McsTableSet::standard();
    let model = ErrorModel::new(tables, BlerLut::default_synthetic());
    let csi = Allocation::new(24, 12)?;
    let mut rng = sim_rng(3, 0);
    let gains = block_fading_gains(24, 4, &mut rng)?;

    println!("{:>6}  {:>14}  {:>14}", "SNR", "error model", "Shannon");
    for snr_db in (-5..=35).step_by(5) {
        let s = SinrSpectrum::new(gains.clone())?.scaled(db_to_lin(snr_db as f64))?;
        let em =
            select_mcs_error_model(&s, TableId::Table1, 0.1, &model, csi, ScanMode::EarlyExit)?;
        let sh = select_mcs_shannon(&s, TableId::Table1, tables)?;
        println!(
            "{snr_db:>4} dB  MCS{:<2} CQI {:<3}  MCS{:<2} CQI {:<3}",
            em.mcs_index, em.cqi, sh.mcs_index, sh.cqi
        );
    }
    Ok(())
}
