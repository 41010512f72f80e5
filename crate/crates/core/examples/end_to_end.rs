//! A distance sweep with fixed and adaptive MCS, printed as CSV.
//!
//! Run with `cargo run --release --example end_to_end`.

use nr_l2sm::eesm::HarqMethod;
use nr_l2sm::sim::{run_sweep, write_rows, McsSelection, ResultRow, SimConfig};
use nr_l2sm::Result;

fn main() -> Result<()> {
    let mut configs = Vec::new();
    for (selection, harq) in [
        (McsSelection::Fixed, HarqMethod::Cc),
        (McsSelection::Fixed, HarqMethod::Ir),
        (McsSelection::Adaptive, HarqMethod::Ir),
    ] {
        for d in [10.0, 30.0, 50.0, 70.0] {
            let mut c = SimConfig::default().with_override("distance_m", &d.to_string())?;
            c.mcs.mode = selection;
            c.harq = harq;
            configs.push(c);
        }
    }
    let rows = configs
        .iter()
        .zip(run_sweep(&configs))
        .map(|(c, m)| m.map(|m| ResultRow::new(c, &m)))
        .collect::<Result<Vec<_>>>()?;
    write_rows(
        &rows,
        nr_l2sm::sim::OutputFormat::Csv,
        std::io::stdout().lock(),
    )
}
