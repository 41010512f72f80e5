use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nr_l2sm::calibration::{
    calibrate_beta, AwgnReference, BetaSearch, CalibrationEnsemble, CurveReference,
    SyntheticReference,
};
use nr_l2sm::lut::{generate_lut_with, BlerLut, SyntheticAwgn, DEFAULT_CBS_GRID};
use nr_l2sm::sim::{
    emit_results, emit_trace, run_simulation, run_sweep, split_assignment, write_rows,
    OutputFormat, ResultRow, SimConfig,
};
use nr_l2sm::tables::{McsTableSet, TableId};
use nr_l2sm::{Error, Result};

#[derive(Parser)]
#[command(name = "nr-l2sm", version, about = "NR link-to-system mapping toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the link simulator, optionally over a sweep.
    Simulate(SimulateArgs),
    /// Fit the EESM beta of one MCS to an ensemble file.
    Calibrate(CalibrateArgs),
    /// Write a synthetic SINR-BLER lookup table.
    Genlut(GenlutArgs),
    /// Check a LUT, config or ensemble file.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a field, e.g. `--set mcs.index=20`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Sweep a field over values, e.g. `--sweep distance_m=10,30,50,70`.
    /// Repeat for a cross product.
    #[arg(long, value_name = "KEY=V1,V2,..")]
    sweep: Vec<String>,
    /// Replicate every row over this many consecutive seeds.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Per-packet CSV trace (single runs only).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long)]
    ensemble: PathBuf,
    /// AWGN reference LUT; the synthetic model when omitted.
    #[arg(long)]
    lut: Option<PathBuf>,
    /// Code block size of the reference curve.
    #[arg(long, default_value_t = 1024)]
    cbs: u64,
    #[arg(long, default_value_t = 0.1)]
    beta_min: f64,
    #[arg(long, default_value_t = 300.0)]
    beta_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    tolerance: f64,
    #[arg(long, default_value_t = 64)]
    grid_points: usize,
    /// Include the full search trace in the output.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct GenlutArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = -15.0, allow_hyphen_values = true)]
    sinr_min: f64,
    #[arg(long, default_value_t = 50.0)]
    sinr_max: f64,
    #[arg(long, default_value_t = 0.25)]
    sinr_step: f64,
    /// Comma-separated code block sizes.
    #[arg(long, value_delimiter = ',')]
    cbs: Option<Vec<u64>>,
    /// Comma-separated table ids; both tables when omitted.
    #[arg(long, value_delimiter = ',')]
    tables: Option<Vec<TableId>>,
    #[arg(long, default_value_t = 1.25)]
    kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma0_db: f64,
    #[arg(long, default_value_t = 0.5)]
    penalty_db: f64,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    lut: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ensemble: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Genlut(a) => genlut(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn expand_sweeps(base: SimConfig, sweeps: &[String]) -> Result<Vec<SimConfig>> {
    let mut configs = vec![base];
    for s in sweeps {
        let (key, values) = split_assignment(s)?;
        let values: Vec<&str> = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(Error::Config(format!("sweep `{key}` has no values")));
        }
        let mut next = Vec::with_capacity(configs.len() * values.len());
        for c in &configs {
            for v in &values {
                next.push(c.with_override(key, v)?);
            }
        }
        configs = next;
    }
    Ok(configs)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let mut base = match &a.config {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    };
    for o in &a.overrides {
        let (k, v) = split_assignment(o)?;
        base = base.with_override(k, v)?;
    }
    if a.seeds == 0 {
        return Err(Error::Config("--seeds must be at least 1".into()));
    }
    let mut configs = Vec::new();
    for c in expand_sweeps(base, &a.sweep)? {
        for i in 0..a.seeds {
            let mut r = c.clone();
            r.seed = c.seed.wrapping_add(i);
            configs.push(r);
        }
    }

    let rows = if configs.len() == 1 {
        let m = run_simulation(&configs[0])?;
        if let Some(t) = &a.trace {
            emit_trace(&m.trace, t)?;
        }
        vec![ResultRow::new(&configs[0], &m)]
    } else {
        if a.trace.is_some() {
            return Err(Error::Config("--trace needs a single run".into()));
        }
        let metrics = run_sweep(&configs);
        configs
            .iter()
            .zip(metrics)
            .map(|(c, m)| m.map(|m| ResultRow::new(c, &m)))
            .collect::<Result<Vec<_>>>()?
    };
    match &a.out {
        Some(p) => emit_results(&rows, a.format, p),
        None => write_rows(&rows, a.format, std::io::stdout().lock()),
    }
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let ensemble = CalibrationEnsemble::load(&a.ensemble)?;
    let tables = McsTableSet::standard();
    let entry = tables.get(ensemble.mcs)?;
    let reference: Box<dyn AwgnReference> = match &a.lut {
        Some(p) => Box::new(CurveReference::from_lut(
            &BlerLut::load(p)?,
            ensemble.mcs,
            a.cbs,
        )?),
        None => Box::new(SyntheticReference::new(entry, a.cbs)),
    };
    let search = BetaSearch {
        beta_min: a.beta_min,
        beta_max: a.beta_max,
        tolerance: a.tolerance,
        grid_points: a.grid_points,
    };
    let r = calibrate_beta(&ensemble, reference.as_ref(), &search)?;
    let mut out = json!({
        "mcs": ensemble.mcs,
        "beta_opt": r.beta_opt,
        "objective_value": r.objective_value,
        "at_boundary": r.at_boundary,
        "beta_insensitive": r.beta_insensitive,
        "floored_samples": r.floored_samples,
        "dropped_samples": r.dropped_samples,
        "realizations": ensemble.len(),
        "evaluations": r.search_trace.len(),
        "table_beta": entry.beta,
    });
    if a.trace {
        out["search_trace"] = json!(r.search_trace);
    }
    if r.at_boundary {
        eprintln!("warning: optimum on the search boundary");
    }
    if r.floored_samples > 0 {
        eprintln!(
            "warning: {} reference BLERs raised to the floor",
            r.floored_samples
        );
    }
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &out)?;
    writeln!(stdout)?;
    Ok(())
}

fn genlut(a: GenlutArgs) -> Result<()> {
    if !(a.sinr_step > 0.0 && a.sinr_max > a.sinr_min) {
        return Err(Error::Config(
            "SINR grid needs sinr_max > sinr_min and a positive step".into(),
        ));
    }
    let n = ((a.sinr_max - a.sinr_min) / a.sinr_step + 1e-9).floor() as usize;
    let sinr: Vec<f64> = (0..=n)
        .map(|i| a.sinr_min + a.sinr_step * i as f64)
        .collect();
    let cbs = a.cbs.unwrap_or_else(|| DEFAULT_CBS_GRID.to_vec());
    let table_ids = a.tables.unwrap_or_else(|| TableId::ALL.to_vec());
    let model = SyntheticAwgn {
        kappa: a.kappa,
        sigma0_db: a.sigma0_db,
        penalty_db: a.penalty_db,
    };
    let lut = generate_lut_with(
        &model,
        McsTableSet::standard(),
        &table_ids,
        &cbs,
        &sinr,
        a.seed,
    )?;
    lut.save(&a.out)?;
    eprintln!(
        "wrote {} MCS x {} CBS x {} SINR points to {}",
        lut.keys().count(),
        cbs.len(),
        sinr.len(),
        a.out.display()
    );
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<()> {
    if a.lut.is_none() && a.config.is_none() && a.ensemble.is_none() {
        return Err(Error::Config(
            "nothing to validate; pass --lut, --config or --ensemble".into(),
        ));
    }
    if let Some(p) = &a.lut {
        let lut = BlerLut::load(p)?;
        let tables = McsTableSet::standard();
        let missing: Vec<String> = tables
            .entries()
            .filter(|e| lut.curves(e.key()).is_err())
            .map(|e| e.key().to_string())
            .collect();
        println!(
            "{}: LUT ok, generator {}, {} MCS",
            p.display(),
            lut.provenance().generator,
            lut.keys().count()
        );
        if !missing.is_empty() {
            println!("  no curves for: {}", missing.join(", "));
        }
    }
    if let Some(p) = &a.config {
        let cfg = SimConfig::load(p)?;
        if let Some(l) = &cfg.lut_path {
            BlerLut::load(l)?;
        }
        println!(
            "{}: config ok, {} packets at {:.2} dB mean SNR",
            p.display(),
            cfg.traffic.packet_count(),
            cfg.snr_db()
        );
    }
    if let Some(p) = &a.ensemble {
        let e = CalibrationEnsemble::load(p)?;
        println!(
            "{}: ensemble ok, {} for {} realizations ({} dropped)",
            p.display(),
            e.mcs,
            e.len(),
            e.dropped()
        );
    }
    Ok(())
}
