use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lclt_core::cumulants::CumulantRecord;
use lclt_core::density::UniformGrid;
use lclt_core::fgn::{fgn_sample, CovarianceModel};
use lclt_core::rates::{
    cumulant_records, cumulant_slopes, density_distances, distance_slopes, point_seed, run_rate_experiment,
    write_cumulants_csv, write_distances_csv, write_slopes_csv, ExperimentConfig, SlopeRow,
};
use lclt_core::verify::{verify_suite, Level};

/// Numerical laboratory for rates in the fourth-moment local limit theorem.
#[derive(Parser)]
#[command(name = "lclt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite.
    Verify {
        #[arg(long, default_value = "fast")]
        level: Level,
        /// Directory for summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write simulated fGn paths for every n in the grid.
    Simulate(RunArgs),
    /// Cumulant records and their slope fits.
    Cumulants(RunArgs),
    /// Exact density distances for m = 2.
    Density(RunArgs),
    /// Full rate experiment.
    Rates(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = ExperimentConfig::load(&self.config)
            .with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        let Some(dir) = cfg.output_dir.clone() else {
            bail!("no output directory: pass --out or set output_dir");
        };
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok((cfg, dir))
    }
}

fn print_slopes(rows: &[SlopeRow]) -> bool {
    for r in rows {
        println!(
            "[{}] {}: slope {:.4} (stderr {:.2e}), predicted {:.4}{} tol {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.quantity,
            r.fit.slope,
            r.fit.stderr,
            r.predicted.exponent,
            if r.predicted.log_power != 0 { format!(" after log^{} removal,", r.predicted.log_power) } else { ",".into() },
            r.tolerance
        );
    }
    rows.iter().all(|r| r.passed)
}

fn verify(level: Level, out: Option<&Path>) -> Result<bool> {
    let report = verify_suite(level);
    for c in &report.checks {
        println!("{}", c.line());
    }
    println!("{:?} suite {} in {:.1}s", level, if report.passed { "passed" } else { "failed" }, report.elapsed_secs);
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(fs::File::create(dir.join("summary.json"))?);
        serde_json::to_writer_pretty(&mut w, &report)?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(report.passed)
}

fn simulate(args: &RunArgs) -> Result<bool> {
    let (cfg, dir) = args.load()?;
    let model = CovarianceModel::fgn(cfg.hurst)?;
    for &n in &cfg.n_grid {
        let batch = fgn_sample(&model, n, cfg.paths, point_seed(cfg.seed, n))?;
        let path = dir.join(format!("paths_n{n}.csv"));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        batch.write_csv(&mut w)?;
        w.flush()?;
        log::info!("wrote {} paths to {}", cfg.paths, path.display());
    }
    Ok(true)
}

fn cumulants(args: &RunArgs) -> Result<bool> {
    let (cfg, dir) = args.load()?;
    let records = cumulant_records(&cfg)?;
    write_cumulants_csv(&records, &dir)?;
    let slopes = cumulant_slopes(&cfg, &records)?;
    write_slopes_csv(&slopes, &dir)?;
    Ok(print_slopes(&slopes))
}

fn write_curves(dir: &Path, record: &CumulantRecord, curves: &[lclt_core::density::DensityCurve]) -> Result<()> {
    for c in curves {
        let path = dir.join(format!("density_n{}_j{}.csv", record.n, c.deriv_order));
        let mut w = BufWriter::new(fs::File::create(path)?);
        c.write_csv(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn density(args: &RunArgs) -> Result<bool> {
    let (cfg, dir) = args.load()?;
    if cfg.m != 2 {
        bail!("exact densities need m = 2, got m = {}", cfg.m);
    }
    let records = cumulant_records(&cfg)?;
    let grid = UniformGrid::standard();
    let mut rows = Vec::new();
    for r in records.iter().filter(|r| r.n <= cfg.density_cap) {
        let (curves, mut point_rows) = density_distances(&cfg, r, grid)?;
        write_curves(&dir, r, &curves)?;
        rows.append(&mut point_rows);
    }
    write_distances_csv(&rows, &dir)?;
    let slopes = distance_slopes(&cfg, &rows)?;
    write_slopes_csv(&slopes, &dir)?;
    Ok(print_slopes(&slopes))
}

fn rates(args: &RunArgs) -> Result<bool> {
    let (mut cfg, dir) = args.load()?;
    cfg.output_dir = Some(dir);
    let report = run_rate_experiment(&cfg)?;
    for f in &report.flags {
        println!("[FLAG] {f}");
    }
    Ok(print_slopes(&report.slopes) && report.passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Verify { level, out } => verify(*level, out.as_deref()),
        Command::Simulate(a) => simulate(a),
        Command::Cumulants(a) => cumulants(a),
        Command::Density(a) => density(a),
        Command::Rates(a) => rates(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
