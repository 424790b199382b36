use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use loadaudit::audit::AuditConfig;
use loadaudit::error::{Error, Result};
use loadaudit::io::{parse_timestamp, read_dataset_from, read_report, write_dataset};
use loadaudit::tables::report_tables;
use loadaudit_core::report::Suite;
use loadaudit_core::surrogate::{generate_split, generate_synthetic_under, offset_temperatures, synthetic_stations, SurrogateConfig, TemperatureModel};
use loadaudit_core::Timestamp;

const OUT_ENV: &str = "LOADAUDIT_OUT";
const DEFAULT_OUT: &str = "loadaudit-out";

/// Audit synthetic load-curve datasets for fidelity, utility, privacy and
/// thermo-sensitivity.
#[derive(Debug, Parser)]
#[command(name = "loadaudit", version, after_help = "Output goes to --out, else the config's out_dir, else $LOADAUDIT_OUT, else ./loadaudit-out.")]
struct Cli {
    /// Root seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated suites to run: fidelity, utility, privacy, thermo.
    #[arg(long, global = true, value_delimiter = ',')]
    suites: Option<Vec<Suite>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the audit described by a JSON config.
    Audit { config: PathBuf },
    /// Check datasets against the input contract and list every violation.
    Validate {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
    },
    /// Write surrogate train/test/synthetic fixtures and a matching audit config.
    GenSurrogate {
        #[arg(long, default_value_t = 100)]
        curves: usize,
        #[arg(long, default_value_t = 28)]
        days: usize,
        /// First slot of the window, e.g. 2021-01-04T00:00:00.
        #[arg(long, default_value = "2021-01-04T00:00:00", value_parser = parse_timestamp)]
        start: Timestamp,
        #[arg(long, default_value_t = 3)]
        stations: usize,
        /// Also write the synthetic set regenerated with temperatures shifted by this many degrees.
        #[arg(long, allow_negative_numbers = true)]
        offset: Option<f64>,
    },
    /// Render CSV tables from a JSON report.
    ReportTables { report: PathBuf },
}

fn out_dir(cli: &Option<PathBuf>, config: Option<&PathBuf>) -> PathBuf {
    cli.clone()
        .or_else(|| config.cloned())
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn audit(cli: &Cli, path: &Path) -> Result<()> {
    let mut cfg = AuditConfig::read(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(suites) = &cli.suites {
        cfg.suites = suites.clone();
    }
    let dir = out_dir(&cli.out, cfg.out_dir.as_ref());
    loadaudit::run_and_write(&cfg, &dir)?;
    println!("{}", dir.join("report.json").display());
    Ok(())
}

fn validate(manifests: &[PathBuf]) -> Result<()> {
    let mut first_err = None;
    for m in manifests {
        match read_dataset_from(m) {
            Ok(ds) => println!("{}: ok ({} curves, {} days)", m.display(), ds.len(), ds.window.n_days),
            Err(Error::Validation(violations)) => {
                println!("{}: {} violation(s)", m.display(), violations.len());
                for v in &violations {
                    println!("  {v}");
                }
                first_err.get_or_insert(Error::Validation(violations));
            }
            Err(e) => {
                println!("{}: {e}", m.display());
                first_err.get_or_insert(e);
            }
        }
    }
    first_err.map_or(Ok(()), Err)
}

fn gen_surrogate(cli: &Cli, curves: usize, days: usize, start: Timestamp, stations: usize, offset: Option<f64>) -> Result<()> {
    if stations == 0 {
        return Err(Error::Config("at least one station is needed".into()));
    }
    let seed = cli.seed.unwrap_or(0);
    let dir = out_dir(&cli.out, None);
    let cfg = SurrogateConfig { n_curves: curves, n_days: days, start, seed, ..Default::default() };
    let temps = synthetic_stations(stations, cfg.window(), &TemperatureModel::default(), seed);
    let (train, test, synth) = generate_split(&cfg, &temps)?;
    for (ds, stem) in [(&train, "train"), (&test, "test"), (&synth, "synthetic")] {
        write_dataset(ds, &dir, stem)?;
    }
    let mut config = serde_json::json!({
        "train": "train.manifest.json",
        "test": "test.manifest.json",
        "synthetic": "synthetic.manifest.json",
        "seed": seed,
    });
    if let Some(delta) = offset {
        let shifted = generate_synthetic_under(&cfg, &offset_temperatures(&temps, delta))?;
        write_dataset(&shifted, &dir, "synthetic_offset")?;
        config["synthetic_offset"] = "synthetic_offset.manifest.json".into();
    }
    let path = dir.join("audit.json");
    let text = serde_json::to_string_pretty(&config).expect("json value serializes");
    std::fs::write(&path, text + "\n").map_err(|e| Error::Io { path: path.clone(), source: e })?;
    println!("{}", path.display());
    Ok(())
}

fn render_tables(cli: &Cli, report: &Path) -> Result<()> {
    let r = read_report(report)?;
    let dir = cli.out.clone().unwrap_or_else(|| report.parent().unwrap_or(Path::new(".")).to_path_buf());
    for t in report_tables(&r) {
        t.write(&dir)?;
        println!("{}", dir.join(&t.name).display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Audit { config } => audit(cli, config),
        Command::Validate { manifests } => validate(manifests),
        Command::GenSurrogate { curves, days, start, stations, offset } => gen_surrogate(cli, *curves, *days, *start, *stations, *offset),
        Command::ReportTables { report } => render_tables(cli, report),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
