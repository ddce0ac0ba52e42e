//! `bkshoot`: integrate, shoot, sweep, verify and export EYM soliton orbits.
//!
//! Exit codes: 0 success, 1 checks failed or I/O error, 2 configuration
//! error, 3 integration failure, 4 invalid shooting bracket.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bkshoot_core::{
    find_lambda_bar_with, integrate_orbit_with, metric_report, sweep_with, theorem1_check_with,
    theorem2_check_with, verify_connection, ConnectionTolerances, CorruptedSystem, EymError, EymSystem,
    FlatnessTolerances, OrbitFate, RadialSystem, ShootingOptions, SolutionProfile, Theorem1Report,
    Theorem2Report, DEFAULT_BRACKET,
};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use config::{arithmetic_grid, parse_grid_list, ConfigError, Format, Layered, RunConfig, SharedArgs};
use output::{Report, SCHEMA_VERSION};

const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "bkshoot", version, about = "Shooting solver for SU(2) Einstein-Yang/Mills solitons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    shared: SharedArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one orbit for --lambda and write its profile.
    Integrate,
    /// Bisect for the connecting parameter on [--lo, --hi].
    Shoot,
    /// Classify orbit fates over a grid of λ values.
    Sweep(SweepArgs),
    /// Run the trapping and blow-up checks over their parameter ranges.
    Verify(VerifyArgs),
    /// Write profile CSV and JSON report into the --out directory.
    Export,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Explicit comma-separated grid; overrides --from/--to/--step.
    #[arg(long)]
    grid: Option<String>,
    /// Write a gnuplot script here, plus phase-portrait data next to it.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Flip the sign of the Φw' term (test hook).
    #[arg(long, hide = true)]
    corrupt_rhs: bool,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] EymError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("serialization failed: {0}")]
    Serialize(String),
    #[error("{0}")]
    ChecksFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                EymError::InvalidBracket { .. } => 4,
                EymError::Domain { .. }
                | EymError::InvalidConfig(_)
                | EymError::UnsupportedOrder(_)
                | EymError::IgnitionRadius(_) => 2,
                _ => 3,
            },
            CliError::Io { .. } | CliError::Serialize(_) | CliError::ChecksFailed(_) => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Serialize(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Serialize(e.to_string())
    }
}

/// Write through a sibling temp file so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_owned(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bkshoot: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (cfg, file) = RunConfig::resolve(&cli.shared)?;
    if let Some(n) = cfg.threads {
        // Only fails if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Integrate => integrate(&cfg),
        Command::Shoot => shoot(&cfg),
        Command::Sweep(args) => sweep(&cfg, &file, &args),
        Command::Verify(args) => {
            if args.corrupt_rhs {
                verify(&CorruptedSystem, &cfg)
            } else {
                verify(&EymSystem, &cfg)
            }
        }
        Command::Export => export(&cfg),
    }
}

fn out_path(cfg: &RunConfig, stem: &str, format: Format) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(format!("{stem}.{}", format.extension())))
}

#[derive(Serialize)]
struct ProfileExtra {
    profile: Vec<output::ProfileRow>,
}

fn profile_report(command: &str, cfg: &RunConfig, profile: &SolutionProfile) -> Result<Vec<u8>, CliError> {
    let connection = verify_connection(profile, &ConnectionTolerances::default()).ok();
    let metric = metric_report(profile, &FlatnessTolerances::default()).ok();
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command,
        config: cfg,
        fate: profile.fate,
        lambda: Some(profile.lambda),
        diagnostics: &profile.diagnostics,
        connection,
        metric,
        extra: ProfileExtra { profile: output::profile_rows(profile) },
    };
    Ok(output::to_json(&report)?)
}

fn integrate(cfg: &RunConfig) -> Result<(), CliError> {
    let lambda = cfg.lambda.ok_or(ConfigError::Missing("--lambda"))?;
    let format = cfg.format.unwrap_or(Format::Csv);
    let path = out_path(cfg, "bkshoot_integrate", format);
    let profile = integrate_orbit_with(&EymSystem, lambda, &cfg.integration)?;
    let bytes = match format {
        Format::Csv => output::profile_csv(&output::profile_rows(&profile))?,
        Format::Json => profile_report("integrate", cfg, &profile)?,
    };
    write_atomic(&path, &bytes)?;
    let d = &profile.diagnostics;
    println!(
        "lambda={lambda} fate={} nodes={} min_A={:.6e} steps={} out={}",
        profile.fate,
        d.node_count,
        d.min_a,
        d.accepted_steps,
        path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ShootingSummary<'a> {
    lambda_lo: f64,
    lambda_hi: f64,
    tol: f64,
    iterations: usize,
    polish_iterations: usize,
    fate_lo: OrbitFate,
    fate_hi: OrbitFate,
    history: &'a [bkshoot_core::shooting::BisectionStep],
}

#[derive(Serialize)]
struct ShootExtra<'a> {
    shooting: ShootingSummary<'a>,
}

fn shoot(cfg: &RunConfig) -> Result<(), CliError> {
    let lo = cfg.lo.unwrap_or(DEFAULT_BRACKET.0);
    let hi = cfg.hi.unwrap_or(DEFAULT_BRACKET.1);
    let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
    let format = cfg.format.unwrap_or(Format::Json);
    let path = out_path(cfg, "bkshoot_shoot", format);
    let res = find_lambda_bar_with(&EymSystem, lo, hi, tol, &cfg.integration, &ShootingOptions::default())?;
    let metric = metric_report(&res.profile, &FlatnessTolerances::default()).ok();
    let report = Report {
        schema_version: SCHEMA_VERSION,
        command: "shoot",
        config: cfg,
        fate: res.profile.fate,
        lambda: Some(res.lambda_bar),
        diagnostics: &res.profile.diagnostics,
        connection: &res.connection,
        metric: &metric,
        extra: ShootExtra {
            shooting: ShootingSummary {
                lambda_lo: res.lambda_lo,
                lambda_hi: res.lambda_hi,
                tol: res.tol,
                iterations: res.iterations,
                polish_iterations: res.polish_iterations,
                fate_lo: res.fate_lo,
                fate_hi: res.fate_hi,
                history: &res.history,
            },
        },
    };
    let json = output::to_json(&report)?;
    match format {
        Format::Json => write_atomic(&path, &json)?,
        Format::Csv => {
            // CSV carries the profile; the report goes alongside as JSON.
            write_atomic(&path, &output::profile_csv(&output::profile_rows(&res.profile))?)?;
            write_atomic(&path.with_extension("json"), &json)?;
        }
    }
    let passed = res.connection.as_ref().is_some_and(|c| c.passed);
    let mu = res.connection.as_ref().map(|c| c.mass.mu);
    println!(
        "lambda_bar={:.12} bracket=[{:.12}, {:.12}] iterations={}+{} fate={} mu={} connection={} out={}",
        res.lambda_bar,
        res.lambda_lo,
        res.lambda_hi,
        res.iterations,
        res.polish_iterations,
        res.profile.fate,
        mu.map(|m| format!("{m:.8}")).unwrap_or_else(|| "n/a".into()),
        if passed { "pass" } else { "fail" },
        path.display()
    );
    if passed {
        Ok(())
    } else {
        Err(CliError::ChecksFailed("connection checks failed at lambda_bar".into()))
    }
}

fn sweep(
    cfg: &RunConfig,
    file: &std::collections::BTreeMap<String, String>,
    args: &SweepArgs,
) -> Result<(), CliError> {
    let layer = Layered::new(file);
    let grid = match layer.get::<String>("grid", args.grid.clone())? {
        Some(list) => parse_grid_list(&list)?,
        None => {
            let from = layer.get("from", args.from)?.unwrap_or(0.1);
            let to = layer.get("to", args.to)?.unwrap_or(2.0);
            let step = layer.get("step", args.step)?.unwrap_or(0.1);
            arithmetic_grid(from, to, step)?
        }
    };
    if grid.is_empty() {
        return Err(ConfigError::Invalid("sweep grid is empty".into()).into());
    }
    let plot: Option<PathBuf> = layer.get("plot", args.plot.clone())?;
    if cfg.format == Some(Format::Json) && plot.is_some() {
        return Err(ConfigError::Invalid("--plot needs CSV sweep output".into()).into());
    }
    let format = cfg.format.unwrap_or(Format::Csv);
    let path = out_path(cfg, "bkshoot_sweep", format);
    let map = sweep_with(&EymSystem, &grid, &cfg.integration)?;

    let bytes = match format {
        Format::Csv => output::sweep_csv(&map)?,
        Format::Json => output::to_json(&serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "command": "sweep",
            "config": cfg,
            "entries": map.entries,
            "exit_transitions": map.exit_transitions(),
        }))?,
    };
    // Phase portraits for up to six evenly spaced grid points.
    let plot_files = match &plot {
        Some(script) => {
            let take = grid.len().min(6);
            let picks: Vec<f64> = (0..take).map(|i| grid[i * (grid.len() - 1) / (take - 1).max(1)]).collect();
            let profiles = picks
                .iter()
                .map(|&l| integrate_orbit_with(&EymSystem, l, &cfg.integration))
                .collect::<Result<Vec<_>, _>>()?;
            let phase = script.with_extension("phase.dat");
            Some((
                script.clone(),
                phase.clone(),
                output::plot_script(&path, &phase, &picks),
                output::phase_data(&profiles),
            ))
        }
        None => None,
    };
    write_atomic(&path, &bytes)?;
    if let Some((script, phase, text, data)) = plot_files {
        write_atomic(&phase, data.as_bytes())?;
        write_atomic(&script, text.as_bytes())?;
    }
    let failed = map.entries.iter().filter(|e| e.error.is_some()).count();
    println!(
        "points={} exit_transitions={} errors={failed} out={}",
        map.entries.len(),
        map.exit_transitions().len(),
        path.display()
    );
    for e in &map.entries {
        match (&e.fate, &e.error) {
            (Some(f), _) => println!("  {:>8.4}  {f}", e.lambda),
            (None, Some(err)) => println!("  {:>8.4}  error: {err}", e.lambda),
            _ => {}
        }
    }
    Ok(())
}

const THEOREM1_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
const THEOREM2_GRID: [f64; 4] = [2.1, 2.5, 3.0, 5.0];

#[derive(Serialize)]
struct VerifyReport {
    schema_version: u32,
    command: &'static str,
    passed: bool,
    trapping: Vec<Result<Theorem1Report, String>>,
    blow_up: Vec<Result<Theorem2Report, String>>,
}

fn verify<S: RadialSystem>(sys: &S, cfg: &RunConfig) -> Result<(), CliError> {
    use rayon::prelude::*;
    let trapping: Vec<_> = THEOREM1_GRID
        .par_iter()
        .map(|&l| theorem1_check_with(sys, l, &cfg.integration).map_err(|e| e.to_string()))
        .collect();
    let blow_up: Vec<_> = THEOREM2_GRID
        .par_iter()
        .map(|&l| theorem2_check_with(sys, l, &cfg.integration).map_err(|e| e.to_string()))
        .collect();

    println!("{:<10} {:>8}  {:<6} {:<40} detail", "check", "lambda", "result", "fate");
    let mut passed = true;
    for (l, r) in THEOREM1_GRID.iter().zip(&trapping) {
        passed &= print_row("trapping", *l, r.as_ref().map(|r| (r.passed, r.fate, r.detail.as_str())));
    }
    for (l, r) in THEOREM2_GRID.iter().zip(&blow_up) {
        passed &= print_row("blow-up", *l, r.as_ref().map(|r| (r.passed, r.fate, r.detail.as_str())));
    }
    if let Some(path) = &cfg.out {
        let report =
            VerifyReport { schema_version: SCHEMA_VERSION, command: "verify", passed, trapping, blow_up };
        write_atomic(path, &output::to_json(&report)?)?;
    }
    if passed {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::ChecksFailed("one or more checks failed".into()))
    }
}

fn print_row(name: &str, lambda: f64, r: Result<(bool, OrbitFate, &str), &String>) -> bool {
    match r {
        Ok((ok, fate, detail)) => {
            let fate = fate.to_string();
            println!("{name:<10} {lambda:>8.3}  {:<6} {fate:<40} {detail}", if ok { "PASS" } else { "FAIL" });
            ok
        }
        Err(e) => {
            println!("{name:<10} {lambda:>8.3}  {:<6} {:<40} {e}", "FAIL", "error");
            false
        }
    }
}

fn export(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("bkshoot_export"));
    let profile = match cfg.lambda {
        Some(l) => integrate_orbit_with(&EymSystem, l, &cfg.integration)?,
        None => {
            let lo = cfg.lo.unwrap_or(DEFAULT_BRACKET.0);
            let hi = cfg.hi.unwrap_or(DEFAULT_BRACKET.1);
            let tol = cfg.tol.unwrap_or(DEFAULT_TOL);
            find_lambda_bar_with(&EymSystem, lo, hi, tol, &cfg.integration, &ShootingOptions::default())?
                .profile
        }
    };
    let csv = output::profile_csv(&output::profile_rows(&profile))?;
    let json = profile_report("export", cfg, &profile)?;
    write_atomic(&dir.join("profile.csv"), &csv)?;
    write_atomic(&dir.join("report.json"), &json)?;
    println!("lambda={} fate={} out={}", profile.lambda, profile.fate, dir.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(ConfigError::Missing("--lambda")).exit_code(), 2);
        let bracket = EymError::InvalidBracket {
            lo: 2.1,
            hi: 2.5,
            fate_lo: Box::new(OrbitFate::RestPoint),
            fate_hi: Box::new(OrbitFate::RestPoint),
        };
        assert_eq!(CliError::Core(bracket).exit_code(), 4);
        assert_eq!(CliError::Core(EymError::StepLimit { max_steps: 1, r: 0.1 }).exit_code(), 3);
        assert_eq!(CliError::ChecksFailed(String::new()).exit_code(), 1);
    }

    #[test]
    fn hidden_flag_parses() {
        let cli = Cli::try_parse_from(["bkshoot", "verify", "--corrupt-rhs"]).unwrap();
        assert!(matches!(cli.command, Command::Verify(VerifyArgs { corrupt_rhs: true })));
        let help = Cli::command().render_long_help().to_string();
        assert!(!help.contains("corrupt"));
    }

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = std::env::temp_dir().join(format!("bkshoot-unit-{}", std::process::id()));
        let path = dir.join("x.txt");
        write_atomic(&path, b"hello").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"hello");
        assert!(!dir.join("x.txt.partial").exists());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
