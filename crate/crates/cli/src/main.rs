mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::warn;
use qaser_dyn::analysis::sweep_gain;
use qaser_dyn::checks::{check_names, run_check_suite, CheckConfig, Fault};
use qaser_dyn::classical::{
    default_dt_envelope, default_dt_full, integrate_envelope, phi_to_envelope, simulate,
    with_envelope_magnitudes, OscillatorState,
};
use qaser_dyn::floquet::{build_floquet_matrix, component_dt, reconstructed_trajectory, resonance_warning, FloquetState};
use qaser_dyn::model::derive_normal_modes;
use qaser_dyn::ode::format_float;
use qaser_dyn::pt::pt_report;
use qaser_dyn::quantum::{default_grid, vacuum_growth_comparison, vacuum_growth_curve, GrowthMethod};
use qaser_dyn::{QaserError, TimeGrid, TimeSeries};

use config::{Command, CommonArgs, ConfigError, FileConfig, Format, Method, RunConfig, CONFIG_ENV};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "qaser-dyn", version, about = "Driven coupled-oscillator gain simulations")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Integrate the oscillator equations from the seed state
    Simulate,
    /// Integrate the slowly varying envelopes (--method full|rwa)
    Envelope,
    /// Dump the Floquet component matrix, or its reconstructed trajectory with --format csv
    Floquet,
    /// Report gain, coupling and PT phase of the reduced Hamiltonian
    Pt,
    /// Sweep ω₀ and fit the envelope growth rate at each point
    Sweep,
    /// Vacuum growth of the spontaneous-emission moments
    Quantum,
    /// Run the built-in consistency checks
    Check {
        /// Print the check names without running them
        #[arg(long)]
        list: bool,
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FaultArg {
    FlipCouplingSign,
}

#[derive(Debug)]
enum CliError {
    Config(ConfigError),
    Model(QaserError),
    Io(PathBuf, io::Error),
    ChecksFailed(Vec<&'static str>),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(..) => EXIT_USAGE,
            CliError::ChecksFailed(_) => EXIT_CHECK_FAILED,
            CliError::Model(e) => match e {
                QaserError::NonFinite { .. }
                | QaserError::FitFailure(_)
                | QaserError::NonConvergence { .. } => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "cannot write {}: {e}", p.display()),
            CliError::ChecksFailed(names) => write!(f, "failing checks: {}", names.join(", ")),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<QaserError> for CliError {
    fn from(e: QaserError) -> Self {
        CliError::Model(e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let command = match &cli.command {
        Sub::Simulate => Command::Simulate,
        Sub::Envelope => Command::Envelope,
        Sub::Floquet => Command::Floquet,
        Sub::Pt => Command::Pt,
        Sub::Sweep => Command::Sweep,
        Sub::Quantum => Command::Quantum,
        Sub::Check { .. } => Command::Check,
    };
    let config_path = cli
        .common
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let file = config_path.as_deref().map(FileConfig::load).transpose()?;
    let cfg = RunConfig::resolve(command, &cli.common, file)?;
    for w in cfg.params.warnings() {
        warn!("{w}");
    }

    let output = match cli.command {
        Sub::Check { list: true, .. } => {
            let mut s = String::new();
            for name in check_names() {
                s.push_str(name);
                s.push('\n');
            }
            s
        }
        Sub::Check { inject_fault, .. } => {
            // the suite probes off-nominal parameters on purpose
            log::set_max_level(log::LevelFilter::Error);
            let report = run_check_suite(&CheckConfig {
                fault: inject_fault.map(|FaultArg::FlipCouplingSign| Fault::FlipCouplingSign),
            });
            emit(&cfg, &report.to_json())?;
            if !report.all_passed {
                return Err(CliError::ChecksFailed(report.failing()));
            }
            return Ok(());
        }
        _ => render(&cfg)?,
    };
    emit(&cfg, &output)
}

fn render(cfg: &RunConfig) -> Result<String, CliError> {
    let params = &cfg.params;
    let modes = derive_normal_modes(params)?;
    let seed = OscillatorState::seed();
    Ok(match cfg.command {
        Command::Simulate => {
            let grid = TimeGrid::new(0.0, cfg.t_end, cfg.dt.unwrap_or_else(|| default_dt_full(&modes)))?;
            series_output(&simulate(params, &seed, &grid)?, cfg.format)
        }
        Command::Envelope => {
            let grid = TimeGrid::new(0.0, cfg.t_end, cfg.dt.unwrap_or_else(|| default_dt_envelope(params.nu_d)))?;
            let keep = cfg.method != Some(Method::Rwa);
            let initial = phi_to_envelope(&seed, 0.0, &modes);
            let series = integrate_envelope(params, &initial, &grid, keep)?;
            series_output(&with_envelope_magnitudes(&series)?, cfg.format)
        }
        Command::Floquet => {
            if let Some(w) = resonance_warning(params)? {
                warn!("{w}");
            }
            let matrix = build_floquet_matrix(params, cfg.order)?;
            match cfg.format {
                Format::Json => json_string(&matrix.dump()),
                Format::Csv => {
                    let grid = TimeGrid::new(0.0, cfg.t_end, cfg.dt.unwrap_or_else(|| component_dt(&matrix)))?;
                    let e = phi_to_envelope(&seed, 0.0, &modes);
                    let initial = FloquetState::base(cfg.order, e.alpha, e.beta);
                    let series = reconstructed_trajectory(&matrix, &initial, &grid)?;
                    with_envelope_magnitudes(&series)?.to_csv_string()
                }
            }
        }
        Command::Pt => {
            let report = pt_report(params)?;
            match cfg.format {
                Format::Json => json_string(&report),
                Format::Csv => flat_csv(&serde_json::to_value(&report).expect("report serializes")),
            }
        }
        Command::Sweep => {
            let result = sweep_gain(&cfg.sweep)?;
            for row in &result.rows {
                if let Some(e) = &row.error {
                    warn!("omega0 = {}: {e}", row.omega0);
                }
            }
            match cfg.format {
                Format::Csv => result.to_csv_string(),
                Format::Json => json_string(&result),
            }
        }
        Command::Quantum => {
            let grid = match cfg.dt {
                Some(dt) => TimeGrid::new(0.0, cfg.t_end, dt)?,
                None => default_grid(params, cfg.t_end)?,
            };
            let series = match cfg.method {
                None => vacuum_growth_comparison(params, &grid)?,
                Some(Method::MomentOde) => vacuum_growth_curve(params, &grid, GrowthMethod::MomentOde)?,
                Some(_) => vacuum_growth_curve(params, &grid, GrowthMethod::ClosedForm)?,
            };
            series_output(&series, cfg.format)
        }
        Command::Check => unreachable!("handled by run"),
    })
}

fn series_output(series: &TimeSeries, format: Format) -> String {
    match format {
        Format::Csv => series.to_csv_string(),
        Format::Json => {
            let mut columns = vec!["t".to_string()];
            columns.extend(series.labels().iter().cloned());
            let rows: Vec<Vec<f64>> = series
                .times()
                .iter()
                .zip(series.rows())
                .map(|(t, r)| std::iter::once(*t).chain(r.iter().copied()).collect())
                .collect();
            json_string(&serde_json::json!({ "columns": columns, "rows": rows }))
        }
    }
}

fn json_string<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

/// One-row CSV from a flat JSON object; array fields are spread as `key_i`.
fn flat_csv(value: &serde_json::Value) -> String {
    let mut header = Vec::new();
    let mut row = Vec::new();
    fn cell(v: &serde_json::Value) -> String {
        match v {
            serde_json::Value::Number(n) => format_float(n.as_f64().unwrap_or(f64::NAN)),
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
    fn walk(key: &str, v: &serde_json::Value, header: &mut Vec<String>, row: &mut Vec<String>) {
        match v {
            serde_json::Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    walk(&format!("{key}_{i}"), item, header, row);
                }
            }
            _ => {
                header.push(key.to_string());
                row.push(cell(v));
            }
        }
    }
    if let serde_json::Value::Object(map) = value {
        for (k, v) in map {
            walk(k, v, &mut header, &mut row);
        }
    }
    format!("{}\n{}\n", header.join(","), row.join(","))
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => {
            let io_err = |e| CliError::Io(path.clone(), e);
            let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
            w.write_all(text.as_bytes()).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e))
        }
    }
}
