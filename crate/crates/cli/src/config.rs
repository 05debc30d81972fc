//! Run configuration: built-in defaults, then an optional JSON file, then
//! command-line flags, each layer overriding the previous one.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use qaser_dyn::analysis::{SweepConfig, WIDE_WINDOW};
use qaser_dyn::model::{resonant_omega0, ModelParams, DEFAULT_COUPLING_RATIO, DEFAULT_DELTA, DEFAULT_NU_D};
use serde::Deserialize;

pub const CONFIG_ENV: &str = "QASER_DYN_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// envelope equations with counter-rotating terms
    Full,
    /// rotating-wave envelope equations
    Rwa,
    /// closed-form vacuum growth
    ClosedForm,
    /// integrated moment equations
    MomentOde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Envelope,
    Floquet,
    Pt,
    Sweep,
    Quantum,
    Check,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Simulate => "simulate",
            Command::Envelope => "envelope",
            Command::Floquet => "floquet",
            Command::Pt => "pt",
            Command::Sweep => "sweep",
            Command::Quantum => "quantum",
            Command::Check => "check",
        };
        f.write_str(s)
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Oscillator frequency ω₀
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega0: Option<f64>,
    /// Coupling constant Ω (default: ratio · ω₀)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub omega_coupling: Option<f64>,
    /// Modulation depth δ
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    /// Drive frequency ν_d
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub nu_d: Option<f64>,
    /// Ratio Ω/ω₀ used when Ω is not given, and across sweeps
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ratio: Option<f64>,
    /// End of the integration interval
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub t_end: Option<f64>,
    /// Integration step (default depends on the subcommand)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub dt: Option<f64>,
    /// Floquet truncation order N
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Fit window LO:HI
    #[arg(long, global = true, value_parser = parse_window)]
    pub window: Option<(f64, f64)>,
    /// Sweep range LO:HI:STEPS over ω₀
    #[arg(long, global = true, value_parser = parse_range)]
    pub range: Option<(f64, f64, usize)>,
    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    /// JSON configuration file (fallback: $QASER_DYN_CONFIG)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output path (default: stdout)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sweeps
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi] => {
            let lo: f64 = lo.parse().map_err(|e| format!("bad window start: {e}"))?;
            let hi: f64 = hi.parse().map_err(|e| format!("bad window end: {e}"))?;
            Ok((lo, hi))
        }
        _ => Err("expected LO:HI".into()),
    }
}

fn parse_range(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi, steps] => Ok((
            lo.parse().map_err(|e| format!("bad range start: {e}"))?,
            hi.parse().map_err(|e| format!("bad range end: {e}"))?,
            steps.parse().map_err(|e| format!("bad step count: {e}"))?,
        )),
        _ => Err("expected LO:HI:STEPS".into()),
    }
}

/// Keys accepted in a JSON configuration file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub omega0: Option<f64>,
    pub omega_coupling: Option<f64>,
    pub delta: Option<f64>,
    pub nu_d: Option<f64>,
    pub ratio: Option<f64>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub order: Option<usize>,
    pub window: Option<(f64, f64)>,
    pub range: Option<(f64, f64, usize)>,
    pub method: Option<Method>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
}

#[derive(Debug)]
pub enum ConfigError {
    Io(PathBuf, std::io::Error),
    Parse(PathBuf, serde_json::Error),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(p, e) => write!(f, "cannot read {}: {e}", p.display()),
            ConfigError::Parse(p, e) => write!(f, "invalid config {}: {e}", p.display()),
            ConfigError::Invalid(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for ConfigError {}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.into(), e))?;
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse(path.into(), e))
    }
}

/// Fully resolved and validated configuration for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub params: ModelParams,
    pub t_end: f64,
    pub dt: Option<f64>,
    pub order: usize,
    pub method: Option<Method>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub sweep: SweepConfig,
}

impl RunConfig {
    pub fn resolve(command: Command, cli: &CommonArgs, file: Option<FileConfig>) -> Result<Self, ConfigError> {
        let file = file.unwrap_or_default();
        macro_rules! pick {
            ($field:ident) => {
                cli.$field.clone().or(file.$field.clone())
            };
        }

        let invalid = |e: qaser_dyn::QaserError| ConfigError::Invalid(e.to_string());
        let ratio = pick!(ratio).unwrap_or(DEFAULT_COUPLING_RATIO);
        let delta = pick!(delta).unwrap_or(DEFAULT_DELTA);
        let nu_d = pick!(nu_d).unwrap_or(DEFAULT_NU_D);
        let omega0 = match pick!(omega0) {
            Some(w) => w,
            None => resonant_omega0(ratio, nu_d).map_err(invalid)?,
        };
        let omega_coupling = pick!(omega_coupling).unwrap_or(ratio * omega0);
        let params = ModelParams::new(omega0, omega_coupling, delta, nu_d)
            .map_err(invalid)?;

        let default_t_end = match command {
            Command::Floquet => 40.0,
            _ => 80.0,
        };
        let t_end = pick!(t_end).unwrap_or(default_t_end);
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(ConfigError::Invalid(format!("t_end must be positive, got {t_end}")));
        }
        let dt = pick!(dt);
        if let Some(dt) = dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(ConfigError::Invalid(format!("dt must be positive, got {dt}")));
            }
        }

        let method = pick!(method);
        let allowed: &[Method] = match command {
            Command::Envelope => &[Method::Full, Method::Rwa],
            Command::Quantum => &[Method::ClosedForm, Method::MomentOde],
            _ => &[],
        };
        if let Some(m) = method {
            if !allowed.contains(&m) {
                return Err(ConfigError::Invalid(format!(
                    "method {} does not apply to `{command}`",
                    m.to_possible_value().expect("no skipped variants").get_name()
                )));
            }
        }

        let format = pick!(format).unwrap_or(match command {
            Command::Floquet | Command::Pt | Command::Check => Format::Json,
            _ => Format::Csv,
        });

        let mut sweep = SweepConfig {
            ratio,
            delta,
            nu_d,
            dt,
            ..SweepConfig::default()
        };
        if let Some((lo, hi, steps)) = pick!(range) {
            sweep.omega0_lo = lo;
            sweep.omega0_hi = hi;
            sweep.steps = steps;
        }
        if let Some(w) = pick!(window) {
            sweep.window = w;
            sweep.wide_window = (w.0, w.1.max(WIDE_WINDOW.1));
        }
        sweep.jobs = pick!(jobs).unwrap_or(1);
        if command == Command::Sweep {
            sweep.validate().map_err(invalid)?;
        }

        Ok(Self {
            command,
            params,
            t_end,
            dt,
            order: pick!(order).unwrap_or(4),
            method,
            format,
            out: pick!(out),
            sweep,
        })
    }
}
