//! Exponential-rate fitting and the gain-versus-ω₀ sweep.

use std::io::{self, Write};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;

use crate::classical::{default_dt_full, envelope_amplitude_trace, OscillatorState, SEED_AMPLITUDE};
use crate::error::{QaserError, Result};
use crate::model::{
    derive_normal_modes, pt_parameters, resonance_detuning, resonant_omega0, ModelParams,
    DEFAULT_COUPLING_RATIO, DEFAULT_DELTA, DEFAULT_NU_D,
};
use crate::ode::{format_float, TimeGrid, TimeSeries};

pub const MIN_FIT_SAMPLES: usize = 10;

/// Default fit window, after the beat transient.
pub const DEFAULT_WINDOW: (f64, f64) = (20.0, 80.0);
/// Window used for points far enough off resonance that growth beats.
pub const WIDE_WINDOW: (f64, f64) = (20.0, 120.0);
pub const WIDE_WINDOW_DETUNING: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainEstimate {
    pub rate: f64,
    pub intercept: f64,
    pub residual: f64,
    pub window: (f64, f64),
}

/// Ordinary least squares `y ≈ slope·x + intercept`. Returns
/// `(slope, intercept, rms residual)`.
pub fn least_squares_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() {
        return Err(QaserError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(QaserError::FitFailure(format!(
            "need at least two points, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    // means relative to the first sample; exact for constant data
    let mx = x[0] + x.iter().map(|v| v - x[0]).sum::<f64>() / n;
    let my = y[0] + y.iter().map(|v| v - y[0]).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        sxx += dx * dx;
        sxy += dx * (yi - my);
    }
    if sxx == 0.0 {
        return Err(QaserError::FitFailure("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| (yi - (slope * xi + intercept)).powi(2))
        .sum();
    Ok((slope, intercept, (ss / n).sqrt()))
}

/// Least-squares slope of `ln|value|` against t for samples inside
/// `[t_lo, t_hi]`.
pub fn fit_exponential_rate(series: &TimeSeries, column: &str, window: (f64, f64)) -> Result<GainEstimate> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(QaserError::FitFailure(format!("empty window [{lo}, {hi}]")));
    }
    let idx = series.column_index(column)?;
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (t, row) in series.times().iter().zip(series.rows()) {
        if *t < lo || *t > hi {
            continue;
        }
        let v = row[idx].abs();
        if !(v > 0.0) || !v.is_finite() {
            return Err(QaserError::FitFailure(format!(
                "column `{column}` is {} at t = {t}",
                row[idx]
            )));
        }
        ts.push(*t);
        logs.push(v.ln());
    }
    if ts.len() < MIN_FIT_SAMPLES {
        return Err(QaserError::FitFailure(format!(
            "{} samples in window [{lo}, {hi}], need {MIN_FIT_SAMPLES}",
            ts.len()
        )));
    }
    let (rate, intercept, residual) = least_squares_line(&ts, &logs)?;
    Ok(GainEstimate {
        rate,
        intercept,
        residual,
        window,
    })
}

/// Integrates the φ equations from `initial` up to the end of `window` and
/// fits the rate of `√(|α|² + |β|²)`.
pub fn direct_gain(
    params: &ModelParams,
    initial: &OscillatorState,
    window: (f64, f64),
    dt: Option<f64>,
) -> Result<GainEstimate> {
    let modes = derive_normal_modes(params)?;
    let grid = TimeGrid::new(0.0, window.1, dt.unwrap_or_else(|| default_dt_full(&modes)))?;
    let trace = envelope_amplitude_trace(params, initial, &grid)?;
    fit_exponential_rate(&trace, "amplitude", window)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub omega0_lo: f64,
    pub omega0_hi: f64,
    pub steps: usize,
    /// Ω/ω₀, held fixed across the sweep
    pub ratio: f64,
    pub delta: f64,
    pub nu_d: f64,
    /// φ₁(0); everything else starts at rest
    pub seed: f64,
    pub window: (f64, f64),
    pub wide_window: (f64, f64),
    pub wide_window_detuning: f64,
    /// Overrides the per-point default step `2π/(64ω₂)`.
    pub dt: Option<f64>,
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            omega0_lo: 6.5,
            omega0_hi: 9.5,
            steps: 61,
            ratio: DEFAULT_COUPLING_RATIO,
            delta: DEFAULT_DELTA,
            nu_d: DEFAULT_NU_D,
            seed: SEED_AMPLITUDE,
            window: DEFAULT_WINDOW,
            wide_window: WIDE_WINDOW,
            wide_window_detuning: WIDE_WINDOW_DETUNING,
            dt: None,
            jobs: 1,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0_lo > 0.0 && self.omega0_hi > self.omega0_lo) {
            return Err(QaserError::Domain(format!(
                "sweep range must satisfy 0 < lo < hi (got {}..{})",
                self.omega0_lo, self.omega0_hi
            )));
        }
        if self.steps < 2 {
            return Err(QaserError::Domain("sweep needs at least 2 points".into()));
        }
        if self.jobs == 0 {
            return Err(QaserError::Domain("jobs must be at least 1".into()));
        }
        for (lo, hi) in [self.window, self.wide_window] {
            if !(lo >= 0.0 && hi > lo) {
                return Err(QaserError::Domain(format!("invalid fit window [{lo}, {hi}]")));
            }
        }
        // validates ratio, delta, nu_d
        ModelParams::new(self.omega0_lo, self.ratio * self.omega0_lo, self.delta, self.nu_d)?;
        Ok(())
    }

    pub fn omega0_at(&self, k: usize) -> f64 {
        if k + 1 == self.steps {
            self.omega0_hi
        } else {
            self.omega0_lo + (self.omega0_hi - self.omega0_lo) * k as f64 / (self.steps - 1) as f64
        }
    }

    /// ω₀ of exact resonance for this sweep's ratio and drive.
    pub fn resonant_omega0(&self) -> Result<f64> {
        resonant_omega0(self.ratio, self.nu_d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub omega0: f64,
    pub fitted_rate: f64,
    pub analytic_lambda: f64,
    pub detuning: f64,
    pub residual: f64,
    /// Set when the point's integration or fit failed; rate and residual
    /// are then NaN.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_HEADER: &str = "omega0,fitted_rate,analytic_lambda,detuning,residual";

impl SweepResult {
    /// Row with the largest finite fitted rate.
    pub fn peak(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.fitted_rate.is_finite())
            .max_by(|a, b| a.fitted_rate.total_cmp(&b.fitted_rate))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{SWEEP_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                format_float(r.omega0),
                format_float(r.fitted_rate),
                format_float(r.analytic_lambda),
                format_float(r.detuning),
                format_float(r.residual)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

fn sweep_point(cfg: &SweepConfig, omega0: f64) -> Result<SweepRow> {
    let params = ModelParams::new(omega0, cfg.ratio * omega0, cfg.delta, cfg.nu_d)?;
    let analytic_lambda = pt_parameters(&params)?.lambda;
    let detuning = resonance_detuning(&params)?;
    let window = if detuning.abs() > cfg.wide_window_detuning {
        cfg.wide_window
    } else {
        cfg.window
    };
    let initial = OscillatorState {
        phi1: cfg.seed,
        ..Default::default()
    };
    let row = match direct_gain(&params, &initial, window, cfg.dt) {
        Ok(fit) => SweepRow {
            omega0,
            fitted_rate: fit.rate,
            analytic_lambda,
            detuning,
            residual: fit.residual,
            error: None,
        },
        Err(e) => SweepRow {
            omega0,
            fitted_rate: f64::NAN,
            analytic_lambda,
            detuning,
            residual: f64::NAN,
            error: Some(e.to_string()),
        },
    };
    Ok(row)
}

/// Fits the envelope growth rate at every ω₀ of the sweep. Rows come back
/// in ω₀ order regardless of `jobs`.
pub fn sweep_gain(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let n = cfg.steps;
    let mut rows: Vec<Option<Result<SweepRow>>> = (0..n).map(|_| None).collect();
    if cfg.jobs == 1 {
        for (k, slot) in rows.iter_mut().enumerate() {
            *slot = Some(sweep_point(cfg, cfg.omega0_at(k)));
        }
    } else {
        let next = AtomicUsize::new(0);
        let results: Vec<Vec<(usize, Result<SweepRow>)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.jobs.min(n))
                .map(|_| {
                    scope.spawn(|| {
                        let mut local = Vec::new();
                        loop {
                            let k = next.fetch_add(1, Ordering::Relaxed);
                            if k >= n {
                                break local;
                            }
                            local.push((k, sweep_point(cfg, cfg.omega0_at(k))));
                        }
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep worker panicked"))
                .collect()
        });
        for (k, r) in results.into_iter().flatten() {
            rows[k] = Some(r);
        }
    }
    let rows = rows
        .into_iter()
        .map(|r| r.expect("every sweep point evaluated"))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { rows })
}
