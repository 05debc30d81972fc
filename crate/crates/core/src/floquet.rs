//! Truncated Floquet-component system of the rotating-wave envelope
//! equations at combination resonance.
//!
//! Writing `α = Σₙ αₙ e^{inν_d t}` and `β = Σₙ βₙ e^{inν_d t}` gives
//!
//! ```text
//! αₙ' = −inν_d αₙ + iκ₁ (αₙ₋₁ + αₙ₊₁ + βₙ + βₙ₊₂)
//! βₙ' = −inν_d βₙ − iκ₂ (αₙ₋₂ + αₙ + βₙ₋₁ + βₙ₊₁)
//! ```
//!
//! with `κ₁ = Ω²δ/8ω₁`, `κ₂ = Ω²δ/8ω₂`. Components with `|n| > N` are
//! dropped (hard truncation).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classical::{default_dt_envelope, EnvelopeState, ENVELOPE_COLUMNS};
use crate::error::{QaserError, Result};
use crate::model::{base_couplings, derive_normal_modes, resonance_detuning, ModelParams};
use crate::ode::{complex_rhs, integrate_with, pack_complex, unpack_complex, Rk4, TimeGrid, TimeSeries};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Seed of the pseudo-random start vector used by [`growth_rate`].
pub const DEFAULT_RATE_SEED: u64 = 0x5EED_F10C;

/// Relative detuning above which the reduction is flagged as off-resonant.
const RESONANCE_TOLERANCE: f64 = 1e-6;

/// Species of a Floquet component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Alpha,
    Beta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloquetState {
    order: usize,
    alpha: Vec<Complex64>,
    beta: Vec<Complex64>,
}

impl FloquetState {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            alpha: vec![ZERO; 2 * order + 1],
            beta: vec![ZERO; 2 * order + 1],
        }
    }

    /// Only the base components populated.
    pub fn base(order: usize, alpha0: Complex64, beta0: Complex64) -> Self {
        let mut s = Self::zeros(order);
        *s.alpha_mut(0) = alpha0;
        *s.beta_mut(0) = beta0;
        s
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn slot(&self, n: i64) -> usize {
        assert!(n.unsigned_abs() as usize <= self.order, "component {n} outside ±{}", self.order);
        (n + self.order as i64) as usize
    }

    pub fn alpha(&self, n: i64) -> Complex64 {
        self.alpha[self.slot(n)]
    }

    pub fn beta(&self, n: i64) -> Complex64 {
        self.beta[self.slot(n)]
    }

    pub fn alpha_mut(&mut self, n: i64) -> &mut Complex64 {
        let k = self.slot(n);
        &mut self.alpha[k]
    }

    pub fn beta_mut(&mut self, n: i64) -> &mut Complex64 {
        let k = self.slot(n);
        &mut self.beta[k]
    }

    /// Stacked `(α₋N..α_N, β₋N..β_N)`.
    pub fn to_vector(&self) -> Vec<Complex64> {
        self.alpha.iter().chain(&self.beta).copied().collect()
    }

    pub fn from_vector(order: usize, v: &[Complex64]) -> Result<Self> {
        let width = 2 * order + 1;
        if v.len() != 2 * width {
            return Err(QaserError::DimensionMismatch {
                expected: 2 * width,
                got: v.len(),
            });
        }
        Ok(Self {
            order,
            alpha: v[..width].to_vec(),
            beta: v[width..].to_vec(),
        })
    }
}

/// Dense matrix `M` of `v' = M v` over the stacked component vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetMatrix {
    order: usize,
    nu_d: f64,
    entries: Vec<Complex64>,
    // nonzero (col, value) per row for the matvec
    sparse: Vec<Vec<(usize, Complex64)>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FloquetMatrixDump {
    #[serde(rename = "N")]
    pub order: usize,
    pub nu_d: f64,
    pub entries: Vec<(usize, usize, f64, f64)>,
}

impl FloquetMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nu_d(&self) -> f64 {
        self.nu_d
    }

    pub fn dim(&self) -> usize {
        2 * (2 * self.order + 1)
    }

    /// Row/column of component `n` of `species`.
    pub fn index(&self, species: Species, n: i64) -> Option<usize> {
        let width = 2 * self.order + 1;
        if n.unsigned_abs() as usize > self.order {
            return None;
        }
        let k = (n + self.order as i64) as usize;
        Some(match species {
            Species::Alpha => k,
            Species::Beta => width + k,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        let d = self.dim();
        &self.entries[row * d..(row + 1) * d]
    }

    pub fn nonzeros_in_row(&self, row: usize) -> usize {
        self.sparse[row].len()
    }

    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        for (o, row) in out.iter_mut().zip(&self.sparse) {
            *o = row.iter().map(|&(c, m)| m * v[c]).sum();
        }
    }

    /// Maximum absolute row sum, a bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        self.sparse
            .iter()
            .map(|r| r.iter().map(|(_, m)| m.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn dump(&self) -> FloquetMatrixDump {
        let d = self.dim();
        let mut entries = Vec::new();
        for r in 0..d {
            for c in 0..d {
                let m = self.get(r, c);
                if m != ZERO {
                    entries.push((r, c, m.re, m.im));
                }
            }
        }
        FloquetMatrixDump {
            order: self.order,
            nu_d: self.nu_d,
            entries,
        }
    }

    fn from_dense(order: usize, nu_d: f64, entries: Vec<Complex64>) -> Self {
        let d = 2 * (2 * order + 1);
        let sparse = (0..d)
            .map(|r| {
                (0..d)
                    .filter_map(|c| {
                        let m = entries[r * d + c];
                        (m != ZERO).then_some((c, m))
                    })
                    .collect()
            })
            .collect();
        Self {
            order,
            nu_d,
            entries,
            sparse,
        }
    }
}

/// Warning text when the parameters are off combination resonance, which
/// the component recursion presumes.
pub fn resonance_warning(params: &ModelParams) -> Result<Option<String>> {
    let detuning = resonance_detuning(params)?;
    Ok((detuning.abs() > RESONANCE_TOLERANCE * params.nu_d).then(|| {
        format!(
            "nu_d - (omega2 - omega1) = {detuning:.6e}; the Floquet reduction assumes exact resonance"
        )
    }))
}

pub fn build_floquet_matrix(params: &ModelParams, order: usize) -> Result<FloquetMatrix> {
    let modes = derive_normal_modes(params)?;
    if let Some(w) = resonance_warning(params)? {
        log::warn!("{w}");
    }
    let (k1, k2) = base_couplings(params, &modes);
    let width = 2 * order + 1;
    let d = 2 * width;
    let n_max = order as i64;
    let mut m = vec![ZERO; d * d];
    let slot = |n: i64| -> Option<usize> { (n.abs() <= n_max).then(|| (n + n_max) as usize) };
    for n in -n_max..=n_max {
        let a_row = slot(n).unwrap();
        let b_row = width + a_row;
        let diag = -I * (n as f64 * params.nu_d);
        m[a_row * d + a_row] += diag;
        m[b_row * d + b_row] += diag;

        let up = I * k1;
        for col in [slot(n - 1), slot(n + 1)].into_iter().flatten() {
            m[a_row * d + col] += up;
        }
        for col in [slot(n), slot(n + 2)].into_iter().flatten() {
            m[a_row * d + width + col] += up;
        }

        let down = -I * k2;
        for col in [slot(n - 2), slot(n)].into_iter().flatten() {
            m[b_row * d + col] += down;
        }
        for col in [slot(n - 1), slot(n + 1)].into_iter().flatten() {
            m[b_row * d + width + col] += down;
        }
    }
    Ok(FloquetMatrix::from_dense(order, params.nu_d, m))
}

/// The base-component system `α₀' = iκ₁β₀`, `β₀' = −iκ₂α₀`.
pub fn reduce_base(params: &ModelParams) -> Result<[[Complex64; 2]; 2]> {
    let modes = derive_normal_modes(params)?;
    let (k1, k2) = base_couplings(params, &modes);
    Ok([[ZERO, I * k1], [-I * k2, ZERO]])
}

pub fn reconstruct_envelope(state: &FloquetState, t: f64, nu_d: f64) -> EnvelopeState {
    let n_max = state.order as i64;
    let mut alpha = ZERO;
    let mut beta = ZERO;
    for n in -n_max..=n_max {
        let phase = Complex64::cis(n as f64 * nu_d * t);
        alpha += state.alpha(n) * phase;
        beta += state.beta(n) * phase;
    }
    EnvelopeState::new(alpha, beta)
}

fn matrix_rhs(matrix: &FloquetMatrix) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
    complex_rhs(move |_, v: &[Complex64], dv: &mut [Complex64]| matrix.apply(v, dv), matrix.dim())
}

/// Step size for component integration: the envelope default, tightened
/// when high-order diagonals would make RK4 inaccurate.
pub fn component_dt(matrix: &FloquetMatrix) -> f64 {
    default_dt_envelope(matrix.nu_d).min(0.25 / matrix.norm_inf().max(f64::MIN_POSITIVE))
}

/// Integrates the component system and records the reconstructed
/// envelopes. Columns [`ENVELOPE_COLUMNS`].
pub fn reconstructed_trajectory(
    matrix: &FloquetMatrix,
    initial: &FloquetState,
    grid: &TimeGrid,
) -> Result<TimeSeries> {
    if initial.order != matrix.order {
        return Err(QaserError::DimensionMismatch {
            expected: matrix.dim(),
            got: 2 * (2 * initial.order + 1),
        });
    }
    let order = matrix.order;
    let nu = matrix.nu_d;
    let mut out = TimeSeries::new(ENVELOPE_COLUMNS)?;
    integrate_with(matrix_rhs(matrix), &pack_complex(&initial.to_vector()), grid, |t, y| {
        let state = FloquetState::from_vector(order, &unpack_complex(y))
            .expect("integrator preserves dimension");
        let e = reconstruct_envelope(&state, t, nu);
        out.push(t, vec![e.alpha.re, e.alpha.im, e.beta.re, e.beta.im])
            .expect("grid times are increasing");
    })?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthRateOptions {
    pub horizon: f64,
    pub seed: u64,
    /// Largest acceptable RMS residual of the log-norm fit.
    pub residual_threshold: f64,
}

impl Default for GrowthRateOptions {
    fn default() -> Self {
        Self {
            horizon: 400.0,
            seed: DEFAULT_RATE_SEED,
            residual_threshold: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRate {
    pub rate: f64,
    pub residual: f64,
}

/// Unit-norm complex start vector drawn from a seeded ChaCha stream.
pub fn seed_vector(dim: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn growth_rate(matrix: &FloquetMatrix, horizon: f64) -> Result<f64> {
    let opts = GrowthRateOptions {
        horizon,
        ..Default::default()
    };
    growth_rate_with(matrix, &opts).map(|r| r.rate)
}

/// Largest Lyapunov-type exponent of `v' = M v`: integrates from the seeded
/// start vector, renormalizing every step, and fits the slope of `ln‖v‖`
/// over the final half of the horizon.
pub fn growth_rate_with(matrix: &FloquetMatrix, opts: &GrowthRateOptions) -> Result<GrowthRate> {
    let dt = component_dt(matrix);
    let grid = TimeGrid::new(0.0, opts.horizon, dt)?;
    let mut y = pack_complex(&seed_vector(matrix.dim(), opts.seed));
    let mut rhs = matrix_rhs(matrix);
    let mut stepper = Rk4::new(y.len());
    let h = grid.step();
    let steps = grid.steps();
    let mut log_norm = 0.0;
    let mut times = Vec::with_capacity(steps / 2 + 1);
    let mut logs = Vec::with_capacity(steps / 2 + 1);
    for k in 0..steps {
        stepper.step(&mut rhs, grid.time_at(k), &mut y, h);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(QaserError::NonFinite {
                time: grid.time_at(k + 1),
            });
        }
        log_norm += norm.ln();
        y.iter_mut().for_each(|v| *v /= norm);
        let t = grid.time_at(k + 1);
        if t >= 0.5 * opts.horizon {
            times.push(t);
            logs.push(log_norm);
        }
    }
    let (rate, _, residual) = crate::analysis::least_squares_line(&times, &logs)?;
    if residual > opts.residual_threshold {
        return Err(QaserError::NonConvergence {
            residual,
            threshold: opts.residual_threshold,
        });
    }
    Ok(GrowthRate { rate, residual })
}
