//! Classical dynamics of the driven oscillator pair in three coordinate
//! systems: the oscillator displacements φ₁, φ₂, the sum/difference
//! coordinates X, Y, and the slowly varying complex envelopes α, β.
//!
//! The maps between representations are exact. Integrating the envelope
//! equations with the counter-rotating terms retained is therefore
//! equivalent to integrating the original second-order system.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::model::{derive_normal_modes, ModelParams, NormalModes};
use crate::ode::{integrate_labeled, integrate_with, pack_complex, complex_rhs, TimeGrid, TimeSeries};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Initial displacement of oscillator 1 used for every gain run.
pub const SEED_AMPLITUDE: f64 = 1e-3;

/// Columns emitted by [`simulate`].
pub const SIMULATE_COLUMNS: [&str; 10] = [
    "phi1", "phi2", "X", "Y", "re_alpha", "im_alpha", "re_beta", "im_beta", "abs_alpha",
    "abs_beta",
];

pub const ENVELOPE_COLUMNS: [&str; 4] = ["re_alpha", "im_alpha", "re_beta", "im_beta"];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OscillatorState {
    pub phi1: f64,
    pub phi2: f64,
    pub dphi1: f64,
    pub dphi2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct XYState {
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeState {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl OscillatorState {
    /// φ₁(0) = 10⁻³, everything else at rest. Excites both normal modes.
    pub fn seed() -> Self {
        Self {
            phi1: SEED_AMPLITUDE,
            ..Self::default()
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.phi1, self.phi2, self.dphi1, self.dphi2]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self {
            phi1: y[0],
            phi2: y[1],
            dphi1: y[2],
            dphi2: y[3],
        }
    }
}

impl EnvelopeState {
    pub fn new(alpha: Complex64, beta: Complex64) -> Self {
        Self { alpha, beta }
    }

    pub fn to_array(self) -> [Complex64; 2] {
        [self.alpha, self.beta]
    }

    /// `|α|² + |β|²`.
    pub fn energy(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }
}

/// `2π / (64 ω₂)`: 64 steps per period of the fastest normal mode.
pub fn default_dt_full(modes: &NormalModes) -> f64 {
    2.0 * PI / (64.0 * modes.omega2)
}

/// 256 steps per drive period.
pub fn default_dt_envelope(nu_d: f64) -> f64 {
    2.0 * PI / nu_d / 256.0
}

pub fn rhs_phi(state: &OscillatorState, t: f64, params: &ModelParams) -> OscillatorState {
    let w0sq = params.omega0 * params.omega0;
    let csq = params.omega_coupling * params.omega_coupling;
    let modulation = 1.0 + params.delta * (params.nu_d * t).cos();
    OscillatorState {
        phi1: state.dphi1,
        phi2: state.dphi2,
        dphi1: -w0sq * state.phi1 + csq * state.phi2,
        dphi2: -w0sq * state.phi2 + csq * modulation * state.phi1,
    }
}

pub fn phi_to_xy(s: &OscillatorState) -> XYState {
    XYState {
        x: s.phi1 + s.phi2,
        y: s.phi1 - s.phi2,
        dx: s.dphi1 + s.dphi2,
        dy: s.dphi1 - s.dphi2,
    }
}

pub fn xy_to_phi(s: &XYState) -> OscillatorState {
    OscillatorState {
        phi1: 0.5 * (s.x + s.y),
        phi2: 0.5 * (s.x - s.y),
        dphi1: 0.5 * (s.dx + s.dy),
        dphi2: 0.5 * (s.dx - s.dy),
    }
}

/// `α = (X + iẊ/ω₁) e^{iω₁t}`, `β = (Y + iẎ/ω₂) e^{iω₂t}`.
pub fn xy_to_envelope(s: &XYState, t: f64, modes: &NormalModes) -> EnvelopeState {
    let z1 = Complex64::new(s.x, s.dx / modes.omega1);
    let z2 = Complex64::new(s.y, s.dy / modes.omega2);
    EnvelopeState {
        alpha: z1 * Complex64::cis(modes.omega1 * t),
        beta: z2 * Complex64::cis(modes.omega2 * t),
    }
}

pub fn envelope_to_xy(e: &EnvelopeState, t: f64, modes: &NormalModes) -> XYState {
    let z1 = e.alpha * Complex64::cis(-modes.omega1 * t);
    let z2 = e.beta * Complex64::cis(-modes.omega2 * t);
    XYState {
        x: z1.re,
        dx: modes.omega1 * z1.im,
        y: z2.re,
        dy: modes.omega2 * z2.im,
    }
}

pub fn phi_to_envelope(s: &OscillatorState, t: f64, modes: &NormalModes) -> EnvelopeState {
    xy_to_envelope(&phi_to_xy(s), t, modes)
}

pub fn envelope_to_phi(e: &EnvelopeState, t: f64, modes: &NormalModes) -> OscillatorState {
    xy_to_phi(&envelope_to_xy(e, t, modes))
}

/// Envelope equations of motion.
///
/// With `keep_counter_rotating` the conjugate terms are retained and the
/// system is exactly equivalent to the φ equations. Without them this is
/// the rotating-wave form whose Fourier components obey the Floquet
/// recursion in [`crate::floquet`].
pub fn rhs_envelope(
    state: &EnvelopeState,
    t: f64,
    params: &ModelParams,
    modes: &NormalModes,
    keep_counter_rotating: bool,
) -> EnvelopeState {
    let (w1, w2) = (modes.omega1, modes.omega2);
    let drive = params.omega_coupling * params.omega_coupling * params.delta;
    let k1 = drive / (4.0 * w1);
    let k2 = drive / (4.0 * w2);
    let c = (params.nu_d * t).cos();
    if keep_counter_rotating {
        let rot1 = Complex64::cis(w1 * t);
        let rot2 = Complex64::cis(w2 * t);
        // αe^{−iω₁t} + βe^{−iω₂t} + c.c. = 2·Re(...)
        let s = 2.0 * (state.alpha * rot1.conj() + state.beta * rot2.conj()).re;
        EnvelopeState {
            alpha: I * (k1 * c * s) * rot1,
            beta: -I * (k2 * c * s) * rot2,
        }
    } else {
        let beat = Complex64::cis((w2 - w1) * t);
        EnvelopeState {
            alpha: I * (k1 * c) * (state.alpha + state.beta * beat.conj()),
            beta: -I * (k2 * c) * (state.alpha * beat + state.beta),
        }
    }
}

/// Integrates the φ equations. Columns: `phi1, phi2, dphi1, dphi2`.
pub fn integrate_phi(
    params: &ModelParams,
    initial: &OscillatorState,
    grid: &TimeGrid,
) -> Result<TimeSeries> {
    params.validate()?;
    let p = *params;
    integrate_labeled(
        move |t, y, dy| {
            let d = rhs_phi(&OscillatorState::from_slice(y), t, &p);
            dy.copy_from_slice(&d.to_array());
        },
        &initial.to_array(),
        grid,
        ["phi1", "phi2", "dphi1", "dphi2"],
    )
}

/// Integrates the φ equations and reports every representation, with
/// columns [`SIMULATE_COLUMNS`].
pub fn simulate(params: &ModelParams, initial: &OscillatorState, grid: &TimeGrid) -> Result<TimeSeries> {
    let modes = derive_normal_modes(params)?;
    let raw = integrate_phi(params, initial, grid)?;
    raw.map_rows(SIMULATE_COLUMNS, |t, row| {
        let s = OscillatorState::from_slice(row);
        let xy = phi_to_xy(&s);
        let e = xy_to_envelope(&xy, t, &modes);
        vec![
            s.phi1,
            s.phi2,
            xy.x,
            xy.y,
            e.alpha.re,
            e.alpha.im,
            e.beta.re,
            e.beta.im,
            e.alpha.norm(),
            e.beta.norm(),
        ]
    })
}

/// Integrates the φ equations and records only `√(|α|² + |β|²)`, the
/// carrier-free amplitude used for gain fits. Column: `amplitude`.
pub fn envelope_amplitude_trace(
    params: &ModelParams,
    initial: &OscillatorState,
    grid: &TimeGrid,
) -> Result<TimeSeries> {
    let modes = derive_normal_modes(params)?;
    let p = *params;
    let mut out = TimeSeries::new(["amplitude"])?;
    integrate_with(
        move |t, y, dy| {
            let d = rhs_phi(&OscillatorState::from_slice(y), t, &p);
            dy.copy_from_slice(&d.to_array());
        },
        &initial.to_array(),
        grid,
        |t, y| {
            let e = phi_to_envelope(&OscillatorState::from_slice(y), t, &modes);
            out.push(t, vec![e.energy().sqrt()])
                .expect("grid times are increasing");
        },
    )?;
    Ok(out)
}

/// Integrates the envelope equations. Columns [`ENVELOPE_COLUMNS`].
pub fn integrate_envelope(
    params: &ModelParams,
    initial: &EnvelopeState,
    grid: &TimeGrid,
    keep_counter_rotating: bool,
) -> Result<TimeSeries> {
    let modes = derive_normal_modes(params)?;
    let p = *params;
    let rhs = complex_rhs(
        move |t, z: &[Complex64], dz: &mut [Complex64]| {
            let d = rhs_envelope(&EnvelopeState::new(z[0], z[1]), t, &p, &modes, keep_counter_rotating);
            dz[0] = d.alpha;
            dz[1] = d.beta;
        },
        2,
    );
    integrate_labeled(rhs, &pack_complex(&initial.to_array()), grid, ENVELOPE_COLUMNS)
}

/// Reads `(α, β)` back out of a row laid out as [`ENVELOPE_COLUMNS`].
pub fn envelope_from_row(row: &[f64]) -> EnvelopeState {
    EnvelopeState::new(Complex64::new(row[0], row[1]), Complex64::new(row[2], row[3]))
}

/// Adds `abs_alpha` and `abs_beta` to an envelope series.
pub fn with_envelope_magnitudes(series: &TimeSeries) -> Result<TimeSeries> {
    let labels = ENVELOPE_COLUMNS.iter().chain(&["abs_alpha", "abs_beta"]);
    series.map_rows(labels.copied(), |_, row| {
        let e = envelope_from_row(row);
        let mut out = row.to_vec();
        out.extend([e.alpha.norm(), e.beta.norm()]);
        out
    })
}

/// `max_t ‖(α,β)_a − (α,β)_b‖ / max_t ‖(α,β)_b‖` over two series in
/// [`ENVELOPE_COLUMNS`] layout sampled on the same grid.
pub fn envelope_mismatch(a: &TimeSeries, b: &TimeSeries) -> f64 {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for (ra, rb) in a.rows().iter().zip(b.rows()) {
        let (ea, eb) = (envelope_from_row(ra), envelope_from_row(rb));
        let d = (ea.alpha - eb.alpha).norm_sqr() + (ea.beta - eb.beta).norm_sqr();
        worst = worst.max(d.sqrt());
        scale = scale.max(eb.energy().sqrt());
    }
    worst / scale
}

/// Maps a φ-coordinate series (`phi1, phi2, dphi1, dphi2`) onto envelopes.
pub fn phi_series_to_envelope(series: &TimeSeries, modes: &NormalModes) -> Result<TimeSeries> {
    series.map_rows(ENVELOPE_COLUMNS, |t, row| {
        let e = phi_to_envelope(&OscillatorState::from_slice(row), t, modes);
        vec![e.alpha.re, e.alpha.im, e.beta.re, e.beta.im]
    })
}
