//! Second moments of the quantized two-mode system driven by vacuum noise.
//!
//! The Langevin pair `a' = g a − J b + f_a`, `b' = J a − g b + f_b` with
//! `⟨f_a†(t) f_a(t')⟩ = 2g δ(t − t')` and `⟨f_b† f_b⟩ = 0` closes on the
//! normally ordered moments `n_a = ⟨a†a⟩`, `n_b = ⟨b†b⟩`, `c = ⟨a†b⟩`:
//!
//! ```text
//! n_a' = 2g n_a − 2J Re c + 2g
//! n_b' = −2g n_b + 2J Re c
//! c'   = J (n_a − n_b)
//! ```

use num_complex::Complex64;
use serde::Serialize;

use crate::classical::default_dt_envelope;
use crate::error::{QaserError, Result};
use crate::model::{derive_normal_modes, pt_parameters, ModelParams, PTParams};
use crate::ode::{integrate_with, TimeGrid, TimeSeries};

/// Delta-correlation strengths of the noise operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseModel {
    /// coefficient of `⟨f_a† f_a⟩`
    pub d_aa: f64,
    /// coefficient of `⟨f_b f_b†⟩`
    pub d_bb: f64,
    /// `(ω₁ + ω₂)Ω²δ / (16 ω₁ω₂)`, magnitude of every nonzero
    /// `(f_α, f_β)` correlation
    pub cross: f64,
}

impl NoiseModel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let pt = pt_parameters(params)?;
        let modes = derive_normal_modes(params)?;
        let (w1, w2) = (modes.omega1, modes.omega2);
        let cross = (w1 + w2) * params.omega_coupling.powi(2) * params.delta / (16.0 * w1 * w2);
        Ok(Self {
            d_aa: 2.0 * pt.g,
            d_bb: 2.0 * pt.g,
            cross,
        })
    }

    /// Normally ordered correlation matrix `⟨f_i† f_j⟩` in the `(f_α, f_β)`
    /// basis, derived from `f_α = (f_a + f_b)/√2`, `f_β = (f_a − f_b)/(√2 i)`.
    pub fn alpha_beta_normal(&self) -> [[Complex64; 2]; 2] {
        // only f_a carries a normally ordered correlation
        let d = 0.5 * self.d_aa;
        let i = Complex64::new(0.0, 1.0);
        [
            [Complex64::new(d, 0.0), -i * d],
            [i * d, Complex64::new(d, 0.0)],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct MomentSet {
    pub n_a: f64,
    pub n_b: f64,
    pub cross: Complex64,
}

impl MomentSet {
    pub fn vacuum() -> Self {
        Self::default()
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.n_a, self.n_b, self.cross.re, self.cross.im]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        Self {
            n_a: y[0],
            n_b: y[1],
            cross: Complex64::new(y[2], y[3]),
        }
    }

    /// Occupations non-negative and `|⟨a†b⟩|² ≤ (n_a + 1)(n_b + 1)`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.n_a >= -tol
            && self.n_b >= -tol
            && self.cross.norm_sqr() <= (self.n_a + 1.0) * (self.n_b + 1.0) + tol
    }
}

/// Occupations `S_α = ⟨α₀†α₀⟩`, `S_β = ⟨β₀†β₀⟩` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpontaneousSample {
    pub s_alpha: f64,
    pub s_beta: f64,
}

pub fn moment_rhs(m: &MomentSet, pt: &PTParams) -> MomentSet {
    let (g, j) = (pt.g, pt.j);
    MomentSet {
        n_a: 2.0 * g * m.n_a - 2.0 * j * m.cross.re + 2.0 * g,
        n_b: -2.0 * g * m.n_b + 2.0 * j * m.cross.re,
        cross: Complex64::new(j * (m.n_a - m.n_b), 0.0),
    }
}

fn require_broken(pt: &PTParams) -> Result<()> {
    if pt.g > pt.j && pt.lambda > 0.0 {
        Ok(())
    } else {
        Err(QaserError::Domain(format!(
            "closed forms require g > J (got g = {}, J = {})",
            pt.g, pt.j
        )))
    }
}

/// `sinh(x)/x − 1` without cancellation at small x.
fn sinhc_minus_one(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0))
    } else {
        x.sinh() / x - 1.0
    }
}

/// `cosh(x) − 1 = 2 sinh²(x/2)`.
fn cosh_minus_one(x: f64) -> f64 {
    2.0 * (0.5 * x).sinh().powi(2)
}

/// Vacuum-start occupations `(⟨a†a⟩, ⟨b†b⟩)` in closed form.
pub fn closed_form_ab(pt: &PTParams, t: f64) -> Result<(f64, f64)> {
    require_broken(pt)?;
    let (g, j, lam) = (pt.g, pt.j, pt.lambda);
    let x = 2.0 * lam * t;
    let pre = j * j * g / (lam * lam);
    // sinh(2λt)/(2λ) − t, written without cancellation
    let sinh_excess = t * sinhc_minus_one(x);
    let n_b = pre * sinh_excess;
    // bracket of n_a rearranged as (g/J²)(cosh − 1) + ((λ² + g²)/J²)(sinh/2λ) − t
    // = (g/J²)(cosh − 1) + ((λ² + g²)/J²)·sinh_excess + (λ² + g² − J²)/J² · t
    let n_a = pre
        * ((g / (j * j)) * cosh_minus_one(x)
            + ((lam * lam + g * g) / (j * j)) * sinh_excess
            + ((lam * lam + (g - j) * (g + j)) / (j * j)) * t);
    Ok((n_a, n_b))
}

/// Vacuum-start `(S_α, S_β)` evaluated from the printed α₀/β₀ expressions.
pub fn closed_form_alpha_beta(params: &ModelParams, t: f64) -> Result<SpontaneousSample> {
    let pt = pt_parameters(params)?;
    require_broken(&pt)?;
    let modes = derive_normal_modes(params)?;
    let (w1, w2) = (modes.omega1, modes.omega2);
    let drive = params.omega_coupling.powi(2) * params.delta;
    let x = 2.0 * pt.lambda * t;
    let shared = 8.0 * w1 * w2 * cosh_minus_one(x) + 4.0 * (w1 * w2).sqrt() * (w1 + w2) * x.sinh();
    let s_alpha = (w1 + w2) / (16.0 * w1 * w1 * w2) * ((w1 - w2) * drive * t + shared);
    let s_beta = (w1 + w2) / (16.0 * w1 * w2 * w2) * ((w2 - w1) * drive * t + shared);
    Ok(SpontaneousSample { s_alpha, s_beta })
}

/// `S_α = (n_a + n_b + 2 Re c)/2`, `S_β = (n_a + n_b − 2 Re c)/2`.
pub fn moments_to_alphabeta(m: &MomentSet) -> SpontaneousSample {
    let total = m.n_a + m.n_b;
    SpontaneousSample {
        s_alpha: 0.5 * (total + 2.0 * m.cross.re),
        s_beta: 0.5 * (total - 2.0 * m.cross.re),
    }
}

/// Integrates the moment equations from vacuum, handing every sample to
/// `observe`.
pub fn propagate_moments<O>(pt: &PTParams, grid: &TimeGrid, mut observe: O) -> Result<MomentSet>
where
    O: FnMut(f64, &MomentSet),
{
    let pt = *pt;
    let last = integrate_with(
        move |_, y, dy| {
            let d = moment_rhs(&MomentSet::from_slice(y), &pt);
            dy.copy_from_slice(&d.to_array());
        },
        &MomentSet::vacuum().to_array(),
        grid,
        |t, y| observe(t, &MomentSet::from_slice(y)),
    )?;
    Ok(MomentSet::from_slice(&last))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthMethod {
    ClosedForm,
    MomentOde,
}

pub const CURVE_COLUMNS: [&str; 4] = ["S_alpha", "S_beta", "n_a", "n_b"];

pub const COMPARISON_COLUMNS: [&str; 7] = [
    "S_alpha_closed",
    "S_beta_closed",
    "S_alpha_ode",
    "S_beta_ode",
    "n_a",
    "n_b",
    "ratio_alpha",
];

/// Default grid for vacuum-growth curves: 256 steps per drive period.
pub fn default_grid(params: &ModelParams, t_end: f64) -> Result<TimeGrid> {
    TimeGrid::new(0.0, t_end, default_dt_envelope(params.nu_d))
}

/// Vacuum-growth curve by one method. Columns [`CURVE_COLUMNS`].
///
/// Undriven systems (`δ = 0`) have no gain and no noise, so every curve is
/// identically zero.
pub fn vacuum_growth_curve(
    params: &ModelParams,
    grid: &TimeGrid,
    method: GrowthMethod,
) -> Result<TimeSeries> {
    grid.validate()?;
    let pt = pt_parameters(params)?;
    let mut out = TimeSeries::new(CURVE_COLUMNS)?;
    if params.delta == 0.0 {
        for k in 0..=grid.steps() {
            out.push(grid.time_at(k), vec![0.0; 4])?;
        }
        return Ok(out);
    }
    match method {
        GrowthMethod::ClosedForm => {
            for k in 0..=grid.steps() {
                let t = grid.time_at(k);
                let s = closed_form_alpha_beta(params, t)?;
                let (n_a, n_b) = closed_form_ab(&pt, t)?;
                out.push(t, vec![s.s_alpha, s.s_beta, n_a, n_b])?;
            }
        }
        GrowthMethod::MomentOde => {
            propagate_moments(&pt, grid, |t, m| {
                let s = moments_to_alphabeta(m);
                out.push(t, vec![s.s_alpha, s.s_beta, m.n_a, m.n_b])
                    .expect("grid times are increasing");
            })?;
        }
    }
    Ok(out)
}

/// Both methods side by side plus `S_α` closed / `S_α` ODE. Columns
/// [`COMPARISON_COLUMNS`]; the ratio is NaN at t = 0 where both vanish.
pub fn vacuum_growth_comparison(params: &ModelParams, grid: &TimeGrid) -> Result<TimeSeries> {
    let closed = vacuum_growth_curve(params, grid, GrowthMethod::ClosedForm)?;
    let ode = vacuum_growth_curve(params, grid, GrowthMethod::MomentOde)?;
    let mut out = TimeSeries::new(COMPARISON_COLUMNS)?;
    for ((t, c), o) in closed.times().iter().zip(closed.rows()).zip(ode.rows()) {
        let ratio = if o[0] != 0.0 { c[0] / o[0] } else { f64::NAN };
        out.push(*t, vec![c[0], c[1], o[0], o[1], o[2], o[3], ratio])?;
    }
    Ok(out)
}

/// Small-t limit of `S_α` closed form over `S_α` from moment propagation:
/// the ratio of their initial slopes, `2g / g`.
pub fn small_time_prefactor_ratio(params: &ModelParams) -> Result<f64> {
    let pt = pt_parameters(params)?;
    require_broken(&pt)?;
    let modes = derive_normal_modes(params)?;
    let (w1, w2) = (modes.omega1, modes.omega2);
    let drive = params.omega_coupling.powi(2) * params.delta;
    // d/dt of the closed form at t = 0
    let closed_slope = (w1 + w2) / (16.0 * w1 * w1 * w2)
        * ((w1 - w2) * drive + 8.0 * (w1 * w2).sqrt() * (w1 + w2) * pt.lambda);
    // d/dt of (n_a + n_b + 2 Re c)/2 at vacuum
    let v = moment_rhs(&MomentSet::vacuum(), &pt);
    let ode_slope = moments_to_alphabeta(&v).s_alpha;
    Ok(closed_slope / ode_slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig() -> ModelParams {
        ModelParams::vacuum_default()
    }

    #[test]
    fn noise_consistency_identity() {
        let p = fig();
        let noise = NoiseModel::new(&p).unwrap();
        let pt = pt_parameters(&p).unwrap();
        assert_relative_eq!(noise.cross, pt.g, max_relative = 1e-14);
        assert_eq!(noise.d_aa, 2.0 * pt.g);
        let m = noise.alpha_beta_normal();
        // ⟨f_α† f_α⟩ = ⟨f_β† f_β⟩ = c, ⟨f_α† f_β⟩ = −ic, ⟨f_β† f_α⟩ = ic
        assert_relative_eq!(m[0][0].re, noise.cross, max_relative = 1e-14);
        assert_relative_eq!(m[1][1].re, noise.cross, max_relative = 1e-14);
        assert_relative_eq!(m[0][1].im, -noise.cross, max_relative = 1e-14);
        assert_relative_eq!(m[1][0].im, noise.cross, max_relative = 1e-14);
    }

    #[test]
    fn vacuum_closed_forms_vanish_at_zero() {
        let pt = pt_parameters(&fig()).unwrap();
        assert_eq!(closed_form_ab(&pt, 0.0).unwrap(), (0.0, 0.0));
        let s = closed_form_alpha_beta(&fig(), 0.0).unwrap();
        assert_eq!((s.s_alpha, s.s_beta), (0.0, 0.0));
    }

    #[test]
    fn closed_forms_match_printed_expressions() {
        // direct transcription, away from the cancellation region
        let pt = pt_parameters(&fig()).unwrap();
        let (g, j, l) = (pt.g, pt.j, pt.lambda);
        for t in [1.0, 7.5, 30.0] {
            let x = 2.0 * l * t;
            let na = j * j * g / (l * l)
                * (g / (j * j) * (x.cosh() - 1.0) + (l * l + g * g) / (2.0 * l * j * j) * x.sinh() - t);
            let nb = j * j * g / (l * l) * (x.sinh() / (2.0 * l) - t);
            let (a, b) = closed_form_ab(&pt, t).unwrap();
            assert_relative_eq!(a, na, max_relative = 1e-10);
            assert_relative_eq!(b, nb, max_relative = 1e-9);
        }
    }

    #[test]
    fn closed_forms_reject_unbroken_phase() {
        let pt = PTParams::from_gain_coupling(0.1, 0.2);
        assert!(closed_form_ab(&pt, 1.0).is_err());
        assert!(closed_form_alpha_beta(&fig().with_delta(0.0), 1.0).is_err());
    }

    #[test]
    fn taylor_coefficients_at_small_time() {
        let pt = pt_parameters(&fig()).unwrap();
        let t = 1e-3;
        let (na, nb) = closed_form_ab(&pt, t).unwrap();
        assert_relative_eq!(na / t, 2.0 * pt.g, max_relative = 1e-3);
        assert_relative_eq!(nb / t.powi(3), 2.0 / 3.0 * pt.j * pt.j * pt.g, max_relative = 1e-3);
    }

    #[test]
    fn undriven_moments_stay_vacuum() {
        let d = moment_rhs(&MomentSet::vacuum(), &PTParams::from_gain_coupling(0.0, 0.0));
        assert_eq!(d, MomentSet::vacuum());
        let grid = TimeGrid::new(0.0, 10.0, 0.1).unwrap();
        for method in [GrowthMethod::ClosedForm, GrowthMethod::MomentOde] {
            let s = vacuum_growth_curve(&fig().with_delta(0.0), &grid, method).unwrap();
            assert!(s.rows().iter().flatten().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn alphabeta_examples() {
        let s = moments_to_alphabeta(&MomentSet {
            n_a: 1.0,
            n_b: 1.0,
            cross: Complex64::new(0.0, 0.0),
        });
        assert_eq!((s.s_alpha, s.s_beta), (1.0, 1.0));
        let s = moments_to_alphabeta(&MomentSet {
            n_a: 1.0,
            n_b: 1.0,
            cross: Complex64::new(1.0, 0.0),
        });
        assert_eq!((s.s_alpha, s.s_beta), (2.0, 0.0));
    }

    #[test]
    fn prefactor_ratio_is_two() {
        assert_relative_eq!(small_time_prefactor_ratio(&fig()).unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn sinhc_branches_agree() {
        for x in [9.9e-3f64, 1.0e-2, 1.01e-2] {
            let series = {
                let x2 = x * x;
                x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0))
            };
            assert_relative_eq!(series, x.sinh() / x - 1.0, max_relative = 1e-9);
        }
    }
}
