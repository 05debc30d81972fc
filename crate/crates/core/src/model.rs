//! Physical parameters of the driven coupled-oscillator pair and the scalar
//! quantities derived from them.
//!
//! All frequencies are angular and dimensionless. The pair is
//!
//! ```text
//! φ₁'' + ω₀² φ₁ − Ω² φ₂ = 0
//! φ₂'' + ω₀² φ₂ − Ω² (1 + δ cos ν_d t) φ₁ = 0
//! ```
//!
//! with normal modes ω₁ = √(ω₀² − Ω²) and ω₂ = √(ω₀² + Ω²).

use serde::{Deserialize, Serialize};

use crate::error::{QaserError, Result};

/// Drive frequency used for the gain-versus-ω₀ reproduction.
pub const DEFAULT_NU_D: f64 = 2.0;
/// Modulation depth used for the gain-versus-ω₀ reproduction.
pub const DEFAULT_DELTA: f64 = 0.4;
/// Ω/ω₀ used for the gain-versus-ω₀ reproduction.
pub const DEFAULT_COUPLING_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega0: f64,
    pub omega_coupling: f64,
    pub delta: f64,
    pub nu_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalModes {
    pub omega1: f64,
    pub omega2: f64,
}

/// Gain `g`, coupling `J` and growth exponent `λ = √(g² − J²)` of the
/// reduced two-mode system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PTParams {
    pub g: f64,
    pub j: f64,
    pub lambda: f64,
}

impl ModelParams {
    /// Validated constructor.
    pub fn new(omega0: f64, omega_coupling: f64, delta: f64, nu_d: f64) -> Result<Self> {
        let params = Self {
            omega0,
            omega_coupling,
            delta,
            nu_d,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters at the centre of the gain peak: Ω = ω₀/2, δ = 0.4, ν_d = 2
    /// and ω₀ chosen so that ν_d = ω₂ − ω₁ exactly.
    pub fn resonant_default() -> Self {
        let omega0 = resonant_omega0(DEFAULT_COUPLING_RATIO, DEFAULT_NU_D)
            .expect("default ratio and drive are in range");
        Self {
            omega0,
            omega_coupling: DEFAULT_COUPLING_RATIO * omega0,
            delta: DEFAULT_DELTA,
            nu_d: DEFAULT_NU_D,
        }
    }

    /// Parameters of the vacuum-growth curves: ω₀ = 8, Ω = 4, δ = 0.4, ν_d = 2.
    pub fn vacuum_default() -> Self {
        Self {
            omega0: 8.0,
            omega_coupling: 4.0,
            delta: DEFAULT_DELTA,
            nu_d: DEFAULT_NU_D,
        }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.omega0, self.omega_coupling, self.delta, self.nu_d]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(QaserError::Domain("parameters must be finite".into()));
        }
        if self.omega0 <= 0.0 {
            return Err(QaserError::Domain(format!(
                "omega0 must be positive, got {}",
                self.omega0
            )));
        }
        if self.nu_d <= 0.0 {
            return Err(QaserError::Domain(format!(
                "nu_d must be positive, got {}",
                self.nu_d
            )));
        }
        if self.delta < 0.0 {
            return Err(QaserError::Domain(format!(
                "delta must be non-negative, got {}",
                self.delta
            )));
        }
        if self.omega_coupling <= 0.0 || self.omega_coupling >= self.omega0 {
            return Err(QaserError::Domain(format!(
                "coupling must satisfy 0 < Omega < omega0 (got Omega = {}, omega0 = {})",
                self.omega_coupling, self.omega0
            )));
        }
        Ok(())
    }

    /// Non-fatal diagnostics about the parameter regime.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.delta >= 1.0 {
            out.push(format!(
                "delta = {} is not small; envelope and Floquet reductions assume delta << 1",
                self.delta
            ));
        }
        out
    }
}

impl NormalModes {
    pub fn splitting(&self) -> f64 {
        self.omega2 - self.omega1
    }
}

pub fn derive_normal_modes(params: &ModelParams) -> Result<NormalModes> {
    params.validate()?;
    let w0sq = params.omega0 * params.omega0;
    let csq = params.omega_coupling * params.omega_coupling;
    Ok(NormalModes {
        omega1: (w0sq - csq).sqrt(),
        omega2: (w0sq + csq).sqrt(),
    })
}

/// `Ω²δ/(8ω₁)` and `Ω²δ/(8ω₂)`: the base-component coupling rates.
pub(crate) fn base_couplings(params: &ModelParams, modes: &NormalModes) -> (f64, f64) {
    let drive = params.omega_coupling * params.omega_coupling * params.delta;
    (drive / (8.0 * modes.omega1), drive / (8.0 * modes.omega2))
}

pub fn pt_parameters(params: &ModelParams) -> Result<PTParams> {
    let modes = derive_normal_modes(params)?;
    for w in params.warnings() {
        log::warn!("{w}");
    }
    let (w1, w2) = (modes.omega1, modes.omega2);
    let drive = params.omega_coupling * params.omega_coupling * params.delta;
    let g = drive * (w1 + w2) / (16.0 * w1 * w2);
    let j = drive * (w2 - w1) / (16.0 * w1 * w2);
    // (g + J)(g − J) = Ω⁴δ²/(64 ω₁ω₂); this avoids the cancellation in g² − J².
    let lambda = drive / (8.0 * (w1 * w2).sqrt());
    Ok(PTParams { g, j, lambda })
}

impl PTParams {
    /// Synthetic (g, J) pair; λ is √(g² − J²) in the broken phase and 0 otherwise.
    pub fn from_gain_coupling(g: f64, j: f64) -> Self {
        let lambda = if g > j { ((g - j) * (g + j)).sqrt() } else { 0.0 };
        Self { g, j, lambda }
    }
}

/// `ν_d − (ω₂ − ω₁)`; zero at exact combination resonance.
pub fn resonance_detuning(params: &ModelParams) -> Result<f64> {
    let modes = derive_normal_modes(params)?;
    Ok(params.nu_d - modes.splitting())
}

/// The ω₀ at which `ν_d = ω₂ − ω₁` for a fixed ratio Ω/ω₀.
pub fn resonant_omega0(ratio: f64, nu_d: f64) -> Result<f64> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(QaserError::Domain(format!(
            "coupling ratio must lie in (0, 1), got {ratio}"
        )));
    }
    if !(nu_d > 0.0) || !nu_d.is_finite() {
        return Err(QaserError::Domain(format!(
            "drive frequency must be positive, got {nu_d}"
        )));
    }
    // ν_d / (√(1+r²) − √(1−r²)), rationalized to avoid cancellation at small r
    let r2 = ratio * ratio;
    Ok(nu_d * ((1.0 + r2).sqrt() + (1.0 - r2).sqrt()) / (2.0 * r2))
}
