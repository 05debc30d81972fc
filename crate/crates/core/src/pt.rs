//! Parity-time structure of the reduced two-mode system.
//!
//! In the rotated modes `a = (α₀ + iβ₀)/√2`, `b = (α₀ − iβ₀)/√2` the base
//! dynamics read `a' = g a − J b`, `b' = J a − g b`, i.e. `v' = iHv` with
//!
//! ```text
//! H = [ −ig   iJ ]
//!     [ −iJ   ig ]
//! ```
//!
//! which is invariant under complex conjugation combined with the mode
//! swap `P = [[0, 1], [1, 0]]`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{QaserError, Result};
use crate::floquet::build_floquet_matrix;
use crate::model::{pt_parameters, ModelParams, PTParams};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative width of the exceptional-point band `|g − J| ≤ ε·max(g, J)`.
pub const EXCEPTIONAL_TOLERANCE: f64 = 1e-12;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl SquareMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(QaserError::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            m.data[r * dim..(r + 1) * dim].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            for k in 0..d {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..d {
                    out.data[r * d + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    /// Largest entry-wise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|k| self.get(k, k)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveHamiltonian(pub SquareMatrix);

/// Real permutation-type parity, stored as a general real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityOperator {
    dim: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseLabel {
    Unbroken,
    Exceptional,
    Broken,
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseLabel::Unbroken => "unbroken",
            PhaseLabel::Exceptional => "exceptional",
            PhaseLabel::Broken => "broken",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseClassification {
    pub label: PhaseLabel,
    pub eigenvalues: [Complex64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtCheck {
    pub symmetric: bool,
    pub residual: f64,
}

impl ParityOperator {
    pub fn from_permutation(perm: &[usize]) -> Self {
        let dim = perm.len();
        let mut data = vec![0.0; dim * dim];
        for (r, &c) in perm.iter().enumerate() {
            data[r * dim + c] = 1.0;
        }
        Self { dim, data }
    }

    /// `[[0, 1], [1, 0]]`.
    pub fn swap() -> Self {
        Self::from_permutation(&[1, 0])
    }

    /// Exchanges `aₙ ↔ bₙ` for every component, on the stacked
    /// `(a₋N..a_N, b₋N..b_N)` layout.
    pub fn blockwise_swap(order: usize) -> Self {
        let w = 2 * order + 1;
        let perm: Vec<usize> = (0..2 * w).map(|k| (k + w) % (2 * w)).collect();
        Self::from_permutation(&perm)
    }

    /// Exchanges `aₙ ↔ b₋ₙ`.
    pub fn reflected_swap(order: usize) -> Self {
        let w = 2 * order + 1;
        let perm: Vec<usize> = (0..2 * w)
            .map(|k| if k < w { w + (w - 1 - k) } else { w - 1 - (k - w) })
            .collect();
        Self::from_permutation(&perm)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim + c]
    }

    fn as_complex(&self) -> SquareMatrix {
        SquareMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    /// Max entry of `|P² − I|`.
    pub fn involution_residual(&self) -> f64 {
        let p = self.as_complex();
        let sq = p.matmul(&p);
        let mut id = SquareMatrix::zeros(self.dim);
        for k in 0..self.dim {
            id.set(k, k, Complex64::new(1.0, 0.0));
        }
        sq.max_abs_diff(&id)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|r| (0..self.dim).all(|c| self.get(r, c) == self.get(c, r)))
    }
}

pub fn ab_transform(alpha0: Complex64, beta0: Complex64) -> (Complex64, Complex64) {
    (
        (alpha0 + I * beta0) * FRAC_1_SQRT_2,
        (alpha0 - I * beta0) * FRAC_1_SQRT_2,
    )
}

/// `α₀ = (a + b)/√2`, `β₀ = (a − b)/(√2 i)`.
pub fn ab_inverse(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    ((a + b) * FRAC_1_SQRT_2, -I * (a - b) * FRAC_1_SQRT_2)
}

pub fn build_h_eff(pt: &PTParams) -> EffectiveHamiltonian {
    let (g, j) = (pt.g, pt.j);
    EffectiveHamiltonian(SquareMatrix {
        dim: 2,
        data: vec![-I * g, I * j, -I * j, I * g],
    })
}

impl EffectiveHamiltonian {
    pub fn matrix(&self) -> &SquareMatrix {
        &self.0
    }

    /// `‖H − H†‖_max`; equals `2g` for the effective Hamiltonian.
    pub fn hermiticity_residual(&self) -> f64 {
        self.0.max_abs_diff(&self.0.adjoint())
    }

    /// Roots of the characteristic polynomial, larger imaginary part first.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let m = &self.0;
        let tr = m.trace();
        let det = m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0);
        let disc = (tr * tr * 0.25 - det).sqrt();
        let (l1, l2) = (tr * 0.5 + disc, tr * 0.5 - disc);
        if (l1.im, l1.re) >= (l2.im, l2.re) {
            [l1, l2]
        } else {
            [l2, l1]
        }
    }
}

/// Tests `P · conj(H) · P = H`.
pub fn is_pt_symmetric(h: &SquareMatrix, p: &ParityOperator, tol: f64) -> Result<PtCheck> {
    if h.dim() != p.dim() {
        return Err(QaserError::DimensionMismatch {
            expected: h.dim(),
            got: p.dim(),
        });
    }
    let inv = p.involution_residual();
    if inv > tol {
        return Err(QaserError::Domain(format!(
            "parity operator is not an involution (|P² − I| = {inv:e})"
        )));
    }
    let pc = p.as_complex();
    let residual = pc.matmul(&h.conj()).matmul(&pc).max_abs_diff(h);
    Ok(PtCheck {
        symmetric: residual <= tol,
        residual,
    })
}

pub fn classify(pt: &PTParams) -> PhaseClassification {
    let (g, j) = (pt.g, pt.j);
    let scale = g.abs().max(j.abs());
    if (g - j).abs() <= EXCEPTIONAL_TOLERANCE * scale {
        return PhaseClassification {
            label: PhaseLabel::Exceptional,
            eigenvalues: [ZERO; 2],
        };
    }
    // (g − J)(g + J) keeps precision near the exceptional point
    let gap = (g - j) * (g + j);
    if gap > 0.0 {
        let lam = gap.sqrt();
        PhaseClassification {
            label: PhaseLabel::Broken,
            eigenvalues: [I * lam, -I * lam],
        }
    } else {
        let w = (-gap).sqrt();
        PhaseClassification {
            label: PhaseLabel::Unbroken,
            eigenvalues: [Complex64::new(w, 0.0), Complex64::new(-w, 0.0)],
        }
    }
}

pub fn eigenvalues_h_eff(pt: &PTParams) -> PhaseClassification {
    classify(pt)
}

/// Everything the `pt` subcommand reports.
#[derive(Debug, Clone, Serialize)]
pub struct PtReport {
    pub g: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub lambda: f64,
    /// `[[re, im], [re, im]]`
    pub eigenvalues: [[f64; 2]; 2],
    pub phase: PhaseLabel,
    pub pt_residual: f64,
    pub hermiticity_residual: f64,
}

pub fn pt_report(params: &ModelParams) -> Result<PtReport> {
    let pt = pt_parameters(params)?;
    let h = build_h_eff(&pt);
    let phase = classify(&pt);
    let check = is_pt_symmetric(h.matrix(), &ParityOperator::swap(), 0.0)?;
    let ev = phase.eigenvalues;
    Ok(PtReport {
        g: pt.g,
        j: pt.j,
        lambda: pt.lambda,
        eigenvalues: [[ev[0].re, ev[0].im], [ev[1].re, ev[1].im]],
        phase: phase.label,
        pt_residual: check.residual,
        hermiticity_residual: h.hermiticity_residual(),
    })
}

/// PT residuals of the truncated Floquet system after the blockwise a/b
/// rotation, for the two candidate parities.
#[derive(Debug, Clone, Serialize)]
pub struct ExtendedPtReport {
    #[serde(rename = "N")]
    pub order: usize,
    /// `aₙ ↔ bₙ` for every n
    pub swap_residual: f64,
    /// `aₙ ↔ b₋ₙ`
    pub reflected_swap_residual: f64,
}

/// Block rotation `T` taking stacked `(α, β)` components to `(a, b)`.
pub fn block_ab_transform(order: usize) -> SquareMatrix {
    let w = 2 * order + 1;
    let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let mut t = SquareMatrix::zeros(2 * w);
    for k in 0..w {
        t.set(k, k, s);
        t.set(k, w + k, I * s);
        t.set(w + k, k, s);
        t.set(w + k, w + k, -I * s);
    }
    t
}

/// `H_N = −i T M T⁻¹` with `T` from [`block_ab_transform`].
pub fn floquet_hamiltonian(params: &ModelParams, order: usize) -> Result<SquareMatrix> {
    let m = build_floquet_matrix(params, order)?;
    let d = m.dim();
    let mut dense = SquareMatrix::zeros(d);
    for r in 0..d {
        for c in 0..d {
            dense.set(r, c, m.get(r, c));
        }
    }
    let t = block_ab_transform(order);
    // T is unitary
    Ok(t.matmul(&dense).matmul(&t.adjoint()).scale(-I))
}

pub fn extended_pt_report(params: &ModelParams, order: usize) -> Result<ExtendedPtReport> {
    let h = floquet_hamiltonian(params, order)?;
    let swap = is_pt_symmetric(&h, &ParityOperator::blockwise_swap(order), f64::INFINITY)?;
    let reflected = is_pt_symmetric(&h, &ParityOperator::reflected_swap(order), f64::INFINITY)?;
    Ok(ExtendedPtReport {
        order,
        swap_residual: swap.residual,
        reflected_swap_residual: reflected.residual,
    })
}
