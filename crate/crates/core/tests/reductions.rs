//! Envelope, rotating-wave and Floquet reductions checked against each other.

use num_complex::Complex64;
use qaser_dyn::analysis::{direct_gain, fit_exponential_rate, DEFAULT_WINDOW};
use qaser_dyn::classical::{
    default_dt_envelope, envelope_mismatch, integrate_envelope, integrate_phi, phi_series_to_envelope,
    phi_to_envelope, with_envelope_magnitudes, EnvelopeState, OscillatorState,
};
use qaser_dyn::floquet::{
    build_floquet_matrix, growth_rate_with, reconstructed_trajectory, reduce_base, FloquetState, GrowthRateOptions,
};
use qaser_dyn::model::{derive_normal_modes, pt_parameters};
use qaser_dyn::ode::{integrate_complex, unpack_complex};
use qaser_dyn::pt::{ab_transform, build_h_eff};
use qaser_dyn::{ModelParams, TimeGrid};

fn resonant() -> ModelParams {
    ModelParams::resonant_default()
}

fn envelope_seed(p: &ModelParams) -> EnvelopeState {
    phi_to_envelope(&OscillatorState::seed(), 0.0, &derive_normal_modes(p).unwrap())
}

#[test]
fn undriven_envelopes_conserve_energy() {
    let p = resonant().with_delta(0.0);
    let grid = TimeGrid::new(0.0, 50.0, 1e-2).unwrap();
    let init = EnvelopeState::new(Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.5));
    for keep in [true, false] {
        let series = integrate_envelope(&p, &init, &grid, keep).unwrap();
        let (_, row) = series.last().unwrap();
        let e = EnvelopeState::new(Complex64::new(row[0], row[1]), Complex64::new(row[2], row[3]));
        assert!((e.energy() - init.energy()).abs() < 1e-12);
    }
}

#[test]
fn rotating_wave_error_shrinks_with_delta() {
    let mut previous = f64::INFINITY;
    for delta in [0.4, 0.2, 0.1] {
        let p = resonant().with_delta(delta);
        let grid = TimeGrid::new(0.0, 50.0, default_dt_envelope(p.nu_d)).unwrap();
        let init = envelope_seed(&p);
        let full = integrate_envelope(&p, &init, &grid, true).unwrap();
        let rwa = integrate_envelope(&p, &init, &grid, false).unwrap();
        let err = envelope_mismatch(&rwa, &full);
        assert!(err < previous, "delta {delta}: {err} >= {previous}");
        previous = err;
    }
}

#[test]
fn direct_integration_maps_onto_full_envelopes() {
    let p = resonant();
    let modes = derive_normal_modes(&p).unwrap();
    let grid = TimeGrid::new(0.0, 20.0, qaser_dyn::checks::fine_dt(&p).unwrap()).unwrap();
    let direct = phi_series_to_envelope(&integrate_phi(&p, &OscillatorState::seed(), &grid).unwrap(), &modes).unwrap();
    let env = integrate_envelope(&p, &envelope_seed(&p), &grid, true).unwrap();
    assert!(envelope_mismatch(&direct, &env) < 1e-6);
}

#[test]
fn floquet_reconstruction_tracks_rotating_wave_envelope() {
    let p = resonant();
    let m = build_floquet_matrix(&p, 4).unwrap();
    let grid = TimeGrid::new(0.0, 40.0, default_dt_envelope(p.nu_d)).unwrap();
    let init = envelope_seed(&p);
    let rebuilt = reconstructed_trajectory(&m, &FloquetState::base(4, init.alpha, init.beta), &grid).unwrap();
    let rwa = integrate_envelope(&p, &init, &grid, false).unwrap();
    let err = envelope_mismatch(&rebuilt, &rwa);
    assert!(err < 0.02, "mismatch {err}");
}

#[test]
fn floquet_rate_is_seed_independent() {
    let p = resonant();
    let m = build_floquet_matrix(&p, 4).unwrap();
    let rates: Vec<f64> = [1u64, 7, 99, 2024]
        .iter()
        .map(|&seed| growth_rate_with(&m, &GrowthRateOptions { seed, ..Default::default() }).unwrap().rate)
        .collect();
    let reference = rates[0];
    for r in &rates {
        assert!((r / reference - 1.0).abs() < 0.02, "{rates:?}");
    }
}

#[test]
fn base_block_agrees_with_effective_hamiltonian() {
    let p = ModelParams::new(8.0, 4.0, 0.4, 2.0).unwrap();
    let base = reduce_base(&p).unwrap();
    let h = build_h_eff(&pt_parameters(&p).unwrap());
    let i = Complex64::i();
    let ih = [[i * h.matrix().get(0, 0), i * h.matrix().get(0, 1)], [i * h.matrix().get(1, 0), i * h.matrix().get(1, 1)]];
    let grid = TimeGrid::new(0.0, 30.0, 1e-3).unwrap();
    let (alpha0, beta0) = (Complex64::new(1.0, 0.2), Complex64::new(-0.4, 0.7));
    let modes = integrate_complex(
        |_, z: &[Complex64], dz: &mut [Complex64]| {
            dz[0] = base[0][0] * z[0] + base[0][1] * z[1];
            dz[1] = base[1][0] * z[0] + base[1][1] * z[1];
        },
        &[alpha0, beta0],
        &grid,
    )
    .unwrap();
    let (a0, b0) = ab_transform(alpha0, beta0);
    let ab = integrate_complex(
        |_, z: &[Complex64], dz: &mut [Complex64]| {
            dz[0] = ih[0][0] * z[0] + ih[0][1] * z[1];
            dz[1] = ih[1][0] * z[0] + ih[1][1] * z[1];
        },
        &[a0, b0],
        &grid,
    )
    .unwrap();
    for (m_row, ab_row) in modes.rows().iter().zip(ab.rows()) {
        let m = unpack_complex(m_row);
        let v = unpack_complex(ab_row);
        let (a, b) = ab_transform(m[0], m[1]);
        let scale = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        assert!((a - v[0]).norm().max((b - v[1]).norm()) <= 1e-9 * scale);
    }
}

#[test]
fn classical_growth_near_analytic_gain() {
    let p = resonant();
    let fit = direct_gain(&p, &OscillatorState::seed(), DEFAULT_WINDOW, None).unwrap();
    assert!((fit.rate / 0.1008 - 1.0).abs() < 0.05, "rate {}", fit.rate);
}

#[test]
fn rotating_wave_growth_near_analytic_gain() {
    let p = resonant();
    let lambda = pt_parameters(&p).unwrap().lambda;
    let grid = TimeGrid::new(0.0, 80.0, default_dt_envelope(p.nu_d)).unwrap();
    let series = with_envelope_magnitudes(&integrate_envelope(&p, &envelope_seed(&p), &grid, false).unwrap()).unwrap();
    for col in ["abs_alpha", "abs_beta"] {
        let fit = fit_exponential_rate(&series, col, DEFAULT_WINDOW).unwrap();
        assert!((fit.rate / lambda - 1.0).abs() < 0.03, "{col}: {}", fit.rate);
    }
}
