//! Moment propagation from vacuum: physicality and conservation identities.

use qaser_dyn::model::pt_parameters;
use qaser_dyn::quantum::{propagate_moments, MomentSet};
use qaser_dyn::{ModelParams, TimeGrid};

fn trajectory(dt: f64, t_end: f64) -> (Vec<f64>, Vec<MomentSet>) {
    let pt = pt_parameters(&ModelParams::vacuum_default()).unwrap();
    let grid = TimeGrid::new(0.0, t_end, dt).unwrap();
    let (mut ts, mut ms) = (Vec::new(), Vec::new());
    propagate_moments(&pt, &grid, |t, m| {
        ts.push(t);
        ms.push(*m);
    })
    .unwrap();
    (ts, ms)
}

#[test]
fn moments_stay_physical() {
    let (_, ms) = trajectory(1e-2, 60.0);
    for m in &ms {
        assert!(m.n_a >= 0.0 && m.n_b >= 0.0);
        assert!(m.is_physical(1e-9));
    }
}

#[test]
fn total_occupation_rate_identity() {
    let pt = pt_parameters(&ModelParams::vacuum_default()).unwrap();
    let dt = 1e-3;
    let (_, ms) = trajectory(dt, 10.0);
    for k in 1..ms.len() - 1 {
        let total = |m: &MomentSet| m.n_a + m.n_b;
        let fd = (total(&ms[k + 1]) - total(&ms[k - 1])) / (2.0 * dt);
        let expected = 2.0 * pt.g * (ms[k].n_a - ms[k].n_b) + 2.0 * pt.g;
        assert!((fd - expected).abs() <= 1e-6 * expected.abs().max(1.0), "k = {k}");
    }
}
