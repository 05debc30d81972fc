//! Fixed-step classical Runge–Kutta integration and the sampled time-series
//! container shared by every simulation.
//!
//! States are flat `f64` slices. Complex systems go through
//! [`integrate_complex`], which stores each component as an interleaved
//! `(re, im)` pair.

use std::collections::HashSet;
use std::io::{self, Write};

use num_complex::Complex64;

use crate::error::{QaserError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, dt: f64) -> Result<Self> {
        let grid = Self { t_start, t_end, dt };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.dt.is_finite()) {
            return Err(QaserError::InvalidGrid("grid values must be finite".into()));
        }
        if self.t_end <= self.t_start {
            return Err(QaserError::InvalidGrid(format!(
                "t_end ({}) must exceed t_start ({})",
                self.t_end, self.t_start
            )));
        }
        if self.dt <= 0.0 {
            return Err(QaserError::InvalidGrid(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if (self.t_end - self.t_start) / self.dt < 1.0 - 1e-12 {
            return Err(QaserError::InvalidGrid(format!(
                "dt = {} exceeds the interval length {}",
                self.dt,
                self.t_end - self.t_start
            )));
        }
        Ok(())
    }

    /// Number of steps. The requested `dt` is shrunk, never stretched, so
    /// that an integer number of steps lands exactly on `t_end`.
    pub fn steps(&self) -> usize {
        let ratio = (self.t_end - self.t_start) / self.dt;
        (ratio - 1e-9).ceil().max(1.0) as usize
    }

    /// Effective step size.
    pub fn step(&self) -> f64 {
        (self.t_end - self.t_start) / self.steps() as f64
    }

    pub fn time_at(&self, k: usize) -> f64 {
        if k == self.steps() {
            self.t_end
        } else {
            self.t_start + k as f64 * self.step()
        }
    }

    pub fn halved(&self) -> Self {
        Self {
            dt: self.step() / 2.0,
            ..*self
        }
    }
}

/// Sampled trajectory with labelled real-valued columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    labels: Vec<String>,
    times: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut seen = HashSet::new();
        for l in &labels {
            if l == "t" || !seen.insert(l.as_str()) {
                return Err(QaserError::Domain(format!("duplicate column label `{l}`")));
            }
        }
        Ok(Self {
            labels,
            times: Vec::new(),
            rows: Vec::new(),
        })
    }

    pub fn push(&mut self, t: f64, row: Vec<f64>) -> Result<()> {
        if row.len() != self.labels.len() {
            return Err(QaserError::DimensionMismatch {
                expected: self.labels.len(),
                got: row.len(),
            });
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(QaserError::Domain(format!(
                    "sample times must be strictly increasing ({t} after {last})"
                )));
            }
        }
        self.times.push(t);
        self.rows.push(row);
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        Some((*self.times.last()?, self.rows.last()?.as_slice()))
    }

    pub fn column_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| QaserError::UnknownColumn(label.to_owned()))
    }

    pub fn column(&self, label: &str) -> Result<Vec<f64>> {
        let idx = self.column_index(label)?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Builds a new series from this one's sample times and a per-row map.
    pub fn map_rows<S, F>(&self, labels: impl IntoIterator<Item = S>, mut f: F) -> Result<Self>
    where
        S: Into<String>,
        F: FnMut(f64, &[f64]) -> Vec<f64>,
    {
        let mut out = Self::new(labels)?;
        for (t, row) in self.times.iter().zip(&self.rows) {
            out.push(*t, f(*t, row))?;
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t")?;
        for l in &self.labels {
            write!(w, ",{l}")?;
        }
        writeln!(w)?;
        for (t, row) in self.times.iter().zip(&self.rows) {
            write!(w, "{}", format_float(*t))?;
            for v in row {
                write!(w, ",{}", format_float(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

/// 17 significant digits, scientific notation.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reusable scratch space for classical RK4 steps.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn step<F>(&mut self, rhs: &mut F, t: f64, y: &mut [f64], h: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let half = 0.5 * h;
        rhs(t, y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + half * self.k1[i];
        }
        rhs(t + half, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + half * self.k2[i];
        }
        rhs(t + half, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        rhs(t + h, &self.tmp, &mut self.k4);
        let sixth = h / 6.0;
        for i in 0..n {
            y[i] += sixth * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

/// Integrates `y' = rhs(t, y)` and samples every grid point, endpoints
/// included. Columns are labelled `y0, y1, ...`.
pub fn integrate<F>(rhs: F, initial: &[f64], grid: &TimeGrid) -> Result<TimeSeries>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let labels: Vec<String> = (0..initial.len()).map(|i| format!("y{i}")).collect();
    integrate_labeled(rhs, initial, grid, labels)
}

pub fn integrate_labeled<F, S>(
    rhs: F,
    initial: &[f64],
    grid: &TimeGrid,
    labels: impl IntoIterator<Item = S>,
) -> Result<TimeSeries>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: Into<String>,
{
    let mut series = TimeSeries::new(labels)?;
    if series.labels().len() != initial.len() {
        return Err(QaserError::DimensionMismatch {
            expected: series.labels().len(),
            got: initial.len(),
        });
    }
    integrate_with(rhs, initial, grid, |t, y| {
        series.push(t, y.to_vec()).expect("grid times are increasing")
    })?;
    Ok(series)
}

/// Drives the integration and hands each sample to `observe` instead of
/// storing it. Returns the final state.
pub fn integrate_with<F, O>(
    mut rhs: F,
    initial: &[f64],
    grid: &TimeGrid,
    mut observe: O,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]),
{
    grid.validate()?;
    if let Some(_) = initial.iter().find(|v| !v.is_finite()) {
        return Err(QaserError::NonFinite { time: grid.t_start });
    }
    let steps = grid.steps();
    let h = grid.step();
    let mut y = initial.to_vec();
    let mut stepper = Rk4::new(y.len());
    observe(grid.t_start, &y);
    for k in 0..steps {
        let t = grid.time_at(k);
        stepper.step(&mut rhs, t, &mut y, h);
        let t_next = grid.time_at(k + 1);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(QaserError::NonFinite { time: t_next });
        }
        observe(t_next, &y);
    }
    Ok(y)
}

pub fn pack_complex(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn unpack_complex(y: &[f64]) -> Vec<Complex64> {
    y.chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect()
}

/// Wraps a complex right-hand side as a real one over interleaved pairs.
pub fn complex_rhs<F>(mut rhs: F, dim: usize) -> impl FnMut(f64, &[f64], &mut [f64])
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let mut z = vec![Complex64::new(0.0, 0.0); dim];
    let mut dz = vec![Complex64::new(0.0, 0.0); dim];
    move |t, y, dy| {
        for (zi, p) in z.iter_mut().zip(y.chunks_exact(2)) {
            *zi = Complex64::new(p[0], p[1]);
        }
        rhs(t, &z, &mut dz);
        for (d, p) in dz.iter().zip(dy.chunks_exact_mut(2)) {
            p[0] = d.re;
            p[1] = d.im;
        }
    }
}

/// Complex integration; columns are `re_z0, im_z0, re_z1, ...`.
pub fn integrate_complex<F>(rhs: F, initial: &[Complex64], grid: &TimeGrid) -> Result<TimeSeries>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let labels: Vec<String> = (0..initial.len())
        .flat_map(|i| [format!("re_z{i}"), format!("im_z{i}")])
        .collect();
    integrate_labeled(
        complex_rhs(rhs, initial.len()),
        &pack_complex(initial),
        grid,
        labels,
    )
}

/// Endpoint differences between successive dt-halvings, starting from
/// `grid.dt`. Returns `refinements` entries using `refinements + 1` runs.
pub fn convergence_check<F>(
    mut rhs: F,
    initial: &[f64],
    grid: &TimeGrid,
    refinements: usize,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if refinements < 2 {
        return Err(QaserError::Domain(format!(
            "convergence check needs at least 2 refinements, got {refinements}"
        )));
    }
    let mut g = *grid;
    let mut previous = integrate_with(&mut rhs, initial, &g, |_, _| {})?;
    let mut diffs = Vec::with_capacity(refinements);
    for _ in 0..refinements {
        g = g.halved();
        let current = integrate_with(&mut rhs, initial, &g, |_, _| {})?;
        let diff = previous
            .iter()
            .zip(&current)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        diffs.push(diff);
        previous = current;
    }
    Ok(diffs)
}

/// `log₂(e_k / e_{k+1})` for consecutive entries.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn harmonic(_t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = -y[0];
    }

    #[test]
    fn harmonic_oscillator_full_period() {
        let grid = TimeGrid::new(0.0, 2.0 * PI, 1e-3).unwrap();
        let s = integrate(harmonic, &[1.0, 0.0], &grid).unwrap();
        let (t, y) = s.last().unwrap();
        assert_eq!(t, 2.0 * PI);
        assert!((y[0] - 1.0).abs() < 1e-9);
        assert!(y[1].abs() < 1e-9);
        assert_eq!(s.len(), grid.steps() + 1);
        assert_eq!(s.times()[0], 0.0);
    }

    #[test]
    fn exponential_growth() {
        let grid = TimeGrid::new(0.0, 10.0, 0.01).unwrap();
        let s = integrate(|_, y, dy| dy[0] = 0.1 * y[0], &[1.0], &grid).unwrap();
        assert!((s.last().unwrap().1[0] - 1f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn halving_step_gains_factor_sixteen() {
        let err = |dt: f64| {
            let grid = TimeGrid::new(0.0, 2.0 * PI, dt).unwrap();
            let y = integrate_with(harmonic, &[1.0, 0.0], &grid, |_, _| {}).unwrap();
            ((y[0] - 1.0).powi(2) + y[1].powi(2)).sqrt()
        };
        let ratio = err(2.0 * PI / 64.0) / err(2.0 * PI / 128.0);
        assert!((ratio - 16.0).abs() < 0.2 * 16.0, "ratio {ratio}");
    }

    #[test]
    fn convergence_check_orders() {
        let grid = TimeGrid::new(0.0, 2.0 * PI, 2.0 * PI / 32.0).unwrap();
        let errs = convergence_check(harmonic, &[1.0, 0.0], &grid, 3).unwrap();
        assert_eq!(errs.len(), 3);
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
        for p in observed_orders(&errs) {
            assert!((3.5..=4.5).contains(&p), "order {p}");
        }
        let zero = convergence_check(|_, _, dy: &mut [f64]| dy.fill(0.0), &[1.0, 2.0], &grid, 2)
            .unwrap();
        assert_eq!(zero, vec![0.0, 0.0]);
        assert!(convergence_check(harmonic, &[1.0, 0.0], &grid, 1).is_err());
    }

    #[test]
    fn non_finite_state_reports_time() {
        let grid = TimeGrid::new(0.0, 10.0, 0.5).unwrap();
        let err = integrate(|_, y, dy| dy[0] = 1e200 * y[0] * y[0], &[1e10], &grid).unwrap_err();
        match err {
            QaserError::NonFinite { time } => assert_eq!(time, 0.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 0.0, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.0).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 2.0).is_err());
        let g = TimeGrid::new(0.0, 1.0, 0.3).unwrap();
        assert_eq!(g.steps(), 4);
        assert_relative_eq!(g.step(), 0.25);
        assert_eq!(TimeGrid::new(0.0, 1.0, 0.25).unwrap().steps(), 4);
    }

    #[test]
    fn series_rejects_bad_rows() {
        let mut s = TimeSeries::new(["a", "b"]).unwrap();
        s.push(0.0, vec![1.0, 2.0]).unwrap();
        assert!(s.push(0.0, vec![1.0, 2.0]).is_err());
        assert!(s.push(1.0, vec![1.0]).is_err());
        assert!(TimeSeries::new(["a", "a"]).is_err());
        assert!(s.column("c").is_err());
        assert_eq!(s.column("b").unwrap(), vec![2.0]);
    }

    #[test]
    fn csv_layout() {
        let mut s = TimeSeries::new(["x"]).unwrap();
        s.push(0.0, vec![0.1]).unwrap();
        s.push(1.0, vec![-2.5]).unwrap();
        assert_eq!(
            s.to_csv_string(),
            "t,x\n0.0000000000000000e0,1.0000000000000001e-1\n\
             1.0000000000000000e0,-2.5000000000000000e0\n"
        );
        let parsed: f64 = format_float(0.1).parse().unwrap();
        assert_eq!(parsed, 0.1);
    }

    #[test]
    fn complex_rotation() {
        let grid = TimeGrid::new(0.0, PI, 1e-3).unwrap();
        let i = Complex64::new(0.0, 1.0);
        let s = integrate_complex(
            |_, z, dz| dz[0] = i * z[0],
            &[Complex64::new(1.0, 0.0)],
            &grid,
        )
        .unwrap();
        let (_, y) = s.last().unwrap();
        assert!((y[0] + 1.0).abs() < 1e-10);
        assert!(y[1].abs() < 1e-10);
        assert_eq!(s.labels(), &["re_z0", "im_z0"]);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let grid = TimeGrid::new(0.0, 5.0, 0.013).unwrap();
        let a = integrate(harmonic, &[0.3, -0.7], &grid).unwrap();
        let b = integrate(harmonic, &[0.3, -0.7], &grid).unwrap();
        assert_eq!(a, b);
    }
}
