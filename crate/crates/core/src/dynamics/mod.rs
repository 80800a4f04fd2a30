//! Implicit-midpoint integration under the weighted symplectic form,
//! invariant-torus drift checks and the resonant-strip experiment.

mod fields;
mod strip;
mod torus;

use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;

pub use fields::{CallableField, SeriesField, StripModel};
pub use strip::{resonant_strip_experiment, StripConfig, StripRow};
pub use torus::{verify_torus, verify_torus_series, DriftReport};

/// A vector field on the flat state `x = (phi_1..phi_N, J_1..J_N)`.
pub trait VectorField: Sync {
    /// Length of the state, `2N`.
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64], out: &mut [f64]);

    fn energy(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// `Df(x) v`, by central differences unless overridden.
    fn jvp(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let norm = v.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if norm == 0.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let h = 1e-6 / norm;
        let plus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = x.iter().zip(v).map(|(a, b)| a - h * b).collect();
        let mut fp = vec![0.0; x.len()];
        let mut fm = vec![0.0; x.len()];
        self.eval(&plus, &mut fp);
        self.eval(&minus, &mut fm);
        for (o, (p, m)) in out.iter_mut().zip(fp.iter().zip(&fm)) {
            *o = (p - m) / (2.0 * h);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowSpec {
    pub step: f64,
    pub time: f64,
    /// Fixed-point tolerance, relative to `max(1, |x|_inf)`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Keep every `record_every`-th state.
    pub record_every: usize,
}

impl Default for FlowSpec {
    fn default() -> Self {
        Self {
            step: 1e-2,
            time: 1.0,
            tol: 1e-13,
            max_sweeps: 50,
            record_every: 1,
        }
    }
}

impl FlowSpec {
    pub fn new(step: f64, time: f64) -> Result<Self, DynamicsError> {
        let s = Self {
            step,
            time,
            ..Self::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn recording(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.step > 0.0) || !(self.tol > 0.0) || !(self.time >= 0.0) || self.max_sweeps == 0 {
            return Err(DynamicsError::Invalid(format!(
                "need step > 0, tol > 0, time >= 0; got {}, {}, {}",
                self.step, self.tol, self.time
            )));
        }
        Ok(())
    }

    /// Number of steps, the last one landing on `time`.
    pub fn steps(&self) -> usize {
        (self.time / self.step - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Energies at the recorded states, empty when the field has none.
    pub energy: Vec<f64>,
    pub max_sweeps_used: usize,
}

impl Trajectory {
    /// `max |E(t) - E(0)|`
    pub fn energy_drift(&self) -> f64 {
        match self.energy.first() {
            Some(e0) => self.energy.iter().fold(0.0, |a, e| f64::max(a, (e - e0).abs())),
            None => 0.0,
        }
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().map(|s| s.as_slice()).unwrap_or(&[])
    }
}

/// One implicit-midpoint step `x1 = x0 + h f((x0 + x1) / 2)` of signed
/// length `h`. Returns the sweep count.
pub fn midpoint_step<F: VectorField + ?Sized>(
    field: &F,
    x0: &[f64],
    h: f64,
    tol: f64,
    max_sweeps: usize,
    t: f64,
    x1: &mut Vec<f64>,
) -> Result<usize, DynamicsError> {
    let n = x0.len();
    let mut f = vec![0.0; n];
    field.eval(x0, &mut f);
    x1.clear();
    x1.extend(x0.iter().zip(&f).map(|(a, b)| a + h * b));
    let mut mid = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        for i in 0..n {
            mid[i] = 0.5 * (x0[i] + x1[i]);
        }
        field.eval(&mid, &mut f);
        residual = 0.0;
        let mut scale = 1.0f64;
        for i in 0..n {
            let next = x0[i] + h * f[i];
            residual = residual.max((next - x1[i]).abs());
            scale = scale.max(next.abs());
            x1[i] = next;
        }
        if residual <= tol * scale {
            return Ok(sweep);
        }
    }
    Err(DynamicsError::StepSize {
        t,
        sweeps: max_sweeps,
        residual,
    })
}

/// Integrates from `x0` over `[0, spec.time]`, calling `observe(t, x)` at
/// every step, including `t = 0`.
pub fn integrate_observed<F, O>(field: &F, spec: &FlowSpec, x0: &[f64], mut observe: O) -> Result<usize, DynamicsError>
where
    F: VectorField + ?Sized,
    O: FnMut(usize, f64, &[f64]),
{
    spec.validate()?;
    if x0.len() != field.dim() {
        return Err(DynamicsError::Invalid(format!("state has {} entries, field expects {}", x0.len(), field.dim())));
    }
    let steps = spec.steps();
    let mut x = x0.to_vec();
    let mut next = Vec::with_capacity(x.len());
    let mut worst = 0;
    observe(0, 0.0, &x);
    for k in 0..steps {
        let t0 = k as f64 * spec.step;
        let h = (spec.time - t0).min(spec.step);
        worst = worst.max(midpoint_step(field, &x, h, spec.tol, spec.max_sweeps, t0, &mut next)?);
        std::mem::swap(&mut x, &mut next);
        observe(k + 1, t0 + h, &x);
    }
    Ok(worst)
}

/// Recorded trajectory from `x0`.
pub fn integrate<F: VectorField + ?Sized>(field: &F, spec: &FlowSpec, x0: &[f64]) -> Result<Trajectory, DynamicsError> {
    let mut tr = Trajectory::default();
    let steps = spec.steps();
    let every = spec.record_every.max(1);
    tr.max_sweeps_used = integrate_observed(field, spec, x0, |k, t, x| {
        if k % every == 0 || k == steps {
            tr.times.push(t);
            tr.states.push(x.to_vec());
            if let Some(e) = field.energy(x) {
                tr.energy.push(e);
            }
        }
    })?;
    Ok(tr)
}

/// Flow of `(x, v) -> (f(x), Df(x) v)`, for tangent dynamics.
pub struct TangentField<'a, F: ?Sized> {
    pub base: &'a F,
}

impl<F: VectorField + ?Sized> VectorField for TangentField<'_, F> {
    fn dim(&self) -> usize {
        2 * self.base.dim()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.base.dim();
        let (s, v) = x.split_at(n);
        let (fs, fv) = out.split_at_mut(n);
        self.base.eval(s, fs);
        self.base.jvp(s, v, fv);
    }
}

/// Signed angle difference folded into `(-pi, pi]`.
pub fn wrap_angle(d: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = d.rem_euclid(tau);
    if r > std::f64::consts::PI {
        r - tau
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `phi' = J`, `J' = -sin phi` with `m = 1`.
    struct Pendulum;

    impl VectorField for Pendulum {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, x: &[f64], out: &mut [f64]) {
            out[0] = x[1];
            out[1] = -x[0].sin();
        }
        fn energy(&self, x: &[f64]) -> Option<f64> {
            Some(0.5 * x[1] * x[1] - x[0].cos())
        }
    }

    #[test]
    fn step_count_hits_end() {
        let s = FlowSpec::new(0.3, 1.0).unwrap();
        assert_eq!(s.steps(), 4);
        assert_eq!(FlowSpec::new(0.25, 1.0).unwrap().steps(), 4);
        assert!(FlowSpec::new(0.0, 1.0).is_err());
    }

    #[test]
    fn pendulum_energy_bounded_and_second_order() {
        let x0 = [1.0, 0.0];
        let tr = integrate(&Pendulum, &FlowSpec::new(0.01, 100.0).unwrap().recording(100), &x0).unwrap();
        assert!(tr.energy_drift() < 1e-4);
        let end = |h: f64| integrate(&Pendulum, &FlowSpec::new(h, 5.0).unwrap(), &x0).unwrap().last().to_vec();
        let fine = end(0.00125);
        let e1 = (end(0.02)[0] - fine[0]).abs();
        let e2 = (end(0.01)[0] - fine[0]).abs();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn time_reversal() {
        let x0 = vec![0.7, 0.3];
        let mut x = x0.clone();
        let mut next = Vec::new();
        for k in 0..500 {
            midpoint_step(&Pendulum, &x, 0.02, 1e-13, 50, k as f64, &mut next).unwrap();
            std::mem::swap(&mut x, &mut next);
        }
        for k in 0..500 {
            midpoint_step(&Pendulum, &x, -0.02, 1e-13, 50, k as f64, &mut next).unwrap();
            std::mem::swap(&mut x, &mut next);
        }
        assert!((x[0] - x0[0]).abs() < 1e-12 && (x[1] - x0[1]).abs() < 1e-12);
    }

    #[test]
    fn huge_step_reports_step_size() {
        let r = integrate(&Pendulum, &FlowSpec::new(5.0, 50.0).unwrap(), &[3.0, 2.0]);
        assert!(matches!(r, Err(DynamicsError::StepSize { .. })));
    }

    #[test]
    fn finite_difference_jvp() {
        let mut out = [0.0; 2];
        Pendulum.jvp(&[0.4, 0.1], &[1.0, 2.0], &mut out);
        assert!((out[0] - 2.0).abs() < 1e-8 && (out[1] + 0.4f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn wraps() {
        assert!((wrap_angle(7.0) - (7.0 - std::f64::consts::TAU)).abs() < 1e-15);
        assert!((wrap_angle(-3.5) - (-3.5 + std::f64::consts::TAU)).abs() < 1e-15);
        assert_eq!(wrap_angle(0.25), 0.25);
    }
}
