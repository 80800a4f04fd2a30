use serde::{Deserialize, Serialize};

use super::step::{kam_step, KamConfig};
use super::{KamSchedule, StageRecord};
use crate::error::KamError;
use crate::series::{MassVector, TFSeries};

/// State after `stage` inductive steps: `H^{(n)} = omega_n . J + P^{(n)}`.
///
/// The iteration runs at a single frequency point: `frequency` starts at the
/// base value and absorbs each shift `v_{n+1}`, instead of reparametrising
/// the frequency domain.
#[derive(Clone, Debug)]
pub struct IterationState {
    pub stage: usize,
    pub remainder: TFSeries,
    pub frequency: Vec<f64>,
    pub base_frequency: Vec<f64>,
    pub shifts: Vec<Vec<f64>>,
    pub generators: Vec<TFSeries>,
}

impl IterationState {
    pub fn new(perturbation: TFSeries, xi: &[f64]) -> Self {
        Self {
            stage: 0,
            remainder: perturbation,
            frequency: xi.to_vec(),
            base_frequency: xi.to_vec(),
            shifts: Vec::new(),
            generators: Vec::new(),
        }
    }

    /// Splits `H0 = xi.J + P` and starts at stage 0.
    pub fn from_hamiltonian(h0: &TFSeries, xi: &[f64], m: &MassVector) -> Self {
        let p = h0 - &TFSeries::frequency_part(xi, m);
        Self::new(p, xi)
    }

    /// Current normal-form part `omega_n . J`.
    pub fn normal_part(&self, m: &MassVector) -> TFSeries {
        TFSeries::frequency_part(&self.frequency, m)
    }
}

#[derive(Debug)]
pub struct IterationRun {
    pub state: IterationState,
    pub records: Vec<StageRecord>,
    /// Set when the run stopped early; `records` then holds the completed stages.
    pub failure: Option<KamError>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFit {
    /// Slope of `ln ||P^{(n+1)}||` against `ln ||P^{(n)}||`.
    pub exponent: f64,
    pub intercept: f64,
    pub points: usize,
}

impl IterationRun {
    /// Tracked norms `||P^{(0)}||_0, ..., ||P^{(N)}||_N`.
    pub fn tracked_norms(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.records.iter().map(|r| r.norm_p).collect();
        if let Some(last) = self.records.last() {
            v.push(last.norm_p_next);
        }
        v
    }

    /// Least-squares fit of successive tracked norms; `None` with fewer than
    /// two steps or when a norm vanishes.
    pub fn convergence_fit(&self) -> Option<ConvergenceFit> {
        let norms = self.tracked_norms();
        if norms.len() < 3 || norms.iter().any(|v| !(*v > 0.0)) {
            return None;
        }
        let xs: Vec<f64> = norms[..norms.len() - 1].iter().map(|v| v.ln()).collect();
        let ys: Vec<f64> = norms[1..].iter().map(|v| v.ln()).collect();
        let (slope, intercept) = crate::stats::linear_fit(&xs, &ys)?;
        Some(ConvergenceFit {
            exponent: slope,
            intercept,
            points: xs.len(),
        })
    }

    pub fn into_result(self) -> Result<Self, KamError> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

/// Runs the scheduled stages, keeping the completed records on failure.
pub fn run_iteration_partial(
    h0: &TFSeries,
    xi: &[f64],
    sched: &KamSchedule,
    m: &MassVector,
    cfg: &KamConfig,
) -> IterationRun {
    let mut state = IterationState::from_hamiltonian(h0, xi, m);
    let mut records = Vec::with_capacity(sched.stages);
    for _ in 0..sched.stages {
        match kam_step(&state, sched, m, cfg) {
            Ok(out) => {
                log::info!(
                    "stage {}: ||P|| = {:.3e} -> {:.3e} (eps_n+1 = {:.3e})",
                    out.record.n,
                    out.record.norm_p,
                    out.record.norm_p_next,
                    out.record.eps_next
                );
                records.push(out.record);
                state = out.state;
            }
            Err(e) => {
                return IterationRun {
                    state,
                    records,
                    failure: Some(e),
                }
            }
        }
    }
    IterationRun {
        state,
        records,
        failure: None,
    }
}

pub fn run_iteration(
    h0: &TFSeries,
    xi: &[f64],
    sched: &KamSchedule,
    m: &MassVector,
    cfg: &KamConfig,
) -> Result<IterationRun, KamError> {
    run_iteration_partial(h0, xi, sched, m, cfg).into_result()
}
