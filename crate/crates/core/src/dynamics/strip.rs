use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{integrate_observed, FlowSpec, StripModel, TangentField};
use crate::error::DynamicsError;
use crate::series::MassVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StripConfig {
    pub sites: usize,
    /// Tail masses `m_i = delta e^{-kappa i}` for `i >= 2`, `m_1 = 1`.
    pub delta: f64,
    pub kappa: f64,
    pub eps: f64,
    /// The site `j` whose detuning `xi_j - xi_1` is scanned.
    pub resonant_site: usize,
    /// Detunings in units of `sqrt(eps)`.
    pub detunings: Vec<f64>,
    /// Strip half-width `varrho`: inside means `|xi_1 - xi_j| <= varrho sqrt(eps)`.
    pub varrho: f64,
    pub ensemble: usize,
    /// Smallest initial `|theta_j|`.
    pub closest: f64,
    pub time: f64,
    pub step: f64,
    pub seed: u64,
}

impl Default for StripConfig {
    fn default() -> Self {
        Self {
            sites: 6,
            delta: 1e-6,
            kappa: 1.0,
            eps: 1e-3,
            resonant_site: 2,
            detunings: vec![0.0, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0],
            varrho: 0.5,
            ensemble: 16,
            closest: 1e-8,
            time: 2000.0,
            step: 0.05,
            seed: 0,
        }
    }
}

impl StripConfig {
    /// `xi_1 = 1`, `xi_j = 1 + r sqrt(eps)`, the rest spread by the golden
    /// ratio well away from every strip.
    pub fn frequencies(&self, r: f64) -> Vec<f64> {
        let g = 0.5 * (1.0 + 5f64.sqrt());
        (1..=self.sites)
            .map(|k| {
                if k == 1 {
                    1.0
                } else if k == self.resonant_site {
                    1.0 + r * self.eps.sqrt()
                } else {
                    1.0 + (k as f64 * g).fract() + 0.25
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripRow {
    /// `|xi_1 - xi_j| / sqrt(eps)`
    pub detuning: f64,
    pub inside: bool,
    /// Mean finite-time growth rate of the `(theta_j, I_j)` tangent.
    pub ftle: f64,
    /// The same at `eps = 0`.
    pub baseline: f64,
    /// `ftle - baseline`
    pub indicator: f64,
    /// Sign changes of the pendulum energy relative to its separatrix.
    pub crossings: usize,
    /// Share of the ensemble starting below the separatrix.
    pub libration_fraction: f64,
}

struct Member {
    ftle: f64,
    crossings: usize,
    librating: bool,
}

/// Runs the ensemble at each detuning, with `theta_j = phi_j - phi_1` and
/// `I_j = J_j - J_1` as the resonance variables. The tangent is measured in
/// `(theta, I / sqrt(eps))` so the pendulum scale is order one.
pub fn resonant_strip_experiment(cfg: &StripConfig) -> Result<Vec<StripRow>, DynamicsError> {
    let n = cfg.sites;
    let j = cfg.resonant_site;
    if n < 2 || j < 2 || j > n || !(cfg.eps > 0.0) || !(cfg.delta >= 0.0) {
        return Err(DynamicsError::Invalid(format!(
            "need 2 <= j <= N and eps > 0; got N = {n}, j = {j}, eps = {}",
            cfg.eps
        )));
    }
    let masses = if cfg.delta > 0.0 {
        MassVector::delta_tail(cfg.delta, cfg.kappa, n as u32)
            .map_err(|e| DynamicsError::Invalid(e.to_string()))?
            .log_weights()
            .iter()
            .map(|l| l.exp())
            .collect::<Vec<f64>>()
    } else {
        let mut w = vec![0.0; n];
        w[0] = 1.0;
        w
    };
    let spec = FlowSpec::new(cfg.step, cfg.time)?;
    let scale = cfg.eps.sqrt();
    let mut rows = Vec::with_capacity(cfg.detunings.len());
    for &r in &cfg.detunings {
        let xi = cfg.frequencies(r);
        let model = StripModel {
            xi: xi.clone(),
            m: masses.clone(),
            eps: cfg.eps,
        };
        let flat = StripModel { eps: 0.0, ..model.clone() };
        let runs: Vec<(Member, Member)> = (0..cfg.ensemble as u64)
            .into_par_iter()
            .map(|k| {
                let x0 = initial_state(cfg, k);
                Ok((
                    run_member(&model, &x0, j, scale, &spec)?,
                    run_member(&flat, &x0, j, scale, &spec)?,
                ))
            })
            .collect::<Result<_, DynamicsError>>()?;
        let count = runs.len().max(1) as f64;
        let ftle = runs.iter().map(|(a, _)| a.ftle).sum::<f64>() / count;
        let baseline = runs.iter().map(|(_, b)| b.ftle).sum::<f64>() / count;
        let detuning = r.abs();
        rows.push(StripRow {
            detuning,
            inside: detuning <= cfg.varrho,
            ftle,
            baseline,
            indicator: ftle - baseline,
            crossings: runs.iter().map(|(a, _)| a.crossings).sum(),
            libration_fraction: runs.iter().filter(|(a, _)| a.librating).count() as f64 / count,
        });
    }
    Ok(rows)
}

/// Zero actions and uniform angles, except `theta_j`, whose distance to the
/// cylinder `theta_j = 0` is log-uniform in `[closest, pi]` with random sign.
fn initial_state(cfg: &StripConfig, member: u64) -> Vec<f64> {
    let tau = std::f64::consts::TAU;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(member);
    let phi1 = rng.gen_range(0.0..tau);
    let span = std::f64::consts::PI.ln() - cfg.closest.ln();
    let dist = (cfg.closest.ln() + span * rng.gen::<f64>()).exp();
    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let mut x = vec![0.0; 2 * cfg.sites];
    x[0] = phi1;
    x[cfg.resonant_site - 1] = phi1 + sign * dist;
    for (k, v) in x.iter_mut().enumerate().take(cfg.sites).skip(1) {
        if k != cfg.resonant_site - 1 {
            *v = rng.gen_range(0.0..tau);
        }
    }
    x
}

fn run_member(model: &StripModel, x0: &[f64], j: usize, scale: f64, spec: &FlowSpec) -> Result<Member, DynamicsError> {
    let n = model.sites();
    let mut state = x0.to_vec();
    state.resize(4 * n, 0.0);
    // unit tangent along theta_j, which the eps = 0 flow leaves fixed
    state[2 * n + j - 1] = 1.0;
    let detuning = model.xi[j - 1] - model.xi[0];
    let big_m = model.m[0] + model.m[j - 1];
    let pendulum = |x: &[f64]| {
        let theta = x[j - 1] - x[0];
        let i = x[n + j - 1] - x[n];
        0.5 * (detuning + i).powi(2) + model.eps * big_m * theta.cos() - model.eps * big_m
    };
    let e0 = pendulum(x0);
    let mut sign = e0 < 0.0;
    let mut crossings = 0;
    let mut last = state.clone();
    let tangent = TangentField { base: model };
    integrate_observed(&tangent, spec, &state, |_, _, x| {
        let below = pendulum(x) < 0.0;
        if below != sign {
            crossings += 1;
            sign = below;
        }
        last.copy_from_slice(x);
    })?;
    let dtheta = last[2 * n + j - 1] - last[2 * n];
    let di = (last[3 * n + j - 1] - last[3 * n]) / scale;
    let growth = (dtheta * dtheta + di * di).sqrt();
    Ok(Member {
        ftle: growth.ln() / spec.time.max(f64::MIN_POSITIVE),
        crossings,
        librating: model.eps > 0.0 && e0 < 0.0,
    })
}
