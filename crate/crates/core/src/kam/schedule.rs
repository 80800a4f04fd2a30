use serde::{Deserialize, Serialize};

use crate::error::KamError;
use crate::series::NormParams;

/// Smallness gate `eps <= min(rho^6 sigma^6, |b - a|^24)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallnessGate {
    pub eps: f64,
    pub bound: f64,
    pub satisfied: bool,
}

impl SmallnessGate {
    pub fn evaluate(eps: f64, rho: f64, sigma: f64, box_width: Option<f64>) -> Self {
        let mut bound = (rho * sigma).powi(6);
        if let Some(w) = box_width {
            bound = bound.min(w.abs().powi(24));
        }
        Self {
            eps,
            bound,
            satisfied: eps <= bound,
        }
    }
}

/// Inductive constants. Index `n` runs over `0..=stages`; `eps` carries one
/// extra entry so that `L_n` is defined for the last stage.
///
/// `mu_n`, `s_n` are defined for `n >= 1`. The recursions for `beta`,
/// `sigma` start at `n = 1` with `beta_1 = beta_0`, `sigma_1 = sigma_0`.
/// At `n = 0`, `mu_0 := mu_1` is used only to define the admissible support
/// family, and `s_0 = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KamSchedule {
    pub eps0: f64,
    pub beta0: f64,
    pub rho0: f64,
    pub sigma0: f64,
    pub stages: usize,
    pub eps: Vec<f64>,
    pub beta: Vec<f64>,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    pub mu: Vec<f64>,
    pub s: Vec<f64>,
    pub cutoff: Vec<f64>,
    pub gate: SmallnessGate,
}

impl KamSchedule {
    pub fn build(eps0: f64, beta0: f64, rho: f64, sigma: f64, stages: usize) -> Result<Self, KamError> {
        Self::build_with_box(eps0, beta0, rho, sigma, stages, None)
    }

    pub fn build_with_box(
        eps0: f64,
        beta0: f64,
        rho: f64,
        sigma: f64,
        stages: usize,
        box_width: Option<f64>,
    ) -> Result<Self, KamError> {
        for (name, v) in [("eps0", eps0), ("beta0", beta0), ("rho", rho), ("sigma", sigma)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(KamError::InvalidSchedule(format!("{name} = {v} must be positive")));
            }
        }
        if beta0 >= 1.0 || eps0 >= 1.0 {
            return Err(KamError::InvalidSchedule("beta0 and eps0 must be below 1".into()));
        }
        if stages == 0 {
            return Err(KamError::InvalidSchedule("at least one stage is required".into()));
        }
        let gate = SmallnessGate::evaluate(eps0, rho, sigma, box_width);
        if !gate.satisfied {
            log::warn!(
                "smallness gate violated: eps = {eps0:.3e} > {:.3e}; proceeding",
                gate.bound
            );
        }

        let len = stages + 1;
        let mut eps = vec![eps0; len + 1];
        for n in 1..=len {
            eps[n] = eps[n - 1].powf(1.25);
        }
        let rho_n: Vec<f64> = eps[..len].iter().map(|e| e.sqrt() * rho).collect();
        let mu: Vec<f64> = (0..len).map(|n| beta0 / (8.0 * (n.max(1) as f64).powi(2))).collect();
        let s: Vec<f64> = (0..len)
            .map(|n| if n == 0 { 0.0 } else { sigma / (8.0 * (n as f64).powi(2)) })
            .collect();
        let mut beta = vec![beta0; len];
        let mut sig = vec![sigma; len];
        for n in 1..len - 1 {
            beta[n + 1] = beta[n] - mu[n];
            sig[n + 1] = sig[n] - 2.0 * s[n];
        }
        let cutoff = (0..len).map(|n| (eps[n + 1] / eps[n]).ln().abs() / sig[n]).collect();
        Ok(Self {
            eps0,
            beta0,
            rho0: rho,
            sigma0: sigma,
            stages,
            eps,
            beta,
            rho: rho_n,
            sigma: sig,
            mu,
            s,
            cutoff,
            gate,
        })
    }

    /// `L_n`
    pub fn l_cutoff(&self, n: usize) -> f64 {
        self.cutoff[n]
    }

    /// Largest admissible integer `|l|_1` at stage `n`, tolerant to the
    /// rounding in `L_n` when it is an integer in exact arithmetic.
    pub fn l_max(&self, n: usize) -> u32 {
        (self.cutoff[n] * (1.0 + 1e-12)).floor() as u32
    }

    /// `|ln(eps_{n+1} / eps_n)|`
    pub fn log_ratio(&self, n: usize) -> f64 {
        (self.eps[n + 1] / self.eps[n]).ln().abs()
    }

    /// Budget `K_n = |ln(eps_{n+1}/eps_n)| / mu_n` on `-ln m_A` for admissible supports.
    pub fn support_budget(&self, n: usize) -> f64 {
        self.log_ratio(n) / self.mu[n]
    }

    /// Divisor bound `eps_n^{1/12}`.
    pub fn divisor_bound(&self, n: usize) -> f64 {
        self.eps[n].powf(1.0 / 12.0)
    }

    /// Frequency-domain margin `h_n = eps_n^{1/12} / (2 L_n)`.
    pub fn domain_margin(&self, n: usize) -> f64 {
        self.divisor_bound(n) / (2.0 * self.cutoff[n])
    }

    /// Parameters of `Y_n`.
    pub fn params(&self, n: usize) -> NormParams {
        NormParams {
            beta: self.beta[n],
            rho: self.rho[n],
            sigma: self.sigma[n],
        }
    }

    /// Parameters of `Y_{n+1/2} = Y(beta_{n+1}, 2 rho_{n+1}, sigma_n - s_n)`.
    pub fn half_params(&self, n: usize) -> NormParams {
        let next = (n + 1).min(self.stages);
        NormParams {
            beta: self.beta[next],
            rho: 2.0 * self.eps[n + 1].sqrt() * self.rho0,
            sigma: self.sigma[n] - self.s[n],
        }
    }

    /// Parameters at stage `n + 1`, available one past the last stored stage.
    pub fn next_params(&self, n: usize) -> NormParams {
        if n < self.stages {
            return self.params(n + 1);
        }
        NormParams {
            beta: self.beta[n] - self.mu[n],
            rho: self.eps[n + 1].sqrt() * self.rho0,
            sigma: self.sigma[n] - 2.0 * self.s[n],
        }
    }

    /// Extended-domain radius, decreasing from `rho` to `rho / 2`.
    pub fn extended_rho(&self, n: usize) -> f64 {
        self.rho0 * (1.0 - 0.5 * (1.0 - 0.5f64.powi(n as i32)))
    }

    pub fn extended_params(&self, n: usize) -> NormParams {
        NormParams {
            beta: self.beta[n],
            rho: self.extended_rho(n),
            sigma: self.sigma[n],
        }
    }
}
