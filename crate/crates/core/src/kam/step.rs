use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cohomological::solve_cohomological;
use super::truncate::{enumerate_an_limited, kam_truncate};
use super::{IterationState, KamSchedule, StageRecord};
use crate::error::KamError;
use crate::series::{poisson_bracket, weighted_norm, Caps, MassVector, NormParams, TFSeries};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KamConfig {
    pub caps: Caps,
    /// Lie sums stop once a term's norm drops below `lie_tol * eps_{n+1}`.
    pub lie_tol: f64,
    /// Abort when the tracked norm exceeds `divergence_factor * eps_n`.
    pub divergence_factor: f64,
    /// Upper bound on the number of admissible supports counted per stage.
    pub an_count_limit: usize,
}

impl Default for KamConfig {
    fn default() -> Self {
        Self {
            caps: Caps {
                max_l1: 8,
                max_alpha1: 2,
                max_support: usize::MAX,
                max_order: 30,
            },
            lie_tol: 1e-6,
            divergence_factor: 10.0,
            an_count_limit: 100_000,
        }
    }
}

/// Accumulates `sum_{k >= k0} weight(k) ad^k h`, `ad f = {f, g}`, until a
/// term falls below `tol` in the `p`-norm. Returns the sum and the last order used.
pub(crate) fn lie_sum<W: Fn(usize) -> f64>(
    h: &TFSeries,
    g: &TFSeries,
    m: &MassVector,
    caps: &Caps,
    p: &NormParams,
    tol: f64,
    k0: usize,
    weight: W,
) -> Result<(TFSeries, usize), KamError> {
    let mut sum = TFSeries::zero(h.n_max().max(g.n_max())).with_drop_tol(h.drop_tol());
    let mut term = caps.apply(h);
    let mut k = 0;
    loop {
        if k >= k0 {
            let w = weight(k);
            let contrib = term.scale(Complex64::new(w, 0.0));
            let size = weighted_norm(&contrib, m, p)?.value;
            sum += &contrib;
            if k > k0 && size <= tol {
                return Ok((sum, k));
            }
        }
        if term.is_empty() {
            return Ok((sum, k));
        }
        if k >= caps.max_order {
            return Err(KamError::CapsExceeded(format!(
                "Lie series still above {tol:.3e} after order {}",
                caps.max_order
            )));
        }
        term = caps.apply(&poisson_bracket(&term, g, m));
        k += 1;
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Result of one inductive step.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub state: IterationState,
    pub record: StageRecord,
}

/// One inductive step `H^{(n)} o phi_{G_{n+1}} = N + <Q_n> + P^{(n+1)}`.
///
/// With `{N, G} = <Q> - Q` the new remainder is
/// `sum_{k >= 1} (ad^k <Q> + k ad^k Q) / (k+1)! + R o phi_G`, the exact
/// order-by-order value of the integral over `t`.
pub fn kam_step(state: &IterationState, sched: &KamSchedule, m: &MassVector, cfg: &KamConfig) -> Result<StepOutput, KamError> {
    let started = Instant::now();
    let n = state.stage;
    if n > sched.stages {
        return Err(KamError::InvalidSchedule(format!("stage {n} beyond schedule of {} stages", sched.stages)));
    }
    let p_n = sched.params(n);
    let p_next = sched.next_params(n);
    let norm_p = weighted_norm(&state.remainder, m, &p_n)?.value;
    if norm_p > sched.eps[n] {
        log::warn!("stage {n}: ||P|| = {norm_p:.3e} exceeds eps_n = {:.3e}", sched.eps[n]);
    }
    if norm_p > cfg.divergence_factor * sched.eps[n] {
        return Err(KamError::Divergence {
            stage: n,
            norm: norm_p,
            limit: cfg.divergence_factor * sched.eps[n],
        });
    }

    let trunc = kam_truncate(&state.remainder, n, sched, m)?;
    let coh = solve_cohomological(&trunc.q, &state.frequency, n, sched)?;
    let g = coh.generator;
    let avg = trunc.q.average();
    let tol = cfg.lie_tol * sched.eps[n + 1];

    let (int_avg, ord_a) = lie_sum(&avg, &g, m, &cfg.caps, &p_next, tol, 1, |k| 1.0 / factorial(k + 1))?;
    let (int_q, ord_q) = lie_sum(&trunc.q, &g, m, &cfg.caps, &p_next, tol, 1, |k| k as f64 / factorial(k + 1))?;
    let (r_new, ord_r) = lie_sum(&trunc.r, &g, m, &cfg.caps, &p_next, tol, 0, |k| 1.0 / factorial(k))?;
    let integral = &int_avg + &int_q;
    let next = &integral + &r_new;

    let shift: Vec<f64> = (1..=state.frequency.len() as u32)
        .map(|j| avg.coeff(&crate::series::MonomialKey::action(j)).re / m.weight(j))
        .collect();
    let frequency: Vec<f64> = state.frequency.iter().zip(&shift).map(|(a, b)| a + b).collect();

    let norm_next = weighted_norm(&next, m, &p_next)?.value;
    let norm_g = weighted_norm(&g, m, &p_n)?.value;
    let (affine_n, quad_n) = split_affine(&state.remainder);
    let (_, quad_next) = split_affine(&next);
    let ext_q = weighted_norm(&affine_n, m, &sched.extended_params(n))?.value;
    let ext_p_next = NormParams {
        rho: sched.extended_rho(n + 1),
        ..p_next
    };
    let ext_r_inc = weighted_norm(&(&quad_next - &quad_n), m, &ext_p_next)?.value;
    let (an, complete) = enumerate_an_limited(n, m, sched, cfg.an_count_limit);

    let record = StageRecord {
        n,
        eps_n: sched.eps[n],
        norm_p,
        norm_g,
        shift_inf_norm: shift.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        min_divisor: coh.min_divisor,
        l_n: sched.l_cutoff(n),
        an_count: an.len() + 1,
        an_complete: complete,
        wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        norm_q: weighted_norm(&trunc.q, m, &p_n)?.value,
        norm_r_half: trunc.r_half_norm,
        norm_integral: weighted_norm(&integral, m, &p_next)?.value,
        norm_r_flow: weighted_norm(&r_new, m, &p_next)?.value,
        eps_next: sched.eps[n + 1],
        norm_p_next: norm_next,
        ext_norm_q: ext_q,
        ext_norm_r_increment: ext_r_inc,
        domain_margin: sched.domain_margin(n),
        lie_orders: ord_a.max(ord_q).max(ord_r),
        terms: next.len(),
    };

    let mut generators = state.generators.clone();
    generators.push(g);
    let mut shifts = state.shifts.clone();
    shifts.push(shift);
    let new_state = IterationState {
        stage: n + 1,
        remainder: next,
        frequency,
        base_frequency: state.base_frequency.clone(),
        shifts,
        generators,
    };
    Ok(StepOutput { state: new_state, record })
}

/// `(part with |alpha|_1 <= 1, part with |alpha|_1 >= 2)`, constants dropped.
pub fn split_affine(p: &TFSeries) -> (TFSeries, TFSeries) {
    let (affine, quad) = p.truncate(|k| k.alpha_norm1() <= 1);
    (affine.without_constant(), quad)
}
