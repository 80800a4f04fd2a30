use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{poisson_bracket, weighted_norm, MassVector, MonomialKey, NormParams, TFSeries};
use crate::error::SeriesError;

/// Bounds on retained monomials.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    pub max_l1: u32,
    pub max_alpha1: u32,
    pub max_support: usize,
    /// Highest Lie-series order attempted before giving up.
    pub max_order: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_l1: u32::MAX,
            max_alpha1: u32::MAX,
            max_support: usize::MAX,
            max_order: 24,
        }
    }
}

impl Caps {
    pub fn admits(&self, k: &MonomialKey) -> bool {
        k.l_norm1() <= self.max_l1 && k.alpha_norm1() <= self.max_alpha1 && k.support_len() <= self.max_support
    }

    pub fn apply(&self, h: &TFSeries) -> TFSeries {
        h.truncate(|k| self.admits(k)).0
    }
}

/// Truncated Lie series and the first omitted term.
#[derive(Clone, Debug)]
pub struct LieSeries {
    pub value: TFSeries,
    /// `ad^{order+1} h / (order+1)!`, a heuristic for the truncation error.
    pub next_term: TFSeries,
}

impl LieSeries {
    pub fn remainder_norm(&self, m: &MassVector, p: &NormParams) -> Result<f64, SeriesError> {
        Ok(weighted_norm(&self.next_term, m, p)?.value)
    }
}

/// `ad^k h` for `k = 0..=order`, with `ad h = {h, g}`, each re-truncated by `caps`.
pub fn lie_iterates(h: &TFSeries, g: &TFSeries, m: &MassVector, order: usize, caps: &Caps) -> Vec<TFSeries> {
    let mut out = Vec::with_capacity(order + 1);
    out.push(caps.apply(h));
    for k in 0..order {
        let next = caps.apply(&poisson_bracket(&out[k], g, m));
        let done = next.is_empty();
        out.push(next);
        if done {
            out.resize(order + 1, TFSeries::zero(h.n_max()));
            break;
        }
    }
    out
}

/// `h o phi_g = sum_{k <= order} ad^k h / k!`
pub fn lie_transform(h: &TFSeries, g: &TFSeries, m: &MassVector, order: usize, caps: &Caps) -> LieSeries {
    let iters = lie_iterates(h, g, m, order + 1, caps);
    let mut value = TFSeries::zero(h.n_max().max(g.n_max())).with_drop_tol(h.drop_tol());
    let mut fact = 1.0;
    for (k, t) in iters.iter().enumerate().take(order + 1) {
        if k > 0 {
            fact *= k as f64;
        }
        value += &t.scale(Complex64::new(1.0 / fact, 0.0));
    }
    let next_term = iters[order + 1].scale_real(1.0 / (fact * (order + 1) as f64));
    LieSeries { value, next_term }
}
