use serde::{Deserialize, Serialize};

use super::{MassVector, MonomialKey, TFSeries};
use crate::error::SeriesError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub beta: f64,
    pub rho: f64,
    pub sigma: f64,
}

impl NormParams {
    pub fn new(beta: f64, rho: f64, sigma: f64) -> Result<Self, SeriesError> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(SeriesError::InvalidNorm(format!("beta = {beta} outside (0, 1)")));
        }
        if !(rho > 0.0 && sigma > 0.0) || !rho.is_finite() || !sigma.is_finite() {
            return Err(SeriesError::InvalidNorm(format!("rho = {rho}, sigma = {sigma} must be positive")));
        }
        Ok(Self { beta, rho, sigma })
    }

    /// `ln(rho^{|alpha|} e^{|l| sigma})` for one key.
    pub(crate) fn log_scale(&self, k: &MonomialKey) -> f64 {
        k.alpha_norm1() as f64 * self.rho.ln() + k.l_norm1() as f64 * self.sigma
    }
}

/// `sum |c| rho^{|alpha|} e^{|l| sigma}` over the terms with support exactly `a`.
pub fn block_norm(h: &TFSeries, a: &[u32], p: &NormParams) -> f64 {
    h.iter()
        .filter(|(k, _)| k.support().eq(a.iter().copied()))
        .map(|(k, c)| c.norm() * p.log_scale(k).exp())
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormReport {
    /// `sup_j (1/m_j) sum_{max A = j} m_{A minus j}^{-beta} |h_A|`
    pub value: f64,
    /// Site attaining the supremum, if any non-constant term exists.
    pub argmax: Option<u32>,
    /// Modulus of the constant term, which the supremum excludes.
    pub constant: f64,
}

/// Mass-weighted norm. Terms are visited in key order, which groups them by
/// top site, so the block sums are accumulated in a fixed order.
pub fn weighted_norm(h: &TFSeries, m: &MassVector, p: &NormParams) -> Result<NormReport, SeriesError> {
    if let Some(site) = h.terms_map().keys().next_back().and_then(|k| k.top()) {
        if site > m.n_max() || site > h.n_max() {
            return Err(SeriesError::SupportOutOfRange {
                site,
                n_max: h.n_max().min(m.n_max()),
            });
        }
    }
    let mut best = NormReport {
        value: 0.0,
        argmax: None,
        constant: 0.0,
    };
    let mut current: Option<u32> = None;
    let mut acc = 0.0;
    let flush = |best: &mut NormReport, site: Option<u32>, acc: f64| {
        if let Some(j) = site {
            if best.argmax.is_none() || acc > best.value {
                best.value = acc;
                best.argmax = Some(j);
            }
        }
    };
    for (k, c) in h.iter() {
        let Some(top) = k.top() else {
            best.constant = c.norm();
            continue;
        };
        if current != Some(top) {
            flush(&mut best, current, acc);
            current = Some(top);
            acc = 0.0;
        }
        let log_w = -m.log_weight(top) - p.beta * m.log_mass_of(k.lower_support()) + p.log_scale(k);
        acc += c.norm() * log_w.exp();
    }
    flush(&mut best, current, acc);
    Ok(best)
}
