use serde::{Deserialize, Serialize};

use crate::error::DiophantineError;
use crate::stats::{fit_rms, linear_fit};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDimension {
    /// Slope of `ln N(delta)` against `ln(1/delta)`.
    pub dimension: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    /// `(delta, N(delta))` per scale.
    pub counts: Vec<(f64, usize)>,
    /// Set for a constant sequence, reported with dimension 0.
    pub degenerate: bool,
}

/// `count` scales from `hi` down to `lo`, evenly spaced in log.
pub fn geometric_scales(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    let (a, b) = (hi.ln(), lo.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count.max(2) - 1) as f64).exp())
        .collect()
}

/// Box-counting estimate over the given scales.
pub fn box_dimension(seq: &[f64], scales: &[f64]) -> Result<BoxDimension, DiophantineError> {
    if seq.len() < 1000 {
        return Err(DiophantineError::Invalid(format!("{} points; at least 1000 needed", seq.len())));
    }
    if seq.iter().any(|x| !x.is_finite()) {
        return Err(DiophantineError::Invalid("non-finite sequence value".into()));
    }
    if scales.len() < 5 || scales.iter().any(|s| !(*s > 0.0)) {
        return Err(DiophantineError::Invalid("need at least 5 positive scales".into()));
    }
    let hi = scales.iter().copied().fold(0.0, f64::max);
    let lo = scales.iter().copied().fold(f64::INFINITY, f64::min);
    if hi / lo < 100.0 {
        return Err(DiophantineError::Invalid("scales must span two decades".into()));
    }
    let mut sorted = seq.to_vec();
    sorted.sort_by(f64::total_cmp);
    let counts: Vec<(f64, usize)> = scales.iter().map(|&d| (d, occupied(&sorted, d))).collect();
    if sorted[0] == sorted[sorted.len() - 1] {
        return Ok(BoxDimension {
            dimension: 0.0,
            intercept: 0.0,
            residual_rms: 0.0,
            counts,
            degenerate: true,
        });
    }
    let xs: Vec<f64> = counts.iter().map(|(d, _)| -d.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|(_, c)| (*c as f64).ln()).collect();
    let (slope, intercept) = linear_fit(&xs, &ys).ok_or_else(|| DiophantineError::Invalid("repeated scales".into()))?;
    Ok(BoxDimension {
        dimension: slope,
        intercept,
        residual_rms: fit_rms(&xs, &ys, slope, intercept),
        counts,
        degenerate: false,
    })
}

/// Boxes `[k delta, (k+1) delta)` hit by the sorted values.
fn occupied(sorted: &[f64], delta: f64) -> usize {
    let mut n = 0;
    let mut last = None;
    for x in sorted {
        let k = (x / delta).floor();
        if last != Some(k) {
            n += 1;
            last = Some(k);
        }
    }
    n
}
