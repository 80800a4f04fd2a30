use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check::{StageChecker, DEFAULT_PAIR_BUDGET};
use super::cube::{sample_one, HilbertCube};
use crate::error::DiophantineError;
use crate::kam::KamSchedule;
use crate::series::MassVector;
use crate::stats::{linear_fit, wilson_interval};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub eps: f64,
    pub d: f64,
    pub stage: usize,
    pub n_samples: usize,
    /// Share of samples passing every check up to and including `stage`.
    pub fraction: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Monte-Carlo survival per stage over `count` draws from `cube`.
pub fn measure_scan(
    cube: &HilbertCube,
    sched: &KamSchedule,
    m: &MassVector,
    stages: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<ScanRow>, DiophantineError> {
    if stages == 0 || stages > sched.stages + 1 {
        return Err(DiophantineError::Invalid(format!(
            "stages = {stages} must lie in 1..={}",
            sched.stages + 1
        )));
    }
    let checkers = (0..stages)
        .map(|n| StageChecker::new(n, sched, m, DEFAULT_PAIR_BUDGET))
        .collect::<Result<Vec<_>, _>>()?;
    let first_fail: Vec<usize> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let xi = sample_one(cube, seed, i);
            checkers.iter().position(|c| !c.passes(&xi)).unwrap_or(stages)
        })
        .collect();
    Ok((0..stages)
        .map(|n| {
            let alive = first_fail.iter().filter(|f| **f > n).count();
            let (ci_low, ci_high) = wilson_interval(alive, count);
            ScanRow {
                eps: sched.eps0,
                d: cube.d,
                stage: n,
                n_samples: count,
                fraction: if count == 0 { 1.0 } else { alive as f64 / count as f64 },
                ci_low,
                ci_high,
            }
        })
        .collect())
}

/// Empirical measure of `{ |<xi_A, l>| < theta }` inside the cube.
pub fn strip_measure(cube: &HilbertCube, support: &[u32], l: &[i32], theta: f64, count: usize, seed: u64) -> f64 {
    if count == 0 {
        return 0.0;
    }
    let hits = (0..count as u64)
        .into_par_iter()
        .filter(|&i| {
            let xi = sample_one(cube, seed, i);
            let d: f64 = support.iter().zip(l).map(|(&s, &k)| k as f64 * xi[(s - 1) as usize]).sum();
            d.abs() < theta
        })
        .count();
    hits as f64 / count as f64
}

/// Fit `1 - fraction ∝ eps^c` over `(eps, fraction)` points, skipping
/// points without a deficit. Returns `(c, intercept)`.
pub fn deficit_exponent(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, f)| *f < 1.0)
        .map(|(e, f)| (e.ln(), (1.0 - f).ln()))
        .unzip();
    linear_fit(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::FrequencyVector;

    #[test]
    fn exact_power_law_is_recovered() {
        let pts: Vec<(f64, f64)> = [1e-4, 1e-6, 1e-8].iter().map(|e: &f64| (*e, 1.0 - 3.0 * e.powf(0.1))).collect();
        let (c, _) = deficit_exponent(&pts).unwrap();
        assert!((c - 0.1).abs() < 1e-12);
        assert!(deficit_exponent(&[(1e-4, 1.0), (1e-6, 1.0)]).is_none());
    }

    #[test]
    fn empty_scan() {
        let center = FrequencyVector::new(vec![1.0, 1.4], 0.0, 3.0).unwrap();
        let cube = HilbertCube::new(center, 0.1, 0.5).unwrap();
        let m = MassVector::exponential(1.0, 2).unwrap();
        let sched = KamSchedule::build(1e-12, 0.5, 1.0, 1.0, 1).unwrap();
        let rows = measure_scan(&cube, &sched, &m, 1, 0, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n_samples, 0);
        assert_eq!(rows[0].fraction, 1.0);
    }
}
