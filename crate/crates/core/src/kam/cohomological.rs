use num_complex::Complex64;

use super::KamSchedule;
use crate::error::KamError;
use crate::series::{MonomialKey, TFSeries};

/// `<xi_A, l>` for the support of `k`.
pub fn divisor(k: &MonomialKey, xi: &[f64]) -> f64 {
    k.factors().iter().map(|f| f.l as f64 * xi[(f.site - 1) as usize]).sum()
}

#[derive(Clone, Debug)]
pub struct Cohomological {
    pub generator: TFSeries,
    /// Smallest `|<xi_A, l>|` met, `None` when `Q` has no angle terms.
    pub min_divisor: Option<f64>,
}

/// Solves `{xi.J, G} + Q = <Q>` for affine `Q`.
///
/// With `{xi.J, J^alpha e(l phi)} = -i <xi_A, l> J^alpha e(l phi)` the term
/// `q J^alpha e(l phi)` needs `g = -i q / <xi_A, l>`. Every divisor is
/// checked against `eps_n^{1/12} / 2`.
pub fn solve_cohomological(q: &TFSeries, xi: &[f64], n: usize, sched: &KamSchedule) -> Result<Cohomological, KamError> {
    solve_with_bound(q, xi, 0.5 * sched.divisor_bound(n))
}

pub fn solve_with_bound(q: &TFSeries, xi: &[f64], bound: f64) -> Result<Cohomological, KamError> {
    let mut g = TFSeries::zero(q.n_max()).with_drop_tol(q.drop_tol());
    let mut min_divisor: Option<f64> = None;
    for (k, c) in q.iter() {
        if k.is_angle_free() {
            continue;
        }
        let d = divisor(k, xi);
        if d.abs() < bound {
            return Err(KamError::SmallDivisorViolation {
                support: k.support().collect(),
                l: k.factors().iter().map(|f| f.l).collect(),
                value: d,
                bound,
            });
        }
        min_divisor = Some(min_divisor.map_or(d.abs(), |m: f64| m.min(d.abs())));
        g.add_term(k.clone(), Complex64::new(0.0, -1.0) * c / d);
    }
    Ok(Cohomological { generator: g, min_divisor })
}
