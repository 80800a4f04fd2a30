use serde::{Deserialize, Serialize};

use super::FrequencyVector;
use crate::error::DiophantineError;
use crate::kam::{enumerate_an_limited, KamSchedule};
use crate::series::MassVector;

/// Default ceiling on the number of `(A, l)` pairs a single stage may check.
pub const DEFAULT_PAIR_BUDGET: f64 = 1e10;

const MAX_LOWER_SUPPORTS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    #[serde(rename = "A")]
    pub support: Vec<u32>,
    pub l: Vec<i32>,
    pub divisor: f64,
    pub stage: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport {
    pub stage: usize,
    pub pass: bool,
    pub violations: Vec<Violation>,
    /// `min |<xi_A, l>| - eps_n^{1/12}` over the checked pairs.
    pub margin: Option<f64>,
    pub checked: u64,
    pub threshold: f64,
}

/// Precomputed stage data: threshold, `L_n` and the lower supports.
///
/// Pairs are visited as `A = A_ ∪ {j}` with `j > max A_` and `l` non-zero
/// on every site of `A`, so each `(A, l)` is met once. Sub-supports of an
/// admissible set are admissible, so nothing is lost by the exact-support rule.
#[derive(Clone, Debug)]
pub struct StageChecker {
    stage: usize,
    threshold: f64,
    l_max: u32,
    lowers: Vec<Vec<u32>>,
    n_max: u32,
}

impl StageChecker {
    pub fn new(n: usize, sched: &KamSchedule, m: &MassVector, budget: f64) -> Result<Self, DiophantineError> {
        if n > sched.stages {
            return Err(DiophantineError::Invalid(format!("stage {n} beyond schedule")));
        }
        let l_max = sched.l_max(n);
        let (sets, complete) = enumerate_an_limited(n, m, sched, MAX_LOWER_SUPPORTS);
        let mut lowers = vec![Vec::new()];
        lowers.extend(sets.into_iter().filter(|a| a.len() < l_max as usize));
        let n_max = m.n_max();
        let base = 2.0 * l_max as f64 + 1.0;
        let mut estimate = 0.0;
        let mut widest = 0;
        for a in &lowers {
            let top = a.last().copied().unwrap_or(0);
            estimate += base.powi(a.len() as i32 + 1) * n_max.saturating_sub(top) as f64;
            widest = widest.max(a.len() + 1);
        }
        if estimate > budget || !complete {
            return Err(DiophantineError::Budget {
                support_len: widest,
                cutoff: l_max,
                estimate,
            });
        }
        Ok(Self {
            stage: n,
            threshold: sched.divisor_bound(n),
            l_max,
            lowers,
            n_max,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn l_max(&self) -> u32 {
        self.l_max
    }

    /// Number of lower supports, counting the empty one.
    pub fn lower_count(&self) -> usize {
        self.lowers.len()
    }

    /// Walks every pair; `visit` sees the support, `l`, the divisor, and
    /// returns `false` to stop. The minimum `|divisor|` per `(A_, l_, j)` is
    /// passed through `closest`.
    fn walk<V, C>(&self, xi: &[f64], mut visit: V, mut closest: C) -> u64
    where
        V: FnMut(&[u32], &[i32], u32, i32, f64) -> bool,
        C: FnMut(f64),
    {
        let sites = self.n_max.min(xi.len() as u32);
        let mut checked = 0u64;
        let mut l = Vec::new();
        for lower in &self.lowers {
            let top = lower.last().copied().unwrap_or(0);
            if top >= sites {
                continue;
            }
            let mut stop = false;
            each_full_support_l(lower, self.l_max as i32 - 1, &mut l, &mut |l_low: &[i32], used: i32| {
                if stop {
                    return;
                }
                let s: f64 = lower.iter().zip(l_low).map(|(&i, &li)| li as f64 * xi[(i - 1) as usize]).sum();
                let r = self.l_max as i32 - used;
                for j in top + 1..=sites {
                    let x = xi[(j - 1) as usize];
                    checked += 2 * r as u64;
                    let (kmin, kmax, best) = near_integers(s, x, r, self.threshold);
                    closest(best);
                    for k in kmin..=kmax {
                        if k == 0 {
                            continue;
                        }
                        if !visit(lower, l_low, j, k, s + k as f64 * x) {
                            stop = true;
                            return;
                        }
                    }
                }
            });
            if stop {
                break;
            }
        }
        checked
    }

    pub fn report(&self, xi: &FrequencyVector) -> DiophantineReport {
        let mut violations = Vec::new();
        let mut best = f64::INFINITY;
        let checked = self.walk(
            xi.values(),
            |lower, l_low, j, k, d| {
                let mut support = lower.to_vec();
                support.push(j);
                let mut l = l_low.to_vec();
                l.push(k);
                violations.push(Violation {
                    support,
                    l,
                    divisor: d,
                    stage: self.stage,
                });
                true
            },
            |b| best = best.min(b),
        );
        DiophantineReport {
            stage: self.stage,
            pass: violations.is_empty(),
            violations,
            margin: best.is_finite().then(|| best - self.threshold),
            checked,
            threshold: self.threshold,
        }
    }

    /// Early-exit variant of [`Self::report`].
    pub fn passes(&self, xi: &[f64]) -> bool {
        let mut ok = true;
        self.walk(
            xi,
            |_, _, _, _, _| {
                ok = false;
                false
            },
            |_| {},
        );
        ok
    }
}

/// Integers `k` in `[-r, r]` with `|s + k x| < theta` as a range, plus
/// `min_{0 < |k| <= r} |s + k x|`.
fn near_integers(s: f64, x: f64, r: i32, theta: f64) -> (i32, i32, f64) {
    let t = -s / x;
    let mut best = f64::INFINITY;
    let c = t.round().clamp(-r as f64, r as f64) as i32;
    for k in [c - 1, c, c + 1] {
        if k != 0 && k.abs() <= r {
            best = best.min((s + k as f64 * x).abs());
        }
    }
    let (lo, hi) = if x > 0.0 {
        ((-theta - s) / x, (theta - s) / x)
    } else {
        ((theta - s) / x, (-theta - s) / x)
    };
    let mut kmin = (lo.floor() as i64).max(-(r as i64)) as i32;
    let mut kmax = (hi.ceil() as i64).min(r as i64) as i32;
    while kmin <= kmax && (s + kmin as f64 * x).abs() >= theta {
        kmin += 1;
    }
    while kmax >= kmin && (s + kmax as f64 * x).abs() >= theta {
        kmax -= 1;
    }
    (kmin, kmax, best)
}

/// Calls `f(l, |l|_1)` for every `l` on `sites` with all entries non-zero
/// and `|l|_1 <= budget`.
fn each_full_support_l<F: FnMut(&[i32], i32)>(sites: &[u32], budget: i32, buf: &mut Vec<i32>, f: &mut F) {
    fn rec<F: FnMut(&[i32], i32)>(left: usize, budget: i32, used: i32, buf: &mut Vec<i32>, f: &mut F) {
        if left == 0 {
            f(buf, used);
            return;
        }
        let room = budget - used - (left as i32 - 1);
        for a in 1..=room {
            for v in [a, -a] {
                buf.push(v);
                rec(left - 1, budget, used + a, buf, f);
                buf.pop();
            }
        }
    }
    buf.clear();
    if sites.len() as i32 > budget {
        return;
    }
    rec(sites.len(), budget, 0, buf, f);
}

/// Non-resonance check of `xi` at stage `n` over `j <= N_max`.
pub fn check_stage(
    xi: &FrequencyVector,
    n: usize,
    sched: &KamSchedule,
    m: &MassVector,
) -> Result<DiophantineReport, DiophantineError> {
    Ok(StageChecker::new(n, sched, m, DEFAULT_PAIR_BUDGET)?.report(xi))
}

/// `q_n = min { q : L_n q^{-1/d} <= eps_n^{1/12} }`, the site count after
/// which the covering argument takes over.
pub fn covering_cutoff(n: usize, sched: &KamSchedule, d: f64) -> Result<u64, DiophantineError> {
    if !(d > 0.0 && d < 1.0) {
        return Err(DiophantineError::Invalid(format!("d = {d} outside (0, 1)")));
    }
    Ok(cutoff_from(sched.l_cutoff(n), sched.divisor_bound(n), d))
}

pub(crate) fn cutoff_from(l: f64, theta: f64, d: f64) -> u64 {
    let ok = |q: u64| l * (q as f64).powf(-1.0 / d) <= theta;
    let mut q = ((l / theta).powf(d).ceil() as u64).max(1);
    while q > 1 && ok(q - 1) {
        q -= 1;
    }
    while !ok(q) {
        q += 1;
    }
    q
}
