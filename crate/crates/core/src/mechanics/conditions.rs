use serde::{Deserialize, Serialize};

use super::{elliptic_point, Potential};
use crate::error::MechanicsError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConditionConfig {
    /// Required `gamma` for both conditions.
    pub gamma: f64,
    pub tau: f64,
    /// `|l|_1` cutoff of the Diophantine scan.
    pub cutoff: u32,
    /// `|k|_1` cutoff of the elliptic non-resonance scan.
    pub elliptic_cutoff: u32,
    /// Twists below this in absolute value count as degenerate.
    pub twist_tol: f64,
    /// Quartic determinants below this count as degenerate.
    pub quartic_tol: f64,
    /// Largest number of integer vectors a scan may visit.
    pub budget: u64,
}

impl Default for ConditionConfig {
    fn default() -> Self {
        Self {
            gamma: 1e-3,
            tau: 2.0,
            cutoff: 1000,
            elliptic_cutoff: 100,
            twist_tol: 1e-3,
            quartic_tol: 1e-8,
            budget: 50_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P1Report {
    /// `min |xi.l| |l|_1^tau` over the scan.
    pub fitted_gamma: f64,
    /// The minimizing `l`, first non-zero entry positive.
    pub witness: Vec<i64>,
    pub witness_divisor: f64,
    pub diophantine: bool,
    pub checked: u64,
    /// `false` if the budget stopped the scan early.
    pub complete: bool,
    /// `sup_i 1 / |twist_i|`
    pub twist_bound: f64,
    pub twist_ok: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P2Report {
    pub equilibria: Vec<f64>,
    pub omega: Vec<f64>,
    /// Diagonal of the quartic coefficient matrix, `twist_i / 2`.
    pub quartic: Vec<f64>,
    pub quartic_det: f64,
    /// `min |omega.k|` over `0 < |k|_1 <= cutoff` and its minimizer.
    pub min_divisor: f64,
    pub witness: Vec<i64>,
    pub nonresonant: bool,
    pub checked: u64,
    pub complete: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub p1: Option<P1Report>,
    pub p2: Option<P2Report>,
}

struct Scan {
    best: f64,
    witness: Vec<i64>,
    divisor: f64,
    checked: u64,
    complete: bool,
}

/// Visits every `l` with `0 < |l|_1 <= cutoff` once up to sign, by
/// increasing `|l|_1`, and minimizes `weight(|l|_1) |v.l|`.
fn scan<W: Fn(f64) -> f64>(v: &[f64], cutoff: u32, budget: u64, weight: W) -> Scan {
    let mut s = Scan {
        best: f64::INFINITY,
        witness: vec![0; v.len()],
        divisor: f64::INFINITY,
        checked: 0,
        complete: true,
    };
    let mut l = vec![0i64; v.len()];
    for norm in 1..=cutoff as i64 {
        let w = weight(norm as f64);
        if !visit(v, &mut l, 0, norm, false, w, budget, &mut s) {
            s.complete = false;
            break;
        }
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn visit(v: &[f64], l: &mut Vec<i64>, idx: usize, left: i64, signed: bool, w: f64, budget: u64, s: &mut Scan) -> bool {
    if idx + 1 == l.len() {
        let choices: &[i64] = if left == 0 {
            &[0]
        } else if signed {
            &[1, -1]
        } else {
            &[1]
        };
        for &sg in choices {
            l[idx] = sg * left;
            if s.checked >= budget {
                return false;
            }
            s.checked += 1;
            let d = l.iter().zip(v).map(|(a, b)| *a as f64 * b).sum::<f64>().abs();
            if d * w < s.best {
                s.best = d * w;
                s.divisor = d;
                s.witness.copy_from_slice(l);
            }
        }
        return true;
    }
    let lo = if signed { -left } else { 0 };
    for a in lo..=left {
        l[idx] = a;
        if !visit(v, l, idx + 1, left - a.abs(), signed || a != 0, w, budget, s) {
            return false;
        }
    }
    l[idx] = 0;
    true
}

/// Diophantine check of `xi0` and a uniform bound on the inverse twists.
pub fn check_p1(xi0: &[f64], twists: &[f64], cfg: &ConditionConfig) -> P1Report {
    let s = scan(xi0, cfg.cutoff, cfg.budget, |n| n.powf(cfg.tau));
    let twist_bound = twists.iter().map(|t| 1.0 / t.abs()).fold(0.0, f64::max);
    let twist_ok = twists.iter().all(|t| t.abs() >= cfg.twist_tol);
    let diophantine = s.best >= cfg.gamma * (1.0 - 1e-12);
    P1Report {
        fitted_gamma: s.best,
        witness: s.witness,
        witness_divisor: s.divisor,
        diophantine,
        checked: s.checked,
        complete: s.complete,
        twist_bound,
        twist_ok,
        pass: diophantine && twist_ok && s.complete,
    }
}

/// Elliptic equilibria of each site from `guesses`, their frequencies,
/// non-resonance up to the cutoff and the quartic determinant.
pub fn check_p2(potential: &Potential, guesses: &[f64], cfg: &ConditionConfig) -> Result<P2Report, MechanicsError> {
    let points = guesses
        .iter()
        .map(|&g| elliptic_point(potential, None, g))
        .collect::<Result<Vec<_>, _>>()?;
    let omega: Vec<f64> = points.iter().map(|p| p.omega).collect();
    let quartic: Vec<f64> = points.iter().map(|p| 0.5 * p.twist).collect();
    let quartic_det = quartic.iter().product::<f64>();
    let s = scan(&omega, cfg.elliptic_cutoff, cfg.budget, |_| 1.0);
    let nonresonant = s.best >= cfg.gamma * (1.0 - 1e-12);
    Ok(P2Report {
        equilibria: points.iter().map(|p| p.r).collect(),
        omega,
        quartic,
        quartic_det,
        min_divisor: s.best,
        witness: s.witness,
        nonresonant,
        checked: s.checked,
        complete: s.complete,
        pass: nonresonant && s.complete && quartic_det.abs() >= cfg.quartic_tol,
    })
}

/// Runs whichever of the two checks has data.
pub fn check_p1_p2(
    xi0: Option<(&[f64], &[f64])>,
    elliptic: Option<(&Potential, &[f64])>,
    cfg: &ConditionConfig,
) -> Result<ConditionReport, MechanicsError> {
    Ok(ConditionReport {
        p1: xi0.map(|(xi, tw)| check_p1(xi, tw, cfg)),
        p2: elliptic.map(|(v, g)| check_p2(v, g, cfg)).transpose()?,
    })
}
