use super::KamSchedule;
use crate::error::KamError;
use crate::series::{weighted_norm, MassVector, MonomialKey, TFSeries};

/// Whether `A` belongs to `AA_n = { A : m_A^{mu_n} >= eps_{n+1} / eps_n }`,
/// i.e. `-ln m_A <= K_n`. The empty set always qualifies.
pub fn admits_support<I: IntoIterator<Item = u32>>(a: I, n: usize, sched: &KamSchedule, m: &MassVector) -> bool {
    -m.log_mass_of(a) <= sched.support_budget(n) * (1.0 + 1e-12)
}

/// Non-empty members of `AA_n` within `1..=N_max`, in lexicographic order.
///
/// Depth-first over increasing sites; masses are non-increasing, so once a
/// site exceeds the remaining budget every later site does too.
pub fn enumerate_an(n: usize, m: &MassVector, sched: &KamSchedule) -> Vec<Vec<u32>> {
    enumerate_an_limited(n, m, sched, usize::MAX).0
}

/// As [`enumerate_an`], stopping after `limit` sets. The flag reports
/// whether the enumeration was complete.
pub fn enumerate_an_limited(n: usize, m: &MassVector, sched: &KamSchedule, limit: usize) -> (Vec<Vec<u32>>, bool) {
    let budget = sched.support_budget(n) * (1.0 + 1e-12);
    let mut out = Vec::new();
    let mut stack = Vec::new();
    let complete = dfs(1, budget, m, &mut stack, &mut out, limit);
    (out, complete)
}

fn dfs(start: u32, budget: f64, m: &MassVector, stack: &mut Vec<u32>, out: &mut Vec<Vec<u32>>, limit: usize) -> bool {
    for i in start..=m.n_max() {
        let cost = -m.log_weight(i);
        if cost > budget {
            break;
        }
        if out.len() >= limit {
            return false;
        }
        stack.push(i);
        out.push(stack.clone());
        let ok = dfs(i + 1, budget - cost, m, stack, out, limit);
        stack.pop();
        if !ok {
            return false;
        }
    }
    true
}

/// The predicate defining `Q_n`: lower support in `AA_n`, `|l|_1 <= L_n`,
/// `|alpha|_1 <= 1`, and not the constant.
pub fn in_truncation(k: &MonomialKey, n: usize, sched: &KamSchedule, m: &MassVector) -> bool {
    !k.is_constant()
        && k.alpha_norm1() <= 1
        && k.l_norm1() <= sched.l_max(n)
        && admits_support(k.lower_support(), n, sched, m)
}

#[derive(Clone, Debug)]
pub struct Truncation {
    pub q: TFSeries,
    pub r: TFSeries,
    /// `||R_n||` on the stage-`n + 1/2` parameters.
    pub r_half_norm: f64,
}

pub fn kam_truncate(p: &TFSeries, n: usize, sched: &KamSchedule, m: &MassVector) -> Result<Truncation, KamError> {
    let (q, r) = p.truncate(|k| in_truncation(k, n, sched, m));
    let r_half_norm = weighted_norm(&r, m, &sched.half_params(n))?.value;
    Ok(Truncation { q, r, r_half_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    /// Schedule whose support budget at stage 0 equals `k` for `kappa = 1`.
    fn sched_with_budget(k: f64) -> KamSchedule {
        // K_0 = 0.25 |ln eps0| / mu_0 and mu_0 = beta0 / 8.
        let beta0 = 0.5;
        let eps0 = (-(k * beta0 / 8.0) * 4.0).exp();
        KamSchedule::build(eps0, beta0, 1.0, 1.0, 1).unwrap()
    }

    fn brute_force(n_max: u32, budget: f64) -> Vec<Vec<u32>> {
        let mut out = Vec::new();
        for mask in 1u32..(1 << n_max) {
            let a: Vec<u32> = (1..=n_max).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            if a.iter().sum::<u32>() as f64 <= budget + 1e-9 {
                out.push(a);
            }
        }
        out.sort();
        out
    }

    #[test]
    fn matches_brute_force() {
        let m = MassVector::exponential(1.0, 10).unwrap();
        for k in [1.0, 3.0, 7.0, 12.5] {
            let s = sched_with_budget(k);
            let mut got = enumerate_an(0, &m, &s);
            got.sort();
            assert_eq!(got, brute_force(10, k), "budget {k}");
        }
    }

    #[test]
    fn small_budgets() {
        let m = MassVector::exponential(1.0, 6).unwrap();
        let got = enumerate_an(0, &m, &sched_with_budget(3.0));
        assert_eq!(got, vec![vec![1], vec![1, 2], vec![2], vec![3]]);
        assert_eq!(enumerate_an(0, &m, &sched_with_budget(1.0)), vec![vec![1]]);
    }

    #[test]
    fn cardinality_bounds() {
        let m = MassVector::exponential(1.0, 200).unwrap();
        let s = sched_with_budget(60.0);
        let k = s.support_budget(0);
        for a in enumerate_an(0, &m, &s) {
            assert!((a.len() as f64) <= (2.0 * k).sqrt() + 1.0);
            assert!((*a.last().unwrap() as f64) <= k);
        }
    }

    #[test]
    fn limited_enumeration_reports_truncation() {
        let m = MassVector::exponential(1.0, 50).unwrap();
        let (sets, complete) = enumerate_an_limited(0, &m, &sched_with_budget(30.0), 10);
        assert_eq!(sets.len(), 10);
        assert!(!complete);
    }

    #[test]
    fn truncation_examples() {
        let m = MassVector::exponential(1.0, 3).unwrap();
        let s = KamSchedule::build(1e-6, 0.5, 1.0, 1.0, 2).unwrap();
        let quad = TFSeries::monomial(3, MonomialKey::single(1, 0, 2), Complex64::new(1.0, 0.0));
        let t = kam_truncate(&quad, 0, &s, &m).unwrap();
        assert!(t.q.is_empty());
        assert_eq!(t.r, quad);

        let big = s.l_max(0) as i32 + 1;
        let mut p = TFSeries::action(3, 1, 1.0);
        p.add_term(MonomialKey::single(1, big, 0), Complex64::new(1.0, 0.0));
        let t = kam_truncate(&p, 0, &s, &m).unwrap();
        assert_eq!(t.q, TFSeries::action(3, 1, 1.0));
        assert_eq!(&t.q + &t.r, p);
    }
}
