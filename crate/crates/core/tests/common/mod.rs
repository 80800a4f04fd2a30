#![allow(dead_code)]

use lrkam::series::{MonomialKey, TFSeries};
use num_complex::Complex64;
use rand::Rng;

/// Random series with at most `terms` monomials on sites `1..=sites`.
pub fn random_series<R: Rng>(rng: &mut R, sites: u32, terms: usize, max_l: i32, max_alpha: u32) -> TFSeries {
    let mut h = TFSeries::zero(sites);
    for _ in 0..terms {
        let size = rng.gen_range(1..=sites.min(3));
        let mut support: Vec<u32> = Vec::new();
        while support.len() < size as usize {
            let s = rng.gen_range(1..=sites);
            if !support.contains(&s) {
                support.push(s);
            }
        }
        support.sort();
        let mut l = Vec::new();
        let mut alpha = Vec::new();
        for _ in &support {
            loop {
                let li = rng.gen_range(-max_l..=max_l);
                let ai = rng.gen_range(0..=max_alpha);
                if li != 0 || ai != 0 {
                    l.push(li);
                    alpha.push(ai);
                    break;
                }
            }
        }
        let key = MonomialKey::from_parts(&support, &l, &alpha).unwrap();
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        h.add_term(key, c);
    }
    h
}

/// Random real series: every term is paired with its conjugate partner.
pub fn random_real_series<R: Rng>(rng: &mut R, sites: u32, terms: usize, max_l: i32, max_alpha: u32) -> TFSeries {
    random_series(rng, sites, terms, max_l, max_alpha).real_part()
}

/// Relative size of `a` against the scale `s`.
pub fn rel(a: &TFSeries, s: f64) -> f64 {
    a.max_abs() / s.max(1e-300)
}
