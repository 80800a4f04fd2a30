use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{MassVector, MonomialKey, TFSeries};

const CHUNK: usize = 64;

/// `{h, g} = sum_j m_j^{-1} (d_phi_j h d_J_j g - d_J_j h d_phi_j g)`.
///
/// For monomials `a`, `b` sharing site `j` the two products land on the same
/// key (exponents added, `alpha_j` lowered by one) with weight
/// `i (l^a_j alpha^b_j - alpha^a_j l^b_j) / m_j`, so each pair contributes
/// at most one term per shared site.
///
/// Work is split over fixed-size chunks of `h` and merged in chunk order,
/// so the result does not depend on the thread count.
pub fn poisson_bracket(h: &TFSeries, g: &TFSeries, m: &MassVector) -> TFSeries {
    let n_max = h.n_max().max(g.n_max());
    let drop_tol = h.drop_tol().max(g.drop_tol());

    let mut by_site: BTreeMap<u32, Vec<(&MonomialKey, Complex64)>> = BTreeMap::new();
    for (k, c) in g.iter() {
        for s in k.support() {
            by_site.entry(s).or_default().push((k, *c));
        }
    }
    let inv_mass: BTreeMap<u32, f64> = by_site.keys().map(|&s| (s, (-m.log_weight(s)).exp())).collect();

    let h_terms: Vec<(&MonomialKey, &Complex64)> = h.iter().collect();
    let partials: Vec<BTreeMap<MonomialKey, Complex64>> = h_terms
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut out: BTreeMap<MonomialKey, Complex64> = BTreeMap::new();
            for (ka, ca) in chunk {
                for fa in ka.factors() {
                    let Some(partners) = by_site.get(&fa.site) else {
                        continue;
                    };
                    let w = inv_mass[&fa.site];
                    for (kb, cb) in partners {
                        let fb = kb.factor(fa.site).expect("indexed site");
                        let weight = fa.l as f64 * fb.alpha as f64 - fa.alpha as f64 * fb.l as f64;
                        if weight == 0.0 {
                            continue;
                        }
                        let key = ka.product_lowered(kb, fa.site);
                        let val = *ca * cb * Complex64::new(0.0, weight * w);
                        *out.entry(key).or_default() += val;
                    }
                }
            }
            out
        })
        .collect();

    let mut merged: BTreeMap<MonomialKey, Complex64> = BTreeMap::new();
    for part in partials {
        for (k, v) in part {
            *merged.entry(k).or_default() += v;
        }
    }
    TFSeries::from_map(n_max, drop_tol, merged)
}
