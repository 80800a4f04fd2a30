//! Sparse Taylor-Fourier series `sum c J^alpha e(l.phi)` over finitely many
//! sites, with `e(x) = exp(ix)` and angles in `R / 2 pi Z`.

mod bracket;
pub mod io;
mod key;
mod lie;
mod mass;
mod norm;

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

pub use bracket::poisson_bracket;
pub use key::{Factor, MonomialKey};
pub use lie::{lie_iterates, lie_transform, Caps, LieSeries};
pub use mass::{MassSpec, MassVector};
pub use norm::{block_norm, weighted_norm, NormParams, NormReport};

use crate::error::SeriesError;

#[derive(Clone, Debug, PartialEq)]
pub struct TFSeries {
    n_max: u32,
    terms: BTreeMap<MonomialKey, Complex64>,
    drop_tol: f64,
}

impl TFSeries {
    pub fn zero(n_max: u32) -> Self {
        Self {
            n_max,
            terms: BTreeMap::new(),
            drop_tol: 0.0,
        }
    }

    pub fn with_drop_tol(mut self, tol: f64) -> Self {
        self.drop_tol = tol.max(0.0);
        self.terms.retain(|_, c| keep(*c, tol));
        self
    }

    pub fn from_terms<I>(n_max: u32, terms: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (MonomialKey, Complex64)>,
    {
        let mut s = Self::zero(n_max);
        for (k, c) in terms {
            s.try_add_term(k, c)?;
        }
        Ok(s)
    }

    /// `c J_site`
    pub fn action(n_max: u32, site: u32, c: f64) -> Self {
        Self::monomial(n_max, MonomialKey::action(site), Complex64::new(c, 0.0))
    }

    pub fn monomial(n_max: u32, key: MonomialKey, c: Complex64) -> Self {
        let mut s = Self::zero(n_max);
        s.add_term(key, c);
        s
    }

    pub fn constant(n_max: u32, c: Complex64) -> Self {
        Self::monomial(n_max, MonomialKey::constant(), c)
    }

    /// `xi . J = sum_j m_j xi_j J_j`, whose flow is `phi' = xi`.
    pub fn frequency_part(xi: &[f64], m: &MassVector) -> Self {
        let mut s = Self::zero(m.n_max());
        for (j, &x) in xi.iter().enumerate().take(m.n_max() as usize) {
            let j = j as u32 + 1;
            s.add_term(MonomialKey::action(j), Complex64::new(m.weight(j) * x, 0.0));
        }
        s
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn drop_tol(&self) -> f64 {
        self.drop_tol
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MonomialKey, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, key: &MonomialKey) -> Complex64 {
        self.terms.get(key).copied().unwrap_or_default()
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coeff(&MonomialKey::constant())
    }

    /// Adds `c` to the coefficient of `key`, dropping the entry if the sum
    /// falls to the drop threshold.
    pub fn add_term(&mut self, key: MonomialKey, c: Complex64) {
        let tol = self.drop_tol;
        match self.terms.entry(key) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if !keep(*e.get(), tol) {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if keep(c, tol) {
                    e.insert(c);
                }
            }
        }
    }

    pub fn try_add_term(&mut self, key: MonomialKey, c: Complex64) -> Result<(), SeriesError> {
        if let Some(site) = key.top() {
            if site > self.n_max {
                return Err(SeriesError::SupportOutOfRange { site, n_max: self.n_max });
            }
        }
        self.add_term(key, c);
        Ok(())
    }

    pub fn check_supports(&self) -> Result<(), SeriesError> {
        match self.terms.keys().next_back().and_then(|k| k.top()) {
            Some(site) if site > self.n_max => Err(SeriesError::SupportOutOfRange { site, n_max: self.n_max }),
            _ => Ok(()),
        }
    }

    pub fn max_l_norm(&self) -> u32 {
        self.terms.keys().map(|k| k.l_norm1()).max().unwrap_or(0)
    }

    pub fn max_alpha_norm(&self) -> u32 {
        self.terms.keys().map(|k| k.alpha_norm1()).max().unwrap_or(0)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.n_max).with_drop_tol(self.drop_tol);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v * c);
        }
        out
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(Complex64::new(c, 0.0))
    }

    /// Splits into the terms satisfying `keep` and the rest; the two parts
    /// sum back to `self` term for term.
    pub fn truncate<F: Fn(&MonomialKey) -> bool>(&self, pred: F) -> (Self, Self) {
        let mut kept = Self::zero(self.n_max).with_drop_tol(self.drop_tol);
        let mut dropped = kept.clone();
        for (k, v) in &self.terms {
            if pred(k) {
                kept.terms.insert(k.clone(), *v);
            } else {
                dropped.terms.insert(k.clone(), *v);
            }
        }
        (kept, dropped)
    }

    /// Angle-free part linear in `J`: `sum_j c_j J_j`. Constants excluded.
    pub fn average(&self) -> Self {
        self.truncate(|k| k.is_angle_free() && k.alpha_norm1() == 1).0
    }

    pub fn without_constant(&self) -> Self {
        self.truncate(|k| !k.is_constant()).0
    }

    /// `d/d phi_site`
    pub fn d_phi(&self, site: u32) -> Self {
        let mut out = Self::zero(self.n_max).with_drop_tol(self.drop_tol);
        for (k, v) in &self.terms {
            let l = k.l_at(site);
            if l != 0 {
                out.add_term(k.clone(), v * Complex64::new(0.0, l as f64));
            }
        }
        out
    }

    /// `d/d J_site`
    pub fn d_j(&self, site: u32) -> Self {
        let mut out = Self::zero(self.n_max).with_drop_tol(self.drop_tol);
        for (k, v) in &self.terms {
            let a = k.alpha_at(site);
            if a != 0 {
                out.add_term(k.lower_alpha(site), v * a as f64);
            }
        }
        out
    }

    pub fn evaluate(&self, phi: &[f64], j: &[f64]) -> Complex64 {
        let mut acc = Complex64::default();
        for (k, v) in &self.terms {
            acc += v * monomial_value(k, phi, j);
        }
        acc
    }

    /// Term-wise conjugation `c(A, l, alpha) -> conj c(A, -l, alpha)`.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero(self.n_max).with_drop_tol(self.drop_tol);
        for (k, v) in &self.terms {
            out.terms.insert(k.conjugate(), v.conj());
        }
        out
    }

    /// Largest violation of `c(A,-l,alpha) = conj c(A,l,alpha)`.
    pub fn reality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (k, v) in &self.terms {
            let partner = self.coeff(&k.conjugate());
            worst = worst.max((partner - v.conj()).norm());
        }
        worst
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.reality_defect() <= tol
    }

    /// `(h + conj h) / 2`, the real-valued projection.
    pub fn real_part(&self) -> Self {
        (self + &self.conj()).scale_real(0.5)
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient difference against `other`, over the union of keys.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).max_abs()
    }

    pub(crate) fn terms_map(&self) -> &BTreeMap<MonomialKey, Complex64> {
        &self.terms
    }

    pub(crate) fn from_map(n_max: u32, drop_tol: f64, terms: BTreeMap<MonomialKey, Complex64>) -> Self {
        let mut s = Self { n_max, terms, drop_tol };
        s.terms.retain(|_, c| keep(*c, drop_tol));
        s
    }
}

fn keep(c: Complex64, tol: f64) -> bool {
    let a = c.norm();
    a != 0.0 && a >= tol
}

pub(crate) fn monomial_value(k: &MonomialKey, phi: &[f64], j: &[f64]) -> Complex64 {
    let mut arg = 0.0;
    let mut mag = 1.0;
    for f in k.factors() {
        let s = (f.site - 1) as usize;
        arg += f.l as f64 * phi[s];
        if f.alpha > 0 {
            mag *= j[s].powi(f.alpha as i32);
        }
    }
    Complex64::from_polar(mag, arg)
}

impl AddAssign<&TFSeries> for TFSeries {
    fn add_assign(&mut self, rhs: &TFSeries) {
        self.n_max = self.n_max.max(rhs.n_max);
        for (k, v) in &rhs.terms {
            self.add_term(k.clone(), *v);
        }
    }
}

impl SubAssign<&TFSeries> for TFSeries {
    fn sub_assign(&mut self, rhs: &TFSeries) {
        self.n_max = self.n_max.max(rhs.n_max);
        for (k, v) in &rhs.terms {
            self.add_term(k.clone(), -v);
        }
    }
}

impl Add for &TFSeries {
    type Output = TFSeries;
    fn add(self, rhs: &TFSeries) -> TFSeries {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &TFSeries {
    type Output = TFSeries;
    fn sub(self, rhs: &TFSeries) -> TFSeries {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &TFSeries {
    type Output = TFSeries;
    fn neg(self) -> TFSeries {
        self.scale_real(-1.0)
    }
}

/// Pointwise product.
impl Mul for &TFSeries {
    type Output = TFSeries;
    fn mul(self, rhs: &TFSeries) -> TFSeries {
        let mut out = TFSeries::zero(self.n_max.max(rhs.n_max)).with_drop_tol(self.drop_tol);
        for (ka, va) in &self.terms {
            for (kb, vb) in &rhs.terms {
                out.add_term(ka.product(kb), va * vb);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn truncate_partitions_exactly() {
        let mut h = TFSeries::action(3, 1, 1.0);
        h.add_term(MonomialKey::single(1, 0, 2), c(1.0));
        let (kept, dropped) = h.truncate(|k| k.alpha_norm1() <= 1);
        assert_eq!(kept, TFSeries::action(3, 1, 1.0));
        assert_eq!(dropped, TFSeries::monomial(3, MonomialKey::single(1, 0, 2), c(1.0)));
        assert_eq!(&kept + &dropped, h);
        let (all, none) = h.truncate(|_| true);
        assert_eq!(all, h);
        assert!(none.is_empty());
    }

    #[test]
    fn average_keeps_linear_angle_free_part() {
        let mut h = TFSeries::action(3, 3, 2.0);
        h.add_term(MonomialKey::from_parts(&[1, 2], &[0, 0], &[1, 1]).unwrap(), c(1.0));
        h.add_term(MonomialKey::single(1, 1, 1), c(1.0));
        h.add_term(MonomialKey::constant(), c(4.0));
        assert_eq!(h.average(), TFSeries::action(3, 3, 2.0));
        assert!(TFSeries::monomial(3, MonomialKey::single(1, 1, 0), c(1.0)).average().is_empty());
        assert!(TFSeries::constant(3, c(1.0)).average().is_empty());
    }

    #[test]
    fn evaluate_simple_monomials() {
        let h = TFSeries::action(2, 1, 1.0);
        assert!((h.evaluate(&[0.7, 0.1], &[0.2, 0.9]) - c(0.2)).norm() < 1e-15);
        let e = TFSeries::monomial(2, MonomialKey::single(1, 1, 0), c(1.0));
        assert!((e.evaluate(&[PI, 0.0], &[0.0, 0.0]) - c(-1.0)).norm() < 1e-15);
    }

    #[test]
    fn cancellation_removes_entries() {
        let mut h = TFSeries::action(2, 1, 1.0);
        h -= &TFSeries::action(2, 1, 1.0);
        assert!(h.is_empty());
    }

    #[test]
    fn drop_threshold_applies() {
        let mut h = TFSeries::zero(2).with_drop_tol(1e-3);
        h.add_term(MonomialKey::action(1), c(1e-4));
        assert!(h.is_empty());
    }

    #[test]
    fn derivatives() {
        let k = MonomialKey::from_parts(&[1, 2], &[2, 0], &[3, 1]).unwrap();
        let h = TFSeries::monomial(2, k.clone(), c(1.0));
        assert_eq!(h.d_phi(1).coeff(&k), Complex64::new(0.0, 2.0));
        assert!(h.d_phi(2).is_empty());
        assert_eq!(h.d_j(1).coeff(&k.lower_alpha(1)), c(3.0));
    }

    #[test]
    fn real_part_is_real() {
        let mut h = TFSeries::monomial(2, MonomialKey::from_parts(&[1, 2], &[1, -1], &[0, 0]).unwrap(), Complex64::new(0.3, 0.2));
        h.add_term(MonomialKey::action(2), Complex64::new(1.0, 0.5));
        assert!(!h.is_real(1e-12));
        assert!(h.real_part().is_real(1e-15));
    }
}
