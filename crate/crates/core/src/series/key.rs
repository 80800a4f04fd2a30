use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::SeriesError;

/// One site's contribution to a monomial `J_j^alpha e(l phi_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub site: u32,
    pub l: i32,
    pub alpha: u32,
}

impl Factor {
    pub fn new(site: u32, l: i32, alpha: u32) -> Self {
        Self { site, l, alpha }
    }

    fn is_trivial(&self) -> bool {
        self.l == 0 && self.alpha == 0
    }
}

/// Key of a Taylor-Fourier monomial `J^alpha e(l.phi)`.
///
/// Factors are stored sorted by site, one per site of the support, and a
/// factor is never trivial (`l = 0` and `alpha = 0`), so the support is
/// exactly `supp(|l| + alpha)`. The empty key is the constant monomial.
///
/// Keys order lexicographically on `(max A, |A|, A, l, alpha)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MonomialKey {
    factors: SmallVec<[Factor; 4]>,
}

impl MonomialKey {
    pub fn constant() -> Self {
        Self::default()
    }

    /// Builds a key from arbitrary factors; trivial factors are dropped.
    pub fn new<I: IntoIterator<Item = Factor>>(factors: I) -> Result<Self, SeriesError> {
        let mut fs: SmallVec<[Factor; 4]> = factors.into_iter().filter(|f| !f.is_trivial()).collect();
        fs.sort_by_key(|f| f.site);
        for w in fs.windows(2) {
            if w[0].site == w[1].site {
                return Err(SeriesError::InvalidKey(format!("site {} repeated", w[0].site)));
            }
        }
        if let Some(f) = fs.first() {
            if f.site == 0 {
                return Err(SeriesError::InvalidKey("sites are 1-based".into()));
            }
        }
        Ok(Self { factors: fs })
    }

    /// Builds a key from parallel `A`, `l`, `alpha` arrays.
    pub fn from_parts(support: &[u32], l: &[i32], alpha: &[u32]) -> Result<Self, SeriesError> {
        if support.len() != l.len() || support.len() != alpha.len() {
            return Err(SeriesError::InvalidKey("A, l and alpha must have equal lengths".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SeriesError::InvalidKey("support must be strictly increasing".into()));
        }
        let factors: SmallVec<[Factor; 4]> = support
            .iter()
            .zip(l)
            .zip(alpha)
            .map(|((&s, &l), &a)| Factor::new(s, l, a))
            .collect();
        if let Some(f) = factors.iter().find(|f| f.is_trivial()) {
            return Err(SeriesError::InvalidKey(format!(
                "site {} has l = 0 and alpha = 0 but is listed in the support",
                f.site
            )));
        }
        Self::new(factors)
    }

    /// `J_site`
    pub fn action(site: u32) -> Self {
        Self::single(site, 0, 1)
    }

    pub fn single(site: u32, l: i32, alpha: u32) -> Self {
        Self::new([Factor::new(site, l, alpha)]).expect("single-site key")
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.factors.iter().map(|f| f.site)
    }

    pub fn support_len(&self) -> usize {
        self.factors.len()
    }

    /// `max A`, `None` for the constant key.
    pub fn top(&self) -> Option<u32> {
        self.factors.last().map(|f| f.site)
    }

    /// `A \ {max A}`.
    pub fn lower_support(&self) -> impl Iterator<Item = u32> + '_ {
        let n = self.factors.len().saturating_sub(1);
        self.factors[..n].iter().map(|f| f.site)
    }

    pub fn factor(&self, site: u32) -> Option<&Factor> {
        self.factors
            .binary_search_by_key(&site, |f| f.site)
            .ok()
            .map(|i| &self.factors[i])
    }

    pub fn l_at(&self, site: u32) -> i32 {
        self.factor(site).map_or(0, |f| f.l)
    }

    pub fn alpha_at(&self, site: u32) -> u32 {
        self.factor(site).map_or(0, |f| f.alpha)
    }

    pub fn l_norm1(&self) -> u32 {
        self.factors.iter().map(|f| f.l.unsigned_abs()).sum()
    }

    pub fn alpha_norm1(&self) -> u32 {
        self.factors.iter().map(|f| f.alpha).sum()
    }

    pub fn is_angle_free(&self) -> bool {
        self.factors.iter().all(|f| f.l == 0)
    }

    /// The key with `l` replaced by `-l`.
    pub fn conjugate(&self) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .map(|f| Factor::new(f.site, -f.l, f.alpha))
                .collect(),
        }
    }

    /// The key with every angle index cleared (`l = 0`).
    pub fn without_angles(&self) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .filter(|f| f.alpha > 0)
                .map(|f| Factor::new(f.site, 0, f.alpha))
                .collect(),
        }
    }

    /// Key of the product of two monomials: exponents add site-wise.
    pub fn product(&self, other: &Self) -> Self {
        let mut out: SmallVec<[Factor; 4]> = SmallVec::with_capacity(self.factors.len() + other.factors.len());
        let (a, b) = (&self.factors, &other.factors);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let f = if j == b.len() || (i < a.len() && a[i].site < b[j].site) {
                i += 1;
                a[i - 1]
            } else if i == a.len() || b[j].site < a[i].site {
                j += 1;
                b[j - 1]
            } else {
                let f = Factor::new(a[i].site, a[i].l + b[j].l, a[i].alpha + b[j].alpha);
                i += 1;
                j += 1;
                f
            };
            if !f.is_trivial() {
                out.push(f);
            }
        }
        Self { factors: out }
    }

    /// The key with `alpha_site` lowered by one. Panics if `alpha_site == 0`.
    pub fn lower_alpha(&self, site: u32) -> Self {
        let mut out = self.factors.clone();
        let idx = out
            .iter()
            .position(|f| f.site == site)
            .expect("site present in key");
        assert!(out[idx].alpha > 0, "alpha already zero at site {site}");
        out[idx].alpha -= 1;
        if out[idx].is_trivial() {
            out.remove(idx);
        }
        Self { factors: out }
    }

    /// Product key with `alpha_site` lowered by one, computed without the
    /// intermediate allocation.
    pub(crate) fn product_lowered(&self, other: &Self, site: u32) -> Self {
        let mut out: SmallVec<[Factor; 4]> = SmallVec::with_capacity(self.factors.len() + other.factors.len());
        let (a, b) = (&self.factors, &other.factors);
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let mut f = if j == b.len() || (i < a.len() && a[i].site < b[j].site) {
                i += 1;
                a[i - 1]
            } else if i == a.len() || b[j].site < a[i].site {
                j += 1;
                b[j - 1]
            } else {
                let f = Factor::new(a[i].site, a[i].l + b[j].l, a[i].alpha + b[j].alpha);
                i += 1;
                j += 1;
                f
            };
            if f.site == site {
                f.alpha -= 1;
            }
            if !f.is_trivial() {
                out.push(f);
            }
        }
        Self { factors: out }
    }

    fn ordering_tuple_cmp(&self, other: &Self) -> Ordering {
        self.top()
            .cmp(&other.top())
            .then(self.factors.len().cmp(&other.factors.len()))
            .then_with(|| self.support().cmp(other.support()))
            .then_with(|| self.factors.iter().map(|f| f.l).cmp(other.factors.iter().map(|f| f.l)))
            .then_with(|| {
                self.factors
                    .iter()
                    .map(|f| f.alpha)
                    .cmp(other.factors.iter().map(|f| f.alpha))
            })
    }
}

impl Ord for MonomialKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ordering_tuple_cmp(other)
    }
}

impl PartialOrd for MonomialKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MonomialKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for fac in &self.factors {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            match (fac.alpha, fac.l) {
                (0, l) => write!(f, "e({l}phi{})", fac.site)?,
                (a, 0) => write!(f, "J{}^{a}", fac.site)?,
                (a, l) => write!(f, "J{}^{a}e({l}phi{})", fac.site, fac.site)?,
            }
        }
        Ok(())
    }
}
