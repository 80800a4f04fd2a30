use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Potential;
use crate::error::MechanicsError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Gauss-Legendre nodes; convergence is checked against half as many.
    pub nodes: usize,
    /// Chebyshev degree of the one-dimensional fits.
    pub degree: usize,
    pub rel_tol: f64,
    /// Turning points are searched within this distance of the centre.
    pub scan_limit: f64,
    /// Equal panels in the angle variable are doubled up to this count
    /// until the two rules agree.
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes: 64,
            degree: 32,
            rel_tol: 1e-11,
            scan_limit: 1e3,
            max_panels: 64,
        }
    }
}

/// Energy interval, optional angular-momentum interval (planar case) and a
/// point `center` inside every level set of the domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    pub energy: (f64, f64),
    pub angular_momentum: Option<(f64, f64)>,
    pub center: f64,
}

/// Chebyshev series on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chebyshev {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolates `f` at the `degree + 1` Chebyshev points of the first kind.
    pub fn fit<E, F: FnMut(f64) -> Result<f64, E>>(lo: f64, hi: f64, degree: usize, mut f: F) -> Result<Self, E> {
        let n = degree + 1;
        let theta = |k: usize| std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            values.push(f(0.5 * (lo + hi) + 0.5 * (hi - lo) * theta(k).cos())?);
        }
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = values.iter().enumerate().map(|(k, v)| v * (j as f64 * theta(k)).cos()).sum();
                let c = 2.0 * s / n as f64;
                if j == 0 {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect();
        Ok(Self { lo, hi, coeffs })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }

    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        let mut d = vec![0.0; n.max(1)];
        for k in (1..n).rev() {
            let next = if k + 1 < n { d[k + 1] } else { 0.0 };
            d[k - 1] = next + 2.0 * k as f64 * self.coeffs[k];
        }
        d[0] *= 0.5;
        d.truncate(n.saturating_sub(1).max(1));
        let scale = 2.0 / (self.hi - self.lo);
        Self {
            lo: self.lo,
            hi: self.hi,
            coeffs: d.into_iter().map(|c| c * scale).collect(),
        }
    }
}

/// `L`, `dL/dh = T / 2 pi` and `dL/dG` at one level set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionDerivatives {
    pub action: f64,
    pub dl_dh: f64,
    pub dl_dg: f64,
}

/// Step-halving check of `d^2 h / dL^2` against the fitted value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistCheck {
    pub action: f64,
    pub fitted: f64,
    pub coarse: f64,
    pub fine: f64,
    pub extrapolated: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Rule {
    /// Gauss-Legendre `(x, w)` on `[-1, 1]`.
    nodes: Vec<(f64, f64)>,
}

impl Rule {
    fn new(n: usize) -> Result<Self, MechanicsError> {
        let deg = n
            .try_into()
            .map_err(|_| MechanicsError::Tolerance(format!("{n} quadrature nodes")))?;
        Ok(Self {
            nodes: GaussLegendre::new(deg).iter().map(|(x, w)| (*x, *w)).collect(),
        })
    }
}

/// Action-angle chart of `|y|^2/2 - V(|x|)` on a line, or of the radial
/// reduction `R^2/2 + G^2/(2r^2) - V(r)` in the plane.
///
/// Actions are `(1/pi) int sqrt(2(h - U))` between turning points, with
/// `r = c + a sin theta` absorbing the square-root endpoints. On a line
/// `L(h)` and its inverse are additionally fitted by Chebyshev series.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionAngleChart {
    pub potential: Potential,
    pub domain: ChartDomain,
    pub config: QuadratureConfig,
    rule: Rule,
    coarse: Rule,
    /// `L(h)` on the energy interval (line only).
    pub action_fit: Option<Chebyshev>,
    /// `h(L)` on the action interval (line only).
    pub energy_fit: Option<Chebyshev>,
    /// Largest deviation of the fits from quadrature plus Newton inversion.
    pub fit_residual: f64,
}

/// Builds the chart, checking the level sets at the domain ends.
pub fn action_map(
    potential: &Potential,
    domain: &ChartDomain,
    config: &QuadratureConfig,
) -> Result<ActionAngleChart, MechanicsError> {
    let (a, b) = domain.energy;
    if !(a < b) {
        return Err(MechanicsError::Domain(format!("empty energy interval ({a}, {b})")));
    }
    if let Some((g1, g2)) = domain.angular_momentum {
        if !(g1 <= g2) {
            return Err(MechanicsError::Domain(format!("empty angular-momentum interval ({g1}, {g2})")));
        }
        if !(domain.center > 0.0) {
            return Err(MechanicsError::Domain("planar charts need a positive centre radius".into()));
        }
    }
    if config.nodes < 4 || config.degree < 2 {
        return Err(MechanicsError::Tolerance(format!(
            "{} nodes, degree {} is too coarse",
            config.nodes, config.degree
        )));
    }
    let mut chart = ActionAngleChart {
        potential: potential.clone(),
        domain: domain.clone(),
        config: config.clone(),
        rule: Rule::new(config.nodes)?,
        coarse: Rule::new(config.nodes / 2)?,
        action_fit: None,
        energy_fit: None,
        fit_residual: 0.0,
    };
    let gs: Vec<f64> = match domain.angular_momentum {
        Some((g1, g2)) => vec![g1, g2],
        None => vec![0.0],
    };
    for g in gs {
        chart.derivatives(a, g)?;
        chart.derivatives(b, g)?;
    }
    if !chart.is_planar() {
        let deg = config.degree;
        let lfit = Chebyshev::fit(a, b, deg, |h| chart.action(h, 0.0))?;
        let (la, lb) = (chart.action(a, 0.0)?, chart.action(b, 0.0)?);
        let hfit = Chebyshev::fit(la, lb, deg, |l| chart.energy_at(l, 0.0))?;
        let mut residual = 0.0f64;
        for k in 0..2 * deg {
            let s = (k as f64 + 0.5) / (2 * deg) as f64;
            let h = a + s * (b - a);
            residual = residual.max((lfit.eval(h) - chart.action(h, 0.0)?).abs());
            let l = la + s * (lb - la);
            residual = residual.max((hfit.eval(l) - chart.energy_at(l, 0.0)?).abs());
        }
        chart.action_fit = Some(lfit);
        chart.energy_fit = Some(hfit);
        chart.fit_residual = residual;
    }
    Ok(chart)
}

impl ActionAngleChart {
    pub fn is_planar(&self) -> bool {
        self.domain.angular_momentum.is_some()
    }

    /// Effective potential `U(r) = G^2/(2r^2) - V(r)` (planar) or `-V(r)`.
    pub fn effective(&self, r: f64, g: f64) -> f64 {
        let u = -self.potential.value(r);
        if self.is_planar() {
            u + 0.5 * g * g / (r * r)
        } else {
            u
        }
    }

    /// `d^k U / dr^k`.
    pub fn effective_derivative(&self, r: f64, g: f64, k: usize) -> f64 {
        let u = -self.potential.derivative(r, k);
        if !self.is_planar() {
            return u;
        }
        // d^k r^{-2} = (-1)^k (k+1)! r^{-2-k}
        let fact: f64 = (1..=k + 1).map(|i| i as f64).product();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        u + 0.5 * g * g * sign * fact * r.powi(-(k as i32) - 2)
    }

    /// Turning points `r_- < r_+` of the level set through `h`.
    pub fn turning_points(&self, h: f64, g: f64) -> Result<(f64, f64), MechanicsError> {
        let c = self.domain.center;
        if !(self.effective(c, g) < h) {
            return Err(MechanicsError::Domain(format!(
                "centre {c} is not inside the level set h = {h}, G = {g}"
            )));
        }
        Ok((self.scan(c, -1.0, h, g)?, self.scan(c, 1.0, h, g)?))
    }

    fn scan(&self, c: f64, dir: f64, h: f64, g: f64) -> Result<f64, MechanicsError> {
        let mut step = 1e-3 * (1.0 + c.abs());
        let mut prev = c;
        loop {
            let mut next = prev + dir * step;
            if self.is_planar() && next <= 0.0 {
                next = 0.5 * prev;
                if prev < 1e-12 {
                    return Err(MechanicsError::Domain(format!("level set h = {h}, G = {g} reaches r = 0")));
                }
            }
            if (next - c).abs() > self.config.scan_limit {
                return Err(MechanicsError::Domain(format!(
                    "open level set h = {h}, G = {g}: no turning point within {}",
                    self.config.scan_limit
                )));
            }
            if self.effective(next, g) >= h {
                return Ok(self.bisect(prev, next, h, g));
            }
            prev = next;
            step *= 1.05;
        }
    }

    /// Root of `U = h` between `inside` (`U < h`) and `outside`.
    fn bisect(&self, mut inside: f64, mut outside: f64, h: f64, g: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if self.effective(mid, g) < h {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    }

    /// `Q(s)` with `2 (h - U(c + a s)) = 2 (1 - s^2) Q(s) / r^{2p}`, `p = 1`
    /// in the plane and `0` on a line. Dividing out the turning points keeps
    /// the integrand accurate right up to them.
    fn reduced_gap(&self, h: f64, g: f64, c: f64, a: f64) -> Vec<f64> {
        let mut poly = self.potential.coefficients();
        if poly.is_empty() {
            poly.push(0.0);
        }
        poly[0] += h;
        if self.is_planar() {
            poly.splice(0..0, [-0.5 * g * g, 0.0]);
        }
        let mut acc = vec![0.0; poly.len()];
        let mut deg = 0;
        acc[0] = *poly.last().unwrap_or(&0.0);
        for &pk in poly.iter().rev().skip(1) {
            for k in (0..=deg).rev() {
                acc[k + 1] += a * acc[k];
                acc[k] *= c;
            }
            deg += 1;
            acc[0] += pk;
        }
        // divide by s^2 - 1 and flip the sign
        let n = acc.len() - 1;
        if n < 2 {
            return vec![0.0];
        }
        let mut q = vec![0.0; n - 1];
        for k in (2..=n).rev() {
            q[k - 2] = acc[k] + if k < n - 1 { q[k] } else { 0.0 };
        }
        q.iter().map(|v| -v).collect()
    }

    fn integrate(&self, rule: &Rule, panels: usize, lo: f64, hi: f64, h: f64, g: f64) -> Result<ActionDerivatives, MechanicsError> {
        let (c, a) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let q = self.reduced_gap(h, g, c, a);
        let planar = self.is_planar();
        let width = std::f64::consts::PI / panels as f64;
        let (mut l, mut dh, mut dg) = (0.0, 0.0, 0.0);
        for p in 0..panels {
            let mid = -std::f64::consts::FRAC_PI_2 + (p as f64 + 0.5) * width;
            for &(x, w) in &rule.nodes {
                let th = mid + 0.5 * width * x;
                let wt = 0.5 * width * w;
                let (sn, cs) = th.sin_cos();
                let qv = q.iter().rev().fold(0.0, |acc, v| acc * sn + v);
                if !(qv > 0.0) {
                    return Err(MechanicsError::Domain(format!(
                        "level set h = {h}, G = {g} is not a single closed curve near r = {}",
                        c + a * sn
                    )));
                }
                let root = (2.0 * qv).sqrt();
                if planar {
                    let r = c + a * sn;
                    l += wt * cs * cs * root / r;
                    dh += wt * r / root;
                    dg -= wt * g / (r * root);
                } else {
                    l += wt * cs * cs * root;
                    dh += wt / root;
                }
            }
        }
        let f = a / std::f64::consts::PI;
        Ok(ActionDerivatives {
            action: f * l,
            dl_dh: f * dh,
            dl_dg: f * dg,
        })
    }

    /// Action and its derivatives by quadrature. Panels are doubled until
    /// the full and half rules agree.
    pub fn derivatives(&self, h: f64, g: f64) -> Result<ActionDerivatives, MechanicsError> {
        let (lo, hi) = self.turning_points(h, g)?;
        let tol = self.config.rel_tol;
        let close = |x: f64, y: f64| (x - y).abs() <= tol * x.abs().max(1e-300);
        let mut panels = 1;
        loop {
            let fine = self.integrate(&self.rule, panels, lo, hi, h, g)?;
            let coarse = self.integrate(&self.coarse, panels, lo, hi, h, g)?;
            if close(fine.action, coarse.action) && close(fine.dl_dh, coarse.dl_dh) && close(fine.dl_dg, coarse.dl_dg) {
                return Ok(fine);
            }
            if panels >= self.config.max_panels {
                return Err(MechanicsError::Tolerance(format!(
                    "h = {h}, G = {g}: L = {:.15e} vs {:.15e}, dL/dh = {:.15e} vs {:.15e} with {panels} panels",
                    fine.action, coarse.action, fine.dl_dh, coarse.dl_dh
                )));
            }
            panels *= 2;
        }
    }

    pub fn action(&self, h: f64, g: f64) -> Result<f64, MechanicsError> {
        Ok(self.derivatives(h, g)?.action)
    }

    /// `2 pi / T = 1 / (dL/dh)`
    pub fn frequency(&self, h: f64, g: f64) -> Result<f64, MechanicsError> {
        Ok(1.0 / self.derivatives(h, g)?.dl_dh)
    }

    pub fn period(&self, h: f64, g: f64) -> Result<f64, MechanicsError> {
        Ok(std::f64::consts::TAU * self.derivatives(h, g)?.dl_dh)
    }

    /// Energy of the level set with action `l`, by safeguarded Newton on
    /// the monotone map `h -> L(h, G)`. The bracket may extend past the
    /// domain as long as the level sets stay closed.
    pub fn energy_at(&self, l: f64, g: f64) -> Result<f64, MechanicsError> {
        let (a, b) = self.domain.energy;
        let width = b - a;
        let (mut lo, mut hi) = (a, b);
        let mut l_lo = self.action(lo, g)?;
        let mut l_hi = self.action(hi, g)?;
        for _ in 0..8 {
            if l_lo <= l {
                break;
            }
            hi = lo;
            l_hi = l_lo;
            lo -= 0.25 * width;
            l_lo = self.action(lo, g)?;
        }
        for _ in 0..8 {
            if l_hi >= l {
                break;
            }
            lo = hi;
            l_lo = l_hi;
            hi += 0.25 * width;
            l_hi = self.action(hi, g)?;
        }
        if !(l_lo <= l && l <= l_hi) {
            return Err(MechanicsError::Domain(format!("action {l} outside the chart at G = {g}")));
        }
        let mut h = lo + (hi - lo) * (l - l_lo) / (l_hi - l_lo).max(f64::MIN_POSITIVE);
        for _ in 0..100 {
            let d = self.derivatives(h, g)?;
            let f = d.action - l;
            if f == 0.0 {
                return Ok(h);
            }
            if f < 0.0 {
                lo = h;
            } else {
                hi = h;
            }
            let mut next = h - f / d.dl_dh;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - h).abs() <= 4.0 * f64::EPSILON * h.abs().max(1e-300) {
                return Ok(next);
            }
            h = next;
        }
        Ok(h)
    }

    /// `[L(a), L(b)]` at angular momentum `g`.
    pub fn action_range(&self, g: f64) -> Result<(f64, f64), MechanicsError> {
        let (a, b) = self.domain.energy;
        Ok((self.action(a, g)?, self.action(b, g)?))
    }

    fn line_fit(&self) -> Result<&Chebyshev, MechanicsError> {
        self.energy_fit
            .as_ref()
            .ok_or_else(|| MechanicsError::Unsupported("fitted inverse exists only for charts on a line".into()))
    }

    /// `h(L)` from the fit.
    pub fn fitted_energy(&self, l: f64) -> Result<f64, MechanicsError> {
        Ok(self.line_fit()?.eval(l))
    }

    /// `d^k h / dL^k` from the fit.
    pub fn fitted_derivative(&self, l: f64, k: usize) -> Result<f64, MechanicsError> {
        let mut f = self.line_fit()?.clone();
        for _ in 0..k {
            f = f.derivative();
        }
        Ok(f.eval(l))
    }

    /// `dh/dL` at action `l`, by inversion and quadrature.
    pub fn frequency_at_action(&self, l: f64, g: f64) -> Result<f64, MechanicsError> {
        self.frequency(self.energy_at(l, g)?, g)
    }

    /// Fitted twist `d^2 h / dL^2` confirmed by central differences of the
    /// quadrature frequency with steps `step` and `step / 2`.
    pub fn twist(&self, l: f64, step: f64) -> Result<TwistCheck, MechanicsError> {
        let fitted = self.fitted_derivative(l, 2)?;
        let diff = |s: f64| -> Result<f64, MechanicsError> {
            Ok((self.frequency_at_action(l + s, 0.0)? - self.frequency_at_action(l - s, 0.0)?) / (2.0 * s))
        };
        let coarse = diff(step)?;
        let fine = diff(0.5 * step)?;
        Ok(TwistCheck {
            action: l,
            fitted,
            coarse,
            fine,
            extrapolated: (4.0 * fine - coarse) / 3.0,
        })
    }

    /// Phase-space points `(x, y)` at angles `2 pi k / count`, the angle
    /// being time times frequency, zero at the right turning point.
    pub fn orbit(&self, l: f64, count: usize, substeps: usize) -> Result<Vec<(f64, f64)>, MechanicsError> {
        if self.is_planar() {
            return Err(MechanicsError::Unsupported("orbit sampling on a line only".into()));
        }
        let h = self.energy_at(l, 0.0)?;
        let (_, right) = self.turning_points(h, 0.0)?;
        let period = self.period(h, 0.0)?;
        let substeps = substeps.max(1);
        let dt = period / (count * substeps) as f64;
        let force = |x: f64| -self.effective_derivative(x, 0.0, 1);
        let (mut x, mut y) = (right, 0.0);
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push((x, y));
            for _ in 0..substeps {
                let (k1x, k1y) = (y, force(x));
                let (k2x, k2y) = (y + 0.5 * dt * k1y, force(x + 0.5 * dt * k1x));
                let (k3x, k3y) = (y + 0.5 * dt * k2y, force(x + 0.5 * dt * k2x));
                let (k4x, k4y) = (y + dt * k3y, force(x + dt * k3x));
                x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
                y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
            }
        }
        Ok(out)
    }
}

/// Nondegenerate minimum of the effective potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticPoint {
    pub r: f64,
    pub energy: f64,
    /// `sqrt(U''(r))`
    pub omega: f64,
    /// `d omega / dI` at `I = 0`: `h = E + omega I + twist I^2 / 2 + ...`
    pub twist: f64,
}

/// Newton on `U'(r) = 0` from `guess`; `g` adds the centrifugal term.
pub fn elliptic_point(potential: &Potential, g: Option<f64>, guess: f64) -> Result<EllipticPoint, MechanicsError> {
    let chart = ActionAngleChart {
        potential: potential.clone(),
        domain: ChartDomain {
            energy: (0.0, 1.0),
            angular_momentum: g.map(|v| (v, v)),
            center: guess,
        },
        config: QuadratureConfig::default(),
        rule: Rule { nodes: Vec::new() },
        coarse: Rule { nodes: Vec::new() },
        action_fit: None,
        energy_fit: None,
        fit_residual: 0.0,
    };
    let gv = g.unwrap_or(0.0);
    let d = |r: f64, k: usize| chart.effective_derivative(r, gv, k);
    let mut r = guess;
    for _ in 0..100 {
        let step = d(r, 1) / d(r, 2);
        r -= step;
        if !r.is_finite() {
            break;
        }
        if step.abs() <= 4.0 * f64::EPSILON * r.abs().max(1.0) {
            break;
        }
    }
    let u2 = d(r, 2);
    if !r.is_finite() || d(r, 1).abs() > 1e-10 * (1.0 + u2.abs()) {
        return Err(MechanicsError::Domain(format!("no equilibrium found from r = {guess}")));
    }
    if !(u2 > 0.0) {
        return Err(MechanicsError::Singular(format!("equilibrium at r = {r} is not elliptic (U'' = {u2})")));
    }
    let omega = u2.sqrt();
    let a = d(r, 3) / 6.0;
    let b = d(r, 4) / 24.0;
    Ok(EllipticPoint {
        r,
        energy: chart.effective(r, gv),
        omega,
        twist: 3.0 * b / (omega * omega) - 7.5 * a * a / omega.powi(4),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrequencyChartConfig {
    /// Grid points per axis, interior to the `(h, G)` box.
    pub grid: usize,
    /// Finite-difference step in `(L, G)`.
    pub step: f64,
    /// `|det D^2 h| below this is flagged as degenerate.
    pub det_threshold: f64,
}

impl Default for FrequencyChartConfig {
    fn default() -> Self {
        Self {
            grid: 6,
            step: 1e-4,
            det_threshold: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub action: f64,
    pub angular_momentum: f64,
    pub energy: f64,
    /// `grad h(L, G)`
    pub frequency: [f64; 2],
    /// Richardson-extrapolated `det D^2 h`.
    pub det: f64,
    pub det_coarse: f64,
    pub det_fine: f64,
    /// Largest gap between the gradient and differences of `h`.
    pub gradient_error: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyChart {
    pub points: Vec<ChartPoint>,
    pub min_abs_det: f64,
    pub max_gradient_error: f64,
    /// Largest `|det_coarse - det_fine| / |det_fine|`.
    pub max_richardson_gap: f64,
    pub flagged: usize,
}

/// Frequency map `(L, G) -> grad h` and `det D^2 h` of a planar chart on a
/// grid interior to its domain. The gradient is exact up to quadrature;
/// the Hessian differences the gradient with two steps.
pub fn frequency_chart(chart: &ActionAngleChart, cfg: &FrequencyChartConfig) -> Result<FrequencyChart, MechanicsError> {
    let (g1, g2) = chart
        .domain
        .angular_momentum
        .ok_or_else(|| MechanicsError::Unsupported("frequency charts need a planar chart".into()))?;
    let (a, b) = chart.domain.energy;
    let n = cfg.grid.max(1);
    let inner = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
    let cells: Vec<(f64, f64)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (inner(a, b, i), inner(g1, g2, j)))
        .collect();
    let grad = |l: f64, g: f64| -> Result<[f64; 2], MechanicsError> {
        let h = chart.energy_at(l, g)?;
        let d = chart.derivatives(h, g)?;
        Ok([1.0 / d.dl_dh, -d.dl_dg / d.dl_dh])
    };
    let det_with = |l: f64, g: f64, s: f64| -> Result<f64, MechanicsError> {
        let (lp, lm) = (grad(l + s, g)?, grad(l - s, g)?);
        let (gp, gm) = (grad(l, g + s)?, grad(l, g - s)?);
        let hll = (lp[0] - lm[0]) / (2.0 * s);
        let hlg = 0.5 * ((lp[1] - lm[1]) + (gp[0] - gm[0])) / (2.0 * s);
        let hgg = (gp[1] - gm[1]) / (2.0 * s);
        Ok(hll * hgg - hlg * hlg)
    };
    let points: Vec<ChartPoint> = cells
        .par_iter()
        .map(|&(h, g)| {
            let l = chart.action(h, g)?;
            let f = grad(l, g)?;
            let s = cfg.step;
            let e = |dl: f64, dg: f64| chart.energy_at(l + dl, g + dg);
            let fd_l = (e(s, 0.0)? - e(-s, 0.0)?) / (2.0 * s);
            let fd_g = (e(0.0, s)? - e(0.0, -s)?) / (2.0 * s);
            let gradient_error = (fd_l - f[0]).abs().max((fd_g - f[1]).abs());
            let det_coarse = det_with(l, g, s)?;
            let det_fine = det_with(l, g, 0.5 * s)?;
            let det = (4.0 * det_fine - det_coarse) / 3.0;
            Ok(ChartPoint {
                action: l,
                angular_momentum: g,
                energy: h,
                frequency: f,
                det,
                det_coarse,
                det_fine,
                gradient_error,
                flagged: det.abs() < cfg.det_threshold,
            })
        })
        .collect::<Result<_, MechanicsError>>()?;
    let min_abs_det = points.iter().map(|p| p.det.abs()).fold(f64::INFINITY, f64::min);
    let max_gradient_error = points.iter().map(|p| p.gradient_error).fold(0.0, f64::max);
    let max_richardson_gap = points
        .iter()
        .filter(|p| !p.flagged)
        .map(|p| (p.det_coarse - p.det_fine).abs() / p.det_fine.abs())
        .fold(0.0, f64::max);
    let flagged = points.iter().filter(|p| p.flagged).count();
    Ok(FrequencyChart {
        points,
        min_abs_det,
        max_gradient_error,
        max_richardson_gap,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn duffing() -> Potential {
        Potential::Duffing { alpha: 1.0, beta: -1.0 }
    }

    fn line(potential: Potential, energy: (f64, f64), center: f64) -> ActionAngleChart {
        let domain = ChartDomain {
            energy,
            angular_momentum: None,
            center,
        };
        action_map(&potential, &domain, &QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn chebyshev_fit_and_derivative() {
        let f = Chebyshev::fit(0.5, 2.0, 20, |x| Ok::<_, ()>(x.exp() * x.sin())).unwrap();
        let d = f.derivative();
        let d2 = d.derivative();
        for &x in &[0.5, 0.9, 1.7, 2.0] {
            assert!((f.eval(x) - x.exp() * x.sin()).abs() < 1e-13);
            assert!((d.eval(x) - x.exp() * (x.sin() + x.cos())).abs() < 1e-11);
            assert!((d2.eval(x) - 2.0 * x.exp() * x.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn harmonic_action_is_energy_over_frequency() {
        let w = 1.7;
        let c = line(Potential::Harmonic { omega: w }, (0.1, 3.0), 0.0);
        for &h in &[0.1, 0.55, 1.3, 3.0] {
            assert!((c.action(h, 0.0).unwrap() - h / w).abs() < 1e-12);
            assert!((c.frequency(h, 0.0).unwrap() - w).abs() < 1e-12);
        }
        assert!(c.fit_residual < 1e-12);
        assert!(c.fitted_derivative(1.0, 2).unwrap().abs() < 1e-9);
    }

    #[test]
    fn duffing_well_bottom_frequency() {
        let p = elliptic_point(&duffing(), None, 0.6).unwrap();
        assert!((p.r - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((p.energy + 0.25).abs() < 1e-15);
        assert!((p.omega - 2.0).abs() < 1e-14);
        assert!((p.twist + 3.0).abs() < 1e-12);
        // the chart agrees close to the bottom of the right well
        let c = line(duffing(), (-0.2499, -0.2), std::f64::consts::FRAC_1_SQRT_2);
        let h = -0.25 + 1e-9;
        let near = ActionAngleChart { domain: ChartDomain { energy: (h, -0.2), ..c.domain.clone() }, ..c.clone() };
        assert!((near.frequency(h, 0.0).unwrap() - 2.0).abs() < 1e-6);
        let l = c.action(-0.2495, 0.0).unwrap();
        let t = c.twist(l, 1e-4).unwrap();
        assert!((t.fitted - t.extrapolated).abs() < 1e-5 * t.fitted.abs());
        assert!((t.fitted + 3.0).abs() < 0.05, "{t:?}");
    }

    #[test]
    fn action_is_monotone_and_inverse_composes() {
        let c = line(duffing(), (0.1, 2.0), 0.0);
        assert!(c.fit_residual < 1e-9, "{}", c.fit_residual);
        let mut prev = 0.0;
        for k in 0..20 {
            let h = 0.1 + 1.9 * k as f64 / 19.0;
            let d = c.derivatives(h, 0.0).unwrap();
            assert!(d.action > prev && d.dl_dh > 0.0);
            prev = d.action;
            assert!((c.energy_at(d.action, 0.0).unwrap() - h).abs() < 1e-12);
            assert!((c.fitted_energy(d.action).unwrap() - h).abs() < 1e-9);
        }
    }

    #[test]
    fn twist_on_the_unbounded_region() {
        let c = line(duffing(), (0.1, 2.0), 0.0);
        let (la, lb) = c.action_range(0.0).unwrap();
        for k in 1..20 {
            let l = la + (lb - la) * k as f64 / 20.0;
            let t = c.twist(l, 1e-3).unwrap();
            assert!(t.fitted.abs() >= 1e-3, "{t:?}");
            assert!((t.fitted - t.extrapolated).abs() <= 1e-4 * t.fitted.abs(), "{t:?}");
        }
    }

    #[test]
    fn open_level_sets_are_rejected() {
        let cfg = QuadratureConfig::default();
        let open = ChartDomain {
            energy: (0.1, 0.2),
            angular_momentum: None,
            center: 0.0,
        };
        let r = action_map(&Potential::Duffing { alpha: 1.0, beta: 1.0 }, &open, &cfg);
        assert!(matches!(r, Err(MechanicsError::Domain(_))));
        let outside = ChartDomain { center: 2.0, ..open };
        assert!(matches!(action_map(&duffing(), &outside, &cfg), Err(MechanicsError::Domain(_))));
    }

    #[test]
    fn orbit_returns_to_start_and_conserves_energy() {
        let c = line(duffing(), (0.1, 2.0), 0.0);
        let l = c.action(0.8, 0.0).unwrap();
        let pts = c.orbit(l, 64, 32).unwrap();
        for &(x, y) in &pts {
            let e = 0.5 * y * y + c.effective(x, 0.0) - 0.8;
            assert!(e.abs() < 1e-9, "{e}");
        }
        // half a period later the orbit sits at the left turning point
        let (lo, _) = c.turning_points(0.8, 0.0).unwrap();
        assert!((pts[32].0 - lo).abs() < 1e-8 && pts[32].1.abs() < 1e-6);
    }

    fn planar(potential: Potential, energy: (f64, f64), g: (f64, f64), center: f64) -> ActionAngleChart {
        let domain = ChartDomain {
            energy,
            angular_momentum: Some(g),
            center,
        };
        action_map(&potential, &domain, &QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn isotropic_harmonic_is_flagged_degenerate() {
        let w = 1.3;
        let c = planar(Potential::Harmonic { omega: w }, (1.0, 2.0), (0.3, 0.6), 0.8);
        let cfg = FrequencyChartConfig {
            grid: 3,
            ..FrequencyChartConfig::default()
        };
        let fc = frequency_chart(&c, &cfg).unwrap();
        assert_eq!(fc.flagged, fc.points.len());
        for p in &fc.points {
            // h = w (2L + G)
            assert!((p.frequency[0] - 2.0 * w).abs() < 1e-10);
            assert!((p.frequency[1] - w).abs() < 1e-10);
        }
    }

    #[test]
    fn planar_duffing_gradient_matches_differences() {
        let c = planar(duffing(), (1.0, 2.0), (0.5, 1.0), 1.0);
        let fc = frequency_chart(&c, &FrequencyChartConfig { grid: 3, ..Default::default() }).unwrap();
        assert!(fc.max_gradient_error < 1e-7, "{}", fc.max_gradient_error);
        assert_eq!(fc.flagged, 0);
        assert!(fc.max_richardson_gap < 1e-6, "{}", fc.max_richardson_gap);
    }

    #[test]
    fn line_charts_have_no_frequency_chart() {
        let c = line(duffing(), (0.1, 2.0), 0.0);
        assert!(matches!(frequency_chart(&c, &Default::default()), Err(MechanicsError::Unsupported(_))));
    }
}
