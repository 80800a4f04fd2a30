//! Mechanical Hamiltonians and their reduction to the normal form
//! `xi.J + P`: heliocentric and polar coordinates, action-angle charts,
//! frequency maps and the nondegeneracy checks.

mod chart;
mod conditions;
mod heliocentric;
mod normal_form;
mod polar;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::MechanicsError;
use crate::series::MassVector;

pub use chart::{
    action_map, elliptic_point, frequency_chart, ActionAngleChart, ActionDerivatives, ChartDomain, ChartPoint,
    Chebyshev, EllipticPoint, FrequencyChart, FrequencyChartConfig, QuadratureConfig, TwistCheck,
};
pub use conditions::{check_p1, check_p1_p2, check_p2, ConditionConfig, ConditionReport, P1Report, P2Report};
pub use heliocentric::{heliocentric, heliocentric_energy, nbody_energy, HeliocentricState};
pub use normal_form::{to_normal_form, NormalForm, NormalFormConfig};
pub use polar::{polar_reduce, CentralField, PolarState};

/// Radial potential `V(r) = sum_k c_k r^k`; the mechanical Hamiltonian is
/// `|y|^2 / 2 - V(|x|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Potential {
    /// `alpha r^2 + beta r^4`
    Duffing { alpha: f64, beta: f64 },
    /// `-omega^2 r^2 / 2`, so that `h = y^2/2 + omega^2 r^2/2`.
    Harmonic { omega: f64 },
    Polynomial { coeffs: Vec<f64> },
}

impl Potential {
    pub fn coefficients(&self) -> Vec<f64> {
        match self {
            Potential::Duffing { alpha, beta } => vec![0.0, 0.0, *alpha, 0.0, *beta],
            Potential::Harmonic { omega } => vec![0.0, 0.0, -0.5 * omega * omega],
            Potential::Polynomial { coeffs } => coeffs.clone(),
        }
    }

    /// `d^order V / dr^order` at `r`.
    pub fn derivative(&self, r: f64, order: usize) -> f64 {
        let c = self.coefficients();
        let mut acc = 0.0;
        for k in (order..c.len()).rev() {
            let falling: f64 = (0..order).map(|i| (k - i) as f64).product();
            acc = acc * r + c[k] * falling;
        }
        acc
    }

    pub fn value(&self, r: f64) -> f64 {
        self.derivative(r, 0)
    }
}

/// Pairwise coupling `V_ij(x_i, x_j, y_i/m_i, y_j/m_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Coupling {
    None,
    /// `s cos(x_i - x_j)` on the first coordinates.
    CosDifference { strength: f64 },
    /// `<v_i, v_j> - V(|x_i - x_j|)` with the site potential.
    Heliocentric,
}

impl Coupling {
    pub fn value(&self, potential: &Potential, xi: &[f64], xj: &[f64], vi: &[f64], vj: &[f64]) -> f64 {
        match self {
            Coupling::None => 0.0,
            Coupling::CosDifference { strength } => strength * (xi[0] - xj[0]).cos(),
            Coupling::Heliocentric => {
                let dot: f64 = vi.iter().zip(vj).map(|(a, b)| a * b).sum();
                dot - potential.value(distance(xi, xj))
            }
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `sum_i (|y_i|^2 / 2m_i - m_i V(|x_i|)) + eps sum_{i<j} m_i m_j V_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianModel {
    /// Spatial dimension per site, 1 or 2.
    pub dim: usize,
    pub potential: Potential,
    pub masses: MassVector,
    pub coupling: Coupling,
    pub eps: f64,
}

impl HamiltonianModel {
    pub fn new(
        dim: usize,
        potential: Potential,
        masses: MassVector,
        coupling: Coupling,
        eps: f64,
    ) -> Result<Self, MechanicsError> {
        if dim != 1 && dim != 2 {
            return Err(MechanicsError::Unsupported(format!("spatial dimension {dim}")));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(MechanicsError::Domain(format!("eps = {eps}")));
        }
        Ok(Self {
            dim,
            potential,
            masses,
            coupling,
            eps,
        })
    }

    pub fn sites(&self) -> usize {
        self.masses.n_max() as usize
    }

    /// Energy at per-site positions and momenta.
    pub fn energy(&self, x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
        let m = |i: usize| self.masses.weight(i as u32 + 1);
        let v: Vec<Vec<f64>> = y.iter().enumerate().map(|(i, yi)| yi.iter().map(|c| c / m(i)).collect()).collect();
        let mut e = 0.0;
        for i in 0..x.len() {
            let r = x[i].iter().map(|c| c * c).sum::<f64>().sqrt();
            e += y[i].iter().map(|c| c * c).sum::<f64>() / (2.0 * m(i)) - m(i) * self.potential.value(r);
        }
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                e += self.eps * m(i) * m(j) * self.coupling.value(&self.potential, &x[i], &x[j], &v[i], &v[j]);
            }
        }
        e
    }

    /// Sampled `sup |V_ij|` over `x_i, x_j` in `[-k, k]^dim + i[-radius, radius]^dim`.
    /// Only the cosine coupling is bounded; the others report infinity.
    pub fn coupling_bound(&self, k: f64, radius: f64, samples: usize) -> f64 {
        match self.coupling {
            Coupling::None => 0.0,
            Coupling::Heliocentric => f64::INFINITY,
            Coupling::CosDifference { strength } => {
                let n = samples.max(2);
                let mut sup = 0.0f64;
                for a in 0..n {
                    for b in 0..n {
                        let re = -2.0 * k + 4.0 * k * a as f64 / (n - 1) as f64;
                        let im = -2.0 * radius + 4.0 * radius * b as f64 / (n - 1) as f64;
                        sup = sup.max((strength * Complex64::new(re, im).cos()).norm());
                    }
                }
                sup
            }
        }
    }

    /// `sup |V_ij| <= 1` on the sampled neighbourhood.
    pub fn coupling_is_bounded(&self, k: f64, radius: f64, samples: usize) -> bool {
        self.coupling_bound(k, radius, samples) <= 1.0
    }
}
