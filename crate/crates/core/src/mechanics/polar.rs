use serde::{Deserialize, Serialize};

use super::Potential;
use crate::dynamics::VectorField;
use crate::error::MechanicsError;

/// Polar variables `x = r (cos a, sin a)` with conjugate momenta
/// `R = x.y / r` and `G = x_1 y_2 - x_2 y_1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarState {
    pub r: f64,
    pub radial: f64,
    pub alpha: f64,
    pub g: f64,
}

impl PolarState {
    pub fn to_cartesian(&self) -> ([f64; 2], [f64; 2]) {
        let (s, c) = self.alpha.sin_cos();
        let vt = self.g / self.r;
        (
            [self.r * c, self.r * s],
            [self.radial * c - vt * s, self.radial * s + vt * c],
        )
    }

    /// `R^2/2 + G^2/(2 r^2) - V(r)`
    pub fn energy(&self, v: &Potential) -> f64 {
        0.5 * self.radial * self.radial + 0.5 * self.g * self.g / (self.r * self.r) - v.value(self.r)
    }
}

/// Polar reduction of a planar state, with the reduced energy.
pub fn polar_reduce(v: &Potential, x: [f64; 2], y: [f64; 2]) -> Result<(PolarState, f64), MechanicsError> {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return Err(MechanicsError::Singular("polar coordinates at r = 0".into()));
    }
    let s = PolarState {
        r,
        radial: (x[0] * y[0] + x[1] * y[1]) / r,
        alpha: x[1].atan2(x[0]),
        g: x[0] * y[1] - x[1] * y[0],
    };
    Ok((s, s.energy(v)))
}

/// `q' = p`, `p' = V'(|q|) q / |q|` on `(q_1, q_2, p_1, p_2)`.
#[derive(Clone, Debug)]
pub struct CentralField {
    pub potential: Potential,
}

impl CentralField {
    pub fn angular_momentum(x: &[f64]) -> f64 {
        x[0] * x[3] - x[1] * x[2]
    }
}

impl VectorField for CentralField {
    fn dim(&self) -> usize {
        4
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let r = x[0].hypot(x[1]);
        let f = if r > 0.0 { self.potential.derivative(r, 1) / r } else { 0.0 };
        out[0] = x[2];
        out[1] = x[3];
        out[2] = f * x[0];
        out[3] = f * x[1];
    }

    fn energy(&self, x: &[f64]) -> Option<f64> {
        Some(0.5 * (x[2] * x[2] + x[3] * x[3]) - self.potential.value(x[0].hypot(x[1])))
    }
}
