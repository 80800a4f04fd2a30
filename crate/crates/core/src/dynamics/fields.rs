use super::VectorField;
use crate::error::DynamicsError;
use crate::series::{MassVector, TFSeries};

/// Hamilton's equations of a series under `sum_n m_n dJ_n ^ dphi_n`:
/// `phi_n' = m_n^{-1} d_{J_n} H`, `J_n' = -m_n^{-1} d_{phi_n} H`.
#[derive(Clone, Debug)]
pub struct SeriesField {
    h: TFSeries,
    dphi: Vec<TFSeries>,
    dj: Vec<TFSeries>,
}

impl SeriesField {
    pub fn new(h: &TFSeries, m: &MassVector) -> Result<Self, DynamicsError> {
        let n = h.n_max();
        if n > m.n_max() {
            return Err(DynamicsError::Invalid(format!("series has {n} sites, masses {}", m.n_max())));
        }
        let dphi = (1..=n).map(|i| h.d_j(i).scale_real(1.0 / m.weight(i))).collect();
        let dj = (1..=n).map(|i| h.d_phi(i).scale_real(-1.0 / m.weight(i))).collect();
        Ok(Self { h: h.clone(), dphi, dj })
    }

    pub fn sites(&self) -> usize {
        self.dphi.len()
    }
}

impl VectorField for SeriesField {
    fn dim(&self) -> usize {
        2 * self.sites()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.sites();
        let (phi, j) = x.split_at(n);
        for i in 0..n {
            out[i] = self.dphi[i].evaluate(phi, j).re;
            out[n + i] = self.dj[i].evaluate(phi, j).re;
        }
    }

    fn energy(&self, x: &[f64]) -> Option<f64> {
        let (phi, j) = x.split_at(self.sites());
        Some(self.h.evaluate(phi, j).re)
    }
}

/// A Hamiltonian given as a function, differentiated by central differences.
pub struct CallableField<F> {
    h: F,
    masses: Vec<f64>,
    fd_step: f64,
}

impl<F: Fn(&[f64], &[f64]) -> f64 + Sync> CallableField<F> {
    pub fn new(h: F, masses: Vec<f64>, fd_step: f64) -> Result<Self, DynamicsError> {
        if !(fd_step > 0.0) || masses.iter().any(|m| !(*m > 0.0)) {
            return Err(DynamicsError::Invalid("finite-difference step and masses must be positive".into()));
        }
        Ok(Self { h, masses, fd_step })
    }
}

impl<F: Fn(&[f64], &[f64]) -> f64 + Sync> VectorField for CallableField<F> {
    fn dim(&self) -> usize {
        2 * self.masses.len()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.masses.len();
        let mut y = x.to_vec();
        let s = self.fd_step;
        for k in 0..2 * n {
            let x0 = y[k];
            y[k] = x0 + s;
            let (p, j) = y.split_at(n);
            let hp = (self.h)(p, j);
            y[k] = x0 - s;
            let (p, j) = y.split_at(n);
            let hm = (self.h)(p, j);
            y[k] = x0;
            let d = (hp - hm) / (2.0 * s);
            if k < n {
                out[n + k] = -d / self.masses[k];
            } else {
                out[k - n] = d / self.masses[k - n];
            }
        }
    }

    fn energy(&self, x: &[f64]) -> Option<f64> {
        let (p, j) = x.split_at(self.masses.len());
        Some((self.h)(p, j))
    }
}

/// `xi.J + 1/2 J.J + eps sum_{i >= 2} m_1 m_i cos(phi_1 - phi_i)`, with
/// `a.b = sum m_i a_i b_i`, in closed form.
#[derive(Clone, Debug)]
pub struct StripModel {
    pub xi: Vec<f64>,
    pub m: Vec<f64>,
    pub eps: f64,
}

impl StripModel {
    pub fn new(xi: Vec<f64>, m: &MassVector, eps: f64) -> Result<Self, DynamicsError> {
        if xi.len() < 2 || xi.len() > m.n_max() as usize {
            return Err(DynamicsError::Invalid(format!("{} frequencies for {} masses", xi.len(), m.n_max())));
        }
        let m = (1..=xi.len() as u32).map(|i| m.weight(i)).collect();
        Ok(Self { xi, m, eps })
    }

    pub fn sites(&self) -> usize {
        self.xi.len()
    }

    /// `sum m_i J_i`, conserved because only angle differences appear.
    pub fn total_action(&self, x: &[f64]) -> f64 {
        let n = self.sites();
        self.m.iter().zip(&x[n..]).map(|(m, j)| m * j).sum()
    }
}

impl VectorField for StripModel {
    fn dim(&self) -> usize {
        2 * self.sites()
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let n = self.sites();
        let mut j1 = 0.0;
        for i in 0..n {
            out[i] = self.xi[i] + x[n + i];
        }
        for i in 1..n {
            let s = (x[0] - x[i]).sin();
            j1 += self.m[i] * s;
            out[n + i] = -self.eps * self.m[0] * s;
        }
        out[n] = self.eps * j1;
    }

    fn jvp(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        let n = self.sites();
        for i in 0..n {
            out[i] = v[n + i];
        }
        let mut acc = 0.0;
        for i in 1..n {
            let c = (x[0] - x[i]).cos();
            let dv = v[0] - v[i];
            acc += self.m[i] * c * dv;
            out[n + i] = -self.eps * self.m[0] * c * dv;
        }
        out[n] = self.eps * acc;
    }

    fn energy(&self, x: &[f64]) -> Option<f64> {
        let n = self.sites();
        let mut e = 0.0;
        for i in 0..n {
            let j = x[n + i];
            e += self.m[i] * (self.xi[i] * j + 0.5 * j * j);
        }
        for i in 1..n {
            e += self.eps * self.m[0] * self.m[i] * (x[0] - x[i]).cos();
        }
        Some(e)
    }
}
