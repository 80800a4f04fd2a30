use num_complex::Complex64;

use super::step::lie_sum;
use crate::error::KamError;
use crate::series::{poisson_bracket, Caps, MassVector, NormParams, TFSeries};

/// Coordinates of `Phi = phi_{G_1} o ... o phi_{G_n}` as series:
/// `phi_j o Phi = phi_j + u_j`, `J_j o Phi = w_j`.
#[derive(Clone, Debug)]
pub struct TorusEmbedding {
    pub u: Vec<TFSeries>,
    pub w: Vec<TFSeries>,
}

impl TorusEmbedding {
    pub fn identity(sites: u32) -> Self {
        Self {
            u: (0..sites).map(|_| TFSeries::zero(sites)).collect(),
            w: (1..=sites).map(|j| TFSeries::action(sites, j, 1.0)).collect(),
        }
    }

    pub fn sites(&self) -> usize {
        self.u.len()
    }

    /// `Phi(phi, J)`, real parts.
    pub fn map(&self, phi: &[f64], j: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ang = self.u.iter().zip(phi).map(|(u, p)| p + u.evaluate(phi, j).re).collect();
        let act = self.w.iter().map(|w| w.evaluate(phi, j).re).collect();
        (ang, act)
    }

    /// Torus parameterisation `phi -> Phi(phi, 0)`.
    pub fn at(&self, phi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        self.map(phi, &vec![0.0; phi.len()])
    }

    /// Fourier coefficients of `u_j(., 0)`.
    pub fn angle_fourier(&self, j: usize) -> TFSeries {
        self.u[j].truncate(|k| k.alpha_norm1() == 0).0
    }

    /// Fourier coefficients of `w_j(., 0)`.
    pub fn action_fourier(&self, j: usize) -> TFSeries {
        self.w[j].truncate(|k| k.alpha_norm1() == 0).0
    }

    /// Largest coefficient of `{Phi* phi_i, Phi* J_j} - delta_ij / m_j`.
    pub fn symplectic_defect(&self, m: &MassVector) -> f64 {
        let n = self.sites();
        let mut worst = 0.0f64;
        for i in 0..n {
            let si = i as u32 + 1;
            for j in 0..n {
                let dw = &self.w[j] - &TFSeries::action(self.w[j].n_max(), j as u32 + 1, 1.0);
                // {phi_i, f} = m_i^{-1} d_{J_i} f
                let mut b = dw.d_j(si).scale_real(1.0 / m.weight(si));
                b += &poisson_bracket(&self.u[i], &self.w[j], m);
                worst = worst.max(b.max_abs() * m.weight(j as u32 + 1));
            }
        }
        worst
    }
}

/// Composes the time-one flows of `generators` in order, each Lie series
/// summed until its terms fall below `tol` in the `p`-norm.
pub fn assemble_torus_embedding(
    generators: &[TFSeries],
    sites: u32,
    m: &MassVector,
    caps: &Caps,
    p: &NormParams,
    tol: f64,
) -> Result<TorusEmbedding, KamError> {
    let mut emb = TorusEmbedding::identity(sites);
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    for g in generators {
        if g.is_empty() {
            continue;
        }
        for j in 0..sites as usize {
            let site = j as u32 + 1;
            // {phi_j, G} = m_j^{-1} d_{J_j} G starts the angle series.
            let s = g.d_j(site).scale(Complex64::new(1.0 / m.weight(site), 0.0));
            let (shift, _) = lie_sum(&s, g, m, caps, p, tol, 0, |k| 1.0 / fact(k + 1))?;
            let (carried, _) = lie_sum(&emb.u[j], g, m, caps, p, tol, 0, |k| 1.0 / fact(k))?;
            emb.u[j] = &shift + &carried;
            let (w, _) = lie_sum(&emb.w[j], g, m, caps, p, tol, 0, |k| 1.0 / fact(k))?;
            emb.w[j] = w;
        }
    }
    Ok(emb)
}
