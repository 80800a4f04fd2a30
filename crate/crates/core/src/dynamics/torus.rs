use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{integrate_observed, wrap_angle, FlowSpec, SeriesField, VectorField};
use crate::error::DynamicsError;
use crate::kam::TorusEmbedding;
use crate::series::{MassVector, TFSeries};

/// Deviation of orbits started on `Phi(., 0)` from `Phi(phi_0 + omega t, 0)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub times: Vec<f64>,
    /// Sup over samples and coordinates, angles taken mod `2 pi`.
    pub deviation: Vec<f64>,
    pub angle_deviation: Vec<f64>,
    pub action_deviation: Vec<f64>,
    pub sup_deviation: f64,
    pub energy_drift: f64,
}

/// Integrates `field` from `Phi(phi_0, 0)` for each sample and compares
/// against the pushed-forward translation at every recorded step.
pub fn verify_torus<F: VectorField>(
    field: &F,
    emb: &TorusEmbedding,
    omega: &[f64],
    spec: &FlowSpec,
    samples: &[Vec<f64>],
) -> Result<DriftReport, DynamicsError> {
    let n = emb.sites();
    if omega.len() != n || field.dim() != 2 * n || samples.iter().any(|s| s.len() != n) {
        return Err(DynamicsError::Invalid("dimension mismatch between field, embedding and samples".into()));
    }
    let every = spec.record_every.max(1);
    let steps = spec.steps();
    let per_sample: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> = samples
        .par_iter()
        .map(|phi0| {
            let (a0, j0) = emb.at(phi0);
            let mut x0 = a0.clone();
            x0.extend_from_slice(&j0);
            let e0 = field.energy(&x0);
            let mut times = Vec::new();
            let mut ang = Vec::new();
            let mut act = Vec::new();
            let mut drift = 0.0f64;
            integrate_observed(field, spec, &x0, |k, t, x| {
                if k % every != 0 && k != steps {
                    return;
                }
                let shifted: Vec<f64> = phi0.iter().zip(omega).map(|(p, w)| p + w * t).collect();
                let (a, j) = emb.at(&shifted);
                let da = (0..n).fold(0.0f64, |m, i| m.max(wrap_angle(x[i] - a[i]).abs()));
                let dj = (0..n).fold(0.0f64, |m, i| m.max((x[n + i] - j[i]).abs()));
                times.push(t);
                ang.push(da);
                act.push(dj);
                if let (Some(e0), Some(e)) = (e0, field.energy(x)) {
                    drift = drift.max((e - e0).abs());
                }
            })?;
            Ok((times, ang, act, drift))
        })
        .collect::<Result<_, DynamicsError>>()?;

    let mut report = DriftReport::default();
    if let Some(first) = per_sample.first() {
        report.times = first.0.clone();
        let len = report.times.len();
        report.angle_deviation = vec![0.0; len];
        report.action_deviation = vec![0.0; len];
        for (_, ang, act, drift) in &per_sample {
            for k in 0..len {
                report.angle_deviation[k] = report.angle_deviation[k].max(ang[k]);
                report.action_deviation[k] = report.action_deviation[k].max(act[k]);
            }
            report.energy_drift = report.energy_drift.max(*drift);
        }
        report.deviation = report
            .angle_deviation
            .iter()
            .zip(&report.action_deviation)
            .map(|(a, b)| a.max(*b))
            .collect();
        report.sup_deviation = report.deviation.iter().copied().fold(0.0, f64::max);
    }
    Ok(report)
}

/// [`verify_torus`] for a series Hamiltonian.
pub fn verify_torus_series(
    h: &TFSeries,
    m: &MassVector,
    emb: &TorusEmbedding,
    omega: &[f64],
    spec: &FlowSpec,
    samples: &[Vec<f64>],
) -> Result<DriftReport, DynamicsError> {
    verify_torus(&SeriesField::new(h, m)?, emb, omega, spec, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unperturbed_torus_has_no_drift() {
        let m = MassVector::exponential(1.0, 3).unwrap();
        let xi = [1.0, 1.3, 0.7];
        let h = TFSeries::frequency_part(&xi, &m);
        let emb = TorusEmbedding::identity(3);
        let spec = FlowSpec::new(0.05, 20.0).unwrap().recording(10);
        let samples = vec![vec![0.0, 1.0, 2.0], vec![3.0, -1.0, 0.5]];
        let r = verify_torus_series(&h, &m, &emb, &xi, &spec, &samples).unwrap();
        assert_eq!(r.deviation[0], 0.0);
        assert!(r.sup_deviation < 1e-12);
        assert_eq!(r.times.len(), 41);
    }
}
