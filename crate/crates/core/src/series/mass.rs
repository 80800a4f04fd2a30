use serde::{Deserialize, Serialize};

use crate::error::SeriesError;

/// How a mass vector was generated, kept for reproducible output headers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum MassSpec {
    /// `m_i = exp(-kappa i)`
    Exp { kappa: f64, n_max: u32 },
    /// `m_1 = 1`, `m_i = delta exp(-kappa i)` for `i >= 2`.
    DeltaTail { delta: f64, kappa: f64, n_max: u32 },
    Explicit { weights: Vec<f64> },
}

/// Positive non-increasing weights `m_1 >= m_2 >= ... > 0`.
///
/// Weights are held as logarithms so that long exponential tails do not
/// underflow when forming products `m_A`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MassSpec", into = "MassSpec")]
pub struct MassVector {
    spec: MassSpec,
    kappa: f64,
    log_weights: Vec<f64>,
}

impl TryFrom<MassSpec> for MassVector {
    type Error = SeriesError;

    fn try_from(spec: MassSpec) -> Result<Self, SeriesError> {
        Self::from_spec(spec)
    }
}

impl From<MassVector> for MassSpec {
    fn from(m: MassVector) -> Self {
        m.spec
    }
}

impl MassVector {
    pub fn exponential(kappa: f64, n_max: u32) -> Result<Self, SeriesError> {
        Self::from_spec(MassSpec::Exp { kappa, n_max })
    }

    pub fn delta_tail(delta: f64, kappa: f64, n_max: u32) -> Result<Self, SeriesError> {
        Self::from_spec(MassSpec::DeltaTail { delta, kappa, n_max })
    }

    pub fn explicit(weights: Vec<f64>) -> Result<Self, SeriesError> {
        Self::from_spec(MassSpec::Explicit { weights })
    }

    pub fn from_spec(spec: MassSpec) -> Result<Self, SeriesError> {
        let (kappa, log_weights) = match &spec {
            MassSpec::Exp { kappa, n_max } => {
                check_kappa(*kappa)?;
                (*kappa, (1..=*n_max).map(|i| -kappa * i as f64).collect())
            }
            MassSpec::DeltaTail { delta, kappa, n_max } => {
                check_kappa(*kappa)?;
                if !(*delta > 0.0 && *delta <= 1.0) {
                    return Err(SeriesError::InvalidMass(format!("delta = {delta} must lie in (0, 1]")));
                }
                let lw = (1..=*n_max)
                    .map(|i| if i == 1 { 0.0 } else { delta.ln() - kappa * i as f64 })
                    .collect();
                (*kappa, lw)
            }
            MassSpec::Explicit { weights } => {
                if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
                    return Err(SeriesError::InvalidMass("weights must be finite and positive".into()));
                }
                let lw: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
                // Largest kappa for which the decay certificate stays finite on the stored range.
                let kappa = lw
                    .iter()
                    .enumerate()
                    .map(|(i, l)| -(l - lw[0]) / i.max(1) as f64)
                    .skip(1)
                    .fold(f64::INFINITY, f64::min);
                let kappa = if kappa.is_finite() { kappa.max(0.0) } else { 0.0 };
                (kappa, lw)
            }
        };
        if log_weights.is_empty() {
            return Err(SeriesError::InvalidMass("N_max must be at least 1".into()));
        }
        if log_weights.windows(2).any(|w| w[1] > w[0]) {
            return Err(SeriesError::InvalidMass("weights must be non-increasing".into()));
        }
        Ok(Self { spec, kappa, log_weights })
    }

    pub fn spec(&self) -> &MassSpec {
        &self.spec
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn n_max(&self) -> u32 {
        self.log_weights.len() as u32
    }

    /// `ln m_i`, 1-based.
    pub fn log_weight(&self, i: u32) -> f64 {
        self.log_weights[(i - 1) as usize]
    }

    /// `m_i`, 1-based. Underflows to zero far down an exponential tail.
    pub fn weight(&self, i: u32) -> f64 {
        self.log_weight(i).exp()
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `ln m_A`; zero for the empty set.
    pub fn log_mass_of<I: IntoIterator<Item = u32>>(&self, a: I) -> f64 {
        a.into_iter().map(|i| self.log_weight(i)).sum()
    }

    pub fn mass_of<I: IntoIterator<Item = u32>>(&self, a: I) -> f64 {
        self.log_mass_of(a).exp()
    }

    /// `max_i m_i exp(kappa i)` over the stored range.
    pub fn decay_certificate(&self) -> f64 {
        self.log_weights
            .iter()
            .enumerate()
            .map(|(i, l)| l + self.kappa * (i + 1) as f64)
            .fold(f64::NEG_INFINITY, f64::max)
            .exp()
    }

    /// Copy restricted to the first `n` sites.
    pub fn truncated(&self, n: u32) -> Result<Self, SeriesError> {
        let n = n.min(self.n_max());
        let spec = match &self.spec {
            MassSpec::Exp { kappa, .. } => MassSpec::Exp { kappa: *kappa, n_max: n },
            MassSpec::DeltaTail { delta, kappa, .. } => MassSpec::DeltaTail {
                delta: *delta,
                kappa: *kappa,
                n_max: n,
            },
            MassSpec::Explicit { weights } => MassSpec::Explicit {
                weights: weights[..n as usize].to_vec(),
            },
        };
        Self::from_spec(spec)
    }
}

fn check_kappa(kappa: f64) -> Result<(), SeriesError> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(SeriesError::InvalidMass(format!("kappa = {kappa} must be positive")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_masses() {
        let m = MassVector::exponential(1.0, 5).unwrap();
        assert!((m.weight(1) - (-1.0f64).exp()).abs() < 1e-15);
        assert!((m.mass_of([1, 3]) - (-4.0f64).exp()).abs() < 1e-15);
        assert_eq!(m.mass_of([]), 1.0);
        assert!((m.decay_certificate() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delta_tail_does_not_underflow() {
        let m = MassVector::delta_tail(1e-6, 1.0, 2000).unwrap();
        assert_eq!(m.weight(1), 1.0);
        assert!(m.log_weight(2000).is_finite());
        assert_eq!(m.weight(2000), 0.0);
    }

    #[test]
    fn rejects_increasing_weights() {
        assert!(MassVector::explicit(vec![0.5, 0.6]).is_err());
        assert!(MassVector::explicit(vec![0.5, 0.0]).is_err());
        assert!(MassVector::exponential(-1.0, 3).is_err());
    }

    #[test]
    fn explicit_kappa_bounds_certificate() {
        let m = MassVector::explicit(vec![0.5, 0.25, 0.125]).unwrap();
        assert!((m.kappa() - 2f64.ln()).abs() < 1e-12);
        assert!(m.decay_certificate().is_finite());
    }
}
