use crate::error::KamError;

/// Inverse of `id + v~` near the identity, found pointwise by the fixed
/// point `v = -v~(xi + v)`.
pub struct FrequencyInverse<F> {
    vtilde: F,
    sup: f64,
    radius: f64,
    tol: f64,
    max_iter: usize,
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

impl<F: Fn(&[f64]) -> Vec<f64>> FrequencyInverse<F> {
    /// Checks `sup |v~| <= h / 4` on `samples`, the sampled frequency domain.
    pub fn new(vtilde: F, samples: &[Vec<f64>], radius: f64) -> Result<Self, KamError> {
        let sup = samples.iter().map(|x| sup_norm(&vtilde(x))).fold(0.0, f64::max);
        if sup > radius / 4.0 {
            return Err(KamError::ContractionFailure {
                sup,
                limit: radius / 4.0,
            });
        }
        Ok(Self {
            vtilde,
            sup,
            radius,
            tol: 1e-12,
            max_iter: 500,
        })
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    /// `v(xi)` with `(id + v~)(xi + v(xi)) = xi`.
    pub fn correction(&self, xi: &[f64]) -> Result<Vec<f64>, KamError> {
        let mut v = vec![0.0; xi.len()];
        let mut shifted = xi.to_vec();
        for _ in 0..self.max_iter {
            for (s, (x, vi)) in shifted.iter_mut().zip(xi.iter().zip(&v)) {
                *s = x + vi;
            }
            let next: Vec<f64> = (self.vtilde)(&shifted).into_iter().map(|t| -t).collect();
            let diff = next.iter().zip(&v).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
            v = next;
            if sup_norm(&v) > self.radius / 4.0 {
                return Err(KamError::ContractionFailure {
                    sup: sup_norm(&v),
                    limit: self.radius / 4.0,
                });
            }
            if diff <= self.tol {
                return Ok(v);
            }
        }
        Err(KamError::ContractionFailure {
            sup: sup_norm(&v),
            limit: self.radius / 4.0,
        })
    }

    /// `phi(xi) = xi + v(xi)`
    pub fn apply(&self, xi: &[f64]) -> Result<Vec<f64>, KamError> {
        let v = self.correction(xi)?;
        Ok(xi.iter().zip(&v).map(|(a, b)| a + b).collect())
    }
}

/// Convenience wrapper returning `v` at each point of `points`.
pub fn invert_frequency_map<F: Fn(&[f64]) -> Vec<f64>>(
    vtilde: F,
    points: &[Vec<f64>],
    radius: f64,
) -> Result<Vec<Vec<f64>>, KamError> {
    let inv = FrequencyInverse::new(vtilde, points, radius)?;
    points.iter().map(|x| inv.correction(x)).collect()
}
