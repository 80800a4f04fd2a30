//! Ready-made series Hamiltonians.

use num_complex::Complex64;

use crate::series::{MassVector, MonomialKey, TFSeries};

/// `xi.J + 1/2 sum_i m_i J_i^2 + eps sum_{i >= 2} m_1 m_i cos(phi_1 - phi_i)`
/// on the sites of `m`.
///
/// Every site is resonantly coupled to the first one with strength that does
/// not decay after mass scaling: the equations of motion read
/// `phi_i' = xi_i + J_i`, `J_i' = eps m_1 sin(phi_i - phi_1)` for `i >= 2`.
pub fn long_range_pairwise(xi: &[f64], m: &MassVector, eps: f64) -> TFSeries {
    let mut h = TFSeries::frequency_part(xi, m);
    h += &pairwise_perturbation(m, eps);
    h += &quadratic_part(m);
    h
}

/// `1/2 sum_i m_i J_i^2`
pub fn quadratic_part(m: &MassVector) -> TFSeries {
    let mut h = TFSeries::zero(m.n_max());
    for i in 1..=m.n_max() {
        h.add_term(MonomialKey::single(i, 0, 2), Complex64::new(0.5 * m.weight(i), 0.0));
    }
    h
}

/// `eps sum_{i >= 2} m_1 m_i cos(phi_1 - phi_i)`
pub fn pairwise_perturbation(m: &MassVector, eps: f64) -> TFSeries {
    let mut h = TFSeries::zero(m.n_max());
    for i in 2..=m.n_max() {
        let c = Complex64::new(0.5 * eps * m.weight(1) * m.weight(i), 0.0);
        for s in [1, -1] {
            let key = MonomialKey::from_parts(&[1, i], &[s, -s], &[0, 0]).expect("valid pair key");
            h.add_term(key, c);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_to_closed_form() {
        let m = MassVector::exponential(1.0, 3).unwrap();
        let xi = [1.0, 1.5, 2.0];
        let h = long_range_pairwise(&xi, &m, 0.1);
        assert!(h.is_real(0.0));
        let phi: [f64; 3] = [0.3, -0.2, 1.1];
        let j = [0.05, -0.1, 0.2];
        let mut want = 0.0;
        for i in 0..3 {
            let mi = m.weight(i as u32 + 1);
            want += mi * xi[i] * j[i] + 0.5 * mi * j[i] * j[i];
            if i > 0 {
                want += 0.1 * m.weight(1) * mi * (phi[0] - phi[i]).cos();
            }
        }
        let got = h.evaluate(&phi, &j);
        assert!((got.re - want).abs() < 1e-14 && got.im.abs() < 1e-14);
    }
}
