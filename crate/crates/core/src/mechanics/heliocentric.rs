use serde::{Deserialize, Serialize};

/// Heliocentric coordinates of `N + 1` bodies: `X_0 = x_0`, `X_i = x_i - x_0`,
/// `Y_0 = sum_i y_i`, `Y_i = y_i` for `i >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeliocentricState {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

/// Forward transform of positions `x` and momenta `y`, body 0 first.
pub fn heliocentric(x: &[Vec<f64>], y: &[Vec<f64>]) -> HeliocentricState {
    let x0 = &x[0];
    let mut big_x = vec![x0.clone()];
    big_x.extend(x[1..].iter().map(|xi| xi.iter().zip(x0).map(|(a, b)| a - b).collect()));
    let mut total = vec![0.0; y[0].len()];
    for yi in y {
        for (t, c) in total.iter_mut().zip(yi) {
            *t += c;
        }
    }
    let mut big_y = vec![total];
    big_y.extend(y[1..].iter().cloned());
    HeliocentricState { x: big_x, y: big_y }
}

impl HeliocentricState {
    /// `(x, y)` with `x_i = X_i + X_0` and `y_0 = Y_0 - sum_{i >= 1} Y_i`.
    pub fn inverse(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let x0 = &self.x[0];
        let mut x = vec![x0.clone()];
        x.extend(self.x[1..].iter().map(|xi| xi.iter().zip(x0).map(|(a, b)| a + b).collect()));
        let mut y0 = self.y[0].clone();
        for yi in &self.y[1..] {
            for (t, c) in y0.iter_mut().zip(yi) {
                *t -= c;
            }
        }
        let mut y = vec![y0];
        y.extend(self.y[1..].iter().cloned());
        (x, y)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// `sum_i |y_i|^2 / 2 mu_i - sum_{i<j} mu_i mu_j V(|x_i - x_j|)`.
pub fn nbody_energy<V: Fn(f64) -> f64>(mu: &[f64], v: V, x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let mut e: f64 = y.iter().zip(mu).map(|(yi, m)| norm2(yi) / (2.0 * m)).sum();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            e -= mu[i] * mu[j] * v(dist(&x[i], &x[j]));
        }
    }
    e
}

/// The same energy written in heliocentric variables:
/// `|Y_0 - sum Y_i|^2 / 2 mu_0 + sum |Y_i|^2 / 2 mu_i - sum mu_0 mu_i V(|X_i|)
///  - sum_{1 <= i < j} mu_i mu_j V(|X_i - X_j|)`.
pub fn heliocentric_energy<V: Fn(f64) -> f64>(mu: &[f64], v: V, s: &HeliocentricState) -> f64 {
    let n = s.x.len();
    let mut y0 = s.y[0].clone();
    for yi in &s.y[1..] {
        for (t, c) in y0.iter_mut().zip(yi) {
            *t -= c;
        }
    }
    let mut e = norm2(&y0) / (2.0 * mu[0]);
    for i in 1..n {
        e += norm2(&s.y[i]) / (2.0 * mu[i]) - mu[0] * mu[i] * v(norm2(&s.x[i]).sqrt());
        for j in i + 1..n {
            e -= mu[i] * mu[j] * v(dist(&s.x[i], &s.x[j]));
        }
    }
    e
}
