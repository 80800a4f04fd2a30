use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FrequencyVector;
use crate::error::DiophantineError;

/// `prod_n [xi~_n - w_n, xi~_n + w_n]` with `w_n = ell n^{-p/d}`, cut to the
/// box of the center. `p = 1` gives the `ell n^{-1/d}` cube; `p = 1/2`, `ell = 1`
/// the `n^{-1/(2d)}` variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HilbertCube {
    pub center: FrequencyVector,
    pub ell: f64,
    pub d: f64,
    pub width_power: f64,
}

impl HilbertCube {
    pub fn new(center: FrequencyVector, ell: f64, d: f64) -> Result<Self, DiophantineError> {
        Self::with_width_power(center, ell, d, 1.0)
    }

    pub fn with_width_power(center: FrequencyVector, ell: f64, d: f64, width_power: f64) -> Result<Self, DiophantineError> {
        if !(ell > 0.0) || !(d > 0.0 && d < 1.0) || !(width_power > 0.0) {
            return Err(DiophantineError::Invalid(format!(
                "cube needs ell > 0, d in (0,1), p > 0; got {ell}, {d}, {width_power}"
            )));
        }
        Ok(Self {
            center,
            ell,
            d,
            width_power,
        })
    }

    pub fn n_max(&self) -> u32 {
        self.center.len() as u32
    }

    /// `ell n^{-p/d}`
    pub fn half_width(&self, n: u32) -> f64 {
        self.ell * (n as f64).powf(-self.width_power / self.d)
    }

    /// Coordinate interval after intersecting with the box.
    pub fn interval(&self, n: u32) -> (f64, f64) {
        let (a, b) = self.center.bounds();
        let c = self.center.value(n);
        let w = self.half_width(n);
        ((c - w).max(a), (c + w).min(b))
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.center.len()
            && xi.iter().enumerate().all(|(i, x)| {
                let (lo, hi) = self.interval(i as u32 + 1);
                lo <= *x && *x <= hi
            })
    }
}

/// Sample `index` of the stream `seed`. Each index owns its ChaCha stream,
/// so results do not depend on how samples are split across threads.
pub fn sample_one(cube: &HilbertCube, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (1..=cube.n_max())
        .map(|n| {
            let (lo, hi) = cube.interval(n);
            if hi > lo {
                rng.gen_range(lo..=hi)
            } else {
                lo
            }
        })
        .collect()
}

pub fn sample_cube(cube: &HilbertCube, count: usize, seed: u64) -> Vec<FrequencyVector> {
    let (a, b) = cube.center.bounds();
    (0..count as u64)
        .map(|i| FrequencyVector::new(sample_one(cube, seed, i), a, b).expect("cube lies in its box"))
        .collect()
}
