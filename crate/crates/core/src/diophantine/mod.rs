//! Frequency-set geometry: stage-wise non-resonance checks, Hilbert cubes
//! with their product measure, box dimension and Monte-Carlo measure scans.

mod boxdim;
mod check;
mod cube;
mod scan;

use serde::{Deserialize, Serialize};

use crate::error::DiophantineError;

pub use boxdim::{box_dimension, geometric_scales, BoxDimension};
pub use check::{check_stage, covering_cutoff, DiophantineReport, StageChecker, Violation, DEFAULT_PAIR_BUDGET};
pub use cube::{sample_cube, sample_one, HilbertCube};
pub use scan::{deficit_exponent, measure_scan, strip_measure, ScanRow};

/// Frequencies `xi_1..xi_N` inside a box `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyVector {
    values: Vec<f64>,
    a: f64,
    b: f64,
}

impl FrequencyVector {
    pub fn new(values: Vec<f64>, a: f64, b: f64) -> Result<Self, DiophantineError> {
        if !(a < b) {
            return Err(DiophantineError::Invalid(format!("empty box [{a}, {b}]")));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(a <= **v && **v <= b)) {
            return Err(DiophantineError::Invalid(format!("xi_{} = {v} outside [{a}, {b}]", i + 1)));
        }
        Ok(Self { values, a, b })
    }

    /// Smallest box holding the values, padded by one.
    pub fn unboxed(values: Vec<f64>) -> Result<Self, DiophantineError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DiophantineError::Invalid("non-finite frequency".into()));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if values.is_empty() { (0.0, 1.0) } else { (lo - 1.0, hi + 1.0) };
        Self::new(values, lo, hi)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `xi_i`, 1-based.
    pub fn value(&self, i: u32) -> f64 {
        self.values[(i - 1) as usize]
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}
