//! Finite-truncation tools for KAM theory on chains of oscillators with
//! exponentially decaying masses and long-range pairwise coupling.

pub mod diophantine;
pub mod dynamics;
pub mod error;
pub mod kam;
pub mod mechanics;
pub mod models;
pub mod series;
pub mod stats;
