//! The inductive normal-form scheme: schedules, truncation, cohomological
//! solve, error propagation, frequency correction and torus assembly.

mod cohomological;
mod embedding;
mod frequency;
mod iteration;
mod report;
mod schedule;
mod step;
mod truncate;

pub use cohomological::{divisor, solve_cohomological, solve_with_bound, Cohomological};
pub use embedding::{assemble_torus_embedding, TorusEmbedding};
pub use frequency::{invert_frequency_map, FrequencyInverse};
pub use iteration::{run_iteration, run_iteration_partial, ConvergenceFit, IterationRun, IterationState};
pub use report::{write_stage_csv, StageRecord};
pub use schedule::{KamSchedule, SmallnessGate};
pub use step::{kam_step, split_affine, KamConfig, StepOutput};
pub use truncate::{admits_support, enumerate_an, enumerate_an_limited, in_truncation, kam_truncate, Truncation};
