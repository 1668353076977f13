//! Configuration-driven experiment runner behind the `amenpois` binary.

pub mod config;
pub mod plot;
pub mod run;

pub use config::{ExperimentConfig, OutputSpec, MIN_M_REPS};
pub use plot::render_svg;
pub use run::{
    csv_row, execute, resolve_workers, run, ExperimentResult, ResultRow, RunOptions, RunOutput, CSV_HEADER,
    INCOMPLETE_MARKER, WORKERS_ENV,
};
