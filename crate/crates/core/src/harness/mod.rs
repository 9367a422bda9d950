//! Monte Carlo reward-recovery experiments: random separable instances,
//! parallel seeded trials, CSV results and SVG success-rate curves.

pub mod config;
pub mod generator;
pub mod identify;
pub mod plot;
pub mod runner;

pub use config::{log_grid, ExperimentConfig, THREADS_ENV};
pub use generator::random_separable_instance;
pub use identify::{ml_identification_error, IdentificationError};
pub use plot::{emit_plot, render_svg, LogAxis, PlotOptions};
pub use runner::{emit_csv, parse_csv, read_csv, run_experiment, write_csv, ResultRow};
