//! Experiment harness: configs, single runs, refinement sweeps and presets.

pub mod config;
pub mod experiment;
pub mod presets;
pub mod sweep;

pub use config::{ConfigError, ExperimentConfig, MeshSource};
pub use experiment::{run_experiment, Errors, RunError, RunSummary};
pub use presets::{preset, preset_names, Preset};
pub use sweep::{parse_ladder, run_sweep, Rung, SweepSummary};
