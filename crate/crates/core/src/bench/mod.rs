//! Channel simulation, experiment presets and the Monte Carlo runner.

pub mod monte_carlo;
pub mod preset;
pub mod signal;

pub use monte_carlo::{run_monte_carlo, MonteCarloReport, Summary};
pub use preset::{Algorithm, ExperimentPreset, VariantSelector, PRESET_NAMES};
pub use signal::ChannelSpec;
