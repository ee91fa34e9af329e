//! IO, file formats, weight provisioning, threaded runners, and the CLI
//! for the CORDIC fixed-point neuron emulator in `relace-core`.

pub mod cli;
pub mod io;
pub mod mnist;
pub mod presets;
pub mod runner;
pub mod synthetic;
pub mod trainer;

pub use relace_core as core;
