//! Bit-accurate software model of a CORDIC fixed-point Hodgkin-Huxley
//! neuron, the 64-neuron cortical pool built from it, a float64 reference
//! twin, error metrics, and an analytical latency/throughput model for
//! iterative-vs-parallel CORDIC deployments.
//!
//! The crate is `no_std` + `alloc`: all arithmetic is pure and
//! deterministic. File formats, the CLI, and the MNIST training path live
//! in the companion `relace` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod cordic;
pub mod fixedpoint;
pub mod hh_neuron;
pub mod metrics;
pub mod neural_pool;
pub mod perf_model;
pub mod snn_mnist;

pub use fixedpoint::{Fixed, QFormat, Quire, Q16_16, Q4_4, Q8_8};
