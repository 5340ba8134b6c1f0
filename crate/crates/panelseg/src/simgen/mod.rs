// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulated panels and the Monte Carlo harness.

pub mod competitors;
pub mod experiment;
pub mod metrics;
pub mod noise;
pub mod plan;
pub mod signal;

pub use experiment::{run_experiment, Detector, Evaluate, ExperimentResult, Plan};
pub use metrics::rand_index;
pub use noise::{gen_noise, noise_from_innovations, NoiseModel, NoiseSpec};
pub use signal::{gen_signal, ChangeSpec, ChangeTruth, SignRule, SignalSpec};
