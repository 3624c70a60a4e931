//! Distributed estimation of location, scale and SNR from constant-modulus
//! phase-modulated sensor transmissions over a Gaussian multiple-access channel.

pub mod asv;
pub mod cli;
pub mod eff;
pub mod error;
pub mod estim;
pub mod mc;
pub mod noise;
pub mod numkit;
pub mod simnet;
pub mod tune;

pub use asv::{AsvReport, Channel, Estimand};
pub use error::{Error, Result};
pub use estim::EstimateSet;
pub use noise::NoiseModel;
pub use simnet::{NetworkConfig, PowerMode};
