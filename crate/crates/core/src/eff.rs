//! Asymptotic relative efficiency of the location and scale estimators.
//!
//! `ARE = [I · inf_ω AsV(ω)]⁻¹` with the per-sensor (channel-noise-free)
//! variances and the Fisher information of a single observation.

use serde::Serialize;

use crate::asv::{Channel, Estimand};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::numkit::Boundary;
use crate::tune::optimal_omega;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub model: NoiseModel,
    pub parameter: Estimand,
    pub inf_asv: f64,
    pub fisher: f64,
    pub are: f64,
    pub omega: f64,
    pub boundary: Boundary,
    /// Value listed in the published efficiency table.
    pub published: f64,
    /// `|are - published| > 0.01`.
    pub discrepancy: bool,
}

pub fn published_efficiency(model: NoiseModel, parameter: Estimand) -> Option<f64> {
    match (model, parameter) {
        (NoiseModel::Gaussian, Estimand::Theta | Estimand::Sigma) => Some(1.0),
        (NoiseModel::Laplace, Estimand::Theta) => Some(0.66),
        (NoiseModel::Laplace, Estimand::Sigma) => Some(0.5),
        (NoiseModel::Cauchy, Estimand::Theta | Estimand::Sigma) => Some(0.65),
        (_, Estimand::Gamma) => None,
    }
}

/// Efficiency at scale `sigma`; the result does not depend on it.
///
/// For Gaussian noise the infimum is the ω → 0⁺ limit; it is evaluated at
/// `ωσ = 1e-4`, where the variance is within 1e-8 of its limit.
pub fn asymptotic_relative_efficiency(model: NoiseModel, parameter: Estimand, sigma: f64, omega_max: f64) -> Result<EfficiencyReport> {
    let (fisher, published) = match parameter {
        Estimand::Theta => (model.fisher_location(sigma), published_efficiency(model, parameter)),
        Estimand::Sigma => (model.fisher_scale(sigma), published_efficiency(model, parameter)),
        Estimand::Gamma => return Err(Error::invalid("parameter", "efficiency is defined for theta and sigma only")),
    };
    let published = published.unwrap_or(f64::NAN);
    let best = optimal_omega(model, sigma, &Channel::per_sensor(1.0), parameter, None, omega_max)?;
    let are = 1.0 / (fisher * best.asv);
    Ok(EfficiencyReport {
        model,
        parameter,
        inf_asv: best.asv,
        fisher,
        are,
        omega: best.omega,
        boundary: best.boundary,
        published,
        discrepancy: (are - published).abs() > 0.01,
    })
}
