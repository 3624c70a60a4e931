//! Fusion-center estimators.
//!
//! The simple estimators read θ off the phase of `z` and σ off its magnitude by
//! inverting `|z| = √P φ(σω)`. The joint estimator minimizes the Mahalanobis
//! distance between `z` and its asymptotic mean; whenever `|z| ≤ √P` the two
//! coincide, which is what the tests here check.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::asv::{covariance_matrix, mat2_inverse, mean_statistic};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::numkit::minimize_quasiconvex;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateSet {
    pub theta_hat: f64,
    pub sigma_hat: f64,
    /// `None` when the scale estimate is zero (saturated snapshot).
    pub gamma_hat: Option<f64>,
    pub saturated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleEstimate {
    pub sigma: f64,
    /// `|z|` exceeded `√P`; `sigma` is then pinned to zero.
    pub saturated: bool,
}

/// `θ̂ = arg(z)/ω` with the phase taken in (0, 2π].
pub fn estimate_location(z: Complex64, omega: f64) -> Result<f64> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroMagnitude);
    }
    let mut arg = z.arg();
    if arg <= 0.0 {
        arg += TAU;
    }
    Ok(arg / omega)
}

pub fn estimate_scale(z: Complex64, omega: f64, power: f64, model: NoiseModel) -> Result<ScaleEstimate> {
    let mag = z.norm();
    if mag == 0.0 {
        return Err(Error::ZeroMagnitude);
    }
    let m = mag / power.sqrt();
    if m > 1.0 {
        return Ok(ScaleEstimate { sigma: 0.0, saturated: true });
    }
    let sigma = match model {
        NoiseModel::Gaussian => (-2.0 * m.ln()).sqrt() / omega,
        NoiseModel::Laplace => std::f64::consts::SQRT_2 / omega * (1.0 / m - 1.0).sqrt(),
        NoiseModel::Cauchy => -m.ln() / omega,
    };
    Ok(ScaleEstimate { sigma, saturated: false })
}

pub fn estimate_snr(theta_hat: f64, sigma_hat: f64) -> Result<f64> {
    if !(sigma_hat > 0.0) {
        return Err(Error::DegenerateScale);
    }
    Ok((theta_hat / sigma_hat).powi(2))
}

/// All three simple estimates from one snapshot.
pub fn estimate_all(z: Complex64, omega: f64, power: f64, model: NoiseModel) -> Result<EstimateSet> {
    let theta_hat = estimate_location(z, omega)?;
    let scale = estimate_scale(z, omega, power, model)?;
    Ok(EstimateSet {
        theta_hat,
        sigma_hat: scale.sigma,
        gamma_hat: estimate_snr(theta_hat, scale.sigma).ok(),
        saturated: scale.saturated,
    })
}

/// `(z - z̄)ᵀ Σ⁻¹ (z - z̄)` over the real and imaginary parts.
pub fn joint_objective(
    z: Complex64,
    theta: f64,
    sigma: f64,
    omega: f64,
    power: f64,
    noise_var: f64,
    model: NoiseModel,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    let mean = mean_statistic(model, theta, sigma, omega, power);
    let inv = mat2_inverse(&covariance_matrix(model, theta, sigma, omega, power, noise_var))?;
    let d = [z.re - mean[0], z.im - mean[1]];
    Ok(d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1]) + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointEstimate {
    pub theta: f64,
    pub sigma: f64,
    pub objective: f64,
    pub saturated: bool,
}

const GRID: usize = 200;

/// Per-σ quantities reused across the θ grid.
struct ScaleNode {
    sigma: f64,
    amp: f64,
    v_c: f64,
    v_s: f64,
}

impl ScaleNode {
    fn new(model: NoiseModel, sigma: f64, omega: f64, power: f64) -> Self {
        let (v_c, v_s) = model.cos_sin_variances(sigma, omega);
        ScaleNode { sigma, amp: power.sqrt() * model.char_fn(sigma, omega), v_c, v_s }
    }

    // Same quadratic form as `joint_objective`, with cos/sin of ωθ supplied.
    fn objective(&self, z: Complex64, c: f64, s: f64, power: f64, noise_var: f64) -> f64 {
        let half = 0.5 * noise_var;
        let a = power * (self.v_c * c * c + self.v_s * s * s) + half;
        let d = power * (self.v_s * c * c + self.v_c * s * s) + half;
        let b = power * (self.v_c - self.v_s) * s * c;
        let det = a * d - b * b;
        if !(det > 0.0) {
            return f64::INFINITY;
        }
        let r0 = z.re - self.amp * c;
        let r1 = z.im - self.amp * s;
        (d * r0 * r0 - 2.0 * b * r0 * r1 + a * r1 * r1) / det
    }
}

/// Joint minimum-variance estimate of `(θ, σ)`.
///
/// θ is searched over one full period `(0, 2π/ω]` (which contains `(0, θ_R]`
/// for any admissible ω) and σ over `(0, σ_max]`, `σ_max = min(10 σ̂, 10³)`
/// with `σ̂` the magnitude-inversion estimate. A 200×200 grid locates the basin
/// and alternating golden-section passes refine it. When `|z| > √P` no σ > 0
/// reproduces the magnitude; the estimate is then returned at the σ = 0
/// boundary with `saturated = true`.
pub fn joint_minimum_variance(
    z: Complex64,
    omega: f64,
    power: f64,
    noise_var: f64,
    model: NoiseModel,
    theta_range: f64,
) -> Result<JointEstimate> {
    if omega * theta_range > TAU * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("omega {omega} exceeds 2π/theta_R = {}", TAU / theta_range)));
    }
    let simple = estimate_scale(z, omega, power, model)?;
    let period = TAU / omega;
    if simple.saturated {
        let theta = estimate_location(z, omega)?;
        return Ok(JointEstimate { theta, sigma: 0.0, objective: f64::NAN, saturated: true });
    }

    let sigma_max = if simple.sigma > 0.0 { (10.0 * simple.sigma).min(1e3) } else { 1.0 / omega };
    let d_theta = period / GRID as f64;
    let d_sigma = sigma_max / GRID as f64;

    let trig: Vec<(f64, f64)> = (1..=GRID).map(|i| (omega * i as f64 * d_theta).sin_cos()).map(|(s, c)| (c, s)).collect();
    let nodes: Vec<ScaleNode> = (1..=GRID).map(|j| ScaleNode::new(model, j as f64 * d_sigma, omega, power)).collect();

    let (mut best, mut bi, mut bj) = (f64::INFINITY, 0usize, 0usize);
    for (j, node) in nodes.iter().enumerate() {
        for (i, &(c, s)) in trig.iter().enumerate() {
            let v = node.objective(z, c, s, power, noise_var);
            if v < best {
                (best, bi, bj) = (v, i, j);
            }
        }
    }

    let f = |theta: f64, sigma: f64| {
        if !(sigma > 0.0) {
            return f64::INFINITY;
        }
        let (s, c) = (omega * theta).sin_cos();
        ScaleNode::new(model, sigma, omega, power).objective(z, c, s, power, noise_var)
    };

    let mut theta = (bi + 1) as f64 * d_theta;
    let mut sigma = nodes[bj].sigma;
    let (mut half_t, mut half_s) = (d_theta, d_sigma);
    for _ in 0..8 {
        let (t_prev, s_prev) = (theta, sigma);
        theta = minimize_quasiconvex(|t| f(t, sigma), theta - half_t, theta + half_t, 1e-13 * period)?.argmin;
        let lo = (sigma - half_s).max(1e-6 * d_sigma);
        sigma = minimize_quasiconvex(|s| f(theta, s), lo, sigma + half_s, 1e-13 * sigma_max)?.argmin;
        let moved = (theta - t_prev).abs() / period + (sigma - s_prev).abs() / sigma_max;
        if moved < 1e-12 {
            break;
        }
        half_t = (4.0 * (theta - t_prev).abs()).max(1e-6 * d_theta).min(d_theta);
        half_s = (4.0 * (sigma - s_prev).abs()).max(1e-6 * d_sigma).min(d_sigma);
    }

    let mut theta = theta.rem_euclid(period);
    if theta <= 0.0 {
        theta += period;
    }
    Ok(JointEstimate { theta, sigma, objective: f(theta, sigma), saturated: false })
}
