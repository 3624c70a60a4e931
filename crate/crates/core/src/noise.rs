//! Sensing-noise families.
//!
//! Observations are `x = θ + σ η` with `η` symmetric about zero. The scale
//! convention differs per family:
//!
//! * Gaussian: `σ` is the standard deviation.
//! * Laplace: `σ` is the standard deviation, so the Laplace scale is `b = σ/√2`.
//! * Cauchy: `σ` is the half-width at half-maximum (the Cauchy scale parameter).
//!
//! With these conventions the characteristic functions of `σ η` at `ω` are
//! `exp(-ω²σ²/2)`, `1/(1 + ω²σ²/2)` and `exp(-σω)` respectively.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    Gaussian,
    Laplace,
    Cauchy,
}

impl NoiseModel {
    pub const ALL: [NoiseModel; 3] = [NoiseModel::Gaussian, NoiseModel::Laplace, NoiseModel::Cauchy];

    pub fn token(self) -> &'static str {
        match self {
            NoiseModel::Gaussian => "gaussian",
            NoiseModel::Laplace => "laplace",
            NoiseModel::Cauchy => "cauchy",
        }
    }

    /// `φ_η(t)` for `t = σω ≥ 0`.
    pub fn cf(self, t: f64) -> f64 {
        match self {
            NoiseModel::Gaussian => (-0.5 * t * t).exp(),
            NoiseModel::Laplace => 1.0 / (1.0 + 0.5 * t * t),
            NoiseModel::Cauchy => (-t).exp(),
        }
    }

    /// `1 - φ_η(t)` without cancellation for small `t`.
    pub fn cf_complement(self, t: f64) -> f64 {
        match self {
            NoiseModel::Gaussian => -(-0.5 * t * t).exp_m1(),
            NoiseModel::Laplace => {
                let h = 0.5 * t * t;
                h / (1.0 + h)
            }
            NoiseModel::Cauchy => -(-t).exp_m1(),
        }
    }

    /// Characteristic function of `σ η` evaluated at `ω`.
    pub fn char_fn(self, sigma: f64, omega: f64) -> f64 {
        debug_assert!(sigma > 0.0 && omega > 0.0);
        self.cf(sigma * omega)
    }

    /// `∂φ_η(σω)/∂σ`.
    pub fn char_fn_dsigma(self, sigma: f64, omega: f64) -> f64 {
        let t = sigma * omega;
        match self {
            NoiseModel::Gaussian => -omega * omega * sigma * (-0.5 * t * t).exp(),
            NoiseModel::Laplace => {
                let d = 1.0 + 0.5 * t * t;
                -omega * omega * sigma / (d * d)
            }
            NoiseModel::Cauchy => -omega * (-t).exp(),
        }
    }

    /// `(v_c, v_s) = (var cos(ωση), var sin(ωση))`.
    ///
    /// Mathematically `v_c = 1/2 + φ(2t)/2 - φ(t)²` and `v_s = 1/2 - φ(2t)/2`;
    /// the per-family closed forms below avoid the cancellation those
    /// expressions suffer when `t = σω` is small.
    pub fn cos_sin_variances(self, sigma: f64, omega: f64) -> (f64, f64) {
        let t = sigma * omega;
        let v_s = 0.5 * self.cf_complement(2.0 * t);
        let v_c = match self {
            NoiseModel::Gaussian => {
                let q = (-t * t).exp_m1();
                0.5 * q * q
            }
            NoiseModel::Laplace => {
                let u = t * t;
                let d = 1.0 + 0.5 * u;
                u * u * (5.0 + u) / (4.0 * (1.0 + 2.0 * u) * d * d)
            }
            NoiseModel::Cauchy => v_s,
        };
        (v_c, v_s)
    }

    /// One standardized draw of `η`.
    #[inline]
    pub fn sample(self, stream: &mut RandomStream) -> f64 {
        match self {
            NoiseModel::Gaussian => stream.standard_normal(),
            NoiseModel::Laplace => {
                let v = stream.uniform() - 0.5;
                let b = std::f64::consts::FRAC_1_SQRT_2;
                -b * v.signum() * (-2.0 * v.abs()).ln_1p()
            }
            NoiseModel::Cauchy => (std::f64::consts::PI * (stream.uniform() - 0.5)).tan(),
        }
    }

    /// Fisher information of one observation about the location θ.
    pub fn fisher_location(self, sigma: f64) -> f64 {
        let c = match self {
            NoiseModel::Gaussian => 1.0,
            NoiseModel::Laplace => 2.0,
            NoiseModel::Cauchy => 0.5,
        };
        c / (sigma * sigma)
    }

    /// Fisher information of one observation about the scale σ.
    pub fn fisher_scale(self, sigma: f64) -> f64 {
        let c = match self {
            NoiseModel::Gaussian => 2.0,
            NoiseModel::Laplace => 1.0,
            NoiseModel::Cauchy => 0.5,
        };
        c / (sigma * sigma)
    }

    /// Density of the standardized variate `η`.
    pub fn density(self, eta: f64) -> f64 {
        use std::f64::consts::{PI, SQRT_2};
        match self {
            NoiseModel::Gaussian => (-0.5 * eta * eta).exp() / (2.0 * PI).sqrt(),
            NoiseModel::Laplace => (-SQRT_2 * eta.abs()).exp() / SQRT_2,
            NoiseModel::Cauchy => 1.0 / (PI * (1.0 + eta * eta)),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(NoiseModel::Gaussian),
            "laplace" => Ok(NoiseModel::Laplace),
            "cauchy" => Ok(NoiseModel::Cauchy),
            other => Err(Error::invalid("model", format!("unknown noise model '{other}' (expected gaussian, laplace or cauchy)"))),
        }
    }
}
