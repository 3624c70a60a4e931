//! One transmission round of the sensor network.
//!
//! Sensor `l` observes `x_l = θ + σ η_l` and sends the constant-modulus symbol
//! `√ρ exp(jω x_l)`. The symbols add up over the multiple-access channel and the
//! fusion center receives `y = √ρ Σ exp(jω x_l) + ν` with `ν ~ CN(0, σν²)`.
//! Pulse shaping is treated as ideal: the channel is a plain sum at baseband.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::numkit::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerMode {
    /// `ρ = P/L`: the aggregate transmit power is `P` whatever the network size.
    #[serde(rename = "total", alias = "total-power")]
    TotalPower,
    /// `ρ = P` for every sensor.
    #[serde(rename = "per-sensor", alias = "per_sensor")]
    PerSensor,
}

impl PowerMode {
    pub fn token(self) -> &'static str {
        match self {
            PowerMode::TotalPower => "total",
            PowerMode::PerSensor => "per-sensor",
        }
    }
}

impl fmt::Display for PowerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for PowerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "total" | "total-power" => Ok(PowerMode::TotalPower),
            "per-sensor" | "per_sensor" => Ok(PowerMode::PerSensor),
            other => Err(Error::invalid("power_mode", format!("unknown power mode '{other}' (expected total or per-sensor)"))),
        }
    }
}

/// Full description of one experiment. Serializes to a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    #[serde(rename = "L")]
    pub sensors: usize,
    pub theta: f64,
    #[serde(rename = "theta_R")]
    pub theta_range: f64,
    pub sigma: f64,
    pub model: NoiseModel,
    pub power_mode: PowerMode,
    #[serde(rename = "P")]
    pub power: f64,
    pub channel_noise_var: f64,
    pub omega: f64,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sensors < 1 {
            return Err(Error::invalid("L", "at least one sensor is required"));
        }
        if !(self.theta_range > 0.0 && self.theta_range.is_finite()) {
            return Err(Error::invalid("theta_R", format!("must be positive and finite, got {}", self.theta_range)));
        }
        if !(self.theta > 0.0 && self.theta <= self.theta_range) {
            return Err(Error::invalid("theta", format!("must lie in (0, theta_R] = (0, {}], got {}", self.theta_range, self.theta)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be positive, got {}", self.sigma)));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::invalid("P", format!("must be positive, got {}", self.power)));
        }
        if !(self.channel_noise_var >= 0.0 && self.channel_noise_var.is_finite()) {
            return Err(Error::invalid("channel_noise_var", format!("must be non-negative, got {}", self.channel_noise_var)));
        }
        let omega_max = self.omega_max();
        if !(self.omega > 0.0) {
            return Err(Error::invalid("omega", format!("must be positive, got {}", self.omega)));
        }
        if self.omega > omega_max * (1.0 + 4.0 * f64::EPSILON) {
            return Err(Error::invalid("omega", format!("must not exceed 2π/theta_R = {omega_max}, got {}", self.omega)));
        }
        Ok(())
    }

    /// Largest admissible modulation parameter, `2π/θ_R`.
    pub fn omega_max(&self) -> f64 {
        TAU / self.theta_range
    }

    /// Per-sensor transmit power `ρ`.
    pub fn per_sensor_power(&self) -> f64 {
        match self.power_mode {
            PowerMode::TotalPower => self.power / self.sensors as f64,
            PowerMode::PerSensor => self.power,
        }
    }

    pub fn snr(&self) -> f64 {
        (self.theta / self.sigma).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    /// Received superposition at the fusion center.
    pub y: Complex64,
    /// Normalized statistic the estimators act on.
    pub z: Complex64,
    /// Per-sensor observations, kept only on request.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
}

/// Draws one snapshot. Per-sensor observations are discarded.
pub fn simulate_snapshot(cfg: &NetworkConfig, stream: &mut RandomStream) -> Snapshot {
    let model = cfg.model;
    simulate(cfg, stream, |s| model.sample(s), false)
}

/// Like [`simulate_snapshot`] but keeps the observations `x_l` in the snapshot.
pub fn simulate_snapshot_with_observations(cfg: &NetworkConfig, stream: &mut RandomStream) -> Snapshot {
    let model = cfg.model;
    simulate(cfg, stream, |s| model.sample(s), true)
}

/// Test hook: sensing noise taken from `etas` (cycled if shorter than `L`)
/// instead of the noise model. Channel noise is still drawn from `stream`.
#[doc(hidden)]
pub fn simulate_snapshot_with_eta(cfg: &NetworkConfig, etas: &[f64], stream: &mut RandomStream) -> Snapshot {
    assert!(!etas.is_empty());
    let mut i = 0usize;
    simulate(
        cfg,
        stream,
        |_| {
            let e = etas[i % etas.len()];
            i += 1;
            e
        },
        true,
    )
}

fn simulate<F>(cfg: &NetworkConfig, stream: &mut RandomStream, mut eta: F, keep: bool) -> Snapshot
where
    F: FnMut(&mut RandomStream) -> f64,
{
    let mut observations = keep.then(|| Vec::with_capacity(cfg.sensors));
    let (mut re, mut im) = (0.0f64, 0.0f64);
    for _ in 0..cfg.sensors {
        let x = cfg.theta + cfg.sigma * eta(stream);
        let (s, c) = (cfg.omega * x).sin_cos();
        re += c;
        im += s;
        if let Some(obs) = observations.as_mut() {
            obs.push(x);
        }
    }
    let amp = cfg.per_sensor_power().sqrt();
    let mut y = Complex64::new(amp * re, amp * im);
    if cfg.channel_noise_var > 0.0 {
        let sd = (0.5 * cfg.channel_noise_var).sqrt();
        y += Complex64::new(sd * stream.standard_normal(), sd * stream.standard_normal());
    }
    Snapshot { y, z: normalize(y, cfg), x: observations }
}

/// `z = y/√L` under the total power constraint, `z = y/L` per sensor.
pub fn normalize(y: Complex64, cfg: &NetworkConfig) -> Complex64 {
    let l = cfg.sensors as f64;
    match cfg.power_mode {
        PowerMode::TotalPower => y / l.sqrt(),
        PowerMode::PerSensor => y / l,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> NetworkConfig {
        NetworkConfig {
            sensors: 100,
            theta: 1.0,
            theta_range: 2.0,
            sigma: 1.0,
            model: NoiseModel::Gaussian,
            power_mode: PowerMode::TotalPower,
            power: 1.0,
            channel_noise_var: 1.0,
            omega: 1.0,
            seed: 3,
        }
    }

    #[test]
    fn noiseless_single_sensor() {
        let cfg = NetworkConfig { sensors: 1, channel_noise_var: 0.0, omega: 0.7, ..base() };
        let snap = simulate_snapshot_with_eta(&cfg, &[0.0], &mut RandomStream::new(0));
        let expected = Complex64::from_polar(cfg.per_sensor_power().sqrt(), 0.7);
        assert!((snap.y - expected).norm() < 1e-15);
    }

    #[test]
    fn sum_bounded_by_constant_modulus() {
        for mode in [PowerMode::TotalPower, PowerMode::PerSensor] {
            let cfg = NetworkConfig { power_mode: mode, channel_noise_var: 0.0, ..base() };
            let mut s = RandomStream::new(11);
            for _ in 0..50 {
                let snap = simulate_snapshot(&cfg, &mut s);
                let bound = cfg.sensors as f64 * cfg.per_sensor_power().sqrt();
                assert!(snap.y.norm() <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn each_term_has_constant_modulus() {
        let cfg = NetworkConfig { model: NoiseModel::Cauchy, sigma: 50.0, ..base() };
        let snap = simulate_snapshot_with_observations(&cfg, &mut RandomStream::new(5));
        let rho = cfg.per_sensor_power();
        for x in snap.x.unwrap() {
            let term = Complex64::from_polar(rho.sqrt(), cfg.omega * x);
            assert!((term.norm() - rho.sqrt()).abs() <= 4.0 * f64::EPSILON * rho.sqrt());
        }
    }

    #[test]
    fn normalization_examples() {
        let cfg = NetworkConfig { sensors: 16, ..base() };
        let z = normalize(Complex64::new(2.0 * 4.0, 0.0), &cfg);
        assert!((z.re - 2.0).abs() < 1e-15);
        let cfg = NetworkConfig { power_mode: PowerMode::PerSensor, ..cfg };
        let z = normalize(Complex64::new(3.0 * 16.0, 0.0), &cfg);
        assert!((z.re - 3.0).abs() < 1e-15);
    }

    #[test]
    fn validation_messages_name_fields() {
        let bad = NetworkConfig { omega: 0.0, ..base() };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig { field: "omega", .. })));
        let bad = NetworkConfig { omega: 4.0, ..base() };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig { field: "omega", .. })));
        let bad = NetworkConfig { theta: 3.0, ..base() };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig { field: "theta", .. })));
        let bad = NetworkConfig { sensors: 0, ..base() };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig { field: "L", .. })));
        let bad = NetworkConfig { channel_noise_var: -1.0, ..base() };
        assert!(matches!(bad.validate(), Err(Error::InvalidConfig { field: "channel_noise_var", .. })));
        base().validate().unwrap();
    }

    #[test]
    fn json_uses_flat_keys() {
        let v = serde_json::to_value(base()).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["L", "P", "channel_noise_var", "model", "omega", "power_mode", "seed", "sigma", "theta", "theta_R"]);
        assert_eq!(obj["power_mode"], "total");
        assert_eq!(obj["model"], "gaussian");
        let back: NetworkConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, base());
    }

    #[test]
    fn deterministic_given_stream() {
        let cfg = base();
        let a = simulate_snapshot(&cfg, &mut RandomStream::substream(8, 2));
        let b = simulate_snapshot(&cfg, &mut RandomStream::substream(8, 2));
        assert_eq!(a, b);
    }
}
