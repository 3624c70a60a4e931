//! Monte Carlo harness.
//!
//! Trial `i` of an experiment with base seed `s` draws from
//! `RandomStream::substream(s, i)`, so results do not depend on the number of
//! worker threads. Per-trial estimates are collected in trial order and reduced
//! with pairwise summation.
//!
//! Location errors are measured as the shortest circular distance between
//! `ωθ̂` and `ωθ`, divided by ω. Scale and SNR statistics use the
//! non-saturated trials only.

use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asv::{asv_generic, AsvReport, Channel, Estimand};
use crate::error::{Error, Result};
use crate::estim::{estimate_all, EstimateSet};
use crate::numkit::{pairwise_sum, wrap_angle, Boundary, RandomStream};
use crate::simnet::{simulate_snapshot, NetworkConfig};
use crate::tune::{optimal_omega, SMALL_OMEGA};

pub const DEFAULT_TRIALS: usize = 2000;
const TRIM_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimandStats {
    pub mean: f64,
    /// Sample variance (n - 1 denominator) times L.
    pub var_l: f64,
    pub bias: f64,
    pub used: usize,
    pub saturated: usize,
    /// Variance times L after dropping 1% of the trials at each end.
    pub trimmed_var_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub trials: usize,
    #[serde(rename = "L")]
    pub sensors: usize,
    pub theta: EstimandStats,
    pub sigma: EstimandStats,
    pub gamma: EstimandStats,
    pub wall_time_s: f64,
}

impl McSummary {
    pub fn saturated_fraction(&self) -> f64 {
        self.sigma.saturated as f64 / self.trials as f64
    }

    /// Copy with the wall time zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        McSummary { wall_time_s: 0.0, ..self.clone() }
    }

    pub fn stats(&self, which: Estimand) -> &EstimandStats {
        match which {
            Estimand::Theta => &self.theta,
            Estimand::Sigma => &self.sigma,
            Estimand::Gamma => &self.gamma,
        }
    }
}

/// Runs `trials` independent snapshots of `cfg` and applies the simple estimators.
pub fn run_experiment(cfg: &NetworkConfig, trials: usize, base_seed: u64) -> Result<McSummary> {
    cfg.validate()?;
    if trials < 2 {
        return Err(Error::invalid("trials", format!("at least 2 trials are needed, got {trials}")));
    }
    let start = Instant::now();
    let estimates: Vec<EstimateSet> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut stream = RandomStream::substream(base_seed, i as u64);
            let snap = simulate_snapshot(cfg, &mut stream);
            estimate_all(snap.z, cfg.omega, cfg.power, cfg.model)
        })
        .collect::<Result<_>>()?;

    let saturated = estimates.iter().filter(|e| e.saturated).count();
    if saturated == trials {
        return Err(Error::AllSaturated(trials));
    }

    let l = cfg.sensors as f64;
    let phase = cfg.omega * cfg.theta;
    let theta_err: Vec<f64> = estimates.iter().map(|e| wrap_angle(cfg.omega * e.theta_hat - phase) / cfg.omega).collect();
    let sigma_hat: Vec<f64> = estimates.iter().filter(|e| !e.saturated).map(|e| e.sigma_hat).collect();
    let gamma_hat: Vec<f64> = estimates.iter().filter_map(|e| e.gamma_hat).collect();

    let mut theta = describe(&theta_err, l, 0.0, 0);
    theta.mean += cfg.theta;
    let sigma = describe(&sigma_hat, l, cfg.sigma, saturated);
    let gamma = describe(&gamma_hat, l, cfg.snr(), trials - gamma_hat.len());

    Ok(McSummary { trials, sensors: cfg.sensors, theta, sigma, gamma, wall_time_s: start.elapsed().as_secs_f64() })
}

fn describe(xs: &[f64], l: f64, truth: f64, saturated: usize) -> EstimandStats {
    let mean = mean(xs);
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = (TRIM_FRACTION * xs.len() as f64).floor() as usize;
    let trimmed = &sorted[cut..sorted.len() - cut];
    EstimandStats {
        mean,
        var_l: variance(xs) * l,
        bias: mean - truth,
        used: xs.len(),
        saturated,
        trimmed_var_l: variance(trimmed) * l,
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Omega,
    Sigma,
}

impl SweepAxis {
    pub fn token(self) -> &'static str {
        match self {
            SweepAxis::Omega => "omega",
            SweepAxis::Sigma => "sigma",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega" => Ok(SweepAxis::Omega),
            "sigma" => Ok(SweepAxis::Sigma),
            other => Err(Error::invalid("axis", format!("unknown axis '{other}' (expected omega or sigma)"))),
        }
    }
}

/// How ω is chosen at each point of a σ sweep. Ignored on an ω sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OmegaRule {
    Fixed,
    /// Re-optimize for this target at every grid point, with γ from the true θ and σ.
    Auto(Estimand),
}

/// Resolves an automatic ω for `cfg`, substituting [`SMALL_OMEGA`] for a 0⁺ infimum.
pub fn resolve_auto_omega(cfg: &NetworkConfig, target: Estimand) -> Result<(f64, Boundary)> {
    let choice = optimal_omega(cfg.model, cfg.sigma, &Channel::from(cfg), target, Some(cfg.snr()), cfg.omega_max())?;
    match choice.boundary {
        Boundary::Lower => Ok((SMALL_OMEGA.min(cfg.omega_max()), Boundary::Lower)),
        b => Ok((choice.omega, b)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub omega: f64,
    pub summary: Option<McSummary>,
    pub asv: Option<AsvReport>,
    pub error: Option<String>,
}

/// One Monte Carlo experiment per grid point, all sharing `cfg.seed` so that
/// neighbouring points see common random numbers.
pub fn sweep(cfg: &NetworkConfig, axis: SweepAxis, grid: &[f64], trials: usize, rule: OmegaRule) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must contain at least one point"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("grid", "must be strictly increasing"));
    }
    if grid.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid("grid", "values must be positive and finite"));
    }
    if trials < 2 {
        return Err(Error::invalid("trials", format!("at least 2 trials are needed, got {trials}")));
    }

    let rows = grid
        .iter()
        .map(|&value| {
            let mut point = cfg.clone();
            match axis {
                SweepAxis::Omega => point.omega = value,
                SweepAxis::Sigma => point.sigma = value,
            }
            let outcome = (|| -> Result<(McSummary, AsvReport)> {
                if let (SweepAxis::Sigma, OmegaRule::Auto(target)) = (axis, rule) {
                    point.omega = resolve_auto_omega(&point, target)?.0;
                }
                let summary = run_experiment(&point, trials, cfg.seed)?;
                let asv = asv_generic(point.model, point.sigma, point.omega, &Channel::from(&point), Some(point.theta));
                Ok((summary, asv))
            })();
            match outcome {
                Ok((summary, asv)) => SweepRow { axis, value, omega: point.omega, summary: Some(summary), asv: Some(asv), error: None },
                Err(e) => SweepRow { axis, value, omega: point.omega, summary: None, asv: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    Ok(rows)
}

/// Grid value with the smallest empirical `L·var` for `which` among successful rows.
pub fn empirical_argmin(rows: &[SweepRow], which: Estimand) -> Option<f64> {
    rows.iter()
        .filter_map(|r| r.summary.as_ref().map(|s| (r.value, s.stats(which).var_l)))
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(x, _)| x)
}

/// Provenance record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: NetworkConfig,
    pub tool_version: String,
    pub seed: u64,
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

impl RunManifest {
    pub fn new(command: &str, config: &NetworkConfig, output: Option<String>, trials: Option<usize>) -> Self {
        RunManifest {
            command: command.to_string(),
            config: config.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            output,
            trials,
        }
    }
}

pub const CSV_HEADER: &str = "axis,value,emp_var_theta,emp_var_sigma,emp_var_gamma,asv_theta,asv_sigma,asv_gamma,saturated_frac,trials,L";

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        "nan".to_string()
    }
}

/// Writes sweep rows as CSV: a `# {manifest json}` line, the header, one line per row.
/// Failed rows keep their axis value and carry `nan` elsewhere.
pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow], manifest: Option<&RunManifest>) -> io::Result<()> {
    if let Some(m) = manifest {
        writeln!(out, "# {}", serde_json::to_string(m).map_err(io::Error::other)?)?;
    }
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        let nan = f64::NAN;
        let (et, es, eg, sat, trials, l) = match &row.summary {
            Some(s) => (s.theta.var_l, s.sigma.var_l, s.gamma.var_l, s.saturated_fraction(), s.trials.to_string(), s.sensors.to_string()),
            None => (nan, nan, nan, nan, String::new(), String::new()),
        };
        let (at, as_, ag) = match &row.asv {
            Some(a) => (a.asv_theta, a.asv_sigma, a.asv_gamma.unwrap_or(nan)),
            None => (nan, nan, nan),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.axis.token(),
            num(row.value),
            num(et),
            num(es),
            num(eg),
            num(at),
            num(as_),
            num(ag),
            num(sat),
            trials,
            l
        )?;
    }
    Ok(())
}
