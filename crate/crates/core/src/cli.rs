//! Command-line front end.
//!
//! Every subcommand builds its parameters from defaults, then an optional JSON
//! config file, then flags, in increasing order of precedence.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::asv::{asv_generic, Channel, Estimand};
use crate::eff::{asymptotic_relative_efficiency, EfficiencyReport};
use crate::error::{Error, Result};
use crate::estim::{estimate_all, EstimateSet};
use crate::mc::{sweep, write_sweep_csv, OmegaRule, RunManifest, SweepAxis, DEFAULT_TRIALS};
use crate::noise::NoiseModel;
use crate::numkit::{Boundary, RandomStream};
use crate::simnet::{simulate_snapshot, NetworkConfig, PowerMode};
use crate::tune::{analytic_omega, optimal_omega, optimal_omegas, AnalyticOmega, OmegaChoice, SMALL_OMEGA};

pub const THREADS_ENV: &str = "CM_PHASE_THREADS";

const DEFAULT_SENSORS: usize = 10_000;
const DEFAULT_POWER: f64 = 1.0;
const DEFAULT_NOISE_VAR: f64 = 1.0;

#[derive(Debug, Parser)]
#[command(name = "cmphase", version, about = "Location, scale and SNR estimation over a phase-modulated multiple-access channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw one snapshot and print the estimates.
    Simulate(SimulateArgs),
    /// Asymptotic variances at a given ω.
    Asv(NetArgs),
    /// Optimal modulation parameter(s).
    OptOmega(OptOmegaArgs),
    /// Asymptotic relative efficiency table.
    Are(AreArgs),
    /// Monte Carlo sweep over ω or σ, written as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Default, Args)]
struct NetArgs {
    /// JSON file with any of the network fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<NoiseModel>,
    #[arg(long)]
    theta: Option<f64>,
    /// Upper end of the admissible θ range (default 2θ).
    #[arg(long = "theta-r")]
    theta_r: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Number of sensors.
    #[arg(long = "L")]
    sensors: Option<usize>,
    #[arg(long = "power-mode")]
    power_mode: Option<PowerMode>,
    /// Total (or per-sensor) transmit power.
    #[arg(long = "P")]
    power: Option<f64>,
    #[arg(long = "channel-noise-var")]
    channel_noise_var: Option<f64>,
    /// A positive number or auto:theta, auto:sigma, auto:gamma.
    #[arg(long)]
    omega: Option<OmegaSpec>,
    /// γ used to optimize ω for the SNR target when θ is unknown.
    #[arg(long = "gamma-guess")]
    gamma_guess: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    net: NetArgs,
    /// Exit with status 2 when the snapshot saturates.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct OptOmegaArgs {
    #[command(flatten)]
    net: NetArgs,
    #[arg(long)]
    target: Option<Estimand>,
}

#[derive(Debug, Args)]
struct AreArgs {
    #[arg(long)]
    model: Option<NoiseModel>,
    /// Print the reports as JSON instead of a table.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    net: NetArgs,
    #[arg(long)]
    axis: SweepAxis,
    /// start:stop:count, endpoints included.
    #[arg(long)]
    grid: Grid,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    Value(f64),
    #[serde(with = "auto_token")]
    Auto(Estimand),
}

mod auto_token {
    use super::Estimand;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &Estimand, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("auto:{t}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Estimand, D::Error> {
        let s = String::deserialize(d)?;
        match s.parse::<super::OmegaSpec>() {
            Ok(super::OmegaSpec::Auto(t)) => Ok(t),
            _ => Err(serde::de::Error::custom(format!("expected auto:theta|sigma|gamma, got '{s}'"))),
        }
    }
}

impl std::str::FromStr for OmegaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(target) = s.strip_prefix("auto:") {
            return Ok(OmegaSpec::Auto(target.parse()?));
        }
        s.parse::<f64>()
            .map(OmegaSpec::Value)
            .map_err(|_| Error::invalid("omega", format!("expected a number or auto:theta|sigma|gamma, got '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Grid(Vec<f64>);

impl std::str::FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid("grid", format!("expected start:stop:count, got '{s}'"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if count == 0 {
            return Err(Error::invalid("grid", "count must be at least 1"));
        }
        if count == 1 {
            return Ok(Grid(vec![start]));
        }
        if !(stop > start) {
            return Err(Error::invalid("grid", "stop must exceed start"));
        }
        let step = (stop - start) / (count - 1) as f64;
        Ok(Grid((0..count).map(|i| if i == count - 1 { stop } else { start + step * i as f64 }).collect()))
    }
}

/// Network fields as they may appear in a config file; all optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(rename = "L")]
    sensors: Option<usize>,
    theta: Option<f64>,
    #[serde(rename = "theta_R")]
    theta_range: Option<f64>,
    sigma: Option<f64>,
    model: Option<NoiseModel>,
    power_mode: Option<PowerMode>,
    #[serde(rename = "P")]
    power: Option<f64>,
    channel_noise_var: Option<f64>,
    omega: Option<OmegaSpec>,
    gamma_guess: Option<f64>,
    seed: Option<u64>,
}

/// Flags merged over the config file, before defaults are applied.
#[derive(Debug, Clone)]
struct Params {
    model: NoiseModel,
    theta: Option<f64>,
    theta_range: Option<f64>,
    sigma: Option<f64>,
    sensors: usize,
    power_mode: PowerMode,
    power: f64,
    channel_noise_var: f64,
    omega: Option<OmegaSpec>,
    gamma_guess: Option<f64>,
    seed: u64,
}

impl Params {
    fn from_args(net: &NetArgs) -> Result<Self> {
        let file = match &net.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::invalid("config", format!("{}: {e}", path.display())))?;
                serde_json::from_str::<ConfigFile>(&text).map_err(|e| Error::invalid("config", format!("{}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        Ok(Params {
            model: net.model.or(file.model).unwrap_or(NoiseModel::Gaussian),
            theta: net.theta.or(file.theta),
            theta_range: net.theta_r.or(file.theta_range),
            sigma: net.sigma.or(file.sigma),
            sensors: net.sensors.or(file.sensors).unwrap_or(DEFAULT_SENSORS),
            power_mode: net.power_mode.or(file.power_mode).unwrap_or(PowerMode::TotalPower),
            power: net.power.or(file.power).unwrap_or(DEFAULT_POWER),
            channel_noise_var: net.channel_noise_var.or(file.channel_noise_var).unwrap_or(DEFAULT_NOISE_VAR),
            omega: net.omega.or(file.omega),
            gamma_guess: net.gamma_guess.or(file.gamma_guess),
            seed: net.seed.or(file.seed).unwrap_or(0),
        })
    }

    fn channel(&self) -> Channel {
        Channel { mode: self.power_mode, power: self.power, noise_var: self.channel_noise_var }
    }

    fn sigma(&self) -> Result<f64> {
        let s = self.sigma.ok_or_else(|| Error::invalid("sigma", "is required (--sigma or config file)"))?;
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be positive, got {s}")));
        }
        Ok(s)
    }

    fn theta(&self) -> Result<f64> {
        self.theta.ok_or_else(|| Error::invalid("theta", "is required (--theta or config file)"))
    }

    fn theta_range(&self) -> Option<f64> {
        self.theta_range.or(self.theta.map(|t| 2.0 * t))
    }

    /// `2π/θ_R`, unbounded when no range is known.
    fn omega_max(&self) -> f64 {
        self.theta_range().map_or(f64::INFINITY, |r| std::f64::consts::TAU / r)
    }

    fn gamma(&self) -> Option<f64> {
        self.gamma_guess.or_else(|| Some((self.theta? / self.sigma?).powi(2)))
    }

    fn resolve_omega(&self, default: OmegaSpec) -> Result<(f64, Option<Boundary>)> {
        match self.omega.unwrap_or(default) {
            OmegaSpec::Value(w) => Ok((w, None)),
            OmegaSpec::Auto(target) => {
                let gamma = match target {
                    Estimand::Gamma => Some(self.gamma().ok_or_else(|| {
                        Error::invalid("gamma_guess", "--omega auto:gamma needs --gamma-guess (or both --theta and --sigma)")
                    })?),
                    _ => None,
                };
                let choice = optimal_omega(self.model, self.sigma()?, &self.channel(), target, gamma, self.omega_max())?;
                Ok((substitute_small(&choice, self.omega_max()), Some(choice.boundary)))
            }
        }
    }

    fn network(&self, omega: f64) -> Result<NetworkConfig> {
        let theta = self.theta()?;
        let cfg = NetworkConfig {
            sensors: self.sensors,
            theta,
            theta_range: self.theta_range().unwrap_or(2.0 * theta),
            sigma: self.sigma()?,
            model: self.model,
            power_mode: self.power_mode,
            power: self.power,
            channel_noise_var: self.channel_noise_var,
            omega,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn substitute_small(choice: &OmegaChoice, omega_max: f64) -> f64 {
    match choice.boundary {
        Boundary::Lower => SMALL_OMEGA.min(omega_max),
        _ => choice.omega,
    }
}

enum Failure {
    Error(Error),
    Io(std::io::Error),
    Strict(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    configure_threads();
    match run(cli.command) {
        Ok(()) => 0,
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(Failure::Strict(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0) {
        // a pool may already exist when embedded; keep it
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Asv(net) => cmd_asv(&net),
        Command::OptOmega(args) => cmd_opt_omega(&args),
        Command::Are(args) => cmd_are(&args),
        Command::Sweep(args) => cmd_sweep(&args),
    }
}

/// Writes `body` to `out` (plus a manifest sidecar) or to stdout.
fn emit_json<T: Serialize>(value: &T, out: Option<&Path>, manifest: Option<RunManifest>) -> std::result::Result<(), Failure> {
    let body = serde_json::to_string_pretty(value).map_err(std::io::Error::other)? + "\n";
    match out {
        Some(path) => {
            fs::write(path, body)?;
            if let Some(m) = manifest {
                let side = sidecar_path(path);
                fs::write(side, serde_json::to_string_pretty(&m).map_err(std::io::Error::other)? + "\n")?;
            }
        }
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

#[derive(Debug, Serialize)]
struct SnapshotSummary {
    y_re: f64,
    y_im: f64,
    z_re: f64,
    z_im: f64,
    z_abs: f64,
    #[serde(rename = "L")]
    sensors: usize,
}

#[derive(Debug, Serialize)]
struct SimulateOutput {
    #[serde(flatten)]
    estimates: EstimateSet,
    omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_boundary: Option<Boundary>,
    snapshot: SnapshotSummary,
}

fn cmd_simulate(args: &SimulateArgs) -> std::result::Result<(), Failure> {
    let params = Params::from_args(&args.net)?;
    params.theta()?;
    params.sigma()?;
    let (omega, boundary) = params.resolve_omega(OmegaSpec::Auto(Estimand::Theta))?;
    let cfg = params.network(omega)?;
    let snap = simulate_snapshot(&cfg, &mut RandomStream::new(cfg.seed));
    let estimates = estimate_all(snap.z, cfg.omega, cfg.power, cfg.model)?;
    let output = SimulateOutput {
        estimates,
        omega,
        omega_boundary: boundary,
        snapshot: SnapshotSummary { y_re: snap.y.re, y_im: snap.y.im, z_re: snap.z.re, z_im: snap.z.im, z_abs: snap.z.norm(), sensors: cfg.sensors },
    };
    let manifest = RunManifest::new("simulate", &cfg, args.net.out.as_ref().map(|p| p.display().to_string()), None);
    emit_json(&output, args.net.out.as_deref(), Some(manifest))?;
    if args.strict && estimates.saturated {
        return Err(Failure::Strict(
            Error::Saturated { magnitude: snap.z.norm(), limit: cfg.power.sqrt() }.to_string(),
        ));
    }
    Ok(())
}

fn cmd_asv(net: &NetArgs) -> std::result::Result<(), Failure> {
    let params = Params::from_args(net)?;
    let sigma = params.sigma()?;
    let (omega, _) = params.resolve_omega(OmegaSpec::Auto(Estimand::Theta))?;
    if !(omega > 0.0) || omega > params.omega_max() * (1.0 + 4.0 * f64::EPSILON) {
        return Err(Error::invalid("omega", format!("must lie in (0, {}], got {omega}", params.omega_max())).into());
    }
    let report = asv_generic(params.model, sigma, omega, &params.channel(), params.theta);
    emit_json(&report, net.out.as_deref(), None)
}

#[derive(Debug, Serialize)]
struct TargetOutput {
    target: Estimand,
    omega: f64,
    boundary: Boundary,
    asv: f64,
    analytic: Option<AnalyticOmega>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analytic_error: Option<String>,
}

fn cmd_opt_omega(args: &OptOmegaArgs) -> std::result::Result<(), Failure> {
    let params = Params::from_args(&args.net)?;
    let sigma = params.sigma()?;
    let channel = params.channel();
    let omega_max = params.omega_max();
    match args.target {
        Some(target) => {
            let gamma = match target {
                Estimand::Gamma => {
                    Some(params.gamma().ok_or_else(|| Error::invalid("gamma_guess", "the gamma target needs --gamma-guess"))?)
                }
                _ => None,
            };
            let choice = optimal_omega(params.model, sigma, &channel, target, gamma, omega_max)?;
            let analytic = analytic_omega(params.model, sigma, &channel, target, gamma, omega_max);
            let output = TargetOutput {
                target,
                omega: choice.omega,
                boundary: choice.boundary,
                asv: choice.asv,
                analytic_error: analytic.as_ref().err().map(ToString::to_string),
                analytic: analytic.ok(),
            };
            emit_json(&output, args.net.out.as_deref(), None)
        }
        None => {
            let gamma = params
                .gamma()
                .ok_or_else(|| Error::invalid("gamma_guess", "without --target all three optima are computed; pass --gamma-guess"))?;
            let optima = optimal_omegas(params.model, sigma, &channel, gamma, omega_max)?;
            emit_json(&optima, args.net.out.as_deref(), None)
        }
    }
}

pub fn efficiency_table(models: &[NoiseModel]) -> Result<Vec<EfficiencyReport>> {
    let mut reports = Vec::new();
    for &m in models {
        for p in [Estimand::Theta, Estimand::Sigma] {
            reports.push(asymptotic_relative_efficiency(m, p, 1.0, f64::INFINITY)?);
        }
    }
    Ok(reports)
}

pub fn format_efficiency_table(reports: &[EfficiencyReport]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<10} {:<6} {:>8} {:>10}  note", "model", "param", "are", "published");
    for r in reports {
        let note = if r.discrepancy { "DISCREPANCY (published value differs)" } else { "" };
        let line = format!("{:<10} {:<6} {:>8.3} {:>10.2}  {}", r.model.token(), r.parameter.token(), r.are, r.published, note);
        let _ = writeln!(s, "{}", line.trim_end());
    }
    s
}

fn cmd_are(args: &AreArgs) -> std::result::Result<(), Failure> {
    let models: Vec<NoiseModel> = match args.model {
        Some(m) => vec![m],
        None => NoiseModel::ALL.to_vec(),
    };
    let reports = efficiency_table(&models)?;
    if args.json {
        return emit_json(&reports, args.out.as_deref(), None);
    }
    let table = format_efficiency_table(&reports);
    match &args.out {
        Some(path) => fs::write(path, table)?,
        None => print!("{table}"),
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> std::result::Result<(), Failure> {
    let params = Params::from_args(&args.net)?;
    let grid = &args.grid.0;
    let mut p = params.clone();
    let (omega, rule) = match args.axis {
        SweepAxis::Omega => (grid[0], OmegaRule::Fixed),
        SweepAxis::Sigma => {
            p.sigma = Some(grid[0]);
            match params.omega {
                Some(OmegaSpec::Value(w)) => (w, OmegaRule::Fixed),
                Some(OmegaSpec::Auto(t)) => (p.resolve_omega(OmegaSpec::Auto(t))?.0, OmegaRule::Auto(t)),
                None => (p.resolve_omega(OmegaSpec::Auto(Estimand::Theta))?.0, OmegaRule::Auto(Estimand::Theta)),
            }
        }
    };
    let base = p.network_unchecked(omega)?;
    // ω (and σ on a σ sweep) is checked per row; everything else up front
    NetworkConfig { omega: base.omega_max(), ..base.clone() }.validate()?;
    let rows = sweep(&base, args.axis, grid, args.trials, rule)?;
    let manifest = RunManifest::new("sweep", &base, args.net.out.as_ref().map(|p| p.display().to_string()), Some(args.trials));
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows, Some(&manifest))?;
    match &args.net.out {
        Some(path) => fs::write(path, buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    for row in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("warning: {}={} failed: {}", row.axis.token(), row.value, row.error.as_deref().unwrap_or(""));
    }
    Ok(())
}

impl Params {
    /// Like [`Params::network`] but leaves ω unchecked; sweeps validate per row.
    fn network_unchecked(&self, omega: f64) -> Result<NetworkConfig> {
        let theta = self.theta()?;
        Ok(NetworkConfig {
            sensors: self.sensors,
            theta,
            theta_range: self.theta_range().unwrap_or(2.0 * theta),
            sigma: self.sigma()?,
            model: self.model,
            power_mode: self.power_mode,
            power: self.power,
            channel_noise_var: self.channel_noise_var,
            omega,
            seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_spec_parsing() {
        assert_eq!("0.5".parse::<OmegaSpec>().unwrap(), OmegaSpec::Value(0.5));
        assert_eq!("auto:gamma".parse::<OmegaSpec>().unwrap(), OmegaSpec::Auto(Estimand::Gamma));
        assert!("auto:mu".parse::<OmegaSpec>().is_err());
        assert!("fast".parse::<OmegaSpec>().is_err());
    }

    #[test]
    fn omega_spec_in_config_json() {
        let c: ConfigFile = serde_json::from_str(r#"{"omega": "auto:sigma", "L": 50}"#).unwrap();
        assert_eq!(c.omega, Some(OmegaSpec::Auto(Estimand::Sigma)));
        let c: ConfigFile = serde_json::from_str(r#"{"omega": 0.25}"#).unwrap();
        assert_eq!(c.omega, Some(OmegaSpec::Value(0.25)));
        assert!(serde_json::from_str::<ConfigFile>(r#"{"omgea": 1}"#).is_err());
    }

    #[test]
    fn grid_parsing() {
        let g: Grid = "0.05:2.0:40".parse().unwrap();
        assert_eq!(g.0.len(), 40);
        assert_eq!(g.0[0], 0.05);
        assert_eq!(g.0[39], 2.0);
        assert_eq!("1:1:1".parse::<Grid>().unwrap().0, vec![1.0]);
        assert!("1:2".parse::<Grid>().is_err());
        assert!("2:1:5".parse::<Grid>().is_err());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("/tmp/a.json")), PathBuf::from("/tmp/a.json.manifest.json"));
    }

    #[test]
    fn are_table_flags_laplace_scale() {
        let t = format_efficiency_table(&efficiency_table(&[NoiseModel::Laplace]).unwrap());
        let sigma_line = t.lines().find(|l| l.contains("sigma")).unwrap();
        assert!(sigma_line.contains("0.931") && sigma_line.contains("DISCREPANCY"));
    }
}
