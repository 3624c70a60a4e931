//! Choice of the modulation parameter ω.
//!
//! The optimum is found numerically by minimizing the generic asymptotic
//! variance over `a = ωσ`. The printed optimality equations for each family are
//! evaluated separately in [`analytic_omega`] and compared with the numeric
//! result; several of them disagree and are reported as such.

use serde::{Deserialize, Serialize};

use crate::asv::{asv_sigma, asv_theta, compose_gamma, Channel, Estimand};
use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::numkit::{lambert_w0, minimize_quasiconvex, real_roots_in_interval, scan_roots, Boundary, GOLDEN_TOL, ROOT_SCAN_STEPS};
use crate::simnet::PowerMode;

/// Smallest `ωσ` the search considers; a boundary result here stands for the 0⁺ infimum.
pub const MIN_OMEGA_SIGMA: f64 = 1e-4;
/// Largest `ωσ` the search considers when `ω_max` does not bind.
pub const MAX_OMEGA_SIGMA: f64 = 20.0;
/// Fallback ω when the infimum sits at 0⁺.
pub const SMALL_OMEGA: f64 = 0.01;

const BETA_LO: f64 = 1e-9;
const BETA_HI: f64 = 50.0;
const AGREE_RTOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaChoice {
    pub omega: f64,
    pub boundary: Boundary,
    /// Target variance at `omega`.
    pub asv: f64,
}

/// The asymptotic variance being minimized, as a function of ω.
pub fn target_asv(model: NoiseModel, sigma: f64, omega: f64, noise_ratio: f64, target: Estimand, gamma: f64) -> f64 {
    match target {
        Estimand::Theta => asv_theta(model, sigma, omega, noise_ratio),
        Estimand::Sigma => asv_sigma(model, sigma, omega, noise_ratio),
        Estimand::Gamma => compose_gamma(
            asv_theta(model, sigma, omega, noise_ratio),
            asv_sigma(model, sigma, omega, noise_ratio),
            gamma,
            sigma,
        ),
    }
}

pub fn optimal_omega(
    model: NoiseModel,
    sigma: f64,
    channel: &Channel,
    target: Estimand,
    gamma: Option<f64>,
    omega_max: f64,
) -> Result<OmegaChoice> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    if !(omega_max > 0.0) {
        return Err(Error::invalid("omega_max", format!("must be positive, got {omega_max}")));
    }
    let g = match (target, gamma) {
        (Estimand::Gamma, None) => return Err(Error::invalid("gamma", "the SNR target needs a value of γ")),
        (Estimand::Gamma, Some(g)) if !(g > 0.0) => return Err(Error::invalid("gamma", format!("must be positive, got {g}"))),
        (_, g) => g.unwrap_or(0.0),
    };
    let r = channel.noise_ratio();
    let hi = (omega_max * sigma).min(MAX_OMEGA_SIGMA);
    if hi <= MIN_OMEGA_SIGMA {
        return Err(Error::Domain(format!("omega_max * sigma = {} leaves no room to search", omega_max * sigma)));
    }
    let f = |a: f64| target_asv(model, sigma, a / sigma, r, target, g);
    let m = minimize_quasiconvex(f, MIN_OMEGA_SIGMA, hi, GOLDEN_TOL)?;
    Ok(OmegaChoice { omega: m.argmin / sigma, boundary: m.boundary, asv: m.value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaFlags {
    pub theta: Boundary,
    pub sigma: Boundary,
    pub gamma: Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OmegaMethod {
    Numeric,
    Analytic,
    BothAgree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaOptima {
    pub omega_theta: f64,
    pub omega_sigma: f64,
    pub omega_gamma: f64,
    pub flags: OmegaFlags,
    pub method: OmegaMethod,
}

impl OmegaOptima {
    pub fn get(&self, target: Estimand) -> (f64, Boundary) {
        match target {
            Estimand::Theta => (self.omega_theta, self.flags.theta),
            Estimand::Sigma => (self.omega_sigma, self.flags.sigma),
            Estimand::Gamma => (self.omega_gamma, self.flags.gamma),
        }
    }
}

/// All three optima. `method` is `both-agree` when every printed equation
/// for this family and power mode reproduces the numeric optimum.
pub fn optimal_omegas(model: NoiseModel, sigma: f64, channel: &Channel, gamma: f64, omega_max: f64) -> Result<OmegaOptima> {
    let t = optimal_omega(model, sigma, channel, Estimand::Theta, None, omega_max)?;
    let s = optimal_omega(model, sigma, channel, Estimand::Sigma, None, omega_max)?;
    let g = optimal_omega(model, sigma, channel, Estimand::Gamma, Some(gamma), omega_max)?;
    let all_agree = Estimand::ALL
        .iter()
        .all(|&target| analytic_omega(model, sigma, channel, target, Some(gamma), omega_max).is_ok_and(|a| a.agrees));
    Ok(OmegaOptima {
        omega_theta: t.omega,
        omega_sigma: s.omega,
        omega_gamma: g.omega,
        flags: OmegaFlags { theta: t.boundary, sigma: s.boundary, gamma: g.boundary },
        method: if all_agree { OmegaMethod::BothAgree } else { OmegaMethod::Numeric },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticOmega {
    /// ω from the printed equation with its stated `ω = √β/σ` mapping;
    /// `None` when the equation only states a limit (ω → 0⁺).
    pub omega: Option<f64>,
    /// Second reading where one exists: the `√(2β)/σ` mapping for the Laplace
    /// forms, the factor-corrected equation for the Gaussian scale target.
    pub alternate: Option<f64>,
    pub numeric: OmegaChoice,
    pub agrees: bool,
    pub equation: &'static str,
}

/// Gaussian θ stationarity in `β = ω²σ²`.
pub fn gaussian_theta_equation(beta: f64, r: f64) -> f64 {
    (r + 1.0) * (beta - 1.0) * (2.0 * beta).exp() + (beta + 1.0)
}

/// Gaussian σ stationarity as printed.
pub fn gaussian_sigma_equation_printed(beta: f64, r: f64) -> f64 {
    let e2 = (r + 1.0) * (2.0 * beta).exp();
    beta * (e2 - 1.0) - e2 + 2.0 * beta.exp() - 1.0
}

/// Gaussian σ stationarity obtained by differentiating the variance directly.
pub fn gaussian_sigma_equation_derived(beta: f64, r: f64) -> f64 {
    let e2 = (r + 1.0) * (2.0 * beta).exp();
    beta * (e2 - 1.0) - 2.0 * (e2 - 2.0 * beta.exp() + 1.0)
}

/// Gaussian γ stationarity as printed.
pub fn gaussian_gamma_equation(beta: f64, r: f64, gamma: f64) -> f64 {
    let e2 = (r + 1.0) * (2.0 * beta).exp();
    beta * (beta * (e2 + 1.0) - e2 + 1.0) + gamma * (beta * (e2 - 1.0) - 2.0 * (e2 - 2.0 * beta.exp() + 1.0))
}

/// Closed-form Laplace θ root `β` (cube-root expression).
pub fn laplace_theta_beta(r: f64) -> f64 {
    let c3 = 125.0 * r.powi(3) + 258.0 * r * r + 141.0 * r + 3.0 * 3f64.sqrt() * (r * (r + 1.0).powi(3) * (375.0 * r + 32.0)).sqrt() + 8.0;
    let c = c3.cbrt();
    (c / (r + 1.0) + (25.0 * r + 4.0) / c + 2.0) / 12.0
}

/// Laplace σ quintic, coefficients in ascending powers of β.
pub fn laplace_sigma_quintic(r: f64) -> [f64; 6] {
    [-r, -9.0 * r, -23.0 * r, -(7.0 * r + 8.0), 2.0 * (12.0 * r + 13.0), 16.0 * (r + 1.0)]
}

/// Laplace γ quintic, coefficients in ascending powers of β.
pub fn laplace_gamma_quintic(r: f64, g: f64) -> [f64; 6] {
    [
        -g * r,
        -9.0 * g * r,
        -(23.0 * g + 2.0) * r,
        7.0 * (7.0 * g * r - 14.0 * r - 8.0 * g),
        2.0 * (13.0 * g - 8.0 + 12.0 * g * r - 8.0 * r),
        16.0 * (g + 2.0 + g * r + 2.0 * r),
    ]
}

/// Lambert-W optimum for Cauchy noise (`r = 0` gives the per-sensor value).
pub fn cauchy_omega(sigma: f64, r: f64) -> Result<f64> {
    let w = lambert_w0(-2.0 / ((1.0 + r) * std::f64::consts::E.powi(2)))?;
    Ok((2.0 + w) / (2.0 * sigma))
}

/// Evaluates the printed optimality condition for this family, power mode and
/// target, and compares it with [`optimal_omega`] at 1e-4 relative.
///
/// β-equations are scanned on (1e-9, 50]; when several roots exist the one
/// with the smallest target variance is kept.
pub fn analytic_omega(
    model: NoiseModel,
    sigma: f64,
    channel: &Channel,
    target: Estimand,
    gamma: Option<f64>,
    omega_max: f64,
) -> Result<AnalyticOmega> {
    use Estimand::*;
    use NoiseModel::*;

    let numeric = optimal_omega(model, sigma, channel, target, gamma, omega_max)?;
    let g = gamma.unwrap_or(0.0);
    let r = channel.noise_ratio();
    let per_sensor = channel.mode == PowerMode::PerSensor;
    let asv_at = |w: f64| target_asv(model, sigma, w, r, target, g);
    let best_root = |roots: Vec<f64>, equation: &'static str| -> Result<f64> {
        roots
            .into_iter()
            .min_by(|a, b| asv_at(a.sqrt() / sigma).total_cmp(&asv_at(b.sqrt() / sigma)))
            .ok_or(Error::NoRealRoot { equation, lo: BETA_LO, hi: BETA_HI })
    };
    let scan = |f: &dyn Fn(f64) -> f64| scan_roots(f, BETA_LO, BETA_HI, ROOT_SCAN_STEPS);
    let from_beta = |b: f64| b.sqrt() / sigma;

    let (omega, alternate, equation): (Option<f64>, Option<f64>, &'static str) = match (model, per_sensor, target) {
        (Gaussian, true, _) => (None, None, "gaussian per-sensor limit omega -> 0+"),
        (Gaussian, false, Theta) => {
            let eq = "gaussian location stationarity";
            let b = best_root(scan(&|b| gaussian_theta_equation(b, r)), eq)?;
            (Some(from_beta(b)), None, eq)
        }
        (Gaussian, false, Sigma) => {
            let eq = "gaussian scale stationarity (printed)";
            let b = best_root(scan(&|b| gaussian_sigma_equation_printed(b, r)), eq)?;
            let alt = best_root(scan(&|b| gaussian_sigma_equation_derived(b, r)), "gaussian scale stationarity (derived)").ok();
            (Some(from_beta(b)), alt.map(from_beta), eq)
        }
        (Gaussian, false, Gamma) => {
            let eq = "gaussian snr stationarity";
            let b = best_root(scan(&|b| gaussian_gamma_equation(b, r, g)), eq)?;
            (Some(from_beta(b)), None, eq)
        }
        (Laplace, false, Theta) => {
            let b = laplace_theta_beta(r);
            (Some(from_beta(b)), Some(from_beta(2.0 * b)), "laplace location cube-root formula")
        }
        (Laplace, false, Sigma) => {
            let eq = "laplace scale quintic";
            let b = best_root(real_roots_in_interval(&laplace_sigma_quintic(r), BETA_LO, BETA_HI), eq)?;
            (Some(from_beta(b)), Some(from_beta(2.0 * b)), eq)
        }
        (Laplace, false, Gamma) => {
            let eq = "laplace snr quintic";
            let b = best_root(real_roots_in_interval(&laplace_gamma_quintic(r, g), BETA_LO, BETA_HI), eq)?;
            (Some(from_beta(b)), Some(from_beta(2.0 * b)), eq)
        }
        (Laplace, true, Theta) => (Some(1.0 / sigma), None, "laplace per-sensor location optimum 1/sigma"),
        (Laplace, true, Sigma) => {
            let u = (3.0 * 33f64.sqrt() - 13.0) / 8.0;
            (Some(u.sqrt() / sigma), None, "laplace per-sensor scale radical")
        }
        (Laplace, true, Gamma) => {
            let inner = -13.0 * g - 16.0 + ((9.0 * g + 16.0) * (33.0 * g + 16.0)).sqrt();
            (Some(inner.sqrt() / (4.0 * sigma * g.sqrt())), None, "laplace per-sensor snr radical")
        }
        (Cauchy, _, _) => (Some(cauchy_omega(sigma, r)?), None, "cauchy lambert-w optimum"),
    };

    let agrees = match omega {
        Some(w) => (w - numeric.omega).abs() <= AGREE_RTOL * numeric.omega,
        None => numeric.boundary == Boundary::Lower,
    };
    Ok(AnalyticOmega { omega, alternate, numeric, agrees, equation })
}

/// Checks that `f` sampled on `n` points of `[lo, hi]` decreases then increases.
pub fn is_unimodal<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> bool {
    let ys: Vec<f64> = (0..n).map(|i| f(lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect();
    let slack = |y: f64| 1e-12 * y.abs();
    let mut rising = false;
    for w in ys.windows(2) {
        if w[1] > w[0] + slack(w[0]) {
            rising = true;
        } else if rising && w[1] < w[0] - slack(w[0]) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use NoiseModel::*;

    const NO_CAP: f64 = f64::INFINITY;

    fn ps() -> Channel {
        Channel::per_sensor(1.0)
    }

    #[test]
    fn laplace_per_sensor_location_is_one_over_sigma() {
        for &s in &[0.5, 1.0, 3.0] {
            let c = optimal_omega(Laplace, s, &ps(), Estimand::Theta, None, NO_CAP).unwrap();
            assert!((c.omega * s - 1.0).abs() < 1e-8, "{}", c.omega * s);
        }
    }

    #[test]
    fn cauchy_per_sensor_lambert_value() {
        let w = lambert_w0(-2.0 * (-2.0f64).exp()).unwrap();
        for target in Estimand::ALL {
            let c = optimal_omega(Cauchy, 1.0, &ps(), target, Some(2.0), NO_CAP).unwrap();
            assert!((c.omega - (1.0 + 0.5 * w)).abs() < 1e-10, "{target}: {}", c.omega);
        }
        assert!((cauchy_omega(1.0, 0.0).unwrap() - 0.796_812_130_020_020_0).abs() < 1e-12);
    }

    #[test]
    fn laplace_per_sensor_scale_radical() {
        let c = optimal_omega(Laplace, 2.0, &ps(), Estimand::Sigma, None, NO_CAP).unwrap();
        assert!((c.omega * 2.0 - 0.727_468_894_490_864_6).abs() < 1e-9);
    }

    #[test]
    fn laplace_per_sensor_snr_optimum() {
        let c = optimal_omega(Laplace, 1.0, &ps(), Estimand::Gamma, Some(1.0), NO_CAP).unwrap();
        assert!((c.omega - 0.821_641).abs() < 1e-5, "{}", c.omega);
    }

    #[test]
    fn gaussian_per_sensor_is_lower_boundary() {
        for target in Estimand::ALL {
            let c = optimal_omega(Gaussian, 1.0, &ps(), target, Some(1.0), NO_CAP).unwrap();
            assert_eq!(c.boundary, Boundary::Lower, "{target}");
        }
    }

    #[test]
    fn upper_boundary_when_omega_max_binds() {
        let c = optimal_omega(Laplace, 1.0, &ps(), Estimand::Theta, None, 0.5).unwrap();
        assert_eq!(c.boundary, Boundary::Upper);
        assert!((c.omega - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gamma_target_requires_gamma() {
        assert!(optimal_omega(Laplace, 1.0, &ps(), Estimand::Gamma, None, NO_CAP).is_err());
    }

    #[test]
    fn total_power_reference_optima() {
        let ch = Channel::total(1.0, 1.0);
        let cases = [
            (Gaussian, Estimand::Theta, 0.908_114),
            (Gaussian, Estimand::Sigma, 1.301_962),
            (Laplace, Estimand::Theta, 1.276_96),
            (Laplace, Estimand::Sigma, 1.261_77),
            (Cauchy, Estimand::Theta, 0.920_703),
        ];
        for (m, t, expected) in cases {
            let c = optimal_omega(m, 1.0, &ch, t, None, NO_CAP).unwrap();
            assert!((c.omega - expected).abs() < 2e-6, "{m} {t}: {}", c.omega);
        }
    }

    #[test]
    fn gaussian_printed_equation_round_trips() {
        let a = analytic_omega(Gaussian, 1.0, &Channel::total(1.0, 1.0), Estimand::Theta, None, NO_CAP).unwrap();
        assert!((a.omega.unwrap().powi(2) - 0.824_670_626_894_092_5).abs() < 1e-8);
        assert!(a.agrees);
    }

    #[test]
    fn gaussian_scale_printed_vs_derived() {
        let a = analytic_omega(Gaussian, 1.0, &Channel::total(1.0, 1.0), Estimand::Sigma, None, NO_CAP).unwrap();
        assert!((a.omega.unwrap().powi(2) - 0.716_266).abs() < 1e-5);
        assert!(!a.agrees);
        let alt = a.alternate.unwrap();
        assert!((alt.powi(2) - 1.695_106).abs() < 1e-5);
        assert!((alt - a.numeric.omega).abs() < 1e-4 * alt);
    }

    #[test]
    fn gaussian_snr_equation_reduces_at_zero_gamma() {
        for &r in &[0.0, 0.5, 1.0, 2.0] {
            for i in 1..100 {
                let b = 0.05 * i as f64;
                let lhs = gaussian_gamma_equation(b, r, 0.0);
                let rhs = b * gaussian_theta_equation(b, r);
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            }
        }
    }

    #[test]
    fn gaussian_location_equation_has_no_positive_root_without_noise() {
        assert!((gaussian_theta_equation(1e-9, 0.0)).abs() < 1e-12);
        assert!(scan_roots(|b| gaussian_theta_equation(b, 0.0), BETA_LO, BETA_HI, ROOT_SCAN_STEPS).is_empty());
    }

    #[test]
    fn laplace_total_power_location_mapping() {
        let ch = Channel::total(1.0, 1.0);
        let a = analytic_omega(Laplace, 1.0, &ch, Estimand::Theta, None, NO_CAP).unwrap();
        assert!((laplace_theta_beta(1.0) - 0.815_313_042_592_231_6).abs() < 1e-10);
        assert!(!a.agrees);
        assert!((a.alternate.unwrap() - a.numeric.omega).abs() < 1e-4 * a.numeric.omega);
        assert!((laplace_theta_beta(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn laplace_scale_quintic_uses_half_beta() {
        let ch = Channel::total(1.0, 1.0);
        let a = analytic_omega(Laplace, 1.0, &ch, Estimand::Sigma, None, NO_CAP).unwrap();
        assert!((a.alternate.unwrap() - a.numeric.omega).abs() < 1e-4 * a.numeric.omega);
    }

    #[test]
    fn laplace_per_sensor_snr_radical_is_off() {
        let a = analytic_omega(Laplace, 1.0, &ps(), Estimand::Gamma, Some(1.0), NO_CAP).unwrap();
        assert!((a.omega.unwrap() - 6f64.sqrt() / 4.0).abs() < 1e-12);
        assert!(!a.agrees);
    }

    #[test]
    fn cauchy_total_power_agrees() {
        let ch = Channel::total(1.0, 1.0);
        let a = analytic_omega(Cauchy, 1.0, &ch, Estimand::Theta, None, NO_CAP).unwrap();
        assert!((a.omega.unwrap() - 0.920_702_830_218_480_3).abs() < 1e-12);
        assert!(a.agrees);
    }

    #[test]
    fn method_reports_agreement() {
        let o = optimal_omegas(Cauchy, 1.0, &ps(), 1.0, NO_CAP).unwrap();
        assert_eq!(o.method, OmegaMethod::BothAgree);
        let o = optimal_omegas(Laplace, 1.0, &ps(), 1.0, NO_CAP).unwrap();
        assert_eq!(o.method, OmegaMethod::Numeric);
        let v = serde_json::to_value(o).unwrap();
        assert_eq!(v["method"], "numeric");
        assert_eq!(v["flags"]["theta"], "interior");
    }

    #[test]
    fn per_sensor_optimum_scales_with_sigma() {
        for m in [Laplace, Cauchy] {
            for t in Estimand::ALL {
                let a = optimal_omega(m, 0.5, &ps(), t, Some(3.0), NO_CAP).unwrap();
                let b = optimal_omega(m, 2.0, &ps(), t, Some(3.0), NO_CAP).unwrap();
                assert!((a.omega * 0.5 - b.omega * 2.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn unimodality_check() {
        assert!(is_unimodal(|x| (x - 1.0).powi(2), 0.0, 3.0, 1000));
        assert!(!is_unimodal(|x| (3.0 * x).sin(), 0.0, 6.0, 1000));
    }
}
