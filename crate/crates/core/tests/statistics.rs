use cmphase::asv::{asv_generic, Channel};
use cmphase::mc::{run_experiment, sweep, OmegaRule, SweepAxis};
use cmphase::noise::NoiseModel;
use cmphase::numkit::RandomStream;
use cmphase::simnet::{simulate_snapshot, NetworkConfig, PowerMode};
use num_complex::Complex64;

fn config(model: NoiseModel, mode: PowerMode, sensors: usize, noise_var: f64, omega: f64) -> NetworkConfig {
    NetworkConfig {
        sensors,
        theta: 1.0,
        theta_range: 2.0,
        sigma: 1.0,
        model,
        power_mode: mode,
        power: 1.0,
        channel_noise_var: noise_var,
        omega,
        seed: 11,
    }
}

#[test]
fn samples_match_characteristic_function() {
    let n = 200_000;
    for model in NoiseModel::ALL {
        let mut rng = RandomStream::new(5);
        let draws: Vec<f64> = (0..n).map(|_| model.sample(&mut rng)).collect();
        for t in [0.3, 1.0, 2.0] {
            let emp = draws.iter().map(|e| (t * e).cos()).sum::<f64>() / n as f64;
            let se = (model.cf_complement(2.0 * t).max(1e-3) / n as f64).sqrt();
            assert!((emp - model.cf(t)).abs() < 5.0 * se + 1e-3, "{model} t={t}: {emp} vs {}", model.cf(t));
            let odd = draws.iter().map(|e| (t * e).sin()).sum::<f64>() / n as f64;
            assert!(odd.abs() < 0.01, "{model} t={t}: sine mean {odd}");
        }
    }
}

#[test]
fn gaussian_samples_have_unit_variance() {
    let mut rng = RandomStream::new(1);
    let n = 100_000;
    let xs: Vec<f64> = (0..n).map(|_| NoiseModel::Gaussian.sample(&mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!(mean.abs() < 0.015);
    assert!((var - 1.0).abs() < 0.02);
}

#[test]
fn normalized_statistic_concentrates_on_its_mean() {
    for model in NoiseModel::ALL {
        let omega = 0.8;
        let cfg = config(model, PowerMode::PerSensor, 10_000, 0.0, omega);
        let mut rng = RandomStream::new(3);
        let reps = 200;
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..reps {
            acc += simulate_snapshot(&cfg, &mut rng).z;
        }
        let mean = acc / reps as f64;
        let expected = Complex64::from_polar(model.char_fn(1.0, omega), omega);
        assert!((mean - expected).norm() < 2e-3, "{model}: {mean} vs {expected}");
    }
}

#[test]
fn total_power_scales_the_channel_noise() {
    let cfg = config(NoiseModel::Gaussian, PowerMode::TotalPower, 400, 4.0, 1.0);
    let mut rng = RandomStream::new(8);
    let reps = 4000;
    let zs: Vec<Complex64> = (0..reps).map(|_| simulate_snapshot(&cfg, &mut rng).z).collect();
    let mean = zs.iter().sum::<Complex64>() / reps as f64;
    let var = zs.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (reps - 1) as f64;
    // sensor part contributes (1 - φ²)/L, channel noise σν²/(P L)
    let phi = NoiseModel::Gaussian.char_fn(1.0, 1.0);
    let expected = (1.0 - phi * phi + 4.0) / 400.0;
    assert!((var / expected - 1.0).abs() < 0.06, "{var} vs {expected}");
}

#[test]
fn experiment_is_reproducible_and_thread_independent() {
    let cfg = config(NoiseModel::Laplace, PowerMode::TotalPower, 500, 0.5, 1.0);
    let a = run_experiment(&cfg, 300, 42).unwrap().without_timing();
    let b = run_experiment(&cfg, 300, 42).unwrap().without_timing();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| run_experiment(&cfg, 300, 42)).unwrap().without_timing();
    assert_eq!(a, b);
    assert_eq!(a, c);
    let d = run_experiment(&cfg, 300, 43).unwrap().without_timing();
    assert_ne!(a, d);
}

#[test]
fn moderate_network_tracks_asymptotic_variance() {
    let cfg = config(NoiseModel::Cauchy, PowerMode::TotalPower, 2000, 1.0, 0.9);
    let summary = run_experiment(&cfg, 1500, 17).unwrap();
    let asv = asv_generic(NoiseModel::Cauchy, 1.0, 0.9, &Channel::total(1.0, 1.0), Some(1.0));
    assert!((summary.theta.var_l / asv.asv_theta - 1.0).abs() < 0.15);
    assert!((summary.sigma.var_l / asv.asv_sigma - 1.0).abs() < 0.15);
    assert!(summary.theta.bias.abs() < 0.01);
    assert_eq!(summary.sigma.saturated, 0);
}

#[test]
fn sweep_rows_carry_asymptotics() {
    let cfg = config(NoiseModel::Gaussian, PowerMode::PerSensor, 200, 0.0, 0.5);
    let rows = sweep(&cfg, SweepAxis::Omega, &[0.5, 1.0, 1.5], 100, OmegaRule::Fixed).unwrap();
    assert_eq!(rows.len(), 3);
    for (row, w) in rows.iter().zip([0.5, 1.0, 1.5]) {
        assert_eq!(row.omega, w);
        assert!(row.error.is_none());
        assert!(row.summary.is_some());
        let asv = row.asv.as_ref().unwrap();
        assert_eq!(asv.omega, w);
    }
}

#[test]
fn sweep_marks_out_of_range_rows() {
    let cfg = config(NoiseModel::Gaussian, PowerMode::PerSensor, 50, 0.0, 0.5);
    let rows = sweep(&cfg, SweepAxis::Omega, &[1.0, 10.0], 20, OmegaRule::Fixed).unwrap();
    assert!(rows[0].error.is_none());
    assert!(rows[1].error.is_some());
    assert!(rows[1].summary.is_none());
}
