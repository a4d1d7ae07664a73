use spectral_stop::estimator::{estimate_at, residual_sq, stochastic_error, strong_bias_sq, RiskProfile, TruncationIndex};
use spectral_stop::lowerbound::{hide_signal, monte_carlo_risk, residual_adversary, AdversaryConditions, ConstantRule};
use spectral_stop::mc::{read_csv, run_experiment, write_csv, ExperimentConfig, Procedure};
use spectral_stop::model::{make_polynomial_spectrum, simulate_with_rng, NoiseModel, Signal};
use spectral_stop::numeric::mean_and_se;
use spectral_stop::rng;
use spectral_stop::signals::CalibratedProfile;

fn small(profile: CalibratedProfile, reps: usize) -> ExperimentConfig {
    ExperimentConfig { dimension: 2000, replications: reps, base_seed: 77, ..ExperimentConfig::reference(profile) }
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let config = small(CalibratedProfile::Smooth, 64);
    let csv = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let out = pool.install(|| run_experiment(&config).unwrap());
        let mut buf = Vec::new();
        write_csv(&out.records, &mut buf).unwrap();
        buf
    };
    let one = csv(1);
    assert_eq!(one, csv(4));
    assert_eq!(read_csv(&one[..]).unwrap().len(), 256);
}

#[test]
fn immediate_stop_accounting() {
    let run = |profile| {
        let config = ExperimentConfig {
            replications: 10_000,
            base_seed: 5,
            procedures: vec![Procedure::TwoStepStrong, Procedure::TwoStepWeak],
            ..ExperimentConfig::reference(profile)
        };
        run_experiment(&config).unwrap().report
    };
    let (smooth, rough) = (run(CalibratedProfile::Smooth), run(CalibratedProfile::Rough));
    for p in [Procedure::TwoStepStrong, Procedure::TwoStepWeak] {
        let s = smooth.procedure(p).unwrap().immediate_fraction;
        let r = rough.procedure(p).unwrap().immediate_fraction;
        assert!((s - 0.5).abs() <= 0.1, "smooth {s}");
        assert!(r <= 0.1, "rough {r}");
    }
}

#[test]
fn recorded_errors_match_the_risk_split() {
    let config = small(CalibratedProfile::SuperSmooth, 300);
    let setup = config.resolve().unwrap();
    let out = run_experiment(&config).unwrap();
    let plain: Vec<_> = out.records.iter().filter(|r| r.procedure == Procedure::PlainStop).collect();
    for r in &plain {
        let obs = simulate_with_rng(&setup.signal, &setup.spectrum, &setup.noise, &mut rng::split(77, r.rep as u64)).unwrap();
        let t = TruncationIndex::integer(r.tau);
        let split = strong_bias_sq(&setup.signal, t).unwrap() + stochastic_error(&obs, &setup.spectrum, t).unwrap();
        assert!((r.err_strong * r.err_strong - split).abs() <= 1e-10 * split);
    }
    let prof = RiskProfile::new(&setup.signal, &setup.spectrum, &setup.noise).unwrap();
    let risks: Vec<f64> = plain.iter().map(|r| r.err_strong * r.err_strong).collect();
    let expected: Vec<f64> = plain.iter().map(|r| prof.strong_bias_at(r.tau) + prof.strong_variance_at(r.tau)).collect();
    let (m1, se1) = mean_and_se(&risks);
    let (m2, se2) = mean_and_se(&expected);
    assert!((m1 - m2).abs() <= 3.0 * (se1 * se1 + se2 * se2).sqrt(), "{m1} vs {m2}");
}

#[test]
fn null_signal_energy_has_chi_square_moments() {
    let d = 300;
    let spectrum = make_polynomial_spectrum(d, 1.0).unwrap();
    let noise = NoiseModel::new(0.3).unwrap();
    let zero = Signal::zeros(d);
    let n = 4000;
    let stats: Vec<f64> = (0..n)
        .map(|r| simulate_with_rng(&zero, &spectrum, &noise, &mut rng::split(9, r)).unwrap().y_norm_sq() / noise.variance())
        .collect();
    let (mean, se) = mean_and_se(&stats);
    assert!((mean - d as f64).abs() <= 3.0 * se);
    let sq: Vec<f64> = stats.iter().map(|s| (s - mean).powi(2)).collect();
    let (var, var_se) = mean_and_se(&sq);
    assert!((var - 2.0 * d as f64).abs() <= 3.0 * var_se);
}

#[test]
fn residual_and_error_are_unbiased_at_fractional_levels() {
    let d = 120;
    let spectrum = make_polynomial_spectrum(d, 0.5).unwrap();
    let noise = NoiseModel::new(0.05).unwrap();
    let signal = CalibratedProfile::Smooth.signal(d);
    let prof = RiskProfile::new(&signal, &spectrum, &noise).unwrap();
    for t in [0.0, 3.0, 7.4, 19.5, 60.25, 120.0] {
        let idx = TruncationIndex::new(t, d).unwrap();
        let (mut res, mut err) = (Vec::new(), Vec::new());
        for r in 0..3000 {
            let obs = simulate_with_rng(&signal, &spectrum, &noise, &mut rng::split(21, r)).unwrap();
            res.push(residual_sq(&obs, idx).unwrap());
            let est = estimate_at(&obs, &spectrum, idx).unwrap();
            err.push(est.mu_hat.iter().zip(signal.coefficients()).map(|(a, b)| (a - b).powi(2)).sum());
        }
        let (rm, rse) = mean_and_se(&res);
        let (em, ese) = mean_and_se(&err);
        assert!((rm - prof.expected_residual(t)).abs() <= 3.0 * rse.max(1e-12), "residual at {t}");
        assert!((em - prof.strong_risk(t)).abs() <= 3.0 * ese.max(1e-12), "risk at {t}");
    }
}

#[test]
fn hidden_signal_floor_and_adversary_predicates() {
    let d = 400;
    let spectrum = make_polynomial_spectrum(d, 0.5).unwrap();
    let noise = NoiseModel::new(0.05).unwrap();
    let mu = CalibratedProfile::Smooth.signal(d);
    let m = RiskProfile::new(&mu, &spectrum, &noise).unwrap().strongly_balanced_discrete();
    let hidden = hide_signal(&mu, m, 1.0, 2.0).unwrap();
    let est = monte_carlo_risk(&ConstantRule(m), &hidden.mu_bar, &spectrum, &noise, 1000, 4).unwrap();
    assert!(est.risk_sq >= hidden.predicted_floor - 3.0 * est.risk_se);

    let adv = residual_adversary(&mu, &spectrum, &noise, m, 1.0, 2.0).unwrap();
    let again = AdversaryConditions::evaluate(&mu, &adv.mu_bar, &spectrum, &noise, m).unwrap();
    assert_eq!(Some(again), adv.conditions_met);
}
