mod common;

use proptest::prelude::*;
use spectral_stop::estimator::{strong_bias_sq, stochastic_error, RiskProfile, TruncationIndex};
use spectral_stop::model::{make_polynomial_spectrum, simulate_observation, NoiseModel, Observation, Signal, Spectrum};
use spectral_stop::oracles::Norm;
use spectral_stop::stopping::{early_stop, CoefficientStream, ObservationStream};

#[derive(Debug, Clone)]
struct Instance {
    lambda: Vec<f64>,
    mu: Vec<f64>,
    delta: f64,
}

impl Instance {
    fn d(&self) -> usize {
        self.mu.len()
    }

    fn parts(&self) -> (Spectrum, Signal, NoiseModel) {
        (
            Spectrum::new(self.lambda.clone(), None).unwrap(),
            Signal::new(self.mu.clone()),
            NoiseModel::new(self.delta).unwrap(),
        )
    }

    fn profile(&self) -> RiskProfile {
        let (s, m, n) = self.parts();
        RiskProfile::new(&m, &s, &n).unwrap()
    }
}

fn instance() -> impl Strategy<Value = Instance> {
    (2usize..160).prop_flat_map(|d| {
        (
            prop::collection::vec(0.05f64..1.0, d),
            prop::collection::vec(-3.0f64..3.0, d),
            0.0f64..3.0,
            0.005f64..0.5,
        )
            .prop_map(|(steps, raw, decay, delta)| {
                let mut lambda = Vec::with_capacity(steps.len());
                let mut cur = 1.0;
                for s in steps {
                    lambda.push(cur);
                    cur *= 1.0 - 0.5 * s;
                }
                let mu = raw.iter().enumerate().map(|(i, r)| r * ((i + 1) as f64).powf(-decay)).collect();
                Instance { lambda, mu, delta }
            })
    })
}

/// Counts the coefficients actually pulled from the stream.
struct Counting<'a> {
    inner: ObservationStream<'a>,
    pulled: usize,
}

impl CoefficientStream for Counting<'_> {
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }
    fn total_norm_sq(&self) -> f64 {
        self.inner.total_norm_sq()
    }
    fn next_coefficient(&mut self) -> Option<(usize, f64)> {
        self.pulled += 1;
        self.inner.next_coefficient()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn functionals_are_monotone_and_continuous(inst in instance()) {
        let p = inst.profile();
        let d = inst.d() as f64;
        let n = 400;
        let mut prev: Option<(f64, f64, f64, f64)> = None;
        for k in 0..=n {
            let t = d * k as f64 / n as f64;
            let cur = (p.strong_bias_sq(t), p.weak_bias_sq(t), p.strong_variance(t), p.expected_residual(t));
            prop_assert!((p.weak_variance(t) - t * inst.delta * inst.delta).abs() <= 1e-12 * (1.0 + t));
            if let Some(q) = prev {
                let tol = 1e-12 * (1.0 + q.0 + q.1 + q.2 + q.3);
                prop_assert!(cur.0 <= q.0 + tol && cur.1 <= q.1 + tol && cur.3 <= q.3 + tol);
                prop_assert!(cur.2 >= q.2 - tol);
            }
            prev = Some(cur);
        }
        for m in 1..inst.d() {
            let t = m as f64;
            for f in [RiskProfile::strong_bias_sq, RiskProfile::weak_bias_sq, RiskProfile::strong_variance] {
                let scale = 1.0 + f(&p, t).abs();
                prop_assert!((f(&p, t - 1e-9) - f(&p, t)).abs() <= 1e-4 * scale);
                prop_assert!((f(&p, t + 1e-9) - f(&p, t)).abs() <= 1e-4 * scale);
            }
        }
    }

    #[test]
    fn kappa_identity_and_ordering(inst in instance(), kappa_scale in 0.0f64..3.0, m0_frac in 0.0f64..1.0) {
        let p = inst.profile();
        let d = inst.d();
        let ds = inst.delta * inst.delta;
        let canon = p.oracle_set(d as f64 * ds, 0).unwrap();
        prop_assert!((canon.t_star - canon.t_w).abs() <= 1e-9);

        let kappa = kappa_scale * d as f64 * ds;
        let m0 = (m0_frac * d as f64) as usize;
        let o = p.oracle_set(kappa, m0).unwrap();
        let shift = (d as f64 - kappa / ds).max(0.0);
        prop_assert!(o.t_star - shift <= o.t_w + 1e-9);
        prop_assert!(o.t_w <= o.t_s + 1e-9);
    }

    #[test]
    fn proxy_and_weak_oracle_are_close(inst in instance(), kappa_scale in 0.0f64..3.0) {
        let p = inst.profile();
        let d = inst.d() as f64;
        let ds = inst.delta * inst.delta;
        let kappa = kappa_scale * d * ds;
        let o = p.oracle_set(kappa, 0).unwrap();
        let bias_gap = (p.weak_bias_sq(o.t_star) - p.weak_bias_sq(o.t_w)).max(0.0);
        let var_gap = (p.weak_variance(o.t_star) - p.weak_variance(o.t_w)).max(0.0);
        let tol = 1e-9 * (1.0 + d * ds);
        prop_assert!(bias_gap <= (kappa - d * ds).max(0.0) + tol);
        prop_assert!(var_gap <= (d * ds - kappa).max(0.0) + tol);
    }

    #[test]
    fn balanced_oracle_controls_classical(inst in instance()) {
        let p = inst.profile();
        let t_s = p.balanced_continuous(0, Norm::Strong).unwrap();
        let v = p.strong_variance(t_s);
        let b = p.strong_bias_sq(t_s);
        let tol = 1e-9 * (1.0 + v + b);
        prop_assert!(v + tol >= 0.5 * (b + v));
        let (_, discrete) = p.classical_oracle(Norm::Strong);
        prop_assert!(discrete + tol >= v);
        let n = 2000;
        let grid_min = (0..=n)
            .map(|k| p.strong_risk(inst.d() as f64 * k as f64 / n as f64))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(grid_min + tol >= v);
    }

    #[test]
    fn riemann_bound_for_polynomial_spectra(d in 1usize..400, p in 0.0f64..3.0, frac in 0.0f64..1.0, delta in 0.01f64..1.0) {
        let spectrum = make_polynomial_spectrum(d, p).unwrap();
        let noise = NoiseModel::new(delta).unwrap();
        let prof = RiskProfile::new(&Signal::zeros(d), &spectrum, &noise).unwrap();
        let t = 1.0 + frac * (d as f64 - 1.0);
        let lhs = prof.inverse_sq_at(t.floor() as usize + 1) * t * delta * delta;
        let rhs = (1.0 + 2.0 * p) * 2f64.powf(2.0 * p + 1.0) * prof.strong_variance(t);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn pathwise_decomposition_at_every_level(inst in instance(), seed in any::<u64>()) {
        let (spectrum, signal, noise) = inst.parts();
        let obs = simulate_observation(&signal, &spectrum, &noise, seed).unwrap();
        for m in 0..=inst.d() {
            let t = TruncationIndex::integer(m);
            let lib = strong_bias_sq(&signal, t).unwrap() + stochastic_error(&obs, &spectrum, t).unwrap();
            let direct = common::direct_strong_error(obs.y(), &inst.lambda, &inst.mu, m);
            prop_assert!((lib - direct).abs() <= 1e-10 * direct.max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn stopping_reads_exactly_tau_coefficients(inst in instance(), seed in any::<u64>(), kappa_scale in 0.0f64..2.0, m0_frac in 0.0f64..1.0) {
        let (spectrum, signal, noise) = inst.parts();
        let obs = simulate_observation(&signal, &spectrum, &noise, seed).unwrap();
        let d = inst.d();
        let kappa = kappa_scale * d as f64 * inst.delta * inst.delta;
        let m0 = (m0_frac * d as f64) as usize;
        let mut s = Counting { inner: ObservationStream::new(&obs), pulled: 0 };
        let out = early_stop(&mut s, kappa, m0).unwrap();
        prop_assert_eq!(out.coefficients_consumed, out.tau);
        prop_assert_eq!(s.pulled, out.tau);
        prop_assert!(out.tau >= m0 && out.tau <= d);
    }

    #[test]
    fn decision_ignores_unseen_suffix(inst in instance(), seed in any::<u64>(), kappa_scale in 0.2f64..2.0, flips in any::<u64>()) {
        let (spectrum, signal, noise) = inst.parts();
        let obs = simulate_observation(&signal, &spectrum, &noise, seed).unwrap();
        let d = inst.d();
        let kappa = kappa_scale * d as f64 * inst.delta * inst.delta;
        let tau = early_stop(&mut ObservationStream::new(&obs), kappa, 0).unwrap().tau;
        // Reverse and sign-flip the unread suffix; ||Y||^2 is unchanged.
        let mut y = obs.y().to_vec();
        y[tau..].reverse();
        for (j, v) in y[tau..].iter_mut().enumerate() {
            if (flips >> (j % 64)) & 1 == 1 {
                *v = -*v;
            }
        }
        let replay = Observation::from_data(y, inst.delta);
        prop_assert_eq!(early_stop(&mut ObservationStream::new(&replay), kappa, 0).unwrap().tau, tau);
    }

    #[test]
    fn tau_is_monotone_in_kappa_and_m0(inst in instance(), seed in any::<u64>(), k1 in 0.0f64..2.0, k2 in 0.0f64..2.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (spectrum, signal, noise) = inst.parts();
        let obs = simulate_observation(&signal, &spectrum, &noise, seed).unwrap();
        let d = inst.d();
        let unit = d as f64 * inst.delta * inst.delta;
        let stop = |kappa: f64, m0: usize| early_stop(&mut ObservationStream::new(&obs), kappa, m0).unwrap().tau;
        let (klo, khi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        prop_assert!(stop(klo * unit, 0) >= stop(khi * unit, 0));
        let (mlo, mhi) = ((a.min(b) * d as f64) as usize, (a.max(b) * d as f64) as usize);
        prop_assert!(stop(unit, mlo) <= stop(unit, mhi));
    }
}
