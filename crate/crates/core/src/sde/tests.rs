use alloc::vec;
use alloc::vec::Vec;

use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;
use crate::frackernel::{AlphaProfile, FracWeight};
use crate::systems::{Elementary, Euclidean, FnPotential, Lagrangian, MetricModel, Natural, Polar, Samuelson, Separable, State};
use crate::Error;

fn pendulum() -> Natural {
    Natural::pendulum()
}

fn free_particle() -> Natural {
    Natural::new(1, Separable::zero(), Separable::zero()).unwrap()
}

fn state(s: f64, q: &[f64], v: &[f64], p: &[f64]) -> State {
    State {
        s,
        q: q.to_vec(),
        v: v.to_vec(),
        p: p.to_vec(),
    }
}

fn frac(a: f64, rho: f64, t_obs: f64) -> FracWeight {
    FracWeight::new(AlphaProfile::Constant(a), rho, t_obs).unwrap()
}

#[test]
fn hp_classical_drift_examples() {
    let d = hp_drift_classical(&pendulum(), &state(0.0, &[0.0], &[0.5], &[0.5]));
    assert_eq!(d.dq, vec![0.5]);
    assert_eq!(d.dp, vec![0.0]);
    assert_eq!(d.noise, vec![1.0]);

    let d = hp_drift_classical(&free_particle(), &state(0.0, &[3.0], &[1.0], &[1.0]));
    assert_eq!((d.dp[0], d.noise[0]), (0.0, 0.0));

    let sam = Samuelson::new(0.003, 0.03).unwrap();
    let d = hp_drift_classical(&sam, &state(0.0, &[1.0], &[0.0], &[-0.03]));
    assert_relative_eq!(d.dp[0], -1.0, epsilon = 1e-15);
}

#[test]
fn hp_fractional_drift_examples() {
    let st = state(0.3, &[0.7], &[-0.2], &[-0.2]);
    let classical = hp_drift_classical(&pendulum(), &st);
    let reduced = hp_drift_fractional(&pendulum(), &frac(1.0, 0.0, 0.8), &st).unwrap();
    assert_eq!(classical, reduced);

    let a = 0.45;
    let d = hp_drift_fractional(&pendulum(), &frac(a, 0.0, 0.8), &st).unwrap();
    assert_relative_eq!(d.dp[0], libm::sin(0.7) - (-0.2) * (a - 1.0) / (0.3 - 0.8), epsilon = 1e-15);

    let d = hp_drift_fractional(&free_particle(), &frac(0.6, 0.0, 0.8), &state(0.4, &[0.0], &[2.0], &[2.0])).unwrap();
    assert_relative_eq!(d.dp[0], -2.0, epsilon = 1e-14);

    assert!(matches!(
        hp_drift_fractional(&free_particle(), &frac(0.6, 0.0, 0.8), &state(0.8, &[0.0], &[2.0], &[2.0])),
        Err(Error::Singularity { .. })
    ));
}

#[test]
fn ham_drift_examples() {
    let (rho, a) = (0.003, 0.03);
    let sam = Samuelson::new(rho, a).unwrap();
    let (s, q, p) = (2.5, 0.8, -0.4);
    let d = ham_drift(&sam, None, s, &[q], &[p]).unwrap();
    assert_relative_eq!(d.dq[0], -(a * q + libm::exp(rho * s) * p), max_relative = 1e-14);
    assert_relative_eq!(
        d.dp[0],
        (a * a - 1.0) * libm::exp(-rho * s) * q + a * p,
        max_relative = 1e-14
    );
    assert_eq!(d.noise[0], q);

    let w = frac(0.6, 0.003, 0.8);
    let d = ham_drift(&pendulum(), Some(&w), 0.4, &[0.3], &[1.5]).unwrap();
    assert_eq!(d.dq[0], 1.5);
    assert_relative_eq!(d.dp[0], libm::sin(0.3) - 1.003 * 1.5, epsilon = 1e-14);
    assert_eq!(d.noise[0], libm::cos(0.3));

    let polar = MetricModel::new(Polar);
    let (qm, pm) = ([1.5, 0.1], [0.2, 0.9]);
    let d = ham_drift(&polar, Some(&w), 0.4, &qm, &pm).unwrap();
    let raised = [pm[0], pm[1] / (qm[0] * qm[0])];
    // ½ ∂g_kl/∂q^1 p^k p^l with ∂g_22/∂r = 2r
    let force = 0.5 * 2.0 * qm[0] * raised[1] * raised[1];
    assert_relative_eq!(d.dp[0], force - 1.003 * pm[0], epsilon = 1e-14);
    assert_relative_eq!(d.dp[1], -1.003 * pm[1], epsilon = 1e-14);
}

#[test]
fn metric_velocity_drift_examples() {
    let flat = MetricModel::new(Euclidean { dim: 2 });
    let st = state(0.1, &[0.0, 0.0], &[1.0, -2.0], &[1.0, -2.0]);
    let d = metric_velocity_drift(&flat, None, FrictionSign::AntiDamping, &st).unwrap();
    assert_eq!(d.dv, vec![0.0, 0.0]);
    assert_eq!(d.dq, vec![1.0, -2.0]);

    let w = frac(0.6, 0.0, 0.8);
    let c = w.h(0.1).unwrap();
    let d = metric_velocity_drift(&flat, Some(&w), FrictionSign::AntiDamping, &st).unwrap();
    assert_eq!(d.dv, vec![c, -2.0 * c]);
    let d = metric_velocity_drift(&flat, Some(&w), FrictionSign::Damping, &st).unwrap();
    assert_eq!(d.dv, vec![-c, 2.0 * c]);

    // Noise on v is g⁻¹∂γ/∂q.
    let polar = MetricModel::with_noise(Polar, Separable::new(Elementary::Sin));
    let d = metric_velocity_drift(&polar, None, FrictionSign::AntiDamping, &state(0.0, &[2.0, 0.5], &[0.0, 1.0], &[0.0, 4.0])).unwrap();
    assert_relative_eq!(d.noise[0], libm::cos(2.0), epsilon = 1e-15);
    assert_relative_eq!(d.noise[1], libm::cos(0.5) / 4.0, epsilon = 1e-15);
    // −Γ¹₂₂ v² v² = r
    assert_relative_eq!(d.dv[0], 2.0, epsilon = 1e-15);
}

fn samuelson_config(h: f64, steps: usize) -> SimConfig {
    SimConfig::new(Formulation::HamClassical, h, steps, vec![1.0], Initial::Momentum(vec![0.0]))
}

#[test]
fn samuelson_single_step_by_hand() {
    let sam = Samuelson::new(0.003, 0.03).unwrap();
    let path = WienerPath { seed: 0, stream: 0, h: 0.001, increments: vec![0.0] };
    for formulation in [Formulation::HamClassical, Formulation::HpClassical] {
        let cfg = SimConfig { formulation, ..samuelson_config(0.001, 1) };
        let traj = euler_maruyama(&sam, &cfg, &path).unwrap();
        assert_relative_eq!(traj.q_at(1)[0], 0.99997, max_relative = 1e-13);
        assert_relative_eq!(traj.p_at(1)[0], -0.0009991, max_relative = 1e-12);
        assert_eq!(traj.times, vec![0.0, 0.001]);
    }
}

#[test]
fn samuelson_origin_is_fixed() {
    let sam = Samuelson::new(0.003, 0.03).unwrap();
    let mut cfg = SimConfig::new(Formulation::HpClassical, 0.01, 500, vec![0.0], Initial::Momentum(vec![0.0]));
    cfg.seed = 77;
    let traj = simulate(&sam, &cfg).unwrap();
    assert!(traj.dw.iter().any(|&x| x != 0.0));
    assert!(traj.q.iter().chain(&traj.p).chain(&traj.v).all(|&x| x == 0.0));
}

#[test]
fn zero_noise_step_is_explicit_euler() {
    let model = pendulum();
    let cfg = SimConfig::new(Formulation::HpClassical, 0.05, 1, vec![0.4], Initial::Velocity(vec![-0.3]));
    let traj = euler_maruyama(&model, &cfg, &WienerPath::zero(0.05, 1).unwrap()).unwrap();
    assert_eq!(traj.q_at(1)[0], 0.4 + 0.05 * -0.3);
    assert_eq!(traj.p_at(1)[0], -0.3 + 0.05 * libm::sin(0.4));
}

#[test]
fn zero_noise_scale_recovers_deterministic_orbit() {
    let silent = Samuelson::with_noise(0.003, 0.03, Separable::scaled(Elementary::HalfSquare, 0.0)).unwrap();
    let cfg = samuelson_config(0.01, 300).with_seed(5);
    let noisy_path = cfg.wiener_path().unwrap();
    let a = euler_maruyama(&silent, &cfg, &noisy_path).unwrap();
    let b = euler_maruyama(&silent, &cfg, &WienerPath::zero(0.01, 300).unwrap()).unwrap();
    assert_eq!(a.q, b.q);
    assert_eq!(a.p, b.p);
}

#[test]
fn runs_are_deterministic() {
    let w = frac(0.6, 0.0, 0.8);
    let cfg = SimConfig::new(Formulation::HamFractional, 0.001, 700, vec![0.5], Initial::Momentum(vec![0.0]))
        .with_weight(w)
        .with_seed(11);
    let a = simulate(&pendulum(), &cfg).unwrap();
    let b = simulate(&pendulum(), &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.steps(), 700);
    assert_eq!(a.meta.formulation, Formulation::HamFractional);
    assert!(a.q.iter().all(|x| x.is_finite()));
}

#[test]
fn time_grid_uses_single_rounding() {
    let cfg = SimConfig::new(Formulation::HpClassical, 0.1, 1000, vec![0.0], Initial::Velocity(vec![0.0]));
    let traj = euler_maruyama(&free_particle(), &cfg, &WienerPath::zero(0.1, 1000).unwrap()).unwrap();
    for (n, &t) in traj.times.iter().enumerate() {
        assert_eq!(t, libm::fma(n as f64, 0.1, 0.0));
    }
    assert_eq!(traj.times[1000], 100.0);
}

#[test]
fn harmonic_oscillator_conserves_energy_at_fine_step() {
    let osc = Natural::new(1, Separable::new(Elementary::HalfSquare), Separable::zero()).unwrap();
    let h = 1e-5;
    let steps = 100_000;
    let cfg = SimConfig::new(Formulation::HamClassical, h, steps, vec![1.0], Initial::Momentum(vec![0.0]));
    let traj = euler_maruyama(&osc, &cfg, &WienerPath::zero(h, steps).unwrap()).unwrap();
    let energy = |n: usize| 0.5 * traj.p_at(n)[0].powi(2) + 0.5 * traj.q_at(n)[0].powi(2);
    assert!((energy(steps) - energy(0)).abs() <= 1e-4);
}

#[test]
fn config_validation() {
    let model = pendulum();
    let base = SimConfig::new(Formulation::HpFractional, 0.001, 700, vec![0.0], Initial::Momentum(vec![1.0]));
    let field = |r: crate::Result<()>| match r {
        Err(Error::Parameter { name, .. }) => name,
        other => panic!("expected parameter error, got {other:?}"),
    };
    assert_eq!(field(base.validate(1)), "weight");
    let crossing = base.clone().with_weight(frac(0.6, 0.0, 0.5));
    assert_eq!(field(crossing.validate(1)), "t_obs");
    assert_eq!(field(SimConfig { steps: 0, ..crossing.clone() }.validate(1)), "steps");
    assert_eq!(field(SimConfig { h: -0.1, ..crossing.clone() }.validate(1)), "h");
    assert_eq!(field(crossing.validate(2)), "q0");
    let ok = base.clone().with_weight(frac(0.6, 0.0, 0.8));
    ok.validate(1).unwrap();
    let bad_alpha = base.with_weight(FracWeight::new(AlphaProfile::Affine { a0: 0.9, a1: -1.0 }, 0.0, 0.8).unwrap());
    assert!(matches!(bad_alpha.validate(1), Err(Error::AlphaRange { .. })));
    assert!(matches!(
        euler_maruyama(&model, &ok, &WienerPath::zero(0.001, 10).unwrap()),
        Err(Error::GridMismatch(_))
    ));
}

#[test]
fn blow_up_aborts_with_step_index() {
    let quartic = Natural::new(
        1,
        FnPotential {
            value: |q: &[f64]| -0.25 * q[0].powi(4),
            gradient: |q: &[f64], out: &mut [f64]| out[0] = -q[0].powi(3),
        },
        Separable::zero(),
    )
    .unwrap();
    let cfg = SimConfig::new(Formulation::HpClassical, 1.0, 50, vec![10.0], Initial::Velocity(vec![0.0]));
    match euler_maruyama(&quartic, &cfg, &WienerPath::zero(1.0, 50).unwrap()) {
        Err(Error::NonFinite { step }) => assert!(step > 1 && step < 50),
        other => panic!("expected non-finite abort, got {other:?}"),
    }
}

#[test]
fn strong_error_of_identical_runs_is_zero() {
    let cfg = SimConfig::new(Formulation::HpClassical, 0.01, 100, vec![0.5], Initial::Velocity(vec![0.0])).with_seed(3);
    let t = simulate(&pendulum(), &cfg).unwrap();
    assert_eq!(strong_error(&t, &t).unwrap(), 0.0);
}

#[test]
fn strong_error_rejects_unrelated_grids() {
    let model = pendulum();
    let a = simulate(&model, &SimConfig::new(Formulation::HpClassical, 0.01, 100, vec![0.5], Initial::Velocity(vec![0.0]))).unwrap();
    let b = simulate(&model, &SimConfig::new(Formulation::HpClassical, 0.03, 30, vec![0.5], Initial::Velocity(vec![0.0]))).unwrap();
    assert!(matches!(strong_error(&a, &b), Err(Error::GridMismatch(_))));
    // Same grid relation but independent noise.
    let c = simulate(&model, &SimConfig::new(Formulation::HpClassical, 0.02, 50, vec![0.5], Initial::Velocity(vec![0.0])).with_seed(9)).unwrap();
    assert!(matches!(strong_error(&a, &c), Err(Error::GridMismatch(_))));
}

#[test]
fn deterministic_error_is_first_order() {
    let model = pendulum();
    let t_end = 2.0;
    let reference_steps = 2048 * 64;
    let cfg = |steps: usize| SimConfig::new(Formulation::HpClassical, t_end / steps as f64, steps, vec![1.0], Initial::Velocity(vec![0.0]));
    let run = |steps: usize| euler_maruyama(&model, &cfg(steps), &WienerPath::zero(t_end / steps as f64, steps).unwrap()).unwrap();
    let fine = run(reference_steps);
    let e1 = strong_error(&fine, &run(256)).unwrap();
    let e2 = strong_error(&fine, &run(512)).unwrap();
    let ratio = e1 / e2;
    assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
}

/// Mean strong errors at 2⁻⁶, 2⁻⁷, 2⁻⁸ against 2⁻¹² on the same Brownian
/// path, over 100 seeds, for the (q, p) loop with the given drift.
fn halving_errors<F>(q0: f64, p0: f64, drift: F) -> [f64; 3]
where
    F: Fn(&SimConfig, &State) -> crate::Result<Drift>,
{
    let model = pendulum();
    let mut mean = [0.0; 3];
    for seed in 0..100 {
        let fine = SimConfig::new(Formulation::HpClassical, 1.0 / 4096.0, 4096, vec![q0], Initial::Momentum(vec![p0])).with_seed(seed);
        let path = fine.wiener_path().unwrap();
        let reference = integrate_with(&model, &fine, &path, |st| drift(&fine, st)).unwrap();
        for (slot, factor) in mean.iter_mut().zip([64, 32, 16]) {
            let coarse_path = path.coarsen(factor).unwrap();
            let cfg = SimConfig {
                h: coarse_path.h,
                steps: coarse_path.steps(),
                ..fine.clone()
            };
            let coarse = integrate_with(&model, &cfg, &coarse_path, |st| drift(&cfg, st)).unwrap();
            *slot += strong_error(&reference, &coarse).unwrap() / 100.0;
        }
    }
    mean
}

#[test]
fn pendulum_halving_ratio_is_first_order() {
    // The noise coefficient cos q does not depend on p, so the Milstein
    // correction vanishes and the scheme converges strongly with order one.
    let model = pendulum();
    let e = halving_errors(0.5, 0.0, |cfg, st| drift_for(&model, cfg, st));
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}, errors {e:?}");
    }
}

#[test]
fn momentum_proportional_noise_halves_order() {
    // dp = −sin q ds + ½p dW has a non-vanishing Milstein term; the
    // halving ratio drops to about √2.
    let model = pendulum();
    let e = halving_errors(0.5, 1.0, |cfg, st| {
        let mut d = drift_for(&model, cfg, st)?;
        d.noise[0] = 0.5 * st.p[0];
        Ok(d)
    });
    for w in e.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.2..=1.7).contains(&ratio), "ratio {ratio}, errors {e:?}");
    }
}

#[test]
fn fit_order_recovers_power_law() {
    let hs: Vec<f64> = (0..5).map(|k| libm::pow(2.0, -(k as f64) - 3.0)).collect();
    let errs: Vec<f64> = hs.iter().map(|h| 3.0 * libm::pow(*h, 0.5)).collect();
    assert_relative_eq!(fit_order(&hs, &errs), 0.5, epsilon = 1e-12);
}

#[test]
fn polar_geodesic_matches_straight_line() {
    // From r = 1 with v = (0, 1) the geodesic is the line x = 1, y = s:
    // r(s) = sqrt(1 + s²), θ(s) = atan(s), and the metric speed stays 1.
    let model = MetricModel::new(Polar);
    let t_end = 1.0;
    let run = |steps: usize| {
        let h = t_end / steps as f64;
        let cfg = SimConfig::new(Formulation::VelocityClassical, h, steps, vec![1.0, 0.0], Initial::Velocity(vec![0.0, 1.0]));
        euler_maruyama_metric(&model, &cfg, &WienerPath::zero(h, steps).unwrap()).unwrap()
    };
    let err = |traj: &Trajectory| {
        let n = traj.steps();
        let q = traj.q_at(n);
        let r_err = (q[0] - libm::sqrt(1.0 + t_end * t_end)).abs();
        let th_err = (q[1] - libm::atan(t_end)).abs();
        let speed_err = (model.speed(q, traj.v_at(n)) - 1.0).abs();
        (r_err.max(th_err), speed_err)
    };
    let (e1, s1) = err(&run(1000));
    let (e2, s2) = err(&run(2000));
    let (e_ref, s_ref) = err(&run(100_000));
    assert!(e1 < 1e-3 && e_ref < 1e-5);
    assert!(s_ref < 1e-5);
    assert!((1.6..=2.4).contains(&(e1 / e2)), "position ratio {}", e1 / e2);
    assert!((1.6..=2.4).contains(&(s1 / s2)), "speed ratio {}", s1 / s2);
}

#[test]
fn flat_metric_velocity_is_constant() {
    let model = MetricModel::new(Euclidean { dim: 2 });
    let mut cfg = SimConfig::new(Formulation::VelocityClassical, 0.1, 20, vec![0.0, 0.0], Initial::Velocity(vec![1.0, 2.0]));
    cfg.seed = 4;
    let traj = euler_maruyama_metric(&model, &cfg, &cfg.wiener_path().unwrap()).unwrap();
    for n in 0..=20 {
        assert_eq!(traj.v_at(n), &[1.0, 2.0]);
        assert_eq!(traj.p_at(n), &[1.0, 2.0]);
    }
    assert!(euler_maruyama(&model, &cfg, &cfg.wiener_path().unwrap()).is_err());
}

#[test]
fn formulation_names_round_trip() {
    for f in Formulation::ALL {
        assert_eq!(f.as_str().parse::<Formulation>().unwrap(), f);
    }
    assert!("hp".parse::<Formulation>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unit_alpha_reduces_to_classical(seed in any::<u64>(), q0 in -2.0..2.0f64, p0 in -2.0..2.0f64) {
        let w = FracWeight::classical(5.0);
        let sam = Samuelson::new(0.003, 0.03).unwrap();
        let models: [&dyn Lagrangian; 2] = [&sam, &Natural::pendulum()];
        for model in models {
            for (frac_form, classical_form) in [
                (Formulation::HpFractional, Formulation::HpClassical),
                (Formulation::HamFractional, Formulation::HamClassical),
            ] {
                let cfg = SimConfig::new(frac_form, 0.01, 200, vec![q0], Initial::Momentum(vec![p0]))
                    .with_weight(w)
                    .with_seed(seed);
                let a = simulate(model, &cfg).unwrap();
                let b = simulate(model, &SimConfig { formulation: classical_form, ..cfg.clone() }).unwrap();
                for (x, y) in a.q.iter().zip(&b.q).chain(a.p.iter().zip(&b.p)).chain(a.v.iter().zip(&b.v)) {
                    prop_assert!((x - y).abs() <= 1e-12);
                }
            }
        }
    }
}
