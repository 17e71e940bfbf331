use alloc::vec;
use alloc::vec::Vec;

use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;

fn pendulum_cos() -> Natural {
    Natural::new(1, Separable::new(Elementary::Cos), Separable::new(Elementary::Sin)).unwrap()
}

fn free_particle() -> Natural {
    Natural::new(1, Separable::zero(), Separable::zero()).unwrap()
}

#[test]
fn legendre_examples() {
    assert_eq!(legendre_p(&pendulum_cos(), 0.0, &[0.3], &[2.0]), vec![2.0]);
    let sam = Samuelson::new(0.003, 0.03).unwrap();
    assert_relative_eq!(legendre_p(&sam, 0.0, &[1.0], &[0.0])[0], -0.03, epsilon = 1e-15);
    let flat = MetricModel::new(Euclidean { dim: 2 });
    assert_eq!(legendre_p(&flat, 0.0, &[0.0, 0.0], &[1.0, 2.0]), vec![1.0, 2.0]);
}

#[test]
fn hamiltonian_examples() {
    // H = ½p² + V(q) = cos(0)
    assert_relative_eq!(hamiltonian(&pendulum_cos(), 0.0, &[0.0], &[0.0]).unwrap(), 1.0);
    assert_relative_eq!(hamiltonian(&free_particle(), 0.0, &[0.0], &[3.0]).unwrap(), 4.5);
}

#[test]
fn samuelson_values_and_ranges() {
    let sam = Samuelson::new(0.0, 0.0).unwrap();
    assert_eq!(sam.lagrangian(0.0, &[1.0], &[1.0]), -1.0);
    assert_eq!(legendre_p(&sam, 0.0, &[1.0], &[1.0]), vec![-1.0]);
    assert_eq!(sam.lagrangian(0.0, &[0.0], &[0.0]), 0.0);
    assert_eq!(legendre_p(&sam, 0.0, &[0.0], &[0.0])[0], 0.0);
    assert!(Samuelson::new(1.0, 0.0).is_err());
    assert!(Samuelson::new(-0.1, 0.0).is_err());
    assert!(Samuelson::new(0.1, 1.0).is_err());
    assert!(Samuelson::new(0.1, -1.0).is_err());
}

#[test]
fn samuelson_hamiltonian_drift_matches_closed_form() {
    // ∂H/∂p by centered difference of H against −(aq + e^{ρs}p).
    let (rho, a) = (0.003, 0.03);
    let sam = Samuelson::new(rho, a).unwrap();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(7);
    for _ in 0..100 {
        let s = uniform(&mut rng, 0.0, 10.0);
        let q = uniform(&mut rng, -2.0, 2.0);
        let p = uniform(&mut rng, -2.0, 2.0);
        let dp = 1e-6;
        let hp = hamiltonian(&sam, s, &[q], &[p + dp]).unwrap();
        let hm = hamiltonian(&sam, s, &[q], &[p - dp]).unwrap();
        let expected = -(a * q + libm::exp(rho * s) * p);
        assert!(((hp - hm) / (2.0 * dp) - expected).abs() <= 1e-6);

        let (mut gq, mut gp) = ([0.0], [0.0]);
        hamiltonian_gradient(&sam, s, &[q], &[p], &mut gq, &mut gp).unwrap();
        let (mut iq, mut ip) = ([0.0], [0.0]);
        invert_legendre(&sam, s, &[q], &[p], &mut ip).unwrap();
        sam.dl_dq(s, &[q], &ip, &mut iq);
        assert_relative_eq!(gp[0], ip[0], max_relative = 1e-14);
        assert_relative_eq!(gq[0], -iq[0], max_relative = 1e-12, epsilon = 1e-14);
    }
}

fn uniform<R: rand::Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

#[test]
fn natural_hamiltonian_is_kinetic_plus_potential() {
    let model = Natural::new(
        3,
        Separable::scaled(Elementary::Cos, 2.0),
        Separable::new(Elementary::Sin),
    )
    .unwrap();
    for k in 0..50 {
        let x = k as f64 * 0.13;
        let q = [x, -x, 0.5 * x];
        let p = [1.0 - x, x * x, 0.3];
        let h = hamiltonian(&model, 0.0, &q, &p).unwrap();
        let expected = 0.5 * p.iter().map(|v| v * v).sum::<f64>() + model.potential.value(&q);
        assert!((h - expected).abs() <= 1e-12);
    }
}

#[test]
fn discounted_reduces_to_base_at_zero_rate() {
    let base = pendulum_cos();
    let disc = Discounted::new(base, 0.0).unwrap();
    for k in 0..20 {
        let s = k as f64 * 0.7;
        let q = [k as f64 * 0.3 - 1.0];
        let v = [1.5 - k as f64 * 0.2];
        assert_eq!(disc.lagrangian(s, &q, &v).to_bits(), base.lagrangian(s, &q, &v).to_bits());
        let (mut a, mut b) = ([0.0], [0.0]);
        disc.dl_dq(s, &q, &v, &mut a);
        base.dl_dq(s, &q, &v, &mut b);
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        disc.dl_dv(s, &q, &v, &mut a);
        base.dl_dv(s, &q, &v, &mut b);
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        disc.velocity_of_momentum(s, &q, &v, &mut a).unwrap().unwrap();
        base.velocity_of_momentum(s, &q, &v, &mut b).unwrap().unwrap();
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }
}

#[test]
fn discounted_values() {
    let disc = Discounted::new(free_particle(), 0.1).unwrap();
    assert_relative_eq!(disc.lagrangian(10.0, &[0.0], &[1.0]), 0.5 * libm::exp(-1.0), max_relative = 1e-15);
    let p = legendre_p(&disc, 10.0, &[0.0], &[2.0]);
    assert_relative_eq!(p[0], libm::exp(-1.0) * 2.0, max_relative = 1e-15);
}

#[test]
fn metric_lagrangian_values() {
    let flat = MetricModel::new(Euclidean { dim: 2 });
    assert_eq!(flat.lagrangian(0.0, &[0.0, 0.0], &[3.0, 4.0]), 12.5);
    let polar = MetricModel::new(Polar);
    assert_eq!(polar.lagrangian(0.0, &[2.0, 0.3], &[1.0, 1.0]), 2.5);
    assert_eq!(legendre_p(&polar, 0.0, &[2.0, 0.3], &[1.0, 1.0]), vec![1.0, 4.0]);
}

#[test]
fn metric_momentum_force_uses_raised_momenta() {
    // −∂H/∂q_i = ½ ∂g_kl/∂q^i p^k p^l with p^k = g^{kj} p_j.
    let polar = MetricModel::new(Polar);
    let q = [1.5, 0.2];
    let p = [0.7, -1.3];
    let (mut dh_dq, mut dh_dp) = ([0.0; 2], [0.0; 2]);
    hamiltonian_gradient(&polar, 0.0, &q, &p, &mut dh_dq, &mut dh_dp).unwrap();
    let raised = [p[0], p[1] / (q[0] * q[0])];
    assert_relative_eq!(dh_dp[0], raised[0], max_relative = 1e-14);
    assert_relative_eq!(dh_dp[1], raised[1], max_relative = 1e-14);
    assert_relative_eq!(-dh_dq[0], 0.5 * 2.0 * q[0] * raised[1] * raised[1], max_relative = 1e-14);
    assert_eq!(dh_dq[1], 0.0);
}

#[test]
fn singular_metric_is_reported() {
    let polar = MetricModel::new(Polar);
    let mut v = [0.0; 2];
    assert!(matches!(
        invert_legendre(&polar, 0.0, &[0.0, 0.0], &[1.0, 1.0], &mut v),
        Err(crate::Error::SingularMetric)
    ));
    assert!(matches!(christoffel(&Polar, &[0.0, 1.0]), Err(crate::Error::SingularMetric)));
}

#[test]
fn christoffel_flat_metrics_vanish() {
    for q in [[0.0, 0.0], [1.0, -3.0]] {
        assert!(christoffel(&Euclidean { dim: 2 }, &q).unwrap().iter().all(|&x| x == 0.0));
        assert!(christoffel(&ConstantDiagonal { dim: 2, c: 3.5 }, &q)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
    }
}

/// Christoffel formula evaluated with finite-difference metric derivatives.
fn christoffel_oracle<G: Metric>(metric: &G, q: &[f64]) -> Vec<f64> {
    let n = metric.dim();
    let mut g = vec![0.0; n * n];
    metric.metric(q, &mut g);
    let ginv = crate::linalg::inverse(n, &g).unwrap();
    let mut dg = vec![0.0; n * n * n];
    let h = 1e-5;
    for i in 0..n {
        let (mut qp, mut qm) = (q.to_vec(), q.to_vec());
        qp[i] += h;
        qm[i] -= h;
        let (mut gp, mut gm) = (vec![0.0; n * n], vec![0.0; n * n]);
        metric.metric(&qp, &mut gp);
        metric.metric(&qm, &mut gm);
        for kl in 0..n * n {
            dg[i * n * n + kl] = (gp[kl] - gm[kl]) / (2.0 * h);
        }
    }
    let mut out = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[i * n + l]
                        * (dg[j * n * n + l * n + k] + dg[k * n * n + j * n + l] - dg[l * n * n + j * n + k]);
                }
                out[i * n * n + j * n + k] = 0.5 * acc;
            }
        }
    }
    out
}

#[test]
fn christoffel_polar_values() {
    let idx = |i: usize, j: usize, k: usize| i * 4 + j * 2 + k;
    let gamma = christoffel(&Polar, &[2.0, 0.0]).unwrap();
    assert_relative_eq!(gamma[idx(0, 1, 1)], -2.0, epsilon = 1e-14);
    assert_relative_eq!(gamma[idx(1, 0, 1)], 0.5, epsilon = 1e-14);
    assert_eq!(gamma[idx(1, 0, 1)], gamma[idx(1, 1, 0)]);
    for (pos, value) in gamma.iter().enumerate() {
        if ![idx(0, 1, 1), idx(1, 0, 1), idx(1, 1, 0)].contains(&pos) {
            assert_eq!(*value, 0.0);
        }
    }
    let oracle = christoffel_oracle(&Polar, &[2.0, 0.0]);
    for (a, b) in gamma.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn metric_validation() {
    for r in [0.5, 1.0, 2.0] {
        validate_metric_at(&Polar, &[r, 0.1]).unwrap();
    }
    validate_metric_at(&Euclidean { dim: 3 }, &[0.0; 3]).unwrap();

    struct BadDerivative;
    impl Metric for BadDerivative {
        fn dim(&self) -> usize {
            1
        }
        fn metric(&self, q: &[f64], out: &mut [f64]) {
            out[0] = 1.0 + q[0] * q[0];
        }
        fn metric_derivative(&self, _q: &[f64], out: &mut [f64]) {
            out[0] = 0.0;
        }
    }
    assert!(validate_metric_at(&BadDerivative, &[1.0]).is_err());
}

#[test]
fn numeric_partials_match_samuelson() {
    let sam = Samuelson::new(0.003, 0.03).unwrap();
    let numeric = NumericModel::new(
        1,
        |s: f64, q: &[f64], v: &[f64]| sam.lagrangian(s, q, v),
        |q: &[f64]| 0.5 * q[0] * q[0],
    );
    assert!(numeric.numeric_partials());
    assert!(!sam.numeric_partials());
    for k in 0..30 {
        let s = k as f64 * 0.3;
        let q = [k as f64 * 0.1 - 1.5];
        let v = [0.8 - k as f64 * 0.05];
        let (mut a, mut b) = ([0.0], [0.0]);
        sam.dl_dq(s, &q, &v, &mut a);
        numeric.dl_dq(s, &q, &v, &mut b);
        assert!((a[0] - b[0]).abs() <= 1e-6);
        sam.dl_dv(s, &q, &v, &mut a);
        numeric.dl_dv(s, &q, &v, &mut b);
        assert!((a[0] - b[0]).abs() <= 1e-6);
        sam.dnoise_dq(&q, &mut a);
        numeric.dnoise_dq(&q, &mut b);
        assert!((a[0] - b[0]).abs() <= 1e-6);
        // Newton inversion through the numeric Hessian recovers v.
        let p = legendre_p(&numeric, s, &q, &v);
        let mut back = [0.0];
        invert_legendre(&numeric, s, &q, &p, &mut back).unwrap();
        assert!((back[0] - v[0]).abs() < 1e-6);
    }
}

#[test]
fn numeric_cosine_potential_derivative() {
    let model = NumericModel::new(1, |_s: f64, q: &[f64], v: &[f64]| 0.5 * v[0] * v[0] - libm::cos(q[0]), |_q: &[f64]| 0.0);
    for k in 0..40 {
        let q = [k as f64 * 0.2 - 4.0];
        let mut d = [0.0];
        model.dl_dq(0.0, &q, &[0.0], &mut d);
        // dL/dq = −dV/dq = sin q
        assert!((d[0] - libm::sin(q[0])).abs() <= 1e-8);
    }
}

#[test]
fn degenerate_lagrangian_fails_hyperregularity() {
    let linear = NumericModel::new(1, |_s: f64, q: &[f64], v: &[f64]| 3.0 * v[0] + q[0], |_q: &[f64]| 0.0);
    assert!(!is_hyperregular_at(&linear, 0.0, &[0.5], &[1.0]));
    assert!(is_hyperregular_at(&pendulum_cos(), 0.0, &[0.5], &[1.0]));
    assert_eq!(hessian_determinant(&pendulum_cos(), 0.0, &[0.5], &[1.0]), Some(1.0));
    let mut v = [0.0];
    assert!(matches!(
        invert_legendre(&linear, 0.0, &[0.5], &[1.0], &mut v),
        Err(crate::Error::Hyperregularity { .. })
    ));
}

#[test]
fn missing_inverse_and_hessian_is_an_error() {
    struct Bare;
    impl Lagrangian for Bare {
        fn dim(&self) -> usize {
            1
        }
        fn lagrangian(&self, _s: f64, _q: &[f64], v: &[f64]) -> f64 {
            v[0] * v[0]
        }
        fn dl_dq(&self, _s: f64, _q: &[f64], _v: &[f64], out: &mut [f64]) {
            out[0] = 0.0;
        }
        fn dl_dv(&self, _s: f64, _q: &[f64], v: &[f64], out: &mut [f64]) {
            out[0] = 2.0 * v[0];
        }
        fn noise_potential(&self, _q: &[f64]) -> f64 {
            0.0
        }
        fn dnoise_dq(&self, _q: &[f64], out: &mut [f64]) {
            out[0] = 0.0;
        }
    }
    let mut v = [0.0];
    assert_eq!(invert_legendre(&Bare, 0.0, &[0.0], &[1.0], &mut v), Err(crate::Error::NoLegendreInverse));
    assert_eq!(hessian_determinant(&Bare, 0.0, &[0.0], &[1.0]), None);
}

fn round_trip<M: Lagrangian>(model: &M, s: f64, q: &[f64], v: &[f64]) -> f64 {
    let p = legendre_p(model, s, q, v);
    let mut back = vec![0.0; v.len()];
    invert_legendre(model, s, q, &p, &mut back).unwrap();
    back.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn legendre_round_trip_builtins(
        s in 0.0..10.0f64,
        q in proptest::array::uniform2(-3.0..3.0f64),
        v in proptest::array::uniform2(-3.0..3.0f64),
        r in 0.3..3.0f64,
    ) {
        let sam = Samuelson::new(0.003, 0.03).unwrap();
        prop_assert!(round_trip(&sam, s, &q[..1], &v[..1]) <= 1e-10);
        let nat = Natural::new(2, Separable::new(Elementary::Cos), Separable::new(Elementary::Sin)).unwrap();
        prop_assert!(round_trip(&nat, s, &q, &v) <= 1e-10);
        let disc = Discounted::new(nat, 0.1).unwrap();
        prop_assert!(round_trip(&disc, s, &q, &v) <= 1e-10);
        let polar = MetricModel::new(Polar);
        prop_assert!(round_trip(&polar, s, &[r, q[1]], &v) <= 1e-10);
    }

    #[test]
    fn christoffel_lower_symmetry(r in 0.1..5.0f64, theta in -3.0..3.0f64) {
        let g = christoffel(&Polar, &[r, theta]).unwrap();
        for i in 0..2 { for j in 0..2 { for k in 0..2 {
            prop_assert_eq!(g[i * 4 + j * 2 + k].to_bits(), g[i * 4 + k * 2 + j].to_bits());
        }}}
    }
}
