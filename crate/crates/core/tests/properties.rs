mod common;

use proptest::prelude::*;

use refugium::config::RunConfig;
use refugium::coupled::{evolve, predator_integral, settle, solve_steady, EvolveOptions, SettleOptions};
use refugium::eigen::{principal_eigenvalue, rayleigh};
use refugium::mesh::{build_mesh, DomainSpec, Mesh, Region};
use refugium::scalar::{solve_aux_mu, solve_logistic, Classification};
use refugium::stability::{linearize, principal_eta, Verdict, DEFAULT_TOL};
use refugium::sweep::{centred_zone, sweep_theta, SweepOptions};
use refugium::thresholds::{refuge_potential, theta1, theta_neg, theta_star, Regime, ParamSet};

const N: usize = 41;
const TOL: f64 = 1e-10;

fn mesh() -> Mesh {
    build_mesh(&DomainSpec::interval(1.0, N).with_zone(vec![(0.25, 0.75)])).unwrap()
}

fn field(len: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, len)
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(24)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn quadratic_form_is_nonnegative(f in field(N, -5.0, 5.0)) {
        let m = mesh();
        for region in [Region::Omega, Region::Omega1] {
            let op = m.laplacian(region);
            let g: Vec<f64> = op.nodes().iter().map(|&i| f[i]).collect();
            prop_assert!(op.energy(&g) >= -1e-12);
            let rows = op.stiffness().mul_vec(&vec![1.0; op.len()]);
            prop_assert!(rows.iter().all(|r| r.abs() < 1e-12));
        }
    }

    #[test]
    fn eigenvalue_is_monotone_in_the_potential(
        q in field(N, 0.0, 4.0),
        bump in field(N, 0.0, 1.0),
        at in 0..N,
    ) {
        let m = mesh();
        let mut q1: Vec<f64> = q.iter().zip(&bump).map(|(a, b)| a + b).collect();
        q1[at] += 0.5;
        let l2 = principal_eigenvalue(&m, Region::Omega, &q, TOL).unwrap();
        let l1 = principal_eigenvalue(&m, Region::Omega, &q1, TOL).unwrap();
        prop_assert!(l1 > l2, "{l1} <= {l2}");
    }

    #[test]
    fn eigenvalue_is_lipschitz_in_the_potential(q in field(N, -2.0, 4.0), dq in field(N, -0.3, 0.3)) {
        let m = mesh();
        let q1: Vec<f64> = q.iter().zip(&dq).map(|(a, b)| a + b).collect();
        let delta = dq.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        let l = principal_eigenvalue(&m, Region::Omega, &q, TOL).unwrap();
        let l1 = principal_eigenvalue(&m, Region::Omega, &q1, TOL).unwrap();
        prop_assert!((l - l1).abs() <= delta + 1e-9);
    }

    #[test]
    fn rayleigh_quotient_bounds_the_eigenvalue(q in field(N, 0.0, 4.0), phi in field(N, 0.1, 2.0)) {
        let m = mesh();
        let l = principal_eigenvalue(&m, Region::Omega, &q, TOL).unwrap();
        prop_assert!(rayleigh(&m, Region::Omega, &q, &phi).unwrap() >= l - 10.0 * TOL);
    }

    #[test]
    fn dense_oracle_agrees_on_random_potentials(q in field(N, -1.0, 3.0)) {
        let m = mesh();
        let l = principal_eigenvalue(&m, Region::Omega, &q, TOL).unwrap();
        prop_assert!((l - common::lambda1(&[1.0], N, &q)).abs() < 1e-8);
    }

    #[test]
    fn theta_star_increases_in_mu(mu in 0.01f64..50.0, factor in 1.05f64..4.0) {
        let m = mesh();
        let p = ParamSet::default();
        let a = theta_star(&p.with_mu(mu), &m).unwrap();
        let b = theta_star(&p.with_mu(mu * factor), &m).unwrap();
        let t1 = theta1(&p, &m).unwrap();
        prop_assert!(b > a + 1e-10);
        prop_assert!(b < t1 && a < p.a / p.k);
    }

    #[test]
    fn zone_enlargement_lowers_theta_star(w in 10usize..50, grow in 5usize..35, mu in 0.1f64..10.0) {
        // Widths in hundredths keep both zone edges on the h = 0.005 grid.
        let (w, grow) = (w as f64 / 100.0, grow as f64 / 100.0);
        let base = DomainSpec::interval(1.0, 201);
        let small = build_mesh(&base.clone().with_zone(centred_zone(&base, w))).unwrap();
        let large = build_mesh(&base.clone().with_zone(centred_zone(&base, w + grow))).unwrap();
        let p = ParamSet::default().with_mu(mu);
        prop_assert!(theta_star(&p, &small).unwrap() >= theta_star(&p, &large).unwrap());
    }

    #[test]
    fn regimes_partition_parameter_space(
        theta in 0.01f64..4.0,
        mu in -3.0f64..5.0,
        m in 0.0f64..3.0,
        star in 0.0f64..2.0,
    ) {
        let p = ParamSet { m, ..ParamSet::default() }.with_theta(theta).with_mu(mu);
        let star = (mu > 0.0).then_some(star);
        let r = Regime::from_thresholds(&p, star);
        let floor = if m > 0.0 { -p.c / m } else { f64::NEG_INFINITY };
        let expected = if mu <= 0.0 {
            if mu > floor && theta > -mu / (p.c + m * mu) {
                Regime::CoexistNegMu
            } else {
                Regime::PredatorExtinct
            }
        } else if theta >= p.a / p.k {
            Regime::PreySafeNoZone
        } else if theta > star.unwrap() {
            Regime::CoexistPredicted
        } else if m <= (1.0 + p.k * mu).powi(2) / (p.a * mu) {
            Regime::PreyExtinctPredicted
        } else {
            Regime::Indeterminate
        };
        prop_assert_eq!(r, expected);
        if mu <= 0.0 && mu > floor + 1e-6 {
            prop_assert!(theta_neg(&p).unwrap() >= 0.0);
        }
    }

    #[test]
    fn numbers_in_config_round_trip(theta in 0.01f64..10.0, mu in -5.0f64..5.0, res in 3usize..400) {
        let text = format!("[domain]\nresolution = {res}\n\n[params]\ntheta = {theta:?}\nmu = {mu:?}\n");
        let cfg = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(cfg.params.theta, theta);
        prop_assert_eq!(cfg.params.mu, mu);
        prop_assert_eq!(cfg.domain.resolution, res);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn logistic_solution_is_unique(seed in field(N, 0.01, 1.0)) {
        let m = mesh();
        let p = ParamSet::default();
        let q0 = refuge_potential(&p, &m).unwrap();
        let theta = theta1(&p, &m).unwrap() + 0.3;
        let reference = solve_logistic(&m, theta, &q0, None).unwrap();
        for k in 0..5 {
            let start: Vec<f64> = seed.iter().map(|s| theta * ((s + 0.17 * k as f64) % 1.0).max(1e-3)).collect();
            let s = solve_logistic(&m, theta, &q0, Some(&start)).unwrap();
            prop_assert_eq!(s.classification, Classification::Positive);
            prop_assert!(s.field.max_abs_diff(&reference.field) <= 1e-8);
            let r = refugium::scalar::ScalarProblem::logistic(theta, q0.clone()).residual_norm(&m, &s.field).unwrap();
            prop_assert!((r - s.residual).abs() <= 1e-12 + 1e-6 * r);
        }
    }

    #[test]
    fn auxiliary_solution_is_bracketed(mu in 0.5f64..50.0, m_param in 0.0f64..2.0) {
        let m = mesh();
        let p = ParamSet { m: m_param, ..ParamSet::default() };
        let p = p.with_theta(theta1(&p, &m).unwrap() + 0.5).with_mu(mu);
        let q0 = refuge_potential(&p, &m).unwrap();
        let limit = solve_logistic(&m, p.theta, &q0, None).unwrap();
        let aux = solve_aux_mu(&m, &p).unwrap();
        for (u, l) in aux.field.iter().zip(limit.field.iter()) {
            prop_assert!(*u >= l - 1e-8 && *u <= p.theta + 1e-8);
        }
    }

    #[test]
    fn steady_states_satisfy_the_integral_identity(theta in 0.6f64..1.9, mu in -0.4f64..3.0) {
        let m = mesh();
        let p = ParamSet::default().with_theta(theta).with_mu(mu);
        let s = settle(&m, &p, &vec![0.5 * theta; m.node_count()], &vec![mu.max(0.5); m.omega1_len()], &SettleOptions::default()).unwrap();
        prop_assert!(s.state.converged);
        prop_assert!(predator_integral(&m, &p, &s.state).unwrap() <= 1e-8 * m.measure_omega1());
    }
}

#[test]
fn evolved_limit_needs_few_newton_steps() {
    let m = mesh();
    let p = ParamSet::default().with_theta(0.8);
    let opts = EvolveOptions {
        steady_tol: 1e-7,
        ..EvolveOptions::default()
    };
    let run = evolve(&m, &p, &vec![0.4; m.node_count()], &vec![1.0; m.omega1_len()], &opts).unwrap();
    assert!(run.state.converged);
    assert_eq!(run.clips, 0);
    let s = solve_steady(&m, &p, &run.state.u, &run.state.v).unwrap();
    assert!(s.iterations <= 5, "{} Newton steps", s.iterations);
}

#[test]
fn iff_property_for_nonpositive_mu() {
    let m = mesh();
    let p = ParamSet {
        c: 1.0,
        m: 0.5,
        ..ParamSet::default()
    }
    .with_mu(-0.5);
    let tn = theta_neg(&p).unwrap();
    let margin = (0.02 * tn).max(1e-3);
    for (theta, coexist) in [(tn + margin, true), (tn + 0.3, true), (tn - margin, false), (0.5 * tn, false)] {
        let q = p.with_theta(theta);
        let s = settle(&m, &q, &vec![0.5 * theta; m.node_count()], &vec![0.5; m.omega1_len()], &SettleOptions::default())
            .unwrap()
            .state;
        let eps = 1e-4 * theta.max(1.0);
        assert_eq!(s.v.min() > eps && s.u.min() > eps, coexist, "theta = {theta}");
    }
}

#[test]
fn branch_is_continuous_and_bounded() {
    let m = build_mesh(&DomainSpec::interval(1.0, 101).with_zone(vec![(0.25, 0.75)])).unwrap();
    let p = ParamSet::default();
    let t0 = p.a / p.k;
    let grid: Vec<f64> = (1..=40).map(|i| 0.3 + 0.02 * t0 * i as f64).filter(|&t| t <= 1.8).collect();
    let opts = SweepOptions {
        keep_states: true,
        ..SweepOptions::default()
    };
    let branch = sweep_theta(&m, &p, &grid, &opts).unwrap();
    let hat = branch.bifurcation.expect("onset detected").theta_hat;
    assert!(branch.points.iter().all(|pt| pt.bounds_pass == Some(true)));
    let states: Vec<_> = branch.states.iter().map(|s| s.clone().unwrap()).collect();
    for (i, w) in states.windows(2).enumerate() {
        let (a, b) = (grid[i], grid[i + 1]);
        if a < hat && hat <= b {
            continue;
        }
        let d = w[0].u.max_abs_diff(&w[1].u).max(w[0].v.max_abs_diff(&w[1].v));
        assert!(d <= 0.2, "jump {d} between theta = {a} and {b}");
    }
}

#[test]
fn stability_verdict_survives_refinement() {
    let p = ParamSet::default();
    let mut verdicts = Vec::new();
    for n in [101, 201] {
        let m = build_mesh(&DomainSpec::interval(1.0, n).with_zone(vec![(0.25, 0.75)])).unwrap();
        for (theta, mu) in [(0.8, 1.0), (1.5, 16.0), (0.3, 1.0)] {
            let q = p.with_theta(theta).with_mu(mu);
            let s = settle(&m, &q, &vec![0.5 * theta; m.node_count()], &vec![mu; m.omega1_len()], &SettleOptions::default())
                .unwrap()
                .state;
            let v = principal_eta(&linearize(&m, &q, &s).unwrap(), DEFAULT_TOL).unwrap();
            verdicts.push(v.verdict);
        }
    }
    assert_eq!(verdicts[..3], verdicts[3..]);
    assert!(verdicts[..2].iter().all(|v| *v == Verdict::Stable));
}
