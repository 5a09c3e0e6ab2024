//! The verification suite behind `refugium verify`.
//!
//! Each criterion is an executable property of the model with its own
//! tolerance; the suite reports one PASS/FAIL line per criterion.

use rayon::prelude::*;

use crate::coupled::{
    check_apriori, classify_outcome, default_eps_pos, homotopy_t, predator_integral, settle, solve_steady,
    BoundReport, OutcomeLabel, SettleOptions, SteadyState,
};
use crate::eigen::principal_eigenvalue;
use crate::error::Result;
use crate::linsolve::dense_spectrum_oracle;
use crate::mesh::{build_mesh, DomainSpec, Mesh, Region};
use crate::scalar::{solve_aux_mu, solve_logistic, subsolution_start, Classification};
use crate::stability::{eta_star, Verdict};
use crate::sweep::{asymptotic_mu, AsymptoticOptions, centred_zone, default_theta_grid, sweep_theta, zone_study, SweepOptions};
use crate::thresholds::{refuge_potential, theta0, theta1_tol, theta_neg, theta_star_tol, ParamSet};

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    /// One-dimensional domain with its zone.
    pub domain: DomainSpec,
    /// Two-dimensional smoke domain, if any.
    pub domain_2d: Option<DomainSpec>,
    pub params: ParamSet,
    pub eigen_tol: f64,
    pub settle: SettleOptions,
    pub sweep_points: usize,
    /// Random starts added to the fixed ones in the large-μ check.
    pub extra_starts: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::interval(1.0, 201).with_zone(vec![(0.25, 0.75)]),
            domain_2d: Some(DomainSpec::rectangle(1.0, 1.0, 41).with_zone(vec![(0.25, 0.75), (0.25, 0.75)])),
            params: ParamSet::default(),
            eigen_tol: 1e-10,
            settle: SettleOptions::default(),
            sweep_points: 40,
            extra_starts: 0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub details: Vec<String>,
}

/// A converged state produced while checking a criterion.
#[derive(Debug, Clone)]
pub struct StateRecord {
    pub label: String,
    pub params: ParamSet,
    pub state: SteadyState,
}

struct Check {
    pass: bool,
    details: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            pass: true,
            details: Vec::new(),
        }
    }

    fn expect(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.details.push(format!("[{}] {line}", if ok { "ok" } else { "FAIL" }));
    }

    fn error(&mut self, what: &str, e: impl std::fmt::Display) {
        self.pass = false;
        self.details.push(format!("[FAIL] {what}: {e}"));
    }

    fn finish(self, id: u8, title: &'static str) -> CriterionResult {
        CriterionResult {
            id,
            title,
            pass: self.pass,
            details: self.details,
        }
    }
}

fn g(x: f64) -> String {
    format!("{x:.6e}")
}

/// Criteria 1 to 10 in order, with the states collected along the way.
pub fn run_all(cfg: &VerifyConfig) -> Result<(Vec<CriterionResult>, Vec<StateRecord>)> {
    let mesh = build_mesh(&cfg.domain)?;
    type Job<'a> = Box<dyn Fn() -> (CriterionResult, Vec<StateRecord>) + Send + Sync + 'a>;
    let jobs: Vec<Job> = vec![
        Box::new(|| (eigen_correctness(cfg, &mesh), Vec::new())),
        Box::new(|| (threshold_monotonicity(cfg, &mesh), Vec::new())),
        Box::new(|| no_zone_regimes(cfg, &mesh)),
        Box::new(|| positive_mu_onset(cfg, &mesh)),
        Box::new(|| nonpositive_mu_onset(cfg, &mesh)),
        Box::new(|| large_mu_limit(cfg, &mesh)),
        Box::new(|| scalar_limit_problem(cfg, &mesh)),
    ];
    let outputs: Vec<(CriterionResult, Vec<StateRecord>)> = jobs.par_iter().map(|job| job()).collect();
    let mut results = Vec::new();
    let mut states = Vec::new();
    for (r, s) in outputs {
        results.push(r);
        states.extend(s);
    }
    results.push(bounds_everywhere(&states));
    results.push(integral_identity(&mesh, &states));
    results.sort_by_key(|r| r.id);
    Ok((results, states))
}

/// Criterion 10: the rendered report of the other criteria is byte-identical
/// across two runs.
pub fn determinism(first: &str, second: &str) -> CriterionResult {
    let mut c = Check::new();
    c.expect(
        first == second,
        format!("report bytes identical across two runs ({} bytes)", first.len()),
    );
    c.finish(10, "determinism")
}

pub fn render_report(results: &[CriterionResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&format!(
            "{:>2} {:<40} {}\n",
            r.id,
            r.title,
            if r.pass { "PASS" } else { "FAIL" }
        ));
        for d in &r.details {
            out.push_str(&format!("     {d}\n"));
        }
    }
    let passed = results.iter().filter(|r| r.pass).count();
    out.push_str(&format!("{passed}/{} criteria passed\n", results.len()));
    out
}

fn eigen_correctness(cfg: &VerifyConfig, mesh: &Mesh) -> CriterionResult {
    let mut c = Check::new();
    let mut meshes = vec![("1d", Ok(mesh))];
    let owned;
    if let Some(spec) = &cfg.domain_2d {
        owned = build_mesh(spec);
        meshes.push(("2d", owned.as_ref().map_err(|e| e.to_string())));
    }
    for (name, m) in meshes {
        let m = match m {
            Ok(m) => m,
            Err(e) => {
                c.error(name, e);
                continue;
            }
        };
        let n = m.node_count();
        let run = || -> Result<(f64, f64, f64, f64)> {
            let zero = principal_eigenvalue(m, Region::Omega, &vec![0.0; n], cfg.eigen_tol)?;
            let cst = principal_eigenvalue(m, Region::Omega, &vec![3.7; n], cfg.eigen_tol)?;
            let q0 = refuge_potential(&cfg.params, m)?;
            let piece = principal_eigenvalue(m, Region::Omega, &q0, cfg.eigen_tol)?;
            let oracle = dense_spectrum_oracle(m.laplacian(Region::Omega), &q0)?[0];
            Ok((zero, cst, piece, oracle))
        };
        match run() {
            Ok((zero, cst, piece, oracle)) => {
                c.expect(zero.abs() <= 1e-10, format!("{name}: lambda1(0) = {}", g(zero)));
                c.expect((cst - 3.7).abs() <= 1e-10, format!("{name}: lambda1(3.7) - 3.7 = {}", g(cst - 3.7)));
                c.expect(
                    (piece - oracle).abs() <= 1e-8,
                    format!("{name}: lambda1(q0) = {}, dense = {}, gap {}", g(piece), g(oracle), g((piece - oracle).abs())),
                );
            }
            Err(e) => c.error(name, e),
        }
    }
    c.finish(1, "principal eigenvalue correctness")
}

fn threshold_monotonicity(cfg: &VerifyConfig, mesh: &Mesh) -> CriterionResult {
    let mut c = Check::new();
    let p = cfg.params;
    let run = |c: &mut Check| -> Result<()> {
        let mus = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0];
        let stars = mus
            .iter()
            .map(|&mu| theta_star_tol(&p.with_mu(mu), mesh, cfg.eigen_tol))
            .collect::<Result<Vec<f64>>>()?;
        let t0 = theta0(&p);
        let t1 = theta1_tol(&p, mesh, cfg.eigen_tol)?;
        c.expect(
            stars.windows(2).all(|w| w[0] < w[1]),
            format!("theta* increasing over mu: {}", stars.iter().map(|s| g(*s)).collect::<Vec<_>>().join(" ")),
        );
        c.expect(stars.iter().all(|&s| s < t0), format!("theta* < theta0 = {}", g(t0)));
        let (d8, d64) = ((stars[5] - t1).abs(), (stars[7] - t1).abs());
        c.expect(d64 < d8, format!("|theta*(64) - theta1| = {} < |theta*(8) - theta1| = {}", g(d64), g(d8)));
        let bound = p.a * mesh.measure_omega1() / (p.k * mesh.measure_omega());
        c.expect(t1 <= bound + 1e-3, format!("theta1 = {} <= a|O1|/(k|O|) = {}", g(t1), g(bound)));

        let base = DomainSpec {
            zone: None,
            ..cfg.domain.clone()
        };
        let len = base.lengths[0];
        let h = len / (base.resolution - 1) as f64;
        let pm = p.with_mu(1.0);
        let nested = zone_study(&base, &[0.2 * len, 0.4 * len, 0.6 * len, 0.8 * len], &pm)?;
        c.expect(
            nested.strictly_decreasing(),
            format!(
                "nested zones: theta* {}",
                nested
                    .rows
                    .iter()
                    .map(|r| r.theta_star.map_or("error".into(), g))
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
        );
        let ends = zone_study(&base, &[h, len - 2.0 * h], &pm)?;
        let limit = ends.no_zone_limit;
        match (ends.rows[0].theta_star, ends.rows[1].theta_star) {
            (Some(small), Some(large)) => {
                let gap = (small - limit).abs() / limit;
                c.expect(gap <= 0.05, format!("one-cell zone: theta* = {}, gap {} to {}", g(small), g(gap), g(limit)));
                c.expect(
                    large < 0.05 * limit,
                    format!("zone {:?}: theta* = {} < {}", centred_zone(&base, len - 2.0 * h)[0], g(large), g(0.05 * limit)),
                );
            }
            _ => c.error("zone limits", "geometry error"),
        }
        Ok(())
    };
    if let Err(e) = run(&mut c) {
        c.error("thresholds", e);
    }
    c.finish(2, "threshold monotonicity and limits")
}

fn record(label: &str, params: &ParamSet, state: &SteadyState) -> StateRecord {
    StateRecord {
        label: label.to_string(),
        params: *params,
        state: state.clone(),
    }
}

fn settle_from(cfg: &VerifyConfig, mesh: &Mesh, p: &ParamSet, u0: f64, v0: f64) -> Result<SteadyState> {
    let s = settle(mesh, p, &vec![u0; mesh.node_count()], &vec![v0; mesh.omega1_len()], &cfg.settle)?;
    Ok(s.state)
}

fn no_zone_regimes(cfg: &VerifyConfig, mesh: &Mesh) -> (CriterionResult, Vec<StateRecord>) {
    let mut c = Check::new();
    let mut states = Vec::new();
    let base = cfg.params;
    let p1 = ParamSet {
        c: 1.0,
        m: 0.5,
        theta: 1.0,
        ..base
    };
    let p1 = p1.with_mu(p1.predator_floor() - 0.1);
    match settle_from(cfg, mesh, &p1, 0.5 * p1.theta, 1.0) {
        Ok(s) => {
            let vmax = s.v.max();
            let du = s.u.iter().fold(0.0f64, |m, u| m.max((u - p1.theta).abs()));
            c.expect(s.converged, format!("mu = {}: steady residual {}", g(p1.mu), g(s.residual)));
            c.expect(vmax < 1e-6, format!("mu = {}: max v = {}", g(p1.mu), g(vmax)));
            c.expect(du < 1e-6, format!("mu = {}: |u - theta| = {}", g(p1.mu), g(du)));
            if s.converged {
                states.push(record("predator below floor", &p1, &s));
            }
        }
        Err(e) => c.error("predator below floor", e),
    }
    let p2 = base.with_theta(theta0(&base) + 0.1).with_mu(5.0);
    match settle_from(cfg, mesh, &p2, 0.5 * p2.theta, p2.mu) {
        Ok(s) => {
            c.expect(s.converged, format!("theta = {}: steady residual {}", g(p2.theta), g(s.residual)));
            c.expect(s.u.min() > 0.05, format!("theta = {}: min u = {}", g(p2.theta), g(s.u.min())));
            if s.converged {
                states.push(record("prey above theta0", &p2, &s));
            }
        }
        Err(e) => c.error("prey above theta0", e),
    }
    (c.finish(3, "persistence without a zone"), states)
}

fn positive_mu_onset(cfg: &VerifyConfig, mesh: &Mesh) -> (CriterionResult, Vec<StateRecord>) {
    let mut c = Check::new();
    let mut states = Vec::new();
    let p = cfg.params.with_mu(1.0);
    let run = |c: &mut Check, states: &mut Vec<StateRecord>| -> Result<()> {
        let star = theta_star_tol(&p, mesh, cfg.eigen_tol)?;
        let t0 = theta0(&p);
        c.expect(
            p.m <= p.handling_bound(),
            format!("m = {} <= (1+k mu)^2/(a mu) = {}", g(p.m), g(p.handling_bound())),
        );
        let above = p.with_theta(star + 0.1 * (t0 - star));
        let s = settle_from(cfg, mesh, &above, 0.5 * above.theta, above.mu)?;
        let outcome = classify_outcome(&s, default_eps_pos(&above));
        c.expect(
            s.converged && outcome.label == OutcomeLabel::Coexistence,
            format!("theta = {}: {} (min u {}, min v {})", g(above.theta), outcome.label, g(outcome.min_u), g(outcome.min_v)),
        );
        let b = check_apriori(&s, &above);
        c.expect(b.pass(), format!("theta = {}: a priori bounds {}", g(above.theta), bound_text(&b)));
        if s.converged {
            states.push(record("coexistence above theta*", &above, &s));
        }
        let below = p.with_theta(0.95 * star);
        let s = settle_from(cfg, mesh, &below, 0.5 * below.theta, below.mu)?;
        let eps = default_eps_pos(&below);
        let dv = s.v.iter().fold(0.0f64, |m, v| m.max((v - below.mu).abs()));
        c.expect(s.converged, format!("theta = {}: steady residual {}", g(below.theta), g(s.residual)));
        c.expect(s.u.max() < eps, format!("theta = {}: max u = {} < {}", g(below.theta), g(s.u.max()), g(eps)));
        c.expect(dv < 1e-4, format!("theta = {}: |v - mu| = {}", g(below.theta), g(dv)));
        if s.converged {
            states.push(record("prey extinct below theta*", &below, &s));
        }
        let grid = default_theta_grid(mesh, &p, cfg.sweep_points)?;
        let branch = sweep_theta(mesh, &p, &grid, &SweepOptions { settle: cfg.settle, ..Default::default() })?;
        match branch.bifurcation {
            Some(b) => {
                let gap = (b.theta_hat - star).abs() / star;
                c.expect(
                    gap <= 0.02,
                    format!("sweep: theta_hat = {}, theta* = {}, relative gap {}", g(b.theta_hat), g(star), g(gap)),
                );
            }
            None => c.error("sweep", "no onset detected"),
        }
        c.expect(
            branch.success_fraction() >= 0.9,
            format!("sweep: {}/{} points converged", branch.converged, branch.points.len()),
        );
        if let Some(spec) = &cfg.domain_2d {
            let m2 = build_mesh(spec)?;
            let star2 = theta_star_tol(&p, &m2, cfg.eigen_tol)?;
            let p2 = p.with_theta(star2 + 0.1 * (t0 - star2));
            let s = settle_from(cfg, &m2, &p2, 0.5 * p2.theta, p2.mu)?;
            let outcome = classify_outcome(&s, default_eps_pos(&p2));
            let b = check_apriori(&s, &p2);
            c.expect(
                s.converged && outcome.label == OutcomeLabel::Coexistence && b.pass(),
                format!("2d theta = {}: {}, {}", g(p2.theta), outcome.label, bound_text(&b)),
            );
        }
        Ok(())
    };
    if let Err(e) = run(&mut c, &mut states) {
        c.error("positive mu", e);
    }
    (c.finish(4, "coexistence onset for positive mu"), states)
}

fn nonpositive_mu_onset(cfg: &VerifyConfig, mesh: &Mesh) -> (CriterionResult, Vec<StateRecord>) {
    let mut c = Check::new();
    let mut states = Vec::new();
    let p = ParamSet {
        c: 1.0,
        m: 0.5,
        ..cfg.params
    }
    .with_mu(-0.5);
    let run = |c: &mut Check, states: &mut Vec<StateRecord>| -> Result<()> {
        let tn = theta_neg(&p)?;
        let above = p.with_theta(1.1 * tn);
        let s = settle_from(cfg, mesh, &above, 0.5 * above.theta, 0.5)?;
        let outcome = classify_outcome(&s, default_eps_pos(&above));
        c.expect(
            s.converged && outcome.label == OutcomeLabel::Coexistence,
            format!("theta = {}: {} (min v {})", g(above.theta), outcome.label, g(outcome.min_v)),
        );
        if s.converged {
            states.push(record("coexistence above theta_-", &above, &s));
        }
        let below = p.with_theta(0.9 * tn);
        let s = settle_from(cfg, mesh, &below, 0.5 * below.theta, 0.5)?;
        let du = s.u.iter().fold(0.0f64, |m, u| m.max((u - below.theta).abs()));
        c.expect(s.converged, format!("theta = {}: steady residual {}", g(below.theta), g(s.residual)));
        c.expect(s.v.max() < 1e-5, format!("theta = {}: max v = {}", g(below.theta), g(s.v.max())));
        c.expect(du < 1e-5, format!("theta = {}: |u - theta| = {}", g(below.theta), g(du)));
        if s.converged {
            states.push(record("predator extinct below theta_-", &below, &s));
        }
        let grid = default_theta_grid(mesh, &p, cfg.sweep_points)?;
        let step = grid[1] - grid[0];
        let opts = SweepOptions {
            settle: cfg.settle,
            ..Default::default()
        };
        let up = sweep_theta(mesh, &p, &grid, &opts)?;
        let mut rev = grid.clone();
        rev.reverse();
        let down = sweep_theta(mesh, &p, &rev, &opts)?;
        match (up.bifurcation, down.bifurcation) {
            (Some(a), Some(b)) => {
                let gap = (a.theta_hat - tn).abs() / tn;
                c.expect(gap <= 0.02, format!("ascending theta_hat = {}, theta_- = {}, gap {}", g(a.theta_hat), g(tn), g(gap)));
                let diff = (a.theta_hat - b.theta_hat).abs();
                c.expect(
                    diff <= step,
                    format!("descending theta_hat = {}, difference {} <= grid step {}", g(b.theta_hat), g(diff), g(step)),
                );
            }
            _ => c.error("sweeps", "onset not detected in both directions"),
        }
        Ok(())
    };
    if let Err(e) = run(&mut c, &mut states) {
        c.error("nonpositive mu", e);
    }
    (c.finish(5, "coexistence threshold for nonpositive mu"), states)
}

fn large_mu_limit(cfg: &VerifyConfig, mesh: &Mesh) -> (CriterionResult, Vec<StateRecord>) {
    let mut c = Check::new();
    let mut states = Vec::new();
    let run = |c: &mut Check, states: &mut Vec<StateRecord>| -> Result<()> {
        let t1 = theta1_tol(&cfg.params, mesh, cfg.eigen_tol)?;
        let p = cfg.params.with_theta(t1 + 0.5);
        let opts = AsymptoticOptions {
            settle: cfg.settle,
            extra_starts: cfg.extra_starts,
            seed: cfg.seed,
        };
        let table = asymptotic_mu(mesh, &p, &[8.0, 16.0, 32.0, 64.0], &opts)?;
        for row in &table.rows {
            c.expect(
                row.outcome == OutcomeLabel::Coexistence,
                format!(
                    "mu = {}: e_u = {}, e_v = {} (bound {}), spread {}, eta = {}",
                    g(row.mu),
                    g(row.e_u),
                    g(row.e_v),
                    g(row.e_v_bound),
                    g(row.spread),
                    g(row.eta_re)
                ),
            );
            c.expect(
                row.e_v <= row.e_v_bound + 1e-6 * p.theta.max(1.0),
                format!("mu = {}: e_v within the a priori bound", g(row.mu)),
            );
            for (i, s) in row.states.iter().enumerate() {
                states.push(record(&format!("large mu {} start {i}", row.mu), &p.with_mu(row.mu), s));
            }
        }
        c.expect(table.errors_decrease(), "e_u and e_v strictly decreasing in mu".into());
        for row in table.rows.iter().filter(|r| r.mu >= 32.0) {
            c.expect(row.spread < 1e-6, format!("mu = {}: multi-start spread {} < 1e-6", g(row.mu), g(row.spread)));
            c.expect(
                row.verdict == Verdict::Stable && row.eta_re > 1e-6,
                format!("mu = {}: {} (eta = {})", g(row.mu), row.verdict, g(row.eta_re)),
            );
        }
        let e = eta_star(mesh, &p)?;
        c.expect(e.eigenvalue > 0.0, format!("eta* = {}", g(e.eigenvalue)));
        let gap = (e.eigenvalue - e.ratio).abs();
        c.expect(gap <= 1e-6, format!("eta* eigenvalue vs integral ratio {}: gap {}", g(e.ratio), g(gap)));
        Ok(())
    };
    if let Err(e) = run(&mut c, &mut states) {
        c.error("large mu", e);
    }
    (c.finish(6, "large-mu limit, uniqueness and stability"), states)
}

fn bound_text(b: &BoundReport) -> String {
    format!(
        "u in [{}, {}] <= {}, v in [{}, {}] within ({}, {}]",
        g(b.min_u),
        g(b.max_u),
        g(b.u_upper),
        g(b.min_v),
        g(b.max_v),
        g(b.v_lower),
        g(b.v_upper)
    )
}

fn bounds_everywhere(states: &[StateRecord]) -> CriterionResult {
    let mut c = Check::new();
    let mut failures = 0;
    for r in states {
        let b = check_apriori(&r.state, &r.params);
        if !b.pass() {
            failures += 1;
            c.expect(false, format!("{}: {}", r.label, bound_text(&b)));
        }
    }
    c.expect(
        failures == 0 && !states.is_empty(),
        format!("{} converged states checked, {failures} violations", states.len()),
    );
    c.finish(7, "a priori bounds on every state")
}

fn scalar_limit_problem(cfg: &VerifyConfig, mesh: &Mesh) -> (CriterionResult, Vec<StateRecord>) {
    let mut c = Check::new();
    let mut states = Vec::new();
    let run = |c: &mut Check, states: &mut Vec<StateRecord>| -> Result<()> {
        let p = cfg.params;
        let q0 = refuge_potential(&p, mesh)?;
        let t1 = theta1_tol(&p, mesh, cfg.eigen_tol)?;
        let below = solve_logistic(mesh, t1 - 0.05, &q0, None)?;
        c.expect(
            below.classification == Classification::Zero,
            format!("theta1 - 0.05: {:?}", below.classification),
        );
        let theta = t1 + 0.05;
        let sup = solve_logistic(mesh, theta, &q0, None)?;
        c.expect(
            sup.classification == Classification::Positive,
            format!("theta1 + 0.05: {:?}, max U = {}", sup.classification, g(sup.field.max())),
        );
        let start = subsolution_start(mesh, theta, &q0)?;
        let sub = solve_logistic(mesh, theta, &q0, Some(&start))?;
        let d = sup.field.max_abs_diff(&sub.field);
        c.expect(d <= 1e-8, format!("sub/super starts differ by {}", g(d)));

        let p = p.with_theta(t1 + 0.5);
        let limit = solve_logistic(mesh, p.theta, &q0, None)?;
        let aux = solve_aux_mu(mesh, &p.with_mu(1e4))?;
        let d = aux.field.max_abs_diff(&limit.field);
        c.expect(d <= 1e-2, format!("mu = 1e4 auxiliary vs limit: {}", g(d)));

        let p8 = p.with_mu(8.0);
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let run = homotopy_t(mesh, &p8, &grid)?;
        let aux8 = solve_aux_mu(mesh, &p8)?;
        let direct = solve_steady(mesh, &p8, &aux8.field, &vec![p8.mu; mesh.omega1_len()])?;
        let d = run.state.u.max_abs_diff(&direct.u).max(run.state.v.max_abs_diff(&direct.v));
        c.expect(d <= 1e-8, format!("homotopy endpoint vs direct Newton: {}", g(d)));
        states.push(record("homotopy endpoint", &p8, &run.state));
        states.push(record("direct Newton", &p8, &direct));
        Ok(())
    };
    if let Err(e) = run(&mut c, &mut states) {
        c.error("scalar", e);
    }
    (c.finish(8, "scalar limit problem and continuation"), states)
}

fn integral_identity(mesh: &Mesh, states: &[StateRecord]) -> CriterionResult {
    let mut c = Check::new();
    let bound = 1e-8 * mesh.measure_omega1();
    let mut worst = 0.0f64;
    for r in states {
        match predator_integral(mesh, &r.params, &r.state) {
            Ok(v) => {
                worst = worst.max(v);
                if v > bound {
                    c.expect(false, format!("{}: {}", r.label, g(v)));
                }
            }
            Err(e) => c.error(&r.label, e),
        }
    }
    c.expect(
        worst <= bound && !states.is_empty(),
        format!("worst |integral| = {} over {} states (bound {})", g(worst), states.len(), g(bound)),
    );
    c.finish(9, "predator integral identity")
}
