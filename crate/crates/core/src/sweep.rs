//! Parameter studies: θ-sweeps with bifurcation detection, the large-μ
//! asymptotics, and protection-zone size studies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coupled::{
    check_apriori, classify_outcome, default_eps_pos, homotopy_t, settle, OutcomeLabel, SettleOptions,
    SteadyState,
};
use crate::error::{Error, Result};
use crate::mesh::{build_mesh, DomainSpec, GridField, Mesh};
use crate::scalar::{solve_logistic, Classification};
use crate::stability::{self, linearize, principal_eta, Verdict};
use crate::thresholds::{refuge_potential, theta0, theta_neg, theta_star, ParamSet};

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Converged,
    NotConverged,
    Failed(String),
}

impl PointStatus {
    pub fn label(&self) -> &str {
        match self {
            PointStatus::Converged => "ok",
            PointStatus::NotConverged => "not_converged",
            PointStatus::Failed(_) => "failed",
        }
    }

    pub fn is_ok(&self) -> bool {
        *self == PointStatus::Converged
    }
}

/// Summary of one steady state along a branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub parameter: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub residual: f64,
    pub outcome: Option<OutcomeLabel>,
    pub eta_re: Option<f64>,
    pub bounds_pass: Option<bool>,
    pub status: PointStatus,
}

impl BranchPoint {
    fn failed(parameter: f64, msg: String) -> Self {
        Self {
            parameter,
            min_u: f64::NAN,
            max_u: f64::NAN,
            min_v: f64::NAN,
            max_v: f64::NAN,
            residual: f64::NAN,
            outcome: None,
            eta_re: None,
            bounds_pass: None,
            status: PointStatus::Failed(msg),
        }
    }

    pub fn is_coexistence(&self) -> bool {
        self.status.is_ok() && self.outcome == Some(OutcomeLabel::Coexistence)
    }
}

/// Detected onset of coexistence along a θ-sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BifurcationEstimate {
    pub theta_hat: f64,
    /// Last grid value without coexistence and first with it.
    pub bracket: (f64, f64),
    /// θ* for `μ > 0`, θ₋ for `μ ≤ 0`.
    pub predicted: Option<f64>,
    pub rel_gap: Option<f64>,
    /// Number of coexistence points used by the fit.
    pub fit_points: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub warm_start: bool,
    pub settle: SettleOptions,
    /// Positivity threshold; `None` uses `1e-4·max(1, θ)` per point.
    pub eps_pos: Option<f64>,
    pub stability: bool,
    /// Keep every solved state in [`Branch::states`].
    pub keep_states: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            warm_start: true,
            settle: SettleOptions::default(),
            eps_pos: None,
            stability: false,
            keep_states: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    /// Solved state per point when requested, `None` for failed points.
    pub states: Vec<Option<SteadyState>>,
    pub bifurcation: Option<BifurcationEstimate>,
    /// Number of θ-values at which the steady state was obtained.
    pub converged: usize,
}

impl Branch {
    pub fn success_fraction(&self) -> f64 {
        if self.points.is_empty() {
            return 1.0;
        }
        self.converged as f64 / self.points.len() as f64
    }
}

/// Positive initial data used for points without a warm start.
pub fn cold_start(mesh: &Mesh, params: &ParamSet) -> (Vec<f64>, Vec<f64>) {
    (
        vec![0.5 * params.theta.max(1e-3); mesh.node_count()],
        vec![params.mu.max(0.5); mesh.omega1_len()],
    )
}

/// Previous state lifted off any invariant zero set.
fn warm_start(state: &SteadyState, params: &ParamSet) -> (Vec<f64>, Vec<f64>) {
    let du = 1e-2 * params.theta.max(1e-3);
    let dv = 1e-2 * params.mu.max(1.0);
    (
        state.u.iter().map(|x| x + du).collect(),
        state.v.iter().map(|x| x + dv).collect(),
    )
}

fn solve_point(
    mesh: &Mesh,
    params: &ParamSet,
    start: (Vec<f64>, Vec<f64>),
    opts: &SweepOptions,
) -> (BranchPoint, Option<SteadyState>) {
    let settled = match settle(mesh, params, &start.0, &start.1, &opts.settle) {
        Ok(s) => s,
        Err(e) => return (BranchPoint::failed(params.theta, e.to_string()), None),
    };
    let state = settled.state;
    let eps = opts.eps_pos.unwrap_or_else(|| default_eps_pos(params));
    let outcome = classify_outcome(&state, eps);
    let eta_re = if opts.stability && state.converged {
        linearize(mesh, params, &state)
            .and_then(|sys| principal_eta(&sys, stability::DEFAULT_TOL))
            .map(|v| v.eta_re)
            .ok()
    } else {
        None
    };
    let point = BranchPoint {
        parameter: params.theta,
        min_u: outcome.min_u,
        max_u: outcome.max_u,
        min_v: outcome.min_v,
        max_v: outcome.max_v,
        residual: state.residual,
        outcome: Some(outcome.label),
        eta_re,
        bounds_pass: state.converged.then(|| check_apriori(&state, params).pass()),
        status: if state.converged {
            PointStatus::Converged
        } else {
            PointStatus::NotConverged
        },
    };
    (point, Some(state))
}

/// `n` θ-values bracketing the predicted onset: `(θ*/2, θ₀)` for `μ > 0`,
/// `θ₋·[1/2, 3/2]` for `-c/m < μ ≤ 0`, and `(0, 2θ₀]` otherwise.
pub fn default_theta_grid(mesh: &Mesh, params: &ParamSet, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::Param(format!("a theta grid needs at least 2 points, got {n}")));
    }
    let t0 = theta0(params);
    if params.mu > 0.0 {
        let lo = 0.5 * theta_star(params, mesh)?;
        return Ok((1..=n).map(|i| lo + (t0 - lo) * i as f64 / (n + 1) as f64).collect());
    }
    let limit = 2.0 * t0;
    let grid: Vec<f64> = match theta_neg(params) {
        Ok(tn) => (0..n).map(|i| tn * (0.5 + i as f64 / (n - 1) as f64)).collect(),
        Err(_) => (1..=n).map(|i| limit * i as f64 / n as f64).collect(),
    };
    Ok(grid.into_iter().filter(|&t| t <= limit).collect())
}

/// Follow the steady state along `grid` (strictly monotone in θ) at fixed μ.
pub fn sweep_theta(mesh: &Mesh, params: &ParamSet, grid: &[f64], opts: &SweepOptions) -> Result<Branch> {
    params.validate()?;
    if grid.is_empty() {
        return Err(Error::Param("theta grid is empty".into()));
    }
    let ascending = grid.windows(2).all(|w| w[0] < w[1]);
    let descending = grid.windows(2).all(|w| w[0] > w[1]);
    if !(ascending || descending) {
        return Err(Error::Param("theta grid must be strictly monotone".into()));
    }
    let limit = 2.0 * theta0(params);
    if let Some(t) = grid.iter().find(|&&t| !(t > 0.0 && t <= limit)) {
        return Err(Error::Param(format!("theta = {t} outside (0, 2 theta0 = {limit}]")));
    }
    let solved: Vec<(BranchPoint, Option<SteadyState>)> = if opts.warm_start {
        let mut out = Vec::with_capacity(grid.len());
        let mut previous: Option<SteadyState> = None;
        for &theta in grid {
            let p = params.with_theta(theta);
            let start = match &previous {
                Some(s) => warm_start(s, &p),
                None => cold_start(mesh, &p),
            };
            let (point, state) = solve_point(mesh, &p, start, opts);
            if let Some(s) = state.as_ref().filter(|s| s.converged) {
                previous = Some(s.clone());
            }
            out.push((point, state));
        }
        out
    } else {
        grid.par_iter()
            .map(|&theta| {
                let p = params.with_theta(theta);
                solve_point(mesh, &p, cold_start(mesh, &p), opts)
            })
            .collect()
    };
    let (points, states): (Vec<BranchPoint>, Vec<Option<SteadyState>>) = solved.into_iter().unzip();
    let states = if opts.keep_states { states } else { Vec::new() };
    let converged = points.iter().filter(|p| p.status.is_ok()).count();
    let predicted = if params.mu > 0.0 {
        Some(theta_star(params, mesh)?)
    } else {
        theta_neg(params).ok()
    };
    let bifurcation = detect_bifurcation(&points, params.mu > 0.0).map(|mut b| {
        b.predicted = predicted;
        b.rel_gap = predicted.map(|p| (b.theta_hat - p).abs() / p.abs().max(f64::MIN_POSITIVE));
        b
    });
    Ok(Branch {
        points,
        states,
        bifurcation,
        converged,
    })
}

/// Onset of coexistence from the converged points of a branch.
///
/// The invading species (`u` when `prey_invades`, else `v`) has a minimum
/// that grows linearly from zero past the transcritical point. The root of a
/// fit through the first coexistence points, clamped to the bracketing grid
/// interval, is the estimate.
pub fn detect_bifurcation(points: &[BranchPoint], prey_invades: bool) -> Option<BifurcationEstimate> {
    let mut ok: Vec<&BranchPoint> = points.iter().filter(|p| p.status.is_ok()).collect();
    ok.sort_by(|a, b| a.parameter.total_cmp(&b.parameter));
    let first = ok.iter().position(|p| p.is_coexistence())?;
    if first == 0 || !ok[first..].iter().all(|p| p.is_coexistence()) {
        return None;
    }
    let lo = ok[first - 1].parameter;
    let hi = ok[first].parameter;
    let invader = |p: &BranchPoint| if prey_invades { p.min_u } else { p.min_v };
    let fit: Vec<(f64, f64)> = ok[first..].iter().take(3).map(|p| (p.parameter, invader(p))).collect();
    let root = match fit.as_slice() {
        [(x0, y0), (x1, y1), (x2, y2)] => quadratic_root(*x0, *y0, *x1, *y1, *x2, *y2, lo, hi)
            .or_else(|| linear_root(*x0, *y0, *x1, *y1)),
        [(x0, y0), (x1, y1)] => linear_root(*x0, *y0, *x1, *y1),
        _ => None,
    };
    let theta_hat = root.unwrap_or(0.5 * (lo + hi)).clamp(lo, hi);
    Some(BifurcationEstimate {
        theta_hat,
        bracket: (lo, hi),
        predicted: None,
        rel_gap: None,
        fit_points: fit.len(),
    })
}

fn linear_root(x0: f64, y0: f64, x1: f64, y1: f64) -> Option<f64> {
    let slope = (y1 - y0) / (x1 - x0);
    (slope > 0.0 && slope.is_finite()).then(|| x0 - y0 / slope)
}

/// Root of the interpolating parabola closest to the bracket `[lo, hi]`.
#[allow(clippy::too_many_arguments)]
fn quadratic_root(x0: f64, y0: f64, x1: f64, y1: f64, x2: f64, y2: f64, lo: f64, hi: f64) -> Option<f64> {
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let c2 = (d12 - d01) / (x2 - x0);
    // y = y0 + d01 (x - x0) + c2 (x - x0)(x - x1), expanded around x0.
    let a = c2;
    let b = d01 - c2 * (x1 - x0);
    let c = y0;
    let roots: Vec<f64> = if a.abs() < 1e-14 * b.abs() {
        vec![-c / b]
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return None;
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        vec![q / a, c / q]
    };
    let mid = 0.5 * (lo + hi);
    roots
        .into_iter()
        .map(|s| s + x0)
        .filter(|r| r.is_finite() && *r >= lo - (hi - lo) && *r <= hi + 1e-12)
        .min_by(|a, b| (a - mid).abs().total_cmp(&(b - mid).abs()))
}

#[derive(Debug, Clone)]
pub struct AsymptoticRow {
    pub mu: f64,
    /// `‖u - U_{θ,q₀}‖∞`.
    pub e_u: f64,
    /// `‖v - μ‖∞`.
    pub e_v: f64,
    /// `cθ/(1 + mθ + kμ)`, the a priori bound on `e_v`.
    pub e_v_bound: f64,
    /// Largest pairwise distance between the multi-start limits.
    pub spread: f64,
    pub outcome: OutcomeLabel,
    pub eta_re: f64,
    pub verdict: Verdict,
    pub bounds_pass: bool,
    pub residual: f64,
    pub states: Vec<SteadyState>,
}

#[derive(Debug, Clone)]
pub struct AsymptoticTable {
    pub theta: f64,
    pub limit_prey: GridField,
    pub rows: Vec<AsymptoticRow>,
}

impl AsymptoticTable {
    pub fn errors_decrease(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].e_u < w[0].e_u && w[1].e_v < w[0].e_v)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AsymptoticOptions {
    pub settle: SettleOptions,
    /// Random nodewise starts in `(0, θ] × (0, v_max]` on top of the three
    /// fixed ones.
    pub extra_starts: usize,
    pub seed: u64,
}

/// Coexistence states for increasing μ compared with `(U_{θ,q₀}, μ)`.
///
/// Each μ is solved from continuation in the predator coupling and from
/// two constant starts, plus `extra_starts` random ones.
pub fn asymptotic_mu(mesh: &Mesh, params: &ParamSet, mu_list: &[f64], opts: &AsymptoticOptions) -> Result<AsymptoticTable> {
    params.validate()?;
    if mu_list.is_empty() || !mu_list.windows(2).all(|w| w[0] < w[1]) || mu_list[0] <= 0.0 {
        return Err(Error::Param("mu list must be positive and strictly ascending".into()));
    }
    let theta = params.theta;
    let q0 = refuge_potential(params, mesh)?;
    let limit = solve_logistic(mesh, theta, &q0, None)?;
    if limit.classification == Classification::Zero {
        return Err(Error::Param(format!("theta = {theta} does not exceed theta1")));
    }
    let limit_prey = limit.field;
    let rows = mu_list
        .par_iter()
        .map(|&mu| asymptotic_row(mesh, &params.with_mu(mu), &limit_prey, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(AsymptoticTable {
        theta,
        limit_prey,
        rows,
    })
}

fn asymptotic_row(mesh: &Mesh, p: &ParamSet, limit: &GridField, opts: &AsymptoticOptions) -> Result<AsymptoticRow> {
    let (theta, mu) = (p.theta, p.mu);
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let primary = homotopy_t(mesh, p, &grid)?.state;
    let n = mesh.node_count();
    let n1 = mesh.omega1_len();
    let top = mu + p.c * theta / (1.0 + p.m * theta + p.k * mu);
    let mut starts = vec![(vec![theta; n], vec![top; n1]), (vec![0.25 * theta; n], vec![0.5 * mu; n1])];
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ mu.to_bits());
    for _ in 0..opts.extra_starts {
        let u0 = (0..n).map(|_| theta * (1.0 - rng.random::<f64>())).collect();
        let v0 = (0..n1).map(|_| top * (1.0 - rng.random::<f64>())).collect();
        starts.push((u0, v0));
    }
    let mut states = vec![primary];
    for (u0, v0) in starts {
        let s = settle(mesh, p, &u0, &v0, &opts.settle)?;
        if !s.state.converged {
            return Err(Error::IterationCap {
                what: "multi-start time marching",
                cap: s.evolution.steps,
                residual: s.state.residual,
            });
        }
        states.push(s.state);
    }
    let mut spread = 0.0f64;
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            spread = spread
                .max(states[i].u.max_abs_diff(&states[j].u))
                .max(states[i].v.max_abs_diff(&states[j].v));
        }
    }
    let s = &states[0];
    let sys = linearize(mesh, p, s)?;
    let verdict = principal_eta(&sys, stability::DEFAULT_TOL)?;
    Ok(AsymptoticRow {
        mu,
        e_u: s.u.max_abs_diff(limit),
        e_v: s.v.iter().fold(0.0, |m, v| m.max((v - mu).abs())),
        e_v_bound: p.c * theta / (1.0 + p.m * theta + p.k * mu),
        spread,
        outcome: classify_outcome(s, default_eps_pos(p)).label,
        eta_re: verdict.eta_re,
        verdict: verdict.verdict,
        bounds_pass: check_apriori(s, p).pass(),
        residual: s.residual,
        states,
    })
}

#[derive(Debug, Clone)]
pub struct ZoneRow {
    pub width: f64,
    /// Zone bounds per axis, or the geometry error.
    pub zone: std::result::Result<Vec<(f64, f64)>, String>,
    pub zone_measure: f64,
    pub theta_star: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ZoneTable {
    pub rows: Vec<ZoneRow>,
    /// `aμ/(1 + kμ)`: θ* without a zone.
    pub no_zone_limit: f64,
}

impl ZoneTable {
    pub fn strictly_decreasing(&self) -> bool {
        let vals: Vec<f64> = self.rows.iter().filter_map(|r| r.theta_star).collect();
        vals.len() == self.rows.len() && vals.windows(2).all(|w| w[1] < w[0])
    }
}

/// Zone of full width `width` centred in the domain, lower edge on the grid.
pub fn centred_zone(base: &DomainSpec, width: f64) -> Vec<(f64, f64)> {
    let cells = base.resolution - 1;
    base.lengths
        .iter()
        .map(|&len| {
            let h = len / cells as f64;
            let lo = ((0.5 * (len - width)) / h + 1e-9).floor() * h;
            (lo, lo + width)
        })
        .collect()
}

/// θ*(μ, Ω₀) for nested centred zones of increasing width.
pub fn zone_study(base: &DomainSpec, widths: &[f64], params: &ParamSet) -> Result<ZoneTable> {
    params.validate()?;
    if !(params.mu > 0.0) {
        return Err(Error::Param(format!("zone study needs mu > 0, got {}", params.mu)));
    }
    if widths.is_empty() || !widths.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Param("zone widths must be strictly ascending".into()));
    }
    let rows = widths
        .par_iter()
        .map(|&width| {
            let zone = centred_zone(base, width);
            match build_mesh(&base.clone().with_zone(zone.clone())) {
                Ok(mesh) => {
                    let star = theta_star(params, &mesh);
                    ZoneRow {
                        width,
                        zone_measure: mesh.measure_zone(),
                        theta_star: star.as_ref().ok().copied(),
                        zone: star.map(|_| zone).map_err(|e| e.to_string()),
                    }
                }
                Err(e) => ZoneRow {
                    width,
                    zone: Err(e.to_string()),
                    zone_measure: f64::NAN,
                    theta_star: None,
                },
            }
        })
        .collect();
    Ok(ZoneTable {
        rows,
        no_zone_limit: params.a * params.mu / (1.0 + params.k * params.mu),
    })
}
