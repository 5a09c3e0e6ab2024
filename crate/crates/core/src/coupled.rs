//! The predator–prey system with a protection zone.
//!
//! ```text
//! u_t = d₁Δu + u(θ - u - a(x)v/(1 + mu + kv))   in Ω
//! v_t = d₂Δv + v(μ - v + t·cu/(1 + mu + kv))    in Ω₁
//! ```
//!
//! with Neumann conditions on ∂Ω and ∂Ω₁. `t = 1` is the model itself;
//! smaller `t` is the continuation used to reach it from the predator-at-rest
//! problem. `u` lives on every node, `v` only on the Ω₁ nodes; the coupling
//! on Ω reads `v` extended by zero, which is exact since `a(x) = 0` there.

use std::fmt;

use crate::error::{Error, Result};
use crate::linsolve::{BandMatrix, BandedLu};
use crate::march::DiffusionStepper;
use crate::mesh::{extend, predation_field, GridField, Mesh, Region};
use crate::scalar::solve_aux_mu;
use crate::thresholds::ParamSet;

const NEWTON_STEPS: usize = 100;
const NEWTON_HALVINGS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Newton,
    TimeMarch,
    Homotopy,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Newton => "newton",
            Source::TimeMarch => "time-march",
            Source::Homotopy => "homotopy",
        })
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    /// Prey density on Ω.
    pub u: GridField,
    /// Predator density on Ω₁.
    pub v: GridField,
    /// Max-norm of the discrete steady equations.
    pub residual: f64,
    pub source: Source,
    pub iterations: usize,
    pub converged: bool,
}

/// Prey threshold `ε_pos = 1e-4·max(1, θ)` separating positive from vanishing.
pub fn default_eps_pos(params: &ParamSet) -> f64 {
    1e-4 * params.theta.max(1.0)
}

/// Newton tolerance `1e-10·max(1, θ, |μ|)`.
pub fn steady_tolerance(params: &ParamSet) -> f64 {
    1e-10 * params.scale()
}

/// Position of every unknown in the interleaved `(u₀, v₀, u₁, v₁, …)` order
/// used by banded factorizations; `v` slots exist only on Ω₁ nodes.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub(crate) u: Vec<usize>,
    pub(crate) v: Vec<usize>,
    pub(crate) band: usize,
}

impl Layout {
    pub(crate) fn new(mesh: &Mesh) -> Self {
        let mut u = Vec::with_capacity(mesh.node_count());
        let mut v = vec![0usize; mesh.omega1_len()];
        let mut next = 0usize;
        for node in 0..mesh.node_count() {
            u.push(next);
            next += 1;
            if let Some(j) = mesh.omega1_index(node) {
                v[j] = next;
                next += 1;
            }
        }
        let mut band = 1usize;
        let k = mesh.laplacian(Region::Omega).stiffness();
        for i in 0..k.n() {
            for (j, _) in k.row(i) {
                band = band.max(u[i].abs_diff(u[j]));
            }
        }
        let k1 = mesh.laplacian(Region::Omega1).stiffness();
        for i in 0..k1.n() {
            for (j, _) in k1.row(i) {
                band = band.max(v[i].abs_diff(v[j]));
            }
        }
        Self { u, v, band }
    }

    pub(crate) fn len(&self) -> usize {
        self.u.len() + self.v.len()
    }

    pub(crate) fn split(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        (
            self.u.iter().map(|&p| x[p]).collect(),
            self.v.iter().map(|&p| x[p]).collect(),
        )
    }

    pub(crate) fn join(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.len()];
        for (&p, &val) in self.u.iter().zip(u) {
            x[p] = val;
        }
        for (&p, &val) in self.v.iter().zip(v) {
            x[p] = val;
        }
        x
    }
}

/// Nodewise partial derivatives of the reaction terms.
#[derive(Debug, Clone)]
pub struct Coefficients {
    /// `θ - 2u - a(x)v(1+kv)/D²` on Ω.
    pub uu: GridField,
    /// `-a(x)u(1+mu)/D²` on Ω.
    pub uv: GridField,
    /// `μ - 2v + t·cu(1+mu)/D²` on Ω₁.
    pub vv: GridField,
    /// `t·cv(1+kv)/D²` on Ω₁.
    pub vu: GridField,
}

/// The discrete system at one parameter point and homotopy level.
#[derive(Debug, Clone)]
pub struct Model<'a> {
    mesh: &'a Mesh,
    params: ParamSet,
    a_field: GridField,
    t: f64,
}

impl<'a> Model<'a> {
    pub fn new(mesh: &'a Mesh, params: &ParamSet) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            mesh,
            params: *params,
            a_field: predation_field(mesh, params.a)?,
            t: 1.0,
        })
    }

    pub fn with_homotopy(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn mesh(&self) -> &'a Mesh {
        self.mesh
    }

    fn check_sizes(&self, u: &[f64], v: &[f64]) -> Result<()> {
        for (len, want) in [(u.len(), self.mesh.node_count()), (v.len(), self.mesh.omega1_len())] {
            if len != want {
                return Err(Error::SizeMismatch { expected: want, got: len });
            }
        }
        Ok(())
    }

    /// Reaction terms `(f, g)` on Ω and Ω₁.
    pub fn reactions(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = &self.params;
        let mesh = self.mesh;
        let f = (0..u.len())
            .map(|i| {
                let vi = mesh.omega1_index(i).map_or(0.0, |j| v[j]);
                let d = 1.0 + p.m * u[i] + p.k * vi;
                u[i] * (p.theta - u[i] - self.a_field[i] * vi / d)
            })
            .collect();
        let g = mesh
            .omega1_nodes()
            .iter()
            .zip(v)
            .map(|(&n, &vj)| {
                let d = 1.0 + p.m * u[n] + p.k * vj;
                vj * (p.mu - vj + self.t * p.c * u[n] / d)
            })
            .collect();
        (f, g)
    }

    /// Nodewise residuals `d₁(-Δ_h u) - f` and `d₂(-Δ_h v) - g`.
    pub fn residual(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (f, g) = self.reactions(u, v);
        let lu = self.mesh.laplacian(Region::Omega).apply(u);
        let lv = self.mesh.laplacian(Region::Omega1).apply(v);
        let d1 = self.params.d1;
        let d2 = self.params.d2;
        (
            lu.iter().zip(f).map(|(l, f)| d1 * l - f).collect(),
            lv.iter().zip(g).map(|(l, g)| d2 * l - g).collect(),
        )
    }

    pub fn residual_norm(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let (ru, rv) = self.residual(u, v);
        let mut m = 0.0f64;
        for r in ru.iter().chain(&rv) {
            if !r.is_finite() {
                return Err(Error::NonFinite("coupled residual"));
            }
            m = m.max(r.abs());
        }
        Ok(m)
    }

    pub fn coefficients(&self, u: &[f64], v: &[f64]) -> Coefficients {
        let p = &self.params;
        let mesh = self.mesh;
        let mut uu = Vec::with_capacity(u.len());
        let mut uv = Vec::with_capacity(u.len());
        for i in 0..u.len() {
            let vi = mesh.omega1_index(i).map_or(0.0, |j| v[j]);
            let a = self.a_field[i];
            let d = 1.0 + p.m * u[i] + p.k * vi;
            let d2 = d * d;
            uu.push(p.theta - 2.0 * u[i] - a * vi * (1.0 + p.k * vi) / d2);
            uv.push(-a * u[i] * (1.0 + p.m * u[i]) / d2);
        }
        let mut vv = Vec::with_capacity(v.len());
        let mut vu = Vec::with_capacity(v.len());
        for (&n, &vj) in mesh.omega1_nodes().iter().zip(v) {
            let d = 1.0 + p.m * u[n] + p.k * vj;
            let d2 = d * d;
            vv.push(p.mu - 2.0 * vj + self.t * p.c * u[n] * (1.0 + p.m * u[n]) / d2);
            vu.push(self.t * p.c * vj * (1.0 + p.k * vj) / d2);
        }
        Coefficients {
            uu: uu.into(),
            uv: uv.into(),
            vv: vv.into(),
            vu: vu.into(),
        }
    }

    /// Mass-weighted `blockdiag(d₁K, d₂K₁) - W·J - shift·W` in interleaved order.
    pub(crate) fn assemble(&self, layout: &Layout, coef: &Coefficients, shift: f64) -> BandMatrix {
        let mesh = self.mesh;
        let op = mesh.laplacian(Region::Omega);
        let op1 = mesh.laplacian(Region::Omega1);
        let (w, w1) = (op.mass(), op1.mass());
        let mut a = BandMatrix::zeros(layout.len(), layout.band, layout.band);
        let k = op.stiffness();
        for i in 0..k.n() {
            for (j, val) in k.row(i) {
                a.add(layout.u[i], layout.u[j], self.params.d1 * val);
            }
            a.add(layout.u[i], layout.u[i], -w[i] * (coef.uu[i] + shift));
            if let Some(j) = mesh.omega1_index(i) {
                if coef.uv[i] != 0.0 {
                    a.add(layout.u[i], layout.v[j], -w[i] * coef.uv[i]);
                }
            }
        }
        let k1 = op1.stiffness();
        for j in 0..k1.n() {
            for (l, val) in k1.row(j) {
                a.add(layout.v[j], layout.v[l], self.params.d2 * val);
            }
            a.add(layout.v[j], layout.v[j], -w1[j] * (coef.vv[j] + shift));
            let n = mesh.omega1_nodes()[j];
            if coef.vu[j] != 0.0 {
                a.add(layout.v[j], layout.u[n], -w1[j] * coef.vu[j]);
            }
        }
        a
    }

    fn newton_direction(&self, layout: &Layout, u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let coef = self.coefficients(u, v);
        let lu: BandedLu = self.assemble(layout, &coef, 0.0).factor()?;
        let (ru, rv) = self.residual(u, v);
        let w = self.mesh.laplacian(Region::Omega).mass();
        let w1 = self.mesh.laplacian(Region::Omega1).mass();
        let ru: Vec<f64> = ru.iter().zip(w).map(|(r, w)| -r * w).collect();
        let rv: Vec<f64> = rv.iter().zip(w1).map(|(r, w)| -r * w).collect();
        let mut x = layout.join(&ru, &rv);
        lu.solve_in_place(&mut x);
        Ok(layout.split(&x))
    }
}

fn check_nonnegative(name: &'static str, f: &[f64]) -> Result<()> {
    if f.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(name));
    }
    if let Some(x) = f.iter().find(|&&x| x < 0.0) {
        return Err(Error::Param(format!("{name} must be nonnegative, found {x:e}")));
    }
    Ok(())
}

/// Damped Newton on the steady equations with tolerance `1e-10·max(1, θ, |μ|)`.
pub fn solve_steady(mesh: &Mesh, params: &ParamSet, u0: &[f64], v0: &[f64]) -> Result<SteadyState> {
    newton(&Model::new(mesh, params)?, u0, v0, steady_tolerance(params))
}

pub(crate) fn newton(model: &Model, u0: &[f64], v0: &[f64], tol: f64) -> Result<SteadyState> {
    model.check_sizes(u0, v0)?;
    check_nonnegative("initial u", u0)?;
    check_nonnegative("initial v", v0)?;
    let layout = Layout::new(model.mesh);
    let (mut u, mut v) = (u0.to_vec(), v0.to_vec());
    let mut res = model.residual_norm(&u, &v)?;
    let mut trace = vec![res];
    let mut steps = 0;
    while res > tol {
        if steps == NEWTON_STEPS {
            return Err(Error::NewtonDivergence { iterations: steps, residual: res, trace });
        }
        let (du, dv) = model.newton_direction(&layout, &u, &v)?;
        steps += 1;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=NEWTON_HALVINGS {
            let tu: Vec<f64> = u.iter().zip(&du).map(|(x, d)| (x + lambda * d).max(0.0)).collect();
            let tv: Vec<f64> = v.iter().zip(&dv).map(|(x, d)| (x + lambda * d).max(0.0)).collect();
            let r = model.residual_norm(&tu, &tv)?;
            if r < res {
                (u, v, res) = (tu, tv, r);
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        trace.push(res);
        if !accepted {
            return Err(Error::NewtonDivergence { iterations: steps, residual: res, trace });
        }
    }
    Ok(SteadyState {
        u: u.into(),
        v: v.into(),
        residual: res,
        source: Source::Newton,
        iterations: steps,
        converged: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Initial step; `None` picks `0.2/R` with `R` a bound on the reaction rates.
    pub dt: Option<f64>,
    pub t_max: f64,
    /// Stop once the steady residual drops below this.
    pub steady_tol: f64,
    /// Record a time sample every this many steps.
    pub sample_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            dt: None,
            t_max: 2000.0,
            steady_tol: 1e-9,
            sample_every: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSample {
    pub time: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub state: SteadyState,
    pub series: Vec<TimeSample>,
    pub time: f64,
    pub steps: usize,
    /// Steps at which a negative overshoot was clipped.
    pub clips: usize,
    pub final_dt: f64,
}

/// Step `0.2/R`, with `R` bounding the reaction Jacobian over the invariant box.
pub fn default_dt(params: &ParamSet, u0: &[f64], v0: &[f64]) -> f64 {
    let p = params;
    let peak = |f: &[f64]| f.iter().copied().fold(0.0, f64::max);
    let ub = peak(u0).max(p.theta.max(0.0));
    let vb = peak(v0).max(p.mu_plus() + p.c * ub);
    let ru = p.theta.abs() + 2.0 * ub + p.a * (vb + ub);
    let rv = p.mu.abs() + 2.0 * vb + p.c * (ub + vb);
    0.2 / ru.max(rv).max(1.0)
}

/// Implicit diffusion, explicit reaction; negative overshoots are clipped
/// to zero and halve the step.
pub fn evolve(mesh: &Mesh, params: &ParamSet, u0: &[f64], v0: &[f64], opts: &EvolveOptions) -> Result<Evolution> {
    let model = Model::new(mesh, params)?;
    model.check_sizes(u0, v0)?;
    check_nonnegative("initial u", u0)?;
    check_nonnegative("initial v", v0)?;
    let mut dt = opts.dt.unwrap_or_else(|| default_dt(params, u0, v0));
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Param(format!("dt must be > 0, got {dt}")));
    }
    if !(opts.t_max > 0.0) || !(opts.steady_tol > 0.0) {
        return Err(Error::Param("t_max and steady_tol must be > 0".into()));
    }
    let build = |dt: f64| -> Result<(DiffusionStepper, DiffusionStepper)> {
        Ok((
            DiffusionStepper::new(mesh.laplacian(Region::Omega), params.d1, dt)?,
            DiffusionStepper::new(mesh.laplacian(Region::Omega1), params.d2, dt)?,
        ))
    };
    let (mut su, mut sv) = build(dt)?;
    let (mut u, mut v) = (u0.to_vec(), v0.to_vec());
    let sample_every = opts.sample_every.max(1);
    let mut series = Vec::new();
    let sample = |time: f64, u: &[f64], v: &[f64], residual: f64| {
        let lo = |f: &[f64]| f.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = |f: &[f64]| f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        TimeSample {
            time,
            min_u: lo(u),
            max_u: hi(u),
            min_v: lo(v),
            max_v: hi(v),
            residual,
        }
    };
    let mut residual = model.residual_norm(&u, &v)?;
    series.push(sample(0.0, &u, &v, residual));
    let (mut time, mut steps, mut clips) = (0.0, 0usize, 0usize);
    while residual >= opts.steady_tol && time < opts.t_max {
        let (f, g) = model.reactions(&u, &v);
        su.step(&mut u, &f);
        sv.step(&mut v, &g);
        time += dt;
        steps += 1;
        let mut clipped = false;
        for x in u.iter_mut().chain(v.iter_mut()) {
            if !x.is_finite() {
                return Err(Error::NonFinite("evolved field"));
            }
            if *x < 0.0 {
                *x = 0.0;
                clipped = true;
            }
        }
        if clipped {
            clips += 1;
            if dt > 1e-12 {
                dt *= 0.5;
                (su, sv) = build(dt)?;
            }
        }
        residual = model.residual_norm(&u, &v)?;
        if steps % sample_every == 0 {
            series.push(sample(time, &u, &v, residual));
        }
    }
    if series.last().map(|s| s.time) != Some(time) {
        series.push(sample(time, &u, &v, residual));
    }
    Ok(Evolution {
        state: SteadyState {
            u: u.into(),
            v: v.into(),
            residual,
            source: Source::TimeMarch,
            iterations: steps,
            converged: residual < opts.steady_tol,
        },
        series,
        time,
        steps,
        clips,
        final_dt: dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SettleOptions {
    pub evolve: EvolveOptions,
    /// Residual at which time marching hands over to Newton, relative to
    /// `max(1, θ, |μ|)`.
    pub handoff: f64,
}

impl Default for SettleOptions {
    fn default() -> Self {
        Self {
            evolve: EvolveOptions::default(),
            handoff: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Settled {
    pub state: SteadyState,
    pub evolution: Evolution,
}

/// Time-march towards a steady state, then polish with Newton.
///
/// A run whose march never reaches the hand-over residual within `t_max`
/// returns the last marched state with `converged == false`.
pub fn settle(mesh: &Mesh, params: &ParamSet, u0: &[f64], v0: &[f64], opts: &SettleOptions) -> Result<Settled> {
    let scale = params.scale();
    let tol = steady_tolerance(params);
    let mut ev_opts = opts.evolve;
    ev_opts.steady_tol = (opts.handoff * scale).max(tol);
    let mut evolution = evolve(mesh, params, u0, v0, &ev_opts)?;
    if !evolution.state.converged {
        return Ok(Settled {
            state: evolution.state.clone(),
            evolution,
        });
    }
    let model = Model::new(mesh, params)?;
    match newton(&model, &evolution.state.u, &evolution.state.v, tol) {
        Ok(state) => Ok(Settled { state, evolution }),
        Err(Error::NewtonDivergence { .. } | Error::Singular(_)) => {
            let rest = EvolveOptions {
                dt: Some(evolution.final_dt),
                t_max: (opts.evolve.t_max - evolution.time).max(0.0) + evolution.final_dt,
                steady_tol: tol,
                ..opts.evolve
            };
            let tail = evolve(mesh, params, &evolution.state.u, &evolution.state.v, &rest)?;
            let offset = evolution.time;
            evolution.series.extend(tail.series.iter().skip(1).map(|s| TimeSample {
                time: s.time + offset,
                ..*s
            }));
            evolution.time += tail.time;
            evolution.steps += tail.steps;
            evolution.clips += tail.clips;
            evolution.final_dt = tail.final_dt;
            evolution.state = tail.state.clone();
            Ok(Settled {
                state: tail.state,
                evolution,
            })
        }
        Err(e) => Err(e),
    }
}

/// Steady state at `t = 1` of the `t`-continuation, with the trace.
#[derive(Debug, Clone)]
pub struct HomotopyRun {
    pub state: SteadyState,
    /// `(t, residual, Newton steps)` per accepted level.
    pub trace: Vec<(f64, f64, usize)>,
}

/// Start at `t = 0` from `(solve_aux_mu, μ)` and warm-start Newton along `t_grid`.
pub fn homotopy_t(mesh: &Mesh, params: &ParamSet, t_grid: &[f64]) -> Result<HomotopyRun> {
    if !(params.mu > 0.0) {
        return Err(Error::Param(format!("homotopy needs mu > 0, got {}", params.mu)));
    }
    let ok_grid = t_grid.first() == Some(&0.0)
        && t_grid.last() == Some(&1.0)
        && t_grid.windows(2).all(|w| w[0] < w[1]);
    if !ok_grid {
        return Err(Error::Param("t grid must increase from 0 to 1".into()));
    }
    let aux = solve_aux_mu(mesh, params)?;
    let mut u = aux.field.into_vec();
    let mut v = vec![params.mu; mesh.omega1_len()];
    let base = Model::new(mesh, params)?;
    let tol = steady_tolerance(params);
    let mut trace = Vec::with_capacity(t_grid.len());
    let mut last = None;
    for &t in t_grid {
        let model = base.clone().with_homotopy(t);
        let state = newton(&model, &u, &v, tol).map_err(|e| Error::Homotopy {
            t,
            source: Box::new(e),
        })?;
        trace.push((t, state.residual, state.iterations));
        u = state.u.to_vec();
        v = state.v.to_vec();
        last = Some(state);
    }
    let mut state = last.expect("grid is nonempty");
    state.source = Source::Homotopy;
    Ok(HomotopyRun { state, trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeLabel {
    Coexistence,
    PreyOnly,
    PredatorOnly,
    Extinct,
}

impl OutcomeLabel {
    pub fn label(&self) -> &'static str {
        match self {
            OutcomeLabel::Coexistence => "COEXISTENCE",
            OutcomeLabel::PreyOnly => "PREY_ONLY",
            OutcomeLabel::PredatorOnly => "PREDATOR_ONLY",
            OutcomeLabel::Extinct => "EXTINCT",
        }
    }
}

impl fmt::Display for OutcomeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub label: OutcomeLabel,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
}

pub fn classify_outcome(state: &SteadyState, eps_pos: f64) -> Outcome {
    let (min_u, max_u) = (state.u.min(), state.u.max());
    let (min_v, max_v) = (state.v.min(), state.v.max());
    let label = match (min_u > eps_pos, min_v > eps_pos) {
        (true, true) => OutcomeLabel::Coexistence,
        (true, false) => OutcomeLabel::PreyOnly,
        (false, true) => OutcomeLabel::PredatorOnly,
        (false, false) => OutcomeLabel::Extinct,
    };
    Outcome {
        label,
        min_u,
        max_u,
        min_v,
        max_v,
    }
}

/// Check of `0 < u ≤ θ` and `μ₊ < v ≤ μ₊ + cθ/(1+mθ+kμ₊)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    /// `None` when the bound does not apply to the state's outcome.
    pub u_pass: Option<bool>,
    pub v_pass: Option<bool>,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub u_upper: f64,
    pub v_lower: f64,
    pub v_upper: f64,
    pub tol: f64,
    pub mu_plus: f64,
}

impl BoundReport {
    pub fn pass(&self) -> bool {
        self.u_pass.unwrap_or(true) && self.v_pass.unwrap_or(true)
    }
}

pub fn check_apriori(state: &SteadyState, params: &ParamSet) -> BoundReport {
    let tol = 1e-6 * params.theta.max(1.0);
    let mu_plus = params.mu_plus();
    let theta = params.theta;
    let v_upper = mu_plus + params.c * theta / (1.0 + params.m * theta + params.k * mu_plus);
    let outcome = classify_outcome(state, default_eps_pos(params));
    let (check_u, check_v) = match outcome.label {
        OutcomeLabel::Coexistence => (true, true),
        OutcomeLabel::PreyOnly => (true, false),
        OutcomeLabel::PredatorOnly => (false, true),
        OutcomeLabel::Extinct => (false, false),
    };
    let (min_u, max_u, min_v, max_v) = (outcome.min_u, outcome.max_u, outcome.min_v, outcome.max_v);
    BoundReport {
        u_pass: check_u.then(|| min_u > 0.0 && max_u <= theta + tol),
        v_pass: check_v.then(|| min_v > mu_plus - tol && max_v <= v_upper + tol),
        min_u,
        max_u,
        min_v,
        max_v,
        u_upper: theta,
        v_lower: mu_plus,
        v_upper,
        tol,
        mu_plus,
    }
}

/// `|∫_Ω₁ v(μ - v + cu/(1+mu+kv))|` by the cell quadrature; zero for an exact
/// discrete steady state.
pub fn predator_integral(mesh: &Mesh, params: &ParamSet, state: &SteadyState) -> Result<f64> {
    let model = Model::new(mesh, params)?;
    model.check_sizes(&state.u, &state.v)?;
    let (_, g) = model.reactions(&state.u, &state.v);
    Ok(mesh.integrate_omega1(&g).abs())
}

/// `v` on Ω with zeros inside the zone, for output.
pub fn predator_on_omega(mesh: &Mesh, state: &SteadyState) -> Result<GridField> {
    extend(mesh, &state.v, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DomainSpec};
    use crate::thresholds::theta_star;

    fn zoned(n: usize) -> Mesh {
        build_mesh(&DomainSpec::interval(1.0, n).with_zone(vec![(0.25, 0.75)])).unwrap()
    }

    fn fd_check(model: &Model, u: &[f64], v: &[f64]) {
        let layout = Layout::new(model.mesh);
        let coef = model.coefficients(u, v);
        let a = model.assemble(&layout, &coef, 0.0);
        let w = model.mesh.laplacian(Region::Omega).mass().to_vec();
        let w1 = model.mesh.laplacian(Region::Omega1).mass().to_vec();
        let weighted = |u: &[f64], v: &[f64]| {
            let (ru, rv) = model.residual(u, v);
            let ru: Vec<f64> = ru.iter().zip(&w).map(|(r, w)| r * w).collect();
            let rv: Vec<f64> = rv.iter().zip(&w1).map(|(r, w)| r * w).collect();
            layout.join(&ru, &rv)
        };
        let x = layout.join(u, v);
        let eps = 1e-6;
        for col in (0..x.len()).step_by(7) {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += eps;
            xm[col] -= eps;
            let (up, vp) = layout.split(&xp);
            let (um, vm) = layout.split(&xm);
            let (fp, fm) = (weighted(&up, &vp), weighted(&um, &vm));
            for row in 0..x.len() {
                let fd = (fp[row] - fm[row]) / (2.0 * eps);
                assert!((fd - a.get(row, col)).abs() < 1e-6 * (1.0 + fd.abs()), "({row},{col}) {fd} vs {}", a.get(row, col));
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let m = zoned(41);
        let p = ParamSet { theta: 1.3, mu: 0.7, m: 0.8, k: 1.2, ..ParamSet::default() };
        let u: Vec<f64> = m.coords().iter().map(|x| 0.5 + 0.4 * (3.0 * x[0]).sin()).collect();
        let v: Vec<f64> = m.omega1_nodes().iter().map(|&n| 0.9 + 0.3 * m.coords()[n][0]).collect();
        fd_check(&Model::new(&m, &p).unwrap(), &u, &v);
        fd_check(&Model::new(&m, &p).unwrap().with_homotopy(0.4), &u, &v);
    }

    #[test]
    fn prey_only_equilibrium_is_stationary() {
        let m = zoned(101);
        let p = ParamSet { theta: 1.4, mu: -0.3, ..ParamSet::default() };
        let u0 = vec![p.theta; 101];
        let v0 = vec![0.0; m.omega1_len()];
        let ev = evolve(&m, &p, &u0, &v0, &EvolveOptions { t_max: 5.0, ..Default::default() }).unwrap();
        assert!(ev.state.u.iter().all(|&u| u == p.theta));
        assert_eq!(ev.state.v.max(), 0.0);
        let b = check_apriori(&ev.state, &p);
        assert_eq!(classify_outcome(&ev.state, 1e-4).label, OutcomeLabel::PreyOnly);
        assert_eq!(b.u_pass, Some(true));
        assert_eq!(b.v_pass, None);
    }

    #[test]
    fn semitrivial_predator_state_is_fixed_by_newton() {
        let m = zoned(101);
        let p = ParamSet { theta: 0.3, mu: 1.0, ..ParamSet::default() };
        let u0 = vec![0.0; 101];
        let v0 = vec![p.mu; m.omega1_len()];
        let s = solve_steady(&m, &p, &u0, &v0).unwrap();
        assert_eq!(s.residual, 0.0);
        assert_eq!(s.iterations, 0);
        assert_eq!(classify_outcome(&s, 1e-4).label, OutcomeLabel::PredatorOnly);
    }

    #[test]
    fn coexistence_from_time_march_and_newton() {
        let m = zoned(101);
        let p = ParamSet { mu: 1.0, ..ParamSet::default() };
        let star = theta_star(&p, &m).unwrap();
        let p = p.with_theta(star + 0.3 * (2.0 - star));
        let u0 = vec![0.5 * p.theta; 101];
        let v0 = vec![p.mu; m.omega1_len()];
        let s = settle(&m, &p, &u0, &v0, &SettleOptions::default()).unwrap();
        assert!(s.state.converged);
        assert_eq!(s.state.source, Source::Newton);
        assert!(s.state.iterations <= 5);
        assert_eq!(s.evolution.clips, 0);
        assert_eq!(classify_outcome(&s.state, default_eps_pos(&p)).label, OutcomeLabel::Coexistence);
        assert!(check_apriori(&s.state, &p).pass());
        assert!(predator_integral(&m, &p, &s.state).unwrap() <= 1e-8 * m.measure_omega1());
    }

    #[test]
    fn violating_state_fails_bounds() {
        let m = zoned(41);
        let p = ParamSet { theta: 1.0, mu: 1.0, ..ParamSet::default() };
        let s = SteadyState {
            u: GridField::constant(41, 2.0),
            v: GridField::constant(m.omega1_len(), 1.2),
            residual: 0.0,
            source: Source::Newton,
            iterations: 0,
            converged: true,
        };
        let b = check_apriori(&s, &p);
        assert_eq!(b.u_pass, Some(false));
        assert_eq!(b.v_pass, Some(true));
    }

    #[test]
    fn homotopy_endpoints() {
        let m = zoned(101);
        let p = ParamSet { theta: 1.5, mu: 8.0, ..ParamSet::default() };
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let run = homotopy_t(&m, &p, &grid).unwrap();
        assert_eq!(run.trace.len(), 11);
        assert!(run.trace.iter().all(|&(_, r, _)| r <= steady_tolerance(&p)));
        let direct = solve_steady(&m, &p, &run.state.u, &run.state.v).unwrap();
        assert!(direct.u.max_abs_diff(&run.state.u) < 1e-8);
        let t0 = homotopy_t(&m, &p, &[0.0, 1.0]).unwrap();
        assert!(t0.state.u.max_abs_diff(&run.state.u) < 1e-8);
    }

    #[test]
    fn preconditions() {
        let m = zoned(41);
        let p = ParamSet::default();
        let u = vec![1.0; 41];
        let v = vec![1.0; m.omega1_len()];
        let opts = EvolveOptions { dt: Some(0.0), ..Default::default() };
        assert!(evolve(&m, &p, &u, &v, &opts).is_err());
        assert!(evolve(&m, &p, &vec![-1.0; 41], &v, &EvolveOptions::default()).is_err());
        assert!(solve_steady(&m, &p, &u, &v[1..]).is_err());
        assert!(homotopy_t(&m, &p, &[0.0, 0.5]).is_err());
    }
}
