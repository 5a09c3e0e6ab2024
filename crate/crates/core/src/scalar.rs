//! Scalar logistic problems `-dΔu = u(θ - u - q(x, u))` on Ω.
//!
//! Two potentials occur: a fixed `q(x)` (giving `U_{θ,q}`), and the
//! predator-at-rest potential `a(x)μ/(1 + mu + kμ)`, which depends on the
//! solution itself.

use crate::eigen;
use crate::error::{Error, Result};
use crate::linsolve::BandMatrix;
use crate::march::DiffusionStepper;
use crate::mesh::{predation_field, GridField, Mesh, Region};
use crate::thresholds::ParamSet;

const MAX_NEWTON: usize = 100;
const MAX_HALVINGS: usize = 10;
const MAX_FALLBACKS: usize = 4;
const MAX_MARCH_STEPS: usize = 200_000;
/// Scale of the subsolution start `ε·φ₁`, relative to θ.
pub const SUBSOLUTION_SCALE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Positive,
    Zero,
}

#[derive(Debug, Clone)]
pub struct ScalarSolution {
    pub field: GridField,
    /// Max-norm of the discrete equation at `field`.
    pub residual: f64,
    pub classification: Classification,
    pub newton_steps: usize,
    /// Time steps spent in the marching fallback.
    pub march_steps: usize,
}

#[derive(Debug, Clone)]
pub enum Potential {
    Fixed(GridField),
    /// `a(x)μ/(1 + mu + kμ)`.
    Refuge { a_field: GridField, mu: f64, m: f64, k: f64 },
}

impl Potential {
    /// `q(x, u)` and `∂(u q)/∂u` at one node.
    #[inline]
    fn eval(&self, i: usize, u: f64) -> (f64, f64) {
        match self {
            Potential::Fixed(q) => (q[i], q[i]),
            Potential::Refuge { a_field, mu, m, k } => {
                let a = a_field[i];
                let d = 1.0 + m * u + k * mu;
                (a * mu / d, a * mu * (1.0 + k * mu) / (d * d))
            }
        }
    }

    /// The potential seen by the zero solution.
    fn at_zero(&self) -> GridField {
        match self {
            Potential::Fixed(q) => q.clone(),
            Potential::Refuge { a_field, mu, k, .. } => a_field.map(|a| a * mu / (1.0 + k * mu)),
        }
    }

    fn len(&self) -> usize {
        match self {
            Potential::Fixed(q) => q.len(),
            Potential::Refuge { a_field, .. } => a_field.len(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScalarProblem {
    pub theta: f64,
    pub diffusion: f64,
    pub potential: Potential,
}

impl ScalarProblem {
    pub fn logistic(theta: f64, q: GridField) -> Self {
        Self {
            theta,
            diffusion: 1.0,
            potential: Potential::Fixed(q),
        }
    }

    /// The auxiliary problem with the predator frozen at `v ≡ μ`.
    pub fn aux_mu(mesh: &Mesh, params: &ParamSet) -> Result<Self> {
        Ok(Self {
            theta: params.theta,
            diffusion: params.d1,
            potential: Potential::Refuge {
                a_field: predation_field(mesh, params.a)?,
                mu: params.mu,
                m: params.m,
                k: params.k,
            },
        })
    }

    pub fn tolerance(&self) -> f64 {
        1e-9 * self.theta.max(1.0)
    }

    fn floor(&self) -> f64 {
        1e-12 * self.theta
    }

    fn reaction(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, &x)| x * (self.theta - x - self.potential.eval(i, x).0))
            .collect()
    }

    /// Nodewise `d(-Δ_h u) - u(θ - u - q)`.
    pub fn residual(&self, mesh: &Mesh, u: &[f64]) -> Vec<f64> {
        let lap = mesh.laplacian(Region::Omega).apply(u);
        lap.iter()
            .zip(self.reaction(u))
            .map(|(l, f)| self.diffusion * l - f)
            .collect()
    }

    pub fn residual_norm(&self, mesh: &Mesh, u: &[f64]) -> Result<f64> {
        let r = self.residual(mesh, u);
        if r.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("scalar residual"));
        }
        Ok(r.iter().fold(0.0, |m, x| m.max(x.abs())))
    }

    fn validate(&self, mesh: &Mesh) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::Param(format!("theta must be > 0, got {}", self.theta)));
        }
        if !(self.diffusion > 0.0) {
            return Err(Error::Param(format!("diffusion must be > 0, got {}", self.diffusion)));
        }
        if self.potential.len() != mesh.node_count() {
            return Err(Error::SizeMismatch {
                expected: mesh.node_count(),
                got: self.potential.len(),
            });
        }
        let q0 = self.potential.at_zero();
        if q0.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
            return Err(Error::Param("potential must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

enum NewtonEnd {
    Converged { u: Vec<f64>, residual: f64 },
    Collapsed,
    Stalled { last: Vec<f64> },
}

struct Newton<'a> {
    mesh: &'a Mesh,
    problem: &'a ScalarProblem,
    steps: usize,
    trace: Vec<f64>,
}

impl Newton<'_> {
    fn direction(&self, u: &[f64]) -> Result<Vec<f64>> {
        let op = self.mesh.laplacian(Region::Omega);
        let p = self.problem;
        let w = op.mass();
        let shift: Vec<f64> = u
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let (_, duq) = p.potential.eval(i, x);
                w[i] * -(p.theta - 2.0 * x - duq)
            })
            .collect();
        let jac = op.stiffness().scaled(p.diffusion).add_diagonal(&shift);
        let mut rhs: Vec<f64> = p.residual(self.mesh, u).iter().zip(w).map(|(r, w)| -r * w).collect();
        BandMatrix::from_csr(&jac).factor()?.solve_in_place(&mut rhs);
        Ok(rhs)
    }

    fn run(&mut self, mut u: Vec<f64>) -> Result<NewtonEnd> {
        let p = self.problem;
        let tol = p.tolerance();
        let mut res = p.residual_norm(self.mesh, &u)?;
        self.trace.push(res);
        let mut polished = false;
        for _ in 0..MAX_NEWTON {
            if res <= tol && polished {
                return Ok(NewtonEnd::Converged { u, residual: res });
            }
            let converged = res <= tol;
            let delta = self.direction(&u)?;
            self.steps += 1;
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let trial: Vec<f64> = u.iter().zip(&delta).map(|(x, d)| (x + step * d).max(0.0)).collect();
                let r = p.residual_norm(self.mesh, &trial)?;
                if r < res || (converged && r <= tol) {
                    accepted = Some((trial, r));
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some((trial, r)) => {
                    u = trial;
                    res = r;
                    self.trace.push(res);
                }
                None if converged => return Ok(NewtonEnd::Converged { u, residual: res }),
                None => return Ok(NewtonEnd::Stalled { last: u }),
            }
            polished = converged;
            if u.iter().all(|&x| x < p.floor()) {
                return Ok(NewtonEnd::Collapsed);
            }
        }
        if res <= tol {
            return Ok(NewtonEnd::Converged { u, residual: res });
        }
        Ok(NewtonEnd::Stalled { last: u })
    }
}

/// Principal eigenvalue of the linearization at `u ≡ 0`.
fn zero_threshold(mesh: &Mesh, problem: &ScalarProblem) -> Result<f64> {
    let q = problem.potential.at_zero().map(|x| x / problem.diffusion);
    Ok(problem.diffusion * eigen::principal_eigenvalue(mesh, Region::Omega, &q, eigen::DEFAULT_TOL)?)
}

/// March `u_t = dΔu + f(u)` until the residual enters Newton's basin.
fn march(mesh: &Mesh, problem: &ScalarProblem, mut u: Vec<f64>) -> Result<(Vec<f64>, usize)> {
    let q_max = problem.potential.at_zero().max();
    let rate = 3.0 * problem.theta + q_max + 1.0;
    let stepper = DiffusionStepper::new(mesh.laplacian(Region::Omega), problem.diffusion, 0.2 / rate)?;
    let scale = problem.theta.max(1.0);
    for n in 1..=MAX_MARCH_STEPS {
        let r = problem.reaction(&u);
        stepper.step(&mut u, &r);
        u.iter_mut().for_each(|x| *x = x.max(0.0));
        if n % 10 == 0 {
            let res = problem.residual_norm(mesh, &u)?;
            let peak = u.iter().copied().fold(0.0, f64::max);
            if res <= 1e-2 * peak.min(scale) {
                return Ok((u, n));
            }
        }
    }
    Err(Error::IterationCap {
        what: "scalar time marching",
        cap: MAX_MARCH_STEPS,
        residual: problem.residual_norm(mesh, &u)?,
    })
}

/// Solve a scalar problem from `init` (default: the supersolution `u ≡ θ`).
pub fn solve_scalar(mesh: &Mesh, problem: &ScalarProblem, init: Option<&[f64]>) -> Result<ScalarSolution> {
    problem.validate(mesh)?;
    let n = mesh.node_count();
    let mut u = match init {
        Some(f) if f.len() != n => return Err(Error::SizeMismatch { expected: n, got: f.len() }),
        Some(f) if f.iter().any(|x| !(x.is_finite() && *x >= 0.0)) => {
            return Err(Error::Param("initial guess must be finite and nonnegative".into()))
        }
        Some(f) => f.to_vec(),
        None => vec![problem.theta; n],
    };
    let mut newton = Newton {
        mesh,
        problem,
        steps: 0,
        trace: Vec::new(),
    };
    let mut march_steps = 0;
    let mut threshold = None;
    let zero = |newton: &Newton, march_steps| ScalarSolution {
        field: GridField::zeros(n),
        residual: 0.0,
        classification: Classification::Zero,
        newton_steps: newton.steps,
        march_steps,
    };
    for _ in 0..MAX_FALLBACKS {
        let restart = match newton.run(u)? {
            NewtonEnd::Converged { u, residual } => {
                let field = GridField::from(u);
                let tiny = field.max() < 1e-6 * problem.theta;
                if tiny || field.min() <= 0.0 {
                    let lambda = *threshold.get_or_insert(zero_threshold(mesh, problem)?);
                    if problem.theta <= lambda {
                        return Ok(zero(&newton, march_steps));
                    }
                    if field.min() <= 0.0 {
                        return Err(Error::NotPositive(format!(
                            "converged field has minimum {:e} although theta > {lambda}",
                            field.min()
                        )));
                    }
                }
                let residual_check = problem.residual_norm(mesh, &field)?;
                debug_assert!((residual_check - residual).abs() <= 1e-12 * problem.theta.max(1.0));
                return Ok(ScalarSolution {
                    field,
                    residual: residual_check,
                    classification: Classification::Positive,
                    newton_steps: newton.steps,
                    march_steps,
                });
            }
            NewtonEnd::Collapsed => {
                let lambda = *threshold.get_or_insert(zero_threshold(mesh, problem)?);
                if problem.theta <= lambda {
                    return Ok(zero(&newton, march_steps));
                }
                vec![problem.theta; n]
            }
            NewtonEnd::Stalled { last } => {
                if last.iter().all(|&x| x < problem.floor()) {
                    vec![problem.theta; n]
                } else {
                    last
                }
            }
        };
        let (next, steps) = march(mesh, problem, restart)?;
        march_steps += steps;
        if next.iter().all(|&x| x < problem.floor()) {
            return Ok(zero(&newton, march_steps));
        }
        u = next;
    }
    Err(Error::NewtonDivergence {
        iterations: newton.steps,
        residual: *newton.trace.last().unwrap_or(&f64::NAN),
        trace: newton.trace,
    })
}

/// `U_{θ,q}`: the positive solution of `-Δu = u(θ - u - q)`, or zero.
pub fn solve_logistic(mesh: &Mesh, theta: f64, q: &[f64], init: Option<&[f64]>) -> Result<ScalarSolution> {
    solve_scalar(mesh, &ScalarProblem::logistic(theta, q.to_vec().into()), init)
}

/// Positive solution of `-d₁Δu = u(θ - u - a(x)μ/(1 + mu + kμ))`.
pub fn solve_aux_mu(mesh: &Mesh, params: &ParamSet) -> Result<ScalarSolution> {
    solve_aux_mu_from(mesh, params, None)
}

pub fn solve_aux_mu_from(mesh: &Mesh, params: &ParamSet, init: Option<&[f64]>) -> Result<ScalarSolution> {
    params.validate()?;
    if !(params.mu > 0.0) {
        return Err(Error::Param(format!("auxiliary problem needs mu > 0, got {}", params.mu)));
    }
    solve_scalar(mesh, &ScalarProblem::aux_mu(mesh, params)?, init)
}

/// `ε·φ₁` with `ε = 0.01·θ`, φ₁ the principal eigenfunction of `-Δ + q`.
pub fn subsolution_start(mesh: &Mesh, theta: f64, q: &[f64]) -> Result<GridField> {
    let pair = eigen::principal_eigenpair(mesh, Region::Omega, q, eigen::DEFAULT_TOL)?;
    Ok(pair.function.map(|p| SUBSOLUTION_SCALE * theta * p))
}
