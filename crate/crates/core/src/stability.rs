//! Linear stability of steady states.
//!
//! Perturbing a steady state `(u, v)` by `(φ, ψ)` gives the eigenproblem
//!
//! ```text
//! -d₁Δφ = J_uu φ + J_uv ψ + ηφ   in Ω
//! -d₂Δψ = J_vu φ + J_vv ψ + ηψ   in Ω₁
//! ```
//!
//! so `η` is an eigenvalue of `L = blockdiag(-d₁Δ, -d₂Δ) - J` and the state
//! is linearly stable when the principal `η` has positive real part.

use std::fmt;

use nalgebra::DMatrix;

use crate::coupled::{Coefficients, Layout, Model, SteadyState};
use crate::eigen;
use crate::error::{Error, Result};
use crate::linsolve::{dot, DENSE_CAP};
use crate::mesh::{GridField, Mesh, Region};
use crate::scalar::{solve_logistic, Classification};
use crate::thresholds::{refuge_potential, ParamSet};

pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_ITER: usize = 2000;

/// The linearization of the steady equations at one state.
#[derive(Debug, Clone)]
pub struct LinearizedSystem<'a> {
    model: Model<'a>,
    layout: Layout,
    pub coefficients: Coefficients,
}

pub fn linearize<'a>(mesh: &'a Mesh, params: &ParamSet, state: &SteadyState) -> Result<LinearizedSystem<'a>> {
    let model = Model::new(mesh, params)?;
    for (len, want) in [(state.u.len(), mesh.node_count()), (state.v.len(), mesh.omega1_len())] {
        if len != want {
            return Err(Error::SizeMismatch { expected: want, got: len });
        }
    }
    let coefficients = model.coefficients(&state.u, &state.v);
    Ok(LinearizedSystem {
        layout: Layout::new(mesh),
        model,
        coefficients,
    })
}

impl LinearizedSystem<'_> {
    /// Number of unknowns `(φ, ψ)`.
    pub fn len(&self) -> usize {
        self.layout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layout.len() == 0
    }

    /// `L(φ, ψ)`.
    pub fn apply(&self, phi: &[f64], psi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mesh = self.model.mesh();
        let p = self.model.params();
        let c = &self.coefficients;
        let lu = mesh.laplacian(Region::Omega).apply(phi);
        let lv = mesh.laplacian(Region::Omega1).apply(psi);
        let out_u = (0..phi.len())
            .map(|i| {
                let cross = mesh.omega1_index(i).map_or(0.0, |j| c.uv[i] * psi[j]);
                p.d1 * lu[i] - c.uu[i] * phi[i] - cross
            })
            .collect();
        let out_v = mesh
            .omega1_nodes()
            .iter()
            .enumerate()
            .map(|(j, &n)| p.d2 * lv[j] - c.vv[j] * psi[j] - c.vu[j] * phi[n])
            .collect();
        (out_u, out_v)
    }

    /// Lower bound on the real parts of the spectrum (Gershgorin on the
    /// symmetrized diffusion plus the reaction block).
    pub fn gershgorin_floor(&self) -> f64 {
        let mesh = self.model.mesh();
        let c = &self.coefficients;
        let mut floor = f64::INFINITY;
        for i in 0..c.uu.len() {
            let cross = mesh.omega1_index(i).map_or(0.0, |_| c.uv[i].abs());
            floor = floor.min(-c.uu[i] - cross);
        }
        for (vv, vu) in c.vv.iter().zip(c.vu.iter()) {
            floor = floor.min(-vv - vu.abs());
        }
        floor
    }

    /// Dense `W^{1/2} L W^{-1/2}` in interleaved order.
    fn dense(&self) -> DMatrix<f64> {
        let mesh = self.model.mesh();
        let n = self.len();
        let band = self.model.assemble(&self.layout, &self.coefficients, 0.0);
        let mut w = vec![0.0; n];
        for (&p, &m) in self.layout.u.iter().zip(mesh.laplacian(Region::Omega).mass()) {
            w[p] = m;
        }
        for (&p, &m) in self.layout.v.iter().zip(mesh.laplacian(Region::Omega1).mass()) {
            w[p] = m;
        }
        let s: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
        DMatrix::from_fn(n, n, |i, j| band.get(i, j) / (s[i] * s[j]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Marginal => "marginal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    InverseIteration,
    DenseOracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    /// Real part of the eigenvalue with smallest real part.
    pub eta_re: f64,
    pub eta_im: f64,
    pub verdict: Verdict,
    pub method: Method,
    pub iterations: usize,
    pub marginal_band: f64,
}

fn verdict(eta_re: f64, band: f64) -> Verdict {
    if eta_re.abs() <= band {
        Verdict::Marginal
    } else if eta_re > 0.0 {
        Verdict::Stable
    } else {
        Verdict::Unstable
    }
}

/// Principal `η` by shifted inverse iteration, with the dense
/// nonsymmetric eigensolver as fallback for complex or slow cases.
pub fn principal_eta(system: &LinearizedSystem, tol: f64) -> Result<StabilityVerdict> {
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(Error::Param(format!("stability tolerance must lie in (0, 1e-2), got {tol}")));
    }
    let band = 1e-6 * system.model.params().theta.max(1.0);
    match inverse_iteration(system, tol)? {
        Some((eta, iterations)) => Ok(StabilityVerdict {
            eta_re: eta,
            eta_im: 0.0,
            verdict: verdict(eta, band),
            method: Method::InverseIteration,
            iterations,
            marginal_band: band,
        }),
        None => {
            let (re, im) = dense_principal(system)?;
            Ok(StabilityVerdict {
                eta_re: re,
                eta_im: im,
                verdict: verdict(re, band),
                method: Method::DenseOracle,
                iterations: MAX_ITER,
                marginal_band: band,
            })
        }
    }
}

/// `None` when the iteration does not settle on a real eigenvalue.
fn inverse_iteration(system: &LinearizedSystem, tol: f64) -> Result<Option<(f64, usize)>> {
    let mesh = system.model.mesh();
    let sigma = system.gershgorin_floor() - 1.0;
    let lu = system
        .model
        .assemble(&system.layout, &system.coefficients, sigma)
        .factor()?;
    let w = mesh.laplacian(Region::Omega).mass();
    let w1 = mesh.laplacian(Region::Omega1).mass();
    let mut weights = vec![0.0; system.len()];
    for (&p, &m) in system.layout.u.iter().zip(w) {
        weights[p] = m;
    }
    for (&p, &m) in system.layout.v.iter().zip(w1) {
        weights[p] = m;
    }
    let mut x = vec![1.0; system.len()];
    let n0 = dot(&x, &x).sqrt();
    x.iter_mut().for_each(|a| *a /= n0);
    let mut eta = f64::NAN;
    let mut sign_changes = 0;
    let mut last_delta = 0.0f64;
    for it in 1..=MAX_ITER {
        let mut y: Vec<f64> = x.iter().zip(&weights).map(|(a, w)| a * w).collect();
        lu.solve_in_place(&mut y);
        let xy = dot(&x, &y);
        if xy == 0.0 || !xy.is_finite() {
            return Ok(None);
        }
        let estimate = sigma + dot(&x, &x) / xy;
        let norm = dot(&y, &y).sqrt();
        x = y.into_iter().map(|a| a / norm).collect();
        let delta = estimate - eta;
        if delta.abs() < tol * estimate.abs().max(1.0) {
            return Ok(Some((estimate, it)));
        }
        if it > 1 && delta.signum() != last_delta.signum() && delta.abs() > 1e3 * tol {
            sign_changes += 1;
            if sign_changes > 20 {
                return Ok(None);
            }
        }
        last_delta = delta;
        eta = estimate;
    }
    Ok(None)
}

fn dense_principal(system: &LinearizedSystem) -> Result<(f64, f64)> {
    let n = system.len();
    if n > DENSE_CAP {
        return Err(Error::OracleTooLarge { n, cap: DENSE_CAP });
    }
    let eig = system.dense().complex_eigenvalues();
    let best = eig
        .iter()
        .min_by(|a, b| a.re.total_cmp(&b.re).then(a.im.abs().total_cmp(&b.im.abs())))
        .ok_or(Error::Param("empty linearization".into()))?;
    Ok((best.re, best.im.abs()))
}

/// Every eigenvalue of the linearization, for small systems.
pub fn dense_spectrum(system: &LinearizedSystem) -> Result<Vec<(f64, f64)>> {
    let n = system.len();
    if n > DENSE_CAP {
        return Err(Error::OracleTooLarge { n, cap: DENSE_CAP });
    }
    let mut out: Vec<(f64, f64)> = system
        .dense()
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(out)
}

/// `η*` two ways: as the principal eigenvalue of `-Δ + 2U + q₀ - θ` and as
/// `∫U²φ*/∫Uφ*` with `U = U_{θ,q₀}`.
#[derive(Debug, Clone)]
pub struct EtaStar {
    pub eigenvalue: f64,
    pub ratio: f64,
    pub limit_prey: GridField,
    pub eigenfunction: GridField,
}

pub fn eta_star(mesh: &Mesh, params: &ParamSet) -> Result<EtaStar> {
    params.validate()?;
    let q0 = refuge_potential(params, mesh)?;
    let limit = solve_logistic(mesh, params.theta, &q0, None)?;
    if limit.classification == Classification::Zero {
        return Err(Error::NotPositive(format!(
            "limit prey density vanishes at theta = {}",
            params.theta
        )));
    }
    let u = limit.field;
    let potential: Vec<f64> = u
        .iter()
        .zip(q0.iter())
        .map(|(u, q)| 2.0 * u + q - params.theta)
        .collect();
    let pair = eigen::principal_eigenpair(mesh, Region::Omega, &potential, eigen::DEFAULT_TOL)?;
    let num: Vec<f64> = u.iter().zip(pair.function.iter()).map(|(u, p)| u * u * p).collect();
    let den: Vec<f64> = u.iter().zip(pair.function.iter()).map(|(u, p)| u * p).collect();
    Ok(EtaStar {
        eigenvalue: pair.value,
        ratio: mesh.integrate(&num) / mesh.integrate(&den),
        limit_prey: u,
        eigenfunction: pair.function,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::{homotopy_t, Source};
    use crate::mesh::{build_mesh, DomainSpec};
    use crate::thresholds::{predation_potential, theta1, theta_star};

    fn zoned(n: usize) -> Mesh {
        build_mesh(&DomainSpec::interval(1.0, n).with_zone(vec![(0.25, 0.75)])).unwrap()
    }

    fn semitrivial(m: &Mesh, p: &ParamSet) -> SteadyState {
        SteadyState {
            u: GridField::zeros(m.node_count()),
            v: GridField::constant(m.omega1_len(), p.mu),
            residual: 0.0,
            source: Source::Newton,
            iterations: 0,
            converged: true,
        }
    }

    #[test]
    fn semitrivial_coefficients() {
        let m = zoned(41);
        let p = ParamSet { theta: 1.2, mu: 1.5, ..ParamSet::default() };
        let sys = linearize(&m, &p, &semitrivial(&m, &p)).unwrap();
        let q = predation_potential(&p, &m).unwrap();
        for (c, q) in sys.coefficients.uu.iter().zip(q.iter()) {
            assert!((c - (p.theta - q)).abs() < 1e-14);
        }
        assert!(sys.coefficients.uv.iter().all(|&c| c == 0.0));
        let prey_only = SteadyState {
            u: GridField::constant(41, p.theta),
            v: GridField::zeros(m.omega1_len()),
            ..semitrivial(&m, &p)
        };
        let sys = linearize(&m, &p, &prey_only).unwrap();
        let want = p.mu + p.c * p.theta / (1.0 + p.m * p.theta);
        assert!(sys.coefficients.vv.iter().all(|&c| (c - want).abs() < 1e-14));
        for (i, t) in m.tags().iter().enumerate() {
            if matches!(t, crate::mesh::NodeTag::ZoneInterior | crate::mesh::NodeTag::Interface) {
                assert_eq!(sys.coefficients.uv[i], 0.0);
            }
        }
    }

    #[test]
    fn semitrivial_eta_is_triangular_minimum() {
        let m = zoned(101);
        let base = ParamSet { mu: 1.0, ..ParamSet::default() };
        let star = theta_star(&base, &m).unwrap();
        let q = predation_potential(&base, &m).unwrap();
        let lam = eigen::principal_eigenvalue(&m, Region::Omega, &q, 1e-12).unwrap();
        for theta in [0.5 * star, star + 0.3] {
            let p = base.with_theta(theta);
            let sys = linearize(&m, &p, &semitrivial(&m, &p)).unwrap();
            let v = principal_eta(&sys, DEFAULT_TOL).unwrap();
            let want = (lam - theta).min(p.mu);
            assert!((v.eta_re - want).abs() < 1e-8, "{} vs {want}", v.eta_re);
            let expect = if theta < star { Verdict::Stable } else { Verdict::Unstable };
            assert_eq!(v.verdict, expect);
        }
    }

    #[test]
    fn inverse_iteration_matches_dense_spectrum() {
        let m = zoned(41);
        let p = ParamSet { theta: 1.6, mu: 2.0, ..ParamSet::default() };
        let grid: Vec<f64> = (0..=5).map(|i| i as f64 / 5.0).collect();
        let state = homotopy_t(&m, &p, &grid).unwrap().state;
        let sys = linearize(&m, &p, &state).unwrap();
        let v = principal_eta(&sys, DEFAULT_TOL).unwrap();
        let spectrum = dense_spectrum(&sys).unwrap();
        assert!((v.eta_re - spectrum[0].0).abs() < 1e-7, "{} vs {:?}", v.eta_re, spectrum[0]);
    }

    #[test]
    fn eta_star_without_zone() {
        let m = build_mesh(&DomainSpec::interval(1.0, 101)).unwrap();
        let p = ParamSet { theta: 3.0, ..ParamSet::default() };
        let e = eta_star(&m, &p).unwrap();
        assert!((e.eigenvalue - 1.0).abs() < 1e-10);
        assert!((e.ratio - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eta_star_two_ways() {
        let m = zoned(201);
        let base = ParamSet::default();
        let p = base.with_theta(theta1(&base, &m).unwrap() + 0.5);
        let e = eta_star(&m, &p).unwrap();
        assert!(e.eigenvalue > 0.0);
        assert!((e.eigenvalue - e.ratio).abs() < 1e-6);
        let below = base.with_theta(theta1(&base, &m).unwrap() - 0.05);
        assert!(eta_star(&m, &below).is_err());
    }
}
