//! Survival thresholds and the predicted outcome for a parameter point.
//!
//! * `θ₀ = a/k`: prey persists without any zone above it.
//! * `θ*(μ, Ω₀) = λ₁(a(x)μ/(1+kμ))`: coexistence onset for `μ > 0`.
//! * `θ₁(Ω₀) = λ₁(q₀)` with `q₀ = 0` on the closed zone and `θ₀` on Ω₁:
//!   the limit of `θ*` as `μ → ∞`.
//! * `θ₋ = -μ/(c + mμ)`: predator persistence threshold for `-c/m < μ ≤ 0`.

use std::fmt;

use crate::eigen;
use crate::error::{Error, Result};
use crate::mesh::{predation_field, GridField, Mesh, Region};

/// Model constants of the predator–prey system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSet {
    /// Prey birth rate θ.
    pub theta: f64,
    /// Predator growth rate μ (any sign).
    pub mu: f64,
    /// Predation rate outside the zone.
    pub a: f64,
    /// Conversion rate.
    pub c: f64,
    /// Handling-time parameter.
    pub m: f64,
    /// Refuge parameter.
    pub k: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Default for ParamSet {
    fn default() -> Self {
        Self {
            theta: 1.0,
            mu: 1.0,
            a: 2.0,
            c: 1.0,
            m: 1.0,
            k: 1.0,
            d1: 1.0,
            d2: 1.0,
        }
    }
}

impl ParamSet {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("theta", self.theta),
            ("mu", self.mu),
            ("a", self.a),
            ("c", self.c),
            ("m", self.m),
            ("k", self.k),
            ("d1", self.d1),
            ("d2", self.d2),
        ];
        if let Some((name, v)) = all.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Param(format!("{name} = {v} is not finite")));
        }
        let bad = |name: &str, v: f64, rule: &str| Err(Error::Param(format!("{name} = {v}: {rule}")));
        if !(self.k > 0.0) {
            return bad("k", self.k, "must be > 0");
        }
        if self.a < 0.0 {
            return bad("a", self.a, "must be >= 0");
        }
        if self.c < 0.0 {
            return bad("c", self.c, "must be >= 0");
        }
        if self.m < 0.0 {
            return bad("m", self.m, "must be >= 0");
        }
        if !(self.d1 > 0.0) {
            return bad("d1", self.d1, "must be > 0");
        }
        if !(self.d2 > 0.0) {
            return bad("d2", self.d2, "must be > 0");
        }
        Ok(())
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn mu_plus(&self) -> f64 {
        self.mu.max(0.0)
    }

    /// `-c/m`, or `-∞` when `m = 0`.
    pub fn predator_floor(&self) -> f64 {
        if self.m > 0.0 {
            -self.c / self.m
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Largest `m` for which coexistence is ruled out below `θ*`:
    /// `(1 + kμ)² / (aμ)`.
    pub fn handling_bound(&self) -> f64 {
        if self.a * self.mu > 0.0 {
            (1.0 + self.k * self.mu).powi(2) / (self.a * self.mu)
        } else {
            f64::INFINITY
        }
    }

    /// `max(1, θ, |μ|)`, the scale used by the steady-state tolerances.
    pub fn scale(&self) -> f64 {
        1f64.max(self.theta).max(self.mu.abs())
    }
}

/// Predicted outcome of a parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    PreySafeNoZone,
    CoexistPredicted,
    PreyExtinctPredicted,
    CoexistNegMu,
    PredatorExtinct,
    Indeterminate,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::PreySafeNoZone => "PREY_SAFE_NO_ZONE",
            Regime::CoexistPredicted => "COEXIST_PREDICTED",
            Regime::PreyExtinctPredicted => "PREY_EXTINCT_PREDICTED",
            Regime::CoexistNegMu => "COEXIST_NEG_MU",
            Regime::PredatorExtinct => "PREDATOR_EXTINCT",
            Regime::Indeterminate => "INDETERMINATE",
        }
    }

    /// Classify from precomputed thresholds. `theta_star` is required when
    /// `μ > 0` and θ < θ₀.
    pub fn from_thresholds(params: &ParamSet, theta_star: Option<f64>) -> Regime {
        let (theta, mu) = (params.theta, params.mu);
        if mu <= 0.0 {
            if mu <= params.predator_floor() {
                return Regime::PredatorExtinct;
            }
            let neg = -mu / (params.c + params.m * mu);
            return if theta > neg {
                Regime::CoexistNegMu
            } else {
                Regime::PredatorExtinct
            };
        }
        if theta >= params.a / params.k {
            return Regime::PreySafeNoZone;
        }
        let star = theta_star.expect("theta_star is required for mu > 0");
        if theta > star {
            Regime::CoexistPredicted
        } else if params.m <= params.handling_bound() {
            Regime::PreyExtinctPredicted
        } else {
            Regime::Indeterminate
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// All thresholds of a parameter point together with the regime label.
#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub theta0: f64,
    /// Defined for `μ ≥ 0`.
    pub theta_star: Option<f64>,
    pub theta1: f64,
    /// Defined for `-c/m < μ ≤ 0`.
    pub theta_neg: Option<f64>,
    pub regime: Regime,
    /// `a(x)μ/(1+kμ)` (present when `θ*` is).
    pub q: Option<GridField>,
    pub q0: GridField,
}

pub fn theta0(params: &ParamSet) -> f64 {
    params.a / params.k
}

/// `q(x) = a(x)μ/(1+kμ)` on Ω.
pub fn predation_potential(params: &ParamSet, mesh: &Mesh) -> Result<GridField> {
    let scale = params.mu / (1.0 + params.k * params.mu);
    Ok(predation_field(mesh, params.a)?.map(|a| a * scale))
}

/// `q₀(x)`: 0 on the closed zone, θ₀ on Ω₁.
pub fn refuge_potential(params: &ParamSet, mesh: &Mesh) -> Result<GridField> {
    predation_field(mesh, theta0(params))
}

pub fn theta_star(params: &ParamSet, mesh: &Mesh) -> Result<f64> {
    theta_star_tol(params, mesh, eigen::DEFAULT_TOL)
}

pub fn theta_star_tol(params: &ParamSet, mesh: &Mesh, tol: f64) -> Result<f64> {
    params.validate()?;
    if params.mu < 0.0 {
        return Err(Error::Param(format!(
            "theta_star needs mu >= 0, got {}",
            params.mu
        )));
    }
    if params.mu == 0.0 {
        return Ok(0.0);
    }
    let q = predation_potential(params, mesh)?;
    eigen::principal_eigenvalue(mesh, Region::Omega, &q, tol)
}

pub fn theta1(params: &ParamSet, mesh: &Mesh) -> Result<f64> {
    theta1_tol(params, mesh, eigen::DEFAULT_TOL)
}

pub fn theta1_tol(params: &ParamSet, mesh: &Mesh, tol: f64) -> Result<f64> {
    params.validate()?;
    let q0 = refuge_potential(params, mesh)?;
    eigen::principal_eigenvalue(mesh, Region::Omega, &q0, tol)
}

/// `θ₋ = -μ/(c + mμ)`, valid for `-c/m < μ ≤ 0`; values within `1e-9·c/m`
/// of the pole are rejected.
pub fn theta_neg(params: &ParamSet) -> Result<f64> {
    let mu = params.mu;
    let floor = params.predator_floor();
    let guard = if floor.is_finite() { 1e-9 * params.c / params.m } else { 0.0 };
    if mu > 0.0 || mu < floor + guard || (floor.is_finite() && mu <= floor) {
        return Err(Error::Param(format!(
            "theta_neg is defined for -c/m < mu <= 0, got mu = {mu}"
        )));
    }
    if mu == 0.0 {
        return Ok(0.0);
    }
    Ok(-mu / (params.c + params.m * mu))
}

pub fn classify_regime(params: &ParamSet, mesh: &Mesh) -> Result<Regime> {
    params.validate()?;
    let star = if params.mu > 0.0 && params.theta < theta0(params) {
        Some(theta_star(params, mesh)?)
    } else {
        None
    };
    Ok(Regime::from_thresholds(params, star))
}

pub fn compute_thresholds(params: &ParamSet, mesh: &Mesh, tol: f64) -> Result<ThresholdReport> {
    params.validate()?;
    let (theta_star, q) = if params.mu >= 0.0 {
        (
            Some(theta_star_tol(params, mesh, tol)?),
            Some(predation_potential(params, mesh)?),
        )
    } else {
        (None, None)
    };
    let theta_neg = theta_neg(params).ok();
    Ok(ThresholdReport {
        theta0: theta0(params),
        theta_star,
        theta1: theta1_tol(params, mesh, tol)?,
        theta_neg,
        regime: Regime::from_thresholds(params, theta_star),
        q,
        q0: refuge_potential(params, mesh)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::dense_spectrum_oracle;
    use crate::mesh::{build_mesh, DomainSpec};

    fn zoned(n: usize) -> Mesh {
        build_mesh(&DomainSpec::interval(1.0, n).with_zone(vec![(0.25, 0.75)])).unwrap()
    }

    #[test]
    fn theta0_values() {
        let p = ParamSet::default();
        assert_eq!(theta0(&p), 2.0);
        assert_eq!(theta0(&ParamSet { a: 0.0, ..p }), 0.0);
        assert_eq!(theta0(&ParamSet { a: 1.0, k: 4.0, ..p }), 0.25);
    }

    #[test]
    fn theta_star_at_zero_mu() {
        let m = zoned(101);
        assert_eq!(theta_star(&ParamSet::default().with_mu(0.0), &m).unwrap(), 0.0);
    }

    #[test]
    fn theta_star_without_zone_is_constant_potential() {
        let m = build_mesh(&DomainSpec::interval(1.0, 101)).unwrap();
        let p = ParamSet::default().with_mu(1.5);
        let expect = p.a * p.mu / (1.0 + p.k * p.mu);
        assert!((theta_star(&p, &m).unwrap() - expect).abs() < 1e-10);
        assert!((theta1(&p, &m).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn theta_star_matches_dense_oracle() {
        let m = zoned(201);
        let p = ParamSet::default();
        let q = predation_potential(&p, &m).unwrap();
        let oracle = dense_spectrum_oracle(m.laplacian(Region::Omega), &q).unwrap()[0];
        assert!((theta_star(&p, &m).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn theta1_is_bounded_by_area_fraction() {
        let m = zoned(201);
        let p = ParamSet::default();
        let t1 = theta1(&p, &m).unwrap();
        assert!(t1 <= p.a * m.measure_omega1() / (p.k * m.measure_omega()) + 1e-3);
        let stars: Vec<f64> = [1.0, 4.0, 16.0, 64.0]
            .iter()
            .map(|&mu| theta_star(&p.with_mu(mu), &m).unwrap())
            .collect();
        assert!(stars.windows(2).all(|w| w[0] < w[1]));
        assert!(stars.iter().all(|&s| s < t1));
    }

    #[test]
    fn theta_neg_values() {
        let p = ParamSet { c: 1.0, m: 0.5, ..ParamSet::default() };
        assert_eq!(theta_neg(&p.with_mu(0.0)).unwrap(), 0.0);
        assert!((theta_neg(&p.with_mu(-0.5)).unwrap() - 0.5 / 0.75).abs() < 1e-15);
        assert!(theta_neg(&p.with_mu(-2.0)).is_err());
        assert!(theta_neg(&p.with_mu(-2.0 + 1e-12)).is_err());
        assert!(theta_neg(&p.with_mu(-2.0 + 1e-6)).unwrap() > 1e5);
        assert!(theta_neg(&p.with_mu(0.1)).is_err());
        let cm = ParamSet { c: 1.0, m: 1.0, ..p }.with_mu(-0.5);
        assert!((theta_neg(&cm).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn regime_examples() {
        let m = zoned(101);
        let p = ParamSet { c: 1.0, m: 0.5, ..ParamSet::default() };
        assert_eq!(
            classify_regime(&p.with_mu(-2.1), &m).unwrap(),
            Regime::PredatorExtinct
        );
        assert_eq!(
            classify_regime(&p.with_mu(3.0).with_theta(2.1), &m).unwrap(),
            Regime::PreySafeNoZone
        );
        let star = theta_star(&p.with_mu(1.0), &m).unwrap();
        let mid = p.with_mu(1.0).with_theta(0.5 * (star + 2.0));
        assert_eq!(classify_regime(&mid, &m).unwrap(), Regime::CoexistPredicted);
        let low = p.with_mu(1.0).with_theta(0.5 * star);
        assert_eq!(classify_regime(&low, &m).unwrap(), Regime::PreyExtinctPredicted);
        let heavy = low.with_m(10.0);
        assert_eq!(classify_regime(&heavy, &m).unwrap(), Regime::Indeterminate);
        assert_eq!(
            classify_regime(&p.with_mu(-0.5).with_theta(1.0), &m).unwrap(),
            Regime::CoexistNegMu
        );
        assert_eq!(
            classify_regime(&p.with_mu(-0.5).with_theta(0.5), &m).unwrap(),
            Regime::PredatorExtinct
        );
    }

    #[test]
    fn invalid_params() {
        let p = ParamSet::default();
        assert!(ParamSet { k: 0.0, ..p }.validate().is_err());
        assert!(ParamSet { a: -1.0, ..p }.validate().is_err());
        assert!(ParamSet { d2: 0.0, ..p }.validate().is_err());
        assert!(ParamSet { theta: f64::NAN, ..p }.validate().is_err());
        let m = zoned(21);
        assert!(theta_star(&p.with_mu(-1.0), &m).is_err());
    }
}
