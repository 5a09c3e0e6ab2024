//! Principal eigenpair of `-Δ + q` with Neumann conditions.
//!
//! The smallest eigenvalue `λ₁(q)` is the quantity behind every survival
//! threshold. It is computed by inverse power iteration on the shifted
//! operator `-Δ_h + q - σ` with `σ = min(q) - 1`, which is positive definite
//! by construction, so each step is a conjugate-gradient solve.

use crate::error::{Error, Result};
use crate::linsolve::{conjugate_gradient, CsrMatrix};
use crate::mesh::{GridField, Mesh, Operator, Region};

pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_ITER: usize = 5000;

/// Principal eigenvalue and its positive eigenfunction, normalized so that
/// `∫ φ² = 1` under the cell quadrature of the region.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub function: GridField,
    pub iterations: usize,
}

/// Smallest eigenvalue and positive eigenfunction of `-Δ_h + q` on `region`.
pub fn principal_eigenpair(mesh: &Mesh, region: Region, q: &[f64], tol: f64) -> Result<EigenPair> {
    principal_eigenpair_op(mesh.laplacian(region), q, tol)
}

pub(crate) fn principal_eigenpair_op(op: &Operator, q: &[f64], tol: f64) -> Result<EigenPair> {
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(Error::Param(format!("eigen tolerance must lie in (0, 1e-6], got {tol}")));
    }
    let n = op.len();
    if q.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: q.len(),
        });
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("eigen potential"));
    }
    let q_min = q.iter().copied().fold(f64::INFINITY, f64::min);
    let sigma = q_min - 1.0;
    let w = op.mass();
    let shifted: CsrMatrix = op.stiffness().add_diagonal(
        &w.iter().zip(q).map(|(w, q)| w * (q - sigma)).collect::<Vec<_>>(),
    );
    let inner_tol = (tol * 1e-2).clamp(1e-13, 1e-10);

    let mut phi = vec![1.0; n];
    normalize(&mut phi, w);
    let mut lambda = rayleigh_op(op, q, &phi)?;
    let mut last_increment = f64::INFINITY;
    for it in 1..=MAX_ITER {
        let rhs: Vec<f64> = phi.iter().zip(w).map(|(p, w)| p * w).collect();
        let (next, _) = conjugate_gradient(&shifted, &rhs, Some(&phi), inner_tol, 20 * n + 200)?;
        phi = next;
        normalize(&mut phi, w);
        let updated = rayleigh_op(op, q, &phi)?;
        last_increment = (updated - lambda).abs();
        lambda = updated;
        if last_increment < tol && it > 1 {
            fix_sign(&mut phi)?;
            return Ok(EigenPair {
                value: lambda,
                function: phi.into(),
                iterations: it,
            });
        }
    }
    Err(Error::IterationCap {
        what: "inverse power iteration",
        cap: MAX_ITER,
        residual: last_increment,
    })
}

fn normalize(phi: &mut [f64], w: &[f64]) {
    let s: f64 = phi.iter().zip(w).map(|(p, w)| w * p * p).sum::<f64>().sqrt();
    phi.iter_mut().for_each(|p| *p /= s);
}

fn fix_sign(phi: &mut [f64]) -> Result<()> {
    let peak = phi
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    if peak < 0.0 {
        phi.iter_mut().for_each(|p| *p = -*p);
    }
    match phi.iter().copied().fold(f64::INFINITY, f64::min) {
        m if m > 0.0 => Ok(()),
        m => Err(Error::NotPositive(format!(
            "principal eigenfunction has minimum {m:e}"
        ))),
    }
}

/// Discrete Rayleigh quotient `(∫|∇φ|² + ∫qφ²) / ∫φ²`.
pub fn rayleigh(mesh: &Mesh, region: Region, q: &[f64], phi: &[f64]) -> Result<f64> {
    rayleigh_op(mesh.laplacian(region), q, phi)
}

pub(crate) fn rayleigh_op(op: &Operator, q: &[f64], phi: &[f64]) -> Result<f64> {
    let n = op.len();
    for len in [q.len(), phi.len()] {
        if len != n {
            return Err(Error::SizeMismatch { expected: n, got: len });
        }
    }
    let w = op.mass();
    let mass: f64 = phi.iter().zip(w).map(|(p, w)| w * p * p).sum();
    if !(mass > 0.0) {
        return Err(Error::Param("Rayleigh quotient of a zero field".into()));
    }
    let potential: f64 = phi.iter().zip(w).zip(q).map(|((p, w), q)| w * q * p * p).sum();
    Ok((op.energy(phi) + potential) / mass)
}

/// `λ₁` only.
pub fn principal_eigenvalue(mesh: &Mesh, region: Region, q: &[f64], tol: f64) -> Result<f64> {
    principal_eigenpair(mesh, region, q, tol).map(|p| p.value)
}

/// Residual `max |(-Δ_h + q)φ - λφ|` of an eigenpair.
pub fn eigen_residual(mesh: &Mesh, region: Region, q: &[f64], pair: &EigenPair) -> f64 {
    let op = mesh.laplacian(region);
    let ap = op.apply(&pair.function);
    ap.iter()
        .zip(pair.function.iter())
        .zip(q)
        .map(|((a, p), q)| (a + q * p - pair.value * p).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linsolve::dense_spectrum_oracle;
    use crate::mesh::{build_mesh, predation_field, DomainSpec};

    fn mesh(n: usize) -> Mesh {
        build_mesh(&DomainSpec::interval(1.0, n).with_zone(vec![(0.25, 0.75)])).unwrap()
    }

    #[test]
    fn zero_potential() {
        let m = mesh(201);
        let pair = principal_eigenpair(&m, Region::Omega, &vec![0.0; 201], 1e-10).unwrap();
        assert!(pair.value.abs() < 1e-10);
        let (lo, hi) = (pair.function.min(), pair.function.max());
        assert!(hi - lo < 1e-8);
        assert!((lo - 1.0).abs() < 1e-8, "unit norm on |Ω| = 1");
    }

    #[test]
    fn constant_potential() {
        let m = mesh(201);
        let v = principal_eigenvalue(&m, Region::Omega, &vec![3.7; 201], 1e-10).unwrap();
        assert!((v - 3.7).abs() < 1e-10);
    }

    #[test]
    fn piecewise_potential_matches_dense_oracle() {
        let m = mesh(201);
        let q = predation_field(&m, 2.0).unwrap();
        let pair = principal_eigenpair(&m, Region::Omega, &q, 1e-10).unwrap();
        let oracle = dense_spectrum_oracle(m.laplacian(Region::Omega), &q).unwrap()[0];
        assert!((pair.value - oracle).abs() < 1e-8, "{} vs {oracle}", pair.value);
        assert!(pair.function.min() > 0.0);
        assert!(eigen_residual(&m, Region::Omega, &q, &pair) < 1e-4);
    }

    #[test]
    fn omega1_region() {
        let m = mesh(101);
        let q: Vec<f64> = m.omega1_nodes().iter().map(|&i| 1.0 + m.coords()[i][0]).collect();
        let pair = principal_eigenpair(&m, Region::Omega1, &q, 1e-10).unwrap();
        let oracle = dense_spectrum_oracle(m.laplacian(Region::Omega1), &q).unwrap()[0];
        assert!((pair.value - oracle).abs() < 1e-8);
    }

    #[test]
    fn rayleigh_of_constant_and_eigenfunction() {
        let m = mesh(101);
        let c = vec![2.0; 101];
        assert!((rayleigh(&m, Region::Omega, &c, &vec![0.3; 101]).unwrap() - 2.0).abs() < 1e-14);
        let q = predation_field(&m, 2.0).unwrap();
        let pair = principal_eigenpair(&m, Region::Omega, &q, 1e-10).unwrap();
        let r = rayleigh(&m, Region::Omega, &q, &pair.function).unwrap();
        assert!((r - pair.value).abs() < 1e-10);
        let trial: Vec<f64> = m.coords().iter().map(|x| (3.0 * x[0]).cos() + 1.5).collect();
        assert!(rayleigh(&m, Region::Omega, &q, &trial).unwrap() >= pair.value - 1e-9);
        assert!(rayleigh(&m, Region::Omega, &q, &vec![0.0; 101]).is_err());
    }

    #[test]
    fn tolerance_precondition() {
        let m = mesh(21);
        assert!(principal_eigenpair(&m, Region::Omega, &vec![0.0; 21], 1e-2).is_err());
        assert!(principal_eigenpair(&m, Region::Omega, &vec![0.0; 20], 1e-8).is_err());
    }
}
