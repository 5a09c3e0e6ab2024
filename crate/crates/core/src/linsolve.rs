//! Sparse and banded linear algebra.
//!
//! `solve_spd` is a Jacobi-preconditioned conjugate gradient for the
//! symmetric systems `(K + W·diag(s)) x = W b` that arise from shifting the
//! Neumann Laplacian. `BandedLu` factors the nonsymmetric Newton and
//! stability matrices and the fixed implicit-diffusion matrices of the time
//! stepper. `dense_spectrum_oracle` is a small-instance reference used to
//! check the eigen module.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{GridField, Operator};

/// Default relative residual for inner solves.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest unknown count accepted by the dense oracles.
pub const DENSE_CAP: usize = 2000;

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Off-diagonal triplets plus a diagonal set to minus the row sum, so that
    /// every row sums to zero.
    pub(crate) fn from_triplets_with_zero_row_sums(
        n: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Self {
        let off = Self::from_triplets(n, triplets.clone());
        for i in 0..n {
            let s: f64 = off.row(i).filter(|&(j, _)| j != i).map(|(_, v)| v).sum();
            triplets.push((i, i, -s));
        }
        Self::from_triplets(n, triplets)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    /// `self + diag(d)`, keeping the sparsity pattern (diagonal assumed present).
    pub fn add_diagonal(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                if out.cols[k] == i {
                    out.vals[k] += d[i];
                }
            }
        }
        out
    }

    /// `alpha * self`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Half-bandwidth `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// Shifted operator `-Δ_h + diag(shift)` with a right-hand side, posed in
/// the symmetric weighted form `(K + W·diag(shift)) x = W·rhs`.
#[derive(Debug, Clone)]
pub struct LinearSystem<'a> {
    pub operator: &'a Operator,
    pub shift: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl<'a> LinearSystem<'a> {
    pub fn new(operator: &'a Operator, shift: Vec<f64>, rhs: Vec<f64>) -> Self {
        Self {
            operator,
            shift,
            rhs,
        }
    }

    pub fn matrix(&self) -> CsrMatrix {
        let ws: Vec<f64> = self
            .operator
            .mass()
            .iter()
            .zip(&self.shift)
            .map(|(w, s)| w * s)
            .collect();
        self.operator.stiffness().add_diagonal(&ws)
    }

    pub fn weighted_rhs(&self) -> Vec<f64> {
        self.operator
            .mass()
            .iter()
            .zip(&self.rhs)
            .map(|(w, b)| w * b)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solve a shifted SPD system to relative residual `tol` (in `(0, 1e-4]`).
pub fn solve_spd(system: &LinearSystem<'_>, tol: f64) -> Result<GridField> {
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::Param(format!("solve tolerance must lie in (0, 1e-4], got {tol}")));
    }
    let n = system.operator.len();
    for (len, _) in [(system.shift.len(), "shift"), (system.rhs.len(), "rhs")] {
        if len != n {
            return Err(Error::SizeMismatch { expected: n, got: len });
        }
    }
    let a = system.matrix();
    let b = system.weighted_rhs();
    let (x, _) = conjugate_gradient(&a, &b, None, tol, 20 * n + 100)?;
    Ok(x.into())
}

/// Jacobi-preconditioned conjugate gradient.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, CgReport)> {
    let n = a.n();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            vec![0.0; n],
            CgReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(Error::NotPositiveDefinite { iteration: 0 })
            }
        })
        .collect::<Result<_>>()?;
    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let mut r = a.mul_vec(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let rel = norm(&r) / b_norm;
        if rel <= tol {
            return Ok((
                x,
                CgReport {
                    iterations: it,
                    relative_residual: rel,
                },
            ));
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite { iteration: it });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // Recompute the true residual before giving up.
    let ax = a.mul_vec(&x);
    let rel = norm(&ax.iter().zip(b).map(|(a, b)| b - a).collect::<Vec<_>>()) / b_norm;
    if rel <= tol {
        return Ok((
            x,
            CgReport {
                iterations: max_iter,
                relative_residual: rel,
            },
        ));
    }
    Err(Error::IterationCap {
        what: "conjugate gradient",
        cap: max_iter,
        residual: rel,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// General banded matrix with `kl` sub- and `ku` super-diagonals, stored
/// with room for the fill produced by partial pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn from_csr(a: &CsrMatrix) -> Self {
        let bw = a.bandwidth();
        let mut m = Self::zeros(a.n(), bw, bw);
        for i in 0..a.n() {
            for (j, v) in a.row(i) {
                m.add(i, j, v);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    /// Add `v` to entry `(i, j)`; panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band ({}, {})",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.ku + self.kl {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// LU factorization with partial pivoting (row interchanges).
    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut pivots = vec![0usize; n];
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 1e-300 && best > scale * 1e-15) || !best.is_finite() {
                return Err(Error::Singular(k));
            }
            pivots[k] = p;
            let last_col = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for i in k + 1..=last_row {
                let sik = self.slot(i, k);
                let l = self.data[sik] / pivot;
                self.data[sik] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let skj = self.data[self.slot(k, j)];
                        let sij = self.slot(i, j);
                        self.data[sij] -= l * skj;
                    }
                }
            }
        }
        Ok(BandedLu { band: self, pivots })
    }
}

/// Factored banded matrix; reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct BandedLu {
    band: BandMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn n(&self) -> usize {
        self.band.n
    }

    /// Overwrite `b` with the solution of `A x = b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.band;
        let n = m.n;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + m.kl).min(n - 1) {
                    b[i] -= m.data[m.slot(i, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + m.ku + m.kl).min(n - 1) {
                s -= m.data[m.slot(k, j)] * b[j];
            }
            b[k] = s / m.data[m.slot(k, k)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Full spectrum of `-Δ_h + diag(potential)` on the operator's region,
/// ascending. Uses the similarity transform `W^{-1/2} K W^{-1/2} + diag(q)`.
pub fn dense_spectrum_oracle(operator: &Operator, potential: &[f64]) -> Result<Vec<f64>> {
    let n = operator.len();
    if n > DENSE_CAP {
        return Err(Error::OracleTooLarge { n, cap: DENSE_CAP });
    }
    if potential.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: potential.len(),
        });
    }
    let s: Vec<f64> = operator.mass().iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut m = DMatrix::zeros(n, n);
    let k = operator.stiffness();
    for i in 0..n {
        for (j, v) in k.row(i) {
            m[(i, j)] = s[i] * v * s[j];
        }
        m[(i, i)] += potential[i];
    }
    let mut eig: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, DomainSpec, Region};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mesh() -> crate::mesh::Mesh {
        build_mesh(&DomainSpec::interval(1.0, 101).with_zone(vec![(0.25, 0.75)])).unwrap()
    }

    #[test]
    fn manufactured_constant_solution() {
        let m = mesh();
        let op = m.laplacian(Region::Omega);
        let b = vec![1.0; op.len()]; // (-Δ + 1)·1 = 1
        let x = solve_spd(&LinearSystem::new(op, vec![1.0; op.len()], b), 1e-12).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn manufactured_random_solution() {
        let m = mesh();
        let op = m.laplacian(Region::Omega1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f: Vec<f64> = (0..op.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let shift: Vec<f64> = (0..op.len()).map(|_| rng.random_range(0.1..3.0)).collect();
        let mut b = op.apply(&f);
        for i in 0..b.len() {
            b[i] += shift[i] * f[i];
        }
        let x = solve_spd(&LinearSystem::new(op, shift, b), 1e-12).unwrap();
        let err = x.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-7, "err {err}");
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let m = mesh();
        let op = m.laplacian(Region::Omega);
        let x = solve_spd(&LinearSystem::new(op, vec![2.0; op.len()], vec![0.0; op.len()]), 1e-10)
            .unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn indefinite_system_is_detected() {
        let m = mesh();
        let op = m.laplacian(Region::Omega);
        let sys = LinearSystem::new(op, vec![-50.0; op.len()], vec![1.0; op.len()]);
        assert!(matches!(solve_spd(&sys, 1e-10), Err(Error::NotPositiveDefinite { .. })));
        assert!(solve_spd(&sys, 1e-3).is_err());
    }

    #[test]
    fn solve_is_deterministic() {
        let m = mesh();
        let op = m.laplacian(Region::Omega);
        let rhs: Vec<f64> = (0..op.len()).map(|i| (i as f64).sin()).collect();
        let sys = LinearSystem::new(op, vec![0.5; op.len()], rhs);
        assert_eq!(solve_spd(&sys, 1e-10).unwrap(), solve_spd(&sys, 1e-10).unwrap());
    }

    #[test]
    fn banded_lu_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let (kl, ku) = (3, 2);
        let mut band = BandMatrix::zeros(n, kl, ku);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // weak diagonal forces pivoting
                let v: f64 = rng.random_range(-1.0..1.0) + if i == j { 0.01 } else { 0.0 };
                band.add(i, j, v);
                dense[(i, j)] = v;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 3.0).collect();
        let x = band.clone().factor().unwrap().solve(&b);
        let ax = band.mul_vec(&x);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-9);
        }
        let xd = dense.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn singular_band_is_reported() {
        let mut band = BandMatrix::zeros(3, 1, 1);
        band.add(0, 0, 1.0);
        band.add(1, 1, 1.0);
        assert!(matches!(band.factor(), Err(Error::Singular(2))));
    }

    #[test]
    fn oracle_constant_mode_and_shift() {
        let m = mesh();
        let op = m.laplacian(Region::Omega);
        let base = dense_spectrum_oracle(op, &vec![0.0; op.len()]).unwrap();
        assert!(base[0].abs() < 1e-10);
        let shifted = dense_spectrum_oracle(op, &vec![2.5; op.len()]).unwrap();
        for (a, b) in base.iter().zip(&shifted) {
            assert!((a + 2.5 - b).abs() < 1e-9);
        }
        assert!(base.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn neumann_spectrum_is_second_order() {
        // Second eigenvalue of -u'' on [0,1] with Neumann ends is π².
        let err = |n: usize| {
            let m = build_mesh(&DomainSpec::interval(1.0, n)).unwrap();
            let op = m.laplacian(Region::Omega);
            let eig = dense_spectrum_oracle(op, &vec![0.0; op.len()]).unwrap();
            (eig[1] - std::f64::consts::PI.powi(2)).abs()
        };
        let (e1, e2) = (err(51), err(101));
        assert!(e1 < 5e-3);
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn oracle_size_cap() {
        let m = build_mesh(&DomainSpec::rectangle(1.0, 1.0, 46)).unwrap();
        let op = m.laplacian(Region::Omega);
        assert!(matches!(
            dense_spectrum_oracle(op, &vec![0.0; op.len()]),
            Err(Error::OracleTooLarge { .. })
        ));
    }
}
