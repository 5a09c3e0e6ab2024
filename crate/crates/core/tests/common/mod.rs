//! Independent dense reference for the Neumann operator and its quadrature.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// 1D stiffness (`1/h` couplings) and lumped mass on `n` nodes over `[0, len]`.
pub fn axis(len: f64, n: usize) -> (DMatrix<f64>, Vec<f64>) {
    let h = len / (n - 1) as f64;
    let mut k = DMatrix::zeros(n, n);
    let mut m = vec![h; n];
    m[0] = 0.5 * h;
    m[n - 1] = 0.5 * h;
    for i in 0..n - 1 {
        k[(i, i)] += 1.0 / h;
        k[(i + 1, i + 1)] += 1.0 / h;
        k[(i, i + 1)] -= 1.0 / h;
        k[(i + 1, i)] -= 1.0 / h;
    }
    (k, m)
}

/// Stiffness and lumped mass on `[0, lx]` or `[0, lx] × [0, ly]`, x fastest.
pub fn operator(lengths: &[f64], n: usize) -> (DMatrix<f64>, Vec<f64>) {
    let (kx, mx) = axis(lengths[0], n);
    if lengths.len() == 1 {
        return (kx, mx);
    }
    let (ky, my) = axis(lengths[1], n);
    let total = n * n;
    let mut k = DMatrix::zeros(total, total);
    let mut w = vec![0.0; total];
    for j in 0..n {
        for i in 0..n {
            let r = j * n + i;
            w[r] = mx[i] * my[j];
            for i2 in 0..n {
                k[(r, j * n + i2)] += kx[(i, i2)] * my[j];
            }
            for j2 in 0..n {
                k[(r, j2 * n + i)] += mx[i] * ky[(j, j2)];
            }
        }
    }
    (k, w)
}

/// Sorted spectrum of `W⁻¹K + diag(q)`.
pub fn spectrum(lengths: &[f64], n: usize, q: &[f64]) -> Vec<f64> {
    let (k, w) = operator(lengths, n);
    let s: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let a = DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| {
        k[(i, j)] / (s[i] * s[j]) + if i == j { q[i] } else { 0.0 }
    });
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn lambda1(lengths: &[f64], n: usize, q: &[f64]) -> f64 {
    spectrum(lengths, n, q)[0]
}

/// Node coordinates, x fastest.
pub fn coords(lengths: &[f64], n: usize) -> Vec<Vec<f64>> {
    let h: Vec<f64> = lengths.iter().map(|l| l / (n - 1) as f64).collect();
    if lengths.len() == 1 {
        (0..n).map(|i| vec![i as f64 * h[0]]).collect()
    } else {
        (0..n * n).map(|r| vec![(r % n) as f64 * h[0], (r / n) as f64 * h[1]]).collect()
    }
}

/// `inside` on the closed box `zone`, `outside` elsewhere.
pub fn piecewise(lengths: &[f64], n: usize, zone: &[(f64, f64)], inside: f64, outside: f64) -> Vec<f64> {
    coords(lengths, n)
        .iter()
        .map(|x| {
            let hit = x.iter().zip(zone).all(|(&c, &(lo, hi))| c >= lo - 1e-12 && c <= hi + 1e-12);
            if hit {
                inside
            } else {
                outside
            }
        })
        .collect()
}

/// Trapezoid weights on the 1D nodes of `[0, len]` outside the open zone
/// `(lo, hi)`, in node order.
pub fn outside_weights_1d(len: f64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let h = len / (n - 1) as f64;
    let x = |i: usize| i as f64 * h;
    let mut w = vec![0.0; n];
    for c in 0..n - 1 {
        let mid = 0.5 * (x(c) + x(c + 1));
        if mid > lo && mid < hi {
            continue;
        }
        w[c] += 0.5 * h;
        w[c + 1] += 0.5 * h;
    }
    (0..n)
        .filter(|&i| !(x(i) > lo + 1e-12 && x(i) < hi - 1e-12))
        .map(|i| w[i])
        .collect()
}

/// Trapezoid weights on all nodes of `[0, len]`.
pub fn weights_1d(len: f64, n: usize) -> Vec<f64> {
    axis(len, n).1
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
