//! Tensor-product grids on an interval or rectangle with an embedded,
//! grid-aligned protection zone, and the discrete Neumann Laplacians on the
//! whole habitat and on the predator's region outside the closed zone.
//!
//! The Laplacian is assembled cell by cell. Every grid cell that belongs to a
//! region contributes its share of the lumped mass to its corner nodes and a
//! flux conductance to each of its edges. The resulting stiffness matrix `K`
//! is symmetric with zero row sums, and `W⁻¹K` (with `W` the lumped mass) is
//! the classical second-order difference stencil with ghost-node reflection
//! at every boundary of the region, including the zone interface.

use std::ops::{Deref, DerefMut};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linsolve::CsrMatrix;

/// A scalar function sampled on the nodes of Ω or of Ω₁.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridField(Vec<f64>);

impl GridField {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self(vec![value; len])
    }

    pub fn zeros(len: usize) -> Self {
        Self::constant(len, 0.0)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Max-norm distance to another field of the same length.
    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self(self.0.iter().map(|&x| f(x)).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Deref for GridField {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for GridField {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for GridField {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Habitat geometry: `[0, L]` or `[0, Lx] × [0, Ly]`, an optional zone given
/// as one closed sub-interval per axis, and the number of nodes per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub lengths: Vec<f64>,
    pub zone: Option<Vec<(f64, f64)>>,
    pub resolution: usize,
}

impl DomainSpec {
    pub fn interval(length: f64, resolution: usize) -> Self {
        Self {
            lengths: vec![length],
            zone: None,
            resolution,
        }
    }

    pub fn rectangle(lx: f64, ly: f64, resolution: usize) -> Self {
        Self {
            lengths: vec![lx, ly],
            zone: None,
            resolution,
        }
    }

    /// Attach a zone; `bounds` holds one `(lo, hi)` pair per axis.
    pub fn with_zone(mut self, bounds: Vec<(f64, f64)>) -> Self {
        self.zone = Some(bounds);
        self
    }

    pub fn without_zone(mut self) -> Self {
        self.zone = None;
        self
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }
}

/// Which of the two habitats an operator or field lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    /// The whole habitat Ω (prey).
    Omega,
    /// Ω₁ = Ω minus the closed zone (predator).
    Omega1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeTag {
    /// Strictly inside the protection zone; carries no predator unknown.
    ZoneInterior,
    /// On the zone boundary ∂Ω₀.
    Interface,
    /// Inside Ω₁, away from every boundary.
    Outer,
    /// On the outer boundary ∂Ω.
    OuterBoundary,
}

/// Symmetric stiffness matrix and lumped mass of `-Δ` with Neumann
/// conditions on one region. Local unknown `i` sits at full-grid node
/// `nodes[i]`.
#[derive(Debug, Clone)]
pub struct Operator {
    region: Region,
    stiffness: CsrMatrix,
    mass: Vec<f64>,
    nodes: Vec<usize>,
}

impl Operator {
    pub fn region(&self) -> Region {
        self.region
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Cell-quadrature weight of each unknown.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Full-grid node index of each local unknown.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// `-Δ_h f`, i.e. `W⁻¹ K f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = self.stiffness.mul_vec(f);
        for (o, w) in out.iter_mut().zip(&self.mass) {
            *o /= w;
        }
        out
    }

    /// `fᵀ K f`, the discrete Dirichlet energy `∫|∇f|²`.
    pub fn energy(&self, f: &[f64]) -> f64 {
        let kf = self.stiffness.mul_vec(f);
        kf.iter().zip(f).map(|(a, b)| a * b).sum()
    }

    /// Quadrature `∫ f` over the region.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.mass.iter().zip(f).map(|(w, x)| w * x).sum()
    }

    pub fn measure(&self) -> f64 {
        self.mass.iter().sum()
    }
}

#[derive(Debug)]
pub struct Mesh {
    spec: DomainSpec,
    n: usize,
    h: Vec<f64>,
    coords: Vec<[f64; 2]>,
    tags: Vec<NodeTag>,
    zone_index: Option<Vec<(usize, usize)>>,
    omega1_nodes: Vec<usize>,
    full_to_omega1: Vec<Option<usize>>,
    measure_omega: f64,
    measure_zone: f64,
    laplacian_omega: OnceLock<Operator>,
    laplacian_omega1: OnceLock<Operator>,
}

fn snap_to_grid(x: f64, h: f64, what: &str) -> Result<usize> {
    let r = x / h;
    let k = r.round();
    if (r - k).abs() > 1e-8 * r.abs().max(1.0) || k < 0.0 {
        return Err(Error::Domain(format!(
            "zone bound {what} = {x} is not on a grid line (spacing {h})"
        )));
    }
    Ok(k as usize)
}

/// Build the grid, tag every node and compute |Ω|, |Ω₀|, |Ω₁|.
pub fn build_mesh(spec: &DomainSpec) -> Result<Mesh> {
    let dims = spec.dimension();
    if !(1..=2).contains(&dims) {
        return Err(Error::Domain(format!("dimension must be 1 or 2, got {dims}")));
    }
    if spec.resolution < 3 {
        return Err(Error::Domain(format!(
            "resolution must be at least 3, got {}",
            spec.resolution
        )));
    }
    if spec.lengths.iter().any(|&l| !(l.is_finite() && l > 0.0)) {
        return Err(Error::Domain("extent lengths must be positive".into()));
    }
    let n = spec.resolution;
    let h: Vec<f64> = spec.lengths.iter().map(|l| l / (n - 1) as f64).collect();

    let zone_index = match &spec.zone {
        None => None,
        Some(bounds) => {
            if bounds.len() != dims {
                return Err(Error::Domain(format!(
                    "zone has {} axis ranges for a {dims}-dimensional domain",
                    bounds.len()
                )));
            }
            let mut idx = Vec::with_capacity(dims);
            for (axis, &(lo, hi)) in bounds.iter().enumerate() {
                if !(lo > 0.0 && hi < spec.lengths[axis] && lo < hi) {
                    return Err(Error::Domain(format!(
                        "zone [{lo}, {hi}] is not strictly inside [0, {}]",
                        spec.lengths[axis]
                    )));
                }
                let i_lo = snap_to_grid(lo, h[axis], "lower")?;
                let i_hi = snap_to_grid(hi, h[axis], "upper")?;
                if i_lo == 0 || i_hi >= n - 1 || i_lo >= i_hi {
                    return Err(Error::Domain(format!(
                        "zone [{lo}, {hi}] must leave at least one cell to the boundary"
                    )));
                }
                idx.push((i_lo, i_hi));
            }
            Some(idx)
        }
    };

    let total = n.pow(dims as u32);
    let mut coords = Vec::with_capacity(total);
    let mut tags = Vec::with_capacity(total);
    for node in 0..total {
        let ij = axis_indices(node, n, dims);
        let mut c = [0.0; 2];
        for d in 0..dims {
            c[d] = ij[d] as f64 * h[d];
        }
        coords.push(c);
        let on_outer = (0..dims).any(|d| ij[d] == 0 || ij[d] == n - 1);
        let tag = match &zone_index {
            Some(z) if (0..dims).all(|d| ij[d] >= z[d].0 && ij[d] <= z[d].1) => {
                if (0..dims).all(|d| ij[d] > z[d].0 && ij[d] < z[d].1) {
                    NodeTag::ZoneInterior
                } else {
                    NodeTag::Interface
                }
            }
            _ if on_outer => NodeTag::OuterBoundary,
            _ => NodeTag::Outer,
        };
        tags.push(tag);
    }

    let mut omega1_nodes = Vec::new();
    let mut full_to_omega1 = vec![None; total];
    for (node, tag) in tags.iter().enumerate() {
        if *tag != NodeTag::ZoneInterior {
            full_to_omega1[node] = Some(omega1_nodes.len());
            omega1_nodes.push(node);
        }
    }

    let measure_omega: f64 = spec.lengths.iter().product();
    let measure_zone = match &zone_index {
        None => 0.0,
        Some(z) => (0..dims)
            .map(|d| (z[d].1 - z[d].0) as f64 * h[d])
            .product(),
    };

    Ok(Mesh {
        spec: spec.clone(),
        n,
        h,
        coords,
        tags,
        zone_index,
        omega1_nodes,
        full_to_omega1,
        measure_omega,
        measure_zone,
        laplacian_omega: OnceLock::new(),
        laplacian_omega1: OnceLock::new(),
    })
}

fn axis_indices(node: usize, n: usize, dims: usize) -> [usize; 2] {
    if dims == 1 {
        [node, 0]
    } else {
        [node % n, node / n]
    }
}

impl Mesh {
    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    /// Nodes per axis.
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> &[f64] {
        &self.h
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.tags
    }

    pub fn has_zone(&self) -> bool {
        self.zone_index.is_some()
    }

    pub fn measure_omega(&self) -> f64 {
        self.measure_omega
    }

    pub fn measure_zone(&self) -> f64 {
        self.measure_zone
    }

    pub fn measure_omega1(&self) -> f64 {
        self.measure_omega - self.measure_zone
    }

    /// Number of predator unknowns (nodes of Ω₁ including ∂Ω₀).
    pub fn omega1_len(&self) -> usize {
        self.omega1_nodes.len()
    }

    pub fn omega1_nodes(&self) -> &[usize] {
        &self.omega1_nodes
    }

    /// Local Ω₁ index of a full-grid node, if it carries a predator unknown.
    pub fn omega1_index(&self, node: usize) -> Option<usize> {
        self.full_to_omega1[node]
    }

    pub fn region_len(&self, region: Region) -> usize {
        match region {
            Region::Omega => self.node_count(),
            Region::Omega1 => self.omega1_len(),
        }
    }

    /// Cached Neumann Laplacian of a region.
    pub fn laplacian(&self, region: Region) -> &Operator {
        match region {
            Region::Omega => self
                .laplacian_omega
                .get_or_init(|| neumann_laplacian(self, Region::Omega)),
            Region::Omega1 => self
                .laplacian_omega1
                .get_or_init(|| neumann_laplacian(self, Region::Omega1)),
        }
    }

    fn cell_in_zone(&self, cell: [usize; 2]) -> bool {
        match &self.zone_index {
            None => false,
            Some(z) => (0..self.dimension()).all(|d| cell[d] >= z[d].0 && cell[d] < z[d].1),
        }
    }

    /// Trapezoid quadrature over Ω of a full-grid field.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.laplacian(Region::Omega).integrate(f)
    }

    /// Trapezoid quadrature over Ω₁ of an Ω₁ field.
    pub fn integrate_omega1(&self, f: &[f64]) -> f64 {
        self.laplacian(Region::Omega1).integrate(f)
    }
}

/// Assemble `-Δ_h` with homogeneous Neumann conditions on `region`.
///
/// On a mesh without a zone, Ω₁ coincides with Ω and the Ω operator is
/// returned for either region.
pub fn neumann_laplacian(mesh: &Mesh, region: Region) -> Operator {
    let dims = mesh.dimension();
    let n = mesh.n;
    let h = &mesh.h;
    let (nodes, local): (Vec<usize>, Vec<Option<usize>>) = match region {
        Region::Omega => ((0..mesh.node_count()).collect(), (0..mesh.node_count()).map(Some).collect()),
        Region::Omega1 => (mesh.omega1_nodes.clone(), mesh.full_to_omega1.clone()),
    };
    let len = nodes.len();
    let mut mass = vec![0.0; len];
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let cells_per_axis = n - 1;
    let cell_total = cells_per_axis.pow(dims as u32);
    let idx = |ij: [usize; 2]| -> usize {
        if dims == 1 {
            ij[0]
        } else {
            ij[1] * n + ij[0]
        }
    };
    for cell in 0..cell_total {
        let c = axis_indices(cell, cells_per_axis, dims);
        if region == Region::Omega1 && mesh.cell_in_zone(c) {
            continue;
        }
        if dims == 1 {
            let (a, b) = (local[c[0]].unwrap(), local[c[0] + 1].unwrap());
            mass[a] += 0.5 * h[0];
            mass[b] += 0.5 * h[0];
            edges.push((a, b, 1.0 / h[0]));
        } else {
            let corners = [
                [c[0], c[1]],
                [c[0] + 1, c[1]],
                [c[0], c[1] + 1],
                [c[0] + 1, c[1] + 1],
            ];
            let l: Vec<usize> = corners.iter().map(|&p| local[idx(p)].unwrap()).collect();
            let quarter = 0.25 * h[0] * h[1];
            for &k in &l {
                mass[k] += quarter;
            }
            let gx = 0.5 * h[1] / h[0];
            let gy = 0.5 * h[0] / h[1];
            edges.push((l[0], l[1], gx));
            edges.push((l[2], l[3], gx));
            edges.push((l[0], l[2], gy));
            edges.push((l[1], l[3], gy));
        }
    }
    let mut triplets = Vec::with_capacity(edges.len() * 2);
    for &(a, b, g) in &edges {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        triplets.push((lo, hi, -g));
        triplets.push((hi, lo, -g));
    }
    let stiffness = CsrMatrix::from_triplets_with_zero_row_sums(len, triplets);
    Operator {
        region,
        stiffness,
        mass,
        nodes,
    }
}

/// Predation rate `a(x)`: zero on the closed zone, `a` on Ω₁.
pub fn predation_field(mesh: &Mesh, a: f64) -> Result<GridField> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::Param(format!("predation rate a must be >= 0, got {a}")));
    }
    Ok(mesh
        .tags
        .iter()
        .map(|t| match t {
            NodeTag::ZoneInterior | NodeTag::Interface => 0.0,
            _ => a,
        })
        .collect::<Vec<_>>()
        .into())
}

/// Restrict a field on Ω to the Ω₁ unknowns.
pub fn restrict(mesh: &Mesh, field: &[f64]) -> Result<GridField> {
    if field.len() != mesh.node_count() {
        return Err(Error::SizeMismatch {
            expected: mesh.node_count(),
            got: field.len(),
        });
    }
    Ok(mesh.omega1_nodes.iter().map(|&i| field[i]).collect::<Vec<_>>().into())
}

/// Extend an Ω₁ field to Ω, filling zone-interior nodes with `fill`.
pub fn extend(mesh: &Mesh, field: &[f64], fill: f64) -> Result<GridField> {
    if field.len() != mesh.omega1_len() {
        return Err(Error::SizeMismatch {
            expected: mesh.omega1_len(),
            got: field.len(),
        });
    }
    Ok(mesh
        .full_to_omega1
        .iter()
        .map(|l| l.map_or(fill, |j| field[j]))
        .collect::<Vec<_>>()
        .into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_1d(n: usize) -> Mesh {
        build_mesh(&DomainSpec::interval(1.0, n).with_zone(vec![(0.25, 0.75)])).unwrap()
    }

    #[test]
    fn zoneless_interval_measures() {
        let m = build_mesh(&DomainSpec::interval(1.0, 101)).unwrap();
        assert_eq!(m.node_count(), 101);
        assert_eq!(m.measure_omega(), 1.0);
        assert_eq!(m.measure_zone(), 0.0);
        assert_eq!(m.omega1_len(), 101);
    }

    #[test]
    fn interval_zone_measures() {
        let m = build_mesh(&DomainSpec::interval(1.0, 101).with_zone(vec![(0.25, 0.75)])).unwrap();
        assert!((m.measure_zone() - 0.5).abs() < 1e-12);
        assert!((m.measure_omega1() - 0.5).abs() < 1e-12);
        let lap1 = m.laplacian(Region::Omega1);
        assert!((lap1.measure() - 0.5).abs() < 1e-12);
        let lap = m.laplacian(Region::Omega);
        assert!((lap.measure() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_zone_measures() {
        let spec = DomainSpec::rectangle(1.0, 1.0, 41).with_zone(vec![(0.25, 0.75), (0.25, 0.75)]);
        let m = build_mesh(&spec).unwrap();
        assert_eq!(m.node_count(), 1681);
        assert!((m.measure_zone() - 0.25).abs() < 1e-12);
        assert!((m.laplacian(Region::Omega1).measure() - 0.75).abs() < 1e-12);
        // 21x21 closed zone nodes, 19x19 interior.
        let interior = m.tags().iter().filter(|t| **t == NodeTag::ZoneInterior).count();
        let iface = m.tags().iter().filter(|t| **t == NodeTag::Interface).count();
        assert_eq!(interior, 19 * 19);
        assert_eq!(iface, 21 * 21 - 19 * 19);
        assert_eq!(m.omega1_len(), 1681 - 361);
    }

    #[test]
    fn geometry_errors() {
        let bad = [
            DomainSpec::interval(1.0, 2),
            DomainSpec::interval(1.0, 101).with_zone(vec![(0.0, 0.5)]),
            DomainSpec::interval(1.0, 101).with_zone(vec![(0.5, 1.0)]),
            DomainSpec::interval(1.0, 101).with_zone(vec![(0.255, 0.75)]),
            DomainSpec::interval(1.0, 101).with_zone(vec![(0.6, 0.4)]),
            DomainSpec::rectangle(1.0, 1.0, 11).with_zone(vec![(0.2, 0.8)]),
        ];
        for spec in bad {
            assert!(build_mesh(&spec).is_err(), "{spec:?} accepted");
        }
    }

    #[test]
    fn node_tags_are_exclusive() {
        let m = unit_1d(101);
        assert_eq!(m.tags()[0], NodeTag::OuterBoundary);
        assert_eq!(m.tags()[100], NodeTag::OuterBoundary);
        assert_eq!(m.tags()[25], NodeTag::Interface);
        assert_eq!(m.tags()[75], NodeTag::Interface);
        assert_eq!(m.tags()[50], NodeTag::ZoneInterior);
        assert_eq!(m.tags()[10], NodeTag::Outer);
    }

    #[test]
    fn constants_in_the_kernel() {
        for region in [Region::Omega, Region::Omega1] {
            let m = unit_1d(41);
            let op = m.laplacian(region);
            let out = op.apply(&vec![3.0; op.len()]);
            assert!(out.iter().all(|x| x.abs() < 1e-10), "{region:?}");
        }
    }

    #[test]
    fn stiffness_is_symmetric_m_matrix() {
        let spec = DomainSpec::rectangle(1.0, 2.0, 21).with_zone(vec![(0.25, 0.75), (0.5, 1.5)]);
        let m = build_mesh(&spec).unwrap();
        for region in [Region::Omega, Region::Omega1] {
            let k = m.laplacian(region).stiffness();
            for i in 0..k.n() {
                let mut row_sum = 0.0;
                for (j, v) in k.row(i) {
                    row_sum += v;
                    assert_eq!(v, k.get(j, i), "asymmetric at ({i},{j})");
                    if i != j {
                        assert!(v <= 0.0);
                    }
                }
                assert!(row_sum.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn interface_uses_reflection() {
        // At the zone interface the Ω₁ stencil is the one-sided ghost-node
        // form 2(f_i - f_{i-1})/h².
        let m = unit_1d(21);
        let op = m.laplacian(Region::Omega1);
        let f: Vec<f64> = op.nodes().iter().map(|&i| m.coords()[i][0].powi(2)).collect();
        let af = op.apply(&f);
        let iface = m.omega1_index(5).unwrap();
        let h = 0.05;
        let expected = 2.0 * (f[iface] - f[iface - 1]) / (h * h);
        assert!((af[iface] - expected).abs() < 1e-9);
    }

    #[test]
    fn zoneless_omega1_falls_back_to_omega() {
        let m = build_mesh(&DomainSpec::interval(1.0, 11)).unwrap();
        assert_eq!(m.laplacian(Region::Omega1).len(), 11);
    }

    #[test]
    fn predation_field_vanishes_on_closed_zone() {
        let m = unit_1d(101);
        let a = predation_field(&m, 2.0).unwrap();
        for (x, v) in m.coords().iter().zip(a.iter()) {
            let inside = x[0] >= 0.25 - 1e-12 && x[0] <= 0.75 + 1e-12;
            assert_eq!(*v, if inside { 0.0 } else { 2.0 });
        }
        let free = build_mesh(&DomainSpec::interval(1.0, 11)).unwrap();
        assert!(predation_field(&free, 2.0).unwrap().iter().all(|&v| v == 2.0));
        assert!(predation_field(&m, 0.0).unwrap().iter().all(|&v| v == 0.0));
        assert!(predation_field(&m, -1.0).is_err());
    }

    #[test]
    fn restrict_extend() {
        let m = unit_1d(101);
        let r = restrict(&m, &vec![3.0; 101]).unwrap();
        assert!(r.iter().all(|&v| v == 3.0));
        let f: Vec<f64> = (0..101).map(|i| i as f64).collect();
        let back = extend(&m, &restrict(&m, &f).unwrap(), 0.0).unwrap();
        for (i, tag) in m.tags().iter().enumerate() {
            if *tag == NodeTag::ZoneInterior {
                assert_eq!(back[i], 0.0);
            } else {
                assert_eq!(back[i], f[i]);
            }
        }
        let e = extend(&m, &vec![1.5; m.omega1_len()], 0.0).unwrap();
        assert_eq!(e[50], 0.0);
        assert!(restrict(&m, &[1.0; 3]).is_err());
        assert!(extend(&m, &[1.0; 3], 0.0).is_err());
    }
}
