//! Run configuration for the `refugium` binary.
//!
//! The file is TOML with the sections `[domain]`, `[params]`, `[solver]`,
//! `[sweep]` and `[output]`; every section is optional and unknown keys are
//! rejected. Errors carry the line of the offending key.
//!
//! ```toml
//! [domain]
//! lengths = [1.0]
//! resolution = 201
//! zone = [[0.25, 0.75]]
//!
//! [params]
//! theta = 1.5
//! mu = 1.0
//! ```

use std::ops::Range;
use std::path::PathBuf;

use serde::Deserialize;
use toml::Spanned;

use crate::coupled::{EvolveOptions, SettleOptions};
use crate::error::{Error, Result};
use crate::mesh::DomainSpec;
use crate::thresholds::ParamSet;
use crate::verify::VerifyConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaGrid {
    /// Explicit values, strictly monotone.
    List(Vec<f64>),
    /// `points` evenly spaced values from `min` to `max` inclusive.
    Range { min: f64, max: f64, points: usize },
    /// Bracket the predicted onset with this many points.
    Auto(usize),
}

impl ThetaGrid {
    pub fn values(&self) -> Option<Vec<f64>> {
        match *self {
            ThetaGrid::List(ref v) => Some(v.clone()),
            ThetaGrid::Range { min, max, points } => {
                Some((0..points).map(|i| min + (max - min) * i as f64 / (points - 1) as f64).collect())
            }
            ThetaGrid::Auto(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub eigen_tol: f64,
    pub evolve: EvolveOptions,
    pub handoff: f64,
    pub eps_pos: Option<f64>,
    /// Random starts added to the fixed ones in multi-start runs.
    pub multistart: usize,
    pub seed: u64,
    /// Constant initial prey and predator densities for `steady`.
    pub u_init: Option<f64>,
    pub v_init: Option<f64>,
}

impl SolverConfig {
    pub fn settle(&self) -> SettleOptions {
        SettleOptions {
            evolve: self.evolve,
            handoff: self.handoff,
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        let settle = SettleOptions::default();
        Self {
            eigen_tol: 1e-10,
            evolve: settle.evolve,
            handoff: settle.handoff,
            eps_pos: None,
            multistart: 0,
            seed: 0,
            u_init: None,
            v_init: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub theta: ThetaGrid,
    pub descending: bool,
    pub warm_start: bool,
    pub stability: bool,
    pub mu: Vec<f64>,
    /// Full zone widths, ascending.
    pub zone_widths: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            theta: ThetaGrid::Auto(40),
            descending: false,
            warm_start: true,
            stability: false,
            mu: vec![8.0, 16.0, 32.0, 64.0],
            zone_widths: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub domain: DomainSpec,
    pub params: ParamSet,
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
    pub output: Option<PathBuf>,
    /// Whether the file had a `[domain]` section.
    pub has_domain: bool,
    pub has_params: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            domain: DomainSpec::interval(1.0, 201).with_zone(vec![(0.25, 0.75)]),
            params: ParamSet::default(),
            solver: SolverConfig::default(),
            sweep: SweepConfig::default(),
            output: None,
            has_domain: false,
            has_params: false,
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            msg: e.message().to_string(),
        })?;
        raw.build(text)
    }

    /// Verification settings: sections present in the file override the
    /// built-in ones.
    pub fn verify_config(&self) -> VerifyConfig {
        let mut v = VerifyConfig::default();
        if self.has_domain {
            v.domain = self.domain.clone();
            v.domain_2d = None;
        }
        if self.has_params {
            v.params = self.params;
        }
        v.eigen_tol = self.solver.eigen_tol;
        v.settle = self.solver.settle();
        if let ThetaGrid::Auto(n) = self.sweep.theta {
            v.sweep_points = n;
        }
        v.extra_starts = self.solver.multistart;
        v.seed = self.solver.seed;
        v
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

type S<T> = Option<Spanned<T>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    domain: Option<RawDomain>,
    params: Option<RawParams>,
    solver: Option<RawSolver>,
    sweep: Option<RawSweep>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    lengths: S<Vec<f64>>,
    resolution: S<i64>,
    zone: S<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    theta: S<f64>,
    mu: S<f64>,
    a: S<f64>,
    c: S<f64>,
    m: S<f64>,
    k: S<f64>,
    d1: S<f64>,
    d2: S<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    eigen_tol: S<f64>,
    dt: S<f64>,
    t_max: S<f64>,
    steady_tol: S<f64>,
    handoff: S<f64>,
    eps_pos: S<f64>,
    sample_every: S<i64>,
    multistart: S<i64>,
    seed: S<i64>,
    u_init: S<f64>,
    v_init: S<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    theta: S<Vec<f64>>,
    theta_min: S<f64>,
    theta_max: S<f64>,
    points: S<i64>,
    descending: S<bool>,
    warm_start: S<bool>,
    stability: S<bool>,
    mu: S<Vec<f64>>,
    zone_widths: S<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: S<String>,
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, span: Range<usize>, msg: impl Into<String>) -> Error {
        Error::Config {
            line: line_of(self.text, span.start),
            msg: msg.into(),
        }
    }

    fn positive(&self, v: &S<f64>, key: &str) -> Result<Option<f64>> {
        match v {
            Some(s) if !(*s.get_ref() > 0.0 && s.get_ref().is_finite()) => {
                Err(self.err(s.span(), format!("{key} must be positive and finite, got {}", s.get_ref())))
            }
            Some(s) => Ok(Some(*s.get_ref())),
            None => Ok(None),
        }
    }

    fn finite(&self, v: &S<f64>, key: &str) -> Result<Option<f64>> {
        match v {
            Some(s) if !s.get_ref().is_finite() => Err(self.err(s.span(), format!("{key} must be finite"))),
            Some(s) => Ok(Some(*s.get_ref())),
            None => Ok(None),
        }
    }

    fn count(&self, v: &S<i64>, key: &str, min: i64) -> Result<Option<usize>> {
        match v {
            Some(s) if *s.get_ref() < min => Err(self.err(s.span(), format!("{key} must be at least {min}, got {}", s.get_ref()))),
            Some(s) => Ok(Some(*s.get_ref() as usize)),
            None => Ok(None),
        }
    }

    fn ascending(&self, v: &S<Vec<f64>>, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(s) = v else { return Ok(None) };
        let list = s.get_ref();
        if list.is_empty() {
            return Err(self.err(s.span(), format!("{key} must not be empty")));
        }
        if list.iter().any(|x| !x.is_finite()) {
            return Err(self.err(s.span(), format!("{key} must be finite")));
        }
        if !list.windows(2).all(|w| w[0] < w[1]) {
            return Err(self.err(s.span(), format!("{key} must be strictly ascending")));
        }
        Ok(Some(list.clone()))
    }
}

impl RawConfig {
    fn build(self, text: &str) -> Result<RunConfig> {
        let cx = Ctx { text };
        let mut cfg = RunConfig::default();
        if let Some(d) = self.domain {
            cfg.has_domain = true;
            cfg.domain = d.build(&cx, &cfg.domain)?;
        }
        if let Some(p) = self.params {
            cfg.has_params = true;
            cfg.params = p.build(&cx, cfg.params)?;
        }
        if let Some(s) = self.solver {
            cfg.solver = s.build(&cx, cfg.solver)?;
        }
        if let Some(s) = self.sweep {
            cfg.sweep = s.build(&cx, cfg.sweep)?;
        }
        if let Some(o) = self.output {
            cfg.output = o.dir.map(|d| PathBuf::from(d.into_inner()));
        }
        Ok(cfg)
    }
}

impl RawDomain {
    fn build(self, cx: &Ctx, default: &DomainSpec) -> Result<DomainSpec> {
        let lengths = match &self.lengths {
            Some(s) => {
                let l = s.get_ref();
                if !(1..=2).contains(&l.len()) {
                    return Err(cx.err(s.span(), format!("lengths needs 1 or 2 entries, got {}", l.len())));
                }
                if l.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(cx.err(s.span(), "lengths must be positive"));
                }
                l.clone()
            }
            None => default.lengths.clone(),
        };
        let resolution = cx.count(&self.resolution, "resolution", 3)?.unwrap_or(default.resolution);
        let zone = match &self.zone {
            Some(s) => {
                let z = s.get_ref();
                if z.is_empty() {
                    None
                } else {
                    if z.len() != lengths.len() {
                        return Err(cx.err(
                            s.span(),
                            format!("zone needs one [lo, hi] pair per axis ({}), got {}", lengths.len(), z.len()),
                        ));
                    }
                    let mut bounds = Vec::with_capacity(z.len());
                    for (axis, (pair, &len)) in z.iter().zip(&lengths).enumerate() {
                        let &[lo, hi] = pair.as_slice() else {
                            return Err(cx.err(s.span(), format!("zone axis {axis} must be a [lo, hi] pair")));
                        };
                        if !(0.0 < lo && lo < hi && hi < len) {
                            return Err(cx.err(
                                s.span(),
                                format!("zone axis {axis}: need 0 < lo < hi < {len}, got [{lo}, {hi}]"),
                            ));
                        }
                        bounds.push((lo, hi));
                    }
                    Some(bounds)
                }
            }
            None if self.lengths.is_some() && lengths.len() != default.dimension() => None,
            None => default.zone.clone(),
        };
        Ok(DomainSpec {
            lengths,
            zone,
            resolution,
        })
    }
}

impl RawParams {
    fn build(self, cx: &Ctx, mut p: ParamSet) -> Result<ParamSet> {
        if let Some(v) = cx.positive(&self.theta, "theta")? {
            p.theta = v;
        }
        if let Some(v) = cx.finite(&self.mu, "mu")? {
            p.mu = v;
        }
        for (slot, raw, key) in [
            (&mut p.a, &self.a, "a"),
            (&mut p.c, &self.c, "c"),
            (&mut p.k, &self.k, "k"),
            (&mut p.d1, &self.d1, "d1"),
            (&mut p.d2, &self.d2, "d2"),
        ] {
            if let Some(v) = cx.positive(raw, key)? {
                *slot = v;
            }
        }
        if let Some(s) = &self.m {
            let v = *s.get_ref();
            if !(v >= 0.0 && v.is_finite()) {
                return Err(cx.err(s.span(), format!("m must be nonnegative, got {v}")));
            }
            p.m = v;
        }
        Ok(p)
    }
}

impl RawSolver {
    fn build(self, cx: &Ctx, mut s: SolverConfig) -> Result<SolverConfig> {
        if let Some(v) = cx.positive(&self.eigen_tol, "eigen_tol")? {
            let span = self.eigen_tol.as_ref().map(|x| x.span()).unwrap_or_default();
            if v >= 1.0 {
                return Err(cx.err(span, format!("eigen_tol must be below 1, got {v}")));
            }
            s.eigen_tol = v;
        }
        if let Some(v) = cx.positive(&self.dt, "dt")? {
            s.evolve.dt = Some(v);
        }
        if let Some(v) = cx.positive(&self.t_max, "t_max")? {
            s.evolve.t_max = v;
        }
        if let Some(v) = cx.positive(&self.steady_tol, "steady_tol")? {
            s.evolve.steady_tol = v;
        }
        if let Some(v) = cx.positive(&self.handoff, "handoff")? {
            s.handoff = v;
        }
        s.eps_pos = cx.positive(&self.eps_pos, "eps_pos")?.or(s.eps_pos);
        if let Some(v) = cx.count(&self.sample_every, "sample_every", 1)? {
            s.evolve.sample_every = v;
        }
        if let Some(v) = cx.count(&self.multistart, "multistart", 0)? {
            s.multistart = v;
        }
        if let Some(v) = cx.count(&self.seed, "seed", 0)? {
            s.seed = v as u64;
        }
        s.u_init = cx.positive(&self.u_init, "u_init")?.or(s.u_init);
        if let Some(x) = &self.v_init {
            let v = *x.get_ref();
            if !(v >= 0.0 && v.is_finite()) {
                return Err(cx.err(x.span(), format!("v_init must be nonnegative, got {v}")));
            }
            s.v_init = Some(v);
        }
        Ok(s)
    }
}

impl RawSweep {
    fn build(self, cx: &Ctx, mut s: SweepConfig) -> Result<SweepConfig> {
        let range = [self.theta_min.as_ref(), self.theta_max.as_ref()];
        let points = cx.count(&self.points, "points", 2)?;
        if let Some(list) = &self.theta {
            if let Some(other) = range.iter().flatten().next() {
                return Err(cx.err(other.span(), "give either theta or theta_min/theta_max, not both"));
            }
            if let Some(p) = &self.points {
                return Err(cx.err(p.span(), "points does not apply to an explicit theta list"));
            }
            let v = cx.ascending(&self.theta, "theta")?.unwrap_or_default();
            if v.iter().any(|&t| t <= 0.0) {
                return Err(cx.err(list.span(), "theta values must be positive"));
            }
            s.theta = ThetaGrid::List(v);
        } else {
            match (
                cx.positive(&self.theta_min, "theta_min")?,
                cx.positive(&self.theta_max, "theta_max")?,
            ) {
                (Some(min), Some(max)) => {
                    if min >= max {
                        let span = self.theta_max.as_ref().map(|x| x.span()).unwrap_or_default();
                        return Err(cx.err(span, format!("theta_max must exceed theta_min = {min}")));
                    }
                    s.theta = ThetaGrid::Range {
                        min,
                        max,
                        points: points.unwrap_or(40),
                    };
                }
                (None, None) => {
                    if let Some(n) = points {
                        s.theta = ThetaGrid::Auto(n);
                    }
                }
                _ => {
                    let span = range.iter().flatten().next().map(|x| x.span()).unwrap_or_default();
                    return Err(cx.err(span, "theta_min and theta_max must be given together"));
                }
            }
        }
        if let Some(v) = self.descending {
            s.descending = v.into_inner();
        }
        if let Some(v) = self.warm_start {
            s.warm_start = v.into_inner();
        }
        if let Some(v) = self.stability {
            s.stability = v.into_inner();
        }
        if let Some(v) = cx.ascending(&self.mu, "mu")? {
            s.mu = v;
        }
        if let Some(v) = cx.ascending(&self.zone_widths, "zone_widths")? {
            if v[0] <= 0.0 {
                let span = self.zone_widths.as_ref().map(|x| x.span()).unwrap_or_default();
                return Err(cx.err(span, "zone widths must be positive"));
            }
            s.zone_widths = v;
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of_err(text: &str) -> (usize, String) {
        match RunConfig::parse(text) {
            Err(Error::Config { line, msg }) => (line, msg),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = RunConfig::parse(
            "[domain]\nlengths = [2.0]\nresolution = 101\nzone = [[0.5, 1.5]]\n\n[params]\ntheta = 3\nmu = -0.5\n\n[sweep]\ntheta_min = 0.5\ntheta_max = 2.0\npoints = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.domain, DomainSpec::interval(2.0, 101).with_zone(vec![(0.5, 1.5)]));
        assert_eq!(cfg.params.theta, 3.0);
        assert_eq!(cfg.params.mu, -0.5);
        let grid = cfg.sweep.theta.values().unwrap();
        assert_eq!(grid.len(), 7);
        assert_eq!(grid[6], 2.0);
    }

    #[test]
    fn unknown_key_is_anchored() {
        let (line, msg) = line_of_err("[params]\ntheta = 1\nlambda = 2\n");
        assert_eq!(line, 3);
        assert!(msg.contains("lambda"), "{msg}");
    }

    #[test]
    fn malformed_zone_is_anchored() {
        let (line, _) = line_of_err("[domain]\nlengths = [1.0]\nzone = [[0.75, 0.25]]\n");
        assert_eq!(line, 3);
        let (line, _) = line_of_err("[domain]\nlengths = [1.0]\n\nzone = [[0.1, 0.2, 0.3]]\n");
        assert_eq!(line, 4);
    }

    #[test]
    fn semantic_errors_are_anchored() {
        assert_eq!(line_of_err("[solver]\n\neigen_tol = -1\n").0, 3);
        assert_eq!(line_of_err("[sweep]\nmu = [4, 2]\n").0, 2);
        assert_eq!(line_of_err("[domain]\nresolution = 2\n").0, 2);
        assert_eq!(line_of_err("[params]\nd1 = 0\n").0, 2);
    }

    #[test]
    fn two_dimensional_lengths_drop_the_default_zone() {
        let cfg = RunConfig::parse("[domain]\nlengths = [1, 1]\nresolution = 21\n").unwrap();
        assert_eq!(cfg.domain.zone, None);
    }
}
