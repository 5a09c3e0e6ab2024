//! Batch commands behind the `refugium` binary.
//!
//! Every command writes `report.txt` plus its CSV files into the output
//! directory and returns the process exit code: 0 on success, 1 when a
//! verification criterion fails, 2 on a configuration error and 3 when a
//! solver fails.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::config::{RunConfig, ThetaGrid};
use crate::coupled::{check_apriori, classify_outcome, default_eps_pos, settle, Settled};
use crate::error::{Error, Result};
use crate::mesh::{build_mesh, Mesh};
use crate::report::{num, opt, Table};
use crate::stability::{self, linearize, principal_eta};
use crate::sweep::{
    asymptotic_mu, cold_start, default_theta_grid, sweep_theta, zone_study, AsymptoticOptions, SweepOptions,
};
use crate::thresholds::compute_thresholds;
use crate::verify::{determinism, render_report, run_all};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Minimum fraction of sweep points that must succeed.
const SWEEP_SUCCESS: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Thresholds and the predicted regime.
    Thresholds,
    /// One steady state with its time history.
    Steady,
    /// Steady states along a theta grid with onset detection.
    Sweep,
    /// Coexistence threshold against zone width.
    Zones,
    /// Approach to the large-mu limit.
    Asymptotic,
    /// The full verification suite.
    Verify,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "refugium", version, about = "Predator-prey steady states with a protection zone")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent points.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Result of a command: the summary text and the exit code.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: String,
    pub code: i32,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Domain(_) | Error::Param(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

/// Parse the config, run the command in a pool of the requested size and
/// write its files. Errors are printed to stderr.
pub fn main_with(args: &Args) -> i32 {
    match execute(args) {
        Ok(out) => {
            print!("{}", out.report);
            out.code
        }
        Err(e) => {
            eprintln!("refugium: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(args: &Args) -> Result<Outcome> {
    let cfg = match &args.config {
        Some(path) => RunConfig::from_path(path).map_err(|e| match e {
            Error::Io(io) => Error::Config {
                line: 0,
                msg: format!("cannot read {}: {io}", path.display()),
            },
            other => other,
        })?,
        None => RunConfig::default(),
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("refugium-out"));
    if args.threads == Some(0) {
        return Err(Error::Config {
            line: 0,
            msg: "--threads must be at least 1".into(),
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config {
            line: 0,
            msg: format!("thread pool: {e}"),
        })?;
    std::fs::create_dir_all(&out)?;
    pool.install(|| run_command(args.command, &cfg, &out))
}

pub fn run_command(command: Command, cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let outcome = match command {
        Command::Thresholds => cmd_thresholds(cfg, out)?,
        Command::Steady => cmd_steady(cfg, out)?,
        Command::Sweep => cmd_sweep(cfg, out)?,
        Command::Zones => cmd_zones(cfg, out)?,
        Command::Asymptotic => cmd_asymptotic(cfg, out)?,
        Command::Verify => cmd_verify(cfg, out)?,
    };
    std::fs::write(out.join("report.txt"), &outcome.report)?;
    Ok(outcome)
}

fn header(report: &mut String, what: &str, cfg: &RunConfig, mesh: Option<&Mesh>) {
    let p = &cfg.params;
    let _ = writeln!(report, "refugium {what}");
    let _ = writeln!(
        report,
        "params: theta = {}, mu = {}, a = {}, c = {}, m = {}, k = {}, d1 = {}, d2 = {}",
        p.theta, p.mu, p.a, p.c, p.m, p.k, p.d1, p.d2
    );
    if let Some(mesh) = mesh {
        let d = &cfg.domain;
        let zone = match &d.zone {
            Some(z) => z.iter().map(|(lo, hi)| format!("[{lo}, {hi}]")).collect::<Vec<_>>().join(" x "),
            None => "none".into(),
        };
        let _ = writeln!(
            report,
            "domain: lengths {:?}, {} nodes per axis, zone {zone}, |Omega_1| = {}",
            d.lengths,
            d.resolution,
            num(mesh.measure_omega1())
        );
    }
}

pub fn cmd_thresholds(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mesh = build_mesh(&cfg.domain)?;
    cfg.params.validate()?;
    let t = compute_thresholds(&cfg.params, &mesh, cfg.solver.eigen_tol)?;
    let mut table = Table::new(["theta", "mu", "theta0", "theta_star", "theta1", "theta_neg", "regime"]);
    table.row(vec![
        num(cfg.params.theta),
        num(cfg.params.mu),
        num(t.theta0),
        opt(t.theta_star),
        num(t.theta1),
        opt(t.theta_neg),
        t.regime.label().into(),
    ]);
    table.write(&out.join("thresholds.csv"))?;
    let mut report = String::new();
    header(&mut report, "thresholds", cfg, Some(&mesh));
    let show = |x: Option<f64>| x.map_or("undefined".to_string(), num);
    let _ = writeln!(report, "theta0     = {}", num(t.theta0));
    let _ = writeln!(report, "theta_star = {}", show(t.theta_star));
    let _ = writeln!(report, "theta1     = {}", num(t.theta1));
    let _ = writeln!(report, "theta_neg  = {}", show(t.theta_neg));
    let _ = writeln!(report, "regime     = {}", t.regime);
    Ok(Outcome { report, code: EXIT_OK })
}

pub fn cmd_steady(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mesh = build_mesh(&cfg.domain)?;
    let p = &cfg.params;
    p.validate()?;
    let (mut u0, mut v0) = cold_start(&mesh, p);
    if let Some(u) = cfg.solver.u_init {
        u0.fill(u);
    }
    if let Some(v) = cfg.solver.v_init {
        v0.fill(v);
    }
    let Settled { state, evolution } = settle(&mesh, p, &u0, &v0, &cfg.solver.settle())?;

    let mut series = Table::new(["time", "min_u", "max_u", "min_v", "max_v", "residual"]);
    for s in &evolution.series {
        series.row(vec![num(s.time), num(s.min_u), num(s.max_u), num(s.min_v), num(s.max_v), num(s.residual)]);
    }
    series.write(&out.join("timeseries.csv"))?;

    let two_d = mesh.dimension() == 2;
    let mut cols = vec!["node", "x"];
    if two_d {
        cols.push("y");
    }
    cols.extend(["u", "v"]);
    let mut fields = Table::new(cols);
    if !state.converged {
        fields.banner("NOT_CONVERGED");
    }
    for (i, xy) in mesh.coords().iter().enumerate() {
        let mut row = vec![i.to_string(), num(xy[0])];
        if two_d {
            row.push(num(xy[1]));
        }
        row.push(num(state.u[i]));
        row.push(mesh.omega1_index(i).map_or(String::new(), |j| num(state.v[j])));
        fields.row(row);
    }
    fields.write(&out.join("steady.csv"))?;

    let eps = cfg.solver.eps_pos.unwrap_or_else(|| default_eps_pos(p));
    let outcome = classify_outcome(&state, eps);
    let bounds = check_apriori(&state, p);
    let mut report = String::new();
    header(&mut report, "steady", cfg, Some(&mesh));
    let _ = writeln!(
        report,
        "status: {}",
        if state.converged { "converged" } else { "NOT_CONVERGED" }
    );
    let _ = writeln!(
        report,
        "time marched: {} in {} steps ({} clips), final dt {}",
        num(evolution.time),
        evolution.steps,
        evolution.clips,
        num(evolution.final_dt)
    );
    let _ = writeln!(report, "finished by: {}, residual {}", state.source, num(state.residual));
    let _ = writeln!(report, "u in [{}, {}]", num(outcome.min_u), num(outcome.max_u));
    let _ = writeln!(report, "v in [{}, {}]", num(outcome.min_v), num(outcome.max_v));
    let _ = writeln!(report, "outcome: {} (eps_pos {})", outcome.label, num(eps));
    let _ = writeln!(report, "apriori: {}", if bounds.pass() { "PASS" } else { "FAIL" });
    if state.converged {
        match linearize(&mesh, p, &state).and_then(|sys| principal_eta(&sys, stability::DEFAULT_TOL)) {
            Ok(v) => {
                let _ = writeln!(report, "stability: {} (eta_re = {})", v.verdict, num(v.eta_re));
            }
            Err(e) => {
                let _ = writeln!(report, "stability: not determined ({e})");
            }
        }
    }
    let code = if state.converged { EXIT_OK } else { EXIT_SOLVER };
    Ok(Outcome { report, code })
}

fn theta_grid(cfg: &RunConfig, mesh: &Mesh) -> Result<Vec<f64>> {
    let mut grid = match &cfg.sweep.theta {
        ThetaGrid::Auto(n) => default_theta_grid(mesh, &cfg.params, *n)?,
        other => other.values().expect("explicit grid"),
    };
    if cfg.sweep.descending {
        grid.reverse();
    }
    Ok(grid)
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mesh = build_mesh(&cfg.domain)?;
    cfg.params.validate()?;
    let grid = theta_grid(cfg, &mesh)?;
    let opts = SweepOptions {
        warm_start: cfg.sweep.warm_start,
        settle: cfg.solver.settle(),
        eps_pos: cfg.solver.eps_pos,
        stability: cfg.sweep.stability,
        keep_states: false,
    };
    let branch = sweep_theta(&mesh, &cfg.params, &grid, &opts)?;
    let mut table = Table::new([
        "parameter", "min_u", "max_u", "min_v", "max_v", "residual", "outcome", "eta_re", "apriori", "status",
    ]);
    for pt in &branch.points {
        table.row(vec![
            num(pt.parameter),
            num(pt.min_u),
            num(pt.max_u),
            num(pt.min_v),
            num(pt.max_v),
            num(pt.residual),
            pt.outcome.map(|o| o.label()).unwrap_or("").into(),
            opt(pt.eta_re),
            pt.bounds_pass.map_or("", |b| if b { "PASS" } else { "FAIL" }).into(),
            pt.status.label().into(),
        ]);
    }
    table.write(&out.join("sweep.csv"))?;
    let mut bif = Table::new(["theta_hat", "theta_star_predicted", "rel_gap"]);
    if let Some(b) = &branch.bifurcation {
        bif.row(vec![num(b.theta_hat), opt(b.predicted), opt(b.rel_gap)]);
    }
    bif.write(&out.join("bifurcation.csv"))?;

    let mut report = String::new();
    header(&mut report, "sweep", cfg, Some(&mesh));
    let _ = writeln!(
        report,
        "{} of {} points converged ({} warm start)",
        branch.converged,
        branch.points.len(),
        if opts.warm_start { "with" } else { "without" }
    );
    for pt in &branch.points {
        if let crate::sweep::PointStatus::Failed(msg) = &pt.status {
            let _ = writeln!(report, "theta = {}: failed: {msg}", num(pt.parameter));
        }
    }
    match &branch.bifurcation {
        Some(b) => {
            let _ = writeln!(
                report,
                "onset: theta_hat = {} in [{}, {}], predicted {}, relative gap {}",
                num(b.theta_hat),
                num(b.bracket.0),
                num(b.bracket.1),
                opt(b.predicted),
                opt(b.rel_gap)
            );
        }
        None => {
            let _ = writeln!(report, "onset: not detected on this grid");
        }
    }
    let code = if branch.success_fraction() >= SWEEP_SUCCESS { EXIT_OK } else { EXIT_SOLVER };
    Ok(Outcome { report, code })
}

pub fn cmd_zones(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let table = zone_study(&cfg.domain, &cfg.sweep.zone_widths, &cfg.params)?;
    let mut csv = Table::new(["width", "zone_measure", "theta_star", "status"]);
    for r in &table.rows {
        csv.row(vec![
            num(r.width),
            num(r.zone_measure),
            opt(r.theta_star),
            if r.zone.is_ok() { "ok" } else { "failed" }.into(),
        ]);
    }
    csv.write(&out.join("zones.csv"))?;
    let mut report = String::new();
    header(&mut report, "zones", cfg, None);
    for r in &table.rows {
        match &r.zone {
            Ok(z) => {
                let bounds: Vec<String> = z.iter().map(|(lo, hi)| format!("[{}, {}]", num(*lo), num(*hi))).collect();
                let _ = writeln!(report, "width {}: zone {}, theta_star = {}", num(r.width), bounds.join(" x "), opt(r.theta_star));
            }
            Err(e) => {
                let _ = writeln!(report, "width {}: failed: {e}", num(r.width));
            }
        }
    }
    let _ = writeln!(report, "theta_star without a zone: {}", num(table.no_zone_limit));
    let _ = writeln!(
        report,
        "theta_star strictly decreasing in the zone width: {}",
        if table.strictly_decreasing() { "yes" } else { "no" }
    );
    let ok = table.rows.iter().filter(|r| r.theta_star.is_some()).count();
    let code = if ok as f64 >= SWEEP_SUCCESS * table.rows.len() as f64 { EXIT_OK } else { EXIT_SOLVER };
    Ok(Outcome { report, code })
}

pub fn cmd_asymptotic(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let mesh = build_mesh(&cfg.domain)?;
    let opts = AsymptoticOptions {
        settle: cfg.solver.settle(),
        extra_starts: cfg.solver.multistart,
        seed: cfg.solver.seed,
    };
    let table = asymptotic_mu(&mesh, &cfg.params, &cfg.sweep.mu, &opts)?;
    let mut csv = Table::new([
        "mu", "e_u", "e_v", "e_v_bound", "spread", "outcome", "eta_re", "verdict", "apriori", "residual",
    ]);
    for r in &table.rows {
        csv.row(vec![
            num(r.mu),
            num(r.e_u),
            num(r.e_v),
            num(r.e_v_bound),
            num(r.spread),
            r.outcome.label().into(),
            num(r.eta_re),
            r.verdict.to_string(),
            if r.bounds_pass { "PASS" } else { "FAIL" }.into(),
            num(r.residual),
        ]);
    }
    csv.write(&out.join("asymptotic.csv"))?;
    let mut report = String::new();
    header(&mut report, "asymptotic", cfg, Some(&mesh));
    let _ = writeln!(
        report,
        "limit prey U: max {}, min {}",
        num(table.limit_prey.max()),
        num(table.limit_prey.min())
    );
    let _ = writeln!(report, "starts per mu: {}", 3 + opts.extra_starts);
    for r in &table.rows {
        let _ = writeln!(
            report,
            "mu = {}: e_u = {}, e_v = {}, spread {}, {}, {}",
            num(r.mu),
            num(r.e_u),
            num(r.e_v),
            num(r.spread),
            r.outcome,
            r.verdict
        );
    }
    let _ = writeln!(
        report,
        "errors strictly decreasing: {}",
        if table.errors_decrease() { "yes" } else { "no" }
    );
    Ok(Outcome { report, code: EXIT_OK })
}

/// Runs the criteria twice; the second rendering feeds the determinism check.
pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let vc = cfg.verify_config();
    let (mut first, _) = run_all(&vc)?;
    let (second, _) = run_all(&vc)?;
    first.push(determinism(&render_report(&first), &render_report(&second)));
    let mut csv = Table::new(["id", "title", "status"]);
    for r in &first {
        csv.row(vec![r.id.to_string(), r.title.into(), if r.pass { "PASS" } else { "FAIL" }.into()]);
    }
    csv.write(&out.join("verify.csv"))?;
    let report = render_report(&first);
    let code = if first.iter().all(|r| r.pass) { EXIT_OK } else { EXIT_VERIFY_FAILED };
    Ok(Outcome { report, code })
}
