//! Continuation in the predator coupling from the decoupled problem.

use refugium::coupled::{homotopy_t, solve_steady};
use refugium::mesh::{build_mesh, DomainSpec};
use refugium::thresholds::{theta1, ParamSet};

fn main() -> refugium::error::Result<()> {
    let mesh = build_mesh(&DomainSpec::interval(1.0, 201).with_zone(vec![(0.25, 0.75)]))?;
    let base = ParamSet::default();
    let p = base.with_theta(theta1(&base, &mesh)? + 0.5).with_mu(16.0);
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let run = homotopy_t(&mesh, &p, &grid)?;
    for (t, residual, steps) in &run.trace {
        println!("t = {t:.1}: residual {residual:.2e} after {steps} Newton steps");
    }
    let direct = solve_steady(&mesh, &p, &run.state.u, &run.state.v)?;
    println!(
        "direct solve from the endpoint moves u by {:.2e}",
        direct.u.max_abs_diff(&run.state.u)
    );
    Ok(())
}
