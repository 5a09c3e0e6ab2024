//! Transient approach to the prey-free state below the coexistence threshold.

use refugium::coupled::{evolve, EvolveOptions};
use refugium::mesh::{build_mesh, DomainSpec};
use refugium::thresholds::{theta_star, ParamSet};

fn main() -> refugium::error::Result<()> {
    let mesh = build_mesh(&DomainSpec::interval(1.0, 101).with_zone(vec![(0.25, 0.75)]))?;
    let base = ParamSet::default();
    let p = base.with_theta(0.8 * theta_star(&base, &mesh)?);
    let opts = EvolveOptions {
        t_max: 200.0,
        sample_every: 500,
        ..EvolveOptions::default()
    };
    let run = evolve(&mesh, &p, &vec![p.theta; mesh.node_count()], &vec![0.5; mesh.omega1_len()], &opts)?;
    println!("{:>10} {:>12} {:>12} {:>12}", "t", "max u", "min v", "residual");
    for s in &run.series {
        println!("{:>10.3} {:>12.4e} {:>12.6} {:>12.3e}", s.time, s.max_u, s.min_v, s.residual);
    }
    println!("{} steps, {} clips, converged: {}", run.steps, run.clips, run.state.converged);
    Ok(())
}
