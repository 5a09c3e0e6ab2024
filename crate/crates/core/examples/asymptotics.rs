//! Coexistence states approaching `(U, μ)` as the predator growth rate grows.

use refugium::mesh::{build_mesh, DomainSpec};
use refugium::sweep::{asymptotic_mu, AsymptoticOptions};
use refugium::thresholds::{theta1, ParamSet};

fn main() -> refugium::error::Result<()> {
    let mesh = build_mesh(&DomainSpec::interval(1.0, 201).with_zone(vec![(0.25, 0.75)]))?;
    let base = ParamSet::default();
    let p = base.with_theta(theta1(&base, &mesh)? + 0.5);
    let opts = AsymptoticOptions {
        extra_starts: 2,
        seed: 7,
        ..AsymptoticOptions::default()
    };
    let table = asymptotic_mu(&mesh, &p, &[8.0, 16.0, 32.0, 64.0], &opts)?;
    println!("{:>5} {:>11} {:>11} {:>11} {:>10}", "mu", "e_u", "e_v", "spread", "eta");
    for r in &table.rows {
        println!("{:>5} {:>11.4e} {:>11.4e} {:>11.2e} {:>10.6}", r.mu, r.e_u, r.e_v, r.spread, r.eta_re);
    }
    println!("errors decrease: {}", table.errors_decrease());
    Ok(())
}
