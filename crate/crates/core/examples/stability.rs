//! Linear stability of a steady state and the limiting eigenvalue η*.

use refugium::coupled::{settle, SettleOptions};
use refugium::mesh::{build_mesh, DomainSpec};
use refugium::stability::{eta_star, linearize, principal_eta, DEFAULT_TOL};
use refugium::thresholds::{theta1, ParamSet};

fn main() -> refugium::error::Result<()> {
    let mesh = build_mesh(&DomainSpec::interval(1.0, 201).with_zone(vec![(0.25, 0.75)]))?;
    let base = ParamSet::default();
    let theta = theta1(&base, &mesh)? + 0.5;
    for mu in [1.0, 8.0, 32.0] {
        let p = base.with_theta(theta).with_mu(mu);
        let s = settle(&mesh, &p, &vec![theta; mesh.node_count()], &vec![mu; mesh.omega1_len()], &SettleOptions::default())?;
        let v = principal_eta(&linearize(&mesh, &p, &s.state)?, DEFAULT_TOL)?;
        println!("mu = {mu:>4}: eta = {:.8} ({}, {:?})", v.eta_re, v.verdict, v.method);
    }
    let e = eta_star(&mesh, &base.with_theta(theta))?;
    println!("eta* = {:.10}, integral ratio = {:.10}", e.eigenvalue, e.ratio);
    Ok(())
}
