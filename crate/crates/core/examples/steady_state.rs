//! A coexistence steady state: time march, Newton polish, a priori bounds.

use refugium::coupled::{check_apriori, classify_outcome, default_eps_pos, settle, SettleOptions};
use refugium::mesh::{build_mesh, DomainSpec};
use refugium::thresholds::{theta_star, ParamSet};

fn main() -> refugium::error::Result<()> {
    let mesh = build_mesh(&DomainSpec::interval(1.0, 201).with_zone(vec![(0.25, 0.75)]))?;
    let base = ParamSet::default();
    let star = theta_star(&base, &mesh)?;
    let p = base.with_theta(star + 0.2);
    let u0 = vec![0.5 * p.theta; mesh.node_count()];
    let v0 = vec![p.mu; mesh.omega1_len()];
    let run = settle(&mesh, &p, &u0, &v0, &SettleOptions::default())?;
    let s = &run.state;
    let outcome = classify_outcome(s, default_eps_pos(&p));
    println!("theta* = {star:.6}, theta = {:.6}", p.theta);
    println!("finished by {} with residual {:.2e}", s.source, s.residual);
    println!("{}: u in [{:.6}, {:.6}], v in [{:.6}, {:.6}]", outcome.label, outcome.min_u, outcome.max_u, outcome.min_v, outcome.max_v);
    let b = check_apriori(s, &p);
    println!("a priori bounds: v <= {:.6}, {}", b.v_upper, if b.pass() { "pass" } else { "fail" });
    Ok(())
}
