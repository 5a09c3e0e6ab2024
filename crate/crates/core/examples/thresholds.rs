//! Thresholds and predicted regimes for a few predator growth rates.

use refugium::mesh::{build_mesh, DomainSpec};
use refugium::thresholds::{compute_thresholds, ParamSet};

fn main() -> refugium::error::Result<()> {
    let mesh = build_mesh(&DomainSpec::interval(1.0, 201).with_zone(vec![(0.25, 0.75)]))?;
    let base = ParamSet {
        theta: 0.8,
        ..ParamSet::default()
    };
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}  regime", "mu", "theta0", "theta*", "theta1", "theta-");
    for mu in [-1.5, -0.5, 0.0, 0.5, 1.0, 4.0, 64.0] {
        let r = compute_thresholds(&base.with_mu(mu), &mesh, 1e-10)?;
        let show = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
        println!(
            "{mu:>6} {:>10.6} {:>10} {:>10.6} {:>10}  {}",
            r.theta0,
            show(r.theta_star),
            r.theta1,
            show(r.theta_neg),
            r.regime
        );
    }
    Ok(())
}
