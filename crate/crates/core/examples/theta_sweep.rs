//! Warm-started sweep in θ and the detected onset of coexistence.

use refugium::mesh::{build_mesh, DomainSpec};
use refugium::sweep::{default_theta_grid, sweep_theta, SweepOptions};
use refugium::thresholds::ParamSet;

fn main() -> refugium::error::Result<()> {
    let mesh = build_mesh(&DomainSpec::interval(1.0, 201).with_zone(vec![(0.25, 0.75)]))?;
    for mu in [1.0, -0.5] {
        let p = ParamSet {
            m: 0.5,
            ..ParamSet::default()
        }
        .with_mu(mu);
        let grid = default_theta_grid(&mesh, &p, 30)?;
        let branch = sweep_theta(&mesh, &p, &grid, &SweepOptions::default())?;
        println!("mu = {mu}: {}/{} points converged", branch.converged, branch.points.len());
        if let Some(b) = branch.bifurcation {
            println!(
                "  onset {:.6} in [{:.6}, {:.6}], predicted {:.6}",
                b.theta_hat,
                b.bracket.0,
                b.bracket.1,
                b.predicted.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
