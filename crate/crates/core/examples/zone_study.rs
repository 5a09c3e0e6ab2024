//! Coexistence threshold against the width of a centred protection zone.

use refugium::mesh::DomainSpec;
use refugium::sweep::zone_study;
use refugium::thresholds::ParamSet;

fn main() -> refugium::error::Result<()> {
    let base = DomainSpec::interval(1.0, 201);
    let widths = [0.05, 0.1, 0.2, 0.4, 0.6, 0.8];
    let table = zone_study(&base, &widths, &ParamSet::default())?;
    for row in &table.rows {
        println!("width {:.2}: theta* = {:.6}", row.width, row.theta_star.unwrap_or(f64::NAN));
    }
    println!("no zone: {:.6}", table.no_zone_limit);
    println!("strictly decreasing: {}", table.strictly_decreasing());
    Ok(())
}
