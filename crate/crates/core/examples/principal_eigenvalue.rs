//! Principal eigenvalue of `-Δ + q` with Neumann conditions, checked
//! against the full dense spectrum.

use refugium::eigen::principal_eigenpair;
use refugium::linsolve::dense_spectrum_oracle;
use refugium::mesh::{build_mesh, DomainSpec, Region};

fn main() -> refugium::error::Result<()> {
    let mesh = build_mesh(&DomainSpec::interval(1.0, 201).with_zone(vec![(0.25, 0.75)]))?;
    // Zero inside the zone, 2 outside.
    let q: Vec<f64> = mesh
        .coords()
        .iter()
        .map(|x| if (0.25..=0.75).contains(&x[0]) { 0.0 } else { 2.0 })
        .collect();
    let pair = principal_eigenpair(&mesh, Region::Omega, &q, 1e-12)?;
    let dense = dense_spectrum_oracle(mesh.laplacian(Region::Omega), &q)?;
    println!("inverse iteration: {:.12} ({} iterations)", pair.value, pair.iterations);
    println!("dense spectrum:    {:.12}", dense[0]);
    println!("second eigenvalue: {:.12}", dense[1]);
    println!("eigenfunction min/max: {:.6} / {:.6}", pair.function.min(), pair.function.max());
    Ok(())
}
