//! Orbit of a spherical curve under rotations of span(e1, e2): a helix
//! surface inside a round sphere, hence theta1 = 0. The generic PDE surface
//! is not spherical.

use helix_surfaces::catalog::{generate, CatalogSpec};
use helix_surfaces::construct::{construct, ConstructConfig};
use helix_surfaces::surface::{sphere_test, verify_helix, VerifyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let orbit = generate(&CatalogSpec::named("spherical_orbit")?)?;
    let report = verify_helix(&orbit.patch, &orbit.pi, &VerifyOptions::new(30, 30))?;
    let fit = sphere_test(&orbit.patch, (30, 30))?;
    println!(
        "orbit: theta = ({:.3e}, {:.12}), helix {}",
        report.angles.theta1.mean, report.angles.theta2.mean, report.is_helix
    );
    println!(
        "orbit: sphere radius {:.12}, defect {:.3e}, dichotomy {:?}",
        fit.radius, fit.defect, report.sphere_dichotomy
    );

    let cfg = ConstructConfig {
        x: [-0.3, 0.3],
        ymax: 0.3,
        verify_grid: [15, 15],
        ..Default::default()
    };
    let cons = construct(&cfg)?;
    let fit = sphere_test(&cons.patch(), (25, 25))?;
    println!(
        "pde (pi/6, pi/3): helix {}, sphere defect {:.3e}",
        cons.report.is_helix, fit.defect
    );
    Ok(())
}
