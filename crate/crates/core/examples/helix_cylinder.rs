//! Product of a circular helix with a line: angles (0, slope) and the
//! Codazzi identities.

use helix_surfaces::catalog::{generate, CatalogSpec};
use helix_surfaces::surface::{verify_helix, VerifyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let slope = std::f64::consts::PI / 5.0;
    let cyl = generate(&CatalogSpec::ProductHelixCylinder { radius: 1.0, slope })?;
    let report = verify_helix(&cyl.patch, &cyl.pi, &VerifyOptions::new(30, 30))?;
    println!(
        "theta1 = {:.3e}, theta2 = {:.15} (slope {:.15})",
        report.angles.theta1.mean, report.angles.theta2.mean, slope
    );
    for (k, c) in report.residuals.codazzi.iter().enumerate() {
        println!("Codazzi C{} max {:.3e}", k + 1, c.max_abs);
    }
    if let Some(z) = &report.residuals.zero_angle {
        println!(
            "theta1 = 0 identities: {:.3e} {:.3e} {:.3e}",
            z[0].max_abs, z[1].max_abs, z[2].max_abs
        );
    }
    Ok(())
}
