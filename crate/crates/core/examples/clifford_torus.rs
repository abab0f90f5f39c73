//! The Clifford torus keeps angles (0, pi/2) with span(e1, e2) and is flat
//! with flat normal bundle.

use helix_surfaces::catalog::{generate, CatalogSpec};
use helix_surfaces::surface::{parallel_h_test, verify_helix, VerifyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let torus = generate(&CatalogSpec::named("clifford_torus")?)?;
    let report = verify_helix(&torus.patch, &torus.pi, &VerifyOptions::new(50, 50))?;
    let a = &report.angles;
    println!("theta1 mean {:.3e} std {:.3e}", a.theta1.mean, a.theta1.std);
    println!("theta2 mean {:.15} std {:.3e}", a.theta2.mean, a.theta2.std);
    println!("helix: {}", report.is_helix);
    println!(
        "K max |.| {:.3e}, K_perp max |.| {:.3e}",
        report.curvature.gauss.max_abs, report.curvature.normal.max_abs
    );
    let (ph1, ph2) = parallel_h_test(&report);
    println!("parallel H residuals {ph1:.3e} {ph2:.3e}");
    if let Some(s) = report.sphere {
        println!(
            "sphere fit: radius {:.12}, defect {:.3e}",
            s.radius, s.defect
        );
    }
    Ok(())
}
