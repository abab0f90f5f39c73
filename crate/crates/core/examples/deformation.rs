//! The deformation family: scaling a unit-determinant solution by m moves
//! its angles along the arcsec formulas.

use helix_surfaces::construct::{construct, deform, deform_inverse, ConstructConfig, HelixParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = deform(1.0, 10.0 / 3.0)?;
    println!(
        "(m, c) = (1, 10/3) -> ({:.15}, {:.15})",
        base.theta1, base.theta2
    );
    for m in [0.5, 1.0, 2.0] {
        let a = deform(m, 10.0 / 3.0)?;
        let (m2, c2) = deform_inverse(&a)?;
        let p = HelixParams::from_angles(a.theta1, a.theta2)?;
        println!(
            "m = {m}: angles ({:.9}, {:.9}), c1 = {:.9}, c2 = {:.9}, inverse ({m2:.12}, {c2:.12})",
            a.theta1, a.theta2, p.c1, p.c2
        );
    }

    let target = deform(0.8, 10.0 / 3.0)?;
    let cons = construct(&ConstructConfig::new(target.theta1, target.theta2))?;
    println!(
        "constructed m = {:.12}: measured angles ({:.9}, {:.9}), max helix residual {:.3e}",
        cons.m,
        cons.report.angles.theta1.mean,
        cons.report.angles.theta2.mean,
        cons.max_helix_residual
    );
    Ok(())
}
