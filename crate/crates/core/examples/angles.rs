//! Principal angles between two planes in R^4, by SVD and by bivectors.

use helix_surfaces::grassmann::{
    gauss_point, plane_angles_via_bivectors, plane_pair_with_angles, principal_decomposition,
    Plane, Vec4,
};
use nalgebra::Matrix4;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let v = Plane::from_span(Vec4::new(1.0, 0.0, 1.0, 0.0), Vec4::new(0.0, 1.0, 0.0, 2.0))?;
    let w = Plane::coordinate(0, 1);
    let d = principal_decomposition(&v, &w)?;
    println!(
        "theta1 = {:.12}, theta2 = {:.12}",
        d.angles.theta1, d.angles.theta2
    );
    println!("expected {:.12}, {:.12}", 1f64.atan(), 2f64.atan());

    let b = plane_angles_via_bivectors(&v, &w);
    let (c1, c2) = (d.angles.theta1.cos(), d.angles.theta2.cos());
    let (s1, s2) = (d.angles.theta1.sin(), d.angles.theta2.sin());
    println!(
        "cos theta      = {:.12}  (cos1 cos2 = {:.12})",
        b.cos_theta,
        c1 * c2
    );
    println!(
        "cos theta_perp = {:.12}  (sin1 sin2 = {:.12})",
        b.cos_theta_perp.abs(),
        s1 * s2
    );

    let (a_plus, a_minus) = gauss_point(&v).cos_alphas(&gauss_point(&w));
    println!("cos alpha+ = {a_plus:.12}, cos alpha- = {a_minus:.12}");

    let (v2, w2) = plane_pair_with_angles(&Matrix4::identity(), 0.2, 1.1)?;
    let again = principal_decomposition(&v2, &w2)?.angles;
    println!(
        "prescribed (0.2, 1.1) -> ({:.15}, {:.15})",
        again.theta1, again.theta2
    );
    Ok(())
}
