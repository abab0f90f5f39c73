//! A round sphere and a generic polynomial graph are not helix surfaces.

use helix_surfaces::catalog::{generate, CatalogSpec};
use helix_surfaces::surface::{verify_helix, VerifyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["round_sphere", "graph_poly", "plane", "tilted_plane"] {
        let s = generate(&CatalogSpec::named(name)?)?;
        let r = verify_helix(&s.patch, &s.pi, &VerifyOptions::new(20, 20))?;
        println!(
            "{name:>12}: helix {:5}, theta1 std {:.3e}, theta2 std {:.3e}",
            r.is_helix, r.angles.theta1.std, r.angles.theta2.std
        );
    }
    Ok(())
}
