//! Parsing graph expressions, their symbolic derivatives, and verifying the
//! resulting surfaces.

use helix_surfaces::construct::GraphPatch;
use helix_surfaces::expr::{parse_expr, Env, ExprDerivs, ExprGraph};
use helix_surfaces::grassmann::Plane;
use helix_surfaces::surface::{verify_helix, Domain, VerifyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = ExprDerivs::parse("sin(x*y) + x^3/3")?;
    println!("f   = {}\nfx  = {}\nfxy = {}", d.f, d.fx, d.fxy);
    println!("jet at (0.5, 0.2): {:?}", d.jet(&Env::xy(0.5, 0.2))?);

    let src = "1/(x - 1)";
    if let Err(e) = parse_expr(src)?.eval(&Env::xy(1.0, 0.0)) {
        println!("{}", e.render(src));
    }

    let dom = Domain::new(-0.5, 0.5, -0.5, 0.5)?;
    let pi = Plane::coordinate(0, 1);
    for (f, g) in [("0.3*x + 0.2*y", "-0.1*x + 0.7*y"), ("x^2 - y^2", "2*x*y")] {
        let graph = ExprGraph::parse(dom, f, g)?;
        let r = verify_helix(&GraphPatch::new(graph), &pi, &VerifyOptions::new(15, 15))?;
        println!(
            "({f}, {g}): helix {}, theta std {:.3e}",
            r.is_helix,
            r.angle_std()
        );
    }
    Ok(())
}
