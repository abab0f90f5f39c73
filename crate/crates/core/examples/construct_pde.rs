//! Angles (pi/6, pi/3) -> c1 = 10/3 -> seed -> march -> g -> verification,
//! followed by a refinement study and the first normal space.

use helix_surfaces::construct::{
    composition_test, construct, convergence_study, first_normal_rank, ConstructConfig,
    GraphSurface,
};
use helix_surfaces::grassmann::Plane;
use helix_surfaces::surface::{Domain, VerifyOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ConstructConfig::default();
    let t = std::time::Instant::now();
    let cons = construct(&cfg)?;
    let s = cons.summary();
    println!(
        "c1 = {:.15}, c2 = {:.15}, seed ({:.6}, {:.6})",
        s.c1, s.c2, s.seed.u0, s.seed.v0
    );
    println!(
        "domain {:?}, marches {:?}",
        s.domain,
        s.marches.map(|m| m.termination)
    );
    println!(
        "max helix residual {:.3e}, angle std {:.3e}, helix {} ({:?})",
        s.max_helix_residual,
        cons.report.angle_std(),
        cons.report.is_helix,
        t.elapsed()
    );

    let region = Domain::new(-0.02, 0.02, -0.02, 0.02)?;
    let study = convergence_study(&cfg, &[8e-3, 4e-3, 2e-3, 1e-3], region)?;
    for l in &study.levels {
        println!(
            "h = {:.0e}: helix {:.3e}, det {:.3e}, norm {:.3e}, loop {:.3e}",
            l.h, l.helix_residual, l.det_deviation, l.norm_deviation, l.loop_defect
        );
    }
    println!(
        "orders: helix {:?}, det {:?}",
        study.helix_orders, study.det_orders
    );

    let at = cons.graph.snap(0.0, 0.0);
    println!(
        "first normal rank at origin: {}",
        first_normal_rank(&cons.graph, at)?.rank
    );
    let v = composition_test(
        &cons.patch(),
        &Plane::coordinate(0, 1),
        &VerifyOptions::new(15, 15),
    )?;
    println!(
        "composition {:?}, rank fractions {:?}, consistent {}",
        v.composition, v.rank_fractions, v.consistent
    );
    Ok(())
}
