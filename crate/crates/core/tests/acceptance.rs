//! Acceptance criteria, one line each. Exits non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};
use std::time::Instant;

use helix_surfaces::catalog::{generate, CatalogSpec, Monomial};
use helix_surfaces::construct::{
    composition_test, construct, convergence_study, deform, deform_inverse, normal_rank_of,
    ConstructConfig, GraphSurface, HelixParams,
};
use helix_surfaces::grassmann::{
    orthogonal_complement, plane_angles_via_bivectors, plane_pair_with_angles, principal_angles,
    Plane, Vec4,
};
use helix_surfaces::surface::{parallel_h_test, sphere_test, verify_helix, Domain, VerifyOptions};
use nalgebra::Matrix4;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_basis(rng: &mut StdRng) -> Matrix4<f64> {
    loop {
        let m: Matrix4<f64> = Matrix4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        if m.determinant().abs() > 1e-3 {
            return m.qr().q();
        }
    }
}

fn random_vec(rng: &mut StdRng) -> Vec4 {
    Vec4::from_fn(|_, _| rng.gen_range(-1.0f64..1.0))
}

fn random_plane(rng: &mut StdRng) -> Plane {
    loop {
        if let Ok(p) = Plane::from_span(random_vec(rng), random_vec(rng)) {
            return p;
        }
    }
}

fn angle_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let a: f64 = rng.gen_range(0.0..FRAC_PI_2);
        let b: f64 = rng.gen_range(0.0..FRAC_PI_2);
        let (t1, t2) = (a.min(b), a.max(b));
        let (v, w) =
            plane_pair_with_angles(&random_basis(&mut rng), t1, t2).map_err(|e| e.to_string())?;
        let got = principal_angles(&v, &w).map_err(|e| e.to_string())?;
        worst = worst
            .max((got.theta1 - t1).abs())
            .max((got.theta2 - t2).abs());
    }
    let dt = t.elapsed().as_secs_f64();
    check(
        worst < 1e-10 && dt < 1.0,
        format!("max error {worst:.2e}, {dt:.3} s"),
    )
}

fn complement_and_product() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2);
    let (mut comp, mut prod): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let (v, w) = (random_plane(&mut rng), random_plane(&mut rng));
        let a = principal_angles(&v, &w).map_err(|e| e.to_string())?;
        let c = principal_angles(&v, &orthogonal_complement(&w)).map_err(|e| e.to_string())?;
        comp = comp
            .max((c.theta1 - (FRAC_PI_2 - a.theta2)).abs())
            .max((c.theta2 - (FRAC_PI_2 - a.theta1)).abs());
        let b = plane_angles_via_bivectors(&v, &w);
        prod = prod
            .max((b.cos_theta.abs() - a.theta1.cos() * a.theta2.cos()).abs())
            .max((b.cos_theta_perp.abs() - a.theta1.sin() * a.theta2.sin()).abs());
    }
    check(
        comp < 1e-10 && prod < 1e-10,
        format!("complement {comp:.2e}, product {prod:.2e}"),
    )
}

fn clifford_torus() -> Outcome {
    let s = generate(&CatalogSpec::named("clifford_torus").unwrap()).map_err(|e| e.to_string())?;
    let r =
        verify_helix(&s.patch, &s.pi, &VerifyOptions::new(50, 50)).map_err(|e| e.to_string())?;
    let a = &r.angles;
    let angles = a.theta1.mean.abs() < 1e-9 && (a.theta2.mean - FRAC_PI_2).abs() < 1e-9;
    let stds = a.theta1.std < 1e-9 && a.theta2.std < 1e-9;
    let (k, kn) = (r.curvature.gauss.max_abs, r.curvature.normal.max_abs);
    let (p1, p2) = parallel_h_test(&r);
    let ph = p1.max(p2);
    check(
        angles && stds && k < 1e-8 && kn < 1e-8 && ph < 1e-6,
        format!(
            "theta ({:.1e}, pi/2{:+.1e}), std {:.1e}/{:.1e}, K {k:.1e}, K_perp {kn:.1e}, parallel H {ph:.1e}",
            a.theta1.mean,
            a.theta2.mean - FRAC_PI_2,
            a.theta1.std,
            a.theta2.std
        ),
    )
}

fn helix_cylinder() -> Outcome {
    let slope = PI / 5.0;
    let s = generate(&CatalogSpec::ProductHelixCylinder { radius: 1.0, slope })
        .map_err(|e| e.to_string())?;
    let r =
        verify_helix(&s.patch, &s.pi, &VerifyOptions::new(30, 30)).map_err(|e| e.to_string())?;
    let err = r
        .angles
        .theta1
        .mean
        .abs()
        .max((r.angles.theta2.mean - slope).abs());
    let spread = r
        .angles
        .theta1
        .max_abs
        .max((r.angles.theta2.max - slope).abs())
        .max((r.angles.theta2.min - slope).abs());
    let cod = r.codazzi_max();
    check(
        err < 1e-9 && spread < 1e-9 && cod < 1e-6,
        format!("angle error {err:.1e} (pointwise {spread:.1e}), Codazzi {cod:.1e}"),
    )
}

fn pde_construction() -> Outcome {
    let t = Instant::now();
    let cfg = ConstructConfig::new(FRAC_PI_6, FRAC_PI_3);
    let p = HelixParams::from_angles(FRAC_PI_6, FRAC_PI_3).map_err(|e| e.to_string())?;
    let consts = (p.c1 - 10.0 / 3.0).abs() < 1e-12 && (p.c2 - 1.0).abs() < 1e-12;
    let fine = construct(&cfg).map_err(|e| e.to_string())?;
    let region = Domain::new(-0.02, 0.02, -0.02, 0.02).unwrap();
    let study =
        convergence_study(&cfg, &[8e-3, 4e-3, 2e-3, 1e-3], region).map_err(|e| e.to_string())?;
    let dt = t.elapsed().as_secs_f64();
    let (ho, so) = (study.min_helix_order(), study.min_symplecto_order());
    check(
        consts && fine.max_helix_residual < 1e-3 && ho >= 1.5 && so >= 1.5 && dt < 60.0,
        format!(
            "c1 = {:.15}, c2 = {:.15}, finest residual {:.2e}, helix orders {:.2?}, symplecto orders det {:.2?} norm {:.2?}, {dt:.2} s",
            p.c1, p.c2, fine.max_helix_residual, study.helix_orders, study.det_orders, study.norm_orders
        ),
    )
}

fn thm_reproduction() -> Outcome {
    let cons = construct(&ConstructConfig::new(FRAC_PI_6, FRAC_PI_3)).map_err(|e| e.to_string())?;
    let nodes = cons.graph.nodes_in(&cons.graph.domain());
    let ranks: Vec<u8> = nodes
        .iter()
        .filter_map(|&(x, y)| cons.graph.derivs(x, y))
        .map(|d| normal_rank_of(&d).rank)
        .collect();
    let frac = ranks.iter().filter(|&&r| r == 2).count() as f64 / nodes.len() as f64;
    let v = composition_test(
        &cons.patch(),
        &Plane::coordinate(0, 1),
        &VerifyOptions::new(21, 21),
    )
    .map_err(|e| e.to_string())?;
    let all_false = v.composition == Some(false) && !v.rank_one && !v.t1_geodesic && !v.t2_geodesic;
    check(
        frac >= 0.9 && v.applicable && all_false && v.consistent,
        format!(
            "rank 2 on {:.1}% of {} nodes; composition {:?}, rank_one {}, T1 geodesic {} ({:.2e}), T2 geodesic {} ({:.2e}), consistent {}",
            100.0 * frac,
            nodes.len(),
            v.composition,
            v.rank_one,
            v.t1_geodesic,
            v.max_dt_t1,
            v.t2_geodesic,
            v.max_dt_t2,
            v.consistent
        ),
    )
}

fn deformation() -> Outcome {
    let n = 20;
    let mut worst: f64 = 0.0;
    let mut samples = 0;
    for i in 0..n {
        for j in i + 1..=n {
            let t1 = FRAC_PI_2 * (i as f64 + 0.5) / (n as f64 + 1.0);
            let t2 = FRAC_PI_2 * (j as f64 + 0.5) / (n as f64 + 1.0);
            let p = HelixParams::from_angles(t1, t2).map_err(|e| e.to_string())?;
            let (m, c) = deform_inverse(&p.angles()).map_err(|e| e.to_string())?;
            let back = deform(m, c).map_err(|e| e.to_string())?;
            worst = worst
                .max((back.theta1 - t1).abs())
                .max((back.theta2 - t2).abs());
            samples += 1;
        }
    }
    let base = deform(1.0, 10.0 / 3.0).map_err(|e| e.to_string())?;
    let base_err = (base.theta1 - FRAC_PI_6)
        .abs()
        .max((base.theta2 - FRAC_PI_3).abs());
    check(
        worst < 1e-12 && base_err < 1e-12,
        format!("round trip {worst:.1e} over {samples} samples, (1, 10/3) error {base_err:.1e}"),
    )
}

fn gauss_circles() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    let mut reports = Vec::new();
    for name in [
        "clifford_torus",
        "product_circles",
        "helix_cylinder",
        "orbit_line",
        "orbit_helix",
        "spherical_orbit",
        "plane",
        "tilted_plane",
    ] {
        let s = generate(&CatalogSpec::named(name).unwrap()).map_err(|e| e.to_string())?;
        reports.push((
            name,
            verify_helix(&s.patch, &s.pi, &VerifyOptions::new(30, 30))
                .map_err(|e| e.to_string())?,
        ));
    }
    let cons = construct(&ConstructConfig::default()).map_err(|e| e.to_string())?;
    reports.push(("pde", cons.report.clone()));
    let mut passing = 0;
    for (name, r) in &reports {
        if !r.is_helix {
            continue;
        }
        passing += 1;
        let circ = r
            .angles
            .gauss_circle_plus
            .std
            .max(r.angles.gauss_circle_minus.std);
        let at = r.residuals.alpha_theta.max_abs;
        let good = circ < 10.0 * r.angle_gate && at < 1e-9;
        ok &= good;
        if !good || *name == "pde" {
            lines.push(format!(
                "{name}: circle std {circ:.1e} vs {:.1e}, alpha-theta {at:.1e}",
                10.0 * r.angle_gate
            ));
        }
    }
    ok &= passing == reports.len();
    check(
        ok,
        format!(
            "{passing}/{} helix surfaces; {}",
            reports.len(),
            lines.join("; ")
        ),
    )
}

fn sphere_dichotomy() -> Outcome {
    let s = generate(&CatalogSpec::named("spherical_orbit").unwrap()).map_err(|e| e.to_string())?;
    let fit = sphere_test(&s.patch, (30, 30)).map_err(|e| e.to_string())?;
    let r =
        verify_helix(&s.patch, &s.pi, &VerifyOptions::new(30, 30)).map_err(|e| e.to_string())?;
    let theta1_zero =
        r.is_helix && r.angles.theta1.max_abs < 1e-9 && r.sphere_dichotomy == Some(true);
    let cfg = ConstructConfig {
        x: [-0.3, 0.3],
        ymax: 0.3,
        verify_grid: [15, 15],
        ..Default::default()
    };
    let cons = construct(&cfg).map_err(|e| e.to_string())?;
    let pde_fit = sphere_test(&cons.patch(), (25, 25)).map_err(|e| e.to_string())?;
    check(
        fit.defect < 1e-8 && theta1_zero && pde_fit.defect > 1e-3 && cons.report.is_helix,
        format!(
            "orbit defect {:.1e}, theta1 {:.1e}; PDE surface (helix {}) defect {:.3e}",
            fit.defect, r.angles.theta1.max_abs, cons.report.is_helix, pde_fit.defect
        ),
    )
}

fn negative_controls() -> Outcome {
    let sphere =
        generate(&CatalogSpec::named("round_sphere").unwrap()).map_err(|e| e.to_string())?;
    let r = verify_helix(&sphere.patch, &sphere.pi, &VerifyOptions::new(30, 30))
        .map_err(|e| e.to_string())?;
    let sphere_std = r.angle_std();
    let mut rng = StdRng::seed_from_u64(10);
    let mut poly_min = f64::INFINITY;
    let mut any_helix = r.is_helix;
    for _ in 0..10 {
        let mut mono = || -> Vec<Monomial> {
            let mut v = Vec::new();
            for i in 0..=3u32 {
                for j in 0..=(3 - i) {
                    if i + j >= 2 {
                        v.push((rng.gen_range(-1.0..1.0), i, j).into());
                    }
                }
            }
            v
        };
        let spec = CatalogSpec::GraphPoly {
            f: mono(),
            g: mono(),
        };
        let s = generate(&spec).map_err(|e| e.to_string())?;
        let r = verify_helix(&s.patch, &s.pi, &VerifyOptions::new(30, 30))
            .map_err(|e| e.to_string())?;
        any_helix |= r.is_helix;
        poly_min = poly_min.min(r.angle_std());
    }
    check(
        !any_helix && sphere_std > 1e-2 && poly_min > 1e-2,
        format!("sphere angle std {sphere_std:.3e}; random polynomial graphs min angle std {poly_min:.3e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1 angle oracle", angle_oracle),
        ("2 complement and product laws", complement_and_product),
        ("3 Clifford torus", clifford_torus),
        ("4 helix cylinder", helix_cylinder),
        ("5 PDE construction", pde_construction),
        ("6 normal rank and composition", thm_reproduction),
        ("7 deformation family", deformation),
        ("8 Gauss-map circles", gauss_circles),
        ("9 sphere dichotomy", sphere_dichotomy),
        ("10 negative controls", negative_controls),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(d) => println!("PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
