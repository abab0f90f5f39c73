use std::f64::consts::FRAC_PI_2;

use helix_surfaces::grassmann::*;
use nalgebra::Matrix4;
use proptest::prelude::*;

fn orthonormal(entries: [f64; 16]) -> Option<Matrix4<f64>> {
    let m = Matrix4::from_column_slice(&entries);
    if m.determinant().abs() < 1e-3 {
        return None;
    }
    Some(m.qr().q())
}

fn basis() -> impl Strategy<Value = Matrix4<f64>> {
    prop::array::uniform16(-1.0f64..1.0).prop_filter_map("singular", orthonormal)
}

fn vec4() -> impl Strategy<Value = Vec4> {
    prop::array::uniform4(-2.0f64..2.0).prop_map(Vec4::from)
}

fn plane() -> impl Strategy<Value = Plane> {
    (vec4(), vec4()).prop_filter_map("degenerate span", |(a, b)| Plane::from_span(a, b).ok())
}

fn angle_pair() -> impl Strategy<Value = (f64, f64)> {
    (0.0f64..FRAC_PI_2, 0.0f64..FRAC_PI_2).prop_map(|(a, b)| (a.min(b), a.max(b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn prescribed_angles_are_recovered(q in basis(), (t1, t2) in angle_pair()) {
        let (v, w) = plane_pair_with_angles(&q, t1, t2).unwrap();
        let a = principal_angles(&v, &w).unwrap();
        prop_assert!((a.theta1 - t1).abs() < 1e-10, "{a:?} vs ({t1}, {t2})");
        prop_assert!((a.theta2 - t2).abs() < 1e-10, "{a:?} vs ({t1}, {t2})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cosines_and_order(v in plane(), w in plane()) {
        let d = principal_decomposition(&v, &w).unwrap();
        prop_assert!(d.cosines.iter().all(|c| (0.0..=1.0).contains(c)));
        prop_assert!(d.cosines[0] >= d.cosines[1]);
        let a = d.angles;
        prop_assert!(0.0 <= a.theta1 && a.theta1 <= a.theta2 && a.theta2 <= FRAC_PI_2);
        prop_assert!(PrincipalAngles::new(a.theta1, a.theta2).is_some());
    }

    #[test]
    fn principal_directions_realize_cosines(v in plane(), w in plane()) {
        let d = principal_decomposition(&v, &w).unwrap();
        for k in 0..2 {
            prop_assert!((d.v_dirs[k].norm() - 1.0).abs() < 1e-10);
            prop_assert!((d.w_dirs[k].norm() - 1.0).abs() < 1e-10);
            prop_assert!((d.v_dirs[k].dot(&d.w_dirs[k]) - d.cosines[k]).abs() < 1e-9);
        }
        prop_assert!(d.v_dirs[0].dot(&d.v_dirs[1]).abs() < 1e-9);
    }

    #[test]
    fn angles_are_symmetric(v in plane(), w in plane()) {
        let a = principal_angles(&v, &w).unwrap();
        let b = principal_angles(&w, &v).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-12, "{a:?} {b:?}");
    }

    #[test]
    fn complement_swaps_angles(v in plane(), w in plane()) {
        let a = principal_angles(&v, &w).unwrap();
        let b = principal_angles(&v, &orthogonal_complement(&w)).unwrap();
        prop_assert!((b.theta1 - (FRAC_PI_2 - a.theta2)).abs() < 1e-10, "{a:?} {b:?}");
        prop_assert!((b.theta2 - (FRAC_PI_2 - a.theta1)).abs() < 1e-10, "{a:?} {b:?}");
    }

    #[test]
    fn complement_is_orthogonal_and_positive(w in plane()) {
        let c = orthogonal_complement(&w);
        for x in [c.b1(), c.b2()] {
            prop_assert!(x.dot(&w.b1()).abs() < 1e-12 && x.dot(&w.b2()).abs() < 1e-12);
        }
        let det = Matrix4::from_columns(&[w.b1(), w.b2(), c.b1(), c.b2()]).determinant();
        prop_assert!((det - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cosine_product_is_bivector_dot(v in plane(), w in plane()) {
        let a = principal_angles(&v, &w).unwrap();
        let prod = a.theta1.cos() * a.theta2.cos();
        let dot = v.bivector().dot(&w.bivector()).abs();
        prop_assert!((prod - dot).abs() < 1e-10, "{prod} vs {dot}");
    }

    #[test]
    fn bivectors_are_decomposable(v in plane()) {
        let b = v.bivector();
        prop_assert!(b.plucker().abs() < 1e-12);
        prop_assert!((b.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gauss_point_splits_unit_norm(v in plane()) {
        let g = gauss_point(&v);
        let n2 = |x: [f64; 3]| x.iter().map(|c| c * c).sum::<f64>();
        prop_assert!((n2(g.plus) - 0.5).abs() < 1e-12);
        prop_assert!((n2(g.minus) - 0.5).abs() < 1e-12);
        prop_assert!((n2(g.plus) + n2(g.minus) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversal_negates_gauss_point(v in plane()) {
        let (g, r) = (gauss_point(&v), gauss_point(&v.reversed()));
        for k in 0..3 {
            prop_assert!((g.plus[k] + r.plus[k]).abs() < 1e-14);
            prop_assert!((g.minus[k] + r.minus[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_alphas_match_bivector_angles(v in plane(), w in plane()) {
        let (cp, cm) = gauss_point(&v).cos_alphas(&gauss_point(&w));
        let b = plane_angles_via_bivectors(&v, &w);
        prop_assert!((cp - (b.cos_theta + b.cos_theta_perp)).abs() < 1e-12);
        prop_assert!((cm - (b.cos_theta - b.cos_theta_perp)).abs() < 1e-12);
    }

    #[test]
    fn hodge_is_an_involution(v in plane()) {
        let b = v.bivector();
        let hh = hodge(&hodge(&b));
        for (x, y) in b.to_array().iter().zip(hh.to_array()) {
            prop_assert!((x - y).abs() < 1e-15);
        }
        prop_assert!((hodge(&b).dot(&b) - b.wedge_volume(&b)).abs() < 1e-12);
    }

    #[test]
    fn rotation_invariance(q in basis(), v in plane(), w in plane()) {
        let rot = |p: &Plane| Plane::new(q * p.b1(), q * p.b2()).unwrap();
        let a = principal_angles(&v, &w).unwrap();
        let b = principal_angles(&rot(&v), &rot(&w)).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-10);
    }
}

#[test]
fn degenerate_inputs_are_rejected() {
    let e = |k| Vec4::ith(k, 1.0);
    assert!(Plane::from_span(e(0), e(0) * 2.0).is_err());
    assert!(Plane::from_span(Vec4::zeros(), e(1)).is_err());
    assert!(Plane::new(e(0), e(0) + e(1)).is_err());
}

#[test]
fn coordinate_planes() {
    let a = principal_angles(&Plane::coordinate(0, 1), &Plane::coordinate(2, 3)).unwrap();
    assert_eq!((a.theta1, a.theta2), (FRAC_PI_2, FRAC_PI_2));
    let a = principal_angles(&Plane::coordinate(0, 1), &Plane::coordinate(0, 2)).unwrap();
    assert!(a.theta1.abs() < 1e-15 && (a.theta2 - FRAC_PI_2).abs() < 1e-15);
}
