use serde::{Deserialize, Serialize};

use crate::grassmann::{Plane, Vec4};

use super::frame::{adapted_frame, AdaptedFrame};
use super::{
    fundamental_forms, tangent_coords, FundamentalForms, SurfaceError, SurfaceJet, SurfacePatch,
};

/// Minimum stencil alignment before a sample is discarded.
const STENCIL_ALIGNMENT: f64 = 0.9;

/// Shape-operator entries and connection one-forms of the adapted frame,
/// with one-forms evaluated on `T1` and `T2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureFields {
    pub m1: f64,
    pub m2: f64,
    pub dt_t1: f64,
    pub dt_t2: f64,
    pub dn_t1: f64,
    pub dn_t2: f64,
    pub df_t1: f64,
    pub df_t2: f64,
    pub dm1_t1: f64,
    pub dm1_t2: f64,
    pub dm2_t1: f64,
    pub dm2_t2: f64,
    /// Coefficients of `dt = A·dλ1 + B·dλ2`; absent when `θ1 = θ2` or an
    /// angle is `π/2`.
    pub a_const: Option<f64>,
    pub b_const: Option<f64>,
}

/// `(A, B)` with `dt = A·dλ1 + B·dλ2` for generic angles.
pub fn dependence_constants(theta1: f64, theta2: f64) -> Option<(f64, f64)> {
    let (c1, s1, c2, s2) = (theta1.cos(), theta1.sin(), theta2.cos(), theta2.sin());
    if c1 < 1e-12 || c2 < 1e-12 {
        return None;
    }
    let d = c1 / c2 - c2 / c1;
    if d.abs() < 1e-12 {
        return None;
    }
    Some((s1 / (c2 * d), s2 / (c1 * d)))
}

/// Everything computed at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGeometry {
    pub u: f64,
    pub v: f64,
    pub jet: SurfaceJet,
    pub frame: AdaptedFrame,
    pub forms: FundamentalForms,
    pub fields: StructureFields,
    pub gauss_curvature: f64,
    pub normal_curvature: f64,
    pub brioschi_curvature: f64,
    /// `|α(T1, T2)|`.
    pub alpha12: f64,
    /// `max(|⟨α(T1,T1), ξ1⟩|, |⟨α(T2,T2), ξ2⟩|)`.
    pub alpha_off_diagonal: f64,
}

struct Local {
    jet: SurfaceJet,
    frame: AdaptedFrame,
    forms: FundamentalForms,
    m1: f64,
    m2: f64,
}

fn shape_entries(
    jet: &SurfaceJet,
    frame: &AdaptedFrame,
    forms: &FundamentalForms,
) -> [[Vec4; 2]; 2] {
    let a = tangent_coords(jet, &frame.t1);
    let b = tangent_coords(jet, &frame.t2);
    [
        [forms.alpha(a, a), forms.alpha(a, b)],
        [forms.alpha(b, a), forms.alpha(b, b)],
    ]
}

fn local(jet: SurfaceJet, frame: AdaptedFrame) -> Result<Local, SurfaceError> {
    let forms = fundamental_forms(&jet)?;
    let al = shape_entries(&jet, &frame, &forms);
    Ok(Local {
        m1: al[1][1].dot(&frame.xi1),
        m2: al[0][0].dot(&frame.xi2),
        jet,
        frame,
        forms,
    })
}

fn metric_derivatives(j: &SurfaceJet) -> [f64; 6] {
    // E_u, E_v, F_u, F_v, G_u, G_v from exact second derivatives
    [
        2.0 * j.p_uu.dot(&j.p_u),
        2.0 * j.p_uv.dot(&j.p_u),
        j.p_uu.dot(&j.p_v) + j.p_u.dot(&j.p_uv),
        j.p_uv.dot(&j.p_v) + j.p_u.dot(&j.p_vv),
        2.0 * j.p_uv.dot(&j.p_v),
        2.0 * j.p_vv.dot(&j.p_v),
    ]
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Evaluates a point given its already-selected frame. Stencil frames are
/// aligned to the centre frame.
pub(crate) fn evaluate_point(
    patch: &dyn SurfacePatch,
    pi: &Plane,
    (u, v): (f64, f64),
    (hu, hv): (f64, f64),
    jet: SurfaceJet,
    frame: AdaptedFrame,
) -> Result<PointGeometry, SurfaceError> {
    let c = local(jet, frame)?;
    let mut st = Vec::with_capacity(4);
    for (du, dv) in [(hu, 0.0), (-hu, 0.0), (0.0, hv), (0.0, -hv)] {
        let (su, sv) = patch.snap(u + du, v + dv);
        let j = patch.jet(su, sv)?;
        let f = adapted_frame(&j, pi, Some(&frame))?;
        let dot = f.min_alignment(&frame);
        if dot < STENCIL_ALIGNMENT {
            return Err(SurfaceError::FrameDiscontinuity { u, v, dot });
        }
        st.push(local(j, f)?);
    }
    let (up, um, vp, vm) = (&st[0], &st[1], &st[2], &st[3]);

    let d_u = |g: fn(&Local) -> Vec4| (g(up) - g(um)) / (2.0 * hu);
    let d_v = |g: fn(&Local) -> Vec4| (g(vp) - g(vm)) / (2.0 * hv);
    let form = |g: fn(&Local) -> Vec4, w: Vec4| [d_u(g).dot(&w), d_v(g).dot(&w)];
    let dt = form(|l| l.frame.t1, frame.t2);
    let dn = form(|l| l.frame.xi1, frame.xi2);
    let df = form(|l| l.frame.e1, frame.e2);
    let dm1 = [(up.m1 - um.m1) / (2.0 * hu), (vp.m1 - vm.m1) / (2.0 * hv)];
    let dm2 = [(up.m2 - um.m2) / (2.0 * hu), (vp.m2 - vm.m2) / (2.0 * hv)];

    let a1 = tangent_coords(&jet, &frame.t1);
    let a2 = tangent_coords(&jet, &frame.t2);
    let on = |w: [f64; 2], a: [f64; 2]| a[0] * w[0] + a[1] * w[1];
    let (ac, bc) = match dependence_constants(frame.theta1, frame.theta2) {
        Some((a, b)) => (Some(a), Some(b)),
        None => (None, None),
    };
    let fields = StructureFields {
        m1: c.m1,
        m2: c.m2,
        dt_t1: on(dt, a1),
        dt_t2: on(dt, a2),
        dn_t1: on(dn, a1),
        dn_t2: on(dn, a2),
        df_t1: on(df, a1),
        df_t2: on(df, a2),
        dm1_t1: on(dm1, a1),
        dm1_t2: on(dm1, a2),
        dm2_t1: on(dm2, a1),
        dm2_t2: on(dm2, a2),
        a_const: ac,
        b_const: bc,
    };

    let al = shape_entries(&jet, &frame, &c.forms);
    let h = |k: usize, i: usize, j: usize| {
        let n = if k == 0 { frame.xi1 } else { frame.xi2 };
        al[i][j].dot(&n)
    };
    let commutator: f64 = (0..2)
        .map(|j| h(0, 0, j) * h(1, j, 1) - h(1, 0, j) * h(0, j, 1))
        .sum();

    let [e_u, e_v, f_u, f_v, g_u, g_v] = metric_derivatives(&jet);
    let e_vv = (metric_derivatives(&vp.jet)[1] - metric_derivatives(&vm.jet)[1]) / (2.0 * hv);
    let f_uv = (metric_derivatives(&vp.jet)[2] - metric_derivatives(&vm.jet)[2]) / (2.0 * hv);
    let g_uu = (metric_derivatives(&up.jet)[4] - metric_derivatives(&um.jet)[4]) / (2.0 * hu);
    let (e, f, g) = (c.forms.e, c.forms.f, c.forms.g);
    let m1 = [
        [-0.5 * e_vv + f_uv - 0.5 * g_uu, 0.5 * e_u, f_u - 0.5 * e_v],
        [f_v - 0.5 * g_u, e, f],
        [0.5 * g_v, f, g],
    ];
    let m2 = [
        [0.0, 0.5 * e_v, 0.5 * g_u],
        [0.5 * e_v, e, f],
        [0.5 * g_u, f, g],
    ];
    let brioschi = (det3(m1) - det3(m2)) / (c.forms.det() * c.forms.det());

    Ok(PointGeometry {
        u,
        v,
        jet,
        frame,
        forms: c.forms,
        fields,
        gauss_curvature: c.forms.gauss_curvature(),
        normal_curvature: commutator,
        brioschi_curvature: brioschi,
        alpha12: al[0][1].norm(),
        alpha_off_diagonal: al[0][0]
            .dot(&frame.xi1)
            .abs()
            .max(al[1][1].dot(&frame.xi2).abs()),
    })
}

/// Structure fields at a single point, using the canonical frame there and
/// central differences with steps `h` for the one-forms.
pub fn structure_fields(
    patch: &dyn SurfacePatch,
    pi: &Plane,
    at: (f64, f64),
    h: (f64, f64),
) -> Result<StructureFields, SurfaceError> {
    let (u, v) = patch.snap(at.0, at.1);
    let jet = patch.jet(u, v)?;
    let frame = adapted_frame(&jet, pi, None)?;
    evaluate_point(patch, pi, (u, v), h, jet, frame).map(|p| p.fields)
}
