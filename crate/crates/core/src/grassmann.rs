//! Oriented 2-planes in R⁴, their principal angles, and the exterior algebra
//! Λ²R⁴ used to represent them as bivectors.
//!
//! Bivectors are stored in the lexicographic wedge basis
//! `(e12, e13, e14, e23, e24, e34)`. The Hodge star is fixed by the canonical
//! volume form `e1∧e2∧e3∧e4`, and the self-dual / anti-self-dual splitting
//! `Λ² = E⁺ ⊕ E⁻` uses the orthonormal bases
//!
//! ```text
//! E⁺: (e12 + e34)/√2, (e13 − e24)/√2, (e14 + e23)/√2
//! E⁻: (e12 − e34)/√2, (e13 + e24)/√2, (e14 − e23)/√2
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::{Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec4 = Vector4<f64>;

/// Orthonormality tolerance accepted for plane frames.
pub const FRAME_TOL: f64 = 1e-12;
/// Singular values of the cross-Gram matrix above `1 + CLAMP_TOL` are rejected.
pub const CLAMP_TOL: f64 = 1e-8;
/// Singular values closer than this are treated as a repeated principal angle.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("frame is not orthonormal: {0}")]
    NotOrthonormal(String),
    #[error("vectors do not span a plane")]
    DegenerateSpan,
    #[error("non-finite coordinate in frame")]
    NonFinite,
    #[error("cross-Gram singular value {0} exceeds 1 beyond tolerance")]
    SingularValueOutOfRange(f64),
}

/// An oriented (or explicitly unoriented) 2-plane through the origin of R⁴,
/// carried as an orthonormal frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlaneRepr", into = "PlaneRepr")]
pub struct Plane {
    b1: Vec4,
    b2: Vec4,
    oriented: bool,
}

#[derive(Serialize, Deserialize)]
struct PlaneRepr {
    b1: [f64; 4],
    b2: [f64; 4],
    #[serde(default = "default_true")]
    oriented: bool,
}

fn default_true() -> bool {
    true
}

impl TryFrom<PlaneRepr> for Plane {
    type Error = GeometryError;
    fn try_from(r: PlaneRepr) -> Result<Self, Self::Error> {
        let mut p = Plane::new(Vec4::from(r.b1), Vec4::from(r.b2))?;
        p.oriented = r.oriented;
        Ok(p)
    }
}

impl From<Plane> for PlaneRepr {
    fn from(p: Plane) -> Self {
        PlaneRepr {
            b1: p.b1.into(),
            b2: p.b2.into(),
            oriented: p.oriented,
        }
    }
}

impl Plane {
    /// Builds an oriented plane from an orthonormal frame.
    pub fn new(b1: Vec4, b2: Vec4) -> Result<Self, GeometryError> {
        if !b1.iter().chain(b2.iter()).all(|x| x.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let n1 = b1.norm() - 1.0;
        let n2 = b2.norm() - 1.0;
        let d = b1.dot(&b2);
        if n1.abs() > FRAME_TOL || n2.abs() > FRAME_TOL || d.abs() > FRAME_TOL {
            return Err(GeometryError::NotOrthonormal(format!(
                "|b1|-1 = {n1:e}, |b2|-1 = {n2:e}, <b1,b2> = {d:e}"
            )));
        }
        Ok(Plane {
            b1,
            b2,
            oriented: true,
        })
    }

    /// Orthonormalizes `(u, v)` by Gram-Schmidt, keeping the orientation of
    /// the pair.
    pub fn from_span(u: Vec4, v: Vec4) -> Result<Self, GeometryError> {
        let nu = u.norm();
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(GeometryError::DegenerateSpan);
        }
        let b1 = u / nu;
        let w = v - b1 * b1.dot(&v);
        let nw = w.norm();
        if !(nw > 1e-14 * v.norm().max(1e-300)) {
            return Err(GeometryError::DegenerateSpan);
        }
        // one re-orthogonalization pass keeps the frame within FRAME_TOL
        let mut b2 = w / nw;
        b2 -= b1 * b1.dot(&b2);
        b2 /= b2.norm();
        Plane::new(b1, b2)
    }

    /// The coordinate plane `span(e_i, e_j)` (indices are 0-based).
    pub fn coordinate(i: usize, j: usize) -> Self {
        assert!(
            i < 4 && j < 4 && i != j,
            "invalid coordinate plane ({i}, {j})"
        );
        let mut b1 = Vec4::zeros();
        let mut b2 = Vec4::zeros();
        b1[i] = 1.0;
        b2[j] = 1.0;
        Plane {
            b1,
            b2,
            oriented: true,
        }
    }

    pub fn b1(&self) -> Vec4 {
        self.b1
    }

    pub fn b2(&self) -> Vec4 {
        self.b2
    }

    pub fn is_oriented(&self) -> bool {
        self.oriented
    }

    pub fn into_unoriented(mut self) -> Self {
        self.oriented = false;
        self
    }

    /// The same subspace with the opposite orientation.
    pub fn reversed(&self) -> Self {
        Plane {
            b1: self.b2,
            b2: self.b1,
            oriented: self.oriented,
        }
    }

    /// Unit decomposable bivector `b1 ∧ b2`.
    pub fn bivector(&self) -> Bivector {
        wedge(&self.b1, &self.b2)
    }

    /// Orthogonal projection of `x` onto the plane.
    pub fn project(&self, x: &Vec4) -> Vec4 {
        self.b1 * self.b1.dot(x) + self.b2 * self.b2.dot(x)
    }

    /// True when both planes are the same subspace (orientation ignored).
    pub fn same_subspace(&self, other: &Plane, tol: f64) -> bool {
        (self.project(&other.b1) - other.b1).norm() < tol
            && (self.project(&other.b2) - other.b2).norm() < tol
    }
}

/// Element of Λ²R⁴ in the lexicographic wedge basis.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 6]", into = "[f64; 6]")]
pub struct Bivector {
    pub c12: f64,
    pub c13: f64,
    pub c14: f64,
    pub c23: f64,
    pub c24: f64,
    pub c34: f64,
}

impl From<[f64; 6]> for Bivector {
    fn from(c: [f64; 6]) -> Self {
        Bivector {
            c12: c[0],
            c13: c[1],
            c14: c[2],
            c23: c[3],
            c24: c[4],
            c34: c[5],
        }
    }
}

impl From<Bivector> for [f64; 6] {
    fn from(b: Bivector) -> Self {
        b.to_array()
    }
}

impl Bivector {
    pub fn to_array(&self) -> [f64; 6] {
        [self.c12, self.c13, self.c14, self.c23, self.c24, self.c34]
    }

    pub fn dot(&self, other: &Bivector) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Coefficient of `η ∧ η` on the volume form, halved. Zero exactly for
    /// decomposable bivectors.
    pub fn plucker(&self) -> f64 {
        self.c12 * self.c34 - self.c13 * self.c24 + self.c14 * self.c23
    }

    /// `η ∧ η'` as a multiple of `e1∧e2∧e3∧e4`.
    pub fn wedge_volume(&self, other: &Bivector) -> f64 {
        self.c12 * other.c34 + self.c34 * other.c12 - self.c13 * other.c24 - self.c24 * other.c13
            + self.c14 * other.c23
            + self.c23 * other.c14
    }

    pub fn scale(&self, s: f64) -> Bivector {
        Bivector::from(self.to_array().map(|c| c * s))
    }

    pub fn add(&self, o: &Bivector) -> Bivector {
        let a = self.to_array();
        let b = o.to_array();
        Bivector::from(std::array::from_fn(|i| a[i] + b[i]))
    }
}

/// `u ∧ v` in the lexicographic basis.
pub fn wedge(u: &Vec4, v: &Vec4) -> Bivector {
    let c = |i: usize, j: usize| u[i] * v[j] - u[j] * v[i];
    Bivector {
        c12: c(0, 1),
        c13: c(0, 2),
        c14: c(0, 3),
        c23: c(1, 2),
        c24: c(1, 3),
        c34: c(2, 3),
    }
}

/// Hodge star on Λ²R⁴: the symmetric involution with `⟨η, *η'⟩ = η ∧ η'`.
pub fn hodge(b: &Bivector) -> Bivector {
    Bivector {
        c12: b.c34,
        c13: -b.c24,
        c14: b.c23,
        c23: b.c14,
        c24: -b.c13,
        c34: b.c12,
    }
}

/// Principal angles `0 ≤ θ1 ≤ θ2 ≤ π/2` between two planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrincipalAngles {
    pub theta1: f64,
    pub theta2: f64,
}

impl PrincipalAngles {
    pub fn new(theta1: f64, theta2: f64) -> Option<Self> {
        let ok = theta1.is_finite()
            && theta2.is_finite()
            && (0.0..=FRAC_PI_2).contains(&theta1)
            && (theta1..=FRAC_PI_2).contains(&theta2);
        ok.then_some(PrincipalAngles { theta1, theta2 })
    }

    pub fn max_abs_diff(&self, other: &PrincipalAngles) -> f64 {
        (self.theta1 - other.theta1)
            .abs()
            .max((self.theta2 - other.theta2).abs())
    }
}

/// Principal angles together with the principal directions realizing them.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalDecomposition {
    pub angles: PrincipalAngles,
    /// Singular values of the cross-Gram matrix, `cos θ1 ≥ cos θ2`.
    pub cosines: [f64; 2],
    /// Principal directions in the first plane, paired with `w_dirs` so that
    /// `⟨v_k, w_k⟩ = cos θ_k`.
    pub v_dirs: [Vec4; 2],
    pub w_dirs: [Vec4; 2],
    /// Set when `θ1 = θ2`; the directions are then the first plane's own frame.
    pub degenerate: bool,
}

fn cross_gram(v: &Plane, w1: &Vec4, w2: &Vec4) -> Matrix2<f64> {
    Matrix2::new(v.b1.dot(w1), v.b1.dot(w2), v.b2.dot(w1), v.b2.dot(w2))
}

fn singular_values_2x2(m: &Matrix2<f64>) -> [f64; 2] {
    let s = m.singular_values();
    if s[0] >= s[1] {
        [s[0], s[1]]
    } else {
        [s[1], s[0]]
    }
}

/// Principal angles between `v` and `w` with their principal directions.
///
/// Cosines come from the SVD of the cross-Gram matrix `M_ij = ⟨v_i, w_j⟩`;
/// sines from the cross-Gram matrix against `w⊥`. Each angle is recovered
/// with `atan2(sin, cos)`, which keeps full relative accuracy at both ends
/// of `[0, π/2]`.
pub fn principal_decomposition(
    v: &Plane,
    w: &Plane,
) -> Result<PrincipalDecomposition, GeometryError> {
    let m = cross_gram(v, &w.b1, &w.b2);
    let svd = m.svd(true, true);
    let (u_mat, vt_mat) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut sv = [svd.singular_values[0], svd.singular_values[1]];
    let mut order = [0usize, 1];
    if sv[1] > sv[0] {
        sv.swap(0, 1);
        order.swap(0, 1);
    }
    for s in sv {
        if s > 1.0 + CLAMP_TOL {
            return Err(GeometryError::SingularValueOutOfRange(s));
        }
    }
    let cos = sv.map(|s| s.clamp(0.0, 1.0));

    let wp = orthogonal_complement(w);
    let sines = singular_values_2x2(&cross_gram(v, &wp.b1, &wp.b2)).map(|s| s.clamp(0.0, 1.0));
    // sin θ1 is the smaller sine, sin θ2 the larger
    let theta1 = sines[1].atan2(cos[0]);
    let theta2 = sines[0].atan2(cos[1]).max(theta1);

    let degenerate = (cos[0] - cos[1]).abs() <= DEGENERACY_TOL;
    let (v_dirs, w_dirs) = if degenerate {
        let vd = [v.b1, v.b2];
        let wd = if cos[0] > DEGENERACY_TOL {
            let p1 = w.project(&vd[0]);
            let p2 = w.project(&vd[1]);
            let f = Plane::from_span(p1, p2)
                .map(|p| [p.b1, p.b2])
                .unwrap_or([w.b1, w.b2]);
            // keep the pairing sign ⟨v_k, w_k⟩ ≥ 0
            [f[0], if f[1].dot(&vd[1]) < 0.0 { -f[1] } else { f[1] }]
        } else {
            [w.b1, w.b2]
        };
        (vd, wd)
    } else {
        let dir = |k: usize| {
            let c = order[k];
            let vk = v.b1 * u_mat[(0, c)] + v.b2 * u_mat[(1, c)];
            let wk = w.b1 * vt_mat[(c, 0)] + w.b2 * vt_mat[(c, 1)];
            (vk, wk)
        };
        let (v0, w0) = dir(0);
        let (v1, w1) = dir(1);
        ([v0, v1], [w0, w1])
    };

    Ok(PrincipalDecomposition {
        angles: PrincipalAngles { theta1, theta2 },
        cosines: cos,
        v_dirs,
        w_dirs,
        degenerate,
    })
}

/// Principal angles `(θ1, θ2)` between two planes.
pub fn principal_angles(v: &Plane, w: &Plane) -> Result<PrincipalAngles, GeometryError> {
    principal_decomposition(v, w).map(|d| d.angles)
}

/// Orthonormal frame of `w⊥`, oriented so that `(w.b1, w.b2, out.b1, out.b2)`
/// is a positive basis of R⁴.
pub fn orthogonal_complement(w: &Plane) -> Plane {
    let residual = |x: Vec4, basis: &[Vec4]| {
        let mut r = x;
        for _ in 0..2 {
            for b in basis {
                r -= *b * b.dot(&r);
            }
        }
        r
    };
    let mut basis = vec![w.b1, w.b2];
    for _ in 0..2 {
        let best = (0..4)
            .map(|k| residual(Vec4::ith(k, 1.0), &basis))
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("four candidates");
        basis.push(best / best.norm());
    }
    let (c1, mut c2) = (basis[2], basis[3]);
    let det = Matrix4::from_columns(&[w.b1, w.b2, c1, c2]).determinant();
    if det < 0.0 {
        c2 = -c2;
    }
    Plane {
        b1: c1,
        b2: c2,
        oriented: w.oriented,
    }
}

/// Coordinates of the self-dual and anti-self-dual parts of an oriented
/// plane's bivector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussPoint {
    pub plus: [f64; 3],
    pub minus: [f64; 3],
}

impl GaussPoint {
    pub fn from_bivector(b: &Bivector) -> Self {
        let s = FRAC_1_SQRT_2;
        GaussPoint {
            plus: [
                (b.c12 + b.c34) * s,
                (b.c13 - b.c24) * s,
                (b.c14 + b.c23) * s,
            ],
            minus: [
                (b.c12 - b.c34) * s,
                (b.c13 + b.c24) * s,
                (b.c14 - b.c23) * s,
            ],
        }
    }

    pub fn plus_dot(&self, other: &GaussPoint) -> f64 {
        dot3(&self.plus, &other.plus)
    }

    pub fn minus_dot(&self, other: &GaussPoint) -> f64 {
        dot3(&self.minus, &other.minus)
    }

    /// `(cos α⁺, cos α⁻)` relative to a reference point, with
    /// `cos α± = 2⟨η₀±, η±⟩`.
    pub fn cos_alphas(&self, reference: &GaussPoint) -> (f64, f64) {
        (
            2.0 * self.plus_dot(reference),
            2.0 * self.minus_dot(reference),
        )
    }
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Gauss-map coordinates of an oriented plane. An unoriented plane is read
/// with the orientation of its stored frame.
pub fn gauss_point(p: &Plane) -> GaussPoint {
    GaussPoint::from_bivector(&p.bivector())
}

/// Oriented angles between planes read off their bivectors:
/// `cos θ = ⟨η_V, η_W⟩` and `cos θ⊥ = ⟨η_V, *η_W⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivectorAngles {
    pub cos_theta: f64,
    pub cos_theta_perp: f64,
    pub theta: f64,
    pub theta_perp: f64,
}

pub fn plane_angles_via_bivectors(v: &Plane, w: &Plane) -> BivectorAngles {
    let ev = v.bivector();
    let ew = w.bivector();
    let cos_theta = ev.dot(&ew);
    let cos_theta_perp = ev.dot(&hodge(&ew));
    BivectorAngles {
        cos_theta,
        cos_theta_perp,
        theta: cos_theta.clamp(-1.0, 1.0).acos(),
        theta_perp: cos_theta_perp.clamp(-1.0, 1.0).acos(),
    }
}

/// Plane pair with prescribed principal angles: `w = span(w1, w2)` and
/// `v = span(cos θ1·w2 + sin θ1·w4, cos θ2·w1 + sin θ2·w3)` for an
/// orthonormal basis `(w1, .., w4)`.
pub fn plane_pair_with_angles(
    basis: &Matrix4<f64>,
    theta1: f64,
    theta2: f64,
) -> Result<(Plane, Plane), GeometryError> {
    let w = |k: usize| basis.column(k).into_owned();
    let v1 = w(1) * theta1.cos() + w(3) * theta1.sin();
    let v2 = w(0) * theta2.cos() + w(2) * theta2.sin();
    Ok((Plane::from_span(v1, v2)?, Plane::from_span(w(0), w(1))?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};

    fn e(k: usize) -> Vec4 {
        Vec4::ith(k, 1.0)
    }

    #[test]
    fn identical_and_orthogonal_planes() {
        let p = Plane::coordinate(0, 1);
        let a = principal_angles(&p, &p).unwrap();
        assert_eq!((a.theta1, a.theta2), (0.0, 0.0));
        let q = Plane::coordinate(2, 3);
        let a = principal_angles(&p, &q).unwrap();
        assert!((a.theta1 - FRAC_PI_2).abs() < 1e-15 && (a.theta2 - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn prescribed_angles_from_standard_basis() {
        let (v, w) = plane_pair_with_angles(&Matrix4::identity(), FRAC_PI_6, FRAC_PI_3).unwrap();
        let d = principal_decomposition(&v, &w).unwrap();
        assert!((d.angles.theta1 - FRAC_PI_6).abs() < 1e-14);
        assert!((d.angles.theta2 - FRAC_PI_3).abs() < 1e-14);
        assert!(!d.degenerate);
        for k in 0..2 {
            assert!((d.v_dirs[k].dot(&d.w_dirs[k]) - d.cosines[k]).abs() < 1e-14);
        }
        // the first principal direction in V is v1 = cos θ1 w2 + sin θ1 w4 up to sign
        let v1 = e(1) * FRAC_PI_6.cos() + e(3) * FRAC_PI_6.sin();
        assert!((d.v_dirs[0].dot(&v1).abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_orthonormal_frames() {
        let err = Plane::new(e(0), e(0) * 0.5 + e(1)).unwrap_err();
        assert!(matches!(err, GeometryError::NotOrthonormal(_)));
        assert!(Plane::new(e(0) * (1.0 + 1e-9), e(1)).is_err());
        assert_eq!(
            Plane::from_span(e(0), e(0) * 2.0),
            Err(GeometryError::DegenerateSpan)
        );
    }

    #[test]
    fn degenerate_angles_use_input_frame() {
        let (v, w) = plane_pair_with_angles(&Matrix4::identity(), 0.4, 0.4).unwrap();
        let d = principal_decomposition(&v, &w).unwrap();
        assert!(d.degenerate);
        assert_eq!(d.v_dirs, [v.b1(), v.b2()]);
        for k in 0..2 {
            assert!((d.v_dirs[k].dot(&d.w_dirs[k]) - 0.4f64.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn complement_of_coordinate_plane() {
        let c = orthogonal_complement(&Plane::coordinate(0, 1));
        assert!(c.same_subspace(&Plane::coordinate(2, 3), 1e-15));
        let det = Matrix4::from_columns(&[e(0), e(1), c.b1(), c.b2()]).determinant();
        assert!(det > 0.0);
    }

    #[test]
    fn wedge_and_hodge_basics() {
        let b = wedge(&e(0), &e(1));
        assert_eq!(b.to_array(), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(wedge(&e(2), &e(2)).norm(), 0.0);
        assert_eq!(b.dot(&wedge(&e(1), &e(0))), -1.0);
        assert_eq!(hodge(&b), wedge(&e(2), &e(3)));
        // ⟨η, *η'⟩ = η ∧ η' on basis elements
        let basis: Vec<Bivector> = (0..6)
            .map(|k| Bivector::from(std::array::from_fn::<f64, 6, _>(|i| (i == k) as u8 as f64)))
            .collect();
        for a in &basis {
            for b in &basis {
                assert_eq!(a.dot(&hodge(b)), a.wedge_volume(b));
            }
        }
    }

    #[test]
    fn gauss_point_of_e2_e4() {
        // e2∧e4 = c24: plus = (0, -1/√2, 0), minus = (0, 1/√2, 0)
        let g = gauss_point(&Plane::coordinate(1, 3));
        assert_eq!(g.plus, [0.0, -FRAC_1_SQRT_2, 0.0]);
        assert_eq!(g.minus, [0.0, FRAC_1_SQRT_2, 0.0]);
        let r = gauss_point(&Plane::coordinate(1, 3).reversed());
        assert_eq!(r.plus, [0.0, FRAC_1_SQRT_2, 0.0]);
        assert_eq!(r.minus, [0.0, -FRAC_1_SQRT_2, 0.0]);
    }

    #[test]
    fn bivector_angles_closed_forms() {
        let p = Plane::coordinate(0, 1);
        assert_eq!(plane_angles_via_bivectors(&p, &p).theta, 0.0);
        let (v, w) = plane_pair_with_angles(&Matrix4::identity(), FRAC_PI_6, FRAC_PI_3).unwrap();
        let b = plane_angles_via_bivectors(&v, &w);
        assert!((b.cos_theta.abs() - 3f64.sqrt() / 4.0).abs() < 1e-15);
        let b = plane_angles_via_bivectors(&p, &Plane::coordinate(2, 3));
        assert!((b.cos_theta_perp.abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn plane_json_shape() {
        let p = Plane::coordinate(0, 2);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(
            s,
            r#"{"b1":[1.0,0.0,0.0,0.0],"b2":[0.0,0.0,1.0,0.0],"oriented":true}"#
        );
        let back: Plane = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"b1":[1,0,0,0],"b2":[1,0,0,0],"oriented":true}"#;
        assert!(serde_json::from_str::<Plane>(bad).is_err());
        let b = serde_json::to_string(&wedge(&e(0), &e(1))).unwrap();
        assert_eq!(b, "[1.0,0.0,0.0,0.0,0.0,0.0]");
    }
}
