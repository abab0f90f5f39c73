//! Surface patches in R⁴ and their local differential geometry.
//!
//! Every surface, whether closed-form, sampled on a grid, or known only
//! through its position map, is consumed through [`SurfacePatch`], which
//! hands out second-order jets at parameter points.

mod fields;
mod frame;
mod sphere;
mod verify;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grassmann::{wedge, GeometryError, Plane, Vec4};
use crate::jet::Jet2;

pub use fields::{structure_fields, PointGeometry, StructureFields};
pub use frame::{adapted_frame, AdaptedFrame, FRAME_COUPLING_TOL, SWAP_TOL};
pub use sphere::{fit_sphere, sphere_test, SphereFit};
pub use verify::{
    parallel_h_test, verify_helix, AngleStats, CurvatureStats, PointSample, ResidualStats, Stat,
    StructureReport, VerifyOptions,
};

/// Minimum `|p_u ∧ p_v|` accepted as an immersion.
pub const IMMERSION_TOL: f64 = 1e-10;
/// Minimum `EG − F²` accepted by [`fundamental_forms`].
pub const METRIC_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("not an immersion at ({u}, {v}): {detail}")]
    NotImmersed { u: f64, v: f64, detail: String },
    #[error("point ({u}, {v}) has no valid sample")]
    NoSample { u: f64, v: f64 },
    #[error("grid {0}x{1} is smaller than 3x3")]
    GridTooSmall(usize, usize),
    #[error("frame discontinuity at ({u}, {v}): alignment {dot:.3}")]
    FrameDiscontinuity { u: f64, v: f64, dot: f64 },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("no finite sphere fits the patch (rank {rank})")]
    NoFiniteSphere { rank: usize },
    #[error("sphere fit needs at least 5 points, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Position and partial derivatives of a patch at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceJet {
    pub p: Vec4,
    pub p_u: Vec4,
    pub p_v: Vec4,
    pub p_uu: Vec4,
    pub p_uv: Vec4,
    pub p_vv: Vec4,
}

impl SurfaceJet {
    pub fn from_components(c: [Jet2; 4]) -> Self {
        let pick = |f: fn(&Jet2) -> f64| Vec4::new(f(&c[0]), f(&c[1]), f(&c[2]), f(&c[3]));
        SurfaceJet {
            p: pick(|j| j.v),
            p_u: pick(|j| j.du),
            p_v: pick(|j| j.dv),
            p_uu: pick(|j| j.duu),
            p_uv: pick(|j| j.duv),
            p_vv: pick(|j| j.dvv),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.p, self.p_u, self.p_v, self.p_uu, self.p_uv, self.p_vv]
            .iter()
            .all(|x| x.iter().all(|c| c.is_finite()))
    }

    /// Oriented tangent plane spanned by `(p_u, p_v)`.
    pub fn tangent_plane(&self) -> Result<Plane, GeometryError> {
        Plane::from_span(self.p_u, self.p_v)
    }

    pub fn area_element(&self) -> f64 {
        wedge(&self.p_u, &self.p_v).norm()
    }
}

/// Rectangular parameter domain `[u0, u1] × [v0, v1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Domain {
    pub fn new(u0: f64, u1: f64, v0: f64, v1: f64) -> Result<Self, SurfaceError> {
        if !(u0 < u1 && v0 < v1) || ![u0, u1, v0, v1].iter().all(|x| x.is_finite()) {
            return Err(SurfaceError::InvalidDomain(format!(
                "[{u0}, {u1}] x [{v0}, {v1}]"
            )));
        }
        Ok(Domain { u0, u1, v0, v1 })
    }

    pub fn spans(&self) -> (f64, f64) {
        (self.u1 - self.u0, self.v1 - self.v0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JetSource {
    Analytic,
    FiniteDifference,
    Grid,
}

impl fmt::Display for JetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JetSource::Analytic => "analytic",
            JetSource::FiniteDifference => "finite_difference",
            JetSource::Grid => "grid",
        })
    }
}

/// A parametrized surface piece that can report 2-jets.
pub trait SurfacePatch: Send + Sync {
    fn domain(&self) -> Domain;

    fn jet(&self, u: f64, v: f64) -> Result<SurfaceJet, SurfaceError>;

    fn source(&self) -> JetSource;

    /// Steps used to differentiate frames across the patch.
    fn fd_steps(&self) -> (f64, f64) {
        let (su, sv) = self.domain().spans();
        let r = 1e-4f64.max(f64::EPSILON.cbrt());
        (su * r, sv * r)
    }

    /// Nearest parameter point at which [`SurfacePatch::jet`] is defined.
    fn snap(&self, u: f64, v: f64) -> (f64, f64) {
        (u, v)
    }
}

impl<P: SurfacePatch + ?Sized> SurfacePatch for Box<P> {
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn jet(&self, u: f64, v: f64) -> Result<SurfaceJet, SurfaceError> {
        (**self).jet(u, v)
    }
    fn source(&self) -> JetSource {
        (**self).source()
    }
    fn fd_steps(&self) -> (f64, f64) {
        (**self).fd_steps()
    }
    fn snap(&self, u: f64, v: f64) -> (f64, f64) {
        (**self).snap(u, v)
    }
}

impl<P: SurfacePatch + ?Sized> SurfacePatch for Arc<P> {
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn jet(&self, u: f64, v: f64) -> Result<SurfaceJet, SurfaceError> {
        (**self).jet(u, v)
    }
    fn source(&self) -> JetSource {
        (**self).source()
    }
    fn fd_steps(&self) -> (f64, f64) {
        (**self).fd_steps()
    }
    fn snap(&self, u: f64, v: f64) -> (f64, f64) {
        (**self).snap(u, v)
    }
}

pub type JetMap = dyn Fn(Jet2, Jet2) -> [Jet2; 4] + Send + Sync;

/// Closed-form patch whose jets come from forward-mode differentiation.
#[derive(Clone)]
pub struct AnalyticPatch {
    domain: Domain,
    map: Arc<JetMap>,
}

impl AnalyticPatch {
    pub fn new(
        domain: Domain,
        map: impl Fn(Jet2, Jet2) -> [Jet2; 4] + Send + Sync + 'static,
    ) -> Self {
        AnalyticPatch {
            domain,
            map: Arc::new(map),
        }
    }

    pub fn position(&self, u: f64, v: f64) -> Vec4 {
        let c = (self.map)(Jet2::constant(u), Jet2::constant(v));
        Vec4::new(c[0].v, c[1].v, c[2].v, c[3].v)
    }
}

impl fmt::Debug for AnalyticPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticPatch")
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl SurfacePatch for AnalyticPatch {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn jet(&self, u: f64, v: f64) -> Result<SurfaceJet, SurfaceError> {
        let jet = SurfaceJet::from_components((self.map)(Jet2::var_u(u), Jet2::var_v(v)));
        check_jet(jet, u, v)
    }

    fn source(&self) -> JetSource {
        JetSource::Analytic
    }
}

pub type PositionMap = dyn Fn(f64, f64) -> Vec4 + Send + Sync;

/// Patch known only through its position map; jets by central differences.
#[derive(Clone)]
pub struct FdPatch {
    domain: Domain,
    map: Arc<PositionMap>,
}

impl FdPatch {
    pub fn new(domain: Domain, map: impl Fn(f64, f64) -> Vec4 + Send + Sync + 'static) -> Self {
        FdPatch {
            domain,
            map: Arc::new(map),
        }
    }
}

impl fmt::Debug for FdPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FdPatch")
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl SurfacePatch for FdPatch {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn jet(&self, u: f64, v: f64) -> Result<SurfaceJet, SurfaceError> {
        let (su, sv) = self.domain.spans();
        let (h1u, h1v) = (su * f64::EPSILON.cbrt(), sv * f64::EPSILON.cbrt());
        let (h2u, h2v) = (su * f64::EPSILON.powf(0.25), sv * f64::EPSILON.powf(0.25));
        let p = |a: f64, b: f64| (self.map)(a, b);
        let p0 = p(u, v);
        let jet = SurfaceJet {
            p: p0,
            p_u: (p(u + h1u, v) - p(u - h1u, v)) / (2.0 * h1u),
            p_v: (p(u, v + h1v) - p(u, v - h1v)) / (2.0 * h1v),
            p_uu: (p(u + h2u, v) - p0 * 2.0 + p(u - h2u, v)) / (h2u * h2u),
            p_vv: (p(u, v + h2v) - p0 * 2.0 + p(u, v - h2v)) / (h2v * h2v),
            p_uv: (p(u + h2u, v + h2v) - p(u + h2u, v - h2v) - p(u - h2u, v + h2v)
                + p(u - h2u, v - h2v))
                / (4.0 * h2u * h2v),
        };
        check_jet(jet, u, v)
    }

    fn source(&self) -> JetSource {
        JetSource::FiniteDifference
    }
}

pub(crate) fn check_jet(jet: SurfaceJet, u: f64, v: f64) -> Result<SurfaceJet, SurfaceError> {
    if !jet.is_finite() {
        return Err(SurfaceError::NotImmersed {
            u,
            v,
            detail: "non-finite jet".into(),
        });
    }
    let a = jet.area_element();
    if a <= IMMERSION_TOL {
        return Err(SurfaceError::NotImmersed {
            u,
            v,
            detail: format!("|p_u ^ p_v| = {a:e}"),
        });
    }
    Ok(jet)
}

/// First fundamental form and the vector-valued second fundamental form in
/// the coordinate basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalForms {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub alpha_11: Vec4,
    pub alpha_12: Vec4,
    pub alpha_22: Vec4,
}

impl FundamentalForms {
    pub fn det(&self) -> f64 {
        self.e * self.g - self.f * self.f
    }

    /// `α(X, Y)` for tangent vectors given by coordinates in `(p_u, p_v)`.
    pub fn alpha(&self, x: [f64; 2], y: [f64; 2]) -> Vec4 {
        self.alpha_11 * (x[0] * y[0])
            + self.alpha_12 * (x[0] * y[1] + x[1] * y[0])
            + self.alpha_22 * (x[1] * y[1])
    }

    /// Gauss equation: `(⟨α11, α22⟩ − |α12|²) / (EG − F²)`.
    pub fn gauss_curvature(&self) -> f64 {
        (self.alpha_11.dot(&self.alpha_22) - self.alpha_12.norm_squared()) / self.det()
    }
}

/// Coordinates `(a, b)` of a tangent vector `t = a·p_u + b·p_v`.
pub fn tangent_coords(jet: &SurfaceJet, t: &Vec4) -> [f64; 2] {
    let (e, f, g) = (
        jet.p_u.dot(&jet.p_u),
        jet.p_u.dot(&jet.p_v),
        jet.p_v.dot(&jet.p_v),
    );
    let (r1, r2) = (t.dot(&jet.p_u), t.dot(&jet.p_v));
    let det = e * g - f * f;
    [(g * r1 - f * r2) / det, (e * r2 - f * r1) / det]
}

pub fn fundamental_forms(jet: &SurfaceJet) -> Result<FundamentalForms, SurfaceError> {
    let (e, f, g) = (
        jet.p_u.dot(&jet.p_u),
        jet.p_u.dot(&jet.p_v),
        jet.p_v.dot(&jet.p_v),
    );
    let det = e * g - f * f;
    if !(det > METRIC_TOL) {
        return Err(SurfaceError::NotImmersed {
            u: f64::NAN,
            v: f64::NAN,
            detail: format!("EG - F^2 = {det:e}"),
        });
    }
    let tp = jet.tangent_plane()?;
    let normal = |x: Vec4| {
        let mut n = x - tp.project(&x);
        n -= tp.project(&n);
        n
    };
    Ok(FundamentalForms {
        e,
        f,
        g,
        alpha_11: normal(jet.p_uu),
        alpha_12: normal(jet.p_uv),
        alpha_22: normal(jet.p_vv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clifford() -> AnalyticPatch {
        AnalyticPatch::new(Domain::new(-1.0, 1.0, -1.0, 1.0).unwrap(), |u, v| {
            [u.cos(), u.sin(), v.cos(), v.sin()]
        })
    }

    #[test]
    fn flat_graph_forms() {
        let jet = SurfaceJet {
            p: Vec4::zeros(),
            p_u: Vec4::x(),
            p_v: Vec4::y(),
            p_uu: Vec4::zeros(),
            p_uv: Vec4::zeros(),
            p_vv: Vec4::zeros(),
        };
        let ff = fundamental_forms(&jet).unwrap();
        assert_eq!((ff.e, ff.f, ff.g), (1.0, 0.0, 1.0));
        assert_eq!(ff.alpha_11, Vec4::zeros());
        assert_eq!(ff.gauss_curvature(), 0.0);
    }

    #[test]
    fn clifford_torus_forms_at_origin() {
        let ff = fundamental_forms(&clifford().jet(0.0, 0.0).unwrap()).unwrap();
        assert_eq!((ff.e, ff.f, ff.g), (1.0, 0.0, 1.0));
        assert!((ff.alpha_11 - Vec4::new(-1.0, 0.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((ff.alpha_22 - Vec4::new(0.0, 0.0, -1.0, 0.0)).norm() < 1e-15);
        assert!(ff.alpha_12.norm() < 1e-15);
    }

    #[test]
    fn graph_xy_metric_at_origin() {
        let patch = AnalyticPatch::new(Domain::new(-1.0, 1.0, -1.0, 1.0).unwrap(), |x, y| {
            [x, y, x * y, Jet2::constant(0.0)]
        });
        let ff = fundamental_forms(&patch.jet(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(ff.e, 1.0);
        assert!((ff.alpha_12 - Vec4::new(0.0, 0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn fd_patch_matches_analytic() {
        let a = clifford();
        let fd = FdPatch::new(a.domain(), |u, v| {
            Vec4::new(u.cos(), u.sin(), v.cos(), v.sin())
        });
        let (ja, jf) = (a.jet(0.3, -0.2).unwrap(), fd.jet(0.3, -0.2).unwrap());
        assert!((ja.p_u - jf.p_u).norm() < 1e-9);
        assert!((ja.p_uu - jf.p_uu).norm() < 1e-6);
        assert!((ja.p_uv - jf.p_uv).norm() < 1e-6);
    }

    #[test]
    fn rejects_degenerate_jet() {
        let patch = AnalyticPatch::new(Domain::new(-1.0, 1.0, -1.0, 1.0).unwrap(), |u, _| {
            [u, u, Jet2::constant(0.0), Jet2::constant(0.0)]
        });
        assert!(matches!(
            patch.jet(0.0, 0.0),
            Err(SurfaceError::NotImmersed { .. })
        ));
    }
}
