//! Closed-form surfaces with exact jets, used as ground truth.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grassmann::{
    orthogonal_complement, principal_angles, GeometryError, Plane, PrincipalAngles, Vec4,
};
use crate::jet::Jet2;
use crate::surface::{AnalyticPatch, Domain, SurfaceError, SurfacePatch};

/// Tolerance of the constant-angle precondition on orbit generators.
pub const CURVE_ANGLE_TOL: f64 = 1e-9;
const CURVE_SAMPLES: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown example {0:?}")]
    UnknownExample(String),
    #[error(
        "curve angle with the fixed plane varies: {angle} at s = {s}, {reference} at s = {s0}"
    )]
    ConstantAngleViolated {
        s: f64,
        angle: f64,
        s0: f64,
        reference: f64,
    },
    #[error("generating curve lies in the fixed plane")]
    CurveInFixedPlane,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Monomial `coef·x^i·y^j`, serialized as `[coef, i, j]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, u32, u32)", into = "(f64, u32, u32)")]
pub struct Monomial {
    pub coef: f64,
    pub px: u32,
    pub py: u32,
}

impl From<(f64, u32, u32)> for Monomial {
    fn from((coef, px, py): (f64, u32, u32)) -> Self {
        Monomial { coef, px, py }
    }
}

impl From<Monomial> for (f64, u32, u32) {
    fn from(m: Monomial) -> Self {
        (m.coef, m.px, m.py)
    }
}

fn poly(terms: &[Monomial], x: Jet2, y: Jet2) -> Jet2 {
    terms.iter().fold(Jet2::constant(0.0), |acc, m| {
        acc + x.powi(m.px as i32) * y.powi(m.py as i32) * m.coef
    })
}

/// Generating curves for orbit surfaces. Each lies in the half-hyperplane
/// spanned by the fixed plane `span(e3, e4)` and `e1`, so rotation in
/// `span(e1, e2)` sweeps out the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "curve", rename_all = "snake_case")]
pub enum OrbitCurve {
    /// Straight line making angle `angle` with the fixed plane, at distance
    /// `offset` from it when `s = 0`.
    Line { angle: f64, offset: f64 },
    /// Circular helix of radius `a` in the fixed plane advancing `b` per
    /// radian along `e1`.
    CircularHelix { a: f64, b: f64, offset: f64 },
    /// Helix on the sphere of radius `radius` whose tangent makes angle
    /// `beta` with the `e1` axis at its equator crossing.
    SphericalHelix { radius: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CatalogSpec {
    CliffordTorus {
        r1: f64,
        r2: f64,
    },
    ProductCircles {
        r1: f64,
        r2: f64,
    },
    /// `γ × R` with `γ` a circular helix of radius `radius` whose tangent
    /// makes angle `slope` with its axis `e3`; pitch is `2π·radius·cot(slope)`.
    ProductHelixCylinder {
        radius: f64,
        slope: f64,
    },
    RevolutionOrbit {
        curve: OrbitCurve,
    },
    Plane {
        b1: [f64; 4],
        b2: [f64; 4],
    },
    GraphPoly {
        f: Vec<Monomial>,
        g: Vec<Monomial>,
    },
    RoundSphere {
        r: f64,
    },
}

impl CatalogSpec {
    pub const NAMES: [&'static str; 10] = [
        "clifford_torus",
        "product_circles",
        "helix_cylinder",
        "orbit_line",
        "orbit_helix",
        "spherical_orbit",
        "plane",
        "tilted_plane",
        "graph_poly",
        "round_sphere",
    ];

    /// Default parameters for each named example.
    pub fn named(name: &str) -> Result<CatalogSpec, CatalogError> {
        use CatalogSpec::*;
        Ok(match name {
            "clifford_torus" => CliffordTorus { r1: 1.0, r2: 1.0 },
            "product_circles" => ProductCircles { r1: 2.0, r2: 0.5 },
            "helix_cylinder" | "product_helix_cylinder" => ProductHelixCylinder {
                radius: 1.0,
                slope: PI / 5.0,
            },
            "orbit_line" => RevolutionOrbit {
                curve: OrbitCurve::Line {
                    angle: 0.7,
                    offset: 1.0,
                },
            },
            "orbit_helix" => RevolutionOrbit {
                curve: OrbitCurve::CircularHelix {
                    a: 1.0,
                    b: 0.4,
                    offset: 2.0,
                },
            },
            "spherical_orbit" | "revolution_orbit" => RevolutionOrbit {
                curve: OrbitCurve::SphericalHelix {
                    radius: 1.0,
                    beta: 0.6,
                },
            },
            "plane" => Plane {
                b1: [1.0, 0.0, 0.0, 0.0],
                b2: [0.0, 1.0, 0.0, 0.0],
            },
            "tilted_plane" => Plane {
                b1: [1.0, 0.0, 1.0, 0.0],
                b2: [0.0, 1.0, 0.0, 3.0],
            },
            "graph_poly" => GraphPoly {
                f: vec![(0.3, 2, 0).into(), (0.5, 1, 1).into(), (-0.2, 0, 3).into()],
                g: vec![(0.4, 0, 2).into(), (-0.25, 3, 0).into(), (0.1, 1, 2).into()],
            },
            "round_sphere" => RoundSphere { r: 1.0 },
            other => return Err(CatalogError::UnknownExample(other.to_string())),
        })
    }
}

/// A generated example: patch, reference plane, and the angles it should
/// have with respect to that plane (absent for non-helix controls).
#[derive(Debug, Clone)]
pub struct CatalogSurface {
    pub spec: CatalogSpec,
    pub patch: AnalyticPatch,
    pub pi: Plane,
    pub expected: Option<PrincipalAngles>,
    /// For orbits, the largest tangential acceleration of the generator
    /// normal to its own velocity.
    pub geodesic_defect: Option<f64>,
}

fn positive(name: &str, x: f64) -> Result<f64, CatalogError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(CatalogError::InvalidParameter(format!(
            "{name} must be positive, got {x}"
        )))
    }
}

pub fn generate(spec: &CatalogSpec) -> Result<CatalogSurface, CatalogError> {
    let c = |x: f64| Jet2::constant(x);
    let out = |patch, pi, expected| CatalogSurface {
        spec: spec.clone(),
        patch,
        pi,
        expected,
        geodesic_defect: None,
    };
    match *spec {
        CatalogSpec::CliffordTorus { r1, r2 } | CatalogSpec::ProductCircles { r1, r2 } => {
            let (r1, r2) = (positive("r1", r1)?, positive("r2", r2)?);
            let patch = AnalyticPatch::new(Domain::new(0.0, TAU, 0.0, TAU)?, move |u, v| {
                [u.cos() * r1, u.sin() * r1, v.cos() * r2, v.sin() * r2]
            });
            let pi = match spec {
                CatalogSpec::CliffordTorus { .. } => Plane::coordinate(0, 1),
                _ => Plane::coordinate(2, 3),
            };
            Ok(out(patch, pi, PrincipalAngles::new(0.0, FRAC_PI_2)))
        }
        CatalogSpec::ProductHelixCylinder { radius, slope } => {
            let a = positive("radius", radius)?;
            if !(slope > 0.0 && slope < FRAC_PI_2) {
                return Err(CatalogError::InvalidParameter(format!(
                    "slope must lie in (0, pi/2), got {slope}"
                )));
            }
            let b = a / slope.tan();
            let patch = AnalyticPatch::new(Domain::new(0.0, TAU, -1.0, 1.0)?, move |s, t| {
                [s.cos() * a, s.sin() * a, s * b, t]
            });
            Ok(out(
                patch,
                Plane::coordinate(2, 3),
                PrincipalAngles::new(0.0, slope),
            ))
        }
        CatalogSpec::RevolutionOrbit { curve } => revolution_orbit(spec, curve),
        CatalogSpec::Plane { b1, b2 } => {
            let frame = Plane::from_span(Vec4::from(b1), Vec4::from(b2))?;
            let (f1, f2) = (frame.b1(), frame.b2());
            let patch = AnalyticPatch::new(Domain::new(-1.0, 1.0, -1.0, 1.0)?, move |u, v| {
                std::array::from_fn(|k| u * f1[k] + v * f2[k])
            });
            let pi = Plane::coordinate(0, 1);
            let expected = principal_angles(&frame, &pi)?;
            Ok(out(patch, pi, Some(expected)))
        }
        CatalogSpec::GraphPoly { ref f, ref g } => {
            let (f, g) = (f.clone(), g.clone());
            let patch = AnalyticPatch::new(Domain::new(-0.5, 0.5, -0.5, 0.5)?, move |x, y| {
                [x, y, poly(&f, x, y), poly(&g, x, y)]
            });
            Ok(out(patch, Plane::coordinate(0, 1), None))
        }
        CatalogSpec::RoundSphere { r } => {
            let r = positive("r", r)?;
            let patch = AnalyticPatch::new(Domain::new(-0.6, 0.6, 0.0, 1.2)?, move |u, v| {
                [
                    u.cos() * v.cos() * r,
                    u.cos() * v.sin() * r,
                    u.sin() * r,
                    c(0.0),
                ]
            });
            Ok(out(patch, Plane::coordinate(0, 1), None))
        }
    }
}

type Generator = Box<dyn Fn(Jet2) -> [Jet2; 4] + Send + Sync>;

fn revolution_orbit(spec: &CatalogSpec, curve: OrbitCurve) -> Result<CatalogSurface, CatalogError> {
    let fixed = Plane::coordinate(2, 3);
    let c = |x: f64| Jet2::constant(x);
    let (gamma, s0, s1): (Generator, f64, f64) = match curve {
        OrbitCurve::Line { angle, offset } => {
            if !(angle > 0.0 && angle < FRAC_PI_2) {
                return Err(CatalogError::InvalidParameter(format!(
                    "angle {angle} not in (0, pi/2)"
                )));
            }
            let offset = positive("offset", offset)?;
            let (ca, sa) = (angle.cos(), angle.sin());
            (
                Box::new(move |s| [s * sa + offset, c(0.0), s * ca, c(0.0)]),
                -0.5 * offset,
                0.5 * offset,
            )
        }
        OrbitCurve::CircularHelix { a, b, offset } => {
            let (a, b, offset) = (
                positive("a", a)?,
                positive("b", b)?,
                positive("offset", offset)?,
            );
            (
                Box::new(move |s| [s * b + offset, c(0.0), s.cos() * a, s.sin() * a]),
                0.0,
                PI,
            )
        }
        OrbitCurve::SphericalHelix { radius, beta } => {
            let r = positive("radius", radius)?;
            if !(beta > 0.0 && beta < FRAC_PI_2) {
                return Err(CatalogError::InvalidParameter(format!(
                    "beta {beta} not in (0, pi/2)"
                )));
            }
            let (sb, cb) = (beta.sin(), beta.cos());
            let g = move |u: Jet2| {
                let z = u.sin() * (r * sb);
                let rho = (z * z * -1.0 + r * r).sqrt();
                let phi = (u - (u.sin() * cb).atan2(u.cos()) * cb) / cb;
                [z, c(0.0), rho * phi.cos(), rho * phi.sin()]
            };
            (Box::new(g), 0.2, 1.2)
        }
    };
    let orbit = orbit_surface(gamma, (s0, s1), (0.0, 1.5), &fixed)?;
    let rotation_plane = orthogonal_complement(&fixed);
    let mid = orbit.patch.jet(0.5 * (s0 + s1), 0.75)?;
    let expected = principal_angles(&mid.tangent_plane()?, &rotation_plane)?;
    Ok(CatalogSurface {
        spec: spec.clone(),
        patch: orbit.patch,
        pi: rotation_plane,
        expected: Some(expected),
        geodesic_defect: Some(orbit.geodesic_defect),
    })
}

/// Orbit surface together with the checks performed on its generator.
#[derive(Debug, Clone)]
pub struct OrbitSurface {
    pub patch: AnalyticPatch,
    /// Constant angle between the generator's tangent and the fixed plane.
    pub curve_angle: f64,
    pub geodesic_defect: f64,
}

/// Sweeps `gamma` by the rotations that fix `fixed` pointwise:
/// `(s, φ) ↦ R_φ γ(s)`.
///
/// The generator must make a constant angle with `fixed`; this is checked
/// at ten sample points to within [`CURVE_ANGLE_TOL`].
pub fn orbit_surface(
    gamma: impl Fn(Jet2) -> [Jet2; 4] + Send + Sync + 'static,
    (s0, s1): (f64, f64),
    (phi0, phi1): (f64, f64),
    fixed: &Plane,
) -> Result<OrbitSurface, CatalogError> {
    let perp = orthogonal_complement(fixed);
    let (b1, b2, c1, c2) = (fixed.b1(), fixed.b2(), perp.b1(), perp.b2());
    let tangent = |s: f64| {
        let g = gamma(Jet2::var_u(s));
        (
            Vec4::new(g[0].v, g[1].v, g[2].v, g[3].v),
            Vec4::new(g[0].du, g[1].du, g[2].du, g[3].du),
            Vec4::new(g[0].duu, g[1].duu, g[2].duu, g[3].duu),
        )
    };
    let mut angles = Vec::with_capacity(CURVE_SAMPLES);
    let mut off_plane: f64 = 0.0;
    let mut geodesic_defect: f64 = 0.0;
    for k in 0..CURVE_SAMPLES {
        let s = s0 + (s1 - s0) * k as f64 / (CURVE_SAMPLES - 1) as f64;
        let (p, d, dd) = tangent(s);
        let n = d.norm();
        if !(n > 0.0) {
            return Err(CatalogError::InvalidParameter(format!(
                "generator is singular at s = {s}"
            )));
        }
        let cos = fixed.project(&d).norm() / n;
        let sin = (d - fixed.project(&d)).norm() / n;
        angles.push((s, sin.atan2(cos)));
        off_plane = off_plane.max((p - fixed.project(&p)).norm());
        let acc_perp = dd - d * (dd.dot(&d) / (n * n));
        // the rotation direction at φ = 0 is the only other tangent direction
        let k_dir = c2 * p.dot(&c1) - c1 * p.dot(&c2);
        if k_dir.norm() > 0.0 {
            let kn = k_dir / k_dir.norm();
            let tang = kn * acc_perp.dot(&kn);
            geodesic_defect = geodesic_defect.max(tang.norm() / (n * n));
        }
    }
    if off_plane < 1e-12 {
        return Err(CatalogError::CurveInFixedPlane);
    }
    let (sr, reference) = angles[0];
    for &(s, angle) in &angles[1..] {
        if (angle - reference).abs() > CURVE_ANGLE_TOL {
            return Err(CatalogError::ConstantAngleViolated {
                s,
                angle,
                s0: sr,
                reference,
            });
        }
    }
    let patch = AnalyticPatch::new(Domain::new(s0, s1, phi0, phi1)?, move |s, phi| {
        let g = gamma(s);
        let at = |w: &Vec4| g[0] * w[0] + g[1] * w[1] + g[2] * w[2] + g[3] * w[3];
        let (a1, a2, p, q) = (at(&b1), at(&b2), at(&c1), at(&c2));
        let (cp, sp) = (phi.cos(), phi.sin());
        let x = p * cp - q * sp;
        let y = p * sp + q * cp;
        std::array::from_fn(|k| a1 * b1[k] + a2 * b2[k] + x * c1[k] + y * c2[k])
    });
    Ok(OrbitSurface {
        patch,
        curve_angle: reference,
        geodesic_defect,
    })
}
