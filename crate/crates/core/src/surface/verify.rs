use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grassmann::{gauss_point, hodge, GaussPoint, Plane, Vec4};

use super::fields::{evaluate_point, PointGeometry, StructureFields};
use super::frame::{adapted_frame, AdaptedFrame};
use super::sphere::{fit_sphere, SphereFit};
use super::{JetSource, SurfaceError, SurfacePatch};

/// Angle gate for analytic jets.
pub const ANALYTIC_GATE: f64 = 1e-8;
/// Sphere-fit defect below which a patch counts as spherical.
pub const SPHERE_TOL: f64 = 1e-6;
/// Threshold for "zero" angles and non-vanishing shape entries.
const ANGLE_ZERO: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub grid: (usize, usize),
    /// Maximum angle standard deviation for the helix verdict; defaults to
    /// 1e-8 for analytic jets and `5·h²` otherwise.
    pub angle_gate: Option<f64>,
    /// Frame differentiation steps; defaults to [`SurfacePatch::fd_steps`].
    pub fd_steps: Option<(f64, f64)>,
    pub keep_samples: bool,
}

impl VerifyOptions {
    pub fn new(n: usize, m: usize) -> Self {
        VerifyOptions {
            grid: (n, m),
            angle_gate: None,
            fd_steps: None,
            keep_samples: true,
        }
    }
}

/// Summary statistics of a sampled quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Stat {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub max_abs: f64,
    pub rms: f64,
}

impl Stat {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Stat {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len();
        if n == 0 {
            return Stat::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        Stat {
            count: n,
            mean,
            std: var.sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            max_abs: xs.iter().map(|x| x.abs()).fold(0.0, f64::max),
            rms: (xs.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleStats {
    pub theta1: Stat,
    pub theta2: Stat,
    pub alpha_plus: Stat,
    pub alpha_minus: Stat,
    /// `⟨η⁺(p), η⁺(Π)⟩` over the grid; constant on a helix surface.
    pub gauss_circle_plus: Stat,
    pub gauss_circle_minus: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureStats {
    /// Gauss curvature from the Gauss equation.
    pub gauss: Stat,
    /// Normal curvature from the Ricci equation.
    pub normal: Stat,
    /// Gauss curvature from the metric alone.
    pub brioschi: Stat,
    pub brioschi_gap: Stat,
}

/// Residuals as absolute values; `max_abs` and `rms` are the headline numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub tangential: Stat,
    pub normal: Stat,
    pub codazzi: [Stat; 4],
    pub alpha12: Stat,
    pub alpha_off_diagonal: Stat,
    pub parallel_h: [Stat; 2],
    pub dependence: Option<Stat>,
    pub alpha_theta: Stat,
    /// `|cos θ2·df − dt|`, `|tan θ2·dn − dλ1|`, `|dt(T2)|` when `θ1 = 0`.
    pub zero_angle: Option<[Stat; 3]>,
    pub sphere_system: Option<Stat>,
    pub frame_orthonormality: Stat,
    pub plane_identity: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub u: f64,
    pub v: f64,
    pub p: [f64; 4],
    pub theta1: f64,
    pub theta2: f64,
    pub gauss_curvature: f64,
    pub normal_curvature: f64,
    pub brioschi_curvature: f64,
    pub cos_theta: f64,
    pub cos_theta_perp: f64,
    pub cos_alpha_plus: f64,
    pub cos_alpha_minus: f64,
    pub fields: StructureFields,
    pub structure_residual: f64,
    pub codazzi_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub grid: [usize; 2],
    pub source: JetSource,
    pub reference_plane: Plane,
    pub fd_steps: [f64; 2],
    pub angle_gate: f64,
    pub is_helix: bool,
    pub valid_points: usize,
    pub invalid_points: usize,
    pub degenerate_points: usize,
    pub angles: AngleStats,
    pub curvature: CurvatureStats,
    pub residuals: ResidualStats,
    pub sphere: Option<SphereFit>,
    /// For a spherical helix patch: whether `θ1 = 0` or `θ2 = π/2` holds.
    pub sphere_dichotomy: Option<bool>,
    pub samples: Vec<PointSample>,
}

impl StructureReport {
    pub fn angle_std(&self) -> f64 {
        self.angles.theta1.std.max(self.angles.theta2.std)
    }

    pub fn codazzi_max(&self) -> f64 {
        self.residuals
            .codazzi
            .iter()
            .map(|s| s.max_abs)
            .fold(0.0, f64::max)
    }

    pub fn parallel_h_max(&self) -> f64 {
        self.residuals.parallel_h[0]
            .max_abs
            .max(self.residuals.parallel_h[1].max_abs)
    }
}

struct Eval {
    geo: PointGeometry,
    gp: GaussPoint,
    cos_theta: f64,
    cos_theta_perp: f64,
}

/// Residuals of the parallel mean curvature equations
/// `dm2 + m1·dn = 0` and `dm1 − m2·dn = 0`, maximized over samples and over
/// the arguments `T1`, `T2`.
pub fn parallel_h_test(report: &StructureReport) -> (f64, f64) {
    let mut r = (0.0f64, 0.0f64);
    for s in &report.samples {
        let (a, b) = parallel_h_pair(&s.fields);
        r.0 = r.0.max(a);
        r.1 = r.1.max(b);
    }
    r
}

fn parallel_h_pair(f: &StructureFields) -> (f64, f64) {
    let a = (f.dm2_t1 + f.m1 * f.dn_t1)
        .abs()
        .max((f.dm2_t2 + f.m1 * f.dn_t2).abs());
    let b = (f.dm1_t1 - f.m2 * f.dn_t1)
        .abs()
        .max((f.dm1_t2 - f.m2 * f.dn_t2).abs());
    (a, b)
}

/// Samples a patch on a grid and checks it against the helix structure
/// equations relative to `pi`.
pub fn verify_helix(
    patch: &dyn SurfacePatch,
    pi: &Plane,
    opts: &VerifyOptions,
) -> Result<StructureReport, SurfaceError> {
    let (n, m) = opts.grid;
    if n < 3 || m < 3 {
        return Err(SurfaceError::GridTooSmall(n, m));
    }
    let (hu, hv) = opts.fd_steps.unwrap_or_else(|| patch.fd_steps());
    let d = patch.domain();
    let (ua, ub) = (d.u0 + hu, d.u1 - hu);
    let (va, vb) = (d.v0 + hv, d.v1 - hv);
    let coord = |i: usize, j: usize| {
        let u = ua + (ub - ua) * i as f64 / (n - 1) as f64;
        let v = va + (vb - va) * j as f64 / (m - 1) as f64;
        patch.snap(u, v)
    };

    // Frame selection is sequential so every frame follows its neighbour.
    let mut frames: Vec<Option<(f64, f64, super::SurfaceJet, AdaptedFrame)>> = vec![None; n * m];
    let mut last: Option<AdaptedFrame> = None;
    for j in 0..m {
        for i in 0..n {
            let (u, v) = coord(i, j);
            let prev = if i > 0 {
                frames[j * n + i - 1].map(|f| f.3)
            } else {
                None
            }
            .or_else(|| {
                if j > 0 {
                    frames[(j - 1) * n].map(|f| f.3)
                } else {
                    None
                }
            })
            .or(last);
            let Ok(jet) = patch.jet(u, v) else { continue };
            let Ok(frame) = adapted_frame(&jet, pi, prev.as_ref()) else {
                continue;
            };
            last = Some(frame);
            frames[j * n + i] = Some((u, v, jet, frame));
        }
    }

    let gp0 = gauss_point(pi);
    let eta0 = pi.bivector();
    let star0 = hodge(&eta0);
    let evals: Vec<Option<Eval>> = frames
        .par_iter()
        .map(|slot| {
            let (u, v, jet, frame) = (*slot)?;
            let geo = evaluate_point(patch, pi, (u, v), (hu, hv), jet, frame).ok()?;
            let tp = jet.tangent_plane().ok()?;
            let eta = tp.bivector();
            Some(Eval {
                geo,
                gp: gauss_point(&tp),
                cos_theta: eta.dot(&eta0),
                cos_theta_perp: eta.dot(&star0),
            })
        })
        .collect();
    let evals: Vec<Eval> = evals.into_iter().flatten().collect();
    if evals.is_empty() {
        let (u, v) = coord(n / 2, m / 2);
        return Err(SurfaceError::NoSample { u, v });
    }

    let gate = opts.angle_gate.unwrap_or(match patch.source() {
        JetSource::Analytic => ANALYTIC_GATE,
        _ => 5.0 * hu.max(hv).powi(2),
    });
    let theta1 = Stat::of(evals.iter().map(|e| e.geo.frame.theta1));
    let theta2 = Stat::of(evals.iter().map(|e| e.geo.frame.theta2));
    let is_helix = theta1.std < gate && theta2.std < gate;

    let cos_alphas: Vec<(f64, f64)> = evals.iter().map(|e| e.gp.cos_alphas(&gp0)).collect();
    let angles = AngleStats {
        theta1,
        theta2,
        alpha_plus: Stat::of(cos_alphas.iter().map(|c| c.0.clamp(-1.0, 1.0).acos())),
        alpha_minus: Stat::of(cos_alphas.iter().map(|c| c.1.clamp(-1.0, 1.0).acos())),
        gauss_circle_plus: Stat::of(evals.iter().map(|e| e.gp.plus_dot(&gp0))),
        gauss_circle_minus: Stat::of(evals.iter().map(|e| e.gp.minus_dot(&gp0))),
    };

    let curvature = CurvatureStats {
        gauss: Stat::of(evals.iter().map(|e| e.geo.gauss_curvature)),
        normal: Stat::of(evals.iter().map(|e| e.geo.normal_curvature)),
        brioschi: Stat::of(evals.iter().map(|e| e.geo.brioschi_curvature)),
        brioschi_gap: Stat::of(
            evals
                .iter()
                .map(|e| (e.geo.gauss_curvature - e.geo.brioschi_curvature).abs()),
        ),
    };

    let per_point: Vec<PointResiduals> = evals.iter().map(|e| point_residuals(&e.geo)).collect();
    let mean_t1 = angles.theta1.mean;
    let mean_t2 = angles.theta2.mean;
    let zero_case = mean_t1 < ANGLE_ZERO && mean_t2.cos() > ANGLE_ZERO && mean_t2 > ANGLE_ZERO;

    let points: Vec<Vec4> = evals.iter().map(|e| e.geo.jet.p).collect();
    let sphere = fit_sphere(&points).ok();
    let sphere_system = sphere.filter(|s| s.defect < SPHERE_TOL).and_then(|s| {
        let c = s.center_vec();
        let xs: Vec<f64> = evals
            .iter()
            .filter(|e| e.geo.fields.m1.abs() > ANGLE_ZERO && e.geo.fields.m2.abs() > ANGLE_ZERO)
            .map(|e| {
                let xi = (c - e.geo.jet.p) / s.radius;
                let fr = &e.geo.frame;
                let f = &e.geo.fields;
                let delta = 1.0 / s.radius;
                (f.m1 * xi.dot(&fr.xi1) - delta)
                    .abs()
                    .max((f.m2 * xi.dot(&fr.xi2) - delta).abs())
            })
            .collect();
        (!xs.is_empty()).then(|| Stat::of(xs))
    });
    let sphere_dichotomy = sphere
        .filter(|s| is_helix && s.defect < SPHERE_TOL)
        .map(|_| mean_t1 < ANGLE_ZERO || (std::f64::consts::FRAC_PI_2 - mean_t2) < ANGLE_ZERO);

    let residuals = ResidualStats {
        tangential: Stat::of(per_point.iter().map(|r| r.tangential)),
        normal: Stat::of(per_point.iter().map(|r| r.normal)),
        codazzi: std::array::from_fn(|k| Stat::of(per_point.iter().map(|r| r.codazzi[k]))),
        alpha12: Stat::of(evals.iter().map(|e| e.geo.alpha12)),
        alpha_off_diagonal: Stat::of(evals.iter().map(|e| e.geo.alpha_off_diagonal)),
        parallel_h: [
            Stat::of(evals.iter().map(|e| parallel_h_pair(&e.geo.fields).0)),
            Stat::of(evals.iter().map(|e| parallel_h_pair(&e.geo.fields).1)),
        ],
        dependence: per_point
            .iter()
            .all(|r| r.dependence.is_some())
            .then(|| Stat::of(per_point.iter().filter_map(|r| r.dependence))),
        alpha_theta: Stat::of(evals.iter().zip(&cos_alphas).map(|(e, c)| {
            (c.0 - (e.cos_theta + e.cos_theta_perp))
                .abs()
                .max((c.1 - (e.cos_theta - e.cos_theta_perp)).abs())
        })),
        zero_angle: zero_case.then(|| {
            std::array::from_fn(|k| Stat::of(evals.iter().map(|e| zero_angle_residual(&e.geo)[k])))
        }),
        sphere_system,
        frame_orthonormality: Stat::of(evals.iter().map(|e| e.geo.frame.orthonormality_defect())),
        plane_identity: Stat::of(evals.iter().map(|e| e.geo.frame.plane_identity_defect())),
    };

    let samples = if opts.keep_samples {
        evals
            .iter()
            .zip(&cos_alphas)
            .zip(&per_point)
            .map(|((e, c), r)| PointSample {
                u: e.geo.u,
                v: e.geo.v,
                p: e.geo.jet.p.into(),
                theta1: e.geo.frame.theta1,
                theta2: e.geo.frame.theta2,
                gauss_curvature: e.geo.gauss_curvature,
                normal_curvature: e.geo.normal_curvature,
                brioschi_curvature: e.geo.brioschi_curvature,
                cos_theta: e.cos_theta,
                cos_theta_perp: e.cos_theta_perp,
                cos_alpha_plus: c.0,
                cos_alpha_minus: c.1,
                fields: e.geo.fields,
                structure_residual: r.tangential.max(r.normal),
                codazzi_residual: r.codazzi.iter().copied().fold(0.0, f64::max),
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(StructureReport {
        grid: [n, m],
        source: patch.source(),
        reference_plane: pi.clone(),
        fd_steps: [hu, hv],
        angle_gate: gate,
        is_helix,
        valid_points: evals.len(),
        invalid_points: n * m - evals.len(),
        degenerate_points: evals.iter().filter(|e| e.geo.frame.degenerate).count(),
        angles,
        curvature,
        residuals,
        sphere,
        sphere_dichotomy,
        samples,
    })
}

struct PointResiduals {
    tangential: f64,
    normal: f64,
    codazzi: [f64; 4],
    dependence: Option<f64>,
}

fn point_residuals(g: &PointGeometry) -> PointResiduals {
    let f = &g.fields;
    let (c1, s1) = (g.frame.theta1.cos(), g.frame.theta1.sin());
    let (c2, s2) = (g.frame.theta2.cos(), g.frame.theta2.sin());
    // X = T1 then X = T2: (⟨X,T1⟩, ⟨X,T2⟩, dt(X), dn(X), df(X))
    let args = [
        (1.0, 0.0, f.dt_t1, f.dn_t1, f.df_t1),
        (0.0, 1.0, f.dt_t2, f.dn_t2, f.df_t2),
    ];
    let mut tangential: f64 = 0.0;
    let mut normal: f64 = 0.0;
    let mut dependence: Option<f64> = f.a_const.map(|_| 0.0);
    for (x1, x2, dt, dn, df) in args {
        tangential = tangential
            .max((c2 * df - c1 * dt + s1 * x2 * f.m1).abs())
            .max((-c1 * df + c2 * dt + s2 * x1 * f.m2).abs());
        normal = normal
            .max((s2 * df - c1 * x1 * f.m2 - s1 * dn).abs())
            .max((-s1 * df - c2 * x2 * f.m1 + s2 * dn).abs());
        if let (Some(a), Some(b), Some(d)) = (f.a_const, f.b_const, dependence.as_mut()) {
            *d = d.max((dt - a * f.m1 * x2 - b * f.m2 * x1).abs());
        }
    }
    let codazzi = [
        (f.m1 * f.dt_t2 + f.dm1_t1).abs(),
        (f.m1 * f.dt_t1 - f.m2 * f.dn_t2).abs(),
        (f.m2 * f.dt_t1 - f.dm2_t2).abs(),
        (f.m2 * f.dt_t2 - f.m1 * f.dn_t1).abs(),
    ];
    PointResiduals {
        tangential,
        normal,
        codazzi,
        dependence,
    }
}

fn zero_angle_residual(g: &PointGeometry) -> [f64; 3] {
    let f = &g.fields;
    let (c2, t2) = (g.frame.theta2.cos(), g.frame.theta2.tan());
    let a = (c2 * f.df_t1 - f.dt_t1)
        .abs()
        .max((c2 * f.df_t2 - f.dt_t2).abs());
    // dλ1(X) = m1⟨X, T2⟩
    let b = (t2 * f.dn_t1).abs().max((t2 * f.dn_t2 - f.m1).abs());
    [a, b, f.dt_t2.abs()]
}
