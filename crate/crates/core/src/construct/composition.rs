use std::f64::consts::FRAC_PI_2;

use nalgebra::Matrix4x3;
use serde::{Deserialize, Serialize};

use crate::grassmann::Plane;
use crate::surface::{fundamental_forms, verify_helix, JetSource, SurfacePatch, VerifyOptions};

use super::graph::{RANK_RATIO, RANK_ZERO};
use super::ConstructError;

/// Angle distance from `0`, `π/2` or each other that still counts as generic.
pub const GENERIC_TOL: f64 = 1e-6;
/// Fraction of samples that decides the rank of `N1`.
pub const RANK_MAJORITY: f64 = 0.9;
/// Geodesic tolerance for analytic jets.
pub const ANALYTIC_GEODESIC_TOL: f64 = 1e-6;

/// Outcome of the composition criteria on a sampled patch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionVerdict {
    /// The three-way equivalence applies only to generic angles.
    pub applicable: bool,
    pub reason: Option<String>,
    /// `None` when the angles decide nothing and the criteria do not apply.
    pub composition: Option<bool>,
    pub rank_one: bool,
    pub t1_geodesic: bool,
    pub t2_geodesic: bool,
    /// `rank_one` agrees with `t1_geodesic || t2_geodesic`.
    pub consistent: bool,
    pub totally_geodesic: bool,
    /// Fractions of samples with rank 0, 1 and 2.
    pub rank_fractions: [f64; 3],
    pub max_dt_t1: f64,
    pub max_dt_t2: f64,
    pub geodesic_tol: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub is_helix: bool,
    pub samples: usize,
}

/// Rank of the span of `α(∂u,∂u)`, `α(∂u,∂v)`, `α(∂v,∂v)`.
pub fn normal_space_rank(patch: &dyn SurfacePatch, u: f64, v: f64) -> Option<u8> {
    let jet = patch.jet(u, v).ok()?;
    let forms = fundamental_forms(&jet).ok()?;
    let m = Matrix4x3::from_columns(&[forms.alpha_11, forms.alpha_12, forms.alpha_22]);
    let sv = m.singular_values();
    let s1 = sv.max();
    let s2 = {
        let mut v: Vec<f64> = sv.iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v[1]
    };
    Some(if s1 <= RANK_ZERO {
        0
    } else if s2 <= RANK_RATIO * s1 {
        1
    } else {
        2
    })
}

/// Compares rank-one `N1` with `T1` or `T2` being geodesic. The equivalence
/// holds for generic angles; with `θ1 = 0` the patch is a composition
/// regardless, and other non-generic angles leave the question open.
pub fn composition_test(
    patch: &dyn SurfacePatch,
    pi: &Plane,
    opts: &VerifyOptions,
) -> Result<CompositionVerdict, ConstructError> {
    let mut o = opts.clone();
    o.keep_samples = true;
    let report = verify_helix(patch, pi, &o)?;
    let (hu, hv) = o.fd_steps.unwrap_or_else(|| patch.fd_steps());
    let geodesic_tol = match patch.source() {
        JetSource::Analytic => ANALYTIC_GEODESIC_TOL,
        _ => ANALYTIC_GEODESIC_TOL.max(50.0 * hu.max(hv).powi(2)),
    };
    let mut counts = [0usize; 3];
    let (mut dt1, mut dt2): (f64, f64) = (0.0, 0.0);
    for s in &report.samples {
        if let Some(r) = normal_space_rank(patch, s.u, s.v) {
            counts[r as usize] += 1;
        }
        dt1 = dt1.max(s.fields.dt_t1.abs());
        dt2 = dt2.max(s.fields.dt_t2.abs());
    }
    let total: usize = counts.iter().sum();
    let frac = |k: usize| {
        if total == 0 {
            0.0
        } else {
            counts[k] as f64 / total as f64
        }
    };
    let rank_fractions = [frac(0), frac(1), frac(2)];
    let totally_geodesic = total > 0 && counts[0] == total;
    let rank_one = rank_fractions[0] + rank_fractions[1] >= RANK_MAJORITY;
    let t1_geodesic = dt1 < geodesic_tol;
    let t2_geodesic = dt2 < geodesic_tol;
    let consistent = rank_one == (t1_geodesic || t2_geodesic);

    let (th1, th2) = (report.angles.theta1.mean, report.angles.theta2.mean);
    let (applicable, reason, composition) = if totally_geodesic {
        (true, Some("totally geodesic".to_string()), Some(true))
    } else if th1 < GENERIC_TOL {
        (
            false,
            Some("theta1 = 0: a composition by the holonomy-tube structure".to_string()),
            Some(true),
        )
    } else if th2 > FRAC_PI_2 - GENERIC_TOL {
        (
            false,
            Some("theta2 = pi/2: criterion inapplicable".to_string()),
            None,
        )
    } else if th2 - th1 < GENERIC_TOL {
        (
            false,
            Some("theta1 = theta2: criterion inapplicable".to_string()),
            None,
        )
    } else {
        (true, None, Some(rank_one))
    };
    Ok(CompositionVerdict {
        applicable,
        reason,
        composition,
        rank_one,
        t1_geodesic,
        t2_geodesic,
        consistent,
        totally_geodesic,
        rank_fractions,
        max_dt_t1: dt1,
        max_dt_t2: dt2,
        geodesic_tol,
        theta1: th1,
        theta2: th2,
        is_helix: report.is_helix,
        samples: total,
    })
}
