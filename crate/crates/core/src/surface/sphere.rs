use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::grassmann::Vec4;

use super::{SurfaceError, SurfacePatch};

/// Relative singular-value cutoff for the sphere normal equations.
const RANK_TOL: f64 = 1e-9;

/// Least-squares 3-sphere through sampled surface points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereFit {
    pub center: [f64; 4],
    pub radius: f64,
    /// `max ||p − c| − R| / R` over the samples.
    pub defect: f64,
    pub points: usize,
}

impl SphereFit {
    pub fn center_vec(&self) -> Vec4 {
        Vec4::from(self.center)
    }
}

/// Fits `|p − c|² = R²` by linear least squares on `2⟨c, p⟩ + k = |p|²`.
///
/// Point sets whose design matrix has rank at most 3 (a planar patch, for
/// example) admit no finite sphere. A patch inside a 3-dimensional affine
/// subspace gets the minimum-norm centre in that subspace.
pub fn fit_sphere(points: &[Vec4]) -> Result<SphereFit, SurfaceError> {
    let n = points.len();
    if n < 5 {
        return Err(SurfaceError::TooFewPoints(n));
    }
    let centroid = points.iter().fold(Vec4::zeros(), |a, p| a + p) / n as f64;
    let scale = points
        .iter()
        .map(|p| (p - centroid).norm())
        .fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(SurfaceError::NoFiniteSphere { rank: 1 });
    }
    let q: Vec<Vec4> = points.iter().map(|p| (p - centroid) / scale).collect();
    let a = DMatrix::from_fn(n, 5, |i, j| if j < 4 { 2.0 * q[i][j] } else { 1.0 });
    let b = DVector::from_fn(n, |i, _| q[i].norm_squared());
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOL * smax)
        .count();
    if rank <= 3 {
        return Err(SurfaceError::NoFiniteSphere { rank });
    }
    let x = svd
        .solve(&b, RANK_TOL * smax)
        .map_err(|_| SurfaceError::NoFiniteSphere { rank })?;
    let c = Vec4::new(x[0], x[1], x[2], x[3]);
    let r2 = x[4] + c.norm_squared();
    if !(r2 > 0.0) {
        return Err(SurfaceError::NoFiniteSphere { rank });
    }
    let center = centroid + c * scale;
    let radius = r2.sqrt() * scale;
    let defect = points
        .iter()
        .map(|p| ((p - center).norm() - radius).abs() / radius)
        .fold(0.0, f64::max);
    Ok(SphereFit {
        center: center.into(),
        radius,
        defect,
        points: n,
    })
}

/// Sphere fit over an `n × m` grid of patch points spanning its domain.
pub fn sphere_test(
    patch: &dyn SurfacePatch,
    grid: (usize, usize),
) -> Result<SphereFit, SurfaceError> {
    let d = patch.domain();
    let (n, m) = grid;
    let mut pts = Vec::with_capacity(n * m);
    for j in 0..m {
        for i in 0..n {
            let u = d.u0 + (d.u1 - d.u0) * i as f64 / (n.max(2) - 1) as f64;
            let v = d.v0 + (d.v1 - d.v0) * j as f64 / (m.max(2) - 1) as f64;
            let (u, v) = patch.snap(u, v);
            if let Ok(jet) = patch.jet(u, v) {
                pts.push(jet.p);
            }
        }
    }
    fit_sphere(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_on_sphere_of_radius_sqrt2() {
        let pts: Vec<Vec4> = (0..40)
            .map(|k| {
                let (a, b) = (0.1 * k as f64, 0.37 * k as f64);
                Vec4::new(a.cos(), a.sin(), b.cos(), b.sin())
            })
            .collect();
        let fit = fit_sphere(&pts).unwrap();
        assert!(fit.center_vec().norm() < 1e-12);
        assert!((fit.radius - 2f64.sqrt()).abs() < 1e-12);
        assert!(fit.defect < 1e-12);
    }

    #[test]
    fn plane_has_no_sphere() {
        let pts: Vec<Vec4> = (0..25)
            .map(|k| Vec4::new((k % 5) as f64, (k / 5) as f64, 1.0, 0.0))
            .collect();
        assert!(matches!(
            fit_sphere(&pts),
            Err(SurfaceError::NoFiniteSphere { .. })
        ));
    }

    #[test]
    fn too_few_points() {
        assert_eq!(
            fit_sphere(&[Vec4::zeros(); 3]),
            Err(SurfaceError::TooFewPoints(3))
        );
    }
}
