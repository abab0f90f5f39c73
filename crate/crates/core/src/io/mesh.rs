use std::fmt::Write as _;

use crate::surface::{StructureReport, SurfacePatch};

use super::{fmt_f64, IoError};

pub const COORD_LABELS_GRID: [&str; 4] = ["x", "y", "f", "g"];
pub const COORD_LABELS_R4: [&str; 4] = ["p1", "p2", "p3", "p4"];

/// OBJ mesh of an `nx × ny` row-major point grid projected to the coordinates
/// `triple`. Missing points are skipped along with the quads touching them.
pub fn write_obj(
    nx: usize,
    ny: usize,
    points: &[Option<[f64; 4]>],
    triple: [usize; 3],
    labels: [&str; 4],
) -> Result<String, IoError> {
    if points.len() != nx * ny {
        return Err(IoError::Format(format!(
            "{} points for a {nx}x{ny} grid",
            points.len()
        )));
    }
    if triple.iter().any(|&k| k > 3)
        || triple[0] == triple[1]
        || triple[1] == triple[2]
        || triple[0] == triple[2]
    {
        return Err(IoError::Format(format!(
            "invalid coordinate triple {triple:?}"
        )));
    }
    let dropped: Vec<&str> = (0..4)
        .filter(|k| !triple.contains(k))
        .map(|k| labels[k])
        .collect();
    let mut out = String::new();
    let kept: Vec<&str> = triple.iter().map(|&k| labels[k]).collect();
    let _ = writeln!(out, "# vertices: ({})", kept.join(", "));
    let _ = writeln!(out, "# dropped coordinate: {}", dropped.join(", "));
    let mut index = vec![0usize; points.len()];
    let mut next = 1;
    for (k, p) in points.iter().enumerate() {
        if let Some(p) = p {
            let _ = writeln!(
                out,
                "v {} {} {}",
                fmt_f64(p[triple[0]]),
                fmt_f64(p[triple[1]]),
                fmt_f64(p[triple[2]])
            );
            index[k] = next;
            next += 1;
        }
    }
    for r in 0..ny.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let q = [
                r * nx + i,
                r * nx + i + 1,
                (r + 1) * nx + i + 1,
                (r + 1) * nx + i,
            ];
            if q.iter().all(|&k| points[k].is_some()) {
                let _ = writeln!(
                    out,
                    "f {} {} {} {}",
                    index[q[0]], index[q[1]], index[q[2]], index[q[3]]
                );
            }
        }
    }
    Ok(out)
}

/// Positions of `patch` on an `n × m` grid spanning its domain, row-major in `v`.
pub fn patch_points(patch: &dyn SurfacePatch, n: usize, m: usize) -> Vec<Option<[f64; 4]>> {
    let d = patch.domain();
    let step = |a: f64, b: f64, k: usize, n: usize| {
        if n < 2 {
            a
        } else {
            a + (b - a) * k as f64 / (n - 1) as f64
        }
    };
    (0..m)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| {
            let (u, v) = patch.snap(step(d.u0, d.u1, i, n), step(d.v0, d.v1, j, m));
            let p = patch.jet(u, v).ok()?.p;
            Some([p[0], p[1], p[2], p[3]])
        })
        .collect()
}

/// Per-sample table: parameters, position, angles, curvatures and residuals.
pub fn samples_csv(report: &StructureReport) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "u",
        "v",
        "p1",
        "p2",
        "p3",
        "p4",
        "theta1",
        "theta2",
        "gauss_curvature",
        "normal_curvature",
        "structure_residual",
        "codazzi_residual",
    ])?;
    for s in &report.samples {
        let row = [
            s.u,
            s.v,
            s.p[0],
            s.p[1],
            s.p[2],
            s.p[3],
            s.theta1,
            s.theta2,
            s.gauss_curvature,
            s.normal_curvature,
            s.structure_residual,
            s.codazzi_residual,
        ];
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII numbers"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quads_skip_missing_points() {
        let p = |x: f64, y: f64| Some([x, y, x * y, 0.0]);
        let pts = vec![
            p(0.0, 0.0),
            p(1.0, 0.0),
            p(2.0, 0.0),
            p(0.0, 1.0),
            p(1.0, 1.0),
            None,
        ];
        let obj = write_obj(3, 2, &pts, [0, 1, 2], COORD_LABELS_GRID).unwrap();
        assert!(obj.contains("# dropped coordinate: g"));
        assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 5);
        let faces: Vec<&str> = obj.lines().filter(|l| l.starts_with("f ")).collect();
        assert_eq!(faces, ["f 1 2 5 4"]);
    }

    #[test]
    fn rejects_repeated_coordinates() {
        assert!(write_obj(1, 1, &[None], [0, 0, 2], COORD_LABELS_R4).is_err());
        assert!(write_obj(1, 1, &[None], [0, 1, 4], COORD_LABELS_R4).is_err());
    }
}
