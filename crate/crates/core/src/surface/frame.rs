use crate::grassmann::{orthogonal_complement, principal_decomposition, Plane, Vec4};

use super::{SurfaceError, SurfaceJet};

/// Below this value `cos θ` or `sin θ` no longer couples a tangent vector to
/// its partner in the reference plane.
pub const FRAME_COUPLING_TOL: f64 = 1e-6;
/// Angle gap below which the two principal directions may be swapped to
/// follow the previous frame.
pub const SWAP_TOL: f64 = 1e-6;

/// Orthonormal frame `(T1, T2, ξ1, ξ2)` adapted to a reference plane, with
/// `e_i = cos θ_i·T_i + sin θ_i·ξ_i` spanning the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptedFrame {
    pub t1: Vec4,
    pub t2: Vec4,
    pub xi1: Vec4,
    pub xi2: Vec4,
    pub e1: Vec4,
    pub e2: Vec4,
    pub theta1: f64,
    pub theta2: f64,
    /// Equal principal angles: the directions are a continuity choice only.
    pub degenerate: bool,
}

impl AdaptedFrame {
    fn vectors(&self) -> [Vec4; 6] {
        [self.t1, self.t2, self.xi1, self.xi2, self.e1, self.e2]
    }

    /// Largest deviation of `(T1, T2, ξ1, ξ2)` from an orthonormal basis.
    pub fn orthonormality_defect(&self) -> f64 {
        let b = [self.t1, self.t2, self.xi1, self.xi2];
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in i..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                d = d.max((b[i].dot(&b[j]) - target).abs());
            }
        }
        d
    }

    /// Largest deviation from `e_i = cos θ_i T_i + sin θ_i ξ_i`.
    pub fn plane_identity_defect(&self) -> f64 {
        let r1 = self.e1 - (self.t1 * self.theta1.cos() + self.xi1 * self.theta1.sin());
        let r2 = self.e2 - (self.t2 * self.theta2.cos() + self.xi2 * self.theta2.sin());
        r1.norm().max(r2.norm())
    }

    /// Smallest alignment `⟨x, x_prev⟩` over the six frame vectors.
    pub fn min_alignment(&self, prev: &AdaptedFrame) -> f64 {
        self.vectors()
            .iter()
            .zip(prev.vectors())
            .map(|(a, b)| a.dot(&b))
            .fold(f64::INFINITY, f64::min)
    }

    fn swapped(&self) -> AdaptedFrame {
        AdaptedFrame {
            t1: self.t2,
            t2: self.t1,
            xi1: self.xi2,
            xi2: self.xi1,
            e1: self.e2,
            e2: self.e1,
            ..*self
        }
    }

    /// Flips signs so the frame follows `prev`. `T_i`, `e_i`, `ξ_i` flip
    /// together whenever the coupling through `cos θ_i` or `sin θ_i` is
    /// numerically active.
    fn align_signs(&mut self, prev: &AdaptedFrame) {
        let cs = [
            (self.theta1.cos(), self.theta1.sin()),
            (self.theta2.cos(), self.theta2.sin()),
        ];
        for (i, (c, s)) in cs.into_iter().enumerate() {
            let (t, e, xi, tp, ep, xp) = if i == 0 {
                (
                    &mut self.t1,
                    &mut self.e1,
                    &mut self.xi1,
                    prev.t1,
                    prev.e1,
                    prev.xi1,
                )
            } else {
                (
                    &mut self.t2,
                    &mut self.e2,
                    &mut self.xi2,
                    prev.t2,
                    prev.e2,
                    prev.xi2,
                )
            };
            let te = c > FRAME_COUPLING_TOL;
            let ex = s > FRAME_COUPLING_TOL;
            let (dt, de, dx) = (t.dot(&tp), e.dot(&ep), xi.dot(&xp));
            match (te, ex) {
                (true, true) => {
                    if dt + de + dx < 0.0 {
                        *t = -*t;
                        *e = -*e;
                        *xi = -*xi;
                    }
                }
                (true, false) => {
                    if dt + de < 0.0 {
                        *t = -*t;
                        *e = -*e;
                    }
                    if dx < 0.0 {
                        *xi = -*xi;
                    }
                }
                (false, true) => {
                    if dt < 0.0 {
                        *t = -*t;
                    }
                    if de + dx < 0.0 {
                        *e = -*e;
                        *xi = -*xi;
                    }
                }
                (false, false) => unreachable!("cos and sin cannot both vanish"),
            }
        }
    }
}

fn det4(a: &Vec4, b: &Vec4, c: &Vec4, d: &Vec4) -> f64 {
    nalgebra::Matrix4::from_columns(&[*a, *b, *c, *d]).determinant()
}

/// Normal vectors `ξ_i` from `e_i`, falling back to the orthonormal
/// completion with `det[T1, T2, ξ1, ξ2] > 0` where `sin θ_i` vanishes.
fn normals(t: [Vec4; 2], e: [Vec4; 2], theta: [f64; 2]) -> Result<[Vec4; 2], SurfaceError> {
    let mut xi: [Option<Vec4>; 2] = [None, None];
    for i in 0..2 {
        let (c, s) = (theta[i].cos(), theta[i].sin());
        if s > FRAME_COUPLING_TOL {
            let x = (e[i] - t[i] * c) / s;
            xi[i] = Some(x / x.norm());
        }
    }
    let tp = Plane::from_span(t[0], t[1])?;
    let np = orthogonal_complement(&tp);
    let (n1, n2) = (np.b1(), np.b2());
    let out = match xi {
        [Some(a), Some(b)] => {
            // re-orthogonalize against rounding
            let b = b - a * a.dot(&b);
            [a, b / b.norm()]
        }
        [None, Some(b)] => {
            let (p, q) = (b.dot(&n1), b.dot(&n2));
            [n1 * q - n2 * p, b]
        }
        [Some(a), None] => {
            let (p, q) = (a.dot(&n1), a.dot(&n2));
            [a, n2 * p - n1 * q]
        }
        [None, None] => [n1, n2],
    };
    debug_assert!(det4(&t[0], &t[1], &out[0], &out[1]).is_finite());
    Ok(out)
}

/// Adapted frame of the tangent plane at `jet` relative to `pi`.
///
/// Without `prev` the frame is canonical: `⟨T1, p_u⟩ ≥ 0` and `(T1, T2)`
/// oriented like `(p_u, p_v)`. With `prev` the signs and, for nearly equal
/// angles, the ordering follow the previous frame.
pub fn adapted_frame(
    jet: &SurfaceJet,
    pi: &Plane,
    prev: Option<&AdaptedFrame>,
) -> Result<AdaptedFrame, SurfaceError> {
    let tp = jet.tangent_plane()?;
    let d = principal_decomposition(&tp, pi)?;
    let theta = [d.angles.theta1, d.angles.theta2];

    let (t, e) = match (d.degenerate, prev) {
        (true, Some(pf)) => {
            let t1 = tp.project(&pf.t1);
            let t1 = t1 / t1.norm();
            let t2 = tp.project(&pf.t2);
            let t2 = t2 - t1 * t1.dot(&t2);
            let t2 = t2 / t2.norm();
            let e_of = |t: Vec4, fallback: Vec4| {
                let e = pi.project(&t);
                if e.norm() > FRAME_COUPLING_TOL {
                    e / e.norm()
                } else {
                    fallback
                }
            };
            ([t1, t2], [e_of(t1, pf.e1), e_of(t2, pf.e2)])
        }
        _ => {
            let mut t = d.v_dirs;
            let mut e = d.w_dirs;
            if prev.is_none() {
                let r = if t[0].dot(&jet.p_u).abs() > 1e-12 {
                    jet.p_u
                } else {
                    jet.p_v
                };
                if t[0].dot(&r) < 0.0 {
                    t[0] = -t[0];
                    e[0] = -e[0];
                }
                let orient = crate::grassmann::wedge(&t[0], &t[1])
                    .dot(&crate::grassmann::wedge(&jet.p_u, &jet.p_v));
                if orient < 0.0 {
                    t[1] = -t[1];
                    e[1] = -e[1];
                }
            }
            (t, e)
        }
    };
    let xi = normals(t, e, theta)?;
    let mut frame = AdaptedFrame {
        t1: t[0],
        t2: t[1],
        xi1: xi[0],
        xi2: xi[1],
        e1: e[0],
        e2: e[1],
        theta1: theta[0],
        theta2: theta[1],
        degenerate: d.degenerate,
    };
    if let Some(pf) = prev {
        if !d.degenerate && (theta[1] - theta[0]).abs() < SWAP_TOL {
            let keep = pf.t1.dot(&frame.t1).abs() + pf.t2.dot(&frame.t2).abs();
            let swap = pf.t1.dot(&frame.t2).abs() + pf.t2.dot(&frame.t1).abs();
            if swap > keep {
                frame = frame.swapped();
            }
        }
        frame.align_signs(pf);
    }
    Ok(frame)
}
