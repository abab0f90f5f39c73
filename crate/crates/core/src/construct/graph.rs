use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2x3;

use crate::jet::Jet2;
use crate::surface::{check_jet, Domain, JetSource, SurfaceError, SurfaceJet, SurfacePatch};

use super::params::HelixParams;
use super::pde::SolutionGrid;
use super::ConstructError;

/// Singular-value ratio below which the second-derivative matrix drops rank.
pub const RANK_RATIO: f64 = 1e-6;
/// Largest singular value below which the matrix counts as zero.
pub const RANK_ZERO: f64 = 1e-10;

/// Values and derivatives up to order two of `f` and `g` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphDerivs {
    pub f: Jet2,
    pub g: Jet2,
}

impl GraphDerivs {
    /// `(E, F, G)` of the graph `(x, y, f, g)`.
    pub fn metric(&self) -> (f64, f64, f64) {
        let (f, g) = (&self.f, &self.g);
        (
            1.0 + f.du * f.du + g.du * g.du,
            f.du * f.dv + g.du * g.dv,
            1.0 + f.dv * f.dv + g.dv * g.dv,
        )
    }

    /// Jacobian determinant `f_x g_y − f_y g_x`.
    pub fn jacobian(&self) -> f64 {
        self.f.du * self.g.dv - self.f.dv * self.g.du
    }

    /// `‖J‖² = f_x² + f_y² + g_x² + g_y²`.
    pub fn jacobian_norm2(&self) -> f64 {
        let (f, g) = (&self.f, &self.g);
        f.du * f.du + f.dv * f.dv + g.du * g.du + g.dv * g.dv
    }

    pub fn surface_jet(&self, x: f64, y: f64) -> SurfaceJet {
        SurfaceJet::from_components([Jet2::var_u(x), Jet2::var_v(y), self.f, self.g])
    }
}

/// A graph `(x, y) ↦ (x, y, f(x,y), g(x,y))` over a rectangle.
pub trait GraphSurface: Send + Sync {
    fn domain(&self) -> Domain;
    /// `None` where derivatives are unavailable.
    fn derivs(&self, x: f64, y: f64) -> Option<GraphDerivs>;
    fn source(&self) -> JetSource;
    /// Natural difference steps, if any.
    fn fd_steps(&self) -> Option<(f64, f64)> {
        None
    }
    fn snap(&self, x: f64, y: f64) -> (f64, f64) {
        (x, y)
    }
}

pub type ScalarJetMap = dyn Fn(Jet2, Jet2) -> Jet2 + Send + Sync;

/// Graph of two closures evaluated on jets.
#[derive(Clone)]
pub struct ClosureGraph {
    domain: Domain,
    f: Arc<ScalarJetMap>,
    g: Arc<ScalarJetMap>,
}

impl ClosureGraph {
    pub fn new(
        domain: Domain,
        f: impl Fn(Jet2, Jet2) -> Jet2 + Send + Sync + 'static,
        g: impl Fn(Jet2, Jet2) -> Jet2 + Send + Sync + 'static,
    ) -> Self {
        ClosureGraph {
            domain,
            f: Arc::new(f),
            g: Arc::new(g),
        }
    }
}

impl fmt::Debug for ClosureGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureGraph")
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl GraphSurface for ClosureGraph {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn derivs(&self, x: f64, y: f64) -> Option<GraphDerivs> {
        let (u, v) = (Jet2::var_u(x), Jet2::var_v(y));
        let d = GraphDerivs {
            f: (self.f)(u, v),
            g: (self.g)(u, v),
        };
        let ok = [d.f, d.g].iter().all(|j| {
            [j.v, j.du, j.dv, j.duu, j.duv, j.dvv]
                .iter()
                .all(|x| x.is_finite())
        });
        ok.then_some(d)
    }

    fn source(&self) -> JetSource {
        JetSource::Analytic
    }
}

/// Graph of a marched solution with recovered `g`. Derivatives of `f` come
/// from the solver; derivatives of `g` are centred differences of the
/// integrated `g` grid, so the constraints are checked rather than assumed.
#[derive(Debug, Clone)]
pub struct GridGraph {
    grid: Arc<SolutionGrid>,
    domain: Domain,
    /// Node rectangle `(r0, r1, i0, i1)` of the domain, inclusive.
    rect: (usize, usize, usize, usize),
}

impl GridGraph {
    pub fn new(grid: SolutionGrid) -> Result<Self, ConstructError> {
        Self::from_arc(Arc::new(grid))
    }

    pub fn from_arc(grid: Arc<SolutionGrid>) -> Result<Self, ConstructError> {
        if grid.g.is_none() {
            return Err(ConstructError::InvalidProblem(
                "grid has no recovered g".into(),
            ));
        }
        let rect = largest_rectangle(&grid).ok_or(ConstructError::EmptySolution)?;
        let (r0, r1, i0, i1) = rect;
        let domain = Domain::new(grid.x(i0), grid.x(i1), grid.y(r0), grid.y(r1))
            .map_err(|_| ConstructError::EmptySolution)?;
        Ok(GridGraph { grid, domain, rect })
    }

    pub fn grid(&self) -> &SolutionGrid {
        &self.grid
    }

    /// Inclusive node rectangle `(r0, r1, i0, i1)` with full derivatives.
    pub fn rect(&self) -> (usize, usize, usize, usize) {
        self.rect
    }

    /// Nodes of the derivative rectangle lying in `region`.
    pub fn nodes_in(&self, region: &Domain) -> Vec<(f64, f64)> {
        let (r0, r1, i0, i1) = self.rect;
        let eps = 1e-9 * self.grid.hx.min(self.grid.hy);
        let mut out = Vec::new();
        for r in r0..=r1 {
            for i in i0..=i1 {
                let (x, y) = (self.grid.x(i), self.grid.y(r));
                if x >= region.u0 - eps
                    && x <= region.u1 + eps
                    && y >= region.v0 - eps
                    && y <= region.v1 + eps
                {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Derivatives at node `(r, i)`.
    pub fn node_derivs(&self, r: usize, i: usize) -> Option<GraphDerivs> {
        let s = &self.grid;
        let g = &s.g.as_ref()?.g;
        if r == 0 || i == 0 || r + 1 >= s.ny || i + 1 >= s.nx {
            return None;
        }
        let at = |r: usize, i: usize| g[r * s.nx + i];
        let k = s.idx(r, i);
        let (hx, hy) = (s.hx, s.hy);
        let gj = Jet2 {
            v: at(r, i),
            du: (at(r, i + 1) - at(r, i - 1)) / (2.0 * hx),
            dv: (at(r + 1, i) - at(r - 1, i)) / (2.0 * hy),
            duu: (at(r, i + 1) - 2.0 * at(r, i) + at(r, i - 1)) / (hx * hx),
            duv: (at(r + 1, i + 1) - at(r + 1, i - 1) - at(r - 1, i + 1) + at(r - 1, i - 1))
                / (4.0 * hx * hy),
            dvv: (at(r + 1, i) - 2.0 * at(r, i) + at(r - 1, i)) / (hy * hy),
        };
        let fj = Jet2 {
            v: s.f[k],
            du: s.fx[k],
            dv: s.fy[k],
            duu: s.fxx[k],
            duv: s.fxy[k],
            dvv: s.fyy[k],
        };
        let d = GraphDerivs { f: fj, g: gj };
        let ok = [fj, gj].iter().all(|j| {
            [j.v, j.du, j.dv, j.duu, j.duv, j.dvv]
                .iter()
                .all(|x| x.is_finite())
        });
        ok.then_some(d)
    }
}

/// Nodes whose 3×3 neighbourhood carries `g`, per row as an inclusive range.
fn derivative_rows(s: &SolutionGrid) -> Vec<Option<(usize, usize)>> {
    let win = |r: usize| s.windows[r];
    (0..s.ny)
        .map(|r| {
            if r == 0 || r + 1 >= s.ny {
                return None;
            }
            let (mut lo, mut hi) = win(r)?;
            for q in [r - 1, r + 1] {
                let (a, b) = win(q)?;
                lo = lo.max(a);
                hi = hi.min(b);
            }
            (hi >= lo + 2).then_some((lo + 1, hi - 1))
        })
        .collect()
}

/// Largest-area node rectangle inside the derivative rows.
fn largest_rectangle(s: &SolutionGrid) -> Option<(usize, usize, usize, usize)> {
    let rows = derivative_rows(s);
    let mut best: Option<((usize, usize, usize, usize), usize)> = None;
    for a in 0..rows.len() {
        let Some((mut lo, mut hi)) = rows[a] else {
            continue;
        };
        for (b, row) in rows.iter().enumerate().skip(a) {
            let Some((l, h)) = *row else { break };
            lo = lo.max(l);
            hi = hi.min(h);
            if hi < lo {
                break;
            }
            let area = (b - a + 1) * (hi - lo + 1);
            if b > a && hi > lo && best.is_none_or(|(_, ar)| area > ar) {
                best = Some(((a, b, lo, hi), area));
            }
        }
    }
    best.map(|(r, _)| r)
}

impl GraphSurface for GridGraph {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn derivs(&self, x: f64, y: f64) -> Option<GraphDerivs> {
        let (r, i) = self.grid.node(x, y)?;
        self.node_derivs(r, i)
    }

    fn source(&self) -> JetSource {
        JetSource::Grid
    }

    fn fd_steps(&self) -> Option<(f64, f64)> {
        Some((self.grid.hx, self.grid.hy))
    }

    fn snap(&self, x: f64, y: f64) -> (f64, f64) {
        let s = &self.grid;
        let i = ((x - s.x0) / s.hx).round();
        let r = ((y - s.y0) / s.hy).round();
        (s.x0 + i * s.hx, s.y0 + r * s.hy)
    }
}

/// Surface-patch view of a graph.
#[derive(Clone)]
pub struct GraphPatch {
    graph: Arc<dyn GraphSurface>,
}

impl GraphPatch {
    pub fn new(graph: impl GraphSurface + 'static) -> Self {
        GraphPatch {
            graph: Arc::new(graph),
        }
    }

    pub fn from_arc(graph: Arc<dyn GraphSurface>) -> Self {
        GraphPatch { graph }
    }

    pub fn graph(&self) -> &dyn GraphSurface {
        self.graph.as_ref()
    }
}

impl fmt::Debug for GraphPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GraphPatch")
            .field("domain", &self.graph.domain())
            .finish_non_exhaustive()
    }
}

impl SurfacePatch for GraphPatch {
    fn domain(&self) -> Domain {
        self.graph.domain()
    }

    fn jet(&self, u: f64, v: f64) -> Result<SurfaceJet, SurfaceError> {
        let d = self
            .graph
            .derivs(u, v)
            .ok_or(SurfaceError::NoSample { u, v })?;
        check_jet(d.surface_jet(u, v), u, v)
    }

    fn source(&self) -> JetSource {
        self.graph.source()
    }

    fn fd_steps(&self) -> (f64, f64) {
        self.graph.fd_steps().unwrap_or_else(|| {
            let (a, b) = self.domain().spans();
            let k = 1e-4f64.max(f64::EPSILON.cbrt());
            (a * k, b * k)
        })
    }

    fn snap(&self, u: f64, v: f64) -> (f64, f64) {
        self.graph.snap(u, v)
    }
}

/// `(E + G − sec²θ1 − sec²θ2, EG − F² − sec²θ1·sec²θ2)` at a point.
pub fn helix_condition_residual(
    graph: &dyn GraphSurface,
    params: &HelixParams,
    at: (f64, f64),
) -> Result<(f64, f64), ConstructError> {
    let (x, y) = graph.snap(at.0, at.1);
    let d = graph
        .derivs(x, y)
        .ok_or(ConstructError::NoDerivatives { x, y })?;
    let (e, f, g) = d.metric();
    Ok((
        e + g - params.sec2_sum(),
        e * g - f * f - params.sec2_product(),
    ))
}

/// Largest deviations of the Jacobian determinant from `c2` and of its
/// squared norm from `c1` over the sampled points.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SymplectoCheck {
    pub det_deviation: f64,
    pub norm_deviation: f64,
    pub samples: usize,
}

/// Checks the symplectic form of the helix condition on an `n × m` grid
/// spanning the graph's domain.
pub fn symplecto_check(
    graph: &dyn GraphSurface,
    params: &HelixParams,
    grid: (usize, usize),
) -> SymplectoCheck {
    let d = graph.domain();
    let (n, m) = (grid.0.max(2), grid.1.max(2));
    let mut points = Vec::with_capacity(n * m);
    for j in 0..m {
        for i in 0..n {
            let x = d.u0 + (d.u1 - d.u0) * i as f64 / (n - 1) as f64;
            let y = d.v0 + (d.v1 - d.v0) * j as f64 / (m - 1) as f64;
            points.push(graph.snap(x, y));
        }
    }
    symplecto_at(graph, params, &points)
}

/// [`symplecto_check`] over explicit points.
pub fn symplecto_at(
    graph: &dyn GraphSurface,
    params: &HelixParams,
    points: &[(f64, f64)],
) -> SymplectoCheck {
    let mut out = SymplectoCheck {
        det_deviation: 0.0,
        norm_deviation: 0.0,
        samples: 0,
    };
    for &(x, y) in points {
        if let Some(d) = graph.derivs(x, y) {
            out.det_deviation = out.det_deviation.max((d.jacobian() - params.c2).abs());
            out.norm_deviation = out
                .norm_deviation
                .max((d.jacobian_norm2() - params.c1).abs());
            out.samples += 1;
        }
    }
    out
}

/// Rank of the first normal space of a graph from its second derivatives.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormalRank {
    /// 0 flags a totally geodesic point.
    pub rank: u8,
    /// `f_xx f_yy − f_xy²`.
    pub hessdet_f: f64,
    pub singular_values: [f64; 2],
}

/// Numerical rank of `[[f_xx, f_xy, f_yy], [g_xx, g_xy, g_yy]]`.
pub fn first_normal_rank(
    graph: &dyn GraphSurface,
    at: (f64, f64),
) -> Result<NormalRank, ConstructError> {
    let (x, y) = graph.snap(at.0, at.1);
    let d = graph
        .derivs(x, y)
        .ok_or(ConstructError::NoDerivatives { x, y })?;
    Ok(normal_rank_of(&d))
}

pub fn normal_rank_of(d: &GraphDerivs) -> NormalRank {
    let (f, g) = (&d.f, &d.g);
    let m = Matrix2x3::new(f.duu, f.duv, f.dvv, g.duu, g.duv, g.dvv);
    let sv = m.singular_values();
    let (s1, s2) = (sv[0].max(sv[1]), sv[0].min(sv[1]));
    let rank = if s1 <= RANK_ZERO {
        0
    } else if s2 <= RANK_RATIO * s1 {
        1
    } else {
        2
    };
    NormalRank {
        rank,
        hessdet_f: f.duu * f.dvv - f.duv * f.duv,
        singular_values: [s1, s2],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::pde::{find_noncharacteristic_seed, solve_pde, PdeProblem};
    use crate::construct::recover::recover_g;

    fn domain() -> Domain {
        Domain::new(-1.0, 1.0, -1.0, 1.0).unwrap()
    }

    #[test]
    fn flat_graph_zero_angles() {
        let g = ClosureGraph::new(
            domain(),
            |_, _| Jet2::constant(0.0),
            |_, _| Jet2::constant(0.0),
        );
        let p = HelixParams {
            theta1: 0.0,
            theta2: 0.0,
            c1: 0.0,
            c2: 0.0,
        };
        assert_eq!(
            helix_condition_residual(&g, &p, (0.3, 0.2)).unwrap(),
            (0.0, 0.0)
        );
        assert_eq!(first_normal_rank(&g, (0.0, 0.0)).unwrap().rank, 0);
    }

    #[test]
    fn linear_graph_residuals() {
        // f = a x, g = b y: E = 1 + a², G = 1 + b², F = 0, so sec² θ_i are 1 + a², 1 + b²
        let (a, b) = (0.5, 2.0);
        let g = ClosureGraph::new(domain(), move |x, _| x * a, move |_, y| y * b);
        let p = HelixParams::from_angles(a.atan(), b.atan()).unwrap();
        let (rt, rd) = helix_condition_residual(&g, &p, (0.1, 0.4)).unwrap();
        assert!(rt.abs() < 1e-14 && rd.abs() < 1e-13);
    }

    #[test]
    fn symplecto_linear_maps() {
        let k = 1.7f64;
        let p = HelixParams::from_angles(0.4, 1.1).unwrap();
        let g = ClosureGraph::new(domain(), move |x, _| x * k.sqrt(), move |_, y| y * k.sqrt());
        let s = symplecto_check(&g, &HelixParams { c2: k, ..p }, (5, 5));
        assert!(s.det_deviation < 1e-14);
        assert!((s.norm_deviation - (2.0 * k - p.c1).abs()).abs() < 1e-13);
        let t = 0.3f64;
        let rot = ClosureGraph::new(
            domain(),
            move |x, y| x * t.cos() - y * t.sin(),
            move |x, y| x * t.sin() + y * t.cos(),
        );
        let s = symplecto_check(&rot, &p, (4, 4));
        assert!((s.det_deviation - (1.0 - p.c2).abs()).abs() < 1e-14);
    }

    #[test]
    fn proportional_hessians_rank_one() {
        let g = ClosureGraph::new(domain(), |x, _| x * x, |x, _| x * x);
        assert_eq!(first_normal_rank(&g, (0.2, 0.1)).unwrap().rank, 1);
        let h = ClosureGraph::new(domain(), |x, _| x * x, |_, y| y * y);
        assert_eq!(first_normal_rank(&h, (0.2, 0.1)).unwrap().rank, 2);
    }

    #[test]
    fn pde_graph_is_rank_two_near_initial_row() {
        let c = 10.0 / 3.0;
        let seed = find_noncharacteristic_seed(c).unwrap();
        let sol = recover_g(&solve_pde(&PdeProblem::standard(c, seed, 0.05, 0.02, 2e-3)).unwrap())
            .unwrap();
        let gg = GridGraph::new(sol).unwrap();
        let nr = first_normal_rank(&gg, (0.0, 0.0)).unwrap();
        assert_eq!(nr.rank, 2);
        assert!(nr.hessdet_f.abs() > 1.0);
    }
}
