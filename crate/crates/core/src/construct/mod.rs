//! Graph surfaces `(x, y, f, g)` with prescribed constant principal angles
//! relative to `span(e1, e2)`.

mod composition;
mod graph;
mod params;
mod pde;
mod recover;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grassmann::{GeometryError, Plane};
use crate::surface::{verify_helix, Domain, StructureReport, SurfaceError, VerifyOptions};

pub use composition::{
    composition_test, normal_space_rank, CompositionVerdict, GENERIC_TOL, RANK_MAJORITY,
};
pub use graph::{
    first_normal_rank, helix_condition_residual, normal_rank_of, symplecto_at, symplecto_check,
    ClosureGraph, GraphDerivs, GraphPatch, GraphSurface, GridGraph, NormalRank, SymplectoCheck,
    RANK_RATIO, RANK_ZERO,
};
pub use params::{deform, deform_inverse, HelixParams, EQUAL_ANGLE_TOL};
pub use pde::{
    find_noncharacteristic_seed, solve_pde, Branch, GField, Integrator, MarchSummary, PdeProblem,
    Profile, Seed, SolutionGrid, Symbol, Termination, ANNULUS_MARGIN, CHAR_TOL, CLAMP_TOL,
    SEED_MARGIN,
};
pub use recover::recover_g;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructError {
    #[error("invalid angles ({theta1}, {theta2}): {reason}")]
    InvalidAngles {
        theta1: f64,
        theta2: f64,
        reason: String,
    },
    #[error("invalid deformation parameters: {0}")]
    InvalidDeformation(String),
    #[error("annulus for c = {c} is degenerate (margin {margin:e})")]
    DegenerateAnnulus { c: f64, margin: f64 },
    #[error("initial data at x = {x} has gradient norm {delta} outside the annulus [{lo}, {hi}]")]
    OutsideAnnulus {
        x: f64,
        delta: f64,
        lo: f64,
        hi: f64,
    },
    #[error("initial data is characteristic at x = {x}: {quantity} = {value:e}")]
    Characteristic {
        x: f64,
        quantity: String,
        value: f64,
    },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("the march produced no usable rows")]
    EmptySolution,
    #[error("no derivatives at ({x}, {y})")]
    NoDerivatives { x: f64, y: f64 },
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl ConstructError {
    /// Bad input as opposed to a numerical breakdown.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            ConstructError::InvalidAngles { .. }
                | ConstructError::InvalidDeformation(_)
                | ConstructError::DegenerateAnnulus { .. }
                | ConstructError::OutsideAnnulus { .. }
                | ConstructError::Characteristic { .. }
                | ConstructError::InvalidProblem(_)
        )
    }
}

/// Inputs of the angle-to-surface pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstructConfig {
    pub theta1: f64,
    pub theta2: f64,
    pub x: [f64; 2],
    pub ymax: f64,
    pub hx: f64,
    pub hy: f64,
    /// Automatic polar-scan seed when absent.
    pub seed: Option<[f64; 2]>,
    pub branch: Branch,
    pub integrator: Integrator,
    pub verify_grid: [usize; 2],
    /// Shrink `x` to the interval around its midpoint on which the initial
    /// gradient stays inside the annulus.
    pub clip_to_annulus: bool,
}

impl Default for ConstructConfig {
    fn default() -> Self {
        ConstructConfig {
            theta1: std::f64::consts::FRAC_PI_6,
            theta2: std::f64::consts::FRAC_PI_3,
            x: [-0.05, 0.05],
            ymax: 0.025,
            hx: 1e-3,
            hy: 1e-3,
            seed: None,
            branch: Branch::Plus,
            integrator: Integrator::Rk4,
            verify_grid: [21, 21],
            clip_to_annulus: true,
        }
    }
}

impl ConstructConfig {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        ConstructConfig {
            theta1,
            theta2,
            ..Default::default()
        }
    }

    /// Same config with both steps set to `h`.
    pub fn with_step(mut self, h: f64) -> Self {
        self.hx = h;
        self.hy = h;
        self
    }
}

/// A constructed graph with its self-verification.
#[derive(Debug, Clone)]
pub struct Construction {
    pub params: HelixParams,
    /// Normalized constant `c1/c2` of the unit-determinant solution.
    pub c: f64,
    /// Deformation factor `√c2`.
    pub m: f64,
    pub seed: Seed,
    pub grid: Arc<SolutionGrid>,
    pub graph: GridGraph,
    pub report: StructureReport,
    pub symplecto: SymplectoCheck,
    pub max_helix_residual: f64,
}

/// Serializable summary of a [`Construction`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionSummary {
    pub theta1: f64,
    pub theta2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c: f64,
    pub m: f64,
    pub seed: Seed,
    pub branch: Branch,
    pub integrator: Integrator,
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub valid_nodes: usize,
    pub domain: Domain,
    pub marches: [MarchSummary; 2],
    pub max_loop_defect: f64,
    pub max_helix_residual: f64,
    pub symplecto: SymplectoCheck,
}

impl Construction {
    pub fn summary(&self) -> ConstructionSummary {
        let g = &self.grid;
        ConstructionSummary {
            theta1: self.params.theta1,
            theta2: self.params.theta2,
            c1: self.params.c1,
            c2: self.params.c2,
            c: self.c,
            m: self.m,
            seed: self.seed,
            branch: g.branch,
            integrator: g.integrator,
            nx: g.nx,
            ny: g.ny,
            x0: g.x0,
            y0: g.y0,
            hx: g.hx,
            hy: g.hy,
            valid_nodes: g.valid_nodes(),
            domain: self.graph.domain(),
            marches: g.marches,
            max_loop_defect: g.g.as_ref().map_or(f64::NAN, |g| g.max_loop_defect),
            max_helix_residual: self.max_helix_residual,
            symplecto: self.symplecto,
        }
    }

    pub fn patch(&self) -> GraphPatch {
        GraphPatch::new(self.graph.clone())
    }
}

/// Largest `|r_trace|, |r_det|` over the derivative nodes inside `region`.
pub fn max_helix_residual(graph: &GridGraph, params: &HelixParams, region: &Domain) -> f64 {
    graph
        .nodes_in(region)
        .into_iter()
        .filter_map(|at| helix_condition_residual(graph, params, at).ok())
        .map(|(a, b)| a.abs().max(b.abs()))
        .fold(0.0, f64::max)
}

/// Angles → `(c, m)` → seed → march → `g` → scale by `m` → verification
/// against `span(e1, e2)`. Equal angles yield the affine graph.
pub fn construct(cfg: &ConstructConfig) -> Result<Construction, ConstructError> {
    let params = HelixParams::from_angles(cfg.theta1, cfg.theta2)?;
    let m = params.m();
    let (grid, c, seed) = if params.is_totally_geodesic_branch() {
        let grid = SolutionGrid::linear(m, (cfg.x[0], cfg.x[1]), (-cfg.ymax, cfg.ymax), cfg.hx)?;
        (grid, 2.0, Seed::at(1.0, 0.0))
    } else {
        let c = params.c();
        let seed = match cfg.seed {
            Some([u0, v0]) => Seed::at(u0, v0),
            None => find_noncharacteristic_seed(c)?,
        };
        let mut prob = PdeProblem::standard(c, seed, 1.0, cfg.ymax, cfg.hx);
        prob.x_range = (cfg.x[0], cfg.x[1]);
        if cfg.clip_to_annulus {
            prob.x_range = admissible_range(&prob);
        }
        prob.hy = cfg.hy;
        prob.branch = cfg.branch;
        prob.integrator = cfg.integrator;
        let sol = recover_g(&solve_pde(&prob)?)?.scaled(m);
        (sol, c, seed)
    };
    finish(params, c, seed, grid, cfg.verify_grid)
}

/// Largest node interval around the midpoint of `prob.x_range` on which
/// `φ′² + ψ²` keeps twice the halting margin from the annulus edges.
pub fn admissible_range(prob: &PdeProblem) -> (f64, f64) {
    let (lo, hi) = prob.symbol().annulus();
    let margin = 2.0 * ANNULUS_MARGIN * (hi - lo);
    let ok = |x: f64| {
        let [_, dphi, _] = (prob.phi)(x);
        let [psi, _, _] = (prob.psi)(x);
        let d = dphi * dphi + psi * psi;
        d > lo + margin && d < hi - margin
    };
    let (a, b) = prob.x_range;
    let h = prob.hx;
    let mid = ((a + b) / 2.0 / h).round() * h;
    if !ok(mid) {
        return prob.x_range;
    }
    let (mut l, mut r) = (mid, mid);
    while l - h >= a - 1e-9 * h && ok(l - h) {
        l -= h;
    }
    while r + h <= b + 1e-9 * h && ok(r + h) {
        r += h;
    }
    (l, r)
}

/// Verification stage shared by [`construct`] and custom problems; `grid`
/// must already carry `g` and the deformation factor.
pub fn finish(
    params: HelixParams,
    c: f64,
    seed: Seed,
    grid: SolutionGrid,
    verify_grid: [usize; 2],
) -> Result<Construction, ConstructError> {
    let grid = Arc::new(grid);
    let graph = GridGraph::from_arc(grid.clone())?;
    let domain = graph.domain();
    let report = verify_helix(
        &GraphPatch::new(graph.clone()),
        &Plane::coordinate(0, 1),
        &VerifyOptions {
            keep_samples: false,
            ..VerifyOptions::new(verify_grid[0], verify_grid[1])
        },
    )?;
    let symplecto = symplecto_at(&graph, &params, &graph.nodes_in(&domain));
    let max_helix_residual = max_helix_residual(&graph, &params, &domain);
    Ok(Construction {
        params,
        c,
        m: grid.scale,
        seed,
        grid,
        graph,
        report,
        symplecto,
        max_helix_residual,
    })
}

/// One refinement level of a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyLevel {
    pub h: f64,
    pub helix_residual: f64,
    pub det_deviation: f64,
    pub norm_deviation: f64,
    /// Largest loop defect over cells inside the region.
    pub loop_defect: f64,
    /// Points compared at this level.
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub region: Domain,
    pub levels: Vec<StudyLevel>,
    /// Observed orders `log(e_k/e_{k+1}) / log(h_k/h_{k+1})` per quantity.
    pub helix_orders: Vec<f64>,
    pub det_orders: Vec<f64>,
    pub norm_orders: Vec<f64>,
    pub loop_orders: Vec<f64>,
}

impl ConvergenceStudy {
    pub fn min_helix_order(&self) -> f64 {
        self.helix_orders
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_symplecto_order(&self) -> f64 {
        self.det_orders
            .iter()
            .chain(&self.norm_orders)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

fn orders(h: &[f64], e: &[f64]) -> Vec<f64> {
    (1..e.len())
        .map(|k| (e[k - 1] / e[k]).ln() / (h[k - 1] / h[k]).ln())
        .collect()
}

/// Builds the surface at each step in `steps` and measures the residuals at
/// the nodes of the first grid inside `region`. With steps that halve, those
/// nodes lie on every later grid, so each level is compared at the same
/// points.
pub fn convergence_study(
    cfg: &ConstructConfig,
    steps: &[f64],
    region: Domain,
) -> Result<ConvergenceStudy, ConstructError> {
    let params = HelixParams::from_angles(cfg.theta1, cfg.theta2)?;
    let mut points: Option<Vec<(f64, f64)>> = None;
    let mut levels = Vec::with_capacity(steps.len());
    for &h in steps {
        let c = ConstructConfig {
            verify_grid: [3, 3],
            ..cfg.clone()
        }
        .with_step(h);
        let cons = construct(&c)?;
        let pts = points.get_or_insert_with(|| cons.graph.nodes_in(&region));
        let s = symplecto_at(&cons.graph, &params, pts);
        let helix_residual = pts
            .iter()
            .filter_map(|&at| helix_condition_residual(&cons.graph, &params, at).ok())
            .map(|(a, b)| a.abs().max(b.abs()))
            .fold(0.0, f64::max);
        levels.push(StudyLevel {
            h,
            helix_residual,
            det_deviation: s.det_deviation,
            norm_deviation: s.norm_deviation,
            loop_defect: cons.grid.max_loop_defect_in(&region).unwrap_or(f64::NAN),
            nodes: s.samples,
        });
    }
    let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
    let col = |f: fn(&StudyLevel) -> f64| orders(&hs, &levels.iter().map(f).collect::<Vec<_>>());
    Ok(ConvergenceStudy {
        region,
        helix_orders: col(|l| l.helix_residual),
        det_orders: col(|l| l.det_deviation),
        norm_orders: col(|l| l.norm_deviation),
        loop_orders: col(|l| l.loop_defect),
        levels,
    })
}
