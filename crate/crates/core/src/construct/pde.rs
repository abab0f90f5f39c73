use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ConstructError;

/// Seed scan keeps this fraction of the annulus width away from its edges.
pub const SEED_MARGIN: f64 = 0.05;
/// Smallest absolute seed margin before the annulus counts as collapsed.
pub const MIN_SEED_MARGIN: f64 = 1e-3;
pub const SEED_RADII: usize = 41;
pub const SEED_ANGLES: usize = 360;
/// Radicands in `[−CLAMP_TOL, 0)` are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;
/// Columns halt within this fraction of the annulus width from its edges.
pub const ANNULUS_MARGIN: f64 = 1e-3;
/// Characteristic cutoff relative to the smallest `|E_u(−ψ, φ′)|` on row 0.
pub const CHAR_TOL: f64 = 1e-6;
/// Shortest x-window that still supports the one-sided closures.
pub const MIN_WINDOW: usize = 5;
/// Initial-data values below this count as vanishing.
pub const NONCHAR_TOL: f64 = 1e-9;
const PAR_MIN: usize = 2048;

/// Sign of `λ = ±√(cΔ − 1 − Δ²)`. The minus branch gives the mirror surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    #[default]
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Time stepper for the march in `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Rk4,
    Midpoint,
}

/// `E(u, v) = (u + λv)/Δ` with `Δ = u² + v²` for a fixed normalized
/// constant `c`, and the coefficients of the construction equation
/// `E_u(p,q) f_xx + (E_v(p,q) − E_v(−q,p)) f_xy + E_u(−q,p) f_yy = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Symbol {
    pub c: f64,
    pub branch: Branch,
}

impl Symbol {
    pub fn new(c: f64, branch: Branch) -> Self {
        Symbol { c, branch }
    }

    /// Closed annulus `[lo, hi]` of admissible `Δ`.
    pub fn annulus(&self) -> (f64, f64) {
        let r = (self.c * self.c - 4.0).max(0.0).sqrt();
        let hi = (self.c + r) / 2.0;
        (1.0 / hi, hi)
    }

    pub fn radicand(&self, d: f64) -> f64 {
        self.c * d - 1.0 - d * d
    }

    /// Signed `λ(Δ)`; NaN below the clamp tolerance.
    pub fn lambda(&self, d: f64) -> f64 {
        let r = self.radicand(d);
        let s = if r >= 0.0 {
            r.sqrt()
        } else if r >= -CLAMP_TOL {
            0.0
        } else {
            f64::NAN
        };
        self.branch.sign() * s
    }

    pub fn e(&self, u: f64, v: f64) -> f64 {
        let d = u * u + v * v;
        (u + self.lambda(d) * v) / d
    }

    /// `(E_u, E_v)` at `(u, v)`.
    pub fn e_derivs(&self, u: f64, v: f64) -> (f64, f64) {
        let d = u * u + v * v;
        let l = self.lambda(d);
        let lp = (self.c - 2.0 * d) / (2.0 * l);
        let n = u + l * v;
        let eu = ((1.0 + lp * 2.0 * u * v) * d - n * 2.0 * u) / (d * d);
        let ev = ((l + lp * 2.0 * v * v) * d - n * 2.0 * v) / (d * d);
        (eu, ev)
    }

    /// Coefficients `(a, b, c)` of `f_xx`, `f_xy`, `f_yy` at `(p, q) = ∇f`.
    pub fn coefficients(&self, p: f64, q: f64) -> [f64; 3] {
        let (eu, ev) = self.e_derivs(p, q);
        let (eu2, ev2) = self.e_derivs(-q, p);
        [eu, ev - ev2, eu2]
    }

    /// `(g_x, g_y) = (E(−q, p), E(p, q))`.
    pub fn g_gradient(&self, p: f64, q: f64) -> (f64, f64) {
        (self.e(-q, p), self.e(p, q))
    }
}

/// A point `(u0, v0)` of the annulus where the initial data is
/// non-characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub u0: f64,
    pub v0: f64,
    /// `min(|E_u(u0,v0)|, |E_v(−v0,u0)|)`; zero for user-supplied seeds.
    pub score: f64,
}

impl Seed {
    pub fn at(u0: f64, v0: f64) -> Self {
        Seed { u0, v0, score: 0.0 }
    }

    pub fn delta(&self) -> f64 {
        self.u0 * self.u0 + self.v0 * self.v0
    }
}

/// Polar scan of the annulus for the point maximizing
/// `min(|E_u(u,v)|, |E_v(−v,u)|)`, keeping a margin of `SEED_MARGIN` of the
/// annulus width from its edges.
pub fn find_noncharacteristic_seed(c: f64) -> Result<Seed, ConstructError> {
    if !(c > 2.0) || !c.is_finite() {
        return Err(ConstructError::DegenerateAnnulus { c, margin: 0.0 });
    }
    let sym = Symbol::new(c, Branch::Plus);
    let (lo, hi) = sym.annulus();
    let w = hi - lo;
    let margin = SEED_MARGIN * w;
    if !(margin > MIN_SEED_MARGIN) {
        return Err(ConstructError::DegenerateAnnulus { c, margin });
    }
    let mut best = Seed {
        u0: f64::NAN,
        v0: f64::NAN,
        score: f64::NEG_INFINITY,
    };
    for k in 0..SEED_RADII {
        let d = lo + margin + (w - 2.0 * margin) * k as f64 / (SEED_RADII - 1) as f64;
        for j in 0..SEED_ANGLES {
            let t = std::f64::consts::TAU * j as f64 / SEED_ANGLES as f64;
            let (u, v) = (d.sqrt() * t.cos(), d.sqrt() * t.sin());
            let s = sym.e_derivs(u, v).0.abs().min(sym.e_derivs(-v, u).1.abs());
            if s > best.score {
                best = Seed {
                    u0: u,
                    v0: v,
                    score: s,
                };
            }
        }
    }
    if !(best.score > MIN_SEED_MARGIN) {
        return Err(ConstructError::DegenerateAnnulus {
            c,
            margin: best.score,
        });
    }
    Ok(best)
}

/// Value and first two derivatives of a function of `x`.
pub type Profile = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

/// Cauchy problem `f(x,0) = φ(x)`, `f_y(x,0) = ψ(x)` for the normalized
/// construction equation with constant `c > 2`.
#[derive(Clone)]
pub struct PdeProblem {
    pub c: f64,
    pub x_range: (f64, f64),
    pub ymax: f64,
    pub hx: f64,
    pub hy: f64,
    pub seed: Seed,
    pub phi: Profile,
    pub psi: Profile,
    pub branch: Branch,
    pub integrator: Integrator,
}

impl fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeProblem")
            .field("c", &self.c)
            .field("x_range", &self.x_range)
            .field("ymax", &self.ymax)
            .field("hx", &self.hx)
            .field("hy", &self.hy)
            .field("seed", &self.seed)
            .field("branch", &self.branch)
            .field("integrator", &self.integrator)
            .finish_non_exhaustive()
    }
}

impl PdeProblem {
    /// Data `φ(x) = x² + x·u0`, `ψ(x) = x + v0` on `[−half_width, half_width]`.
    pub fn standard(c: f64, seed: Seed, half_width: f64, ymax: f64, h: f64) -> Self {
        let (u0, v0) = (seed.u0, seed.v0);
        PdeProblem {
            c,
            x_range: (-half_width, half_width),
            ymax,
            hx: h,
            hy: h,
            seed,
            phi: Arc::new(move |x| [x * x + x * u0, 2.0 * x + u0, 2.0]),
            psi: Arc::new(move |x| [x + v0, 1.0, 0.0]),
            branch: Branch::Plus,
            integrator: Integrator::Rk4,
        }
    }

    pub fn symbol(&self) -> Symbol {
        Symbol::new(self.c, self.branch)
    }
}

/// Why a march in one direction stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    WindowExhausted,
    AnnulusExit,
    Characteristic,
    NegativeRadicand,
    NonFinite,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Termination::Completed => "completed",
            Termination::WindowExhausted => "window exhausted",
            Termination::AnnulusExit => "gradient left the annulus",
            Termination::Characteristic => "characteristic degeneracy",
            Termination::NegativeRadicand => "negative radicand",
            Termination::NonFinite => "non-finite state",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarchSummary {
    pub steps: usize,
    pub y_reached: f64,
    pub termination: Termination,
    /// Nodes dropped by the annulus, characteristic or radicand checks.
    pub halted_nodes: usize,
    /// First reason a node was dropped.
    pub first_halt: Option<Termination>,
}

/// Recovered second component with its path-independence defect.
#[derive(Debug, Clone, PartialEq)]
pub struct GField {
    pub g: Vec<f64>,
    /// `g_x = E(−f_y, f_x)` pointwise.
    pub gx: Vec<f64>,
    /// `g_y = E(f_x, f_y)` pointwise.
    pub gy: Vec<f64>,
    /// Discrete curl of `(g_x, g_y)` per cell, `(ny−1) × (nx−1)`.
    pub loop_defect: Vec<f64>,
    pub max_loop_defect: f64,
    pub masked_cells: usize,
}

/// Marched solution on the node grid `x_i = x0 + i·hx`, `y_r = y0 + r·hy`,
/// row-major with NaN outside each row's window.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionGrid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub hx: f64,
    pub hy: f64,
    pub row0: usize,
    /// Normalized constant of the unscaled solution.
    pub c: f64,
    /// Deformation factor applied to `f` and `g`.
    pub scale: f64,
    pub branch: Branch,
    pub integrator: Integrator,
    pub seed: Seed,
    /// Inclusive column window per row.
    pub windows: Vec<Option<(usize, usize)>>,
    pub f: Vec<f64>,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    pub fxx: Vec<f64>,
    pub fxy: Vec<f64>,
    pub fyy: Vec<f64>,
    pub g: Option<GField>,
    /// March summaries towards `+y` and `−y`.
    pub marches: [MarchSummary; 2],
}

impl SolutionGrid {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    pub fn y(&self, r: usize) -> f64 {
        self.y0 + r as f64 * self.hy
    }

    pub fn idx(&self, r: usize, i: usize) -> usize {
        r * self.nx + i
    }

    pub fn in_window(&self, r: usize, i: usize) -> bool {
        matches!(self.windows.get(r), Some(Some((a, b))) if (*a..=*b).contains(&i))
    }

    /// Nearest node to `(x, y)`, if inside the grid rectangle.
    pub fn node(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let i = ((x - self.x0) / self.hx).round();
        let r = ((y - self.y0) / self.hy).round();
        (i >= 0.0 && r >= 0.0 && (i as usize) < self.nx && (r as usize) < self.ny)
            .then_some((r as usize, i as usize))
    }

    /// `‖J‖²` target of the scaled map.
    pub fn c1(&self) -> f64 {
        self.scale * self.scale * self.c
    }

    /// Jacobian-determinant target of the scaled map.
    pub fn c2(&self) -> f64 {
        self.scale * self.scale
    }

    /// Largest loop defect over cells whose centres lie in `region`.
    pub fn max_loop_defect_in(&self, region: &crate::surface::Domain) -> Option<f64> {
        let g = self.g.as_ref()?;
        let cx = self.nx - 1;
        let mut out: f64 = 0.0;
        for r in 0..self.ny.saturating_sub(1) {
            let y = self.y(r) + self.hy / 2.0;
            if y < region.v0 || y > region.v1 {
                continue;
            }
            for i in 0..cx {
                let x = self.x(i) + self.hx / 2.0;
                let d = g.loop_defect[r * cx + i];
                if x >= region.u0 && x <= region.u1 && d.is_finite() {
                    out = out.max(d.abs());
                }
            }
        }
        Some(out)
    }

    pub fn valid_nodes(&self) -> usize {
        self.windows.iter().flatten().map(|(a, b)| b - a + 1).sum()
    }

    /// Multiplies `f`, `g` and their derivatives by `m`.
    pub fn scaled(mut self, m: f64) -> SolutionGrid {
        for v in [
            &mut self.f,
            &mut self.fx,
            &mut self.fy,
            &mut self.fxx,
            &mut self.fxy,
            &mut self.fyy,
        ] {
            v.iter_mut().for_each(|x| *x *= m);
        }
        if let Some(g) = &mut self.g {
            for v in [&mut g.g, &mut g.gx, &mut g.gy, &mut g.loop_defect] {
                v.iter_mut().for_each(|x| *x *= m);
            }
            g.max_loop_defect *= m.abs();
        }
        self.scale *= m;
        self
    }

    /// Affine solution `f = m·x`, `g = m·y` of the equal-angle branch.
    pub fn linear(
        m: f64,
        x_range: (f64, f64),
        y_range: (f64, f64),
        h: f64,
    ) -> Result<SolutionGrid, ConstructError> {
        let (i0, nx) = node_range(x_range, h)?;
        let (r0, ny) = node_range(y_range, h)?;
        let x0 = i0 as f64 * h;
        let y0 = r0 as f64 * h;
        let n = nx * ny;
        let mut f = vec![0.0; n];
        let mut g = vec![0.0; n];
        for r in 0..ny {
            for i in 0..nx {
                f[r * nx + i] = m * (x0 + i as f64 * h);
                g[r * nx + i] = m * (y0 + r as f64 * h);
            }
        }
        let done = MarchSummary {
            steps: 0,
            y_reached: 0.0,
            termination: Termination::Completed,
            halted_nodes: 0,
            first_halt: None,
        };
        Ok(SolutionGrid {
            nx,
            ny,
            x0,
            y0,
            hx: h,
            hy: h,
            row0: (-r0).max(0) as usize,
            c: 2.0,
            scale: m,
            branch: Branch::Plus,
            integrator: Integrator::Rk4,
            seed: Seed::at(1.0, 0.0),
            windows: vec![Some((0, nx - 1)); ny],
            f,
            fx: vec![m; n],
            fy: vec![0.0; n],
            fxx: vec![0.0; n],
            fxy: vec![0.0; n],
            fyy: vec![0.0; n],
            g: Some(GField {
                g,
                gx: vec![0.0; n],
                gy: vec![m; n],
                loop_defect: vec![0.0; (nx - 1) * (ny - 1)],
                max_loop_defect: 0.0,
                masked_cells: 0,
            }),
            marches: [done; 2],
        })
    }
}

/// First node index and node count of the multiples of `h` inside `range`.
fn node_range((a, b): (f64, f64), h: f64) -> Result<(i64, usize), ConstructError> {
    if !(h > 0.0) || !a.is_finite() || !b.is_finite() || !(b > a) {
        return Err(ConstructError::InvalidProblem(format!(
            "bad range [{a}, {b}] with step {h}"
        )));
    }
    let lo = (a / h - 1e-9).ceil() as i64;
    let hi = (b / h + 1e-9).floor() as i64;
    let n = (hi - lo + 1).max(0) as usize;
    if n < MIN_WINDOW {
        return Err(ConstructError::InvalidProblem(format!(
            "range [{a}, {b}] holds {n} nodes of step {h}, need {MIN_WINDOW}"
        )));
    }
    Ok((lo, n))
}

/// First derivative: centred inside, second-order one-sided at the ends.
pub(crate) fn d1(g: &[f64], h: f64) -> Vec<f64> {
    let n = g.len();
    let mut r = vec![0.0; n];
    for i in 1..n - 1 {
        r[i] = (g[i + 1] - g[i - 1]) / (2.0 * h);
    }
    r[0] = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h);
    r[n - 1] = (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) / (2.0 * h);
    r
}

/// Second derivative: centred inside, second-order one-sided at the ends.
pub(crate) fn d2(g: &[f64], h: f64) -> Vec<f64> {
    let n = g.len();
    let h2 = h * h;
    let mut r = vec![0.0; n];
    for i in 1..n - 1 {
        r[i] = (g[i + 1] - 2.0 * g[i] + g[i - 1]) / h2;
    }
    r[0] = (2.0 * g[0] - 5.0 * g[1] + 4.0 * g[2] - g[3]) / h2;
    r[n - 1] = (2.0 * g[n - 1] - 5.0 * g[n - 2] + 4.0 * g[n - 3] - g[n - 4]) / h2;
    r
}

struct RowDerivs {
    fx: Vec<f64>,
    fxx: Vec<f64>,
    fxy: Vec<f64>,
    fyy: Vec<f64>,
    coef_c: Vec<f64>,
}

fn row_derivs(sym: &Symbol, f: &[f64], w: &[f64], h: f64) -> RowDerivs {
    let fx = d1(f, h);
    let fxx = d2(f, h);
    let fxy = d1(w, h);
    let eval = |i: usize| {
        let [a, b, c] = sym.coefficients(fx[i], w[i]);
        (-(a * fxx[i] + b * fxy[i]) / c, c)
    };
    let out: Vec<(f64, f64)> = if f.len() >= PAR_MIN {
        (0..f.len()).into_par_iter().map(eval).collect()
    } else {
        (0..f.len()).map(eval).collect()
    };
    let (fyy, coef_c) = out.into_iter().unzip();
    RowDerivs {
        fx,
        fxx,
        fxy,
        fyy,
        coef_c,
    }
}

fn rhs(sym: &Symbol, f: &[f64], w: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    (w.to_vec(), row_derivs(sym, f, w, h).fyy)
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

fn step(
    sym: &Symbol,
    integ: Integrator,
    f: &[f64],
    w: &[f64],
    h: f64,
    dy: f64,
) -> (Vec<f64>, Vec<f64>) {
    match integ {
        Integrator::Rk4 => {
            let (k1f, k1w) = rhs(sym, f, w, h);
            let (k2f, k2w) = rhs(sym, &axpy(f, dy / 2.0, &k1f), &axpy(w, dy / 2.0, &k1w), h);
            let (k3f, k3w) = rhs(sym, &axpy(f, dy / 2.0, &k2f), &axpy(w, dy / 2.0, &k2w), h);
            let (k4f, k4w) = rhs(sym, &axpy(f, dy, &k3f), &axpy(w, dy, &k3w), h);
            let comb = |y: &[f64], k: [&[f64]; 4]| -> Vec<f64> {
                (0..y.len())
                    .map(|i| y[i] + dy / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
                    .collect()
            };
            (
                comb(f, [&k1f, &k2f, &k3f, &k4f]),
                comb(w, [&k1w, &k2w, &k3w, &k4w]),
            )
        }
        Integrator::Midpoint => {
            let (k1f, k1w) = rhs(sym, f, w, h);
            let (k2f, k2w) = rhs(sym, &axpy(f, dy / 2.0, &k1f), &axpy(w, dy / 2.0, &k1w), h);
            (axpy(f, dy, &k2f), axpy(w, dy, &k2w))
        }
    }
}

/// Row state `(first column, f, f_y)`.
struct Row {
    lo: usize,
    f: Vec<f64>,
    w: Vec<f64>,
}

struct Checker {
    sym: Symbol,
    band: (f64, f64),
    tol_char: f64,
}

impl Checker {
    fn classify(&self, fx: f64, w: f64, coef_c: f64) -> Option<Termination> {
        if !fx.is_finite() || !w.is_finite() {
            return Some(Termination::NonFinite);
        }
        let d = fx * fx + w * w;
        if self.sym.radicand(d) < -CLAMP_TOL {
            return Some(Termination::NegativeRadicand);
        }
        if d <= self.band.0 || d >= self.band.1 {
            return Some(Termination::AnnulusExit);
        }
        if !(coef_c.abs() >= self.tol_char) {
            return Some(Termination::Characteristic);
        }
        None
    }
}

fn march(prob: &PdeProblem, checker: &Checker, row0: &Row, dir: f64) -> (Vec<Row>, MarchSummary) {
    let sym = prob.symbol();
    let nsteps = (prob.ymax / prob.hy).round() as usize;
    let mut rows = Vec::new();
    let mut cur = Row {
        lo: row0.lo,
        f: row0.f.clone(),
        w: row0.w.clone(),
    };
    let mut summary = MarchSummary {
        steps: 0,
        y_reached: 0.0,
        termination: Termination::Completed,
        halted_nodes: 0,
        first_halt: None,
    };
    for k in 1..=nsteps {
        if cur.f.len() < MIN_WINDOW + 2 {
            summary.termination = Termination::WindowExhausted;
            break;
        }
        let (f, w) = step(
            &sym,
            prob.integrator,
            &cur.f,
            &cur.w,
            prob.hx,
            dir * prob.hy,
        );
        let n = f.len();
        let (f, w) = (f[1..n - 1].to_vec(), w[1..n - 1].to_vec());
        let lo = cur.lo + 1;
        let rd = row_derivs(&sym, &f, &w, prob.hx);
        let flags: Vec<Option<Termination>> = (0..f.len())
            .map(|i| checker.classify(rd.fx[i], w[i], rd.coef_c[i]))
            .collect();
        let bad: Vec<Termination> = flags.iter().flatten().copied().collect();
        if bad.is_empty() {
            cur = Row { lo, f, w };
        } else {
            summary.halted_nodes += bad.len();
            summary.first_halt.get_or_insert(bad[0]);
            // keep the longest run of healthy nodes
            let (mut best, mut start) = ((0, 0), None);
            for i in 0..=flags.len() {
                let ok = i < flags.len() && flags[i].is_none();
                match (ok, start) {
                    (true, None) => start = Some(i),
                    (false, Some(s)) => {
                        if i - s > best.1 - best.0 {
                            best = (s, i);
                        }
                        start = None;
                    }
                    _ => {}
                }
            }
            if best.1 - best.0 < MIN_WINDOW {
                summary.termination = bad[0];
                break;
            }
            cur = Row {
                lo: lo + best.0,
                f: f[best.0..best.1].to_vec(),
                w: w[best.0..best.1].to_vec(),
            };
        }
        summary.steps = k;
        summary.y_reached = dir * k as f64 * prob.hy;
        rows.push(Row {
            lo: cur.lo,
            f: cur.f.clone(),
            w: cur.w.clone(),
        });
    }
    (rows, summary)
}

/// Marches the Cauchy data in `±y`, trimming one node from each end of the
/// x-window per step and dropping nodes whose gradient leaves the annulus
/// interior or whose `f_yy` coefficient degenerates.
pub fn solve_pde(prob: &PdeProblem) -> Result<SolutionGrid, ConstructError> {
    let sym = prob.symbol();
    if !(prob.c > 2.0) || !prob.c.is_finite() {
        return Err(ConstructError::DegenerateAnnulus {
            c: prob.c,
            margin: 0.0,
        });
    }
    if !(prob.hy > 0.0) || !(prob.ymax >= 0.0) || !prob.ymax.is_finite() {
        return Err(ConstructError::InvalidProblem(format!(
            "need hy > 0 and ymax >= 0, got hy = {}, ymax = {}",
            prob.hy, prob.ymax
        )));
    }
    let (i0, nx) = node_range(prob.x_range, prob.hx)?;
    let x0 = i0 as f64 * prob.hx;
    let (lo, hi) = sym.annulus();
    let sd = prob.seed.delta();
    if !(sd > lo && sd < hi) {
        return Err(ConstructError::OutsideAnnulus {
            x: f64::NAN,
            delta: sd,
            lo,
            hi,
        });
    }
    let margin = ANNULUS_MARGIN * (hi - lo);
    let mut f0 = Vec::with_capacity(nx);
    let mut w0 = Vec::with_capacity(nx);
    let mut min_c = f64::INFINITY;
    for i in 0..nx {
        let x = x0 + i as f64 * prob.hx;
        let [phi, dphi, ddphi] = (prob.phi)(x);
        let [psi, _, _] = (prob.psi)(x);
        let d = dphi * dphi + psi * psi;
        if !(d > lo + margin && d < hi - margin) {
            return Err(ConstructError::OutsideAnnulus {
                x,
                delta: d,
                lo,
                hi,
            });
        }
        let eu = sym.e_derivs(dphi, psi).0;
        let ev = sym.e_derivs(-psi, dphi).1;
        for (name, value) in [
            ("E_u(phi', psi)", eu),
            ("E_v(-psi, phi')", ev),
            ("phi''", ddphi),
        ] {
            if !(value.abs() > NONCHAR_TOL) {
                return Err(ConstructError::Characteristic {
                    x,
                    quantity: name.into(),
                    value,
                });
            }
        }
        min_c = min_c.min(sym.coefficients(dphi, psi)[2].abs());
        f0.push(phi);
        w0.push(psi);
    }
    if !(min_c > NONCHAR_TOL) {
        return Err(ConstructError::Characteristic {
            x: f64::NAN,
            quantity: "E_u(-psi, phi')".into(),
            value: min_c,
        });
    }
    let checker = Checker {
        sym,
        band: (lo + margin, hi - margin),
        tol_char: CHAR_TOL * min_c,
    };
    let row0 = Row {
        lo: 0,
        f: f0,
        w: w0,
    };
    let ((up, up_sum), (down, down_sum)) = rayon::join(
        || march(prob, &checker, &row0, 1.0),
        || march(prob, &checker, &row0, -1.0),
    );

    let ny = up.len() + down.len() + 1;
    let r0 = down.len();
    let n = nx * ny;
    let mut grid = SolutionGrid {
        nx,
        ny,
        x0,
        y0: -(r0 as f64) * prob.hy,
        hx: prob.hx,
        hy: prob.hy,
        row0: r0,
        c: prob.c,
        scale: 1.0,
        branch: prob.branch,
        integrator: prob.integrator,
        seed: prob.seed,
        windows: vec![None; ny],
        f: vec![f64::NAN; n],
        fx: vec![f64::NAN; n],
        fy: vec![f64::NAN; n],
        fxx: vec![f64::NAN; n],
        fxy: vec![f64::NAN; n],
        fyy: vec![f64::NAN; n],
        g: None,
        marches: [up_sum, down_sum],
    };
    let ordered = down
        .iter()
        .rev()
        .chain(std::iter::once(&row0))
        .chain(up.iter());
    for (r, row) in ordered.enumerate() {
        let rd = row_derivs(&sym, &row.f, &row.w, prob.hx);
        for k in 0..row.f.len() {
            let at = r * nx + row.lo + k;
            grid.f[at] = row.f[k];
            grid.fy[at] = row.w[k];
            grid.fx[at] = rd.fx[k];
            grid.fxx[at] = rd.fxx[k];
            grid.fxy[at] = rd.fxy[k];
            grid.fyy[at] = rd.fyy[k];
        }
        grid.windows[r] = Some((row.lo, row.lo + row.f.len() - 1));
    }
    Ok(grid)
}
