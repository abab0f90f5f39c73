//! Command-line front end behind the `helix4` binary.
//!
//! Exit codes: 0 success, 2 unparsable input, 3 failed precondition,
//! 4 numerical degeneracy, 5 residual gate not met.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::catalog::{generate, CatalogError, CatalogSpec};
use crate::construct::{
    admissible_range, construct, deform, deform_inverse, find_noncharacteristic_seed, finish,
    recover_g, solve_pde, Branch, ConstructConfig, ConstructError, Construction,
    ConstructionSummary, GraphPatch, HelixParams, Integrator, PdeProblem, Seed,
};
use crate::expr::{Env, ExprDerivs, ExprError, ExprGraph};
use crate::grassmann::{
    plane_angles_via_bivectors, principal_angles, GeometryError, Plane, PrincipalAngles, Vec4,
};
use crate::io::{
    patch_points, samples_csv, to_json_string, write_obj, GridDump, IoError, COORD_LABELS_GRID,
    COORD_LABELS_R4,
};
use crate::surface::{
    verify_helix, Domain, StructureReport, SurfaceError, SurfacePatch, VerifyOptions,
};

/// Largest accepted gap between catalog angles and their expected values.
pub const EXPECTED_ANGLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Parse = 2,
    Precondition = 3,
    Numerical = 4,
    Gate = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Failure,
    pub message: String,
}

impl CliError {
    fn new(kind: Failure, message: impl Into<String>) -> Self {
        CliError {
            kind,
            message: message.into(),
        }
    }
}

impl From<ConstructError> for CliError {
    fn from(e: ConstructError) -> Self {
        let kind = match &e {
            ConstructError::Surface(s) => return s.clone().into(),
            ConstructError::Geometry(_) => Failure::Numerical,
            e if e.is_precondition() => Failure::Precondition,
            _ => Failure::Numerical,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<SurfaceError> for CliError {
    fn from(e: SurfaceError) -> Self {
        let kind = match e {
            SurfaceError::GridTooSmall(..) | SurfaceError::InvalidDomain(_) => {
                Failure::Precondition
            }
            _ => Failure::Numerical,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::new(Failure::Precondition, e.to_string())
    }
}

impl From<CatalogError> for CliError {
    fn from(e: CatalogError) -> Self {
        let kind = match e {
            CatalogError::InvalidParameter(_) | CatalogError::UnknownExample(_) => {
                Failure::Precondition
            }
            _ => Failure::Numerical,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::new(Failure::Precondition, e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "helix4",
    version,
    about = "Principal angles, helix-surface verification and construction in R^4"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Principal angles and bivector angles between two planes.
    Angles(AnglesArgs),
    /// Verify a graph or catalog surface against the helix equations.
    Verify(VerifyArgs),
    /// Build a helix graph with prescribed angles by solving the construction PDE.
    Construct(ConstructArgs),
    /// Convert between deformation parameters (m, c) and angles.
    Deform(DeformArgs),
    /// Generate and verify a catalog surface.
    Example(ExampleArgs),
    /// Convert a saved grid dump to csv, json or obj.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct AnglesArgs {
    /// First plane as "a,b,c,d;e,f,g,h" (two spanning vectors).
    #[arg(long, allow_hyphen_values = true)]
    pub v: String,
    /// Second plane, same format.
    #[arg(long, allow_hyphen_values = true)]
    pub w: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Catalog surface instead of a graph.
    #[arg(long, conflicts_with_all = ["f", "g"])]
    pub example: Option<String>,
    /// Third coordinate of the graph as an expression in x, y.
    #[arg(long, requires = "g", allow_hyphen_values = true)]
    pub f: Option<String>,
    /// Fourth coordinate of the graph.
    #[arg(long, requires = "f", allow_hyphen_values = true)]
    pub g: Option<String>,
    #[arg(long, default_value = "-1,1", allow_hyphen_values = true)]
    pub x: String,
    #[arg(long, default_value = "-1,1", allow_hyphen_values = true)]
    pub y: String,
    /// Sample grid "n,m".
    #[arg(long, default_value = "21,21")]
    pub grid: String,
    /// Reference plane "a,b,c,d;e,f,g,h"; defaults to span(e1, e2) or the
    /// catalog plane.
    #[arg(long, allow_hyphen_values = true)]
    pub plane: Option<String>,
    /// Angle standard-deviation gate overriding the per-source default.
    #[arg(long)]
    pub gate: Option<f64>,
    /// Per-sample CSV output.
    #[arg(long)]
    pub samples_csv: Option<PathBuf>,
    /// OBJ mesh output.
    #[arg(long)]
    pub obj: Option<PathBuf>,
    /// Coordinates kept in the OBJ mesh, e.g. "p1,p2,p3".
    #[arg(long, default_value = "p1,p2,p3")]
    pub coords: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    /// Smaller principal angle in radians.
    #[arg(long, required_unless_present = "config", requires = "theta2", value_parser = parse_radians, allow_hyphen_values = true)]
    pub theta1: Option<f64>,
    /// Larger principal angle in radians.
    #[arg(long, required_unless_present = "config", requires = "theta1", value_parser = parse_radians, allow_hyphen_values = true)]
    pub theta2: Option<f64>,
    /// PDE problem as JSON {c1, x, ymax, hx, hy, seed, phi, psi}.
    #[arg(long, conflicts_with_all = ["theta1", "theta2"])]
    pub config: Option<PathBuf>,
    /// Grid step in both directions.
    #[arg(long)]
    pub h: Option<f64>,
    /// Initial-data interval "a,b".
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<String>,
    #[arg(long)]
    pub ymax: Option<f64>,
    /// Seed "u0,v0"; automatic when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub seed: Option<String>,
    /// Square-root branch: plus or minus.
    #[arg(long)]
    pub branch: Option<String>,
    /// Integrator: rk4 or midpoint.
    #[arg(long)]
    pub integrator: Option<String>,
    /// Verification grid "n,m".
    #[arg(long, default_value = "21,21")]
    pub grid: String,
    #[arg(long)]
    pub gate: Option<f64>,
    /// Directory for report.json, grid.bin and grid.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DeformArgs {
    #[arg(long, requires = "c", conflicts_with_all = ["theta1", "theta2"], allow_hyphen_values = true)]
    pub m: Option<f64>,
    #[arg(long, requires = "m", allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, requires = "theta2", value_parser = parse_radians, allow_hyphen_values = true)]
    pub theta1: Option<f64>,
    #[arg(long, requires = "theta1", value_parser = parse_radians, allow_hyphen_values = true)]
    pub theta2: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    /// One of the catalog names.
    pub name: String,
    #[arg(long, default_value = "50,50")]
    pub grid: String,
    #[arg(long)]
    pub gate: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Sidecar JSON of a grid dump.
    #[arg(long)]
    pub input: PathBuf,
    /// csv, json or obj.
    #[arg(long)]
    pub format: String,
    /// Coordinates kept in the OBJ mesh, from x, y, f, g.
    #[arg(long, default_value = "x,y,f")]
    pub coords: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Initial seed of a PDE config: `"auto"` or explicit coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Auto(String),
    At { u0: f64, v0: f64 },
}

impl Default for SeedSpec {
    fn default() -> Self {
        SeedSpec::Auto("auto".into())
    }
}

/// PDE problem in the config dialect. `c1` is the normalized constant, so
/// the target angles are those of `deform(m, c1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    pub c1: f64,
    #[serde(default = "default_m")]
    pub m: f64,
    pub x: [f64; 2],
    pub ymax: f64,
    pub hx: f64,
    pub hy: f64,
    #[serde(default)]
    pub seed: SeedSpec,
    #[serde(default = "default_phi")]
    pub phi: String,
    #[serde(default = "default_psi")]
    pub psi: String,
    #[serde(default)]
    pub branch: Branch,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "default_clip")]
    pub clip_to_annulus: bool,
}

fn default_m() -> f64 {
    1.0
}

fn default_phi() -> String {
    "x^2 + u0*x".into()
}

fn default_psi() -> String {
    "x + v0".into()
}

fn default_clip() -> bool {
    true
}

impl PdeConfig {
    pub fn parse(json: &str) -> Result<Self, CliError> {
        serde_json::from_str(json)
            .map_err(|e| CliError::new(Failure::Parse, format!("config: {e}")))
    }

    pub fn seed(&self) -> Result<Option<Seed>, CliError> {
        match &self.seed {
            SeedSpec::Auto(s) if s == "auto" => Ok(None),
            SeedSpec::Auto(s) => Err(CliError::new(
                Failure::Parse,
                format!("config: seed must be \"auto\" or {{u0, v0}}, got {s:?}"),
            )),
            SeedSpec::At { u0, v0 } => Ok(Some(Seed::at(*u0, *v0))),
        }
    }

    /// Target angles, the parsed problem and the chosen seed.
    pub fn problem(&self) -> Result<(HelixParams, PdeProblem), CliError> {
        let angles = deform(self.m, self.c1)?;
        let params = HelixParams::from_angles(angles.theta1, angles.theta2)?;
        if params.is_totally_geodesic_branch() {
            return Err(CliError::new(
                Failure::Precondition,
                "c1 = 2 has no PDE problem; use --theta1 = --theta2",
            ));
        }
        let seed = match self.seed()? {
            Some(s) => s,
            None => find_noncharacteristic_seed(self.c1)?,
        };
        let phi = parse_field("phi", &self.phi)?;
        let psi = parse_field("psi", &self.psi)?;
        let env = Env {
            u0: seed.u0,
            v0: seed.v0,
            ..Env::default()
        };
        let profile = |d: ExprDerivs| -> crate::construct::Profile {
            Arc::new(move |x| d.profile(&Env { x, ..env }).unwrap_or([f64::NAN; 3]))
        };
        let mut prob = PdeProblem::standard(self.c1, seed, 1.0, self.ymax, self.hx);
        prob.x_range = (self.x[0], self.x[1]);
        prob.hy = self.hy;
        prob.phi = profile(phi);
        prob.psi = profile(psi);
        prob.branch = self.branch;
        prob.integrator = self.integrator;
        if self.clip_to_annulus {
            prob.x_range = admissible_range(&prob);
        }
        Ok((params, prob))
    }

    /// Solves, recovers `g`, scales by `m` and verifies.
    pub fn construct(&self, verify_grid: [usize; 2]) -> Result<Construction, CliError> {
        let (params, prob) = self.problem()?;
        let grid = recover_g(&solve_pde(&prob)?)?.scaled(self.m);
        Ok(finish(params, self.c1, prob.seed, grid, verify_grid)?)
    }
}

fn parse_field(name: &str, src: &str) -> Result<ExprDerivs, CliError> {
    ExprDerivs::parse(src).map_err(|e| expr_error(name, src, &e))
}

fn expr_error(name: &str, src: &str, e: &ExprError) -> CliError {
    CliError::new(Failure::Parse, format!("{name}: {}", e.render(src)))
}

/// Angle in radians; values carrying a degree marker are rejected.
pub fn parse_radians(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    if t.contains('°')
        || lower.ends_with("deg")
        || lower.ends_with("degrees")
        || lower.ends_with('d')
    {
        return Err(format!(
            "{s:?} looks like degrees; angles are accepted in radians only"
        ));
    }
    let v: f64 = t.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if !v.is_finite() {
        return Err(format!("{s:?} is not finite"));
    }
    Ok(v)
}

fn parse_floats(what: &str, s: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let xs: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    match xs {
        Ok(xs) if xs.len() == n && xs.iter().all(|x| x.is_finite()) => Ok(xs),
        _ => Err(CliError::new(
            Failure::Parse,
            format!("{what}: expected {n} comma-separated numbers, got {s:?}"),
        )),
    }
}

fn parse_pair(what: &str, s: &str) -> Result<[f64; 2], CliError> {
    let v = parse_floats(what, s, 2)?;
    Ok([v[0], v[1]])
}

fn parse_grid(s: &str) -> Result<[usize; 2], CliError> {
    let parts: Result<Vec<usize>, _> = s.split(',').map(|p| p.trim().parse::<usize>()).collect();
    match parts.as_deref() {
        Ok([n]) => Ok([*n, *n]),
        Ok([n, m]) => Ok([*n, *m]),
        _ => Err(CliError::new(
            Failure::Parse,
            format!("grid: expected \"n\" or \"n,m\", got {s:?}"),
        )),
    }
}

/// Plane spanned by two vectors written "a,b,c,d;e,f,g,h".
pub fn parse_plane(s: &str) -> Result<Plane, CliError> {
    let halves: Vec<&str> = s.split(';').collect();
    if halves.len() != 2 {
        return Err(CliError::new(
            Failure::Parse,
            format!("plane: expected two vectors separated by ';', got {s:?}"),
        ));
    }
    let a = parse_floats("plane vector", halves[0], 4)?;
    let b = parse_floats("plane vector", halves[1], 4)?;
    Ok(Plane::from_span(
        Vec4::from_column_slice(&a),
        Vec4::from_column_slice(&b),
    )?)
}

fn parse_coords(s: &str, labels: [&str; 4]) -> Result<[usize; 3], CliError> {
    let idx: Option<Vec<usize>> = s
        .split(',')
        .map(|p| labels.iter().position(|l| *l == p.trim()))
        .collect();
    match idx.as_deref() {
        Some([a, b, c]) if a != b && b != c && a != c => Ok([*a, *b, *c]),
        _ => Err(CliError::new(
            Failure::Parse,
            format!(
                "coords: expected three distinct names from {}, got {s:?}",
                labels.join(", ")
            ),
        )),
    }
}

fn parse_branch(s: &str) -> Result<Branch, CliError> {
    match s {
        "plus" => Ok(Branch::Plus),
        "minus" => Ok(Branch::Minus),
        _ => Err(CliError::new(
            Failure::Parse,
            format!("branch: expected plus or minus, got {s:?}"),
        )),
    }
}

fn parse_integrator(s: &str) -> Result<Integrator, CliError> {
    match s {
        "rk4" => Ok(Integrator::Rk4),
        "midpoint" => Ok(Integrator::Midpoint),
        _ => Err(CliError::new(
            Failure::Parse,
            format!("integrator: expected rk4 or midpoint, got {s:?}"),
        )),
    }
}

fn domain(x: [f64; 2], y: [f64; 2]) -> Result<Domain, CliError> {
    Ok(Domain::new(x[0], x[1], y[0], y[1])?)
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::new(Failure::Precondition, format!("{}: {e}", p.display()))),
        None => match stdout.write_all(text.as_bytes()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                Err(CliError::new(Failure::Numerical, format!("stdout: {e}")))
            }
            _ => Ok(()),
        },
    }
}

fn gate_failure(what: &str, detail: String) -> CliError {
    CliError::new(Failure::Gate, format!("{what}: {detail}"))
}

#[derive(Serialize)]
struct AnglesOutput {
    theta1: f64,
    theta2: f64,
    theta: f64,
    theta_perp: f64,
    cos_theta: f64,
    cos_theta_perp: f64,
}

fn cmd_angles(a: &AnglesArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let v = parse_plane(&a.v)?;
    let w = parse_plane(&a.w)?;
    let pa = principal_angles(&v, &w)?;
    let b = plane_angles_via_bivectors(&v, &w);
    let out = AnglesOutput {
        theta1: pa.theta1,
        theta2: pa.theta2,
        theta: b.theta,
        theta_perp: b.theta_perp,
        cos_theta: b.cos_theta,
        cos_theta_perp: b.cos_theta_perp,
    };
    emit(&to_json_string(&out)?, a.out.as_deref(), stdout)
}

fn write_side_outputs(
    patch: &dyn SurfacePatch,
    report: &StructureReport,
    grid: [usize; 2],
    csv: Option<&Path>,
    obj: Option<(&Path, &str)>,
) -> Result<(), CliError> {
    if let Some(p) = csv {
        crate::io::write_text(p, &samples_csv(report)?)?;
    }
    if let Some((p, coords)) = obj {
        let triple = parse_coords(coords, COORD_LABELS_R4)?;
        let pts = patch_points(patch, grid[0], grid[1]);
        crate::io::write_text(
            p,
            &write_obj(grid[0], grid[1], &pts, triple, COORD_LABELS_R4)?,
        )?;
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let grid = parse_grid(&a.grid)?;
    let plane = a.plane.as_deref().map(parse_plane).transpose()?;
    if a.obj.is_some() {
        parse_coords(&a.coords, COORD_LABELS_R4)?;
    }
    let (patch, pi): (Box<dyn SurfacePatch>, Plane) = match (&a.example, &a.f, &a.g) {
        (Some(name), _, _) => {
            let s = generate(&CatalogSpec::named(name)?)?;
            (Box::new(s.patch), plane.unwrap_or(s.pi))
        }
        (None, Some(f), Some(g)) => {
            let d = domain(parse_pair("x", &a.x)?, parse_pair("y", &a.y)?)?;
            let graph = ExprGraph::new(d, parse_field("f", f)?, parse_field("g", g)?);
            (
                Box::new(GraphPatch::new(graph)),
                plane.unwrap_or(Plane::coordinate(0, 1)),
            )
        }
        _ => {
            return Err(CliError::new(
                Failure::Parse,
                "verify needs --example or both --f and --g",
            ))
        }
    };
    let opts = VerifyOptions {
        angle_gate: a.gate,
        keep_samples: a.samples_csv.is_some(),
        ..VerifyOptions::new(grid[0], grid[1])
    };
    let report = verify_helix(patch.as_ref(), &pi, &opts)?;
    write_side_outputs(
        patch.as_ref(),
        &report,
        grid,
        a.samples_csv.as_deref(),
        a.obj.as_deref().map(|p| (p, a.coords.as_str())),
    )?;
    emit(&to_json_string(&report)?, a.out.as_deref(), stdout)?;
    if !report.is_helix {
        return Err(gate_failure(
            "not a helix surface",
            format!(
                "angle std {:e} >= gate {:e}",
                report.angle_std(),
                report.angle_gate
            ),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct ConstructOutput<'a> {
    header: ConstructionSummary,
    angle_gate: f64,
    passed: bool,
    structure: &'a StructureReport,
}

fn cmd_construct(a: &ConstructArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let grid = parse_grid(&a.grid)?;
    let x = a.x.as_deref().map(|s| parse_pair("x", s)).transpose()?;
    let seed = a
        .seed
        .as_deref()
        .map(|s| parse_pair("seed", s))
        .transpose()?;
    let branch = a.branch.as_deref().map(parse_branch).transpose()?;
    let integrator = a.integrator.as_deref().map(parse_integrator).transpose()?;
    let cons = if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::new(Failure::Precondition, format!("{}: {e}", path.display()))
        })?;
        let mut cfg = PdeConfig::parse(&text)?;
        if let Some(h) = a.h {
            cfg.hx = h;
            cfg.hy = h;
        }
        if let Some(x) = x {
            cfg.x = x;
        }
        if let Some(y) = a.ymax {
            cfg.ymax = y;
        }
        if let Some([u0, v0]) = seed {
            cfg.seed = SeedSpec::At { u0, v0 };
        }
        cfg.branch = branch.unwrap_or(cfg.branch);
        cfg.integrator = integrator.unwrap_or(cfg.integrator);
        cfg.construct(grid)?
    } else {
        let (t1, t2) = (a.theta1.unwrap_or_default(), a.theta2.unwrap_or_default());
        let mut cfg = ConstructConfig::new(t1, t2);
        if let Some(h) = a.h {
            cfg = cfg.with_step(h);
        }
        cfg.x = x.unwrap_or(cfg.x);
        cfg.ymax = a.ymax.unwrap_or(cfg.ymax);
        cfg.seed = seed;
        cfg.branch = branch.unwrap_or(cfg.branch);
        cfg.integrator = integrator.unwrap_or(cfg.integrator);
        cfg.verify_grid = grid;
        construct(&cfg)?
    };
    let gate = a.gate.unwrap_or(cons.report.angle_gate);
    let passed = cons.report.angle_std() < gate;
    let report = to_json_string(&ConstructOutput {
        header: cons.summary(),
        angle_gate: gate,
        passed,
        structure: &cons.report,
    })?;
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| {
                CliError::new(Failure::Precondition, format!("{}: {e}", dir.display()))
            })?;
            crate::io::write_text(&dir.join("report.json"), &report)?;
            GridDump::from_construction(&cons).write(&dir.join("grid.bin"))?;
        }
        None => emit(&report, None, stdout)?,
    }
    if !passed {
        return Err(gate_failure(
            "angles not constant",
            format!("std {:e} >= gate {gate:e}", cons.report.angle_std()),
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct DeformOutput {
    m: f64,
    c: f64,
    c1: f64,
    c2: f64,
    theta1: f64,
    theta2: f64,
}

fn cmd_deform(a: &DeformArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let out = match (a.m, a.c, a.theta1, a.theta2) {
        (Some(m), Some(c), None, None) => {
            let PrincipalAngles { theta1, theta2 } = deform(m, c)?;
            DeformOutput {
                m,
                c,
                c1: m * m * c,
                c2: m * m,
                theta1,
                theta2,
            }
        }
        (None, None, Some(theta1), Some(theta2)) => {
            let p = HelixParams::from_angles(theta1, theta2)?;
            let (m, c) = deform_inverse(&p.angles())?;
            DeformOutput {
                m,
                c,
                c1: p.c1,
                c2: p.c2,
                theta1,
                theta2,
            }
        }
        _ => {
            return Err(CliError::new(
                Failure::Parse,
                "deform needs --m and --c, or --theta1 and --theta2",
            ))
        }
    };
    emit(&to_json_string(&out)?, a.out.as_deref(), stdout)
}

#[derive(Serialize)]
struct ExampleOutput<'a> {
    name: &'a str,
    spec: &'a CatalogSpec,
    reference_plane: &'a Plane,
    expected: Option<PrincipalAngles>,
    /// Largest gap between measured mean and expected angles.
    angle_error: Option<f64>,
    geodesic_defect: Option<f64>,
    passed: bool,
    report: &'a StructureReport,
}

fn cmd_example(a: &ExampleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let grid = parse_grid(&a.grid)?;
    let s = generate(&CatalogSpec::named(&a.name)?)?;
    let opts = VerifyOptions {
        angle_gate: a.gate,
        keep_samples: false,
        ..VerifyOptions::new(grid[0], grid[1])
    };
    let report = verify_helix(&s.patch, &s.pi, &opts)?;
    let angle_error = s.expected.map(|e| {
        (report.angles.theta1.mean - e.theta1)
            .abs()
            .max((report.angles.theta2.mean - e.theta2).abs())
    });
    let passed = report.is_helix && angle_error.is_none_or(|e| e < EXPECTED_ANGLE_TOL);
    let out = ExampleOutput {
        name: &a.name,
        spec: &s.spec,
        reference_plane: &s.pi,
        expected: s.expected,
        angle_error,
        geodesic_defect: s.geodesic_defect,
        passed,
        report: &report,
    };
    emit(&to_json_string(&out)?, a.out.as_deref(), stdout)?;
    if !passed {
        return Err(gate_failure(
            &a.name,
            format!(
                "helix = {}, angle std {:e}, angle error {:?}",
                report.is_helix,
                report.angle_std(),
                angle_error
            ),
        ));
    }
    Ok(())
}

fn cmd_export(a: &ExportArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let dump = GridDump::read(&a.input)?;
    let text = match a.format.as_str() {
        "csv" => dump.to_csv()?,
        "json" => dump.to_json()?,
        "obj" => {
            let triple = parse_coords(&a.coords, COORD_LABELS_GRID)?;
            write_obj(
                dump.header.nx,
                dump.header.ny,
                &dump.points(),
                triple,
                COORD_LABELS_GRID,
            )?
        }
        other => {
            return Err(CliError::new(
                Failure::Parse,
                format!("format: expected csv, json or obj, got {other:?}"),
            ))
        }
    };
    emit(&text, a.out.as_deref(), stdout)
}

/// Executes a parsed command.
pub fn execute(cmd: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Angles(a) => cmd_angles(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout),
        Command::Construct(a) => cmd_construct(a, stdout),
        Command::Deform(a) => cmd_deform(a, stdout),
        Command::Example(a) => cmd_example(a, stdout),
        Command::Export(a) => cmd_export(a, stdout),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(text.as_bytes());
                Failure::Parse as i32
            } else {
                let _ = stdout.write_all(text.as_bytes());
                0
            };
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.kind as i32
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("helix4").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn radians_only() {
        assert_eq!(parse_radians("0.5").unwrap(), 0.5);
        for s in ["30deg", "30°", "30 DEG", "30d"] {
            assert!(parse_radians(s).is_err(), "{s}");
        }
        let (code, _, err) = call(&["construct", "--theta1", "30deg", "--theta2", "1.0"]);
        assert_eq!(code, 2);
        assert!(err.contains("radians"), "{err}");
    }

    #[test]
    fn deform_forward() {
        let (code, out, _) = call(&["deform", "--m", "1", "--c", "3.3333333333333335"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["theta1"].as_f64().unwrap() - std::f64::consts::FRAC_PI_6).abs() < 1e-12);
        assert!((v["theta2"].as_f64().unwrap() - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
    }

    #[test]
    fn angles_of_coordinate_planes() {
        let (code, out, _) = call(&["angles", "--v", "1,0,0,0;0,1,0,0", "--w", "1,0,0,0;0,0,1,0"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["theta1"].as_f64().unwrap().abs() < 1e-12);
        assert!((v["theta2"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn failure_classes() {
        assert_eq!(
            call(&["angles", "--v", "1,0,0;0,1,0,0", "--w", "1,0,0,0;0,0,1,0"]).0,
            2
        );
        assert_eq!(
            call(&["angles", "--v", "1,0,0,0;2,0,0,0", "--w", "1,0,0,0;0,0,1,0"]).0,
            3
        );
        assert_eq!(call(&["deform", "--m", "-1", "--c", "3"]).0, 3);
        assert_eq!(
            call(&["construct", "--theta1", "1.2", "--theta2", "0.3"]).0,
            3
        );
        assert_eq!(call(&["example", "nonesuch"]).0, 3);
        assert_eq!(call(&["verify", "--f", "x +", "--g", "y"]).0, 2);
        assert_eq!(
            call(&["verify", "--f", "x^2+y^2", "--g", "x*y", "--grid", "9"]).0,
            5
        );
        assert_eq!(call(&[]).0, 2);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn config_seed_forms() {
        let base = r#"{"c1": 3.3333333333333335, "x": [-0.05, 0.05], "ymax": 0.01, "hx": 0.002, "hy": 0.002"#;
        let auto = PdeConfig::parse(&format!("{base}, \"seed\": \"auto\"}}")).unwrap();
        assert_eq!(auto.seed().unwrap(), None);
        let at =
            PdeConfig::parse(&format!("{base}, \"seed\": {{\"u0\": 1.0, \"v0\": 0.5}}}}")).unwrap();
        assert_eq!(at.seed().unwrap().map(|s| (s.u0, s.v0)), Some((1.0, 0.5)));
        assert_eq!(
            PdeConfig::parse(&format!("{base}, \"seed\": \"near\"}}"))
                .unwrap()
                .seed()
                .unwrap_err()
                .kind,
            Failure::Parse
        );
        assert_eq!(
            PdeConfig::parse(&format!("{base}, \"bogus\": 1}}"))
                .unwrap_err()
                .kind,
            Failure::Parse
        );
    }
}
