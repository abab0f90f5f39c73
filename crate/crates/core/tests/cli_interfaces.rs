use std::f64::consts::{FRAC_PI_3, FRAC_PI_6};
use std::path::Path;
use std::process::{Command, Output};

use helix_surfaces::io::GridDump;
use serde_json::Value;

fn helix4(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helix4"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

const THETAS: [&str; 4] = [
    "--theta1",
    "0.5235987755982988",
    "--theta2",
    "1.0471975511965976",
];

fn construct_into(dir: &Path) -> Output {
    let mut args = vec!["construct"];
    args.extend(THETAS);
    args.extend([
        "--h",
        "4e-3",
        "--grid",
        "9,9",
        "--out",
        dir.to_str().unwrap(),
    ]);
    helix4(&args)
}

#[test]
fn angles_between_planes() {
    let o = helix4(&[
        "angles",
        "--v",
        "1,0,0,0;0,1,0,0",
        "--w",
        "0,0.5,0,0.8660254037844386;0.5,0,0.8660254037844386,0",
    ]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!((num(&v["theta1"]) - FRAC_PI_3).abs() < 1e-12, "{v}");
    assert!((num(&v["theta2"]) - FRAC_PI_3).abs() < 1e-12, "{v}");
    for key in ["theta", "theta_perp", "cos_theta", "cos_theta_perp"] {
        assert!(v[key].is_number(), "{key}");
    }
}

#[test]
fn construct_reports_constants_and_writes_dump() {
    let dir = tempfile::tempdir().unwrap();
    let o = construct_into(dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    let h = &report["header"];
    assert!((num(&h["c1"]) - 10.0 / 3.0).abs() < 1e-12, "{h}");
    assert!((num(&h["c2"]) - 1.0).abs() < 1e-12);
    assert!(h["seed"]["u0"].is_number() && h["seed"]["v0"].is_number());
    assert_eq!(report["passed"], Value::Bool(true));
    assert!(report["structure"]["angles"]["theta1"]["mean"].is_number());

    let dump = GridDump::read(&dir.path().join("grid.json")).unwrap();
    assert_eq!(dump.header.fields.len(), dump.data.len());
    let bytes = std::fs::metadata(dir.path().join("grid.bin"))
        .unwrap()
        .len() as usize;
    assert_eq!(bytes, dump.header.nx * dump.header.ny * dump.data.len() * 8);
    let sidecar: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("grid.json")).unwrap())
            .unwrap();
    for key in ["version", "nx", "ny", "x0", "y0", "hx", "hy", "fields"] {
        assert!(sidecar.get(key).is_some(), "{key}");
    }
}

#[test]
fn construct_output_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(code(&construct_into(a.path())), 0);
    assert_eq!(code(&construct_into(b.path())), 0);
    for f in ["report.json", "grid.bin", "grid.json"] {
        let (x, y) = (
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
        );
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn export_formats() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&construct_into(dir.path())), 0);
    let input = dir.path().join("grid.json");
    let input = input.to_str().unwrap();

    let csv = helix4(&["export", "--input", input, "--format", "csv"]);
    assert_eq!(code(&csv), 0);
    let text = String::from_utf8(csv.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let head = rows.headers().unwrap().clone();
    assert_eq!(&head[0], "x");
    assert_eq!(&head[2], "f");
    let n = rows.records().collect::<Result<Vec<_>, _>>().unwrap().len();
    assert!(n > 0);

    let js = helix4(&["export", "--input", input, "--format", "json"]);
    assert_eq!(code(&js), 0);
    let v = json(&js);
    let nx = v["header"]["nx"].as_u64().unwrap() as usize;
    assert_eq!(v["x"].as_array().unwrap().len(), nx);
    assert!(v["data"]["f"].is_array() && v["data"]["r_det"].is_array());

    let out = dir.path().join("mesh.obj");
    let obj = helix4(&[
        "export",
        "--input",
        input,
        "--format",
        "obj",
        "--coords",
        "x,y,g",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&obj), 0);
    let mesh = std::fs::read_to_string(&out).unwrap();
    assert!(
        mesh.contains("# dropped coordinate: f"),
        "{}",
        &mesh[..200.min(mesh.len())]
    );
    assert!(mesh.lines().filter(|l| l.starts_with("v ")).count() > 0);
    assert!(mesh.lines().filter(|l| l.starts_with("f ")).count() > 0);

    assert_eq!(
        code(&helix4(&["export", "--input", input, "--format", "xml"])),
        2
    );
}

#[test]
fn config_file_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("pde.json");
    std::fs::write(&cfg, r#"{"c1": 3.3333333333333335, "x": [-0.05, 0.05], "ymax": 0.02, "hx": 0.004, "hy": 0.004, "seed": "auto"}"#).unwrap();
    let o = helix4(&[
        "construct",
        "--config",
        cfg.to_str().unwrap(),
        "--grid",
        "7,7",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert!((num(&v["header"]["theta1"]) - FRAC_PI_6).abs() < 1e-9);
    assert!((num(&v["header"]["theta2"]) - FRAC_PI_3).abs() < 1e-9);

    let mut args = vec!["construct", "--config", cfg.to_str().unwrap()];
    args.extend(THETAS);
    assert_eq!(code(&helix4(&args)), 2);

    std::fs::write(
        &cfg,
        r#"{"c1": 3.3, "x": [-0.05, 0.05], "ymax": 0.02, "hx": 0.004, "hy": 0.004, "typo": 1}"#,
    )
    .unwrap();
    assert_eq!(
        code(&helix4(&["construct", "--config", cfg.to_str().unwrap()])),
        2
    );
    std::fs::write(
        &cfg,
        r#"{"c1": 1.5, "x": [-0.05, 0.05], "ymax": 0.02, "hx": 0.004, "hy": 0.004}"#,
    )
    .unwrap();
    assert_eq!(
        code(&helix4(&["construct", "--config", cfg.to_str().unwrap()])),
        3
    );
}

#[test]
fn deform_round_trip() {
    let o = helix4(&["deform", "--m", "1", "--c", "3.3333333333333335"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert!((num(&v["theta1"]) - FRAC_PI_6).abs() < 1e-12);
    assert!((num(&v["theta2"]) - FRAC_PI_3).abs() < 1e-12);
    let mut args = vec!["deform"];
    args.extend(THETAS);
    let v = json(&helix4(&args));
    assert!((num(&v["m"]) - 1.0).abs() < 1e-12 && (num(&v["c"]) - 10.0 / 3.0).abs() < 1e-12);
    assert_eq!(code(&helix4(&["deform", "--m", "-1", "--c", "3"])), 3);
    assert_eq!(code(&helix4(&["deform", "--m", "1", "--c", "1.5"])), 3);
}

#[test]
fn catalog_example_passes() {
    let o = helix4(&["example", "clifford_torus", "--grid", "20,20"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["passed"], Value::Bool(true));
    assert!(num(&v["report"]["angles"]["theta1"]["std"]) < 1e-9);
    assert!(num(&v["angle_error"]) < 1e-10);
    assert_eq!(
        code(&helix4(&["example", "round_sphere", "--grid", "10"])),
        5
    );
    assert_eq!(code(&helix4(&["example", "torus_knot"])), 3);
}

#[test]
fn verify_graph_with_side_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, obj) = (dir.path().join("s.csv"), dir.path().join("m.obj"));
    let o = helix4(&[
        "verify",
        "--f",
        "0.5*x + y",
        "--g",
        "-x + 2*y",
        "--grid",
        "6,5",
        "--samples-csv",
        csv.to_str().unwrap(),
        "--obj",
        obj.to_str().unwrap(),
        "--coords",
        "p1,p3,p4",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&o)["is_helix"], Value::Bool(true));
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("u,v,p1,p2,p3,p4,theta1,theta2"), "{rows}");
    assert_eq!(rows.lines().count(), 1 + 30);
    assert!(std::fs::read_to_string(&obj)
        .unwrap()
        .contains("# dropped coordinate: p2"));
}

#[test]
fn exit_codes() {
    let mut deg = vec!["construct", "--theta1", "30deg", "--theta2", "60deg"];
    assert_eq!(code(&helix4(&deg)), 2);
    deg[2] = "30°";
    assert_eq!(code(&helix4(&deg)), 2);
    assert_eq!(code(&helix4(&["verify", "--f", "x +* y", "--g", "y"])), 2);
    assert_eq!(code(&helix4(&["verify", "--f", "foo(x)", "--g", "y"])), 2);
    assert_eq!(
        code(&helix4(&[
            "verify", "--f", "x", "--g", "y", "--grid", "a,b"
        ])),
        2
    );
    assert_eq!(
        code(&helix4(&[
            "construct",
            "--theta1",
            "0.9",
            "--theta2",
            "0.5"
        ])),
        3
    );
    assert_eq!(
        code(&helix4(&[
            "verify", "--f", "x", "--g", "y", "--grid", "2,2"
        ])),
        3
    );
    assert_eq!(
        code(&helix4(&[
            "angles",
            "--v",
            "1,0,0,0;2,0,0,0",
            "--w",
            "1,0,0,0;0,1,0,0"
        ])),
        3
    );
    assert_eq!(
        code(&helix4(&[
            "export",
            "--input",
            "/nonexistent/grid.json",
            "--format",
            "csv"
        ])),
        3
    );
    assert_eq!(
        code(&helix4(&[
            "verify", "--f", "ln(x)", "--g", "y", "--x", "-2,-1"
        ])),
        4
    );
    let bad = helix4(&["verify", "--f", "x^2", "--g", "y^3"]);
    assert_eq!(code(&bad), 5);
    assert_eq!(json(&bad)["is_helix"], Value::Bool(false));
    assert_eq!(code(&helix4(&["--help"])), 0);
    assert_eq!(code(&helix4(&["--version"])), 0);
    assert_eq!(code(&helix4(&["frobnicate"])), 2);
}

#[test]
fn library_entry_point_matches_binary() {
    let args = ["helix4", "deform", "--m", "2", "--c", "5"];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let rc = helix_surfaces::cli::run(args, &mut out, &mut err);
    let bin = helix4(&args[1..]);
    assert_eq!(rc, code(&bin));
    assert_eq!(out, bin.stdout);
}
