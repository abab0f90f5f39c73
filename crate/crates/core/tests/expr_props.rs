use helix_surfaces::expr::*;
use proptest::prelude::*;

fn smooth_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("pi".to_string()),
        (-3.0f64..3.0).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) + ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) - ({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})/(1.5 + sin({b}))")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("ln(2 + cos({a}))")),
            inner.clone().prop_map(|a| format!("tan(0.5*sin({a}))")),
            (inner.clone(), 2u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.prop_map(|a| format!("-({a})")),
        ]
    })
}

fn central1(f: &dyn Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    let d = |h: f64| (f(t + h) - f(t - h)) / (2.0 * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn central2(f: &dyn Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    let d = |h: f64| (f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h);
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn mixed(f: &dyn Fn(f64, f64) -> f64, x: f64, y: f64, h: f64) -> f64 {
    let d = |h: f64| {
        (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h)
    };
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

fn close(sym: f64, num: f64) -> bool {
    (sym - num).abs() <= 1e-6 * (1.0 + sym.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn symbolic_derivatives_match_differences(src in smooth_expr(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let d = ExprDerivs::parse(&src).unwrap();
        let ev = |e: &Expr, x: f64, y: f64| e.eval(&Env::xy(x, y)).unwrap();
        let f2 = |a: f64, b: f64| ev(&d.f, a, b);
        let h = 1e-2;
        let checks = [
            ("fx", ev(&d.fx, x, y), central1(&|t| f2(t, y), x, h)),
            ("fy", ev(&d.fy, x, y), central1(&|t| f2(x, t), y, h)),
            ("fxx", ev(&d.fxx, x, y), central2(&|t| f2(t, y), x, h)),
            ("fyy", ev(&d.fyy, x, y), central2(&|t| f2(x, t), y, h)),
            ("fxy", ev(&d.fxy, x, y), mixed(&f2, x, y, h)),
        ];
        for (name, sym, num) in checks {
            prop_assert!(close(sym, num), "{name} of {src} at ({x}, {y}): {sym} vs {num}");
        }
    }

    #[test]
    fn display_reparses_to_same_function(src in smooth_expr(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let e = parse_expr(&src).unwrap();
        let shown = e.to_string();
        let back = parse_expr(&shown).unwrap();
        prop_assert_eq!(back.to_string(), shown.clone());
        let env = Env::xy(x, y);
        let (a, b) = (e.eval(&env).unwrap(), back.eval(&env).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{src} -> {shown}: {a} vs {b}");
    }

    #[test]
    fn derivative_display_reparses(src in smooth_expr(), x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let dx = parse_expr(&src).unwrap().diff(Var::X);
        let back = parse_expr(&dx.to_string()).unwrap();
        let env = Env::xy(x, y);
        let (a, b) = (dx.eval(&env).unwrap(), back.eval(&env).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{dx}: {a} vs {b}");
    }

    #[test]
    fn independent_variables_differentiate_to_zero(src in smooth_expr()) {
        let e = parse_expr(&src).unwrap();
        if !e.depends_on(Var::Y) {
            let dy = e.diff(Var::Y);
            prop_assert_eq!(dy.eval(&Env::xy(0.3, 0.4)).unwrap(), 0.0);
        }
    }
}

#[test]
fn seed_identifiers_enter_derivatives() {
    let d = ExprDerivs::parse("x^2 + u0*x + v0*y").unwrap();
    let env = Env {
        x: 0.5,
        y: 2.0,
        u0: 3.0,
        v0: -1.0,
    };
    let j = d.jet(&env).unwrap();
    assert!((j.du - (1.0 + 3.0)).abs() < 1e-15);
    assert!((j.dv + 1.0).abs() < 1e-15);
    assert!((j.duu - 2.0).abs() < 1e-15);
    assert_eq!(j.duv, 0.0);
}

#[test]
fn domain_errors_carry_spans() {
    let src = "1 + sqrt(x - 3)";
    let err = parse_expr(src)
        .unwrap()
        .eval(&Env::xy(0.0, 0.0))
        .unwrap_err();
    assert!(matches!(err, ExprError::NegativeSqrt { .. }), "{err:?}");
    let rendered = err.render(src);
    assert!(rendered.contains('^'), "{rendered}");
    assert!(matches!(
        parse_expr("x + foo(y)"),
        Err(ExprError::UnknownIdentifier { .. })
    ));
    assert!(matches!(
        parse_expr("x + (y"),
        Err(ExprError::Syntax { .. })
    ));
    assert!(matches!(
        parse_expr("ln(x)").unwrap().eval(&Env::xy(-1.0, 0.0)),
        Err(ExprError::LogDomain { .. })
    ));
    assert!(matches!(
        parse_expr("1/(x - 1)").unwrap().eval(&Env::xy(1.0, 0.0)),
        Err(ExprError::DivisionByZero { .. })
    ));
}
