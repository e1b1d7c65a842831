use super::*;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Value {
    Value::complex(re, im)
}

#[test]
fn abs2_of_complex() {
    let e = Expression::parse("abs2(z)", &[("z", VarKind::Complex)]).unwrap();
    let v = e.eval(&[c(3.0, 4.0)]).unwrap();
    assert_eq!(v, Value::Real(25.0));
}

#[test]
fn re_plus_abs2_identity_case() {
    let e = Expression::parse(
        "re(t) + abs2(z - t)",
        &[("t", VarKind::Complex), ("z", VarKind::Complex)],
    )
    .unwrap();
    let v = e.eval(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
    assert_eq!(v.as_real().unwrap(), 1.0);
}

#[test]
fn log_zero_is_neg_inf_sentinel() {
    let e = Expression::parse("log(abs2(z))", &[("z", VarKind::Complex)]).unwrap();
    let v = e.eval(&[c(0.0, 0.0)]).unwrap();
    assert_eq!(v.as_real().unwrap(), f64::NEG_INFINITY);
}

#[test]
fn log_negative_is_neg_inf_sentinel() {
    let e = Expression::parse("log(x)", &[("x", VarKind::Real)]).unwrap();
    let v = e.eval(&[Value::Real(-2.0)]).unwrap();
    assert_eq!(v.as_real().unwrap(), f64::NEG_INFINITY);
}

#[test]
fn eval_constant() {
    let e = Expression::parse("2.5", &[]).unwrap();
    assert_eq!(e.eval(&[]).unwrap(), Value::Real(2.5));
}

#[test]
fn half_log_abs2_is_log_modulus() {
    let e = Expression::parse("0.5*log(abs2(z))", &[("z", VarKind::Complex)]).unwrap();
    let v = e.eval(&[c((-3.0f64).exp(), 0.0)]).unwrap();
    assert!((v.as_real().unwrap() + 3.0).abs() < 1e-12);
}

#[test]
fn exp_of_neg_abs2() {
    let e = Expression::parse("exp(-abs2(z))", &[("z", VarKind::Complex)]).unwrap();
    let v = e.eval(&[c(1.0, 0.0)]).unwrap();
    assert!((v.as_real().unwrap() - (-1.0f64).exp()).abs() < 1e-15);
}

#[test]
fn division_by_zero_is_an_error_not_sentinel() {
    let e = Expression::parse("1/x", &[("x", VarKind::Real)]).unwrap();
    assert_eq!(
        e.eval(&[Value::Real(0.0)]).unwrap_err(),
        EvalError::DivisionByZero
    );
    // while log 0 is the sentinel, not an error
    let l = Expression::parse("log(x)", &[("x", VarKind::Real)]).unwrap();
    assert!(l.eval(&[Value::Real(0.0)]).is_ok());
}

#[test]
fn kind_mismatch_complex_into_real_var() {
    let e = Expression::parse("x + 1", &[("x", VarKind::Real)]).unwrap();
    assert!(matches!(
        e.eval(&[c(1.0, 2.0)]).unwrap_err(),
        EvalError::KindMismatch(_)
    ));
}

#[test]
fn sentinel_absorbs() {
    // (-inf) + finite = -inf
    let e = Expression::parse("log(x) + 7", &[("x", VarKind::Real)]).unwrap();
    assert_eq!(
        e.eval(&[Value::Real(0.0)]).unwrap().as_real().unwrap(),
        f64::NEG_INFINITY
    );
    // exp(-inf) = 0
    let e = Expression::parse("exp(log(x))", &[("x", VarKind::Real)]).unwrap();
    assert_eq!(e.eval(&[Value::Real(0.0)]).unwrap(), Value::Real(0.0));
    // positive scaling keeps the sentinel
    let e = Expression::parse("0.5*log(x)", &[("x", VarKind::Real)]).unwrap();
    assert_eq!(
        e.eval(&[Value::Real(0.0)]).unwrap().as_real().unwrap(),
        f64::NEG_INFINITY
    );
}

#[test]
fn precedence() {
    let e = Expression::parse("1 + 2*3", &[]).unwrap();
    assert_eq!(e.eval(&[]).unwrap(), Value::Real(7.0));
    // pow binds tighter than unary minus
    let e = Expression::parse("-x^2", &[("x", VarKind::Real)]).unwrap();
    assert_eq!(e.eval(&[Value::Real(3.0)]).unwrap(), Value::Real(-9.0));
    let e = Expression::parse("(-x)^2", &[("x", VarKind::Real)]).unwrap();
    assert_eq!(e.eval(&[Value::Real(3.0)]).unwrap(), Value::Real(9.0));
    let e = Expression::parse("2*x^3", &[("x", VarKind::Real)]).unwrap();
    assert_eq!(e.eval(&[Value::Real(2.0)]).unwrap(), Value::Real(16.0));
    // negative exponents
    let e = Expression::parse("x^-2", &[("x", VarKind::Real)]).unwrap();
    assert_eq!(e.eval(&[Value::Real(2.0)]).unwrap(), Value::Real(0.25));
    let e = Expression::parse("x^(-2)", &[("x", VarKind::Real)]).unwrap();
    assert_eq!(e.eval(&[Value::Real(2.0)]).unwrap(), Value::Real(0.25));
}

#[test]
fn complex_constants() {
    let e = Expression::parse("complex(0, 1)*complex(0, 1)", &[]).unwrap();
    assert_eq!(e.eval(&[]).unwrap().as_real().unwrap(), -1.0);
}

#[test]
fn syntax_error_carries_position() {
    match Expression::parse("1 + * 2", &[]) {
        Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 4),
        other => panic!("expected syntax error, got {other:?}"),
    }
}

#[test]
fn undeclared_variable() {
    match Expression::parse("x + y", &[("x", VarKind::Real)]) {
        Err(ParseError::UndeclaredVariable { name, .. }) => assert_eq!(name, "y"),
        other => panic!("expected undeclared-variable error, got {other:?}"),
    }
}

#[test]
fn non_integer_exponent_rejected() {
    assert!(matches!(
        Expression::parse("x^2.5", &[("x", VarKind::Real)]),
        Err(ParseError::NonIntegerExponent { .. })
    ));
}

#[test]
fn duplicate_vars_rejected() {
    assert!(matches!(
        Expression::parse("x", &[("x", VarKind::Real), ("x", VarKind::Real)]),
        Err(ParseError::DuplicateVariable(_))
    ));
}

#[test]
fn empty_input_rejected() {
    assert!(matches!(Expression::parse("  ", &[]), Err(ParseError::Empty)));
}

#[test]
fn gradient_of_abs2() {
    let e = Expression::parse("abs2(z)", &[("z", VarKind::Complex)]).unwrap();
    let g = e.gradient_fd(&[c(1.0, 0.0)], 1e-5).unwrap();
    assert!((g[0] - 2.0).abs() < 1e-9, "{g:?}");
    assert!(g[1].abs() < 1e-9, "{g:?}");
}

#[test]
fn gradient_of_re_t() {
    let e = Expression::parse("re(t)", &[("t", VarKind::Complex)]).unwrap();
    let g = e.gradient_fd(&[c(0.3, -0.7)], 1e-4).unwrap();
    assert!((g[0] - 1.0).abs() < 1e-10);
    assert!(g[1].abs() < 1e-10);
}

#[test]
fn gradient_matches_closed_form_derivative() {
    // oracle: d/dx exp(re t) = exp(re t); at t = 0 this is 1
    let e = Expression::parse("exp(re(t))", &[("t", VarKind::Complex)]).unwrap();
    for h in [1e-2, 1e-3] {
        let g = e.gradient_fd(&[c(0.0, 0.0)], h).unwrap();
        assert!((g[0] - 1.0).abs() < 2.0 * h * h, "h={h} g={g:?}");
        assert!(g[1].abs() < 1e-12);
    }
}

#[test]
fn gradient_singular_stencil() {
    let e = Expression::parse("log(x)", &[("x", VarKind::Real)]).unwrap();
    assert_eq!(
        e.gradient_fd(&[Value::Real(0.0)], 1e-3).unwrap_err(),
        EvalError::SingularStencil
    );
}

#[test]
fn eval_is_pure_and_bit_identical() {
    let e = Expression::parse(
        "exp(-abs2(z - t)) + 0.5*re(t)^3",
        &[("t", VarKind::Complex), ("z", VarKind::Complex)],
    )
    .unwrap();
    let binding = [c(0.3, 0.4), c(-0.2, 0.9)];
    let a = e.eval(&binding).unwrap();
    for _ in 0..10 {
        assert_eq!(e.eval(&binding).unwrap(), a);
    }
}

#[test]
fn builders_match_parser() {
    use build::*;
    let parsed = Expression::parse("abs2(z) - 1", &[("z", VarKind::Complex)]).unwrap();
    let built = Expression::from_parts(
        vec![("z".into(), VarKind::Complex)],
        abs2(var(0)) - con(1.0),
    );
    let at = [c(0.6, -0.8)];
    assert_eq!(parsed.eval(&at).unwrap(), built.eval(&at).unwrap());
}

#[test]
fn bound_expr_layouts() {
    let e = Arc::new(
        Expression::parse(
            "re(t) + abs2(z)",
            &[("t", VarKind::Complex), ("z", VarKind::Complex)],
        )
        .unwrap(),
    );
    // t fixed, z over coords
    let b = BoundExpr::over_coords_with_fixed(e.clone(), &[("t", c(2.0, 5.0))]);
    assert_eq!(b.eval_real(&[3.0, 4.0]).unwrap(), 27.0);
    // rebind the fixed slot
    let b2 = b.with_fixed(&[("t", c(-1.0, 0.0))]);
    assert_eq!(b2.eval_real(&[3.0, 4.0]).unwrap(), 24.0);
}

// --- print/parse round trip -------------------------------------------

const RT_VARS: [(&str, VarKind); 2] = [("x", VarKind::Real), ("z", VarKind::Complex)];

fn arb_node() -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (-3.0..3.0f64).prop_map(|v| Node::Const(Value::Real(v))),
        ((-2.0..2.0f64), (-2.0..2.0f64))
            .prop_map(|(a, b)| Node::Const(Value::Complex(Complex64::new(a, b)))),
        Just(Node::Var(0)),
        Just(Node::Var(1)),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Node::Neg(Box::new(a))),
            inner.clone().prop_map(|a| Node::Exp(Box::new(a))),
            inner.clone().prop_map(|a| Node::Log(Box::new(a))),
            inner.clone().prop_map(|a| Node::Abs2(Box::new(a))),
            inner.clone().prop_map(|a| Node::Re(Box::new(a))),
            inner.clone().prop_map(|a| Node::Im(Box::new(a))),
            (inner.clone(), -2..4i32).prop_map(|(a, k)| Node::Pow(Box::new(a), k)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / b),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Node::Max(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Node::Min(Box::new(a), Box::new(b))),
        ]
    })
}

fn value_bits(v: &Value) -> (u64, u64) {
    match v {
        Value::Real(x) => (x.to_bits(), 0),
        Value::Complex(c) => (c.re.to_bits(), c.im.to_bits()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn print_then_parse_evaluates_identically(
        ast in arb_node(),
        x in -2.0..2.0f64,
        zr in -2.0..2.0f64,
        zi in -2.0..2.0f64,
    ) {
        let vars: Vec<(String, VarKind)> =
            RT_VARS.iter().map(|(n, k)| (n.to_string(), *k)).collect();
        let e = Expression::from_parts(vars, ast);
        let printed = e.to_string();
        let reparsed = Expression::parse(&printed, &RT_VARS)
            .unwrap_or_else(|err| panic!("reparse of `{printed}` failed: {err}"));
        let binding = [Value::Real(x), Value::complex(zr, zi)];
        match (e.eval(&binding), reparsed.eval(&binding)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(value_bits(&a), value_bits(&b)),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "eval mismatch: {:?} vs {:?}", a, b),
        }
    }
}
