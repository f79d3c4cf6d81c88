use dirac_surface::expr::{eval, eval_jet2, parse_expression, BinOp, Expr, Func};
use proptest::prelude::*;

const NAMES: [&str; 2] = ["u", "v"];

fn names() -> [String; 2] {
    NAMES.map(String::from)
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..40).prop_map(|k| Expr::Num(k as f64 / 8.0)),
        Just(Expr::Param(0)),
        Just(Expr::Param(1)),
        Just(Expr::Pi),
    ]
}

/// Arbitrary trees over the whole grammar.
fn any_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 3, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow)
        ];
        prop_oneof![
            inner.clone().prop_map(|e| -e),
            (op, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (prop::sample::select(Func::ALL.to_vec()), inner.clone(), inner).prop_map(|(f, a, b)| {
                let args = if f.arity() == 2 { vec![a, b] } else { vec![a] };
                Expr::call(f, args).expect("arity matches")
            }),
        ]
    })
}

/// Smooth trees with bounded growth, for derivative checks.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul)];
        let func = prop::sample::select(vec![
            Func::Sin,
            Func::Cos,
            Func::Tanh,
            Func::Atan,
            Func::Exp,
            Func::Sinh,
            Func::Cosh,
        ]);
        prop_oneof![
            inner.clone().prop_map(|e| -e),
            (op, inner.clone(), inner.clone()).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            (func, inner.clone()).prop_map(|(f, a)| Expr::call(f, vec![a]).expect("unary")),
            inner.clone().prop_map(|a| Expr::binary(BinOp::Pow, a, Expr::Num(2.0))),
            inner.clone().prop_map(|a| {
                // 1 + a² keeps sqrt inside its domain
                let shifted = Expr::binary(BinOp::Add, Expr::Num(1.0), Expr::binary(BinOp::Mul, a.clone(), a));
                Expr::call(Func::Sqrt, vec![shifted]).expect("unary")
            }),
            (inner.clone(), inner).prop_map(|(a, b)| {
                let denom = Expr::binary(
                    BinOp::Add,
                    Expr::Num(2.0),
                    Expr::call(Func::Sin, vec![b]).expect("unary"),
                );
                Expr::binary(BinOp::Div, a, denom)
            }),
        ]
    })
}

/// Relative discrepancy between jets and central differences of the scalar
/// evaluator, taking the better of steps 1e-4 and 1e-3.
fn fd_defect(expr: &Expr, s: [f64; 2]) -> Option<f64> {
    Some(fd_defect_with(expr, s, 1e-4)?.min(fd_defect_with(expr, s, 1e-3)?))
}

fn fd_defect_with(expr: &Expr, s: [f64; 2], h: f64) -> Option<f64> {
    let f = |p: [f64; 2]| eval(expr, p).ok();
    let jet = eval_jet2(expr, s).ok()?;
    let shift = |p: [f64; 2], a: usize, d: f64| {
        let mut q = p;
        q[a] += d;
        q
    };
    let scale = 1.0
        + jet.value.abs()
        + jet.grad.iter().map(|g| g.abs()).sum::<f64>()
        + jet.hess.iter().map(|h| h.abs()).sum::<f64>();
    let mut worst: f64 = 0.0;
    for a in 0..2 {
        let d = (f(shift(s, a, h))? - f(shift(s, a, -h))?) / (2.0 * h);
        worst = worst.max((d - jet.grad[a]).abs() / scale);
    }
    for (a, b, k) in [(0, 0, 0), (0, 1, 1), (1, 1, 2)] {
        let d = if a == b {
            (f(shift(s, a, h))? - 2.0 * f(s)? + f(shift(s, a, -h))?) / (h * h)
        } else {
            (f(shift(shift(s, 0, h), 1, h))? - f(shift(shift(s, 0, h), 1, -h))? - f(shift(shift(s, 0, -h), 1, h))?
                + f(shift(shift(s, 0, -h), 1, -h))?)
                / (4.0 * h * h)
        };
        worst = worst.max((d - jet.hess[k]).abs() / scale);
    }
    Some(worst)
}

#[test]
fn exp_of_square_matches_finite_differences() {
    let expr = parse_expression("exp(u^2)", NAMES).unwrap();
    let s = [0.5, 0.0];
    let jet = eval_jet2(&expr, s).unwrap();
    let e = 0.25f64.exp();
    assert!((jet.value - e).abs() < 1e-15);
    assert!((jet.grad[0] - e).abs() < 1e-14);
    assert!((jet.hess[0] - 3.0 * e).abs() < 1e-14);
    assert!(fd_defect(&expr, s).unwrap() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_is_identity(expr in any_expr()) {
        let text = expr.display(&names()).to_string();
        let parsed = parse_expression(&text, NAMES).unwrap();
        prop_assert_eq!(parsed, expr, "{}", text);
    }

    #[test]
    fn jets_agree_with_finite_differences(expr in smooth_expr(), u in 0.2f64..1.2, v in 0.2f64..1.2) {
        let jet = eval_jet2(&expr, [u, v]);
        prop_assume!(jet.is_ok());
        let jet = jet.unwrap();
        prop_assume!(jet.value.abs() < 1e3 && jet.hess.iter().all(|h| h.abs() < 1e4));
        let defect = fd_defect(&expr, [u, v]).unwrap();
        prop_assert!(defect <= 1e-5, "{} at ({u}, {v}): {defect:e}", expr.display(&names()));
    }

    #[test]
    fn jet_value_matches_scalar_evaluation(expr in any_expr(), u in -2.0f64..2.0, v in -2.0f64..2.0) {
        let (jet, value) = (eval_jet2(&expr, [u, v]), eval(&expr, [u, v]));
        if let (Ok(j), Ok(x)) = (jet, value) {
            prop_assert!((j.value - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}
