//! Property tests for the expression kernel.

use geomech_core::expr::{parse, BinaryOp, Expr, UnaryOp};
use geomech_core::points::PointTuple;
use proptest::prelude::*;

fn leaf() -> BoxedStrategy<Expr> {
    prop_oneof![
        prop::sample::select(vec!["x", "y", "z"]).prop_map(Expr::var),
        (-20i32..=20).prop_map(|n| Expr::constant(f64::from(n) / 10.0)),
    ]
    .boxed()
}

fn expr_strategy() -> BoxedStrategy<Expr> {
    leaf()
        .prop_recursive(4, 64, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::binary(BinaryOp::Add, a, b)),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::binary(BinaryOp::Sub, a, b)),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::binary(BinaryOp::Mul, a, b)),
                (inner.clone(), inner.clone())
                    .prop_map(|(a, b)| Expr::binary(BinaryOp::Div, a, b)),
                (inner.clone(), 0u32..=3)
                    .prop_map(|(a, k)| Expr::binary(BinaryOp::Pow, a, Expr::constant(k as f64))),
                (
                    prop::sample::select(vec![
                        UnaryOp::Neg,
                        UnaryOp::Sin,
                        UnaryOp::Cos,
                        UnaryOp::Exp,
                        UnaryOp::Log,
                        UnaryOp::Sqrt,
                    ]),
                    inner,
                )
                    .prop_map(|(op, a)| Expr::unary(op, a)),
            ]
        })
        .boxed()
}

fn point_strategy() -> BoxedStrategy<PointTuple> {
    (0.2f64..1.5, 0.2f64..1.5, 0.2f64..1.5)
        .prop_map(|(x, y, z)| {
            PointTuple::from_pairs([
                ("x".to_string(), x),
                ("y".to_string(), y),
                ("z".to_string(), z),
            ])
        })
        .boxed()
}

proptest! {
    /// Simplification preserves values wherever the original expression is
    /// defined.
    #[test]
    fn simplify_preserves_value(e in expr_strategy(), pt in point_strategy()) {
        if let Ok(v0) = e.evaluate(&pt) {
            prop_assume!(v0.is_finite() && v0.abs() < 1e9);
            let v1 = e.simplify().evaluate(&pt)
                .expect("simplified expression must stay defined");
            prop_assert!(
                (v0 - v1).abs() <= 1e-12 * (1.0 + v0.abs()),
                "value drifted: {v0} vs {v1} for {e}"
            );
        }
    }

    /// Simplifying twice changes nothing.
    #[test]
    fn simplify_is_idempotent(e in expr_strategy()) {
        let once = e.simplify();
        let twice = once.simplify();
        prop_assert!(once == twice, "not idempotent: {once} vs {twice}");
    }

    /// The printed form reparses, and printing is a fixed point of
    /// parse-then-print.
    #[test]
    fn print_parse_print_fixed_point(e in expr_strategy()) {
        let text = e.to_string();
        let reparsed = parse(&text).expect("printed expression must parse");
        prop_assert_eq!(text, reparsed.to_string());
    }

    /// Differentiation is linear at random evaluation points.
    #[test]
    fn diff_is_linear(
        e1 in expr_strategy(),
        e2 in expr_strategy(),
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        pt in point_strategy(),
    ) {
        let combined = (Expr::constant(a) * e1.clone() + Expr::constant(b) * e2.clone()).diff("x");
        let split = Expr::constant(a) * e1.diff("x") + Expr::constant(b) * e2.diff("x");
        if let (Ok(v0), Ok(v1)) = (combined.evaluate(&pt), split.evaluate(&pt)) {
            prop_assume!(v0.is_finite() && v0.abs() < 1e9);
            prop_assert!((v0 - v1).abs() <= 1e-9 * (1.0 + v0.abs()));
        }
    }

    /// Mixed second partials commute at random evaluation points.
    #[test]
    fn mixed_partials_commute(e in expr_strategy(), pt in point_strategy()) {
        let xy = e.diff("x").diff("y");
        let yx = e.diff("y").diff("x");
        if let (Ok(v0), Ok(v1)) = (xy.evaluate(&pt), yx.evaluate(&pt)) {
            prop_assume!(v0.is_finite() && v0.abs() < 1e9);
            prop_assert!((v0 - v1).abs() <= 1e-9 * (1.0 + v0.abs()));
        }
    }

    /// The symbolic derivative matches central differences.
    #[test]
    fn diff_matches_finite_differences(e in expr_strategy(), pt in point_strategy()) {
        let d = e.diff("x");
        if let (Ok(sym), Ok(_)) = (d.evaluate(&pt), e.evaluate(&pt)) {
            prop_assume!(sym.is_finite() && sym.abs() < 1e5);
            let x0 = pt.get("x").unwrap();
            let step = 1e-5 * x0.abs().max(1.0);
            let mut fd_at = |s: f64| -> Option<f64> {
                let mut shifted = pt.clone();
                shifted.set("x", x0 + s);
                let fp = e.evaluate(&shifted).ok()?;
                shifted.set("x", x0 - s);
                let fm = e.evaluate(&shifted).ok()?;
                (fp.abs().max(fm.abs()) < 1e7).then(|| (fp - fm) / (2.0 * s))
            };
            let (Some(coarse), Some(fine)) = (fd_at(step), fd_at(step / 2.0)) else {
                return Ok(());
            };
            // The oracle certifies itself by step halving: near a pole the
            // two estimates disagree and the sample is inconclusive.
            prop_assume!((coarse - fine).abs() <= 2.5e-7 * (1.0 + sym.abs()));
            prop_assert!(
                (sym - fine).abs() <= 1e-6 * (1.0 + sym.abs()),
                "diff {sym} vs fd {fine} for {e}"
            );
        }
    }

    /// Differentiating along a variable that does not occur yields zero.
    #[test]
    fn diff_of_absent_variable_is_zero(e in expr_strategy()) {
        prop_assert!(e.diff("w").is_zero());
    }
}
