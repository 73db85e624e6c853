use std::sync::Arc;

use proptest::prelude::*;

use ermakov_core::dynamics::acceleration;
use ermakov_core::expr::{BinOp, Func, Node};
use ermakov_core::invariants::ermakov_i0;
use ermakov_core::model::{cart_to_polar, conservative_to_fg, normalize_fg, polar_to_cart};
use ermakov_core::quad::integrate;
use ermakov_core::reduce::{inverse_reduce, reduce_state};
use ermakov_core::{parse_expression, CartesianState, Expression, SystemSpec};

fn leaf() -> impl Strategy<Value = Node> {
    prop_oneof![
        Just(Node::Var),
        (-20i32..20).prop_map(|k| Node::Const(k as f64 / 4.0)),
        (0.01f64..100.0).prop_map(Node::Const),
    ]
}

fn tree() -> impl Strategy<Value = Node> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow),
        ];
        prop_oneof![
            inner.clone().prop_map(|a| Node::Neg(Arc::new(a))),
            (op, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Node::Binary(
                op,
                Arc::new(a),
                Arc::new(b)
            )),
            (proptest::sample::select(Func::ALL.to_vec()), inner)
                .prop_map(|(f, a)| Node::Call(f, Arc::new(a))),
        ]
    })
}

fn same_value(a: Result<f64, impl std::fmt::Debug>, b: Result<f64, impl std::fmt::Debug>) -> bool {
    match (a, b) {
        (Ok(a), Ok(b)) => a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs()),
        (Err(_), Err(_)) => true,
        _ => false,
    }
}

fn random_state() -> impl Strategy<Value = CartesianState> {
    (
        -5.0f64..5.0,
        prop_oneof![-3.0f64..-0.2, 0.2f64..3.0],
        prop_oneof![-3.0f64..-0.2, 0.2f64..3.0],
        -3.0f64..3.0,
        -3.0f64..3.0,
    )
        .prop_map(|(t, x, y, vx, vy)| CartesianState::new(t, x, y, vx, vy))
}

proptest! {
    #[test]
    fn printed_expressions_parse_back(node in tree(), z in -3.0f64..3.0) {
        let e = Expression::from_node(node, "u");
        let printed = e.to_string();
        let back = parse_expression(&printed, "u").unwrap();
        prop_assert_eq!(back.to_string(), printed);
        prop_assert!(same_value(e.evaluate(z), back.evaluate(z)));
    }

    #[test]
    fn quadrature_is_additive(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, k in 0.5f64..3.0) {
        let f = |x: f64| Ok::<f64, String>((k * x).sin() * (-x * x).exp() + x * x);
        let tol = 1e-12;
        let whole = integrate(f, a, c, tol).unwrap();
        let split = integrate(f, a, b, tol).unwrap() + integrate(f, b, c, tol).unwrap();
        prop_assert!((whole - split).abs() < 1e-10, "{whole} vs {split}");
    }

    #[test]
    fn polar_round_trip(s in random_state()) {
        let back = polar_to_cart(&cart_to_polar(&s).unwrap()).unwrap();
        for (a, b) in [(back.x, s.x), (back.y, s.y), (back.vx, s.vx), (back.vy, s.vy)] {
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()));
        }
        prop_assert_eq!(back.time, s.time);
    }

    #[test]
    fn conservative_and_normalized_forms_agree(s in random_state()) {
        for src in ["u^(-2)/2 + 1/(1+u^2)", "exp(u/4)/(1+u^2)", "3/(1+u^2)"] {
            let n = parse_expression(src, "u").unwrap();
            let (f, g) = conservative_to_fg(&n);
            let a = acceleration(&SystemSpec::conservative(n), &s).unwrap();
            let b = acceleration(&SystemSpec::normalized(f, g), &s).unwrap();
            prop_assert!((a.0 - b.0).abs() <= 1e-9 * (1.0 + a.0.abs()), "{src}: {a:?} vs {b:?}");
            prop_assert!((a.1 - b.1).abs() <= 1e-9 * (1.0 + a.1.abs()), "{src}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn general_and_normalized_forms_agree(s in random_state(), w in 0.1f64..2.0) {
        let f = parse_expression("v*(1+v^2)", "v").unwrap();
        let g = parse_expression("2 - v", "v").unwrap();
        let (big_f, big_g) = normalize_fg(&f, &g);
        let omega = Some(parse_expression(&format!("{w}"), "t").unwrap());
        let general = SystemSpec::general(f, g).with_omega(omega.clone());
        let normalized = SystemSpec::normalized(big_f, big_g).with_omega(omega);
        let a = acceleration(&general, &s).unwrap();
        let b = acceleration(&normalized, &s).unwrap();
        prop_assert!((a.0 - b.0).abs() <= 1e-9 * (1.0 + a.0.abs()));
        prop_assert!((a.1 - b.1).abs() <= 1e-9 * (1.0 + a.1.abs()));
        let i_general = ermakov_i0(&general.autonomous(), &s).unwrap();
        let i_normalized = ermakov_i0(&normalized.autonomous(), &s).unwrap();
        prop_assert!((i_general - i_normalized).abs() <= 1e-9 * (1.0 + i_general.abs()));
    }

    #[test]
    fn reduction_round_trip(s in random_state(), rho in prop_oneof![-2.0f64..-0.1, 0.1f64..2.0], rhodot in -2.0f64..2.0) {
        let r = reduce_state(&s, rho, rhodot, 7.0).unwrap();
        prop_assert_eq!(r.time, 7.0);
        let back = inverse_reduce(&r, rho, rhodot, s.time).unwrap();
        for (a, b) in [(back.x, s.x), (back.y, s.y), (back.vx, s.vx), (back.vy, s.vy)] {
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()) / rho.abs().min(1.0));
        }
    }

    #[test]
    fn ermakov_integral_is_frame_independent(s in random_state(), rho in 0.1f64..2.0, rhodot in -2.0f64..2.0) {
        let spec = SystemSpec::conservative(parse_expression("u^(-2)/2 + 1/(1+u^2)", "u").unwrap());
        let r = reduce_state(&s, rho, rhodot, 0.0).unwrap();
        let a = ermakov_i0(&spec, &s).unwrap();
        let b = ermakov_i0(&spec, &r).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a.abs()));
    }
}
