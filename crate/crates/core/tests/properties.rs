//! Randomized algebraic properties of the expression engine and the jet
//! calculus: normalization idempotence and value preservation, renderer
//! round trips, differentiation laws, and total-derivative identities.

use diffinv::expr::{Bindings, Expr, FuncKind};
use diffinv::jet::JetSpace;
use diffinv::sample::{equivalent_numeric, rng, DomainSampler};
use diffinv::{parse, prolong, VectorField};
use proptest::prelude::*;

/// Arbitrary raw trees over the full grammar, depth-bounded. Used for the
/// structural properties that never evaluate.
fn arb_tree(symbols: &'static [&'static str]) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-9i64..=9, 1i64..=4).prop_map(|(n, d)| Expr::rational(n, d)),
        proptest::sample::select(symbols).prop_map(Expr::symbol),
    ];
    leaf.prop_recursive(8, 64, 4, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Expr::raw_sum),
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Expr::raw_product),
            (inner.clone(), -3i64..=3)
                .prop_map(|(b, k)| Expr::raw_pow(b, Expr::integer(k))),
            (inner.clone(), (-4i64..=4, 2i64..=3))
                .prop_map(|(b, (n, d))| Expr::raw_pow(b, Expr::rational(n, d))),
            inner.clone().prop_map(Expr::raw_neg),
            (proptest::sample::select(&FuncKind::ALL[..]), inner)
                .prop_map(|(kind, arg)| Expr::raw_func(kind, arg)),
        ]
    })
}

/// Trees that evaluate safely on positive sample domains: the functions
/// with full real domain, small integer powers, and no division.
fn arb_safe_tree(symbols: &'static [&'static str]) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-4i64..=4, 1i64..=4).prop_map(|(n, d)| Expr::rational(n, d)),
        proptest::sample::select(symbols).prop_map(Expr::symbol),
    ];
    const SAFE_FUNCS: [FuncKind; 4] = [
        FuncKind::Exp,
        FuncKind::Sin,
        FuncKind::Cos,
        FuncKind::Arctan,
    ];
    leaf.prop_recursive(6, 48, 4, |inner| {
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Expr::raw_sum),
            proptest::collection::vec(inner.clone(), 2..3).prop_map(Expr::raw_product),
            (inner.clone(), 2i64..=3)
                .prop_map(|(b, k)| Expr::raw_pow(b, Expr::integer(k))),
            inner.clone().prop_map(Expr::raw_neg),
            (proptest::sample::select(&SAFE_FUNCS[..]), inner)
                .prop_map(|(kind, arg)| Expr::raw_func(kind, arg)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn normalize_is_idempotent(tree in arb_tree(&["x", "u", "u1[1]"])) {
        let once = tree.normalize();
        let twice = once.normalize();
        prop_assert_eq!(&once, &twice);
    }

    #[test]
    fn render_round_trips(tree in arb_tree(&["x", "u", "u1[1]"])) {
        let normalized = tree.normalize();
        let rendered = normalized.render();
        let back = parse(&rendered).unwrap();
        prop_assert_eq!(&back, &normalized, "render: {}", rendered);
    }

    #[test]
    fn normalize_preserves_values(tree in arb_safe_tree(&["x", "u"])) {
        let normalized = tree.normalize();
        let sampler = DomainSampler::new();
        let mut r = rng(99);
        let symbols = tree.free_symbols();
        for _ in 0..5 {
            let bindings: Bindings = sampler.sample(&symbols, &mut r);
            // expansion may enlarge the domain but never shrink it, so a
            // raw-side domain error is simply skipped
            if let Ok(raw) = tree.eval(&bindings) {
                let cooked = normalized.eval(&bindings).unwrap();
                let scale = 1.0 + raw.abs().max(cooked.abs());
                prop_assert!(
                    (raw - cooked).abs() <= 1e-9 * scale,
                    "value changed: {} vs {} for {}",
                    raw, cooked, normalized
                );
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn diff_is_linear(
        e1 in arb_safe_tree(&["x", "u"]),
        e2 in arb_safe_tree(&["x", "u"]),
        a in -3i64..=3,
        b in -3i64..=3,
    ) {
        let combo = Expr::integer(a) * e1.normalize() + Expr::integer(b) * e2.normalize();
        let lhs = combo.diff("x");
        let rhs = Expr::integer(a) * e1.normalize().diff("x")
            + Expr::integer(b) * e2.normalize().diff("x");
        let sampler = DomainSampler::new();
        let mut r = rng(101);
        prop_assert!(
            equivalent_numeric::<f64>(&lhs, &rhs, &sampler, 20, 1e-7, &mut r)
                .unwrap_or(true) // exhausted sampling: nothing to refute
        );
    }

    #[test]
    fn total_derivatives_commute(tree in arb_safe_tree(&["x1", "x2", "u", "u1[1,0]", "u1[0,1]"])) {
        let js = JetSpace::new(2, 1, 4);
        let e = tree.normalize();
        let d12 = js
            .total_derivative(&js.total_derivative(&e, 0).unwrap(), 1)
            .unwrap();
        let d21 = js
            .total_derivative(&js.total_derivative(&e, 1).unwrap(), 0)
            .unwrap();
        let sampler = DomainSampler::new();
        let mut r = rng(102);
        prop_assert!(
            equivalent_numeric::<f64>(&d12, &d21, &sampler, 20, 1e-7, &mut r).unwrap_or(true)
        );
    }

    #[test]
    fn total_derivative_satisfies_leibniz(
        e1 in arb_safe_tree(&["x", "u", "u1[1]"]),
        e2 in arb_safe_tree(&["x", "u", "u1[1]"]),
    ) {
        let js = JetSpace::new(1, 1, 4);
        let e1 = e1.normalize();
        let e2 = e2.normalize();
        let lhs = js.total_derivative(&(e1.clone() * e2.clone()), 0).unwrap();
        let rhs = e1.clone() * js.total_derivative(&e2, 0).unwrap()
            + e2 * js.total_derivative(&e1, 0).unwrap();
        let sampler = DomainSampler::new();
        let mut r = rng(103);
        prop_assert!(
            equivalent_numeric::<f64>(&lhs, &rhs, &sampler, 20, 1e-7, &mut r).unwrap_or(true)
        );
    }

    #[test]
    fn prolonged_field_is_a_derivation(
        e1 in arb_safe_tree(&["x", "u", "u1[1]"]),
        e2 in arb_safe_tree(&["x", "u", "u1[1]"]),
    ) {
        let js = JetSpace::new(1, 1, 3);
        let field = VectorField::new(
            js.clone(),
            vec![js.parse("u").unwrap()],
            vec![js.parse("-x").unwrap()],
        )
        .unwrap();
        let qr = prolong(&field, 1);
        let e1 = e1.normalize();
        let e2 = e2.normalize();
        let lhs = qr.apply(&(e1.clone() * e2.clone())).unwrap();
        let rhs = e1.clone() * qr.apply(&e2).unwrap() + e2 * qr.apply(&e1).unwrap();
        let sampler = DomainSampler::new();
        let mut r = rng(104);
        prop_assert!(
            equivalent_numeric::<f64>(&lhs, &rhs, &sampler, 20, 1e-7, &mut r).unwrap_or(true)
        );
    }
}

/// Exact derivatives against central finite differences with step 1e-6,
/// at 100 sampled points per fixture expression.
#[test]
fn diff_matches_finite_differences_on_fixtures() {
    let fixtures = [
        "sqrt(x^2+u^2)",
        "arcsin(x/sqrt(x^2+u^2))",
        "u*exp(-x)",
        "exp(x+u)/u",
        "ln(x)/(x*u)",
        "x^2*u",
        "(u - x)/(u + x)",
        "tan(x/4)*u",
    ];
    let sampler = DomainSampler::new();
    let mut r = rng(105);
    let h = 1e-6;
    for text in fixtures {
        let e = parse(text).unwrap();
        for symbol in e.free_symbols() {
            let exact = e.diff(&symbol);
            let symbols = e.free_symbols();
            for _ in 0..100 {
                let bindings: Bindings = sampler.sample(&symbols, &mut r);
                let value = match exact.eval(&bindings) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                let center = bindings.get(&symbol).unwrap();
                let mut plus = bindings.clone();
                plus.set(symbol.clone(), center + h);
                let mut minus = bindings.clone();
                minus.set(symbol.clone(), center - h);
                let (fp, fm) = match (e.eval(&plus), e.eval(&minus)) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => continue,
                };
                let fd = (fp - fm) / (2.0 * h);
                assert!(
                    (value - fd).abs() <= 1e-6 * (1.0 + value.abs()),
                    "{text} d/d{symbol}: exact {value}, fd {fd}"
                );
            }
        }
    }
}
