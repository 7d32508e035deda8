//! Exact structural differentiation.

use super::{mk_func, mk_neg, mk_pow, mk_product, mk_sum, Expr, FuncKind, Node};

pub(super) fn diff(e: &Expr, name: &str) -> Expr {
    if !e.contains_symbol(name) {
        return Expr::zero();
    }
    match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Symbol(s) => {
            if s == name {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Sum(ops) => mk_sum(ops.iter().map(|op| diff(op, name)).collect()),
        Node::Neg(a) => mk_neg(diff(a, name)),
        Node::Product(ops) => {
            let mut terms = Vec::new();
            for i in 0..ops.len() {
                let d = diff(&ops[i], name);
                if d.is_zero() {
                    continue;
                }
                let mut fs: Vec<Expr> = Vec::with_capacity(ops.len());
                for (j, f) in ops.iter().enumerate() {
                    if j != i {
                        fs.push(f.clone());
                    }
                }
                fs.push(d);
                terms.push(mk_product(fs));
            }
            mk_sum(terms)
        }
        Node::Power(base, exp) => {
            let db = diff(base, name);
            let de = diff(exp, name);
            if de.is_zero() {
                // e * b^(e-1) * b'
                let lowered = mk_pow(
                    base.clone(),
                    mk_sum(vec![exp.clone(), Expr::integer(-1)]),
                );
                mk_product(vec![exp.clone(), lowered, db])
            } else if db.is_zero() {
                // b^e * ln(b) * e'
                mk_product(vec![
                    mk_pow(base.clone(), exp.clone()),
                    mk_func(FuncKind::Ln, base.clone()),
                    de,
                ])
            } else {
                // b^e * (e' ln b + e b'/b)
                let t1 = mk_product(vec![de, mk_func(FuncKind::Ln, base.clone())]);
                let t2 = mk_product(vec![exp.clone(), db, base.inv()]);
                mk_product(vec![
                    mk_pow(base.clone(), exp.clone()),
                    mk_sum(vec![t1, t2]),
                ])
            }
        }
        Node::Func(kind, arg) => {
            let da = diff(arg, name);
            let outer = match kind {
                FuncKind::Exp => mk_func(FuncKind::Exp, arg.clone()),
                FuncKind::Ln => arg.inv(),
                FuncKind::Sin => mk_func(FuncKind::Cos, arg.clone()),
                FuncKind::Cos => mk_neg(mk_func(FuncKind::Sin, arg.clone())),
                FuncKind::Tan => mk_sum(vec![
                    Expr::one(),
                    mk_pow(mk_func(FuncKind::Tan, arg.clone()), Expr::integer(2)),
                ]),
                FuncKind::Arcsin => {
                    let one_minus_sq = mk_sum(vec![
                        Expr::one(),
                        mk_neg(mk_pow(arg.clone(), Expr::integer(2))),
                    ]);
                    mk_func(FuncKind::Sqrt, one_minus_sq).inv()
                }
                FuncKind::Arctan => mk_sum(vec![
                    Expr::one(),
                    mk_pow(arg.clone(), Expr::integer(2)),
                ])
                .inv(),
                FuncKind::Sqrt => mk_product(vec![
                    Expr::rational(1, 2),
                    mk_func(FuncKind::Sqrt, arg.clone()).inv(),
                ]),
            };
            mk_product(vec![outer, da])
        }
    }
}
