//! Canonical normal form.
//!
//! The canonical constructors below flatten nested sums and products, fold
//! constant subterms exactly, distribute products over sums, expand small
//! integer powers of sums, collect identical terms and factors, and sort
//! operands in the canonical total order. Nothing is ever factored and no
//! transcendental identity is rewritten; identities beyond this normal
//! form are checked numerically.
//!
//! Invariants of the canonical form:
//! - sums contain no sums or constants-only terms; like terms are merged
//!   into a single term with a rational (or float) coefficient;
//! - products contain no products, negations or more than one constant;
//!   the constant is positive and sorts first; like bases are merged into
//!   a single power; a product never contains a sum (distributed away);
//! - `Neg` wraps only symbols, powers, functions and products; negative
//!   constants carry their own sign;
//! - `x^0 -> 1`, `x^1 -> x`, `(x^p)^k -> x^(p*k)` and `(a*b)^k -> a^k*b^k`
//!   for integer `k`; sums raised to integer powers 2..=6 are expanded.

use super::{Expr, FuncKind, Node};
use crate::number::Number;

/// Integer powers of sums up to this exponent are expanded outright.
const MAX_SUM_POW_EXPANSION: i64 = 6;
/// Bound on product re-collection; exceeding it means a rewrite loop.
const MAX_COLLECT_PASSES: usize = 32;

pub(crate) fn mk_neg(operand: Expr) -> Expr {
    match operand.node() {
        Node::Const(c) => Expr::constant(c.neg()),
        Node::Neg(inner) => inner.clone(),
        Node::Sum(ops) => mk_sum(ops.iter().cloned().map(mk_neg).collect()),
        _ => Expr::new(Node::Neg(operand)),
    }
}

pub(crate) fn mk_func(kind: FuncKind, argument: Expr) -> Expr {
    if let Some(c) = argument.as_constant() {
        if c.is_zero() {
            match kind {
                FuncKind::Exp | FuncKind::Cos => return Expr::one(),
                FuncKind::Sin
                | FuncKind::Tan
                | FuncKind::Arcsin
                | FuncKind::Arctan
                | FuncKind::Sqrt => return Expr::zero(),
                FuncKind::Ln => {}
            }
        } else if c.is_one() {
            match kind {
                FuncKind::Ln => return Expr::zero(),
                FuncKind::Sqrt => return Expr::one(),
                _ => {}
            }
        }
    }
    let odd = matches!(
        kind,
        FuncKind::Sin | FuncKind::Tan | FuncKind::Arcsin | FuncKind::Arctan
    );
    if odd || kind == FuncKind::Cos {
        let positive_arg = match argument.node() {
            Node::Neg(inner) => Some(inner.clone()),
            Node::Const(c) if c.is_negative() => Some(Expr::constant(c.neg())),
            _ => None,
        };
        if let Some(arg) = positive_arg {
            let f = mk_func(kind, arg);
            return if odd { mk_neg(f) } else { f };
        }
    }
    Expr::new(Node::Func(kind, argument))
}

pub(crate) fn mk_pow(base: Expr, exponent: Expr) -> Expr {
    if exponent.is_zero() {
        return Expr::one(); // 0^0 -> 1 by convention
    }
    if exponent.is_one() {
        return base;
    }
    if base.is_one() {
        return Expr::one();
    }
    if let (Some(b), Some(e)) = (base.as_constant(), exponent.as_constant()) {
        if let Some(v) = b.pow(e) {
            return Expr::constant(v);
        }
        // every negative power of zero is the same undefined value
        if b.is_zero() && e.is_negative() {
            return Expr::new(Node::Power(base, Expr::integer(-1)));
        }
    }
    if let Some(k) = exponent.as_integer() {
        match base.node() {
            Node::Power(inner_base, inner_exp) => {
                return mk_pow(
                    inner_base.clone(),
                    mk_product(vec![inner_exp.clone(), exponent.clone()]),
                );
            }
            Node::Product(ops) => {
                return mk_product(
                    ops.iter()
                        .map(|f| mk_pow(f.clone(), exponent.clone()))
                        .collect(),
                );
            }
            Node::Neg(inner) => {
                let p = mk_pow(inner.clone(), exponent);
                return if k % 2 == 0 { p } else { mk_neg(p) };
            }
            // sqrt(a)^(2j) -> a^j, matching the collection rule for
            // half-integer powers; odd powers keep the sqrt factor
            Node::Func(FuncKind::Sqrt, inner) if k % 2 == 0 => {
                return mk_pow(inner.clone(), Expr::integer(k / 2));
            }
            Node::Sum(terms) if (2..=MAX_SUM_POW_EXPANSION).contains(&k) => {
                return expand_sum_power(terms, k as usize);
            }
            _ => {}
        }
    }
    Expr::new(Node::Power(base, exponent))
}

fn expand_sum_power(terms: &[Expr], k: usize) -> Expr {
    let mut acc: Vec<Expr> = terms.to_vec();
    for _ in 1..k {
        let mut next = Vec::with_capacity(acc.len() * terms.len());
        for a in &acc {
            for b in terms {
                next.push(mk_product(vec![a.clone(), b.clone()]));
            }
        }
        acc = next;
    }
    mk_sum(acc)
}

pub(crate) fn mk_sum(terms: Vec<Expr>) -> Expr {
    let mut constant = Number::zero();
    let mut by_core: std::collections::BTreeMap<Expr, Number> = std::collections::BTreeMap::new();
    let mut work = terms;
    work.reverse();
    while let Some(t) = work.pop() {
        match t.node() {
            Node::Sum(ops) => work.extend(ops.iter().cloned()),
            Node::Const(c) => constant = constant.add(c),
            _ => {
                let (coeff, core) = term_parts(&t);
                by_core
                    .entry(core)
                    .and_modify(|acc| *acc = acc.add(&coeff))
                    .or_insert(coeff);
            }
        }
    }
    let mut out: Vec<Expr> = Vec::new();
    for (core, coeff) in by_core {
        if coeff.is_zero() {
            continue;
        }
        out.push(attach_coefficient(coeff, core));
    }
    if !constant.is_zero() {
        out.push(Expr::constant(constant));
    }
    out.sort();
    match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => Expr::new(Node::Sum(out)),
    }
}

/// Splits a canonical non-sum term into its rational coefficient and the
/// coefficient-free core used as the collection key.
fn term_parts(term: &Expr) -> (Number, Expr) {
    match term.node() {
        Node::Neg(inner) => {
            let (coeff, core) = term_parts(inner);
            (coeff.neg(), core)
        }
        Node::Product(ops) => {
            if let Node::Const(c) = ops[0].node() {
                let rest: Vec<Expr> = ops[1..].to_vec();
                let core = if rest.len() == 1 {
                    rest.into_iter().next().unwrap()
                } else {
                    Expr::new(Node::Product(rest))
                };
                (c.clone(), core)
            } else {
                (Number::one(), term.clone())
            }
        }
        _ => (Number::one(), term.clone()),
    }
}

fn attach_coefficient(coeff: Number, core: Expr) -> Expr {
    let negative = coeff.is_negative();
    let magnitude = coeff.abs();
    let body = if magnitude.is_one() {
        core
    } else {
        match core.node() {
            Node::Product(ops) => {
                let mut v = Vec::with_capacity(ops.len() + 1);
                v.push(Expr::constant(magnitude));
                v.extend(ops.iter().cloned());
                Expr::new(Node::Product(v))
            }
            _ => Expr::new(Node::Product(vec![Expr::constant(magnitude), core])),
        }
    };
    if negative {
        Expr::new(Node::Neg(body))
    } else {
        body
    }
}

pub(crate) fn mk_product(factors: Vec<Expr>) -> Expr {
    collect_product(factors, 0)
}

fn collect_product(factors: Vec<Expr>, pass: usize) -> Expr {
    assert!(
        pass < MAX_COLLECT_PASSES,
        "product collection did not stabilize"
    );
    // Phase 1: flatten nested products, strip signs, fold constants.
    let mut coeff = Number::one();
    let mut negative = false;
    let mut atoms: Vec<Expr> = Vec::new();
    let mut work = factors;
    work.reverse();
    while let Some(f) = work.pop() {
        match f.node() {
            Node::Const(c) => {
                if c.is_zero() {
                    return Expr::zero();
                }
                coeff = coeff.mul(c);
            }
            Node::Neg(inner) => {
                negative = !negative;
                work.push(inner.clone());
            }
            Node::Product(ops) => work.extend(ops.iter().cloned()),
            _ => atoms.push(f),
        }
    }
    if coeff.is_zero() {
        return Expr::zero();
    }
    if coeff.is_negative() {
        negative = !negative;
        coeff = coeff.neg();
    }
    // Phase 2: collect exponents per base.
    let mut by_base: std::collections::BTreeMap<Expr, Vec<Expr>> = std::collections::BTreeMap::new();
    for f in atoms {
        let (base, exp) = match f.node() {
            Node::Power(b, e) => (b.clone(), e.clone()),
            _ => (f, Expr::one()),
        };
        by_base.entry(base).or_default().push(exp);
    }
    // Phase 3: emit collected powers. Exponent arithmetic can fold a factor
    // into a constant, flip its sign or split it into a product; such
    // factors go through another collection pass.
    let mut emitted: Vec<Expr> = Vec::new();
    let mut repass = false;
    for (base, exps) in by_base {
        let total = mk_sum(exps);
        let factor = mk_pow(base, total);
        if factor.is_one() {
            continue;
        }
        if matches!(
            factor.node(),
            Node::Const(_) | Node::Neg(_) | Node::Product(_)
        ) {
            repass = true;
        }
        emitted.push(factor);
    }
    if repass {
        let signed = if negative { coeff.neg() } else { coeff };
        emitted.push(Expr::constant(signed));
        return collect_product(emitted, pass + 1);
    }
    // Phase 4: distribute over any sum factors.
    let mut sum_factors: Vec<Vec<Expr>> = Vec::new();
    let mut plain: Vec<Expr> = Vec::new();
    for f in emitted {
        match f.node() {
            Node::Sum(terms) => sum_factors.push(terms.clone()),
            _ => plain.push(f),
        }
    }
    if !sum_factors.is_empty() {
        let signed = if negative { coeff.neg() } else { coeff };
        let mut combos: Vec<Vec<Expr>> = vec![Vec::new()];
        for terms in &sum_factors {
            let mut next = Vec::with_capacity(combos.len() * terms.len());
            for combo in &combos {
                for t in terms {
                    let mut extended = combo.clone();
                    extended.push(t.clone());
                    next.push(extended);
                }
            }
            combos = next;
        }
        let expanded = combos
            .into_iter()
            .map(|combo| {
                let mut fs = Vec::with_capacity(plain.len() + combo.len() + 1);
                fs.push(Expr::constant(signed.clone()));
                fs.extend(plain.iter().cloned());
                fs.extend(combo);
                mk_product(fs)
            })
            .collect();
        return mk_sum(expanded);
    }
    // Phase 5: assemble.
    plain.sort();
    let core = match plain.len() {
        0 => Expr::one(),
        1 => plain.pop().unwrap(),
        _ => Expr::new(Node::Product(plain)),
    };
    let body = if coeff.is_one() {
        core
    } else if core.is_one() {
        Expr::constant(coeff)
    } else {
        match core.node() {
            Node::Product(ops) => {
                let mut v = Vec::with_capacity(ops.len() + 1);
                v.push(Expr::constant(coeff));
                v.extend(ops.iter().cloned());
                Expr::new(Node::Product(v))
            }
            _ => Expr::new(Node::Product(vec![Expr::constant(coeff), core])),
        }
    };
    if negative {
        mk_neg(body)
    } else {
        body
    }
}
