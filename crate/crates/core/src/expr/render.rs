//! Deterministic rendering back to the expression grammar.
//!
//! For any canonical expression with rational constants,
//! `parse(render(e)) == e`. Float constants render in shortest
//! round-trip decimal form; parsing reads them back as exact rationals of
//! the same value.

use super::{Expr, Node};
use crate::number::Number;
use std::fmt;

const SUM_PREC: u8 = 10;
const PROD_PREC: u8 = 20;
const NEG_PREC: u8 = 25;
const POW_PREC: u8 = 30;
const ATOM_PREC: u8 = 100;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Const(c) => {
            if c.is_negative() {
                NEG_PREC
            } else {
                match c {
                    Number::Rational(q) if !q.is_integer() => PROD_PREC,
                    _ => ATOM_PREC,
                }
            }
        }
        Node::Symbol(_) | Node::Func(_, _) => ATOM_PREC,
        Node::Power(base, exp) => {
            // reciprocal factors render through the division path
            if denominator_exponent(base, exp).is_some() {
                PROD_PREC
            } else {
                POW_PREC
            }
        }
        Node::Neg(_) => NEG_PREC,
        Node::Product(_) => PROD_PREC,
        Node::Sum(_) => SUM_PREC,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(e) < min_prec {
        write!(f, "(")?;
        write_node(f, e)?;
        write!(f, ")")
    } else {
        write_node(f, e)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e.node() {
        Node::Const(c) => write!(f, "{c}"),
        Node::Symbol(name) => write!(f, "{name}"),
        Node::Func(kind, arg) => {
            write!(f, "{}(", kind.name())?;
            write_node(f, arg)?;
            write!(f, ")")
        }
        Node::Neg(a) => {
            write!(f, "-")?;
            write_at(f, a, NEG_PREC + 1)
        }
        Node::Sum(terms) => {
            for (i, term) in terms.iter().enumerate() {
                let (negative, body) = split_sign(term);
                if i == 0 {
                    if negative {
                        write!(f, "-")?;
                    }
                } else if negative {
                    write!(f, " - ")?;
                } else {
                    write!(f, " + ")?;
                }
                write_at(f, &body, SUM_PREC + 1)?;
            }
            Ok(())
        }
        Node::Product(factors) => write_product(f, factors),
        Node::Power(base, exp) => {
            if denominator_exponent(base, exp).is_some() {
                // lone reciprocal: 1/b or 1/b^k
                write!(f, "1/")?;
                return write_power(f, base, &exp.as_constant().expect("constant").abs());
            }
            write_at(f, base, POW_PREC + 1)?;
            write!(f, "^")?;
            write_at(f, exp, POW_PREC)
        }
    }
}

/// The positive exponent a factor contributes to a rendered denominator,
/// or None when it must stay a plain power. Sum bases with exponents
/// beyond -1 are excluded: text like `1/(x-1)^2` would re-parse with the
/// inner square expanded, breaking the render round trip; such factors
/// render as `(x-1)^(-2)` instead.
fn denominator_exponent(base: &Expr, exp: &Expr) -> Option<Number> {
    let c = exp.as_constant()?;
    if !c.is_negative() {
        return None;
    }
    let magnitude = c.abs();
    if magnitude.is_one() || !matches!(base.node(), Node::Sum(_)) {
        Some(magnitude)
    } else {
        None
    }
}

fn split_sign(term: &Expr) -> (bool, Expr) {
    match term.node() {
        Node::Neg(inner) => (true, inner.clone()),
        Node::Const(c) if c.is_negative() => (true, Expr::constant(c.neg())),
        _ => (false, term.clone()),
    }
}

/// Writes `base^exp` with a positive constant exponent, eliding `^1`.
fn write_power(f: &mut fmt::Formatter<'_>, base: &Expr, exp: &Number) -> fmt::Result {
    if exp.is_one() {
        write_at(f, base, PROD_PREC + 1)
    } else {
        write_at(f, base, POW_PREC + 1)?;
        write!(f, "^")?;
        write_at(f, &Expr::constant(exp.clone()), POW_PREC)
    }
}

fn write_product(f: &mut fmt::Formatter<'_>, factors: &[Expr]) -> fmt::Result {
    let mut numerator: Vec<&Expr> = Vec::new();
    let mut denominator: Vec<(&Expr, Number)> = Vec::new();
    for factor in factors {
        if let Node::Power(base, exp) = factor.node() {
            if let Some(magnitude) = denominator_exponent(base, exp) {
                denominator.push((base, magnitude));
                continue;
            }
        }
        numerator.push(factor);
    }
    if numerator.is_empty() {
        write!(f, "1")?;
    } else {
        for (i, factor) in numerator.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write_at(f, factor, PROD_PREC + 1)?;
        }
    }
    for (base, exp) in denominator {
        write!(f, "/")?;
        write_power(f, base, &exp)?;
    }
    Ok(())
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, self)
    }
}
