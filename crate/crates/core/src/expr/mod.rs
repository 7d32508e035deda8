//! Immutable symbolic expression trees.
//!
//! Every operation in this crate computes on [`Expr`]: a reference-counted
//! tree of constants, symbols, sums, products, powers, negations and
//! elementary function applications. Trees are kept in a canonical normal
//! form (see [`normalize`]), which makes structural equality meaningful:
//! two expressions that the normalizer can identify compare equal with
//! `==`. Identities beyond the normalizer's reach are checked numerically
//! with [`equivalent_numeric`](crate::sample::equivalent_numeric).
//!
//! Division is represented as a product with a negative power, and
//! subtraction as a sum with a negated operand; neither has a node of its
//! own.

mod diff;
mod eval;
mod normalize;
mod parser;
mod render;

pub use eval::Bindings;
pub use parser::parse;

use crate::number::Number;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

pub(crate) use normalize::{mk_func, mk_neg, mk_pow, mk_product, mk_sum};

/// The elementary functions of the expression language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FuncKind {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Arcsin,
    Arctan,
    Sqrt,
}

impl FuncKind {
    pub const ALL: [FuncKind; 8] = [
        FuncKind::Exp,
        FuncKind::Ln,
        FuncKind::Sin,
        FuncKind::Cos,
        FuncKind::Tan,
        FuncKind::Arcsin,
        FuncKind::Arctan,
        FuncKind::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FuncKind::Exp => "exp",
            FuncKind::Ln => "ln",
            FuncKind::Sin => "sin",
            FuncKind::Cos => "cos",
            FuncKind::Tan => "tan",
            FuncKind::Arcsin => "arcsin",
            FuncKind::Arctan => "arctan",
            FuncKind::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<FuncKind> {
        FuncKind::ALL.iter().copied().find(|k| k.name() == name)
    }
}

#[derive(Debug)]
pub enum Node {
    Const(Number),
    Symbol(String),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Power(Expr, Expr),
    Neg(Expr),
    Func(FuncKind, Expr),
}

/// An immutable expression; clones share the underlying tree.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub(crate) fn new(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    // ---- leaf constructors (always canonical) ----

    pub fn integer(value: i64) -> Expr {
        Expr::constant(Number::integer(value))
    }

    pub fn rational(numer: i64, denom: i64) -> Expr {
        Expr::constant(Number::rational(numer, denom))
    }

    /// A finite f64 constant. Panics on NaN or infinity.
    pub fn float(value: f64) -> Expr {
        Expr::constant(Number::float(value))
    }

    pub fn constant(value: Number) -> Expr {
        Expr::new(Node::Const(value))
    }

    pub fn symbol(name: impl Into<String>) -> Expr {
        Expr::new(Node::Symbol(name.into()))
    }

    pub fn zero() -> Expr {
        Expr::integer(0)
    }

    pub fn one() -> Expr {
        Expr::integer(1)
    }

    // ---- canonical composite constructors ----
    //
    // These assume their operands are already canonical (which every public
    // constructor guarantees) and produce canonical results.

    pub fn sum(terms: Vec<Expr>) -> Expr {
        mk_sum(terms)
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        mk_product(factors)
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        mk_pow(base, exponent)
    }

    #[allow(clippy::should_implement_trait)] // the by-value companion of the Neg impl
    pub fn neg(operand: Expr) -> Expr {
        mk_neg(operand)
    }

    pub fn func(kind: FuncKind, argument: Expr) -> Expr {
        mk_func(kind, argument)
    }

    pub fn sqrt(argument: Expr) -> Expr {
        mk_func(FuncKind::Sqrt, argument)
    }

    pub fn exp(argument: Expr) -> Expr {
        mk_func(FuncKind::Exp, argument)
    }

    pub fn ln(argument: Expr) -> Expr {
        mk_func(FuncKind::Ln, argument)
    }

    /// Multiplicative inverse `self^-1`.
    pub fn inv(&self) -> Expr {
        mk_pow(self.clone(), Expr::integer(-1))
    }

    // ---- raw constructors ----
    //
    // Build nodes without normalizing. Used by the parser and by tests that
    // exercise `normalize` on arbitrary trees.

    pub fn raw_sum(terms: Vec<Expr>) -> Expr {
        Expr::new(Node::Sum(terms))
    }

    pub fn raw_product(factors: Vec<Expr>) -> Expr {
        Expr::new(Node::Product(factors))
    }

    pub fn raw_pow(base: Expr, exponent: Expr) -> Expr {
        Expr::new(Node::Power(base, exponent))
    }

    pub fn raw_neg(operand: Expr) -> Expr {
        Expr::new(Node::Neg(operand))
    }

    pub fn raw_func(kind: FuncKind, argument: Expr) -> Expr {
        Expr::new(Node::Func(kind, argument))
    }

    // ---- queries ----

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Const(c) if c.is_one())
    }

    pub fn as_constant(&self) -> Option<&Number> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self.node() {
            Node::Symbol(name) => Some(name),
            _ => None,
        }
    }

    /// The exponent as a small integer, if this is a constant integer.
    pub fn as_integer(&self) -> Option<i64> {
        self.as_constant().and_then(Number::as_integer)
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Symbol(name) => {
                out.insert(name.clone());
            }
            Node::Sum(ops) | Node::Product(ops) => {
                for op in ops {
                    op.collect_symbols(out);
                }
            }
            Node::Power(b, e) => {
                b.collect_symbols(out);
                e.collect_symbols(out);
            }
            Node::Neg(a) => a.collect_symbols(out),
            Node::Func(_, a) => a.collect_symbols(out),
        }
    }

    pub fn contains_symbol(&self, name: &str) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Symbol(s) => s == name,
            Node::Sum(ops) | Node::Product(ops) => ops.iter().any(|op| op.contains_symbol(name)),
            Node::Power(b, e) => b.contains_symbol(name) || e.contains_symbol(name),
            Node::Neg(a) | Node::Func(_, a) => a.contains_symbol(name),
        }
    }

    /// Rebuilds the tree bottom-up through the canonical constructors.
    /// Idempotent: normalizing a canonical tree returns an equal tree.
    pub fn normalize(&self) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Symbol(_) => self.clone(),
            Node::Sum(ops) => mk_sum(ops.iter().map(Expr::normalize).collect()),
            Node::Product(ops) => mk_product(ops.iter().map(Expr::normalize).collect()),
            Node::Power(b, e) => mk_pow(b.normalize(), e.normalize()),
            Node::Neg(a) => mk_neg(a.normalize()),
            Node::Func(k, a) => mk_func(*k, a.normalize()),
        }
    }

    /// Simultaneous substitution of symbols; replacements are not
    /// re-substituted. The result is normalized.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        if map.is_empty() {
            return self.clone();
        }
        self.substitute_inner(map)
    }

    fn substitute_inner(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Symbol(name) => match map.get(name) {
                Some(replacement) => replacement.clone(),
                None => self.clone(),
            },
            Node::Sum(ops) => mk_sum(ops.iter().map(|op| op.substitute_inner(map)).collect()),
            Node::Product(ops) => {
                mk_product(ops.iter().map(|op| op.substitute_inner(map)).collect())
            }
            Node::Power(b, e) => mk_pow(b.substitute_inner(map), e.substitute_inner(map)),
            Node::Neg(a) => mk_neg(a.substitute_inner(map)),
            Node::Func(k, a) => mk_func(*k, a.substitute_inner(map)),
        }
    }

    /// Exact partial derivative with respect to the symbol `name`; all
    /// other symbols are treated as constants.
    pub fn diff(&self, name: &str) -> Expr {
        diff::diff(self, name)
    }

    /// Renders to text that `parse` maps back to this expression.
    pub fn render(&self) -> String {
        self.to_string()
    }

    fn kind_rank(&self) -> u8 {
        match self.node() {
            Node::Const(_) => 0,
            Node::Symbol(_) => 1,
            Node::Power(_, _) => 2,
            Node::Func(_, _) => 3,
            Node::Neg(_) => 4,
            Node::Product(_) => 5,
            Node::Sum(_) => 6,
        }
    }

    /// The canonical total order: by node kind, then by content, then
    /// recursively. Operand lists compare lexicographically.
    pub fn canonical_cmp(&self, other: &Expr) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        let rank = self.kind_rank().cmp(&other.kind_rank());
        if rank != Ordering::Equal {
            return rank;
        }
        match (self.node(), other.node()) {
            (Node::Const(a), Node::Const(b)) => a.canonical_cmp(b),
            (Node::Symbol(a), Node::Symbol(b)) => a.cmp(b),
            (Node::Power(ab, ae), Node::Power(bb, be)) => ab
                .canonical_cmp(bb)
                .then_with(|| ae.canonical_cmp(be)),
            (Node::Func(ak, aa), Node::Func(bk, ba)) => {
                ak.cmp(bk).then_with(|| aa.canonical_cmp(ba))
            }
            (Node::Neg(a), Node::Neg(b)) => a.canonical_cmp(b),
            (Node::Sum(a), Node::Sum(b)) | (Node::Product(a), Node::Product(b)) => {
                for (x, y) in a.iter().zip(b.iter()) {
                    let c = x.canonical_cmp(y);
                    if c != Ordering::Equal {
                        return c;
                    }
                }
                a.len().cmp(&b.len())
            }
            _ => unreachable!("kind ranks matched"),
        }
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.canonical_cmp(other) == Ordering::Equal
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical_cmp(other)
    }
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self}")
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        mk_sum(vec![self, rhs])
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        mk_sum(vec![self, mk_neg(rhs)])
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        mk_product(vec![self, rhs])
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        mk_product(vec![self, rhs.inv()])
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        mk_neg(self)
    }
}
