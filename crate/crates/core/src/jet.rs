//! Jet-space bookkeeping: multi-indices, jet coordinate symbols and total
//! derivative operators.
//!
//! Coordinate naming. Independent variables default to `x1..xn` (`x` when
//! n = 1), dependent variables to `u1..um` (`u` when m = 1). Derivative
//! coordinates are always named by dependent index and bracketed
//! multi-index, `u<i>[a1,...,an]`, e.g. `u1[1]` for `u_x` with n = 1 and
//! `u2[0,1]` for the `x2`-derivative of `u^2` with n = 2. For n = 1 the
//! prime aliases `u<i>'` and `u<i>''` (and `u'`, `u''` when m = 1) are
//! accepted by [`JetSpace::canonicalize`].

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg;
use std::collections::BTreeMap;
use std::fmt;

/// A derivative multi-index: one non-negative entry per independent
/// variable; the order is the entry sum.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    parts: Vec<usize>,
}

impl MultiIndex {
    pub fn new(parts: Vec<usize>) -> Self {
        MultiIndex { parts }
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex {
            parts: vec![0; n],
        }
    }

    pub fn order(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn get(&self, axis: usize) -> usize {
        self.parts[axis]
    }

    /// The index with one more derivative along `axis`.
    pub fn bump(&self, axis: usize) -> MultiIndex {
        let mut parts = self.parts.clone();
        parts[axis] += 1;
        MultiIndex { parts }
    }

    /// The index with one derivative removed along `axis`.
    pub fn lower(&self, axis: usize) -> Option<MultiIndex> {
        if self.parts[axis] == 0 {
            return None;
        }
        let mut parts = self.parts.clone();
        parts[axis] -= 1;
        Some(MultiIndex { parts })
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// All multi-indices of length `n` with order up to `max_order`, sorted by
/// (order, ascending lexicographic).
pub fn multi_indices(n: usize, max_order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for order in 0..=max_order {
        let mut level = Vec::new();
        compositions(n, order, &mut Vec::new(), &mut level);
        level.sort();
        out.extend(level);
    }
    out
}

fn compositions(n: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
    if n == 1 {
        let mut parts = prefix.clone();
        parts.push(total);
        out.push(MultiIndex::new(parts));
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        compositions(n - 1, total - first, prefix, out);
        prefix.pop();
    }
}

/// Classification of a symbol name within a jet space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Coordinate {
    Independent(usize),
    /// Dependent variable `i` with derivative multi-index `alpha`
    /// (`alpha = 0` is the variable itself).
    Jet(usize, MultiIndex),
}

/// Declaration of the independent/dependent variables and the maximum jet
/// order. Cheap to clone; carries no expression state.
#[derive(Debug, Clone)]
pub struct JetSpace {
    n: usize,
    m: usize,
    max_order: usize,
    indep: Vec<String>,
    dep: Vec<String>,
}

impl JetSpace {
    pub fn new(n: usize, m: usize, max_order: usize) -> JetSpace {
        assert!(n >= 1 && m >= 1, "need at least one variable of each kind");
        let indep = if n == 1 {
            vec!["x".to_string()]
        } else {
            (1..=n).map(|a| format!("x{a}")).collect()
        };
        let dep = if m == 1 {
            vec!["u".to_string()]
        } else {
            (1..=m).map(|i| format!("u{i}")).collect()
        };
        JetSpace {
            n,
            m,
            max_order,
            indep,
            dep,
        }
    }

    /// Same space with at least the given maximum order.
    pub fn widened(&self, max_order: usize) -> JetSpace {
        let mut js = self.clone();
        js.max_order = js.max_order.max(max_order);
        js
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn indep_name(&self, axis: usize) -> &str {
        &self.indep[axis]
    }

    pub fn dep_name(&self, i: usize) -> &str {
        &self.dep[i]
    }

    pub fn indep_symbol(&self, axis: usize) -> Expr {
        Expr::symbol(self.indep[axis].clone())
    }

    pub fn dep_symbol(&self, i: usize) -> Expr {
        Expr::symbol(self.dep[i].clone())
    }

    /// Canonical name of the jet coordinate `u^i_alpha` (0-based `i`).
    pub fn jet_name(&self, i: usize, alpha: &MultiIndex) -> String {
        if alpha.order() == 0 {
            self.dep[i].clone()
        } else {
            format!("u{}[{alpha}]", i + 1)
        }
    }

    pub fn jet_symbol(&self, i: usize, alpha: &MultiIndex) -> Expr {
        Expr::symbol(self.jet_name(i, alpha))
    }

    /// Classifies a canonical symbol name; alias forms are resolved by
    /// [`JetSpace::canonicalize`] first. Unrecognized names (free
    /// parameters such as `C` or `k`) return None.
    pub fn classify(&self, name: &str) -> Option<Coordinate> {
        if let Some(axis) = self.indep.iter().position(|s| s == name) {
            return Some(Coordinate::Independent(axis));
        }
        if let Some(i) = self.dep.iter().position(|s| s == name) {
            return Some(Coordinate::Jet(i, MultiIndex::zero(self.n)));
        }
        // bracketed form u<i>[a1,...,an]
        let rest = name.strip_prefix('u')?;
        let open = rest.find('[')?;
        let i: usize = rest[..open].parse().ok()?;
        if i < 1 || i > self.m {
            return None;
        }
        let inner = rest[open + 1..].strip_suffix(']')?;
        let mut parts = Vec::with_capacity(self.n);
        for piece in inner.split(',') {
            parts.push(piece.parse().ok()?);
        }
        if parts.len() != self.n {
            return None;
        }
        let alpha = MultiIndex::new(parts);
        if alpha.order() == 0 {
            // u<i>[0,...,0] denotes the variable itself
            return Some(Coordinate::Jet(i - 1, alpha));
        }
        Some(Coordinate::Jet(i - 1, alpha))
    }

    /// Rewrites alias symbols to canonical ones: `x1 -> x` (n = 1),
    /// `u1 -> u` (m = 1), primes to bracketed indices (n = 1, order <= 2),
    /// and explicit zero multi-indices to the plain variable name.
    pub fn canonicalize(&self, e: &Expr) -> Expr {
        let mut map: BTreeMap<String, Expr> = BTreeMap::new();
        for name in e.free_symbols() {
            if let Some(canonical) = self.alias_target(&name) {
                if canonical != name {
                    map.insert(name, Expr::symbol(canonical));
                }
            }
        }
        e.substitute(&map)
    }

    fn alias_target(&self, name: &str) -> Option<String> {
        if self.n == 1 && name == "x1" {
            return Some("x".to_string());
        }
        if self.m == 1 && name == "u1" {
            return Some("u".to_string());
        }
        // prime aliases, only meaningful for n = 1
        if self.n == 1 {
            if let Some(stripped) = name.strip_suffix("''") {
                if let Some(i) = self.prime_base(stripped) {
                    return Some(format!("u{}[2]", i + 1));
                }
            } else if let Some(stripped) = name.strip_suffix('\'') {
                if let Some(i) = self.prime_base(stripped) {
                    return Some(format!("u{}[1]", i + 1));
                }
            }
        }
        // explicit zero multi-index
        if let Some(Coordinate::Jet(i, alpha)) = self.classify(name) {
            if alpha.order() == 0 && name != self.dep[i] {
                return Some(self.dep[i].clone());
            }
        }
        None
    }

    fn prime_base(&self, base: &str) -> Option<usize> {
        if let Some(i) = self.dep.iter().position(|s| s == base) {
            return Some(i);
        }
        // `u3'` with m >= 2 names the third dependent variable
        let rest = base.strip_prefix('u')?;
        let i: usize = rest.parse().ok()?;
        if i >= 1 && i <= self.m {
            Some(i - 1)
        } else {
            None
        }
    }

    /// The highest derivative order appearing in the expression (plain
    /// dependent variables count as order 0).
    pub fn jet_order(&self, e: &Expr) -> usize {
        e.free_symbols()
            .iter()
            .filter_map(|name| match self.classify(name) {
                Some(Coordinate::Jet(_, alpha)) => Some(alpha.order()),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// True when the expression involves no dependent or jet coordinates.
    pub fn is_base_only(&self, e: &Expr) -> bool {
        e.free_symbols()
            .iter()
            .all(|name| !matches!(self.classify(name), Some(Coordinate::Jet(_, _))))
    }

    /// Ordered coordinate names of the jet space up to the given order:
    /// the x's, then `u^i_alpha` sorted by (order, i, lexicographic alpha).
    pub fn coordinates(&self, up_to: usize) -> Result<Vec<String>> {
        if up_to > self.max_order {
            return Err(Error::OrderExceeded {
                needed: up_to,
                max: self.max_order,
            });
        }
        let mut out: Vec<String> = self.indep.clone();
        for order in 0..=up_to {
            let mut level: Vec<MultiIndex> = multi_indices(self.n, order)
                .into_iter()
                .filter(|a| a.order() == order)
                .collect();
            level.sort();
            for i in 0..self.m {
                for alpha in &level {
                    out.push(self.jet_name(i, alpha));
                }
            }
        }
        Ok(out)
    }

    /// Total derivative `D_{x_axis}`. The chain-rule sum ranges over
    /// exactly the dependent/jet coordinates present in the expression.
    pub fn total_derivative(&self, e: &Expr, axis: usize) -> Result<Expr> {
        assert!(axis < self.n, "axis out of range");
        let mut terms = vec![e.diff(&self.indep[axis])];
        for name in e.free_symbols() {
            if let Some(Coordinate::Jet(i, alpha)) = self.classify(&name) {
                let needed = alpha.order() + 1;
                if needed > self.max_order {
                    return Err(Error::OrderExceeded {
                        needed,
                        max: self.max_order,
                    });
                }
                let partial = e.diff(&name);
                if partial.is_zero() {
                    continue;
                }
                let bumped = self.jet_symbol(i, &alpha.bump(axis));
                terms.push(partial * bumped);
            }
        }
        Ok(Expr::sum(terms))
    }

    /// Repeated total derivative along one axis.
    pub fn total_derivative_pow(&self, e: &Expr, axis: usize, times: usize) -> Result<Expr> {
        let mut acc = e.clone();
        for _ in 0..times {
            acc = self.total_derivative(&acc, axis)?;
        }
        Ok(acc)
    }

    /// Jacobian of total derivatives: the determinant of
    /// `[D_{axes[j]} funcs[i]]`, expanded by cofactors.
    pub fn total_jacobian(&self, funcs: &[Expr], axes: &[usize]) -> Result<Expr> {
        if funcs.len() != axes.len() || funcs.is_empty() {
            return Err(Error::WrongArity {
                what: "total_jacobian axes",
                expected: funcs.len().max(1),
                got: axes.len(),
            });
        }
        let mut rows = Vec::with_capacity(funcs.len());
        for f in funcs {
            let mut row = Vec::with_capacity(axes.len());
            for &a in axes {
                row.push(self.total_derivative(f, a)?);
            }
            rows.push(row);
        }
        linalg::determinant(&rows)
    }

    /// Convenience: parse and canonicalize in one step.
    pub fn parse(&self, text: &str) -> Result<Expr> {
        Ok(self.canonicalize(&crate::expr::parse(text)?))
    }
}

/// Binomial coefficient, used for coordinate-count laws.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result = 1usize;
    for i in 0..k {
        result = result * (n - i) / (i + 1);
    }
    result
}
