//! Guarded numeric evaluation.

use super::{Expr, FuncKind, Node};
use crate::error::{DomainErrorKind, Error, Result};
use crate::scalar::Real;
use std::collections::BTreeMap;

/// A map from symbol names to finite values.
#[derive(Debug, Clone, Default)]
pub struct Bindings<F = crate::Scalar> {
    map: BTreeMap<String, F>,
}

impl<F: Real> Bindings<F> {
    pub fn new() -> Self {
        Bindings {
            map: BTreeMap::new(),
        }
    }

    /// Builds from pairs; duplicate names and non-finite values are errors.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, F)>,
        S: Into<String>,
    {
        let mut b = Bindings::new();
        for (name, value) in pairs {
            b.insert(name.into(), value)?;
        }
        Ok(b)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: F) -> Result<()> {
        let name = name.into();
        if !value.is_finite() {
            return Err(Error::InvalidBinding {
                name,
                reason: "non-finite value",
            });
        }
        if self.map.insert(name.clone(), value).is_some() {
            return Err(Error::InvalidBinding {
                name,
                reason: "duplicate name",
            });
        }
        Ok(())
    }

    /// Overwrites or inserts, for rebinding a loop variable.
    pub fn set(&mut self, name: impl Into<String>, value: F) {
        self.map.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<F> {
        self.map.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &F)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl<F: Real> std::fmt::Display for Bindings<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, (name, value)) in self.map.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{name} = {value}")?;
        }
        write!(f, ")")
    }
}

impl Expr {
    /// Evaluates with every free symbol bound. Domain violations are
    /// reported as [`Error::Domain`], missing symbols as
    /// [`Error::UnboundSymbol`].
    pub fn eval<F: Real>(&self, bindings: &Bindings<F>) -> Result<F> {
        let value = match self.node() {
            Node::Const(c) => {
                F::from_f64(c.to_f64()).ok_or(Error::Domain(DomainErrorKind::Overflow))?
            }
            Node::Symbol(name) => bindings
                .get(name)
                .ok_or_else(|| Error::UnboundSymbol(name.clone()))?,
            Node::Sum(ops) => {
                let mut acc = F::zero();
                for op in ops {
                    acc = acc + op.eval(bindings)?;
                }
                acc
            }
            Node::Product(ops) => {
                let mut acc = F::one();
                for op in ops {
                    acc = acc * op.eval(bindings)?;
                }
                acc
            }
            Node::Neg(a) => -a.eval(bindings)?,
            Node::Power(base, exp) => {
                let b = base.eval(bindings)?;
                let e = exp.eval(bindings)?;
                if b == F::zero() {
                    if e < F::zero() {
                        return Err(Error::Domain(DomainErrorKind::DivisionByZero));
                    }
                    if e == F::zero() {
                        F::one()
                    } else {
                        F::zero()
                    }
                } else if b < F::zero() && e.fract() != F::zero() {
                    return Err(Error::Domain(DomainErrorKind::FractionalPower));
                } else {
                    b.powf(e)
                }
            }
            Node::Func(kind, arg) => {
                let a = arg.eval(bindings)?;
                match kind {
                    FuncKind::Exp => a.exp(),
                    FuncKind::Ln => {
                        if a <= F::zero() {
                            return Err(Error::Domain(DomainErrorKind::Log));
                        }
                        a.ln()
                    }
                    FuncKind::Sin => a.sin(),
                    FuncKind::Cos => a.cos(),
                    FuncKind::Tan => a.tan(),
                    FuncKind::Arcsin => {
                        if a.abs() > F::one() {
                            return Err(Error::Domain(DomainErrorKind::Arcsin));
                        }
                        a.asin()
                    }
                    FuncKind::Arctan => a.atan(),
                    FuncKind::Sqrt => {
                        if a < F::zero() {
                            return Err(Error::Domain(DomainErrorKind::Sqrt));
                        }
                        a.sqrt()
                    }
                }
            }
        };
        if !value.is_finite() {
            return Err(Error::Domain(DomainErrorKind::Overflow));
        }
        Ok(value)
    }
}
