//! Vector fields, prolongations and numeric invariance testing.
//!
//! The prolongation coefficients follow the standard recursion
//! `eta^i_{alpha+e_a} = D_{x_a} eta^i_alpha - (D_{x_a} xi^b) u^i_{alpha+e_b}`;
//! the recursion is normative here and the first-order closed formula is
//! checked against it in tests. Coefficients are computed lazily per
//! multi-index and memoized; the fill is idempotent, so concurrent readers
//! at worst recompute an entry.

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::jet::{Coordinate, JetSpace, MultiIndex};
use crate::sample::{for_sampled_points, rng, ChaCha8Rng, DomainSampler};
use crate::Scalar;
use std::collections::{BTreeSet, HashMap};
use std::sync::RwLock;

/// Numeric threshold below which a sampled coefficient counts as zero.
const ZERO_TOL: f64 = 1e-12;
/// Sample count for the all-coefficients-zero check.
const ZERO_CHECK_POINTS: usize = 10;

/// A vector field `xi^a(x,u) d/dx_a + eta^i(x,u) d/du^i` on the base
/// space. Coefficients may involve free parameter symbols (sampled like
/// any other symbol) but no jet coordinates of positive order.
#[derive(Debug, Clone)]
pub struct VectorField {
    js: JetSpace,
    xi: Vec<Expr>,
    eta: Vec<Expr>,
}

impl VectorField {
    pub fn new(js: JetSpace, xi: Vec<Expr>, eta: Vec<Expr>) -> Result<Self> {
        if xi.len() != js.n() {
            return Err(Error::WrongArity {
                what: "xi coefficients",
                expected: js.n(),
                got: xi.len(),
            });
        }
        if eta.len() != js.m() {
            return Err(Error::WrongArity {
                what: "eta coefficients",
                expected: js.m(),
                got: eta.len(),
            });
        }
        for coeff in xi.iter().chain(eta.iter()) {
            if js.jet_order(coeff) > 0 {
                return Err(Error::OrderExceeded { needed: 1, max: 0 });
            }
        }
        let field = VectorField { js, xi, eta };
        field.check_not_zero()?;
        Ok(field)
    }

    /// Rejects the identically-zero field, sampling all coefficients at a
    /// few points of the default domain.
    fn check_not_zero(&self) -> Result<()> {
        let mut symbols = BTreeSet::new();
        for coeff in self.coefficients() {
            symbols.extend(coeff.free_symbols());
        }
        let sampler = DomainSampler::new();
        let mut r = rng(0x5eed);
        let witness = for_sampled_points::<Scalar, ()>(
            &sampler,
            &symbols,
            ZERO_CHECK_POINTS,
            &mut r,
            |bindings| {
                for coeff in self.coefficients() {
                    if coeff.eval(bindings)?.abs() > ZERO_TOL {
                        return Ok(Some(()));
                    }
                }
                Ok(None)
            },
        )?;
        if witness.is_none() {
            return Err(Error::ZeroField);
        }
        Ok(())
    }

    pub fn js(&self) -> &JetSpace {
        &self.js
    }

    pub fn xi(&self) -> &[Expr] {
        &self.xi
    }

    pub fn eta(&self) -> &[Expr] {
        &self.eta
    }

    pub fn coefficients(&self) -> impl Iterator<Item = &Expr> {
        self.xi.iter().chain(self.eta.iter())
    }

    /// Applies the unprolonged field as a derivation on base functions:
    /// `Q e = xi^a e_{x_a} + eta^i e_{u^i}`.
    pub fn apply_base(&self, e: &Expr) -> Expr {
        let mut terms = Vec::new();
        for (a, xi) in self.xi.iter().enumerate() {
            let partial = e.diff(self.js.indep_name(a));
            if !partial.is_zero() {
                terms.push(xi.clone() * partial);
            }
        }
        for (i, eta) in self.eta.iter().enumerate() {
            let partial = e.diff(self.js.dep_name(i));
            if !partial.is_zero() {
                terms.push(eta.clone() * partial);
            }
        }
        Expr::sum(terms)
    }
}

/// The r-th prolongation of a vector field.
#[derive(Debug)]
pub struct ProlongedField {
    field: VectorField,
    order: usize,
    memo: RwLock<HashMap<(usize, MultiIndex), Expr>>,
}

/// Prolongs the field to the given order. The jet space is widened as
/// needed so the recursion can form coordinates up to that order.
pub fn prolong(field: &VectorField, order: usize) -> ProlongedField {
    let mut field = field.clone();
    field.js = field.js.widened(order.max(1));
    ProlongedField {
        field,
        order,
        memo: RwLock::new(HashMap::new()),
    }
}

impl ProlongedField {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn js(&self) -> &JetSpace {
        &self.field.js
    }

    /// The coefficient of `d/du^i_alpha`; `|alpha| = 0` gives `eta^i`.
    pub fn coefficient(&self, i: usize, alpha: &MultiIndex) -> Result<Expr> {
        if alpha.order() == 0 {
            return Ok(self.field.eta[i].clone());
        }
        if alpha.order() > self.order {
            return Err(Error::OrderExceeded {
                needed: alpha.order(),
                max: self.order,
            });
        }
        let key = (i, alpha.clone());
        if let Some(hit) = self.memo.read().expect("memo").get(&key) {
            return Ok(hit.clone());
        }
        // peel the last axis with a positive entry; any path gives the
        // same coefficient, this one is the deterministic choice
        let axis = (0..alpha.len())
            .rev()
            .find(|a| alpha.get(*a) > 0)
            .expect("positive order");
        let lower = alpha.lower(axis).expect("positive entry");
        let previous = self.coefficient(i, &lower)?;
        let js = self.js();
        let mut terms = vec![js.total_derivative(&previous, axis)?];
        for (b, xi) in self.field.xi.iter().enumerate() {
            let dxi = js.total_derivative(xi, axis)?;
            if dxi.is_zero() {
                continue;
            }
            let coordinate = js.jet_symbol(i, &lower.bump(b));
            terms.push(Expr::neg(dxi * coordinate));
        }
        let coefficient = Expr::sum(terms);
        self.memo
            .write()
            .expect("memo")
            .entry(key)
            .or_insert_with(|| coefficient.clone());
        Ok(coefficient)
    }

    /// All coefficients up to the prolongation order, in coordinate order.
    pub fn coefficients(&self) -> Result<Vec<(usize, MultiIndex, Expr)>> {
        let mut out = Vec::new();
        for order in 1..=self.order {
            let mut level: Vec<MultiIndex> = crate::jet::multi_indices(self.js().n(), order)
                .into_iter()
                .filter(|a| a.order() == order)
                .collect();
            level.sort();
            for i in 0..self.field.js.m() {
                for alpha in &level {
                    out.push((i, alpha.clone(), self.coefficient(i, alpha)?));
                }
            }
        }
        Ok(out)
    }

    /// Applies the prolonged field as a derivation:
    /// `Q^{(r)} e = xi^a e_{x_a} + eta^i_alpha e_{u^i_alpha}`.
    pub fn apply(&self, e: &Expr) -> Result<Expr> {
        let js = self.js();
        let order = js.jet_order(e);
        if order > self.order {
            return Err(Error::OrderExceeded {
                needed: order,
                max: self.order,
            });
        }
        let mut terms = vec![self.field.apply_base(e)];
        for name in e.free_symbols() {
            if let Some(Coordinate::Jet(i, alpha)) = js.classify(&name) {
                if alpha.order() == 0 {
                    continue; // handled by apply_base
                }
                let partial = e.diff(&name);
                if partial.is_zero() {
                    continue;
                }
                terms.push(self.coefficient(i, &alpha)? * partial);
            }
        }
        Ok(Expr::sum(terms))
    }

    /// Numeric invariance test. The residual `Q^{(r)} e` is compared at
    /// each sampled point against `tol` times `1 +` the sum of coefficient
    /// magnitudes at that point, which keeps the test meaningful for
    /// fields with large exponential factors.
    pub fn is_invariant(
        &self,
        e: &Expr,
        sampler: &DomainSampler,
        points: usize,
        tol: Scalar,
        rng: &mut ChaCha8Rng,
    ) -> Result<Verdict> {
        let applied = self.apply(e)?;
        let js = self.js();
        let mut scale_terms: Vec<Expr> = self.field.coefficients().cloned().collect();
        for name in e.free_symbols() {
            if let Some(Coordinate::Jet(i, alpha)) = js.classify(&name) {
                if alpha.order() > 0 {
                    scale_terms.push(self.coefficient(i, &alpha)?);
                }
            }
        }
        let mut symbols = e.free_symbols();
        symbols.extend(applied.free_symbols());
        for term in &scale_terms {
            symbols.extend(term.free_symbols());
        }
        let witness = for_sampled_points::<Scalar, (Bindings<Scalar>, Scalar)>(
            sampler,
            &symbols,
            points,
            rng,
            |bindings| {
                let residual = applied.eval(bindings)?;
                let mut scale = 1.0;
                for term in &scale_terms {
                    scale += term.eval(bindings)?.abs();
                }
                if residual.abs() <= tol * scale {
                    Ok(None)
                } else {
                    Ok(Some((bindings.clone(), residual)))
                }
            },
        )?;
        Ok(match witness {
            None => Verdict::Invariant,
            Some((witness, value)) => Verdict::NotInvariant { witness, value },
        })
    }
}

/// Outcome of a numeric invariance test.
#[derive(Debug, Clone)]
pub enum Verdict {
    Invariant,
    NotInvariant {
        witness: Bindings<Scalar>,
        value: Scalar,
    },
}

impl Verdict {
    pub fn is_invariant(&self) -> bool {
        matches!(self, Verdict::Invariant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::sample::equivalent_numeric;

    fn rotation() -> VectorField {
        let js = JetSpace::new(1, 1, 3);
        VectorField::new(
            js.clone(),
            vec![js.parse("u").unwrap()],
            vec![js.parse("-x").unwrap()],
        )
        .unwrap()
    }

    fn example2_field() -> VectorField {
        let js = JetSpace::new(1, 1, 3);
        VectorField::new(
            js.clone(),
            vec![js.parse("exp(-x-u)").unwrap()],
            vec![js.parse("u*exp(-x-u)").unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn zero_field_is_rejected() {
        let js = JetSpace::new(1, 1, 2);
        assert!(matches!(
            VectorField::new(js, vec![Expr::zero()], vec![Expr::zero()]),
            Err(Error::ZeroField)
        ));
    }

    #[test]
    fn jet_coordinates_are_rejected_in_coefficients() {
        let js = JetSpace::new(1, 1, 2);
        assert!(VectorField::new(
            js.clone(),
            vec![js.parse("u1[1]").unwrap()],
            vec![Expr::zero()]
        )
        .is_err());
    }

    #[test]
    fn translation_prolongs_trivially() {
        let js = JetSpace::new(1, 1, 4);
        let q = VectorField::new(js, vec![Expr::one()], vec![Expr::zero()]).unwrap();
        let qr = prolong(&q, 3);
        for order in 1..=3 {
            let alpha = MultiIndex::new(vec![order]);
            assert!(qr.coefficient(0, &alpha).unwrap().is_zero());
        }
    }

    #[test]
    fn rotation_first_prolongation_coefficient() {
        // recursion oracle: D_x(-x) - D_x(u) u_x = -1 - u_x^2
        let qr = prolong(&rotation(), 1);
        let c = qr.coefficient(0, &MultiIndex::new(vec![1])).unwrap();
        assert_eq!(c, parse("-1 - u1[1]^2").unwrap());
    }

    /// First-order closed formula
    /// `eta_x + eta_u u_x - xi_x u_x - xi_u u_x^2`.
    fn closed_first_order(field: &VectorField) -> Expr {
        let xi = &field.xi()[0];
        let eta = &field.eta()[0];
        let ux = parse("u1[1]").unwrap();
        eta.diff("x") + eta.diff("u") * ux.clone()
            - xi.diff("x") * ux.clone()
            - xi.diff("u") * ux.clone() * ux
    }

    #[test]
    fn recursion_matches_closed_formula() {
        let sampler = DomainSampler::new();
        let mut r = rng(11);
        for field in [rotation(), example2_field()] {
            let qr = prolong(&field, 1);
            let recursive = qr.coefficient(0, &MultiIndex::new(vec![1])).unwrap();
            let closed = closed_first_order(&field);
            assert!(
                equivalent_numeric::<f64>(&recursive, &closed, &sampler, 200, 1e-9, &mut r)
                    .unwrap()
            );
        }
    }

    #[test]
    fn example2_coefficient_shape() {
        // (u_x^2 + (2-u) u_x - u) exp(-x-u), checked numerically
        let qr = prolong(&example2_field(), 1);
        let c = qr.coefficient(0, &MultiIndex::new(vec![1])).unwrap();
        let target = parse("(u1[1]^2 + (2-u)*u1[1] - u)*exp(-x-u)").unwrap();
        let sampler = DomainSampler::new();
        let mut r = rng(12);
        assert!(equivalent_numeric::<f64>(&c, &target, &sampler, 200, 1e-9, &mut r).unwrap());
    }

    #[test]
    fn apply_examples() {
        let js = JetSpace::new(1, 1, 2);
        let shift = VectorField::new(js, vec![Expr::one()], vec![Expr::zero()]).unwrap();
        let qr = prolong(&shift, 1);
        assert!(qr.apply(&parse("u1[1]").unwrap()).unwrap().is_zero());

        // the rotation annihilates its invariant structurally
        let q0 = prolong(&rotation(), 0);
        assert!(q0
            .apply(&parse("sqrt(x^2+u^2)").unwrap())
            .unwrap()
            .is_zero());

        // QJ = 1 numerically
        let qj = q0
            .apply(&parse("arcsin(x/sqrt(x^2+u^2))").unwrap())
            .unwrap();
        let sampler = DomainSampler::new();
        let mut r = rng(13);
        assert!(
            equivalent_numeric::<f64>(&qj, &Expr::one(), &sampler, 200, 1e-9, &mut r).unwrap()
        );
    }

    #[test]
    fn apply_rejects_overflowing_order() {
        let q0 = prolong(&rotation(), 0);
        assert!(matches!(
            q0.apply(&parse("u1[1]").unwrap()),
            Err(Error::OrderExceeded { needed: 1, max: 0 })
        ));
    }

    #[test]
    fn apply_is_a_derivation() {
        let qr = prolong(&example2_field(), 1);
        let e1 = parse("u1[1]^2 + x").unwrap();
        let e2 = parse("exp(u)*u1[1]").unwrap();
        let lhs = qr.apply(&(e1.clone() * e2.clone())).unwrap();
        let rhs = e1.clone() * qr.apply(&e2).unwrap() + e2 * qr.apply(&e1).unwrap();
        let sampler = DomainSampler::new();
        let mut r = rng(14);
        assert!(equivalent_numeric::<f64>(&lhs, &rhs, &sampler, 100, 1e-9, &mut r).unwrap());
    }

    #[test]
    fn apply_preserves_jet_order_bound() {
        let qr = prolong(&rotation(), 2);
        for text in ["u1[1]", "u1[2]*u1[1]", "sqrt(x^2+u^2)"] {
            let e = parse(text).unwrap();
            let applied = qr.apply(&e).unwrap();
            assert!(qr.js().jet_order(&applied) <= qr.js().jet_order(&e));
        }
    }

    #[test]
    fn invariance_verdicts() {
        let q0 = prolong(&rotation(), 0);
        let sampler = DomainSampler::new();
        let mut r = rng(15);
        assert!(q0
            .is_invariant(&parse("sqrt(x^2+u^2)").unwrap(), &sampler, 100, 1e-8, &mut r)
            .unwrap()
            .is_invariant());
        match q0
            .is_invariant(&parse("x").unwrap(), &sampler, 100, 1e-8, &mut r)
            .unwrap()
        {
            Verdict::NotInvariant { witness, value } => {
                // Qx = u: the residual at the witness equals the u binding
                let u = witness.get("u").unwrap();
                assert!((value - u).abs() < 1e-12);
            }
            Verdict::Invariant => panic!("x must not be invariant under rotation"),
        }
    }

    #[test]
    fn example2_first_order_invariant() {
        // (u_x - u) e^{-u} / (u + u u_x - u_x) under the first prolongation;
        // u is kept above 1 so the denominator stays away from zero
        let field = example2_field();
        let qr = prolong(&field, 1);
        let inv = parse("(u1[1]-u)*exp(-u)/(u + u*u1[1] - u1[1])").unwrap();
        let sampler = DomainSampler::new().with("u", 1.0, 1.5);
        let mut r = rng(16);
        assert!(qr
            .is_invariant(&inv, &sampler, 200, 1e-8, &mut r)
            .unwrap()
            .is_invariant());
    }
}
