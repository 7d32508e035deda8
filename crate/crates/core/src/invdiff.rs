//! Invariant differentials and the correspondence between universal
//! invariants and vector fields.
//!
//! A differential `dW` is invariant under `Q` exactly when `QW` is
//! constant: zero for the first type (`W` itself invariant), a non-zero
//! constant for the second type. Collections `(I^1..I^{m+n-1}; J)` related
//! by `I -> F(I)`, `J -> J + H(I)` with `|dF/dI| != 0` describe the same
//! field, and the field is recovered from any representative by solving
//! the linear system `QI^q = 0, QJ = 1` for the coefficients.

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::invariants::UniversalInvariant;
use crate::jet::JetSpace;
use crate::linalg;
use crate::prolong::VectorField;
use crate::sample::{
    equivalent_numeric, for_sampled_points, max_deviation, ChaCha8Rng, CheckOpts, DomainSampler,
};
use crate::Scalar;
use std::collections::BTreeMap;

/// Classification tag for `dW`.
#[derive(Debug, Clone, PartialEq)]
pub enum DifferentialType {
    /// `QW = 0`: `W` is invariant.
    FirstType,
    /// `QW = c != 0`.
    SecondType(Scalar),
    /// `QW` varies; the witnesses are the extreme sampled values.
    NotInvariant { low: Scalar, high: Scalar },
}

/// Classification outcome together with the sampled values of `QW`.
#[derive(Debug, Clone)]
pub struct DifferentialClass {
    pub tag: DifferentialType,
    pub evidence: Vec<Scalar>,
}

/// Minimum sample count for the constancy test.
const CONSTANCY_MIN_POINTS: usize = 30;
/// A frame determinant below this at every sampled point is singular.
const SINGULAR_TOL: f64 = 1e-10;

/// Name of the q-th argument symbol of an equivalence transform.
pub fn transform_arg_name(q: usize) -> String {
    format!("I{}", q + 1)
}

/// Classifies the differential of a base-space function by the constancy
/// of `QW` across sampled points: spread at most `tol * (1 + |mean|)`
/// means constant.
pub fn classify_differential(
    field: &VectorField,
    w: &Expr,
    sampler: &DomainSampler,
    samples: usize,
    tol: Scalar,
    rng: &mut ChaCha8Rng,
) -> Result<DifferentialClass> {
    if field.js().jet_order(w) > 0 {
        return Err(Error::OrderExceeded { needed: 1, max: 0 });
    }
    let qw = field.apply_base(w);
    let symbols = qw.free_symbols();
    let points = samples.max(CONSTANCY_MIN_POINTS);
    let mut evidence = Vec::with_capacity(points);
    for_sampled_points::<Scalar, ()>(sampler, &symbols, points, rng, |bindings| {
        evidence.push(qw.eval(bindings)?);
        Ok(None)
    })?;
    let mean = evidence.iter().sum::<Scalar>() / evidence.len() as Scalar;
    let low = evidence.iter().cloned().fold(f64::INFINITY, f64::min);
    let high = evidence.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tag = if high - low <= tol * (1.0 + mean.abs()) {
        if mean.abs() <= tol {
            DifferentialType::FirstType
        } else {
            DifferentialType::SecondType(mean)
        }
    } else {
        DifferentialType::NotInvariant { low, high }
    };
    Ok(DifferentialClass { tag, evidence })
}

/// Applies the equivalence relation `I -> F(I), J -> J + H(I)`.
///
/// `f` and `h` are expressions in the argument symbols `I1..I_{m+n-1}`.
/// The Jacobian of `F` must not vanish identically at the sampled
/// invariant values; the transformed collection is revalidated as a
/// universal invariant.
pub fn equivalence_transform(
    ui: &UniversalInvariant,
    f: &[Expr],
    h: &Expr,
    opts: &CheckOpts,
) -> Result<UniversalInvariant> {
    let k = ui.invariants().len();
    if f.len() != k {
        return Err(Error::WrongArity {
            what: "equivalence transform components",
            expected: k,
            got: f.len(),
        });
    }
    // Jacobian dF/dI evaluated at sampled invariant values
    let jacobian: Vec<Vec<Expr>> = f
        .iter()
        .map(|fp| {
            (0..k)
                .map(|q| fp.diff(&transform_arg_name(q)))
                .collect()
        })
        .collect();
    let det = linalg::determinant(&jacobian)?;
    let mut base_symbols = std::collections::BTreeSet::new();
    for inv in ui.invariants() {
        base_symbols.extend(inv.free_symbols());
    }
    let mut r = opts.rng();
    let nonsingular = for_sampled_points::<Scalar, ()>(
        &opts.sampler,
        &base_symbols,
        20,
        &mut r,
        |bindings| {
            let mut arg_bindings: Bindings<Scalar> = Bindings::new();
            for (q, inv) in ui.invariants().iter().enumerate() {
                arg_bindings.set(transform_arg_name(q), inv.eval(bindings)?);
            }
            if det.eval(&arg_bindings)?.abs() > SINGULAR_TOL {
                Ok(Some(()))
            } else {
                Ok(None)
            }
        },
    )?;
    if nonsingular.is_none() {
        return Err(Error::SingularTransform);
    }
    let substitution: BTreeMap<String, Expr> = ui
        .invariants()
        .iter()
        .enumerate()
        .map(|(q, inv)| (transform_arg_name(q), inv.clone()))
        .collect();
    let new_invariants: Vec<Expr> = f.iter().map(|fp| fp.substitute(&substitution)).collect();
    let new_companion = ui.companion().clone() + h.substitute(&substitution);
    UniversalInvariant::new(ui.field().clone(), new_invariants, new_companion, opts)
}

/// Recovers the vector field from a universal-invariant collection by
/// Cramer's rule on the gradient matrix of `(I^1..I^{m+n-1}, J)`. The
/// returned field satisfies `QI^q = 0`, `QJ = 1`, verified numerically.
pub fn reconstruct_field(
    invariants: &[Expr],
    companion: &Expr,
    js: &JetSpace,
    opts: &CheckOpts,
) -> Result<VectorField> {
    let expected = js.m() + js.n() - 1;
    if invariants.len() != expected {
        return Err(Error::WrongArity {
            what: "universal invariant components",
            expected,
            got: invariants.len(),
        });
    }
    let coordinates: Vec<String> = (0..js.n())
        .map(|a| js.indep_name(a).to_string())
        .chain((0..js.m()).map(|i| js.dep_name(i).to_string()))
        .collect();
    let mut functions: Vec<Expr> = invariants.to_vec();
    functions.push(companion.clone());
    let matrix: Vec<Vec<Expr>> = functions
        .iter()
        .map(|f| coordinates.iter().map(|c| f.diff(c)).collect())
        .collect();
    let det = linalg::determinant(&matrix)?;
    let symbols = det.free_symbols();
    let mut r = opts.rng();
    let nonsingular =
        for_sampled_points::<Scalar, ()>(&opts.sampler, &symbols, 20, &mut r, |bindings| {
            if det.eval(bindings)?.abs() > SINGULAR_TOL {
                Ok(Some(()))
            } else {
                Ok(None)
            }
        })?;
    if nonsingular.is_none() {
        return Err(Error::SingularFrame);
    }
    let mut rhs = vec![Expr::zero(); functions.len()];
    rhs[expected] = Expr::one();
    let solution = linalg::cramer_solve(&matrix, &rhs)?;
    let xi = solution[..js.n()].to_vec();
    let eta = solution[js.n()..].to_vec();
    let field = VectorField::new(js.clone(), xi, eta)?;
    // the defining equations must hold numerically
    for (q, inv) in invariants.iter().enumerate() {
        let qi = field.apply_base(inv);
        if !equivalent_numeric::<Scalar>(
            &qi,
            &Expr::zero(),
            &opts.sampler,
            opts.samples,
            opts.tol,
            &mut r,
        )? {
            let residual =
                max_deviation::<Scalar>(&qi, &Expr::zero(), &opts.sampler, opts.samples, &mut r)?;
            return Err(Error::NotInvariant {
                what: format!("reconstructed QI^{}", q + 1),
                residual,
                witness: String::new(),
            });
        }
    }
    let qj = field.apply_base(companion);
    if !equivalent_numeric::<Scalar>(
        &qj,
        &Expr::one(),
        &opts.sampler,
        opts.samples,
        opts.tol,
        &mut r,
    )? {
        let residual =
            max_deviation::<Scalar>(&qj, &Expr::one(), &opts.sampler, opts.samples, &mut r)?;
        return Err(Error::NotCompanion { residual });
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::sample::rng;

    fn rotation() -> VectorField {
        let js = JetSpace::new(1, 1, 3);
        VectorField::new(
            js.clone(),
            vec![js.parse("u").unwrap()],
            vec![js.parse("-x").unwrap()],
        )
        .unwrap()
    }

    fn rotation_ui() -> UniversalInvariant {
        UniversalInvariant::new(
            rotation(),
            vec![parse("sqrt(x^2+u^2)").unwrap()],
            parse("arcsin(x/sqrt(x^2+u^2))").unwrap(),
            &CheckOpts::default(),
        )
        .unwrap()
    }

    #[test]
    fn classify_rotation_examples() {
        let field = rotation();
        let sampler = DomainSampler::new();
        let mut r = rng(41);
        let class = classify_differential(
            &field,
            &parse("sqrt(x^2+u^2)").unwrap(),
            &sampler,
            50,
            1e-8,
            &mut r,
        )
        .unwrap();
        assert_eq!(class.tag, DifferentialType::FirstType);

        let class = classify_differential(
            &field,
            &parse("arcsin(x/sqrt(x^2+u^2))").unwrap(),
            &sampler,
            50,
            1e-8,
            &mut r,
        )
        .unwrap();
        match class.tag {
            DifferentialType::SecondType(c) => assert!((c - 1.0).abs() < 1e-10),
            other => panic!("expected second type, got {other:?}"),
        }

        let class =
            classify_differential(&field, &parse("x").unwrap(), &sampler, 50, 1e-8, &mut r)
                .unwrap();
        assert!(matches!(class.tag, DifferentialType::NotInvariant { .. }));
    }

    #[test]
    fn second_type_is_stable_under_companion_shifts() {
        // J + H(I) still has QW = 1 for any H
        let field = rotation();
        let sampler = DomainSampler::new();
        let mut r = rng(42);
        for h in ["(x^2+u^2)", "sqrt(x^2+u^2)^3", "ln(x^2+u^2)"] {
            let w = parse(&format!("arcsin(x/sqrt(x^2+u^2)) + {h}")).unwrap();
            let class = classify_differential(&field, &w, &sampler, 50, 1e-8, &mut r).unwrap();
            match class.tag {
                DifferentialType::SecondType(c) => assert!((c - 1.0).abs() < 1e-9),
                other => panic!("expected second type for shift {h}, got {other:?}"),
            }
        }
    }

    #[test]
    fn identity_transform_is_identity() {
        let ui = rotation_ui();
        let transformed = equivalence_transform(
            &ui,
            &[parse("I1").unwrap()],
            &Expr::zero(),
            &CheckOpts::default(),
        )
        .unwrap();
        assert_eq!(transformed.invariants()[0], ui.invariants()[0]);
        assert_eq!(transformed.companion(), ui.companion());
    }

    #[test]
    fn squared_invariant_still_works() {
        let ui = rotation_ui();
        let transformed = equivalence_transform(
            &ui,
            &[parse("I1^2").unwrap()],
            &Expr::zero(),
            &CheckOpts::default(),
        )
        .unwrap();
        assert_eq!(transformed.invariants()[0], parse("x^2+u^2").unwrap());
    }

    #[test]
    fn constant_transform_is_singular() {
        let ui = rotation_ui();
        assert!(matches!(
            equivalence_transform(
                &ui,
                &[parse("2").unwrap()],
                &Expr::zero(),
                &CheckOpts::default()
            ),
            Err(Error::SingularTransform)
        ));
    }

    #[test]
    fn reconstruct_translation() {
        let js = JetSpace::new(1, 1, 2);
        let field = reconstruct_field(
            &[parse("u").unwrap()],
            &parse("x").unwrap(),
            &js,
            &CheckOpts::default(),
        )
        .unwrap();
        assert_eq!(field.xi()[0], Expr::one());
        assert!(field.eta()[0].is_zero());
    }

    #[test]
    fn reconstruct_rotation() {
        let js = JetSpace::new(1, 1, 2);
        let field = reconstruct_field(
            &[parse("sqrt(x^2+u^2)").unwrap()],
            &parse("arcsin(x/sqrt(x^2+u^2))").unwrap(),
            &js,
            &CheckOpts::default(),
        )
        .unwrap();
        let sampler = DomainSampler::new();
        let mut r = rng(43);
        assert!(equivalent_numeric::<f64>(
            &field.xi()[0],
            &parse("u").unwrap(),
            &sampler,
            100,
            1e-8,
            &mut r
        )
        .unwrap());
        assert!(equivalent_numeric::<f64>(
            &field.eta()[0],
            &parse("-x").unwrap(),
            &sampler,
            100,
            1e-8,
            &mut r
        )
        .unwrap());
    }

    #[test]
    fn reconstruct_example2_pair() {
        let js = JetSpace::new(1, 1, 2);
        let field = reconstruct_field(
            &[parse("u*exp(-x)").unwrap()],
            &parse("exp(x+u)/u").unwrap(),
            &js,
            &CheckOpts::default(),
        )
        .unwrap();
        let sampler = DomainSampler::new();
        let mut r = rng(44);
        assert!(equivalent_numeric::<f64>(
            &field.xi()[0],
            &parse("exp(-x-u)").unwrap(),
            &sampler,
            100,
            1e-8,
            &mut r
        )
        .unwrap());
        assert!(equivalent_numeric::<f64>(
            &field.eta()[0],
            &parse("u*exp(-x-u)").unwrap(),
            &sampler,
            100,
            1e-8,
            &mut r
        )
        .unwrap());
    }

    #[test]
    fn reconstruction_is_stable_under_equivalence() {
        let ui = rotation_ui();
        let transformed = equivalence_transform(
            &ui,
            &[parse("I1^2 + I1").unwrap()],
            &parse("1/2*I1").unwrap(),
            &CheckOpts::default(),
        )
        .unwrap();
        let field = reconstruct_field(
            transformed.invariants(),
            transformed.companion(),
            ui.js(),
            &CheckOpts::default(),
        )
        .unwrap();
        let sampler = DomainSampler::new();
        let mut r = rng(45);
        for (reconstructed, original) in field
            .coefficients()
            .zip(ui.field().coefficients())
        {
            assert!(equivalent_numeric::<f64>(
                reconstructed,
                original,
                &sampler,
                100,
                1e-8,
                &mut r
            )
            .unwrap());
        }
    }
}
