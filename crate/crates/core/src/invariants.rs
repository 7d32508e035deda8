//! Universal differential invariants.
//!
//! From a universal invariant `(I^1..I^{m+n-1}; J)` of a field `Q` this
//! module builds the invariant-differentiation operators `D_{y_c}` as
//! total-derivative combinations with Jacobian-quotient weights, and from
//! them complete sets of differential invariants of any order, the
//! exactly-first-order invariants, and the classical `n = m = 1` chain.
//! Every constructor validates its inputs numerically on seeded domains.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{multi_indices, JetSpace, MultiIndex};
use crate::linalg;
use crate::prolong::{prolong, VectorField, Verdict};
use crate::quadrature::LevelSetParametrization;
use crate::sample::{equivalent_numeric, for_sampled_points, max_deviation, CheckOpts};
use crate::Scalar;
use std::collections::BTreeMap;

/// Fraction of sample points that must show full Jacobian rank.
pub const INDEPENDENCE_FRACTION: f64 = 0.95;
/// Sample count for rank checks.
pub const INDEPENDENCE_POINTS: usize = 100;
/// Sample count for the frame-degeneracy check.
const FRAME_POINTS: usize = 20;
/// A frame determinant below this at every sampled point is degenerate.
const FRAME_TOL: f64 = 1e-10;

/// A complete set of functionally independent invariants `I^q` together
/// with a companion `J` solving `QJ = 1`, validated numerically on
/// construction: each `I^q` is annihilated by `Q`, `QJ = 1` holds, and
/// the gradients of `(I, J)` have full rank at 95% of sampled points.
#[derive(Debug, Clone)]
pub struct UniversalInvariant {
    field: VectorField,
    invariants: Vec<Expr>,
    companion: Expr,
    level_set: Option<LevelSetParametrization>,
}

impl UniversalInvariant {
    pub fn new(
        field: VectorField,
        invariants: Vec<Expr>,
        companion: Expr,
        opts: &CheckOpts,
    ) -> Result<Self> {
        let js = field.js().clone();
        let expected = js.m() + js.n() - 1;
        if invariants.len() != expected {
            return Err(Error::WrongArity {
                what: "universal invariant components",
                expected,
                got: invariants.len(),
            });
        }
        for e in invariants.iter().chain(std::iter::once(&companion)) {
            if js.jet_order(e) > 0 {
                return Err(Error::OrderExceeded { needed: 1, max: 0 });
            }
        }
        let mut r = opts.rng();
        let q0 = prolong(&field, 0);
        for (q, inv) in invariants.iter().enumerate() {
            match q0.is_invariant(inv, &opts.sampler, opts.samples, opts.tol, &mut r)? {
                Verdict::Invariant => {}
                Verdict::NotInvariant { value, witness } => {
                    return Err(Error::NotInvariant {
                        what: format!("I^{}", q + 1),
                        residual: value,
                        witness: witness.to_string(),
                    })
                }
            }
        }
        let qj = field.apply_base(&companion);
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
        // functional independence of (I^1..I^{m+n-1}, J) on the base space
        let mut functions = invariants.clone();
        functions.push(companion.clone());
        let coordinates: Vec<String> = (0..js.n())
            .map(|a| js.indep_name(a).to_string())
            .chain((0..js.m()).map(|i| js.dep_name(i).to_string()))
            .collect();
        let fraction = linalg::full_rank_fraction(
            &functions,
            &coordinates,
            &opts.sampler,
            INDEPENDENCE_POINTS,
            &mut r,
        )?;
        if fraction < INDEPENDENCE_FRACTION {
            return Err(Error::DependentFunctions {
                ok_fraction: fraction,
            });
        }
        Ok(UniversalInvariant {
            field,
            invariants,
            companion,
            level_set: None,
        })
    }

    pub fn with_level_set(mut self, p: LevelSetParametrization) -> Self {
        self.level_set = Some(p);
        self
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn js(&self) -> &JetSpace {
        self.field.js()
    }

    pub fn invariants(&self) -> &[Expr] {
        &self.invariants
    }

    pub fn companion(&self) -> &Expr {
        &self.companion
    }

    pub fn level_set(&self) -> Option<&LevelSetParametrization> {
        self.level_set.as_ref()
    }
}

/// One operator of invariant differentiation `D_{y_c}`, represented by
/// its total-derivative weights: `D_{y_c} = sum_b weights[b] D_{x_b}`.
/// The weights are quotients of total-derivative Jacobians; all share the
/// frame determinant as denominator.
#[derive(Debug, Clone)]
pub struct InvariantDerivation {
    axis: usize,
    weights: Vec<Expr>,
}

impl InvariantDerivation {
    /// Index of the rectified coordinate `y_{axis+1}` this realizes.
    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn weights(&self) -> &[Expr] {
        &self.weights
    }

    pub fn apply(&self, e: &Expr, js: &JetSpace) -> Result<Expr> {
        let mut terms = Vec::with_capacity(self.weights.len());
        for (b, weight) in self.weights.iter().enumerate() {
            if weight.is_zero() {
                continue;
            }
            terms.push(weight.clone() * js.total_derivative(e, b)?);
        }
        Ok(Expr::sum(terms))
    }
}

/// The `n` invariant-differentiation operators of a universal invariant.
///
/// With the frame `Y = (I^1, .., I^{n-1}, J)` and its total-derivative
/// Jacobian `Delta = D(Y)/D(x)`, the weight of `D_{x_b}` in `D_{y_c}` is
/// the signed `(c, b)` minor of the frame divided by `Delta`; for `n = 1`
/// this degenerates to `(1/D_x J) D_x`.
pub fn invariant_derivations(
    ui: &UniversalInvariant,
    opts: &CheckOpts,
) -> Result<Vec<InvariantDerivation>> {
    let js = ui.js().widened(1);
    let n = js.n();
    let mut frame: Vec<Expr> = ui.invariants()[..n - 1].to_vec();
    frame.push(ui.companion().clone());
    let axes: Vec<usize> = (0..n).collect();
    let delta = js.total_jacobian(&frame, &axes)?;
    // degeneracy check: Delta must not vanish across the sampled domain
    let symbols = delta.free_symbols();
    let mut r = opts.rng();
    let nonzero = for_sampled_points::<Scalar, ()>(
        &opts.sampler,
        &symbols,
        FRAME_POINTS,
        &mut r,
        |bindings| {
            if delta.eval(bindings)?.abs() > FRAME_TOL {
                Ok(Some(()))
            } else {
                Ok(None)
            }
        },
    )?;
    if nonzero.is_none() {
        return Err(Error::DegenerateFrame(
            "frame Jacobian vanishes on the sampled domain".to_string(),
        ));
    }
    let delta_inv = delta.inv();
    let mut out = Vec::with_capacity(n);
    for c in 0..n {
        let mut weights = Vec::with_capacity(n);
        let sub_frame: Vec<Expr> = frame
            .iter()
            .enumerate()
            .filter(|(d, _)| *d != c)
            .map(|(_, e)| e.clone())
            .collect();
        for b in 0..n {
            let sub_axes: Vec<usize> = axes.iter().copied().filter(|a| *a != b).collect();
            let minor = if n == 1 {
                Expr::one()
            } else {
                js.total_jacobian(&sub_frame, &sub_axes)?
            };
            let signed = if (c + b) % 2 == 0 {
                minor
            } else {
                Expr::neg(minor)
            };
            weights.push(signed * delta_inv.clone());
        }
        out.push(InvariantDerivation { axis: c, weights });
    }
    Ok(out)
}

/// The complete set of functionally independent differential invariants
/// of order `<= r`: the invariants `I^c`, `c < n`, followed by all
/// `D_{y_1}^{a_1} .. D_{y_n}^{a_n} I^{i+n-1}` with `|a| <= r`, ordered by
/// (order, dependent index, lexicographic multi-index). The output length
/// is `(n-1) + m * C(n+r, r)`.
pub fn universal_differential_invariant(
    ui: &UniversalInvariant,
    r: usize,
    opts: &CheckOpts,
) -> Result<Vec<Expr>> {
    let js = ui.js().widened(r.max(1));
    let n = js.n();
    let m = js.m();
    let derivations = invariant_derivations(ui, opts)?;
    let mut memo: BTreeMap<(usize, MultiIndex), Expr> = BTreeMap::new();
    let mut out: Vec<Expr> = ui.invariants()[..n - 1].to_vec();
    for order in 0..=r {
        let mut level: Vec<MultiIndex> = multi_indices(n, order)
            .into_iter()
            .filter(|a| a.order() == order)
            .collect();
        level.sort();
        for i in 0..m {
            for alpha in &level {
                let inv = derived_invariant(ui, &js, &derivations, &mut memo, i, alpha)?;
                out.push(inv);
            }
        }
    }
    Ok(out)
}

fn derived_invariant(
    ui: &UniversalInvariant,
    js: &JetSpace,
    derivations: &[InvariantDerivation],
    memo: &mut BTreeMap<(usize, MultiIndex), Expr>,
    i: usize,
    alpha: &MultiIndex,
) -> Result<Expr> {
    if alpha.order() == 0 {
        return Ok(ui.invariants()[ui.js().n() - 1 + i].clone());
    }
    if let Some(hit) = memo.get(&(i, alpha.clone())) {
        return Ok(hit.clone());
    }
    // peel the first axis with a positive entry: the composition
    // D_{y_1}^{a_1} .. D_{y_n}^{a_n} applies higher axes first
    let axis = (0..alpha.len())
        .find(|a| alpha.get(*a) > 0)
        .expect("positive order");
    let lower = alpha.lower(axis).expect("positive entry");
    let inner = derived_invariant(ui, js, derivations, memo, i, &lower)?;
    let value = derivations[axis].apply(&inner, js)?;
    memo.insert((i, alpha.clone()), value.clone());
    Ok(value)
}

/// The m-by-n matrix of exactly-first-order invariants
/// `entry[i][c] = D_{y_c} I^{i+n-1}`.
pub fn first_order_invariants(
    ui: &UniversalInvariant,
    opts: &CheckOpts,
) -> Result<Vec<Vec<Expr>>> {
    let js = ui.js().widened(1);
    let n = js.n();
    let derivations = invariant_derivations(ui, opts)?;
    let mut rows = Vec::with_capacity(js.m());
    for i in 0..js.m() {
        let base = &ui.invariants()[n - 1 + i];
        let mut row = Vec::with_capacity(n);
        for derivation in &derivations {
            row.push(derivation.apply(base, &js)?);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// For `n = 1`: the exactly-first-order invariants
/// `I^j_(1) = D_x I^j / D_x J`, built literally as that quotient.
pub fn first_order_n1(ui: &UniversalInvariant) -> Result<Vec<Expr>> {
    let js = ui.js().widened(1);
    if js.n() != 1 {
        return Err(Error::WrongArity {
            what: "first_order_n1 requires n = 1",
            expected: 1,
            got: js.n(),
        });
    }
    let dj = js.total_derivative(ui.companion(), 0)?;
    let dj_inv = dj.inv();
    ui.invariants()
        .iter()
        .map(|inv| Ok(js.total_derivative(inv, 0)? * dj_inv.clone()))
        .collect()
}

/// The classical chain for `n = m = 1`: from a zero-order invariant and
/// an exactly-first-order one, `I, I_(1), ((1/D_x I) D_x)^s I_(1)` for
/// `s = 1..r-1`; the s-th entry has jet order `s + 1`.
pub fn lie_chain(
    invariant: &Expr,
    first_order: &Expr,
    field: &VectorField,
    r: usize,
    opts: &CheckOpts,
) -> Result<Vec<Expr>> {
    let js = field.js().widened(r.max(2));
    if js.n() != 1 || js.m() != 1 {
        return Err(Error::WrongArity {
            what: "lie_chain requires n = m = 1",
            expected: 1,
            got: js.n().max(js.m()),
        });
    }
    if js.jet_order(invariant) != 0 {
        return Err(Error::OrderExceeded { needed: 0, max: 0 });
    }
    if js.jet_order(first_order) != 1 {
        return Err(Error::OrderExceeded {
            needed: 1,
            max: js.jet_order(first_order),
        });
    }
    let di = js.total_derivative(invariant, 0)?;
    let symbols = di.free_symbols();
    let mut rng = opts.rng();
    let nonzero = for_sampled_points::<Scalar, ()>(
        &opts.sampler,
        &symbols,
        FRAME_POINTS,
        &mut rng,
        |bindings| {
            if di.eval(bindings)?.abs() > FRAME_TOL {
                Ok(Some(()))
            } else {
                Ok(None)
            }
        },
    )?;
    if nonzero.is_none() {
        return Err(Error::DegenerateFrame(
            "D_x I vanishes on the sampled domain".to_string(),
        ));
    }
    let di_inv = di.inv();
    let mut out = vec![invariant.clone(), first_order.clone()];
    let mut current = first_order.clone();
    for _ in 1..r {
        current = js.total_derivative(&current, 0)? * di_inv.clone();
        out.push(current.clone());
    }
    Ok(out)
}

/// Polynomial total degree in jet coordinates of positive order, or None
/// when the expression is not polynomial in them.
pub fn jet_degree(e: &Expr, js: &JetSpace) -> Option<i64> {
    use crate::expr::Node;
    match e.node() {
        Node::Const(_) => Some(0),
        Node::Symbol(name) => match js.classify(name) {
            Some(crate::jet::Coordinate::Jet(_, alpha)) if alpha.order() > 0 => Some(1),
            _ => Some(0),
        },
        Node::Sum(ops) => ops.iter().map(|op| jet_degree(op, js)).try_fold(0, |acc, d| {
            d.map(|d| acc.max(d))
        }),
        Node::Product(ops) => ops
            .iter()
            .map(|op| jet_degree(op, js))
            .try_fold(0, |acc, d| d.map(|d| acc + d)),
        Node::Neg(a) => jet_degree(a, js),
        Node::Power(b, exp) => {
            let db = jet_degree(b, js)?;
            match exp.as_integer() {
                Some(k) if k >= 0 => Some(db * k),
                _ => {
                    if db == 0 && jet_degree(exp, js)? == 0 {
                        Some(0)
                    } else {
                        None
                    }
                }
            }
        }
        Node::Func(_, a) => {
            if jet_degree(a, js)? == 0 {
                Some(0)
            } else {
                None
            }
        }
    }
}

/// Structural fractional-linearity check: as a quotient, both the
/// numerator and the denominator have total degree at most one in the
/// first-order jet coordinates. In the expanded normal form every summand
/// is a product of a polynomial part and negative powers (the shared
/// denominator), so the check runs per summand.
pub fn is_fractional_linear(e: &Expr, js: &JetSpace) -> bool {
    use crate::expr::Node;
    let terms: Vec<&Expr> = match e.node() {
        Node::Sum(ops) => ops.iter().collect(),
        _ => vec![e],
    };
    for term in terms {
        let mut body = term;
        if let Node::Neg(inner) = body.node() {
            body = inner;
        }
        let factors: Vec<&Expr> = match body.node() {
            Node::Product(ops) => ops.iter().collect(),
            _ => vec![body],
        };
        let mut numerator_degree = 0i64;
        let mut denominator_degree = 0i64;
        for factor in factors {
            let negative_power = match factor.node() {
                Node::Power(base, exp) => exp
                    .as_integer()
                    .filter(|k| *k < 0)
                    .map(|k| (base, -k)),
                _ => None,
            };
            match negative_power {
                Some((base, multiplicity)) => match jet_degree(base, js) {
                    Some(d) => denominator_degree += d * multiplicity,
                    None => return false,
                },
                None => match jet_degree(factor, js) {
                    Some(d) => numerator_degree += d,
                    None => return false,
                },
            }
        }
        if numerator_degree > 1 || denominator_degree > 1 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::sample::{rng, DomainSampler};

    fn rotation_ui() -> UniversalInvariant {
        let js = JetSpace::new(1, 1, 3);
        let field = VectorField::new(
            js.clone(),
            vec![js.parse("u").unwrap()],
            vec![js.parse("-x").unwrap()],
        )
        .unwrap();
        UniversalInvariant::new(
            field,
            vec![parse("sqrt(x^2+u^2)").unwrap()],
            parse("arcsin(x/sqrt(x^2+u^2))").unwrap(),
            &CheckOpts::default(),
        )
        .unwrap()
    }

    fn rectified_ui() -> UniversalInvariant {
        let js = JetSpace::new(1, 1, 3);
        let field = VectorField::new(js.clone(), vec![Expr::one()], vec![Expr::zero()]).unwrap();
        UniversalInvariant::new(
            field,
            vec![parse("u").unwrap()],
            parse("x").unwrap(),
            &CheckOpts::default(),
        )
        .unwrap()
    }

    #[test]
    fn validation_rejects_non_invariants() {
        let js = JetSpace::new(1, 1, 2);
        let field = VectorField::new(
            js.clone(),
            vec![js.parse("u").unwrap()],
            vec![js.parse("-x").unwrap()],
        )
        .unwrap();
        let result = UniversalInvariant::new(
            field,
            vec![parse("x").unwrap()],
            parse("arcsin(x/sqrt(x^2+u^2))").unwrap(),
            &CheckOpts::default(),
        );
        assert!(matches!(result, Err(Error::NotInvariant { .. })));
    }

    #[test]
    fn validation_rejects_bad_companion() {
        let js = JetSpace::new(1, 1, 2);
        let field = VectorField::new(
            js.clone(),
            vec![js.parse("u").unwrap()],
            vec![js.parse("-x").unwrap()],
        )
        .unwrap();
        let result = UniversalInvariant::new(
            field,
            vec![parse("sqrt(x^2+u^2)").unwrap()],
            parse("x + u").unwrap(),
            &CheckOpts::default(),
        );
        assert!(matches!(result, Err(Error::NotCompanion { .. })));
    }

    #[test]
    fn rectified_derivation_is_total_derivative() {
        let ui = rectified_ui();
        let ds = invariant_derivations(&ui, &CheckOpts::default()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].weights()[0], Expr::one());
    }

    #[test]
    fn rotation_derivation_weight() {
        // D_y = (1/D_x J) D_x. On the positive quadrant the companion
        // branch with QJ = +1 has J_x = u/(x^2+u^2) (finite differences
        // agree), so D_x J = (u - x u_x)/(x^2+u^2).
        let ui = rotation_ui();
        let ds = invariant_derivations(&ui, &CheckOpts::default()).unwrap();
        let weight = &ds[0].weights()[0];
        let target = parse("(x^2+u^2)/(u - x*u1[1])").unwrap();
        let sampler = DomainSampler::new().with("u1[1]", -1.0, -0.25);
        let mut r = rng(31);
        assert!(
            equivalent_numeric::<f64>(weight, &target, &sampler, 150, 1e-9, &mut r).unwrap()
        );
    }

    #[test]
    fn rectified_universal_invariants() {
        let ui = rectified_ui();
        let out = universal_differential_invariant(&ui, 2, &CheckOpts::default()).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], parse("u").unwrap());
        assert_eq!(out[1], parse("u1[1]").unwrap());
        assert_eq!(out[2], parse("u1[2]").unwrap());
    }

    #[test]
    fn rotation_first_order_matches_reference() {
        let ui = rotation_ui();
        let out = first_order_n1(&ui).unwrap();
        assert_eq!(out.len(), 1);
        // (x + u u_x)/(u - x u_x) * sqrt(x^2+u^2): the orientation is
        // fixed by the companion branch that satisfies QJ = +1 on the
        // sampled quadrant
        let target = parse("(x + u*u1[1])/(u - x*u1[1])*sqrt(x^2+u^2)").unwrap();
        let sampler = DomainSampler::new().with("u1[1]", -1.0, -0.25);
        let mut r = rng(32);
        assert!(
            equivalent_numeric::<f64>(&out[0], &target, &sampler, 200, 1e-9, &mut r).unwrap()
        );
        // matrix route produces the same expression structurally
        let rows = first_order_invariants(&ui, &CheckOpts::default()).unwrap();
        assert_eq!(rows[0][0], out[0]);
    }

    #[test]
    fn rotation_outputs_are_invariant() {
        let ui = rotation_ui();
        let sampler = DomainSampler::new()
            .with("u1[1]", -1.0, -0.25)
            .with("u1[2]", 0.5, 1.5);
        let opts = CheckOpts {
            sampler: sampler.clone(),
            ..CheckOpts::default()
        };
        let out = universal_differential_invariant(&ui, 2, &opts).unwrap();
        assert_eq!(out.len(), 3);
        let qr = prolong(ui.field(), 2);
        let mut r = rng(33);
        for inv in &out {
            assert!(qr
                .is_invariant(inv, &sampler, 200, 1e-8, &mut r)
                .unwrap()
                .is_invariant());
        }
    }

    #[test]
    fn rotation_rank_law() {
        let ui = rotation_ui();
        let sampler = DomainSampler::new()
            .with("u1[1]", -1.0, -0.25)
            .with("u1[2]", 0.5, 1.5);
        let opts = CheckOpts {
            sampler: sampler.clone(),
            ..CheckOpts::default()
        };
        let out = universal_differential_invariant(&ui, 2, &opts).unwrap();
        let coords = ui.js().widened(2).coordinates(2).unwrap();
        let mut r = rng(34);
        let fraction =
            linalg::full_rank_fraction(&out, &coords, &sampler, INDEPENDENCE_POINTS, &mut r)
                .unwrap();
        assert!(fraction >= INDEPENDENCE_FRACTION, "fraction {fraction}");
    }

    #[test]
    fn fractional_linearity_structural() {
        let js = JetSpace::new(1, 1, 2);
        let ui = rotation_ui();
        for inv in first_order_n1(&ui).unwrap() {
            assert!(is_fractional_linear(&inv, &js), "not fractional-linear: {inv}");
        }
        // counterexamples
        assert!(!is_fractional_linear(&parse("u1[1]^2").unwrap(), &js));
        assert!(!is_fractional_linear(&parse("exp(u1[1])").unwrap(), &js));
        assert!(is_fractional_linear(&parse("u1[1]").unwrap(), &js));
    }

    #[test]
    fn lie_chain_rectified() {
        let js = JetSpace::new(1, 1, 4);
        let field = VectorField::new(js.clone(), vec![Expr::one()], vec![Expr::zero()]).unwrap();
        let chain = lie_chain(
            &parse("u").unwrap(),
            &parse("u1[1]").unwrap(),
            &field,
            2,
            &CheckOpts::default(),
        )
        .unwrap();
        assert_eq!(chain.len(), 3);
        assert_eq!(chain[2], parse("u1[2]/u1[1]").unwrap());
    }

    #[test]
    fn lie_chain_entry_is_invariant_under_second_prolongation() {
        let ui = rotation_ui();
        let first = first_order_n1(&ui).unwrap().remove(0);
        let chain = lie_chain(
            &ui.invariants()[0].clone(),
            &first,
            ui.field(),
            2,
            &CheckOpts::default(),
        )
        .unwrap();
        let qr = prolong(ui.field(), 2);
        let sampler = DomainSampler::new()
            .with("u1[1]", -1.0, -0.25)
            .with("u1[2]", 0.5, 1.5);
        let mut r = rng(35);
        assert!(qr
            .is_invariant(&chain[2], &sampler, 200, 1e-8, &mut r)
            .unwrap()
            .is_invariant());
    }

    #[test]
    fn count_law() {
        // output length is (n-1) + m * C(n+r, r)
        let ui = rotation_ui();
        for r in 0..=2 {
            let out =
                universal_differential_invariant(&ui, r, &CheckOpts::default()).unwrap();
            assert_eq!(out.len(), crate::jet::binomial(1 + r, r));
        }
    }
}
