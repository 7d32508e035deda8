//! Obtaining the companion function `J` with `QJ = 1` by one quadrature.
//!
//! Given a level-set parametrization of `I(x,u) = C` and an antiderivative
//! of `1/xi^a` (or `1/eta^i`) along it, `j_symbolic` assembles `J(x,u)` by
//! back-substituting `C = I(x,u)` and verifies `QJ = 1` numerically. No
//! symbolic integration is attempted: the antiderivative is an input and
//! is itself verified against the integrand. Without an antiderivative,
//! `j_numeric` realizes `J` as the flow time of the characteristic system
//! between two points of one level set, fixing the additive gauge by
//! `J(base) = 0`.

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::jet::JetSpace;
use crate::ode::{Dopri5, StepOutcome};
use crate::prolong::VectorField;
use crate::sample::{equivalent_numeric, max_deviation, CheckOpts};
use crate::Scalar;
use std::collections::{BTreeMap, BTreeSet};

/// The parameter symbol a level-set parametrization is written in.
pub const PARAM_VARIABLE: &str = "z";

/// Name of the q-th level-set constant (1-based in the name).
pub fn param_name(q: usize) -> String {
    format!("C{}", q + 1)
}

/// `C1..Ck`.
pub fn param_names(count: usize) -> Vec<String> {
    (0..count).map(param_name).collect()
}

/// Which variable the algebraic system `I(x,u) = C` was solved along.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distinguished {
    Independent(usize),
    Dependent(usize),
}

/// Explicit solution of `I(x,u) = C`: the distinguished variable becomes
/// the parameter `z`; every other variable is an expression in `z` and the
/// constants `C1..C_{m+n-1}`.
#[derive(Debug, Clone)]
pub struct LevelSetParametrization {
    distinguished: Distinguished,
    x: Vec<Expr>,
    u: Vec<Expr>,
}

impl LevelSetParametrization {
    /// Solved along the independent variable `x_axis`: `x_others` has one
    /// entry per remaining axis (in axis order), `u` one per dependent.
    pub fn solved_along_x(axis: usize, x_others: Vec<Expr>, u: Vec<Expr>) -> Self {
        let n = x_others.len() + 1;
        assert!(axis < n, "axis out of range");
        let mut x = Vec::with_capacity(n);
        let mut others = x_others.into_iter();
        for b in 0..n {
            if b == axis {
                x.push(Expr::symbol(PARAM_VARIABLE));
            } else {
                x.push(others.next().expect("x_others length"));
            }
        }
        LevelSetParametrization {
            distinguished: Distinguished::Independent(axis),
            x,
            u,
        }
    }

    /// Solved along the dependent variable `u^i`: `x` has one entry per
    /// axis, `u_others` one per remaining dependent (in index order).
    pub fn solved_along_u(i: usize, x: Vec<Expr>, u_others: Vec<Expr>) -> Self {
        let m = u_others.len() + 1;
        assert!(i < m, "dependent index out of range");
        let mut u = Vec::with_capacity(m);
        let mut others = u_others.into_iter();
        for j in 0..m {
            if j == i {
                u.push(Expr::symbol(PARAM_VARIABLE));
            } else {
                u.push(others.next().expect("u_others length"));
            }
        }
        LevelSetParametrization {
            distinguished: Distinguished::Dependent(i),
            x,
            u,
        }
    }

    pub fn distinguished(&self) -> Distinguished {
        self.distinguished
    }

    pub fn x(&self) -> &[Expr] {
        &self.x
    }

    pub fn u(&self) -> &[Expr] {
        &self.u
    }

    /// The substitution `x_b -> X^b, u^j -> U^j` (distinguished -> z).
    pub fn substitution(&self, js: &JetSpace) -> Result<BTreeMap<String, Expr>> {
        if self.x.len() != js.n() {
            return Err(Error::WrongArity {
                what: "level-set x entries",
                expected: js.n(),
                got: self.x.len(),
            });
        }
        if self.u.len() != js.m() {
            return Err(Error::WrongArity {
                what: "level-set u entries",
                expected: js.m(),
                got: self.u.len(),
            });
        }
        let mut map = BTreeMap::new();
        for (b, e) in self.x.iter().enumerate() {
            map.insert(js.indep_name(b).to_string(), e.clone());
        }
        for (j, e) in self.u.iter().enumerate() {
            map.insert(js.dep_name(j).to_string(), e.clone());
        }
        Ok(map)
    }

    /// Substitutes the parametrization into an expression on the base
    /// space, producing an expression in `(z, C1..)`.
    pub fn apply(&self, e: &Expr, js: &JetSpace) -> Result<Expr> {
        Ok(e.substitute(&self.substitution(js)?))
    }

    /// The coefficient of the field along the distinguished variable.
    pub fn distinguished_coefficient<'f>(&self, field: &'f VectorField) -> &'f Expr {
        match self.distinguished {
            Distinguished::Independent(a) => &field.xi()[a],
            Distinguished::Dependent(i) => &field.eta()[i],
        }
    }

    /// The base-space symbol the parameter `z` stands for.
    pub fn distinguished_symbol(&self, js: &JetSpace) -> Expr {
        match self.distinguished {
            Distinguished::Independent(a) => js.indep_symbol(a),
            Distinguished::Dependent(i) => js.dep_symbol(i),
        }
    }
}

/// Per-invariant outcome of `validate_parametrization`.
#[derive(Debug, Clone)]
pub struct ParametrizationReport {
    /// `(passes, max |I^q ∘ p - C_q|)` per invariant.
    pub entries: Vec<(bool, f64)>,
}

impl ParametrizationReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|(ok, _)| *ok)
    }

    pub fn failing(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, (ok, _))| !*ok)
            .map(|(q, _)| q)
            .collect()
    }
}

/// Checks `I^q ∘ p == C_q` for every invariant by sampling `(z, C)`.
pub fn validate_parametrization(
    invariants: &[Expr],
    p: &LevelSetParametrization,
    js: &JetSpace,
    opts: &CheckOpts,
) -> Result<ParametrizationReport> {
    let mut entries = Vec::with_capacity(invariants.len());
    let mut r = opts.rng();
    for (q, inv) in invariants.iter().enumerate() {
        let composed = p.apply(inv, js)?;
        let target = Expr::symbol(param_name(q));
        let ok = equivalent_numeric::<Scalar>(
            &composed,
            &target,
            &opts.sampler,
            opts.samples,
            opts.tol,
            &mut r,
        )?;
        let dev = max_deviation::<Scalar>(&composed, &target, &opts.sampler, opts.samples, &mut r)?;
        entries.push((ok, dev));
    }
    Ok(ParametrizationReport { entries })
}

/// Builds `J(x,u)` from a verified antiderivative.
///
/// `antiderivative` is an expression in `(z, C1..)` whose z-derivative
/// must match `1/coeff ∘ p` numerically, where `coeff` is the field
/// coefficient along the distinguished variable. The integration constant
/// is taken as zero; by the equivalence relation on universal invariants
/// this is a pure gauge choice.
pub fn j_symbolic(
    field: &VectorField,
    invariants: &[Expr],
    p: &LevelSetParametrization,
    antiderivative: &Expr,
    opts: &CheckOpts,
) -> Result<Expr> {
    let js = field.js();
    let coeff = p.distinguished_coefficient(field);
    let integrand = p.apply(coeff, js)?.inv();
    let derivative = antiderivative.diff(PARAM_VARIABLE);
    let mut r = opts.rng();
    if !equivalent_numeric::<Scalar>(
        &derivative,
        &integrand,
        &opts.sampler,
        opts.samples,
        opts.tol,
        &mut r,
    )? {
        let residual =
            max_deviation::<Scalar>(&derivative, &integrand, &opts.sampler, opts.samples, &mut r)?;
        return Err(Error::AntiderivativeMismatch { residual });
    }
    // back-substitute z -> distinguished variable, C_q -> I^q(x,u)
    let mut map = BTreeMap::new();
    map.insert(
        PARAM_VARIABLE.to_string(),
        p.distinguished_symbol(js),
    );
    for (q, inv) in invariants.iter().enumerate() {
        map.insert(param_name(q), inv.clone());
    }
    let j = antiderivative.substitute(&map);
    let qj = field.apply_base(&j);
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
        return Err(Error::AntiderivativeMismatch { residual });
    }
    Ok(j)
}

/// Componentwise level-set agreement required of `j_numeric` endpoints.
const LEVEL_SET_TOL: f64 = 1e-8;
/// Flow-time horizon searched in each direction.
const FLOW_HORIZON: f64 = 50.0;

/// `J(target) - J(base)` as the characteristic-flow time from `base` to
/// `target`. Both bindings must assign every base coordinate (and any
/// free parameters of the field); both points must lie on the same
/// invariant level set.
pub fn j_numeric(
    field: &VectorField,
    invariants: &[Expr],
    base: &Bindings<Scalar>,
    target: &Bindings<Scalar>,
    tol_ode: Scalar,
) -> Result<Scalar> {
    let js = field.js();
    for (q, inv) in invariants.iter().enumerate() {
        let at_base = inv.eval(base)?;
        let at_target = inv.eval(target)?;
        let deviation = (at_base - at_target).abs();
        if deviation > LEVEL_SET_TOL {
            return Err(Error::NotOnLevelSet {
                index: q,
                deviation,
            });
        }
    }
    let coord_names: Vec<String> = (0..js.n())
        .map(|a| js.indep_name(a).to_string())
        .chain((0..js.m()).map(|i| js.dep_name(i).to_string()))
        .collect();
    let read_state = |b: &Bindings<Scalar>| -> Result<Vec<Scalar>> {
        coord_names
            .iter()
            .map(|name| {
                b.get(name)
                    .ok_or_else(|| Error::UnboundSymbol(name.clone()))
            })
            .collect()
    };
    let y_base = read_state(base)?;
    let y_target = read_state(target)?;
    let target_norm = y_target.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let close_tol = 1e-5 * (1.0 + target_norm);
    if y_base
        .iter()
        .zip(&y_target)
        .all(|(a, b)| (a - b).abs() <= 1e-14 * (1.0 + target_norm))
    {
        return Ok(0.0);
    }
    // parameters of the field beyond the coordinates travel unchanged
    let mut parameter_bindings = Bindings::new();
    let mut field_symbols: BTreeSet<String> = BTreeSet::new();
    for coeff in field.coefficients() {
        field_symbols.extend(coeff.free_symbols());
    }
    for name in &field_symbols {
        if !coord_names.contains(name) {
            let value = base
                .get(name)
                .ok_or_else(|| Error::UnboundSymbol(name.clone()))?;
            parameter_bindings.set(name.clone(), value);
        }
    }
    let coefficients: Vec<Expr> = field.coefficients().cloned().collect();
    let eval_field = |state: &[Scalar], out: &mut [Scalar]| -> Result<()> {
        let mut b = parameter_bindings.clone();
        for (name, value) in coord_names.iter().zip(state) {
            b.set(name.clone(), *value);
        }
        for (slot, coeff) in out.iter_mut().zip(&coefficients) {
            *slot = coeff.eval(&b)?;
        }
        Ok(())
    };
    // exit functional: signed distance to the hyperplane through the
    // target orthogonal to the flow direction there
    let mut f_target = vec![0.0; coord_names.len()];
    eval_field(&y_target, &mut f_target)?;
    let plane = |y: &[Scalar]| -> Scalar {
        y.iter()
            .zip(&y_target)
            .zip(&f_target)
            .map(|((yi, ti), fi)| (yi - ti) * fi)
            .sum()
    };
    let integrator = Dopri5 {
        rtol: tol_ode,
        atol: tol_ode * 1e-2,
        ..Dopri5::default()
    };
    // Periodic flows reach the target at many times; keep the smallest
    // magnitude over both directions as the principal determination.
    let mut best: Option<Scalar> = None;
    for direction in [1.0, -1.0] {
        let horizon = best.map_or(FLOW_HORIZON, |t: f64| t.abs().min(FLOW_HORIZON));
        let mut found: Option<Scalar> = None;
        let result = integrator.integrate(
            |_t, y, dy| eval_field(y, dy),
            0.0,
            &y_base,
            direction * horizon,
            |step| {
                let g0 = plane(&step.y0);
                let g1 = plane(&step.y1);
                if g0 == 0.0 || g0 * g1 < 0.0 {
                    // bisect inside the step on the dense interpolant
                    let mut lo = step.t0;
                    let mut hi = step.t1;
                    let mut g_lo = g0;
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        let g_mid = plane(&step.interpolate(mid));
                        if g_lo * g_mid <= 0.0 {
                            hi = mid;
                        } else {
                            lo = mid;
                            g_lo = g_mid;
                        }
                    }
                    let t_star = 0.5 * (lo + hi);
                    let y_star = step.interpolate(t_star);
                    let miss = y_star
                        .iter()
                        .zip(&y_target)
                        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
                    if miss <= close_tol {
                        found = Some(t_star);
                        return Ok(StepOutcome::Stop);
                    }
                }
                Ok(StepOutcome::Continue)
            },
        );
        match result {
            Ok(_) => {
                if let Some(t) = found {
                    if best.is_none_or(|b: f64| t.abs() < b.abs()) {
                        best = Some(t);
                    }
                }
            }
            // a blow-up in this direction just means the target is the
            // other way
            Err(Error::Integration(_)) | Err(Error::Domain(_)) => continue,
            Err(other) => return Err(other),
        }
    }
    best.ok_or(Error::FlowEscaped {
        horizon: FLOW_HORIZON,
    })
}

/// How `J` enters a downstream construction: as a closed-form expression
/// or through the integrand of its defining quadrature.
#[derive(Debug, Clone)]
pub enum JSource {
    /// `J(x,u)` in closed form.
    Symbolic(Expr),
    /// `dJ/dz` as a function of `(z, C1..)` on the level set; `J` itself
    /// is only available by numeric quadrature.
    Integrand(Expr),
}
