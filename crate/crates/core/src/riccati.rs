//! Riccati-type systems for the first-derivative coordinates along an
//! invariant level set, their closed-form general solutions, and numeric
//! verification.
//!
//! On a level set `I(x,u) = C` parametrized by `z`, the first-derivative
//! coordinates `u^k_c` satisfy the quadratic system
//!
//! ```text
//! du^k_c/dz = [ -(xi^b_{u^j}/q) u^j_c u^k_b + (eta^k_{u^j}/q) u^j_c
//!               - (xi^b_{x_c}/q) u^k_b + (eta^k_{x_c}/q) ] on the level set
//! ```
//!
//! with `q` the field coefficient along the distinguished variable and
//! summation over `b, j` only. The general solution comes from the linear
//! systems `D_x(I^{j+n-1} + Ct' I^{x} + Ct'' J) = 0` and is written
//! explicitly with small arbitrary constants `Ct`; setting them to zero
//! gives the particular solution carried by the parametrization itself.
//! Verification is two-sided: pointwise residuals of the symbolic
//! z-derivative against the right-hand side, and deviation from an
//! independent adaptive integration started at the left grid endpoint.

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::jet::{JetSpace, MultiIndex};
use crate::linalg::{self, ExprMatrix};
use crate::ode::Dopri5;
use crate::prolong::VectorField;
use crate::quadrature::{
    param_name, Distinguished, JSource, LevelSetParametrization, PARAM_VARIABLE,
};
use crate::sample::{equivalent_numeric, for_sampled_points, CheckOpts};
use crate::Scalar;
use std::collections::{BTreeMap, BTreeSet};

/// Which field coefficient divides the right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `xi^a != 0`: the independent variable `x_a` parametrizes.
    Xi(usize),
    /// `eta^i != 0`: the dependent variable `u^i` parametrizes.
    Eta(usize),
}

/// Name of the family constant multiplying `I^b` (or `J` for `b = n-1`)
/// in the solution ansatz; plain `Ct<j>` when n = 1.
pub fn ctilde_name(j: usize, b: usize, n: usize) -> String {
    if n == 1 {
        format!("Ct{}", j + 1)
    } else {
        format!("Ct{}_{}", j + 1, b + 1)
    }
}

/// A Riccati-type system `du^k_c/dz = rhs_{kc}(z, u, C)`.
#[derive(Debug, Clone)]
pub struct RiccatiSystem {
    js: JetSpace,
    variant: Variant,
    unknowns: Vec<String>,
    rhs: Vec<Expr>,
}

impl RiccatiSystem {
    pub fn js(&self) -> &JetSpace {
        &self.js
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Unknown jet-coordinate names, row-major in (dependent, axis).
    pub fn unknowns(&self) -> &[String] {
        &self.unknowns
    }

    pub fn rhs(&self) -> &[Expr] {
        &self.rhs
    }

    /// Maximum polynomial degree of the right-hand sides in the unknowns;
    /// None if some right-hand side is not polynomial in them.
    pub fn degree_in_unknowns(&self) -> Option<i64> {
        let set: BTreeSet<&str> = self.unknowns.iter().map(String::as_str).collect();
        self.rhs
            .iter()
            .map(|e| degree_in(e, &set))
            .try_fold(0i64, |acc, d| d.map(|d| acc.max(d)))
    }
}

fn degree_in(e: &Expr, symbols: &BTreeSet<&str>) -> Option<i64> {
    use crate::expr::Node;
    match e.node() {
        Node::Const(_) => Some(0),
        Node::Symbol(name) => Some(if symbols.contains(name.as_str()) { 1 } else { 0 }),
        Node::Sum(ops) => ops
            .iter()
            .map(|op| degree_in(op, symbols))
            .try_fold(0, |acc, d| d.map(|d| acc.max(d))),
        Node::Product(ops) => ops
            .iter()
            .map(|op| degree_in(op, symbols))
            .try_fold(0, |acc, d| d.map(|d| acc + d)),
        Node::Neg(a) => degree_in(a, symbols),
        Node::Power(b, exp) => {
            let db = degree_in(b, symbols)?;
            match exp.as_integer() {
                Some(k) if k >= 0 => Some(db * k),
                _ => {
                    if db == 0 && degree_in(exp, symbols)? == 0 {
                        Some(0)
                    } else {
                        None
                    }
                }
            }
        }
        Node::Func(_, a) => {
            if degree_in(a, symbols)? == 0 {
                Some(0)
            } else {
                None
            }
        }
    }
}

/// A sampled coefficient below this at every point is treated as zero.
const COEFF_TOL: f64 = 1e-10;

/// Builds the Riccati-type system for the given variant over a level-set
/// parametrization solved along the matching variable.
pub fn build_system(
    field: &VectorField,
    p: &LevelSetParametrization,
    variant: Variant,
    opts: &CheckOpts,
) -> Result<RiccatiSystem> {
    let js = field.js().widened(1);
    let n = js.n();
    let m = js.m();
    let matches = matches!(
        (variant, p.distinguished()),
        (Variant::Xi(a), Distinguished::Independent(b)) if a == b
    ) || matches!(
        (variant, p.distinguished()),
        (Variant::Eta(i), Distinguished::Dependent(j)) if i == j
    );
    if !matches {
        return Err(Error::ZeroCoefficient {
            which: "variant does not match the level-set parametrization".to_string(),
        });
    }
    let divisor = p.distinguished_coefficient(field).clone();
    // the divisor must not vanish on the parametrized domain
    let divisor_on_level = p.apply(&divisor, &js)?;
    let symbols = divisor_on_level.free_symbols();
    let mut r = opts.rng();
    let nonzero =
        for_sampled_points::<Scalar, ()>(&opts.sampler, &symbols, 20, &mut r, |bindings| {
            if divisor_on_level.eval(bindings)?.abs() > COEFF_TOL {
                Ok(Some(()))
            } else {
                Ok(None)
            }
        })?;
    if nonzero.is_none() {
        return Err(Error::ZeroCoefficient {
            which: "coefficient along the distinguished variable".to_string(),
        });
    }
    let divisor_inv = divisor.inv();
    let substitution = {
        let mut map = p.substitution(&js)?;
        // jet coordinates are untouched by the level-set substitution
        map.retain(|_, _| true);
        map
    };
    let mut unknowns = Vec::with_capacity(m * n);
    let mut rhs = Vec::with_capacity(m * n);
    for k in 0..m {
        for c in 0..n {
            unknowns.push(js.jet_name(k, &MultiIndex::zero(n).bump(c)));
            // collect coefficient contributions per unknown monomial
            let mut monomials: BTreeMap<Vec<String>, Vec<Expr>> = BTreeMap::new();
            for j in 0..m {
                for b in 0..n {
                    let partial = field.xi()[b].diff(js.dep_name(j));
                    if partial.is_zero() {
                        continue;
                    }
                    let mut key = vec![
                        js.jet_name(j, &MultiIndex::zero(n).bump(c)),
                        js.jet_name(k, &MultiIndex::zero(n).bump(b)),
                    ];
                    key.sort();
                    monomials
                        .entry(key)
                        .or_default()
                        .push(Expr::neg(partial));
                }
            }
            for j in 0..m {
                let partial = field.eta()[k].diff(js.dep_name(j));
                if partial.is_zero() {
                    continue;
                }
                let key = vec![js.jet_name(j, &MultiIndex::zero(n).bump(c))];
                monomials.entry(key).or_default().push(partial);
            }
            for b in 0..n {
                let partial = field.xi()[b].diff(js.indep_name(c));
                if partial.is_zero() {
                    continue;
                }
                let key = vec![js.jet_name(k, &MultiIndex::zero(n).bump(b))];
                monomials.entry(key).or_default().push(Expr::neg(partial));
            }
            let constant = field.eta()[k].diff(js.indep_name(c));
            if !constant.is_zero() {
                monomials.entry(Vec::new()).or_default().push(constant);
            }
            let mut terms = Vec::with_capacity(monomials.len());
            for (key, contributions) in monomials {
                let coefficient = (Expr::sum(contributions) * divisor_inv.clone())
                    .substitute(&substitution);
                if coefficient.is_zero() {
                    continue;
                }
                let monomial =
                    Expr::product(key.into_iter().map(Expr::symbol).collect());
                terms.push(coefficient * monomial);
            }
            rhs.push(Expr::sum(terms));
        }
    }
    Ok(RiccatiSystem {
        js,
        variant,
        unknowns,
        rhs,
    })
}

/// A function known only through its z-derivative, evaluated along
/// verification grids by quadrature from the left endpoint.
#[derive(Debug, Clone)]
pub struct SpecialFunction {
    pub name: String,
    pub dz: Expr,
}

/// A closed-form solution family of a Riccati-type system.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// Unknown names, aligned with the generating system.
    pub unknowns: Vec<String>,
    /// One expression per unknown in `(z, C.., Ct.., specials)`.
    pub components: Vec<Expr>,
    /// A second algebraic route to the same family, when available.
    pub alt_components: Option<Vec<Expr>>,
    /// Names of the family constants.
    pub constants: Vec<String>,
    /// Functions entering the components only through their derivative.
    pub specials: Vec<SpecialFunction>,
    /// Human-readable validity note.
    pub note: String,
}

impl RiccatiSolution {
    pub fn from_components(unknowns: Vec<String>, components: Vec<Expr>) -> Self {
        RiccatiSolution {
            unknowns,
            components,
            alt_components: None,
            constants: Vec::new(),
            specials: Vec::new(),
            note: String::new(),
        }
    }

    pub fn with_specials(mut self, specials: Vec<SpecialFunction>) -> Self {
        self.specials = specials;
        self
    }
}

/// General solution for `n = 1` (any number of dependent variables).
///
/// Emits the level-set form `u_x = U_z - U_C (E + Ct x J_C)^{-1} Ct J_z`
/// as the primary components; when `J` is available in closed form, the
/// base-space route `u_x = -(I_u - Ct x J_u)^{-1} (I_x + Ct J_x)` on the
/// level set is emitted as the alternate and both are cross-checked
/// numerically. With an integrand-only `J`, the parameter derivatives
/// `J_{C_q}` enter as special symbols `JC<q>` integrated along grids.
pub fn general_solution_n1(
    field: &VectorField,
    invariants: &[Expr],
    p: &LevelSetParametrization,
    j: &JSource,
    opts: &CheckOpts,
) -> Result<RiccatiSolution> {
    let js = field.js().clone();
    let n = js.n();
    let m = js.m();
    if n != 1 {
        return Err(Error::WrongArity {
            what: "general_solution_n1 requires n = 1",
            expected: 1,
            got: n,
        });
    }
    if invariants.len() != m {
        return Err(Error::WrongArity {
            what: "universal invariant components",
            expected: m,
            got: invariants.len(),
        });
    }
    let z = Expr::symbol(PARAM_VARIABLE);
    let _ = z;
    let u_param = p.u().to_vec();
    let u_z: Vec<Expr> = u_param.iter().map(|e| e.diff(PARAM_VARIABLE)).collect();
    let u_c: ExprMatrix = u_param
        .iter()
        .map(|e| (0..m).map(|l| e.diff(&param_name(l))).collect())
        .collect();
    // J along the level set: z-derivative and parameter derivatives
    let mut specials = Vec::new();
    let (j_z, j_c): (Expr, Vec<Expr>) = match j {
        JSource::Symbolic(j_expr) => {
            let parametrized = p.apply(j_expr, &js)?;
            (
                parametrized.diff(PARAM_VARIABLE),
                (0..m).map(|l| parametrized.diff(&param_name(l))).collect(),
            )
        }
        JSource::Integrand(g) => {
            let j_c: Vec<Expr> = (0..m)
                .map(|l| {
                    let name = format!("JC{}", l + 1);
                    specials.push(SpecialFunction {
                        name: name.clone(),
                        dz: g.diff(&param_name(l)),
                    });
                    Expr::symbol(name)
                })
                .collect();
            (g.clone(), j_c)
        }
    };
    let ct: Vec<Expr> = (0..m)
        .map(|j| Expr::symbol(ctilde_name(j, 0, 1)))
        .collect();
    // E + Ct (x) J_C
    let mut matrix = linalg::identity(m);
    for (row, ct_j) in ct.iter().enumerate() {
        for (col, j_c_l) in j_c.iter().enumerate() {
            matrix[row][col] =
                matrix[row][col].clone() + ct_j.clone() * j_c_l.clone();
        }
    }
    let inverse = linalg::inverse(&matrix)?;
    // (E + Ct x J_C)^{-1} Ct J_z
    let correction: Vec<Expr> = (0..m)
        .map(|row| {
            Expr::sum(
                (0..m)
                    .map(|col| {
                        inverse[row][col].clone() * ct[col].clone() * j_z.clone()
                    })
                    .collect(),
            )
        })
        .collect();
    let components: Vec<Expr> = (0..m)
        .map(|jdx| {
            u_z[jdx].clone()
                - Expr::sum(
                    (0..m)
                        .map(|l| u_c[jdx][l].clone() * correction[l].clone())
                        .collect(),
                )
        })
        .collect();
    // singularity guard: det(E + Ct x J_C) must not vanish identically
    // for small sampled constants
    let det = linalg::determinant(&matrix)?;
    let mut det_sampler = opts.sampler.clone();
    for ct_j in &ct {
        det_sampler.set(ct_j.as_symbol().expect("symbol").to_string(), -1e-2, 1e-2);
    }
    let mut symbols = det.free_symbols();
    for special in &specials {
        symbols.remove(&special.name);
    }
    if specials.is_empty() {
        let mut r = opts.rng();
        let nonsingular =
            for_sampled_points::<Scalar, ()>(&det_sampler, &symbols, 20, &mut r, |bindings| {
                if det.eval(bindings)?.abs() > COEFF_TOL {
                    Ok(Some(()))
                } else {
                    Ok(None)
                }
            })?;
        if nonsingular.is_none() {
            return Err(Error::SingularForSampledCtilde);
        }
    }
    // base-space route when J is closed-form: solving
    // (I_x + Ct J_x) + (I_u + Ct x J_u) u_x = 0, i.e. D_x(I + Ct J) = 0
    let alt_components = if let JSource::Symbolic(j_expr) = j {
        let mut lhs: ExprMatrix = invariants
            .iter()
            .map(|inv| (0..m).map(|l| inv.diff(js.dep_name(l))).collect())
            .collect();
        for (row, ct_j) in ct.iter().enumerate() {
            for (col, slot) in lhs[row].iter_mut().enumerate() {
                let j_u = j_expr.diff(js.dep_name(col));
                *slot = slot.clone() + ct_j.clone() * j_u;
            }
        }
        let rhs: Vec<Expr> = invariants
            .iter()
            .zip(&ct)
            .map(|(inv, ct_j)| {
                Expr::neg(inv.diff(js.indep_name(0)) + ct_j.clone() * j_expr.diff(js.indep_name(0)))
            })
            .collect();
        let solved = linalg::cramer_solve(&lhs, &rhs)?;
        let on_level: Result<Vec<Expr>> =
            solved.iter().map(|e| p.apply(e, &js)).collect();
        let on_level = on_level?;
        // the two routes must agree numerically for small constants
        let mut r = opts.rng();
        for (a, b) in components.iter().zip(&on_level) {
            if !equivalent_numeric::<Scalar>(a, b, &det_sampler, opts.samples, 1e-7, &mut r)? {
                return Err(Error::Integration(
                    "solution routes disagree".to_string(),
                ));
            }
        }
        Some(on_level)
    } else {
        None
    };
    let unknowns: Vec<String> = (0..m)
        .map(|k| js.jet_name(k, &MultiIndex::new(vec![1])))
        .collect();
    Ok(RiccatiSolution {
        unknowns,
        components,
        alt_components,
        constants: ct
            .iter()
            .map(|e| e.as_symbol().expect("symbol").to_string())
            .collect(),
        specials,
        note: "valid for sufficiently small family constants".to_string(),
    })
}

/// General solution for `n >= 2`, written in the block form with the
/// coupling matrix `H`; requires a closed-form `J`. Component order
/// matches the generating system (dependent index outer, axis inner).
pub fn general_solution_general_n(
    field: &VectorField,
    invariants: &[Expr],
    p: &LevelSetParametrization,
    j_expr: &Expr,
    opts: &CheckOpts,
) -> Result<RiccatiSolution> {
    let js = field.js().clone();
    let n = js.n();
    let m = js.m();
    if n < 2 {
        return Err(Error::WrongArity {
            what: "general_solution_general_n requires n >= 2",
            expected: 2,
            got: n,
        });
    }
    let axis = match p.distinguished() {
        Distinguished::Independent(a) => a,
        Distinguished::Dependent(_) => {
            return Err(Error::ZeroCoefficient {
                which: "general-n solution requires an xi-variant parametrization".to_string(),
            })
        }
    };
    if invariants.len() != m + n - 1 {
        return Err(Error::WrongArity {
            what: "universal invariant components",
            expected: m + n - 1,
            got: invariants.len(),
        });
    }
    // level-set data: Xbar (non-distinguished x's) and U as functions of
    // (z, C^xbar = C_1..C_{n-1}, C^u = C_n..C_{n+m-1})
    let xbar: Vec<Expr> = p
        .x()
        .iter()
        .enumerate()
        .filter(|(b, _)| *b != axis)
        .map(|(_, e)| e.clone())
        .collect();
    let u_param = p.u().to_vec();
    let cx_names: Vec<String> = (0..n - 1).map(param_name).collect();
    let cu_names: Vec<String> = (n - 1..n + m - 1).map(param_name).collect();
    let jac = |functions: &[Expr], args: &[String]| -> ExprMatrix {
        functions
            .iter()
            .map(|f| args.iter().map(|a| f.diff(a)).collect())
            .collect()
    };
    let col = |functions: &[Expr], arg: &str| -> Vec<Expr> {
        functions.iter().map(|f| f.diff(arg)).collect()
    };
    let xbar_cx = jac(&xbar, &cx_names);
    let xbar_cu = jac(&xbar, &cu_names);
    let xbar_z = col(&xbar, PARAM_VARIABLE);
    let u_cx = jac(&u_param, &cx_names);
    let u_cu = jac(&u_param, &cu_names);
    let u_z = col(&u_param, PARAM_VARIABLE);
    let jp = p.apply(j_expr, &js)?;
    let j_cx: Vec<Expr> = cx_names.iter().map(|a| jp.diff(a)).collect();
    let j_cu: Vec<Expr> = cu_names.iter().map(|a| jp.diff(a)).collect();
    let j_z = jp.diff(PARAM_VARIABLE);
    // numeric singularity guard for the parametrization block
    {
        let det = linalg::determinant(&xbar_cx)?;
        let symbols = det.free_symbols();
        let mut r = opts.rng();
        let ok = for_sampled_points::<Scalar, ()>(
            &opts.sampler,
            &symbols,
            20,
            &mut r,
            |bindings| {
                if det.eval(bindings)?.abs() > COEFF_TOL {
                    Ok(Some(()))
                } else {
                    Ok(None)
                }
            },
        )?;
        if ok.is_none() {
            return Err(Error::SingularJacobiMatrix {
                block: "Xbar_Cxbar",
            });
        }
    }
    let xbar_cx_inv = linalg::inverse(&xbar_cx)?;
    // constants: Ct' is m x (n-1), Ct'' is the m-column
    let ct_prime: ExprMatrix = (0..m)
        .map(|j| {
            (0..n - 1)
                .map(|d| Expr::symbol(ctilde_name(j, d, n)))
                .collect()
        })
        .collect();
    let ct_second: Vec<Expr> = (0..m)
        .map(|j| Expr::symbol(ctilde_name(j, n - 1, n)))
        .collect();
    // A = Ct' + Ct'' J_Cxbar  (m x (n-1))
    let a_matrix: ExprMatrix = (0..m)
        .map(|j| {
            (0..n - 1)
                .map(|d| ct_prime[j][d].clone() + ct_second[j].clone() * j_cx[d].clone())
                .collect()
        })
        .collect();
    let a_xinv = linalg::mat_mul(&a_matrix, &xbar_cx_inv);
    let u_cx_xinv = linalg::mat_mul(&u_cx, &xbar_cx_inv);
    // H = (U_Cu - U_Cxbar Xinv Xbar_Cu)
    //     (E + Ct'' (x) J_Cu - A Xinv Xbar_Cu)^{-1}
    let h_left = linalg::mat_sub(&u_cu, &linalg::mat_mul(&u_cx_xinv, &xbar_cu));
    let mut h_right = linalg::identity(m);
    for jdx in 0..m {
        for l in 0..m {
            h_right[jdx][l] =
                h_right[jdx][l].clone() + ct_second[jdx].clone() * j_cu[l].clone();
        }
    }
    let a_xinv_xcu = linalg::mat_mul(&a_xinv, &xbar_cu);
    let h_right = linalg::mat_sub(&h_right, &a_xinv_xcu);
    {
        let det = linalg::determinant(&h_right)?;
        let mut det_sampler = opts.sampler.clone();
        for j in 0..m {
            for b in 0..n {
                det_sampler.set(ctilde_name(j, b, n), -1e-2, 1e-2);
            }
        }
        let symbols = det.free_symbols();
        let mut r = opts.rng();
        let ok = for_sampled_points::<Scalar, ()>(
            &det_sampler,
            &symbols,
            20,
            &mut r,
            |bindings| {
                if det.eval(bindings)?.abs() > COEFF_TOL {
                    Ok(Some(()))
                } else {
                    Ok(None)
                }
            },
        )?;
        if ok.is_none() {
            return Err(Error::SingularForSampledCtilde);
        }
    }
    let h = linalg::mat_mul(&h_left, &linalg::inverse(&h_right)?);
    // u^j_a = U_z - U_Cxbar Xinv Xbar_z + H (A Xinv Xbar_z - Ct'' J_z)
    let mat_vec = |matrix: &ExprMatrix, vector: &[Expr]| -> Vec<Expr> {
        matrix
            .iter()
            .map(|row| {
                Expr::sum(
                    row.iter()
                        .zip(vector)
                        .map(|(a, b)| a.clone() * b.clone())
                        .collect(),
                )
            })
            .collect()
    };
    let drift = mat_vec(&u_cx_xinv, &xbar_z);
    let a_xinv_xz = mat_vec(&a_xinv, &xbar_z);
    let h_arg: Vec<Expr> = (0..m)
        .map(|j| a_xinv_xz[j].clone() - ct_second[j].clone() * j_z.clone())
        .collect();
    let h_term = mat_vec(&h, &h_arg);
    let u_a: Vec<Expr> = (0..m)
        .map(|j| u_z[j].clone() - drift[j].clone() + h_term[j].clone())
        .collect();
    // u^j_b (b != a) = U_Cxbar Xinv - H A Xinv
    let h_a_xinv = linalg::mat_mul(&h, &a_xinv);
    let u_b = linalg::mat_sub(&u_cx_xinv, &h_a_xinv);
    // assemble in system order: (k, c) with c over all axes
    let mut unknowns = Vec::with_capacity(m * n);
    let mut components = Vec::with_capacity(m * n);
    for k in 0..m {
        let mut off_axis = 0usize;
        for c in 0..n {
            unknowns.push(js.jet_name(k, &MultiIndex::zero(n).bump(c)));
            if c == axis {
                components.push(u_a[k].clone());
            } else {
                components.push(u_b[k][off_axis].clone());
                off_axis += 1;
            }
        }
    }
    let mut constants = Vec::new();
    for j in 0..m {
        for b in 0..n {
            constants.push(ctilde_name(j, b, n));
        }
    }
    Ok(RiccatiSolution {
        unknowns,
        components,
        alt_components: None,
        constants,
        specials: Vec::new(),
        note: "valid for sufficiently small family constants".to_string(),
    })
}

/// Dispatcher covering the spec surface: `n = 1` goes through the
/// closed-form route (with numeric `J_C` specials when only the integrand
/// is known), `n >= 2` through the block formulas.
pub fn general_solution_systems(
    field: &VectorField,
    invariants: &[Expr],
    p: &LevelSetParametrization,
    j: &JSource,
    opts: &CheckOpts,
) -> Result<RiccatiSolution> {
    if field.js().n() == 1 {
        general_solution_n1(field, invariants, p, j, opts)
    } else {
        match j {
            JSource::Symbolic(j_expr) => {
                general_solution_general_n(field, invariants, p, j_expr, opts)
            }
            JSource::Integrand(_) => Err(Error::Integration(
                "general-n solution requires a closed-form companion".to_string(),
            )),
        }
    }
}

/// Planar (n = m = 1) structure of the Riccati equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanarClass {
    /// `xi_u = 0`: the equation is linear in `u_x`.
    Linear,
    /// `eta_x = 0`: a Bernoulli equation.
    Bernoulli,
    /// `xi_x = eta_u` and `xi_u = -eta_x`: separable `dv/(v^2+1)` form.
    ConformalSeparable,
    General,
}

/// Classifies the planar field by the first matching identity.
pub fn classify_planar(field: &VectorField, opts: &CheckOpts) -> Result<PlanarClass> {
    let js = field.js();
    if js.n() != 1 || js.m() != 1 {
        return Err(Error::WrongArity {
            what: "classify_planar requires n = m = 1",
            expected: 1,
            got: js.n().max(js.m()),
        });
    }
    let xi = &field.xi()[0];
    let eta = &field.eta()[0];
    let x = js.indep_name(0);
    let u = js.dep_name(0);
    let mut r = opts.rng();
    let mut holds = |lhs: &Expr, rhs: &Expr| -> Result<bool> {
        equivalent_numeric::<Scalar>(lhs, rhs, &opts.sampler, opts.samples, opts.tol, &mut r)
    };
    if holds(&xi.diff(u), &Expr::zero())? {
        return Ok(PlanarClass::Linear);
    }
    if holds(&eta.diff(x), &Expr::zero())? {
        return Ok(PlanarClass::Bernoulli);
    }
    if holds(&xi.diff(x), &eta.diff(u))? && holds(&xi.diff(u), &Expr::neg(eta.diff(x)))? {
        return Ok(PlanarClass::ConformalSeparable);
    }
    Ok(PlanarClass::General)
}

/// Evaluation grid for `verify_solution`: `steps + 1` equally spaced
/// points of `[z0, z1]`, with every constant (level-set `C`s, family
/// `Ct`s, free field parameters) bound in `params`.
#[derive(Debug, Clone)]
pub struct VerifyGrid {
    pub z0: f64,
    pub z1: f64,
    pub steps: usize,
    pub params: Bindings<Scalar>,
}

impl VerifyGrid {
    pub fn points(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|i| self.z0 + (self.z1 - self.z0) * i as f64 / self.steps as f64)
            .collect()
    }
}

/// One grid row of a verification report.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub z: f64,
    pub residual: f64,
    pub flow_deviation: f64,
}

/// Two-sided verification outcome.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub rows: Vec<ReportRow>,
    pub max_residual: f64,
    pub max_flow_deviation: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Verifies a solution family against its system on a grid.
///
/// (a) Pointwise residual: the symbolic z-derivative of each component
/// (chaining through special functions) minus the right-hand side with
/// the unknowns bound to the component values.
/// (b) Independent integration: an adaptive solve of the system started
/// from the family's values at the left endpoint, compared at every grid
/// point. Domain failures (a family pole on the grid) are reported as an
/// infinite residual rather than an error.
pub fn verify_solution(
    sys: &RiccatiSystem,
    sol: &RiccatiSolution,
    grid: &VerifyGrid,
    tol: f64,
) -> Result<VerificationReport> {
    if sys.unknowns != sol.unknowns {
        return Err(Error::WrongArity {
            what: "solution unknowns",
            expected: sys.unknowns.len(),
            got: sol.unknowns.len(),
        });
    }
    let derivatives: Vec<Expr> = sol
        .components
        .iter()
        .map(|component| {
            let mut total = component.diff(PARAM_VARIABLE);
            for special in &sol.specials {
                let partial = component.diff(&special.name);
                if !partial.is_zero() {
                    total = total + partial * special.dz.clone();
                }
            }
            total
        })
        .collect();
    let points = grid.points();
    let integrator = Dopri5::<Scalar>::default();
    // special-function values accumulate along the grid by quadrature
    let mut special_values = vec![0.0f64; sol.specials.len()];
    let mut rows: Vec<ReportRow> = Vec::with_capacity(points.len());
    let mut component_values: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    let mut previous_z = points[0];
    let mut failed = false;
    for (idx, &z) in points.iter().enumerate() {
        if idx > 0 {
            for (s, special) in sol.specials.iter().enumerate() {
                let params = &grid.params;
                let increment = integrator.quadrature(
                    |t| {
                        let mut b = params.clone();
                        b.set(PARAM_VARIABLE, t);
                        special.dz.eval(&b)
                    },
                    previous_z,
                    z,
                )?;
                special_values[s] += increment;
            }
        }
        previous_z = z;
        let mut bindings = grid.params.clone();
        bindings.set(PARAM_VARIABLE, z);
        for (s, special) in sol.specials.iter().enumerate() {
            bindings.set(special.name.clone(), special_values[s]);
        }
        let values: Vec<f64> = match sol
            .components
            .iter()
            .map(|c| c.eval(&bindings))
            .collect::<Result<_>>()
        {
            Ok(v) => v,
            Err(Error::Domain(_)) => {
                failed = true;
                break;
            }
            Err(other) => return Err(other),
        };
        let mut rhs_bindings = bindings.clone();
        for (name, value) in sys.unknowns.iter().zip(&values) {
            rhs_bindings.set(name.clone(), *value);
        }
        let mut residual = 0.0f64;
        for (derivative, rhs) in derivatives.iter().zip(&sys.rhs) {
            let lhs = match derivative.eval(&bindings) {
                Ok(v) => v,
                Err(Error::Domain(_)) => {
                    failed = true;
                    break;
                }
                Err(other) => return Err(other),
            };
            let rhs_value = match rhs.eval(&rhs_bindings) {
                Ok(v) => v,
                Err(Error::Domain(_)) => {
                    failed = true;
                    break;
                }
                Err(other) => return Err(other),
            };
            residual = residual.max((lhs - rhs_value).abs());
        }
        if failed {
            break;
        }
        component_values.push(values);
        rows.push(ReportRow {
            z,
            residual,
            flow_deviation: 0.0,
        });
    }
    if failed || rows.is_empty() {
        return Ok(VerificationReport {
            rows,
            max_residual: f64::INFINITY,
            max_flow_deviation: f64::INFINITY,
            tol,
            pass: false,
        });
    }
    // independent integration from the left endpoint
    let params = grid.params.clone();
    let rhs_exprs = sys.rhs.clone();
    let unknown_names = sys.unknowns.clone();
    let mut state = component_values[0].clone();
    let mut flow_failed = false;
    for idx in 1..points.len() {
        let result = integrator.solve(
            |t, y, dy| {
                let mut b = params.clone();
                b.set(PARAM_VARIABLE, t);
                for (name, value) in unknown_names.iter().zip(y) {
                    b.set(name.clone(), *value);
                }
                for (slot, rhs) in dy.iter_mut().zip(&rhs_exprs) {
                    *slot = rhs.eval(&b)?;
                }
                Ok(())
            },
            points[idx - 1],
            &state,
            points[idx],
        );
        match result {
            Ok(y) => state = y,
            Err(Error::Domain(_)) | Err(Error::Integration(_)) => {
                flow_failed = true;
                break;
            }
            Err(other) => return Err(other),
        }
        let deviation = state
            .iter()
            .zip(&component_values[idx])
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        rows[idx].flow_deviation = deviation;
    }
    let max_residual = rows.iter().fold(0.0f64, |acc, r| acc.max(r.residual));
    let max_flow_deviation = if flow_failed {
        f64::INFINITY
    } else {
        rows.iter().fold(0.0f64, |acc, r| acc.max(r.flow_deviation))
    };
    let pass = max_residual <= tol && max_flow_deviation <= tol;
    Ok(VerificationReport {
        rows,
        max_residual,
        max_flow_deviation,
        tol,
        pass,
    })
}

/// Verifies the family at shrinking constant magnitudes: starting from
/// `initial`, binds every constant in `sol.constants` to the current
/// magnitude, halving on failure up to 10 times.
pub fn verify_shrinking_constants(
    sys: &RiccatiSystem,
    sol: &RiccatiSolution,
    grid: &VerifyGrid,
    initial: f64,
    tol: f64,
) -> Result<(VerificationReport, f64)> {
    let mut magnitude = initial;
    let mut last = None;
    for _ in 0..10 {
        let mut grid = grid.clone();
        for (idx, name) in sol.constants.iter().enumerate() {
            // alternate signs so both directions of the family are seen
            let sign = if idx % 2 == 0 { 1.0 } else { -1.0 };
            grid.params.set(name.clone(), sign * magnitude);
        }
        let report = verify_solution(sys, sol, &grid, tol)?;
        if report.pass {
            return Ok((report, magnitude));
        }
        last = Some(report);
        magnitude *= 0.5;
    }
    match last {
        Some(report) => Ok((report, magnitude)),
        None => Err(Error::SingularForSampledCtilde),
    }
}

/// Solves for the constants that make `sol` pass through `target_values`
/// at `z0` (Newton iteration with finite-difference Jacobian). Used to
/// match one family member against another family's sampled member.
pub fn match_constants(
    sol: &RiccatiSolution,
    target_values: &[f64],
    z0: f64,
    base_params: &Bindings<Scalar>,
    constants: &[String],
) -> Result<Vec<f64>> {
    if !sol.specials.is_empty() {
        return Err(Error::Integration(
            "constant matching requires closed-form components".to_string(),
        ));
    }
    let k = constants.len();
    let evaluate = |c: &[f64]| -> Result<Vec<f64>> {
        let mut bindings = base_params.clone();
        bindings.set(PARAM_VARIABLE, z0);
        for (name, value) in constants.iter().zip(c) {
            bindings.set(name.clone(), *value);
        }
        sol.components.iter().map(|e| e.eval(&bindings)).collect()
    };
    let mut c = vec![0.0f64; k];
    for _ in 0..60 {
        let f = evaluate(&c)?;
        let g: Vec<f64> = f
            .iter()
            .zip(target_values)
            .map(|(a, b)| a - b)
            .collect();
        let worst = g.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if worst < 1e-12 {
            return Ok(c);
        }
        // finite-difference Jacobian
        let h = 1e-7;
        let mut jac = vec![vec![0.0f64; k]; target_values.len()];
        for col in 0..k {
            let mut bumped = c.clone();
            bumped[col] += h;
            let fb = evaluate(&bumped)?;
            for row in 0..target_values.len() {
                jac[row][col] = (fb[row] - f[row]) / h;
            }
        }
        let matrix = nalgebra::DMatrix::from_fn(target_values.len(), k, |r_, c_| jac[r_][c_]);
        let rhs = nalgebra::DVector::from_vec(g);
        let delta = matrix
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularForSampledCtilde)?;
        for (slot, d) in c.iter_mut().zip(delta.iter()) {
            *slot -= d;
        }
    }
    Err(Error::Integration(
        "constant matching did not converge".to_string(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn example2_field() -> VectorField {
        let js = JetSpace::new(1, 1, 2);
        VectorField::new(
            js.clone(),
            vec![js.parse("exp(-x-u)").unwrap()],
            vec![js.parse("u*exp(-x-u)").unwrap()],
        )
        .unwrap()
    }

    fn example2_level_set() -> LevelSetParametrization {
        LevelSetParametrization::solved_along_x(0, vec![], vec![parse("C1*exp(z)").unwrap()])
    }

    fn example2_opts() -> CheckOpts {
        CheckOpts {
            sampler: crate::sample::DomainSampler::new()
                .with("z", 0.0, 1.0)
                .with("C1", 0.5, 1.5),
            ..CheckOpts::default()
        }
    }

    #[test]
    fn example2_system_structure() {
        let sys = build_system(
            &example2_field(),
            &example2_level_set(),
            Variant::Xi(0),
            &example2_opts(),
        )
        .unwrap();
        assert_eq!(sys.unknowns(), &["u1[1]".to_string()]);
        let expected = parse("u1[1]^2 + (2 - C1*exp(z))*u1[1] - C1*exp(z)").unwrap();
        assert_eq!(sys.rhs()[0], expected);
        assert_eq!(sys.degree_in_unknowns(), Some(2));
    }

    #[test]
    fn example3_system_structure_with_symbolic_exponent() {
        let js = JetSpace::new(1, 1, 2);
        let field = VectorField::new(
            js.clone(),
            vec![js.parse("x^2*u").unwrap()],
            vec![js.parse("k*x*u^2").unwrap()],
        )
        .unwrap();
        let p = LevelSetParametrization::solved_along_x(
            0,
            vec![],
            vec![parse("C1*z^k").unwrap()],
        );
        let opts = CheckOpts {
            sampler: crate::sample::DomainSampler::new().with("k", 2.0, 2.0),
            ..CheckOpts::default()
        };
        let sys = build_system(&field, &p, Variant::Xi(0), &opts).unwrap();
        let expected =
            parse("-1/(C1*z^k)*u1[1]^2 + 2*(k-1)/z*u1[1] + k*C1*z^(k-2)").unwrap();
        assert_eq!(sys.rhs()[0], expected);
    }

    #[test]
    fn translation_system_is_trivial() {
        let js = JetSpace::new(1, 1, 2);
        let field = VectorField::new(js.clone(), vec![Expr::one()], vec![Expr::zero()]).unwrap();
        let p = LevelSetParametrization::solved_along_x(0, vec![], vec![parse("C1").unwrap()]);
        let sys = build_system(&field, &p, Variant::Xi(0), &CheckOpts::default()).unwrap();
        assert!(sys.rhs()[0].is_zero());
    }

    #[test]
    fn planar_classification() {
        let js = JetSpace::new(1, 1, 2);
        let opts = CheckOpts::default();
        let rotation = VectorField::new(
            js.clone(),
            vec![js.parse("u").unwrap()],
            vec![js.parse("-x").unwrap()],
        )
        .unwrap();
        assert_eq!(
            classify_planar(&rotation, &opts).unwrap(),
            PlanarClass::ConformalSeparable
        );
        let linear = VectorField::new(
            js.clone(),
            vec![Expr::one()],
            vec![js.parse("x*u").unwrap()],
        )
        .unwrap();
        assert_eq!(classify_planar(&linear, &opts).unwrap(), PlanarClass::Linear);
        let bernoulli = VectorField::new(
            js.clone(),
            vec![js.parse("u").unwrap()],
            vec![js.parse("u^2").unwrap()],
        )
        .unwrap();
        assert_eq!(
            classify_planar(&bernoulli, &opts).unwrap(),
            PlanarClass::Bernoulli
        );
        assert_eq!(
            classify_planar(&example2_field(), &opts).unwrap(),
            PlanarClass::General
        );
    }

    #[test]
    fn linear_class_has_linear_system() {
        let js = JetSpace::new(1, 1, 2);
        let field = VectorField::new(
            js.clone(),
            vec![Expr::one()],
            vec![js.parse("x*u").unwrap()],
        )
        .unwrap();
        // I = u exp(-x^2/2) solves QI = 0; level set u = C exp(x^2/2)
        let p = LevelSetParametrization::solved_along_x(
            0,
            vec![],
            vec![parse("C1*exp(z^2/2)").unwrap()],
        );
        let sys = build_system(&field, &p, Variant::Xi(0), &CheckOpts::default()).unwrap();
        assert!(sys.degree_in_unknowns() <= Some(1));
    }

    #[test]
    fn example2_general_solution_passes_verification() {
        let field = example2_field();
        let p = example2_level_set();
        let opts = example2_opts();
        let invariants = vec![parse("u*exp(-x)").unwrap()];
        let j = JSource::Symbolic(parse("exp(x+u)/u").unwrap());
        let sol = general_solution_n1(&field, &invariants, &p, &j, &opts).unwrap();
        // the zero-constant member is the particular solution U_z
        let mut zero = BTreeMap::new();
        zero.insert("Ct1".to_string(), Expr::zero());
        assert_eq!(
            sol.components[0].substitute(&zero),
            parse("C1*exp(z)").unwrap()
        );
        let sys = build_system(&field, &p, Variant::Xi(0), &opts).unwrap();
        let mut params = Bindings::new();
        params.set("C1", 1.0);
        let grid = VerifyGrid {
            z0: 0.0,
            z1: 1.0,
            steps: 20,
            params,
        };
        let (report, magnitude) =
            verify_shrinking_constants(&sys, &sol, &grid, 1e-2, 1e-7).unwrap();
        assert!(report.pass, "residual {}", report.max_residual);
        assert!(magnitude > 1e-4);
    }

    #[test]
    fn example2_paper_family_passes_verification() {
        let field = example2_field();
        let p = example2_level_set();
        let opts = example2_opts();
        let sys = build_system(&field, &p, Variant::Xi(0), &opts).unwrap();
        let family = RiccatiSolution::from_components(
            sys.unknowns().to_vec(),
            vec![parse(
                "C1*exp(z) - C1^2*exp(2*z)/(C1*exp(z) - 1 + Chat*exp(-C1*exp(z)))",
            )
            .unwrap()],
        );
        let mut params = Bindings::new();
        params.set("C1", 1.0);
        params.set("Chat", 3.0);
        let grid = VerifyGrid {
            z0: 0.0,
            z1: 1.0,
            steps: 20,
            params,
        };
        let report = verify_solution(&sys, &family, &grid, 1e-7).unwrap();
        assert!(
            report.pass,
            "residual {} deviation {}",
            report.max_residual, report.max_flow_deviation
        );
    }

    #[test]
    fn families_share_members() {
        // match the paper family member (Chat = 3) with a member of the
        // constructed family at the left endpoint, then compare on the grid
        let field = example2_field();
        let p = example2_level_set();
        let opts = example2_opts();
        let invariants = vec![parse("u*exp(-x)").unwrap()];
        let j = JSource::Symbolic(parse("exp(x+u)/u").unwrap());
        let sol = general_solution_n1(&field, &invariants, &p, &j, &opts).unwrap();
        let paper = parse(
            "C1*exp(z) - C1^2*exp(2*z)/(C1*exp(z) - 1 + Chat*exp(-C1*exp(z)))",
        )
        .unwrap();
        let mut params: Bindings = Bindings::new();
        params.set("C1", 1.0);
        params.set("Chat", 3.0);
        let mut probe = params.clone();
        probe.set(PARAM_VARIABLE, 0.0);
        let target = vec![paper.eval(&probe).unwrap()];
        let matched = match_constants(&sol, &target, 0.0, &params, &sol.constants).unwrap();
        let mut full = params.clone();
        full.set("Ct1", matched[0]);
        for idx in 0..=20 {
            let z = idx as f64 / 20.0;
            let mut at = full.clone();
            at.set(PARAM_VARIABLE, z);
            let mine = sol.components[0].eval(&at).unwrap();
            let theirs = paper.eval(&at).unwrap();
            assert!(
                (mine - theirs).abs() <= 1e-8 * (1.0 + theirs.abs()),
                "z = {z}: {mine} vs {theirs}"
            );
        }
    }

    #[test]
    fn eta_variant_on_the_rotation() {
        // rotation solved along u: x = sqrt(C1^2 - z^2); on the circle
        // u_x = -x/u, so the lifted solution is -sqrt(C1^2 - z^2)/z
        let js = JetSpace::new(1, 1, 2);
        let field = VectorField::new(
            js.clone(),
            vec![js.parse("u").unwrap()],
            vec![js.parse("-x").unwrap()],
        )
        .unwrap();
        let p = LevelSetParametrization::solved_along_u(
            0,
            vec![parse("sqrt(C1^2 - z^2)").unwrap()],
            vec![],
        );
        let opts = CheckOpts {
            sampler: crate::sample::DomainSampler::new()
                .with("z", 0.5, 0.9)
                .with("C1", 1.4, 1.6),
            ..CheckOpts::default()
        };
        let sys = build_system(&field, &p, Variant::Eta(0), &opts).unwrap();
        let solution = RiccatiSolution::from_components(
            sys.unknowns().to_vec(),
            vec![parse("-sqrt(C1^2 - z^2)/z").unwrap()],
        );
        let mut params = Bindings::new();
        params.set("C1", 1.5);
        let grid = VerifyGrid {
            z0: 0.5,
            z1: 0.9,
            steps: 16,
            params,
        };
        let report = verify_solution(&sys, &solution, &grid, 1e-9).unwrap();
        assert!(
            report.pass,
            "residual {} deviation {}",
            report.max_residual, report.max_flow_deviation
        );
    }

    #[test]
    fn corrupted_solution_is_flagged() {
        let field = example2_field();
        let p = example2_level_set();
        let opts = example2_opts();
        let sys = build_system(&field, &p, Variant::Xi(0), &opts).unwrap();
        let corrupted = RiccatiSolution::from_components(
            sys.unknowns().to_vec(),
            vec![parse("C1*exp(z) + 1e-3").unwrap()],
        );
        let mut params = Bindings::new();
        params.set("C1", 1.0);
        let grid = VerifyGrid {
            z0: 0.0,
            z1: 1.0,
            steps: 20,
            params,
        };
        let report = verify_solution(&sys, &corrupted, &grid, 1e-7).unwrap();
        assert!(!report.pass);
        assert!(report.max_residual > 1e-7);
    }

    #[test]
    fn zero_system_constant_solution() {
        let js = JetSpace::new(1, 1, 2);
        let field = VectorField::new(js.clone(), vec![Expr::one()], vec![Expr::zero()]).unwrap();
        let p = LevelSetParametrization::solved_along_x(0, vec![], vec![parse("C1").unwrap()]);
        let sys = build_system(&field, &p, Variant::Xi(0), &CheckOpts::default()).unwrap();
        let solution = RiccatiSolution::from_components(
            sys.unknowns().to_vec(),
            vec![parse("5").unwrap()],
        );
        let grid = VerifyGrid {
            z0: 0.0,
            z1: 1.0,
            steps: 10,
            params: Bindings::new(),
        };
        let report = verify_solution(&sys, &solution, &grid, 1e-12).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_residual, 0.0);
    }
}
