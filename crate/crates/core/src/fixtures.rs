//! Built-in worked examples: the five examples carried end-to-end by the
//! command-line runner and the acceptance suite, the rectified field, and
//! synthetic two-axis fixtures obtained by pushing the rectified field
//! through an invertible polynomial change of variables (which supplies
//! exact invariants by construction where no worked n = 2 example
//! exists).

use crate::error::Result;
use crate::expr::{parse, Bindings, Expr};
use crate::invariants::UniversalInvariant;
use crate::jet::JetSpace;
use crate::prolong::VectorField;
use crate::quadrature::{JSource, LevelSetParametrization};
use crate::riccati::{SpecialFunction, Variant, VerifyGrid};
use crate::sample::{CheckOpts, DomainSampler};
use crate::Scalar;
use rand::Rng;

/// One worked example with everything its pipeline needs: the field, a
/// universal invariant, a level-set parametrization, sampling domains
/// that avoid poles and branch points, verification-grid parameters, and
/// the reference formulas it is checked against.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub title: &'static str,
    pub js: JetSpace,
    pub field: VectorField,
    pub invariants: Vec<Expr>,
    /// Closed-form companion, when one exists.
    pub companion: Option<Expr>,
    pub level_set: Option<LevelSetParametrization>,
    /// Antiderivative of `1/coeff` along the level set, in `(z, C..)`.
    pub antiderivative: Option<Expr>,
    /// `dJ/dz` on the level set when only the integrand is available.
    pub j_integrand: Option<Expr>,
    /// Sampling domains for every symbol this fixture touches.
    pub sampler: DomainSampler,
    /// Concrete constants for verification grids.
    pub verify_params: Bindings<Scalar>,
    /// Verification grid span and resolution: `(z0, z1, steps)`.
    pub grid_span: (f64, f64, usize),
    /// Reference exactly-first-order invariants, branch-consistent.
    pub reference_first_order: Vec<Expr>,
    /// Reference right-hand sides of the Riccati system.
    pub reference_system: Vec<Expr>,
    /// Reference general-solution family (constants bound in
    /// `verify_params`), with any special functions it references.
    pub reference_solution: Vec<Expr>,
    pub reference_specials: Vec<SpecialFunction>,
    /// The particular solution carried by the parametrization.
    pub particular_solution: Vec<Expr>,
}

impl Fixture {
    pub fn check_opts(&self) -> CheckOpts {
        CheckOpts {
            sampler: self.sampler.clone(),
            ..CheckOpts::default()
        }
    }

    pub fn j_source(&self) -> Option<JSource> {
        match (&self.companion, &self.j_integrand) {
            (Some(j), _) => Some(JSource::Symbolic(j.clone())),
            (None, Some(g)) => Some(JSource::Integrand(g.clone())),
            (None, None) => None,
        }
    }

    /// The validated universal invariant; None when the fixture has no
    /// closed-form companion.
    pub fn universal_invariant(&self) -> Result<Option<UniversalInvariant>> {
        match &self.companion {
            None => Ok(None),
            Some(j) => {
                let mut ui = UniversalInvariant::new(
                    self.field.clone(),
                    self.invariants.clone(),
                    j.clone(),
                    &self.check_opts(),
                )?;
                if let Some(p) = &self.level_set {
                    ui = ui.with_level_set(p.clone());
                }
                Ok(Some(ui))
            }
        }
    }

    pub fn variant(&self) -> Option<Variant> {
        self.level_set.as_ref().map(|p| match p.distinguished() {
            crate::quadrature::Distinguished::Independent(a) => Variant::Xi(a),
            crate::quadrature::Distinguished::Dependent(i) => Variant::Eta(i),
        })
    }

    pub fn verify_grid(&self) -> VerifyGrid {
        VerifyGrid {
            z0: self.grid_span.0,
            z1: self.grid_span.1,
            steps: self.grid_span.2,
            params: self.verify_params.clone(),
        }
    }
}

fn p(text: &str) -> Expr {
    parse(text).expect("fixture expression")
}

/// Rotation field `u d/dx - x d/du` with invariant `sqrt(x^2+u^2)`.
///
/// On the sampled quadrant (x, u > 0) the companion branch with
/// `QJ = +1` is `+arcsin(x/sqrt(x^2+u^2))`, which fixes the sign of the
/// first-order invariant to `(x + u u_x)/(u - x u_x) * sqrt(x^2+u^2)`.
pub fn example1() -> Fixture {
    let js = JetSpace::new(1, 1, 3);
    let field = VectorField::new(js.clone(), vec![p("u")], vec![p("-x")]).expect("field");
    let sampler = DomainSampler::new()
        .with("u1[1]", -1.0, -0.25)
        .with("z", 0.5, 1.4)
        .with("C1", 1.6, 2.5);
    let mut verify_params = Bindings::new();
    verify_params.set("C1", 2.0);
    Fixture {
        name: "example1",
        title: "rotation field with invariant sqrt(x^2+u^2)",
        js,
        field,
        invariants: vec![p("sqrt(x^2+u^2)")],
        companion: Some(p("arcsin(x/sqrt(x^2+u^2))")),
        level_set: Some(LevelSetParametrization::solved_along_x(
            0,
            vec![],
            vec![p("sqrt(C1^2 - z^2)")],
        )),
        antiderivative: Some(p("arcsin(z/C1)")),
        j_integrand: None,
        sampler,
        verify_params,
        grid_span: (0.5, 1.4, 20),
        reference_first_order: vec![p("(x + u*u1[1])/(u - x*u1[1])*sqrt(x^2+u^2)")],
        reference_system: vec![p("-(1 + u1[1]^2)/sqrt(C1^2 - z^2)")],
        reference_solution: vec![],
        reference_specials: vec![],
        particular_solution: vec![p("-z/sqrt(C1^2 - z^2)")],
    }
}

/// `exp(-x-u)(d/dx + u d/du)` with invariant `u exp(-x)`.
pub fn example2() -> Fixture {
    let js = JetSpace::new(1, 1, 3);
    let field = VectorField::new(
        js.clone(),
        vec![p("exp(-x-u)")],
        vec![p("u*exp(-x-u)")],
    )
    .expect("field");
    // u stays above 1 so the denominator u + u u_x - u_x of the
    // first-order invariant cannot vanish
    let sampler = DomainSampler::new()
        .with("u", 1.0, 1.5)
        .with("z", 0.0, 1.0)
        .with("C1", 0.5, 1.5);
    let mut verify_params = Bindings::new();
    verify_params.set("C1", 1.0);
    verify_params.set("Chat", 3.0);
    Fixture {
        name: "example2",
        title: "exponential field with invariant u*exp(-x)",
        js,
        field,
        invariants: vec![p("u*exp(-x)")],
        companion: Some(p("exp(x+u)/u")),
        level_set: Some(LevelSetParametrization::solved_along_x(
            0,
            vec![],
            vec![p("C1*exp(z)")],
        )),
        antiderivative: Some(p("1/C1*exp(C1*exp(z))")),
        j_integrand: None,
        sampler,
        verify_params,
        grid_span: (0.0, 1.0, 20),
        reference_first_order: vec![p(
            "(u1[1]-u)*u^2*exp(-2*x-u)/(u + u*u1[1] - u1[1])",
        )],
        reference_system: vec![p("u1[1]^2 + (2 - C1*exp(z))*u1[1] - C1*exp(z)")],
        reference_solution: vec![p(
            "C1*exp(z) - C1^2*exp(2*z)/(C1*exp(z) - 1 + Chat*exp(-C1*exp(z)))",
        )],
        reference_specials: vec![],
        particular_solution: vec![p("C1*exp(z)")],
    }
}

fn example3(name: &'static str, title: &'static str, k: f64) -> Fixture {
    let js = JetSpace::new(1, 1, 3);
    let field = VectorField::new(
        js.clone(),
        vec![p("x^2*u")],
        vec![p("k*x*u^2")],
    )
    .expect("field");
    let sampler = DomainSampler::new()
        .with("k", k, k)
        .with("z", 0.5, 1.5)
        .with("C1", 0.5, 1.5)
        .with("u1[1]", 0.05, 0.3);
    let mut verify_params = Bindings::new();
    verify_params.set("k", k);
    verify_params.set("C1", 1.0);
    verify_params.set("Chat", if k == -1.0 { 2.0 } else { 1.0 });
    let (companion, antiderivative, reference_solution) = if k == -1.0 {
        (
            p("ln(x)/(x*u)"),
            p("ln(z)/C1"),
            vec![p("-C1/z^2*(1 + 1/(Chat - ln(z)))")],
        )
    } else {
        (
            p("-1/((k+1)*x*u)"),
            p("-1/((k+1)*C1*z^(k+1))"),
            vec![p("C1*z^(k-1)*(k - (k+1)/(1 + Chat*z^(k+1)))")],
        )
    };
    Fixture {
        name,
        title,
        js,
        field,
        invariants: vec![p("u*x^(-k)")],
        companion: Some(companion),
        level_set: Some(LevelSetParametrization::solved_along_x(
            0,
            vec![],
            vec![p("C1*z^k")],
        )),
        antiderivative: Some(antiderivative),
        j_integrand: None,
        sampler,
        verify_params,
        grid_span: (0.5, 1.5, 20),
        reference_first_order: vec![],
        reference_system: vec![p(
            "-1/(C1*z^k)*u1[1]^2 + 2*(k-1)/z*u1[1] + k*C1*z^(k-2)",
        )],
        reference_solution,
        reference_specials: vec![],
        particular_solution: vec![p("k*C1*z^(k-1)")],
    }
}

/// `xu(x d/dx + k u d/du)` with `k = -1` (logarithmic companion).
pub fn example3_k_minus_1() -> Fixture {
    example3(
        "example3-k-1",
        "scaling field x*u*(x d/dx + k u d/du), k = -1",
        -1.0,
    )
}

/// `xu(x d/dx + k u d/du)` with `k = 2` (power companion).
pub fn example3_k2() -> Fixture {
    example3(
        "example3-k2",
        "scaling field x*u*(x d/dx + k u d/du), k = 2",
        2.0,
    )
}

/// Two dependent variables: `exp(-x-u1-u2)(d/dx + u1 d/du1 + u2 d/du2)`.
pub fn example4() -> Fixture {
    let js = JetSpace::new(1, 2, 3);
    let field = VectorField::new(
        js.clone(),
        vec![p("exp(-x-u1-u2)")],
        vec![p("u1*exp(-x-u1-u2)"), p("u2*exp(-x-u1-u2)")],
    )
    .expect("field");
    let sampler = DomainSampler::new()
        .with("z", 0.0, 1.0)
        .with("C1", 0.5, 0.75)
        .with("C2", 0.5, 0.75);
    let mut verify_params = Bindings::new();
    verify_params.set("C1", 0.5);
    verify_params.set("C2", 0.75);
    verify_params.set("Chat1", 1e-4);
    verify_params.set("Chat2", -1e-4);
    let j_level = "exp((C1+C2)*exp(z))/(C1+C2)";
    Fixture {
        name: "example4",
        title: "two dependent variables, coupled exponential field",
        js,
        field,
        invariants: vec![p("u1*exp(-x)"), p("u2*exp(-x)")],
        companion: Some(p("exp(x+u1+u2)/(u1+u2)")),
        level_set: Some(LevelSetParametrization::solved_along_x(
            0,
            vec![],
            vec![p("C1*exp(z)"), p("C2*exp(z)")],
        )),
        antiderivative: Some(p(j_level)),
        j_integrand: None,
        sampler,
        verify_params,
        grid_span: (0.0, 1.0, 20),
        reference_first_order: vec![],
        reference_system: vec![
            p("(u1[1]+u2[1])*u1[1] + (2 - C1*exp(z))*u1[1] - C1*exp(z)*u2[1] - C1*exp(z)"),
            p("(u1[1]+u2[1])*u2[1] - C2*exp(z)*u1[1] + (2 - C2*exp(z))*u2[1] - C2*exp(z)"),
        ],
        reference_solution: vec![
            p(&format!(
                "C1*exp(z) + (C1+C2)*exp(2*z)*({j_level})*Chat1\
                 /(1 - (Chat1+Chat2)*(exp(z) - 1/(C1+C2))*({j_level}))"
            )),
            p(&format!(
                "C2*exp(z) + (C1+C2)*exp(2*z)*({j_level})*Chat2\
                 /(1 - (Chat1+Chat2)*(exp(z) - 1/(C1+C2))*({j_level}))"
            )),
        ],
        reference_specials: vec![],
        particular_solution: vec![p("C1*exp(z)"), p("C2*exp(z)")],
    }
}

/// Two dependent variables with a non-elementary companion: the
/// quadrature `J = int exp(-(C1+C2)cos z - (C2-C1)sin z) dz` stays
/// unevaluated and its parameter derivatives enter numerically.
pub fn example5() -> Fixture {
    let js = JetSpace::new(1, 2, 3);
    let field = VectorField::new(
        js.clone(),
        vec![p("exp(u1+u2)")],
        vec![p("u2*exp(u1+u2)"), p("-u1*exp(u1+u2)")],
    )
    .expect("field");
    let sampler = DomainSampler::new()
        .with("z", 0.0, 1.0)
        .with("C1", 0.4, 0.6)
        .with("C2", 0.6, 0.9);
    let mut verify_params = Bindings::new();
    verify_params.set("C1", 0.5);
    verify_params.set("C2", 0.75);
    verify_params.set("Chat1", 0.01);
    verify_params.set("Chat2", -0.01);
    let integrand = p("exp(-(C1+C2)*cos(z) - (C2-C1)*sin(z))");
    let reference_specials = vec![
        SpecialFunction {
            name: "JC1".to_string(),
            dz: integrand.diff("C1"),
        },
        SpecialFunction {
            name: "JC2".to_string(),
            dz: integrand.diff("C2"),
        },
    ];
    Fixture {
        name: "example5",
        title: "rotational coupling with a non-elementary companion",
        js,
        field,
        invariants: vec![
            p("u1*cos(x) - u2*sin(x)"),
            p("u1*sin(x) + u2*cos(x)"),
        ],
        companion: None,
        level_set: Some(LevelSetParametrization::solved_along_x(
            0,
            vec![],
            vec![p("C1*cos(z) + C2*sin(z)"), p("-C1*sin(z) + C2*cos(z)")],
        )),
        antiderivative: None,
        j_integrand: Some(integrand.clone()),
        sampler,
        verify_params,
        grid_span: (0.0, 1.0, 20),
        reference_first_order: vec![],
        reference_system: vec![
            p("-(u1[1]+u2[1])*u1[1] + (-C1*sin(z) + C2*cos(z))*u1[1] \
               + (-C1*sin(z) + C2*cos(z) + 1)*u2[1]"),
            p("-(u1[1]+u2[1])*u2[1] - (C1*cos(z) + C2*sin(z) + 1)*u1[1] \
               - (C1*cos(z) + C2*sin(z))*u2[1]"),
        ],
        reference_solution: vec![
            p("-C1*sin(z) + C2*cos(z) + exp(-(C1+C2)*cos(z) - (C2-C1)*sin(z))\
               *(Chat1*cos(z) + Chat2*sin(z))/(1 - Chat1*JC1 - Chat2*JC2)"),
            p("-C1*cos(z) - C2*sin(z) + exp(-(C1+C2)*cos(z) - (C2-C1)*sin(z))\
               *(-Chat1*sin(z) + Chat2*cos(z))/(1 - Chat1*JC1 - Chat2*JC2)"),
        ],
        reference_specials,
        particular_solution: vec![
            p("-C1*sin(z) + C2*cos(z)"),
            p("-C1*cos(z) - C2*sin(z)"),
        ],
    }
}

/// The already-rectified translation field, for degenerate-case tests.
pub fn rectified() -> Fixture {
    let js = JetSpace::new(1, 1, 3);
    let field = VectorField::new(js.clone(), vec![Expr::one()], vec![Expr::zero()])
        .expect("field");
    let mut verify_params = Bindings::new();
    verify_params.set("C1", 1.0);
    Fixture {
        name: "rectified",
        title: "translation field d/dx",
        js,
        field,
        invariants: vec![p("u")],
        companion: Some(p("x")),
        level_set: Some(LevelSetParametrization::solved_along_x(
            0,
            vec![],
            vec![p("C1")],
        )),
        antiderivative: Some(p("z")),
        j_integrand: None,
        sampler: DomainSampler::new(),
        verify_params,
        grid_span: (0.0, 1.0, 10),
        reference_first_order: vec![p("u1[1]")],
        reference_system: vec![Expr::zero()],
        reference_solution: vec![],
        reference_specials: vec![],
        particular_solution: vec![Expr::zero()],
    }
}

/// Synthetic two-axis fixture: the rectified field pushed through the
/// shear `y1 = x1 + q1(x2, u), y2 = x2 + q2(u), v = u` with random
/// quadratics `q1, q2`. The inverse change of variables is polynomial, so
/// the invariants `I^1 = x1 + q1, I^2 = u` and companion `J = x2 + q2`
/// are exact by construction, and the field is
/// `-dq1/dx2 d/dx1 + d/dx2`.
pub fn synthetic_n2(seed: u64) -> Fixture {
    let mut rng = crate::sample::rng(seed);
    let mut draw = || Expr::rational(rng.gen_range(-2i64..=2), 4);
    let (c1, c2, c3, c4, c5) = (draw(), draw(), draw(), draw(), draw());
    let (d1, d2) = (draw(), draw());
    let x2 = Expr::symbol("x2");
    let u = Expr::symbol("u");
    // q1(x2, u) with a guaranteed x2-dependence so the field is a shear
    let c1 = if c1.is_zero() && c3.is_zero() && c4.is_zero() {
        Expr::rational(1, 4)
    } else {
        c1
    };
    let q1 = c1.clone() * x2.clone()
        + c2 * u.clone()
        + c3 * Expr::pow(x2.clone(), Expr::integer(2))
        + c4 * x2.clone() * u.clone()
        + c5 * Expr::pow(u.clone(), Expr::integer(2));
    let q2 = d1 * u.clone() + d2 * Expr::pow(u.clone(), Expr::integer(2));
    let js = JetSpace::new(2, 1, 3);
    let xi1 = Expr::neg(q1.diff("x2"));
    let field = VectorField::new(js.clone(), vec![xi1, Expr::one()], vec![Expr::zero()])
        .expect("field");
    let i1 = Expr::symbol("x1") + q1.clone();
    let i2 = u.clone();
    let companion = x2.clone() + q2.clone();
    // level set along x2: u = C2, x1 = C1 - q1(z, C2)
    let z = Expr::symbol("z");
    let c2_sym = Expr::symbol("C2");
    let mut on_level = std::collections::BTreeMap::new();
    on_level.insert("x2".to_string(), z);
    on_level.insert("u".to_string(), c2_sym);
    let x1_expr = Expr::symbol("C1") - q1.substitute(&on_level);
    let level_set =
        LevelSetParametrization::solved_along_x(1, vec![x1_expr], vec![p("C2")]);
    // small positive jet coordinates keep the frame Jacobian near one
    let mut sampler = DomainSampler::new().with("z", 0.5, 1.5);
    for name in [
        "u1[1,0]", "u1[0,1]", "u1[2,0]", "u1[1,1]", "u1[0,2]",
    ] {
        sampler.set(name, 0.05, 0.25);
    }
    let mut verify_params = Bindings::new();
    verify_params.set("C1", 1.0);
    verify_params.set("C2", 0.8);
    Fixture {
        name: "synthetic-n2",
        title: "synthetic two-axis shear fixture",
        js,
        field,
        invariants: vec![i1, i2],
        companion: Some(companion),
        level_set: Some(level_set),
        antiderivative: None,
        j_integrand: None,
        sampler,
        verify_params,
        grid_span: (0.5, 1.5, 16),
        reference_first_order: vec![],
        reference_system: vec![],
        reference_solution: vec![],
        reference_specials: vec![],
        particular_solution: vec![],
    }
}

/// The five worked examples, in order.
pub fn paper_examples() -> Vec<Fixture> {
    vec![
        example1(),
        example2(),
        example3_k_minus_1(),
        example3_k2(),
        example4(),
        example5(),
    ]
}

/// Everything the test suites iterate over.
pub fn all() -> Vec<Fixture> {
    let mut fixtures = paper_examples();
    fixtures.push(rectified());
    fixtures.push(synthetic_n2(7));
    fixtures
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{invariant_derivations, universal_differential_invariant};
    use crate::quadrature::validate_parametrization;
    use crate::riccati::{
        build_system, general_solution_systems, verify_shrinking_constants, verify_solution,
        RiccatiSolution,
    };
    use crate::sample::{equivalent_numeric, rng};

    #[test]
    fn all_fixtures_validate() {
        for fixture in all() {
            let ui = fixture.universal_invariant();
            assert!(ui.is_ok(), "{}: {:?}", fixture.name, ui.err());
            if let Some(p) = &fixture.level_set {
                let report = validate_parametrization(
                    &fixture.invariants,
                    p,
                    &fixture.js,
                    &fixture.check_opts(),
                )
                .unwrap();
                assert!(report.all_pass(), "{}: level set invalid", fixture.name);
            }
        }
    }

    #[test]
    fn reference_systems_match_built_systems() {
        for fixture in all() {
            if fixture.reference_system.is_empty() {
                continue;
            }
            let p = fixture.level_set.as_ref().unwrap();
            let sys = build_system(
                &fixture.field,
                p,
                fixture.variant().unwrap(),
                &fixture.check_opts(),
            )
            .unwrap();
            let mut r = rng(61);
            for (built, reference) in sys.rhs().iter().zip(&fixture.reference_system) {
                assert!(
                    equivalent_numeric::<f64>(
                        built,
                        reference,
                        &fixture.sampler,
                        150,
                        1e-9,
                        &mut r
                    )
                    .unwrap(),
                    "{}: system mismatch: {built} vs {reference}",
                    fixture.name
                );
            }
            assert!(sys.degree_in_unknowns() <= Some(2), "{}", fixture.name);
        }
    }

    #[test]
    fn particular_solutions_verify() {
        for fixture in all() {
            if fixture.particular_solution.is_empty() {
                continue;
            }
            let p = fixture.level_set.as_ref().unwrap();
            let sys = build_system(
                &fixture.field,
                p,
                fixture.variant().unwrap(),
                &fixture.check_opts(),
            )
            .unwrap();
            let solution = RiccatiSolution::from_components(
                sys.unknowns().to_vec(),
                fixture.particular_solution.clone(),
            );
            let report = verify_solution(&sys, &solution, &fixture.verify_grid(), 1e-9).unwrap();
            assert!(
                report.pass,
                "{}: residual {} deviation {}",
                fixture.name, report.max_residual, report.max_flow_deviation
            );
        }
    }

    #[test]
    fn synthetic_frame_identities() {
        // the invariant derivations invert the frame: D_{y_c} applied to
        // the frame functions gives Kronecker deltas
        let fixture = synthetic_n2(7);
        let ui = fixture.universal_invariant().unwrap().unwrap();
        let opts = fixture.check_opts();
        let derivations = invariant_derivations(&ui, &opts).unwrap();
        let js = fixture.js.widened(1);
        let frame = [ui.invariants()[0].clone(), ui.companion().clone()];
        let mut r = rng(62);
        for (c, derivation) in derivations.iter().enumerate() {
            for (d, f) in frame.iter().enumerate() {
                let applied = derivation.apply(f, &js).unwrap();
                let expected = if c == d { Expr::one() } else { Expr::zero() };
                assert!(
                    equivalent_numeric::<f64>(
                        &applied,
                        &expected,
                        &fixture.sampler,
                        100,
                        1e-9,
                        &mut r
                    )
                    .unwrap(),
                    "D_y{} on frame {d}: {applied}",
                    c + 1
                );
            }
        }
    }

    #[test]
    fn synthetic_general_solution() {
        let fixture = synthetic_n2(7);
        let p = fixture.level_set.as_ref().unwrap();
        let opts = fixture.check_opts();
        let sys = build_system(&fixture.field, p, fixture.variant().unwrap(), &opts).unwrap();
        assert!(sys.degree_in_unknowns() <= Some(2));
        let solution = general_solution_systems(
            &fixture.field,
            &fixture.invariants,
            p,
            &fixture.j_source().unwrap(),
            &opts,
        )
        .unwrap();
        // zero-constant member verifies tightly
        let mut grid = fixture.verify_grid();
        for name in &solution.constants {
            grid.params.set(name.clone(), 0.0);
        }
        let report = verify_solution(&sys, &solution, &grid, 1e-8).unwrap();
        assert!(
            report.pass,
            "particular: residual {} deviation {}",
            report.max_residual, report.max_flow_deviation
        );
        // small random constants still verify
        let (report, magnitude) = verify_shrinking_constants(
            &sys,
            &solution,
            &fixture.verify_grid(),
            1e-2,
            1e-7,
        )
        .unwrap();
        assert!(
            report.pass,
            "general: residual {} deviation {} at {magnitude}",
            report.max_residual, report.max_flow_deviation
        );
    }

    #[test]
    fn reference_first_order_invariants_match() {
        // the displayed exactly-first-order invariants, and the
        // structural identity between the matrix route and the direct
        // quotient D_x I / D_x J
        for fixture in all() {
            if fixture.js.n() != 1 {
                continue;
            }
            let Some(ui) = fixture.universal_invariant().unwrap() else {
                continue;
            };
            let opts = fixture.check_opts();
            let direct = crate::invariants::first_order_n1(&ui).unwrap();
            let matrix = crate::invariants::first_order_invariants(&ui, &opts).unwrap();
            for (j, entry) in direct.iter().enumerate() {
                assert_eq!(&matrix[j][0], entry, "{}: route mismatch", fixture.name);
            }
            let mut r = rng(65);
            for (j, reference) in fixture.reference_first_order.iter().enumerate() {
                assert!(
                    equivalent_numeric::<f64>(
                        &direct[j],
                        reference,
                        &fixture.sampler,
                        200,
                        1e-9,
                        &mut r
                    )
                    .unwrap(),
                    "{}: I_(1)^{} = {} does not match {}",
                    fixture.name,
                    j + 1,
                    direct[j],
                    reference
                );
            }
        }
    }

    #[test]
    fn example4_families_share_members() {
        // match a reference-family member against the constructed family
        // at the left endpoint, then compare across the grid
        let fixture = example4();
        let opts = fixture.check_opts();
        let p = fixture.level_set.as_ref().unwrap();
        let solution = general_solution_systems(
            &fixture.field,
            &fixture.invariants,
            p,
            &fixture.j_source().unwrap(),
            &opts,
        )
        .unwrap();
        let params = fixture.verify_params.clone();
        let mut probe = params.clone();
        probe.set("z", 0.0);
        let target: Vec<f64> = fixture
            .reference_solution
            .iter()
            .map(|e| e.eval(&probe).unwrap())
            .collect();
        let matched = crate::riccati::match_constants(
            &solution,
            &target,
            0.0,
            &params,
            &solution.constants,
        )
        .unwrap();
        let mut full = params.clone();
        for (name, value) in solution.constants.iter().zip(&matched) {
            full.set(name.clone(), *value);
        }
        for idx in 0..=20 {
            let z = idx as f64 / 20.0;
            let mut at = full.clone();
            at.set("z", z);
            for (mine, reference) in solution.components.iter().zip(&fixture.reference_solution)
            {
                let a = mine.eval(&at).unwrap();
                let b = reference.eval(&at).unwrap();
                assert!(
                    (a - b).abs() <= 1e-8 * (1.0 + b.abs()),
                    "z = {z}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn example5_first_order_ratio_is_invariant() {
        // without a closed-form companion the individual entries
        // D_y I^j are not expressible symbolically, but their ratio
        // (D_x I^1)/(D_x I^2) drops the companion and must be an
        // exactly-first-order invariant of the field
        let fixture = example5();
        let js = fixture.js.widened(1);
        let d1 = js.total_derivative(&fixture.invariants[0], 0).unwrap();
        let d2 = js.total_derivative(&fixture.invariants[1], 0).unwrap();
        let ratio = d1 * d2.inv();
        let qr = crate::prolong::prolong(&fixture.field, 1);
        let mut r = rng(64);
        assert!(qr
            .is_invariant(&ratio, &fixture.sampler, 200, 1e-8, &mut r)
            .unwrap()
            .is_invariant());
    }

    #[test]
    fn synthetic_invariance_and_rank() {
        for seed in [7, 11] {
            let fixture = synthetic_n2(seed);
            let ui = fixture.universal_invariant().unwrap().unwrap();
            let opts = fixture.check_opts();
            let out = universal_differential_invariant(&ui, 2, &opts).unwrap();
            // (n-1) + m C(n+r, r) with n = 2, m = 1, r = 2
            assert_eq!(out.len(), 1 + crate::jet::binomial(4, 2));
            let qr = crate::prolong::prolong(&fixture.field, 2);
            let mut r = rng(63);
            for inv in &out {
                assert!(
                    qr.is_invariant(inv, &fixture.sampler, 200, 1e-8, &mut r)
                        .unwrap()
                        .is_invariant(),
                    "seed {seed}: not invariant: {inv}"
                );
            }
            let coords = fixture.js.widened(2).coordinates(2).unwrap();
            let fraction = crate::linalg::full_rank_fraction(
                &out,
                &coords,
                &fixture.sampler,
                100,
                &mut r,
            )
            .unwrap();
            assert!(fraction >= 0.95, "seed {seed}: rank fraction {fraction}");
        }
    }
}
