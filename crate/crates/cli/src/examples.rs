//! End-to-end pipelines over the built-in fixtures.

use diffinv::fixtures::Fixture;
use diffinv::invariants::{
    first_order_n1, is_fractional_linear, universal_differential_invariant,
    INDEPENDENCE_FRACTION, INDEPENDENCE_POINTS,
};
use diffinv::invdiff::reconstruct_field;
use diffinv::jet::binomial;
use diffinv::linalg::full_rank_fraction;
use diffinv::prolong::prolong;
use diffinv::quadrature::{j_symbolic, validate_parametrization};
use diffinv::riccati::{
    build_system, classify_planar, general_solution_systems, verify_shrinking_constants,
    verify_solution, RiccatiSolution,
};
use diffinv::sample::{equivalent_numeric, rng};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct FixtureReport {
    pub fixture: String,
    pub title: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn push(checks: &mut Vec<Check>, name: &str, pass: bool, detail: String) {
    checks.push(Check {
        name: name.to_string(),
        pass,
        detail,
    });
}

fn push_result(
    checks: &mut Vec<Check>,
    name: &str,
    result: Result<(bool, String), diffinv::Error>,
) {
    match result {
        Ok((pass, detail)) => push(checks, name, pass, detail),
        Err(err) => push(checks, name, false, err.to_string()),
    }
}

/// Runs every construction the fixture supports and verifies it; one
/// check per stage.
pub fn run_fixture(fixture: &Fixture) -> FixtureReport {
    let mut checks = Vec::new();
    let opts = fixture.check_opts();
    let family_tol = if fixture.js.m() >= 2 { 1e-6 } else { 1e-7 };

    // universal invariant (validates QI = 0, QJ = 1, independence)
    let ui = match fixture.universal_invariant() {
        Ok(Some(ui)) => {
            push(
                &mut checks,
                "universal-invariant",
                true,
                "QI = 0, QJ = 1 and functional independence verified".to_string(),
            );
            Some(ui)
        }
        Ok(None) => {
            // no closed-form companion: check invariance of the I's alone
            let q0 = prolong(&fixture.field, 0);
            let mut r = rng(opts.seed);
            let mut ok = true;
            for inv in &fixture.invariants {
                match q0.is_invariant(inv, &opts.sampler, opts.samples, opts.tol, &mut r) {
                    Ok(v) if v.is_invariant() => {}
                    _ => ok = false,
                }
            }
            push(
                &mut checks,
                "invariants-annihilated",
                ok,
                "no closed-form companion; QI = 0 verified for each invariant".to_string(),
            );
            None
        }
        Err(err) => {
            push(&mut checks, "universal-invariant", false, err.to_string());
            None
        }
    };

    // level-set parametrization
    if let Some(p) = &fixture.level_set {
        push_result(
            &mut checks,
            "level-set",
            validate_parametrization(&fixture.invariants, p, &fixture.js, &opts).map(|report| {
                (
                    report.all_pass(),
                    format!("I o p = C verified for {} invariants", report.entries.len()),
                )
            }),
        );
    }

    // planar structure
    if fixture.js.n() == 1 && fixture.js.m() == 1 {
        push_result(
            &mut checks,
            "planar-class",
            classify_planar(&fixture.field, &opts).map(|tag| (true, format!("{tag:?}"))),
        );
    }

    // companion by quadrature
    if let (Some(p), Some(antiderivative)) = (&fixture.level_set, &fixture.antiderivative) {
        match j_symbolic(&fixture.field, &fixture.invariants, p, antiderivative, &opts) {
            Ok(j) => match &fixture.companion {
                Some(reference) => {
                    let mut r = rng(opts.seed);
                    let same = equivalent_numeric::<f64>(
                        &j,
                        reference,
                        &opts.sampler,
                        opts.samples,
                        1e-9,
                        &mut r,
                    )
                    .unwrap_or(false);
                    push(
                        &mut checks,
                        "quadrature",
                        same,
                        format!("J = {j}, matches the closed form: {same}"),
                    );
                }
                None => push(&mut checks, "quadrature", true, format!("J = {j}")),
            },
            Err(err) => push(&mut checks, "quadrature", false, err.to_string()),
        }
    }

    // differential invariants, counts and ranks
    if let Some(ui) = &ui {
        let n = fixture.js.n();
        let m = fixture.js.m();
        let mut r = rng(opts.seed);
        for order in [1usize, 2] {
            match universal_differential_invariant(ui, order, &opts) {
                Ok(out) => {
                    let expected = (n - 1) + m * binomial(n + order, order);
                    let count_ok = out.len() == expected;
                    let qr = prolong(&fixture.field, order);
                    let mut invariant_ok = true;
                    for inv in &out {
                        match qr.is_invariant(inv, &fixture.sampler, 200, 1e-8, &mut r) {
                            Ok(v) if v.is_invariant() => {}
                            _ => invariant_ok = false,
                        }
                    }
                    let coords = fixture
                        .js
                        .widened(order)
                        .coordinates(order)
                        .expect("coordinates");
                    let fraction = full_rank_fraction(
                        &out,
                        &coords,
                        &fixture.sampler,
                        INDEPENDENCE_POINTS,
                        &mut r,
                    )
                    .unwrap_or(0.0);
                    let rank_ok = fraction >= INDEPENDENCE_FRACTION;
                    push(
                        &mut checks,
                        &format!("invariants-order-{order}"),
                        count_ok && invariant_ok && rank_ok,
                        format!(
                            "{} outputs (expected {expected}), all invariant: {invariant_ok}, \
                             full rank at {:.0}% of points",
                            out.len(),
                            100.0 * fraction
                        ),
                    );
                }
                Err(err) => push(
                    &mut checks,
                    &format!("invariants-order-{order}"),
                    false,
                    err.to_string(),
                ),
            }
        }
        // exactly-first-order invariants and their structure
        if n == 1 {
            match first_order_n1(ui) {
                Ok(out) => {
                    let js1 = fixture.js.widened(1);
                    let structural = out.iter().all(|e| is_fractional_linear(e, &js1));
                    let rendered: Vec<String> = out.iter().map(|e| e.render()).collect();
                    push(
                        &mut checks,
                        "first-order",
                        structural,
                        format!(
                            "I_(1) = {}; fractional-linear: {structural}",
                            rendered.join(", ")
                        ),
                    );
                }
                Err(err) => push(&mut checks, "first-order", false, err.to_string()),
            }
        }
    }

    // Riccati pipeline
    if let (Some(p), Some(variant)) = (&fixture.level_set, fixture.variant()) {
        match build_system(&fixture.field, p, variant, &opts) {
            Ok(sys) => {
                let degree_ok = sys.degree_in_unknowns() <= Some(2);
                let mut reference_ok = true;
                if !fixture.reference_system.is_empty() {
                    let mut r = rng(opts.seed);
                    for (built, reference) in sys.rhs().iter().zip(&fixture.reference_system) {
                        reference_ok &= equivalent_numeric::<f64>(
                            built,
                            reference,
                            &fixture.sampler,
                            150,
                            1e-9,
                            &mut r,
                        )
                        .unwrap_or(false);
                    }
                }
                let rendered: Vec<String> = sys
                    .unknowns()
                    .iter()
                    .zip(sys.rhs())
                    .map(|(u, rhs)| format!("d{u}/dz = {rhs}"))
                    .collect();
                push(
                    &mut checks,
                    "riccati-build",
                    degree_ok && reference_ok,
                    format!(
                        "{}; degree <= 2: {degree_ok}, matches reference: {reference_ok}",
                        rendered.join("; ")
                    ),
                );
                if !fixture.particular_solution.is_empty() {
                    let particular = RiccatiSolution::from_components(
                        sys.unknowns().to_vec(),
                        fixture.particular_solution.clone(),
                    );
                    match verify_solution(&sys, &particular, &fixture.verify_grid(), 1e-9) {
                        Ok(report) => push(
                            &mut checks,
                            "riccati-particular",
                            report.pass,
                            format!(
                                "residual {:.2e}, integration deviation {:.2e}",
                                report.max_residual, report.max_flow_deviation
                            ),
                        ),
                        Err(err) => {
                            push(&mut checks, "riccati-particular", false, err.to_string())
                        }
                    }
                }
                if let Some(j_source) = fixture.j_source() {
                    match general_solution_systems(
                        &fixture.field,
                        &fixture.invariants,
                        p,
                        &j_source,
                        &opts,
                    ) {
                        Ok(solution) => {
                            match verify_shrinking_constants(
                                &sys,
                                &solution,
                                &fixture.verify_grid(),
                                1e-2,
                                family_tol,
                            ) {
                                Ok((report, magnitude)) => push(
                                    &mut checks,
                                    "riccati-general",
                                    report.pass,
                                    format!(
                                        "family constants {magnitude:.1e}: residual {:.2e}, \
                                         integration deviation {:.2e}",
                                        report.max_residual, report.max_flow_deviation
                                    ),
                                ),
                                Err(err) => push(
                                    &mut checks,
                                    "riccati-general",
                                    false,
                                    err.to_string(),
                                ),
                            }
                        }
                        Err(err) => {
                            push(&mut checks, "riccati-general", false, err.to_string())
                        }
                    }
                }
                if !fixture.reference_solution.is_empty() {
                    let family = RiccatiSolution::from_components(
                        sys.unknowns().to_vec(),
                        fixture.reference_solution.clone(),
                    )
                    .with_specials(fixture.reference_specials.clone());
                    match verify_solution(&sys, &family, &fixture.verify_grid(), family_tol) {
                        Ok(report) => push(
                            &mut checks,
                            "riccati-reference-family",
                            report.pass,
                            format!(
                                "residual {:.2e}, integration deviation {:.2e}",
                                report.max_residual, report.max_flow_deviation
                            ),
                        ),
                        Err(err) => push(
                            &mut checks,
                            "riccati-reference-family",
                            false,
                            err.to_string(),
                        ),
                    }
                }
            }
            Err(err) => push(&mut checks, "riccati-build", false, err.to_string()),
        }
    }

    // field reconstruction round trip
    if let Some(ui) = &ui {
        match reconstruct_field(ui.invariants(), ui.companion(), &fixture.js, &opts) {
            Ok(field) => {
                let mut r = rng(opts.seed);
                let mut same = true;
                for (reconstructed, original) in
                    field.coefficients().zip(fixture.field.coefficients())
                {
                    same &= equivalent_numeric::<f64>(
                        reconstructed,
                        original,
                        &fixture.sampler,
                        150,
                        1e-8,
                        &mut r,
                    )
                    .unwrap_or(false);
                }
                push(
                    &mut checks,
                    "reconstruction",
                    same,
                    format!("coefficients recovered componentwise: {same}"),
                );
            }
            Err(err) => push(&mut checks, "reconstruction", false, err.to_string()),
        }
    }

    let pass = checks.iter().all(|c| c.pass);
    FixtureReport {
        fixture: fixture.name.to_string(),
        title: fixture.title.to_string(),
        checks,
        pass,
    }
}

