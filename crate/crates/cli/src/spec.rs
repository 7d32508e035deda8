//! Problem specification files: a JSON document declaring the space, the
//! field, and optionally a universal invariant, a level-set
//! parametrization, an antiderivative for the companion quadrature, and
//! sampling domains.

use diffinv::error::Error;
use diffinv::expr::Expr;
use diffinv::jet::{Coordinate, JetSpace, MultiIndex};
use diffinv::quadrature::LevelSetParametrization;
use diffinv::sample::{CheckOpts, DomainSampler};
use diffinv::{Bindings, Scalar, VectorField};
use serde::Deserialize;
use std::collections::BTreeMap;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub n: usize,
    pub m: usize,
    pub xi: Vec<String>,
    pub eta: Vec<String>,
    #[serde(default)]
    pub invariants: Vec<String>,
    #[serde(rename = "J")]
    pub j: Option<String>,
    pub level_set: Option<LevelSetSpec>,
    pub antiderivative: Option<String>,
    #[serde(default)]
    pub domains: BTreeMap<String, [f64; 2]>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSetSpec {
    /// The distinguished variable, e.g. "x", "x2" or "u1".
    pub variable: String,
    /// Solutions for the non-distinguished independent variables.
    #[serde(rename = "X", default)]
    pub x: Vec<String>,
    /// Solutions for the dependent variables.
    #[serde(rename = "U", default)]
    pub u: Vec<String>,
}

/// A loaded, parsed and arity-checked problem.
pub struct Problem {
    pub js: JetSpace,
    pub field: VectorField,
    pub invariants: Vec<Expr>,
    pub j: Option<Expr>,
    pub level_set: Option<LevelSetParametrization>,
    pub antiderivative: Option<Expr>,
    pub opts: CheckOpts,
}

impl Problem {
    /// Verification-grid parameters: the midpoint of each declared domain
    /// for every non-coordinate symbol, so runs are deterministic.
    pub fn grid_params(&self) -> Bindings<Scalar> {
        let mut params = Bindings::new();
        for (name, (lo, hi)) in self.opts.sampler.overrides() {
            if name == "z" {
                continue;
            }
            if self.js.classify(name).is_none() {
                params.set(name.clone(), 0.5 * (lo + hi));
            }
        }
        params
    }

    pub fn z_span(&self) -> (f64, f64) {
        self.opts.sampler.interval("z")
    }
}

pub fn load(spec: &ProblemSpec, flags_seed: u64, samples: usize, tol: f64) -> Result<Problem, Error> {
    if spec.n < 1 || spec.m < 1 {
        return Err(Error::WrongArity {
            what: "variable counts",
            expected: 1,
            got: 0,
        });
    }
    // jet order 3 covers every operation this front-end exposes
    let js = JetSpace::new(spec.n, spec.m, 3);
    let parse_all = |texts: &[String]| -> Result<Vec<Expr>, Error> {
        texts.iter().map(|t| js.parse(t)).collect()
    };
    let xi = parse_all(&spec.xi)?;
    let eta = parse_all(&spec.eta)?;
    let field = VectorField::new(js.clone(), xi, eta)?;
    let invariants = parse_all(&spec.invariants)?;
    if !invariants.is_empty() && invariants.len() != spec.n + spec.m - 1 {
        return Err(Error::WrongArity {
            what: "universal invariant components",
            expected: spec.n + spec.m - 1,
            got: invariants.len(),
        });
    }
    let j = spec.j.as_deref().map(|t| js.parse(t)).transpose()?;
    let antiderivative = spec
        .antiderivative
        .as_deref()
        .map(|t| js.parse(t))
        .transpose()?;
    let level_set = spec
        .level_set
        .as_ref()
        .map(|ls| load_level_set(ls, &js))
        .transpose()?;
    let mut sampler = DomainSampler::new();
    for (name, [lo, hi]) in &spec.domains {
        if lo > hi || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidBinding {
                name: name.clone(),
                reason: "domain bounds must be finite with lo <= hi",
            });
        }
        sampler.set(name.clone(), *lo, *hi);
    }
    let opts = CheckOpts {
        sampler,
        samples: spec.samples.unwrap_or(samples),
        tol: spec.tol.unwrap_or(tol),
        seed: spec.seed.unwrap_or(flags_seed),
    };
    Ok(Problem {
        js,
        field,
        invariants,
        j,
        level_set,
        antiderivative,
        opts,
    })
}

fn load_level_set(ls: &LevelSetSpec, js: &JetSpace) -> Result<LevelSetParametrization, Error> {
    let coordinate = js.classify(&ls.variable).ok_or(Error::Syntax {
        offset: 0,
        found: format!("level-set variable `{}`", ls.variable),
        expected: vec!["a base-space coordinate name".to_string()],
    })?;
    let x: Result<Vec<Expr>, Error> = ls.x.iter().map(|t| js.parse(t)).collect();
    let u: Result<Vec<Expr>, Error> = ls.u.iter().map(|t| js.parse(t)).collect();
    let (x, u) = (x?, u?);
    match coordinate {
        Coordinate::Independent(axis) => {
            if x.len() != js.n() - 1 || u.len() != js.m() {
                return Err(Error::WrongArity {
                    what: "level-set solution lists",
                    expected: js.n() - 1 + js.m(),
                    got: x.len() + u.len(),
                });
            }
            Ok(LevelSetParametrization::solved_along_x(axis, x, u))
        }
        Coordinate::Jet(i, alpha) if alpha == MultiIndex::zero(js.n()) => {
            if x.len() != js.n() || u.len() != js.m() - 1 {
                return Err(Error::WrongArity {
                    what: "level-set solution lists",
                    expected: js.n() + js.m() - 1,
                    got: x.len() + u.len(),
                });
            }
            Ok(LevelSetParametrization::solved_along_u(i, x, u))
        }
        _ => Err(Error::Syntax {
            offset: 0,
            found: format!("level-set variable `{}`", ls.variable),
            expected: vec!["an order-zero coordinate".to_string()],
        }),
    }
}
