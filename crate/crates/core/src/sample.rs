//! Seeded domain sampling and the numeric-equivalence oracle.
//!
//! All randomness flows through an explicitly seeded [`ChaCha8Rng`], so
//! every verification in the crate is reproducible from a seed.

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::scalar::Real;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// The deterministic RNG used throughout.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform per-symbol sampling intervals with a shared default.
///
/// The default interval `[0.5, 1.5]` avoids zero and the branch points of
/// the elementary functions; per-symbol overrides narrow or move it.
#[derive(Debug, Clone)]
pub struct DomainSampler {
    default: (f64, f64),
    overrides: BTreeMap<String, (f64, f64)>,
}

impl Default for DomainSampler {
    fn default() -> Self {
        DomainSampler::new()
    }
}

impl DomainSampler {
    pub fn new() -> Self {
        DomainSampler {
            default: (0.5, 1.5),
            overrides: BTreeMap::new(),
        }
    }

    pub fn with(mut self, symbol: impl Into<String>, lo: f64, hi: f64) -> Self {
        self.set(symbol, lo, hi);
        self
    }

    pub fn set(&mut self, symbol: impl Into<String>, lo: f64, hi: f64) {
        assert!(lo.is_finite() && hi.is_finite() && lo <= hi, "bad interval");
        self.overrides.insert(symbol.into(), (lo, hi));
    }

    pub fn interval(&self, symbol: &str) -> (f64, f64) {
        self.overrides
            .get(symbol)
            .copied()
            .unwrap_or(self.default)
    }

    pub fn overrides(&self) -> &BTreeMap<String, (f64, f64)> {
        &self.overrides
    }

    /// One sample point over the given symbols.
    pub fn sample<F: Real>(
        &self,
        symbols: &BTreeSet<String>,
        rng: &mut ChaCha8Rng,
    ) -> Bindings<F> {
        let mut bindings = Bindings::new();
        for name in symbols {
            let (lo, hi) = self.interval(name);
            let u: f64 = rng.gen();
            bindings.set(name.clone(), F::from_f64_lossy(lo + (hi - lo) * u));
        }
        bindings
    }
}

/// Verification configuration: sampling domains, sample count, tolerance
/// and the seed every check derives its randomness from.
#[derive(Debug, Clone)]
pub struct CheckOpts {
    pub sampler: DomainSampler,
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for CheckOpts {
    fn default() -> Self {
        CheckOpts {
            sampler: DomainSampler::new(),
            samples: 200,
            tol: 1e-8,
            seed: 0,
        }
    }
}

impl CheckOpts {
    pub fn with_sampler(sampler: DomainSampler) -> Self {
        CheckOpts {
            sampler,
            ..CheckOpts::default()
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        rng(self.seed)
    }
}

/// Runs `body` on up to `points` sampled bindings, resampling on domain
/// errors with a budget of `100 * points` attempts.
pub fn for_sampled_points<F, T>(
    sampler: &DomainSampler,
    symbols: &BTreeSet<String>,
    points: usize,
    rng: &mut ChaCha8Rng,
    mut body: impl FnMut(&Bindings<F>) -> Result<Option<T>>,
) -> Result<Option<T>>
where
    F: Real,
{
    assert!(points >= 1, "at least one sample point");
    let budget = 100 * points;
    let mut attempts = 0;
    let mut accepted = 0;
    while accepted < points {
        if attempts >= budget {
            return Err(Error::SamplingExhausted { attempts });
        }
        attempts += 1;
        let bindings = sampler.sample::<F>(symbols, rng);
        match body(&bindings) {
            Ok(Some(result)) => return Ok(Some(result)),
            Ok(None) => accepted += 1,
            Err(Error::Domain(_)) => continue,
            Err(other) => return Err(other),
        }
    }
    Ok(None)
}

/// Numeric equivalence: true iff `|e1 - e2| <= tol * (1 + max(|e1|, |e2|))`
/// at every sampled point. Points where either side leaves its domain are
/// resampled; exceeding the resampling budget is [`Error::SamplingExhausted`].
pub fn equivalent_numeric<F: Real>(
    e1: &Expr,
    e2: &Expr,
    sampler: &DomainSampler,
    points: usize,
    tol: F,
    rng: &mut ChaCha8Rng,
) -> Result<bool> {
    let mut symbols = e1.free_symbols();
    symbols.extend(e2.free_symbols());
    let witness = for_sampled_points::<F, ()>(sampler, &symbols, points, rng, |bindings| {
        let v1 = e1.eval(bindings)?;
        let v2 = e2.eval(bindings)?;
        let scale = F::one() + v1.abs().max(v2.abs());
        if (v1 - v2).abs() <= tol * scale {
            Ok(None)
        } else {
            Ok(Some(()))
        }
    })?;
    Ok(witness.is_none())
}

/// Max absolute deviation `|e1 - e2|` over the sampled points, for
/// diagnostic reports.
pub fn max_deviation<F: Real>(
    e1: &Expr,
    e2: &Expr,
    sampler: &DomainSampler,
    points: usize,
    rng: &mut ChaCha8Rng,
) -> Result<F> {
    let mut symbols = e1.free_symbols();
    symbols.extend(e2.free_symbols());
    let mut worst = F::zero();
    for_sampled_points::<F, ()>(sampler, &symbols, points, rng, |bindings| {
        let v1 = e1.eval(bindings)?;
        let v2 = e2.eval(bindings)?;
        worst = worst.max((v1 - v2).abs());
        Ok(None)
    })?;
    Ok(worst)
}
