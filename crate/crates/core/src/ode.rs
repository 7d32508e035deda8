//! Adaptive Dormand-Prince 5(4) integration with dense output.
//!
//! One explicit embedded Runge-Kutta pair covers every numeric-integration
//! need in the crate: characteristic flows, quadratures for companion
//! functions, and the independent cross-check integration of Riccati
//! systems. Dense output (the classic fifth-order interpolant) supports
//! event location by bisection inside accepted steps.

use crate::error::{Error, Result};
use crate::scalar::Real;

// Butcher tableau of the Dormand-Prince 5(4) pair.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// error coefficients (5th-order weights minus the embedded 4th-order ones)
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// dense-output coefficients
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// An accepted step with its dense interpolant.
#[derive(Debug, Clone)]
pub struct DenseStep<F> {
    pub t0: F,
    pub t1: F,
    pub y0: Vec<F>,
    pub y1: Vec<F>,
    rcont: [Vec<F>; 5],
}

impl<F: Real> DenseStep<F> {
    /// Solution value at `t`, which must lie within the step.
    pub fn interpolate(&self, t: F) -> Vec<F> {
        let h = self.t1 - self.t0;
        let theta = if h == F::zero() {
            F::zero()
        } else {
            (t - self.t0) / h
        };
        let one_minus = F::one() - theta;
        (0..self.y0.len())
            .map(|i| {
                self.rcont[0][i]
                    + theta
                        * (self.rcont[1][i]
                            + one_minus
                                * (self.rcont[2][i]
                                    + theta * (self.rcont[3][i] + one_minus * self.rcont[4][i])))
            })
            .collect()
    }
}

/// What the step observer wants next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Continue,
    Stop,
}

/// Adaptive integrator configuration.
#[derive(Debug, Clone)]
pub struct Dopri5<F> {
    pub rtol: F,
    pub atol: F,
    pub max_steps: usize,
}

impl<F: Real> Default for Dopri5<F> {
    fn default() -> Self {
        Dopri5 {
            rtol: F::from_f64_lossy(1e-10),
            atol: F::from_f64_lossy(1e-12),
            max_steps: 1_000_000,
        }
    }
}

impl<F: Real> Dopri5<F> {
    pub fn with_tolerance(rtol: F) -> Self {
        Dopri5 {
            rtol,
            atol: rtol * F::from_f64_lossy(1e-2),
            ..Dopri5::default()
        }
    }

    /// Integrates `y' = rhs(t, y)` from `t0` to `t_end`, invoking the
    /// observer after each accepted step. Returns the final `(t, y)` —
    /// `t_end` unless the observer stopped early.
    pub fn integrate(
        &self,
        mut rhs: impl FnMut(F, &[F], &mut [F]) -> Result<()>,
        t0: F,
        y0: &[F],
        t_end: F,
        mut observer: impl FnMut(&DenseStep<F>) -> Result<StepOutcome>,
    ) -> Result<(F, Vec<F>)> {
        let dim = y0.len();
        let mut t = t0;
        let mut y = y0.to_vec();
        if t_end == t0 {
            return Ok((t, y));
        }
        let span = t_end - t0;
        let direction = if span > F::zero() { F::one() } else { -F::one() };
        let mut h = span * F::from_f64_lossy(1e-3);
        let mut k: Vec<Vec<F>> = vec![vec![F::zero(); dim]; 7];
        rhs(t, &y, &mut k[0])?;
        for _ in 0..self.max_steps {
            if (t - t_end) * direction >= F::zero() {
                return Ok((t, y));
            }
            if (t + h - t_end) * direction > F::zero() {
                h = t_end - t;
            }
            let min_step = F::from_f64_lossy(1e-14) * (F::one() + t.abs());
            if h.abs() < min_step {
                return Err(Error::Integration("step size underflow".to_string()));
            }
            // stages
            let mut failed_domain = false;
            let mut ytmp = vec![F::zero(); dim];
            for stage in 0..6 {
                for i in 0..dim {
                    let mut acc = F::zero();
                    for (j, kj) in k.iter().enumerate().take(stage + 1) {
                        let a = F::from_f64_lossy(A[stage][j]);
                        if a != F::zero() {
                            acc = acc + a * kj[i];
                        }
                    }
                    ytmp[i] = y[i] + h * acc;
                }
                let ts = t + F::from_f64_lossy(C[stage]) * h;
                let (_, tail) = k.split_at_mut(stage + 1);
                if let Err(err) = rhs(ts, &ytmp, &mut tail[0]) {
                    match err {
                        Error::Domain(_) => {
                            failed_domain = true;
                            break;
                        }
                        other => return Err(other),
                    }
                }
            }
            if failed_domain {
                // the trial step left the rhs domain: shrink and retry
                h = h * F::from_f64_lossy(0.25);
                continue;
            }
            // ytmp now holds y1 (stage 6 used the 5th-order weights)
            let y1 = ytmp.clone();
            // k[6] = f(t1, y1) computed in the last stage loop above
            let mut err_norm = F::zero();
            for i in 0..dim {
                let mut err_acc = F::zero();
                for (j, kj) in k.iter().enumerate() {
                    let e = F::from_f64_lossy(E[j]);
                    if e != F::zero() {
                        err_acc = err_acc + e * kj[i];
                    }
                }
                let err_comp = h * err_acc;
                let sc = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                let ratio = err_comp / sc;
                err_norm = err_norm + ratio * ratio;
            }
            err_norm = (err_norm / F::from_f64_lossy(dim as f64)).sqrt();
            if err_norm <= F::one() {
                // accept
                let t1 = t + h;
                let step = self.dense_step(t, t1, &y, &y1, &k, h);
                let outcome = observer(&step)?;
                t = t1;
                y = y1;
                k[0] = k[6].clone(); // FSAL
                if outcome == StepOutcome::Stop {
                    return Ok((t, y));
                }
            }
            let factor = F::from_f64_lossy(0.9)
                * err_norm.max(F::from_f64_lossy(1e-10)).powf(F::from_f64_lossy(-0.2));
            let factor = factor
                .max(F::from_f64_lossy(0.2))
                .min(F::from_f64_lossy(5.0));
            h = h * factor;
        }
        Err(Error::Integration("step budget exhausted".to_string()))
    }

    fn dense_step(&self, t0: F, t1: F, y0: &[F], y1: &[F], k: &[Vec<F>], h: F) -> DenseStep<F> {
        let dim = y0.len();
        let mut rcont: [Vec<F>; 5] = [
            vec![F::zero(); dim],
            vec![F::zero(); dim],
            vec![F::zero(); dim],
            vec![F::zero(); dim],
            vec![F::zero(); dim],
        ];
        for i in 0..dim {
            let ydiff = y1[i] - y0[i];
            let bspl = h * k[0][i] - ydiff;
            rcont[0][i] = y0[i];
            rcont[1][i] = ydiff;
            rcont[2][i] = bspl;
            rcont[3][i] = ydiff - h * k[6][i] - bspl;
            let mut acc = F::zero();
            for (j, kj) in k.iter().enumerate() {
                let d = F::from_f64_lossy(D[j]);
                if d != F::zero() {
                    acc = acc + d * kj[i];
                }
            }
            rcont[4][i] = h * acc;
        }
        DenseStep {
            t0,
            t1,
            y0: y0.to_vec(),
            y1: y1.to_vec(),
            rcont,
        }
    }

    /// Convenience: integrate to `t_end` and return the final state.
    pub fn solve(
        &self,
        rhs: impl FnMut(F, &[F], &mut [F]) -> Result<()>,
        t0: F,
        y0: &[F],
        t_end: F,
    ) -> Result<Vec<F>> {
        let (_, y) = self.integrate(rhs, t0, y0, t_end, |_| Ok(StepOutcome::Continue))?;
        Ok(y)
    }

    /// Definite integral of a scalar function by integrating it as an ODE.
    pub fn quadrature(
        &self,
        mut integrand: impl FnMut(F) -> Result<F>,
        a: F,
        b: F,
    ) -> Result<F> {
        let y = self.solve(
            |t, _y, dy| {
                dy[0] = integrand(t)?;
                Ok(())
            },
            a,
            &[F::zero()],
            b,
        )?;
        Ok(y[0])
    }
}
