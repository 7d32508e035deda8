//! Small symbolic matrices and numeric rank.
//!
//! Determinants are computed by cofactor expansion: entries are exact
//! symbolic expressions and every matrix in this toolkit is tiny, but the
//! cost is O(p!), so the size is capped at 6.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::sample::{for_sampled_points, ChaCha8Rng, DomainSampler};
use nalgebra::DMatrix;
use std::collections::BTreeSet;

/// Hard cap on cofactor expansion size.
pub const MAX_DET_SIZE: usize = 6;

/// Relative singular-value threshold used by rank checks.
pub const RANK_THRESHOLD: f64 = 1e-8;

pub type ExprMatrix = Vec<Vec<Expr>>;

fn check_square(matrix: &ExprMatrix) -> Result<usize> {
    let p = matrix.len();
    if p == 0 || p > MAX_DET_SIZE {
        return Err(Error::DeterminantTooLarge(p));
    }
    for row in matrix {
        if row.len() != p {
            return Err(Error::WrongArity {
                what: "matrix row",
                expected: p,
                got: row.len(),
            });
        }
    }
    Ok(p)
}

/// Determinant by cofactor expansion along the first row.
pub fn determinant(matrix: &ExprMatrix) -> Result<Expr> {
    let p = check_square(matrix)?;
    Ok(det_inner(matrix, p))
}

fn det_inner(matrix: &ExprMatrix, p: usize) -> Expr {
    if p == 1 {
        return matrix[0][0].clone();
    }
    let mut terms = Vec::with_capacity(p);
    for col in 0..p {
        let entry = &matrix[0][col];
        if entry.is_zero() {
            continue;
        }
        let minor: ExprMatrix = matrix[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != col)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let cofactor = det_inner(&minor, p - 1);
        let term = Expr::product(vec![entry.clone(), cofactor]);
        terms.push(if col % 2 == 0 { term } else { Expr::neg(term) });
    }
    Expr::sum(terms)
}

/// Solves `M x = rhs` by Cramer's rule; each component is a single
/// quotient of determinants. Singularity is the caller's concern.
pub fn cramer_solve(matrix: &ExprMatrix, rhs: &[Expr]) -> Result<Vec<Expr>> {
    let p = check_square(matrix)?;
    if rhs.len() != p {
        return Err(Error::WrongArity {
            what: "right-hand side",
            expected: p,
            got: rhs.len(),
        });
    }
    let det = determinant(matrix)?;
    let mut solution = Vec::with_capacity(p);
    for k in 0..p {
        let mut replaced = matrix.clone();
        for (row, value) in replaced.iter_mut().zip(rhs.iter()) {
            row[k] = value.clone();
        }
        let numer = determinant(&replaced)?;
        solution.push(numer / det.clone());
    }
    Ok(solution)
}

/// Inverse via the adjugate; entries are quotients by the determinant.
pub fn inverse(matrix: &ExprMatrix) -> Result<ExprMatrix> {
    let p = check_square(matrix)?;
    let det = determinant(matrix)?;
    let mut inv = vec![vec![Expr::zero(); p]; p];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            if p == 1 {
                *slot = Expr::one() / det.clone();
                continue;
            }
            // cofactor of (j, i): adjugate is the transposed cofactor matrix
            let minor: ExprMatrix = matrix
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != j)
                .map(|(_, row)| {
                    row.iter()
                        .enumerate()
                        .filter(|(c, _)| *c != i)
                        .map(|(_, e)| e.clone())
                        .collect()
                })
                .collect();
            let cof = det_inner(&minor, p - 1);
            let signed = if (i + j) % 2 == 0 {
                cof
            } else {
                Expr::neg(cof)
            };
            *slot = signed / det.clone();
        }
    }
    Ok(inv)
}

pub fn identity(p: usize) -> ExprMatrix {
    (0..p)
        .map(|i| {
            (0..p)
                .map(|j| if i == j { Expr::one() } else { Expr::zero() })
                .collect()
        })
        .collect()
}

pub fn mat_mul(a: &ExprMatrix, b: &ExprMatrix) -> ExprMatrix {
    let rows = a.len();
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| {
                    Expr::sum(
                        (0..inner)
                            .map(|k| Expr::product(vec![a[i][k].clone(), b[k][j].clone()]))
                            .collect(),
                    )
                })
                .collect()
        })
        .collect()
}

pub fn mat_add(a: &ExprMatrix, b: &ExprMatrix) -> ExprMatrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| {
            ra.iter()
                .zip(rb)
                .map(|(x, y)| x.clone() + y.clone())
                .collect()
        })
        .collect()
}

pub fn mat_sub(a: &ExprMatrix, b: &ExprMatrix) -> ExprMatrix {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| {
            ra.iter()
                .zip(rb)
                .map(|(x, y)| x.clone() - y.clone())
                .collect()
        })
        .collect()
}

/// Rank of a numeric matrix: singular values above `rel_tol * sigma_max`
/// count.
pub fn numeric_rank(matrix: DMatrix<f64>, rel_tol: f64) -> usize {
    let svd = matrix.svd(false, false);
    let largest = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if largest == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|s| **s > rel_tol * largest)
        .count()
}

/// Fraction of sampled points where the Jacobian of `functions` with
/// respect to `coordinates` has rank `functions.len()`.
pub fn full_rank_fraction(
    functions: &[Expr],
    coordinates: &[String],
    sampler: &DomainSampler,
    points: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let rows = functions.len();
    let cols = coordinates.len();
    let partials: Vec<Vec<Expr>> = functions
        .iter()
        .map(|f| coordinates.iter().map(|c| f.diff(c)).collect())
        .collect();
    let mut symbols: BTreeSet<String> = BTreeSet::new();
    for row in &partials {
        for e in row {
            symbols.extend(e.free_symbols());
        }
    }
    for f in functions {
        symbols.extend(f.free_symbols());
    }
    let mut full = 0usize;
    for_sampled_points::<f64, ()>(sampler, &symbols, points, rng, |bindings| {
        let mut data = Vec::with_capacity(rows * cols);
        for row in &partials {
            for e in row {
                data.push(e.eval(bindings)?);
            }
        }
        let matrix = DMatrix::from_row_slice(rows, cols, &data);
        if numeric_rank(matrix, RANK_THRESHOLD) == rows {
            full += 1;
        }
        Ok(None)
    })?;
    Ok(full as f64 / points as f64)
}
