//! Satisfying-set selection and reconstruction coefficients.

use std::collections::BTreeSet;

use super::{AccessMatrix, Attribute, PolicyError, PolicyNode};
use crate::groups::{Backend, FieldElem};

/// Reconstruction coefficients `omega_j` keyed by row, sorted by row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconPlan<S> {
    pub coeffs: Vec<(usize, S)>,
}

impl<S: FieldElem> ReconPlan<S> {
    pub fn rows(&self) -> Vec<usize> {
        self.coeffs.iter().map(|(r, _)| *r).collect()
    }

    pub fn coeff(&self, row: usize) -> Option<S> {
        self.coeffs.iter().find(|(r, _)| *r == row).map(|(_, c)| *c)
    }

    /// `sum omega_j * lambda_j`.
    pub fn combine(&self, shares: &[S], zero: S) -> S {
        self.coeffs
            .iter()
            .fold(zero, |acc, (r, c)| acc + *c * shares[*r])
    }

    /// Checks `sum omega_j * M_j = (1, 0, ..., 0)` over the backend field.
    pub fn spans_target<B: Backend<Scalar = S>>(&self, backend: &B, matrix: &AccessMatrix) -> bool {
        (0..matrix.num_cols()).all(|col| {
            let sum = self
                .coeffs
                .iter()
                .fold(backend.scalar_from_u64(0), |acc, (r, c)| {
                    acc + *c * backend.scalar_from_u64(matrix.row(*r)[col])
                });
            sum == backend.scalar_from_u64(u64::from(col == 0))
        })
    }
}

/// Children chosen at each gate, with their 1-based interpolation points.
enum Selection {
    Leaf(usize),
    Gate(Vec<(u64, Selection)>),
}

impl Selection {
    fn rows(&self, out: &mut Vec<usize>) {
        match self {
            Selection::Leaf(r) => out.push(*r),
            Selection::Gate(ch) => ch.iter().for_each(|(_, s)| s.rows(out)),
        }
    }
}

/// Walks the effective tree, choosing the first `t` satisfied children at
/// each gate. On failure records the first failing gate in post-order.
fn select<F: Fn(usize) -> bool>(
    node: &PolicyNode,
    next_row: &mut usize,
    has: &F,
    first_fail: &mut Option<String>,
) -> Option<Selection> {
    match node {
        PolicyNode::Leaf(_) => {
            let row = *next_row;
            *next_row += 1;
            has(row).then_some(Selection::Leaf(row))
        }
        PolicyNode::Gate {
            threshold,
            children,
        } => {
            // Every child is visited so the row counter stays aligned.
            let results: Vec<_> = children
                .iter()
                .map(|c| select(c, next_row, has, first_fail))
                .collect();
            let chosen: Vec<_> = results
                .into_iter()
                .enumerate()
                .filter_map(|(i, r)| r.map(|r| (i as u64 + 1, r)))
                .take(*threshold)
                .collect();
            if chosen.len() < *threshold {
                first_fail.get_or_insert_with(|| node.to_string());
                return None;
            }
            Some(Selection::Gate(chosen))
        }
    }
}

fn walk<F: Fn(usize) -> bool>(matrix: &AccessMatrix, has: F) -> Result<Selection, PolicyError> {
    let mut next_row = 0;
    let mut first_fail = None;
    let tree = matrix.effective_tree();
    select(&tree, &mut next_row, &has, &mut first_fail).ok_or_else(|| {
        PolicyError::PolicyNotSatisfied {
            gate: first_fail.unwrap_or_else(|| tree.to_string()),
        }
    })
}

fn lagrange_coeffs<B: Backend>(
    backend: &B,
    sel: &Selection,
    acc: B::Scalar,
    out: &mut Vec<(usize, B::Scalar)>,
) -> Result<(), PolicyError> {
    match sel {
        Selection::Leaf(r) => out.push((*r, acc)),
        Selection::Gate(chosen) => {
            let xs: Vec<u64> = chosen.iter().map(|(x, _)| *x).collect();
            for (x, child) in chosen {
                // Only fails when child indices collide mod a tiny debug prime.
                let d = lagrange_at_zero(backend, *x, &xs).ok_or(PolicyError::PolicyTooLarge)?;
                lagrange_coeffs(backend, child, acc * d, out)?;
            }
        }
    }
    Ok(())
}

/// Minimal-by-construction row set satisfying the matrix for the given
/// attributes. The protection row counts only when `has_protection`.
pub fn satisfying_rows(
    matrix: &AccessMatrix,
    attrs: &BTreeSet<Attribute>,
    has_protection: bool,
) -> Result<Vec<usize>, PolicyError> {
    let prot = matrix.protection_row();
    let picked = walk(matrix, |row| {
        if row == prot {
            has_protection
        } else {
            attrs.contains(matrix.rho(row))
        }
    })?;
    let mut rows = Vec::new();
    picked.rows(&mut rows);
    rows.sort_unstable();
    Ok(rows)
}

/// Whether the row set satisfies the threshold tree.
pub fn is_authorized(matrix: &AccessMatrix, rows: &BTreeSet<usize>) -> bool {
    walk(matrix, |row| rows.contains(&row)).is_ok()
}

/// `Delta_{i,S}(0) = prod_{j in S, j != i} (0 - x_j) / (x_i - x_j)`.
///
/// Returns `None` if `i` is not in `set` or two points collide mod p.
pub fn lagrange_at_zero<B: Backend>(backend: &B, i: u64, set: &[u64]) -> Option<B::Scalar> {
    if !set.contains(&i) {
        return None;
    }
    let xi = backend.scalar_from_u64(i);
    let mut num = backend.scalar_one();
    let mut den = backend.scalar_one();
    for &j in set.iter().filter(|&&j| j != i) {
        let xj = backend.scalar_from_u64(j);
        num = num * (-xj);
        den = den * (xi - xj);
    }
    Some(num * den.invert()?)
}

/// Coefficients from per-gate Lagrange interpolation over the tree.
pub fn recon_coefficients<B: Backend>(
    backend: &B,
    matrix: &AccessMatrix,
    rows: &BTreeSet<usize>,
) -> Result<ReconPlan<B::Scalar>, PolicyError> {
    let picked = walk(matrix, |row| rows.contains(&row)).map_err(|_| PolicyError::NotAuthorized)?;
    let mut coeffs = Vec::new();
    lagrange_coeffs(backend, &picked, backend.scalar_one(), &mut coeffs)?;
    coeffs.sort_by_key(|(r, _)| *r);
    Ok(ReconPlan { coeffs })
}

/// Coefficients by solving `omega^T M_R = e_1` with Gaussian elimination.
///
/// Free variables are set to zero. Fails with `NotAuthorized` if `e_1` is
/// outside the row span of `M_R`.
pub fn recon_coefficients_solve<B: Backend>(
    backend: &B,
    matrix: &AccessMatrix,
    rows: &BTreeSet<usize>,
) -> Result<ReconPlan<B::Scalar>, PolicyError> {
    let rows: Vec<usize> = rows
        .iter()
        .copied()
        .filter(|&r| r < matrix.num_rows())
        .collect();
    let k = rows.len();
    let c = matrix.num_cols();
    let zero = backend.scalar_from_u64(0);
    // One equation per column; unknowns are the k row coefficients.
    let mut a: Vec<Vec<B::Scalar>> = (0..c)
        .map(|col| {
            let mut eq: Vec<B::Scalar> = rows
                .iter()
                .map(|&r| backend.scalar_from_u64(matrix.row(r)[col]))
                .collect();
            eq.push(backend.scalar_from_u64(u64::from(col == 0)));
            eq
        })
        .collect();

    let mut pivots = Vec::new();
    let mut rank = 0;
    for var in 0..k {
        let Some(p) = (rank..c).find(|&i| !a[i][var].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let inv = a[rank][var].invert().expect("pivot is nonzero");
        for v in a[rank].iter_mut() {
            *v = *v * inv;
        }
        let pivot_row = a[rank].clone();
        for (i, eq) in a.iter_mut().enumerate() {
            if i != rank && !eq[var].is_zero() {
                let f = eq[var];
                for (v, pv) in eq.iter_mut().zip(&pivot_row) {
                    *v = *v - f * *pv;
                }
            }
        }
        pivots.push(var);
        rank += 1;
    }
    if a[rank..].iter().any(|eq| !eq[k].is_zero()) {
        return Err(PolicyError::NotAuthorized);
    }
    let mut omega = vec![zero; k];
    for (i, &var) in pivots.iter().enumerate() {
        omega[var] = a[i][k];
    }
    Ok(ReconPlan {
        coeffs: rows.into_iter().zip(omega).collect(),
    })
}
