//! Threshold tree to LSSS matrix compilation (Vandermonde embedding).

use std::fmt::Write as _;

use rand::RngCore;

use super::{Attribute, PolicyError, PolicyNode};
use crate::groups::Backend;

/// Compiled access structure `(M, rho)` for `AND(b, policy)`.
///
/// Entries are exact non-negative integers; they are reduced into the
/// scalar field only when used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessMatrix {
    policy: PolicyNode,
    rows: Vec<Vec<u64>>,
    rho: Vec<Attribute>,
    cols: usize,
}

impl AccessMatrix {
    /// The user policy, without the protection gate.
    pub fn policy(&self) -> &PolicyNode {
        &self.policy
    }

    /// `AND(b, policy)` as a tree. Row order is its leaf order.
    pub fn effective_tree(&self) -> PolicyNode {
        PolicyNode::Gate {
            threshold: 2,
            children: vec![
                PolicyNode::Leaf(Attribute::protection()),
                self.policy.clone(),
            ],
        }
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.rows[i]
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    pub fn rho(&self, i: usize) -> &Attribute {
        &self.rho[i]
    }

    pub fn labels(&self) -> &[Attribute] {
        &self.rho
    }

    pub fn protection_row(&self) -> usize {
        0
    }

    /// Row indices whose label is an ordinary attribute.
    pub fn attribute_rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.rows.len()).filter(move |&i| i != self.protection_row())
    }

    /// Canonical text form: header, row-major entries, then `row:attr` labels.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "rows {}", self.rows.len());
        let _ = writeln!(out, "cols {}", self.cols);
        let _ = writeln!(out, "protection {}", self.protection_row());
        for row in &self.rows {
            let line = row.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
            let _ = writeln!(out, "{line}");
        }
        for (i, a) in self.rho.iter().enumerate() {
            let _ = writeln!(out, "{i}:{a}");
        }
        out
    }
}

/// Compiles `policy` into an LSSS matrix over `AND(b, policy)`.
///
/// At a t-of-n gate with vector `w`, t-1 fresh columns are allocated and
/// child i (1-based) gets `w` zero-padded, followed by `i, i^2, ..., i^(t-1)`
/// in the fresh columns.
pub fn build_matrix(policy: &PolicyNode) -> Result<AccessMatrix, PolicyError> {
    validate(policy)?;
    let mut acc = AccessMatrix {
        policy: policy.clone(),
        rows: Vec::new(),
        rho: Vec::new(),
        cols: 1,
    };
    let root = acc.effective_tree();
    compile(&root, vec![1], &mut acc)?;
    let cols = acc.cols;
    acc.rows.iter_mut().for_each(|r| r.resize(cols, 0));
    Ok(acc)
}

fn validate(node: &PolicyNode) -> Result<(), PolicyError> {
    match node {
        PolicyNode::Leaf(a) if a.is_protection() => {
            Err(PolicyError::ReservedAttribute(a.to_string()))
        }
        PolicyNode::Leaf(_) => Ok(()),
        PolicyNode::Gate {
            threshold,
            children,
        } => {
            if children.is_empty() || *threshold == 0 || *threshold > children.len() {
                return Err(PolicyError::InvalidThreshold {
                    threshold: *threshold,
                    children: children.len(),
                });
            }
            children.iter().try_for_each(validate)
        }
    }
}

fn compile(node: &PolicyNode, w: Vec<u64>, acc: &mut AccessMatrix) -> Result<(), PolicyError> {
    match node {
        PolicyNode::Leaf(a) => {
            acc.rows.push(w);
            acc.rho.push(a.clone());
            Ok(())
        }
        PolicyNode::Gate {
            threshold,
            children,
        } => {
            let base = acc.cols;
            acc.cols += threshold - 1;
            for (idx, child) in children.iter().enumerate() {
                let x = idx as u64 + 1;
                let mut v = w.clone();
                v.resize(base, 0);
                let mut power = 1u64;
                for _ in 1..*threshold {
                    power = power.checked_mul(x).ok_or(PolicyError::PolicyTooLarge)?;
                    v.push(power);
                }
                compile(child, v, acc)?;
            }
            Ok(())
        }
    }
}

/// Shares `lambda_i = M_i . u` together with the secret `u[0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareVector<S> {
    pub secret: S,
    pub shares: Vec<S>,
}

/// Shares `secret` with fresh random padding `u[1..]`.
pub fn generate_shares<B: Backend, R: RngCore + ?Sized>(
    backend: &B,
    matrix: &AccessMatrix,
    secret: B::Scalar,
    rng: &mut R,
) -> ShareVector<B::Scalar> {
    let mut u = Vec::with_capacity(matrix.num_cols());
    u.push(secret);
    u.extend((1..matrix.num_cols()).map(|_| backend.random_scalar(rng)));
    generate_shares_with(backend, matrix, &u)
}

/// Shares with an explicit vector `u`, `u[0]` being the secret.
///
/// # Panics
/// If `u.len()` differs from the column count.
pub fn generate_shares_with<B: Backend>(
    backend: &B,
    matrix: &AccessMatrix,
    u: &[B::Scalar],
) -> ShareVector<B::Scalar> {
    assert_eq!(u.len(), matrix.num_cols(), "share vector length");
    let shares = matrix
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .zip(u)
                .filter(|(&m, _)| m != 0)
                .fold(backend.scalar_from_u64(0), |acc, (&m, &ui)| {
                    acc + backend.scalar_from_u64(m) * ui
                })
        })
        .collect();
    ShareVector {
        secret: u[0],
        shares,
    }
}
