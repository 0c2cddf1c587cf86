//! Monotone access policies and their LSSS matrices.
//!
//! A policy is a threshold tree written in a small DSL:
//!
//! ```text
//! expr := attr | (expr AND expr ...) | (expr OR expr ...) | kofn(t, expr, ...)
//! ```
//!
//! Compilation always wraps the user tree as `AND(b, tree)` where `b` is the
//! reserved protection attribute, so every authorized row set contains the
//! protection row.

mod matrix;
mod parse;
mod recon;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use matrix::{build_matrix, generate_shares, generate_shares_with, AccessMatrix, ShareVector};
pub use parse::parse_policy;
pub use recon::{
    is_authorized, lagrange_at_zero, recon_coefficients, recon_coefficients_solve, satisfying_rows,
    ReconPlan,
};

/// Name of the protection attribute. Reserved: user policies and attribute
/// universes may not use it.
pub const PROTECTION_ATTRIBUTE: &str = "b";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("syntax error at line {line}, column {column}: expected one of {}", .expected.join(", "))]
    ParseError {
        line: usize,
        column: usize,
        expected: Vec<String>,
    },
    #[error("attribute name {0:?} is reserved")]
    ReservedAttribute(String),
    #[error("invalid attribute name {0:?}")]
    InvalidAttribute(String),
    #[error("invalid threshold {threshold} for a gate with {children} children")]
    InvalidThreshold { threshold: usize, children: usize },
    #[error("policy too large: matrix entries overflow")]
    PolicyTooLarge,
    #[error("policy not satisfied at gate {gate}")]
    PolicyNotSatisfied { gate: String },
    #[error("row set is not authorized")]
    NotAuthorized,
}

impl PolicyError {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyError::ParseError { .. } => "ParseError",
            PolicyError::ReservedAttribute(_) => "ReservedAttribute",
            PolicyError::InvalidAttribute(_) => "InvalidAttribute",
            PolicyError::InvalidThreshold { .. } => "InvalidThreshold",
            PolicyError::PolicyTooLarge => "PolicyTooLarge",
            PolicyError::PolicyNotSatisfied { .. } => "PolicyNotSatisfied",
            PolicyError::NotAuthorized => "NotAuthorized",
        }
    }
}

/// A case-sensitive attribute name matching `[A-Za-z0-9_]+`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Attribute(String);

impl Attribute {
    /// Validates a user-facing attribute; rejects the protection attribute.
    pub fn new(name: impl Into<String>) -> Result<Self, PolicyError> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(PolicyError::InvalidAttribute(name));
        }
        if name == PROTECTION_ATTRIBUTE {
            return Err(PolicyError::ReservedAttribute(name));
        }
        Ok(Attribute(name))
    }

    pub fn protection() -> Self {
        Attribute(PROTECTION_ATTRIBUTE.to_string())
    }

    pub fn is_protection(&self) -> bool {
        self.0 == PROTECTION_ATTRIBUTE
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|c| c.is_ascii_alphanumeric() || c == b'_')
}

/// Parses a comma-separated attribute list, collapsing duplicates.
pub fn parse_attribute_set(text: &str) -> Result<BTreeSet<Attribute>, PolicyError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Attribute::new)
        .collect()
}

/// Threshold tree. Children are 1-indexed when used as interpolation points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicyNode {
    Leaf(Attribute),
    Gate {
        threshold: usize,
        children: Vec<PolicyNode>,
    },
}

impl PolicyNode {
    pub fn leaf(name: &str) -> Result<Self, PolicyError> {
        Ok(PolicyNode::Leaf(Attribute::new(name)?))
    }

    pub fn gate(threshold: usize, children: Vec<PolicyNode>) -> Result<Self, PolicyError> {
        if children.is_empty() || threshold == 0 || threshold > children.len() {
            return Err(PolicyError::InvalidThreshold {
                threshold,
                children: children.len(),
            });
        }
        Ok(PolicyNode::Gate {
            threshold,
            children,
        })
    }

    pub fn and(children: Vec<PolicyNode>) -> Result<Self, PolicyError> {
        Self::gate(children.len(), children)
    }

    pub fn or(children: Vec<PolicyNode>) -> Result<Self, PolicyError> {
        Self::gate(1, children)
    }

    /// `AND` over a list of attribute names.
    pub fn all_of<S: AsRef<str>>(names: &[S]) -> Result<Self, PolicyError> {
        let leaves = names
            .iter()
            .map(|n| Self::leaf(n.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::and(leaves)
    }

    /// Leaves in depth-first order (the matrix row order, minus the
    /// protection row).
    pub fn leaves(&self) -> Vec<&Attribute> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Attribute>) {
        match self {
            PolicyNode::Leaf(a) => out.push(a),
            PolicyNode::Gate { children, .. } => {
                children.iter().for_each(|c| c.collect_leaves(out));
            }
        }
    }

    pub fn attributes(&self) -> BTreeSet<Attribute> {
        self.leaves().into_iter().cloned().collect()
    }

    pub fn depth(&self) -> usize {
        match self {
            PolicyNode::Leaf(_) => 0,
            PolicyNode::Gate { children, .. } => {
                1 + children.iter().map(PolicyNode::depth).max().unwrap_or(0)
            }
        }
    }

    /// Plain boolean evaluation of the threshold tree.
    pub fn is_satisfied_by(&self, attrs: &BTreeSet<Attribute>) -> bool {
        match self {
            PolicyNode::Leaf(a) => attrs.contains(a),
            PolicyNode::Gate {
                threshold,
                children,
            } => children.iter().filter(|c| c.is_satisfied_by(attrs)).count() >= *threshold,
        }
    }
}

impl fmt::Display for PolicyNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyNode::Leaf(a) => write!(f, "{a}"),
            PolicyNode::Gate {
                threshold,
                children,
            } => {
                let n = children.len();
                let joined = |sep: &str| {
                    children
                        .iter()
                        .map(ToString::to_string)
                        .collect::<Vec<_>>()
                        .join(sep)
                };
                if n >= 2 && *threshold == n {
                    write!(f, "({})", joined(" AND "))
                } else if n >= 2 && *threshold == 1 {
                    write!(f, "({})", joined(" OR "))
                } else {
                    write!(f, "kofn({threshold}, {})", joined(", "))
                }
            }
        }
    }
}

impl FromStr for PolicyNode {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_policy(s)
    }
}
