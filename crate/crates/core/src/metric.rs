//! How complicated an expression looks.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::ast::{opaque_identifiers, Expr, NodeKind, GREEK};

pub const NODE_WEIGHT: u64 = 1;
pub const GREEK_WEIGHT: u64 = 2;
pub const BIGOP_WEIGHT: u64 = 3;
pub const DEPTH_WEIGHT: u64 = 2;
pub const DIVERSITY_WEIGHT: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ComplexityScore {
    pub node_count: u64,
    pub greek_count: u64,
    pub bigop_count: u64,
    pub max_depth: u64,
    pub op_diversity: u64,
    pub total: u64,
}

impl ComplexityScore {
    fn weighted(mut self) -> Self {
        self.total = NODE_WEIGHT * self.node_count
            + GREEK_WEIGHT * self.greek_count
            + BIGOP_WEIGHT * self.bigop_count
            + DEPTH_WEIGHT * self.max_depth
            + DIVERSITY_WEIGHT * self.op_diversity;
        self
    }
}

fn greek_in_opaque(raw: &str) -> u64 {
    opaque_identifiers(raw).iter().filter(|id| id.strip_prefix('\\').is_some_and(|name| GREEK.contains(&name))).count()
        as u64
}

pub fn score(e: &Expr) -> ComplexityScore {
    let mut s = ComplexityScore::default();
    let mut kinds = BTreeSet::new();
    e.visit(&mut |node, depth| {
        s.node_count += 1;
        s.max_depth = s.max_depth.max(depth as u64);
        let kind = node.kind();
        kinds.insert(kind);
        match node {
            Expr::BigOp(_) | Expr::Partial { .. } => s.bigop_count += 1,
            Expr::Opaque(raw) => s.greek_count += greek_in_opaque(raw),
            _ => {}
        }
        if kind == NodeKind::Greek {
            s.greek_count += 1;
        }
    });
    s.op_diversity = kinds.len() as u64;
    s.weighted()
}

/// Orders by total, then big operators, Greek letters and node count.
pub fn compare(before: &ComplexityScore, after: &ComplexityScore) -> Ordering {
    (before.total, before.bigop_count, before.greek_count, before.node_count).cmp(&(
        after.total,
        after.bigop_count,
        after.greek_count,
        after.node_count,
    ))
}
