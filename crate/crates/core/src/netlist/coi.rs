// SPDX-License-Identifier: Apache-2.0

//! Cone-of-influence analysis.

use std::collections::{BTreeSet, HashSet};

use super::{ExprId, NetId, NetKind, Node, TransitionSystem};

/// Nets referenced directly by `e` (wire references are not expanded).
pub fn support(ts: &TransitionSystem, e: ExprId) -> BTreeSet<NetId> {
    let mut out = BTreeSet::new();
    let mut seen = HashSet::new();
    let mut stack = vec![e];
    while let Some(x) = stack.pop() {
        if !seen.insert(x) {
            continue;
        }
        let node = *ts.pool().node(x);
        if let Node::Ref(n) = node {
            out.insert(n);
        }
        stack.extend(node.children());
    }
    out
}

/// Least fixpoint of structural dependency from `roots` through wire
/// definitions and register next-state functions. Registers outside the
/// result cannot influence any root.
pub fn coi(ts: &TransitionSystem, roots: &[NetId]) -> BTreeSet<NetId> {
    let mut result: BTreeSet<NetId> = BTreeSet::new();
    let mut work: Vec<NetId> = roots.to_vec();
    while let Some(n) = work.pop() {
        if !result.insert(n) {
            continue;
        }
        let def = match ts.net(n).kind {
            NetKind::Input => None,
            NetKind::Wire => ts.wire_def(n),
            NetKind::Register => ts.register_slot(n).and_then(|s| ts.registers()[s].next),
        };
        if let Some(d) = def {
            for m in support(ts, d) {
                if !result.contains(&m) {
                    work.push(m);
                }
            }
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_and_exclusion() {
        let mut ts = TransitionSystem::new();
        let r1 = ts.declare_register("r1", 4, 0).unwrap();
        let r2 = ts.declare_register("r2", 4, 0).unwrap();
        let e1 = ts.sig(r1);
        let w1 = ts.add_wire("w1", e1).unwrap();
        let ew = ts.sig(w1);
        let root = ts.declare_register("root", 4, 0).unwrap();
        ts.set_next(root, ew).unwrap();
        ts.set_next(r1, e1).unwrap();
        let e2 = ts.sig(r2);
        ts.set_next(r2, e2).unwrap();
        let c = coi(&ts, &[root]);
        assert!(c.contains(&r1) && c.contains(&w1));
        assert!(!c.contains(&r2));
    }
}
