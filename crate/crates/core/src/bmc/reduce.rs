// SPDX-License-Identifier: Apache-2.0

//! Cone-of-influence reduction for a set of check targets.

use std::collections::{BTreeSet, HashMap};

use crate::netlist::{coi, support, ExprId, NetId, TransitionSystem};

/// A reduced system and the targets translated into it.
#[derive(Debug, Clone)]
pub struct Reduced {
    pub ts: TransitionSystem,
    pub targets: Vec<ExprId>,
    /// Old net id to new net id, for the nets that survived.
    pub net_map: HashMap<NetId, NetId>,
}

/// Substitutes `pinned` input values, then keeps only the cone of influence
/// of the targets and of every assumption. Assumptions are kept whole: an
/// assumption outside the targets' cone can still rule traces out.
pub fn coi_reduce(ts: &TransitionSystem, targets: &[ExprId], pinned: &HashMap<NetId, u64>) -> Reduced {
    let all: BTreeSet<NetId> = ts.nets().map(|(id, _)| id).collect();
    let (folded, map1) = ts.restrict(&all, pinned);
    let mut folded = folded;
    let t1: Vec<ExprId> = targets
        .iter()
        .map(|&e| ts.translate_expr(e, &mut folded, &map1, pinned).expect("all nets kept"))
        .collect();
    let mut roots: BTreeSet<NetId> = BTreeSet::new();
    for &e in t1.iter().chain(folded.assumptions()) {
        roots.extend(support(&folded, e));
    }
    let keep = coi(&folded, &roots.into_iter().collect::<Vec<_>>());
    let (mut out, map2) = folded.restrict(&keep, &HashMap::new());
    let t2: Vec<ExprId> = t1
        .iter()
        .map(|&e| folded.translate_expr(e, &mut out, &map2, &HashMap::new()).expect("target cone kept"))
        .collect();
    let net_map = map1.iter().filter_map(|(old, mid)| map2.get(mid).map(|&new| (*old, new))).collect();
    Reduced { ts: out, targets: t2, net_map }
}
