// SPDX-License-Identifier: Apache-2.0

//! Concrete two-state semantics.

use std::collections::HashMap;

use super::{eval_node, ExprId, NetId, Node, TransitionSystem};

/// Post-order over the expressions reachable from `roots`, resolving wire
/// references to their definitions. Every expression appears after all of its
/// dependencies.
pub(crate) fn schedule(ts: &TransitionSystem, roots: &[ExprId]) -> Vec<ExprId> {
    let mut order = Vec::new();
    let mut state = vec![0u8; ts.pool().len()];
    let mut stack: Vec<(ExprId, bool)> = roots.iter().rev().map(|&r| (r, false)).collect();
    while let Some((e, expanded)) = stack.pop() {
        let s = &mut state[e.index()];
        if expanded {
            if *s == 1 {
                *s = 2;
                order.push(e);
            }
            continue;
        }
        if *s != 0 {
            continue;
        }
        *s = 1;
        stack.push((e, true));
        for d in ts.deps(e) {
            if state[d.index()] == 0 {
                stack.push((d, false));
            }
        }
    }
    order
}

/// Compiled evaluator for one system. Each call to [`evaluate`](Self::evaluate)
/// computes every wire, next-state value and assumption for one cycle.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    ts: &'a TransitionSystem,
    order: Vec<ExprId>,
    vals: Vec<u64>,
    net_vals: Vec<u64>,
    next_roots: Vec<ExprId>,
}

impl<'a> Simulator<'a> {
    pub fn new(ts: &'a TransitionSystem) -> Self {
        Self::with_roots(ts, &[])
    }

    /// Also schedules `extra` expressions (e.g. property obligations) so that
    /// [`expr`](Self::expr) can read them after each evaluation.
    pub fn with_roots(ts: &'a TransitionSystem, extra: &[ExprId]) -> Self {
        let next_roots: Vec<ExprId> = ts.registers().iter().map(|r| r.next.expect("validated system")).collect();
        let mut roots = next_roots.clone();
        roots.extend(ts.wires().iter().filter_map(|&w| ts.wire_def(w)));
        roots.extend(ts.assumptions().iter().copied());
        roots.extend(extra.iter().copied());
        let mut order = schedule(ts, &roots);
        order.shrink_to_fit();
        Simulator {
            ts,
            vals: vec![0; ts.pool().len()],
            net_vals: vec![0; ts.net_count()],
            order,
            next_roots,
        }
    }

    pub fn system(&self) -> &'a TransitionSystem {
        self.ts
    }

    /// Evaluates one cycle from `state` (register slot order) and `inputs`
    /// (input slot order).
    pub fn evaluate(&mut self, state: &[u64], inputs: &[u64]) {
        let ts = self.ts;
        for (slot, r) in ts.registers().iter().enumerate() {
            self.net_vals[r.net.index()] = state[slot] & super::mask(ts.net(r.net).width);
        }
        for (slot, &i) in ts.inputs().iter().enumerate() {
            self.net_vals[i.index()] = inputs[slot] & super::mask(ts.net(i).width);
        }
        let pool = ts.pool();
        let mut args = [0u64; 3];
        let mut aw = [0u8; 3];
        for &e in &self.order {
            let node = pool.node(e);
            let v = match *node {
                Node::Ref(n) => match ts.wire_def(n) {
                    Some(d) => {
                        let v = self.vals[d.index()];
                        self.net_vals[n.index()] = v;
                        v
                    }
                    None => self.net_vals[n.index()],
                },
                Node::Const { value, .. } => value,
                _ => {
                    let mut k = 0;
                    for c in node.children() {
                        args[k] = self.vals[c.index()];
                        aw[k] = pool.width(c);
                        k += 1;
                    }
                    eval_node(node, pool.width(e), &args[..k], &aw[..k])
                }
            };
            self.vals[e.index()] = v;
        }
        // Wires whose Ref node is never used by anything still get a value.
        for &w in ts.wires() {
            if let Some(d) = ts.wire_def(w) {
                self.net_vals[w.index()] = self.vals[d.index()];
            }
        }
    }

    pub fn net(&self, n: NetId) -> u64 {
        self.net_vals[n.index()]
    }

    pub fn expr(&self, e: ExprId) -> u64 {
        self.vals[e.index()]
    }

    pub fn next_state(&self) -> Vec<u64> {
        self.next_roots.iter().map(|e| self.vals[e.index()]).collect()
    }

    pub fn next_state_into(&self, out: &mut Vec<u64>) {
        out.clear();
        out.extend(self.next_roots.iter().map(|e| self.vals[e.index()]));
    }

    /// Index of the first assumption that is false in the last evaluated
    /// cycle, if any.
    pub fn violated_assumption(&self) -> Option<usize> {
        self.ts.assumptions().iter().position(|a| self.vals[a.index()] & 1 == 0)
    }

    pub fn assumptions_hold(&self) -> bool {
        self.violated_assumption().is_none()
    }
}

/// One cycle of concrete semantics: returns the next state and the value of
/// every wire (keyed by net).
pub fn eval_step(ts: &TransitionSystem, state: &[u64], inputs: &[u64]) -> (Vec<u64>, HashMap<NetId, u64>) {
    let mut sim = Simulator::new(ts);
    sim.evaluate(state, inputs);
    let wires = ts.wires().iter().map(|&w| (w, sim.net(w))).collect();
    (sim.next_state(), wires)
}

/// Evaluates a single expression against explicit net values; nets missing
/// from `env` read as zero. Wire references are resolved through their
/// definitions. Slow path intended for tests and one-off queries.
pub fn eval_expr(ts: &TransitionSystem, e: ExprId, env: &HashMap<NetId, u64>) -> u64 {
    let order = schedule(ts, &[e]);
    let mut vals: HashMap<ExprId, u64> = HashMap::new();
    let pool = ts.pool();
    for x in order {
        let node = pool.node(x);
        let v = match *node {
            Node::Ref(n) => match ts.wire_def(n) {
                Some(d) if !env.contains_key(&n) => vals[&d],
                _ => env.get(&n).copied().unwrap_or(0) & super::mask(ts.net(n).width),
            },
            Node::Const { value, .. } => value,
            _ => {
                let args: Vec<u64> = node.children().map(|c| vals[&c]).collect();
                let aw: Vec<u8> = node.children().map(|c| pool.width(c)).collect();
                eval_node(node, pool.width(x), &args, &aw)
            }
        };
        vals.insert(x, v);
    }
    vals[&e]
}
