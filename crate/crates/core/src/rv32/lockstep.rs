// SPDX-License-Identifier: Apache-2.0

//! Golden/faulty composition.

use std::collections::HashMap;

use crate::netlist::{ExprId, NetId, NetKind, TransitionSystem};

pub const GOLDEN: &str = "golden_";
pub const FAULTY: &str = "faulty_";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LockstepError {
    #[error("register `{0}` of the golden core is missing or different in the faulty core")]
    ConfigMismatch(String),
    #[error("input `{0}` has different widths in the two systems")]
    InputWidth(String),
}

/// Places two systems side by side. Registers and wires are renamed with
/// `golden_` / `faulty_` prefixes; inputs with the same name are shared, so
/// both cores see identical stimulus. Every register of `golden` must exist
/// in `faulty` with the same width and reset value (the faulty side may add
/// instrumentation).
pub fn compose_lockstep(golden: &TransitionSystem, faulty: &TransitionSystem) -> Result<TransitionSystem, LockstepError> {
    for r in golden.registers() {
        let n = golden.net(r.net);
        let same = faulty.net_id(&n.name).and_then(|f| {
            let slot = faulty.register_slot(f)?;
            let fr = &faulty.registers()[slot];
            Some(faulty.net(f).width == n.width && fr.init == r.init)
        });
        if same != Some(true) {
            return Err(LockstepError::ConfigMismatch(n.name.clone()));
        }
    }
    let mut out = TransitionSystem::new();
    let mut shared: HashMap<String, NetId> = HashMap::new();
    for side in [golden, faulty] {
        for &i in side.inputs() {
            let n = side.net(i);
            match shared.get(&n.name) {
                Some(&e) if out.net(e).width != n.width => return Err(LockstepError::InputWidth(n.name.clone())),
                Some(_) => {}
                None => {
                    let id = out.add_input(&n.name, n.width as u32).expect("fresh input");
                    shared.insert(n.name.clone(), id);
                }
            }
        }
    }
    for (side, prefix) in [(golden, GOLDEN), (faulty, FAULTY)] {
        let mut map: HashMap<NetId, NetId> = HashMap::new();
        for (id, n) in side.nets() {
            let new = match n.kind {
                NetKind::Input => shared[&n.name],
                NetKind::Register => {
                    let r = &side.registers()[side.register_slot(id).expect("register")];
                    out.declare_register(&format!("{prefix}{}", n.name), n.width as u32, r.init).expect("prefixed")
                }
                NetKind::Wire => out.declare_wire(&format!("{prefix}{}", n.name), n.width as u32).expect("prefixed"),
            };
            map.insert(id, new);
        }
        let mut memo = HashMap::new();
        let mut mapper = |ts: &mut TransitionSystem, n: NetId| -> ExprId { ts.sig(map[&n]) };
        for (id, n) in side.nets() {
            match n.kind {
                NetKind::Register => {
                    let next = side.registers()[side.register_slot(id).unwrap()].next.expect("validated");
                    let e = out.import_expr(side, next, &mut mapper, &mut memo);
                    out.set_next(map[&id], e).expect("same width");
                }
                NetKind::Wire => {
                    let def = side.wire_def(id).expect("validated");
                    let e = out.import_expr(side, def, &mut mapper, &mut memo);
                    out.define_wire(map[&id], e).expect("acyclic in the source");
                }
                NetKind::Input => {}
            }
        }
        for &a in side.assumptions() {
            let e = out.import_expr(side, a, &mut mapper, &mut memo);
            out.add_assumption(e).expect("width 1");
        }
        for &o in side.outputs() {
            out.mark_output(map[&o]);
        }
    }
    Ok(out)
}
