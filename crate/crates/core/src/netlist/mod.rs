// SPDX-License-Identifier: Apache-2.0

//! Width-typed bit-level IR for single-clock synchronous designs.
//!
//! A [`TransitionSystem`] owns a set of named nets (inputs, registers and
//! wires), the expressions defining wires and register next-state functions,
//! and a list of global per-cycle assumptions. Clock enables are expressed as
//! `Ite` in next-state functions; there is no explicit clock net.

mod blast;
mod coi;
mod dump;
mod expr;
mod sim;

use std::collections::HashMap;

use thiserror::Error;

pub use blast::{bitblast, blast_node, GateSink};
pub use coi::{coi, support};
pub use expr::{eval_node, mask, ExprId, ExprPool, Node};
pub use sim::{eval_expr, eval_step, Simulator};

/// Widest supported net.
pub const MAX_WIDTH: u8 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NetId(pub(crate) u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetKind {
    Input,
    Register,
    Wire,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub name: String,
    pub width: u8,
    pub kind: NetKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterDef {
    pub net: NetId,
    pub init: u64,
    pub next: Option<ExprId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetlistError {
    #[error("duplicate net name `{0}`")]
    DuplicateName(String),
    #[error("invalid width {0} (must be 1..=64)")]
    InvalidWidth(u32),
    #[error("width mismatch in {context}: expected {expected}, found {found}")]
    WidthMismatch { context: String, expected: u32, found: u32 },
    #[error("slice [{hi}:{lo}] out of range for width {width}")]
    SliceOutOfRange { hi: u32, lo: u32, width: u32 },
    #[error("unresolved reference `{0}`")]
    UnresolvedReference(String),
    #[error("combinational cycle through `{0}`")]
    CombinationalCycle(String),
    #[error("`{0}` is not a {1}")]
    WrongKind(String, &'static str),
    #[error("wire `{0}` has no definition")]
    UndefinedWire(String),
    #[error("register `{0}` has no next-state function")]
    MissingNext(String),
    #[error("init value {value:#x} does not fit register `{name}`")]
    InitOverflow { name: String, value: u64 },
    #[error("internal: {0}")]
    Internal(String),
}

pub type Result<T, E = NetlistError> = std::result::Result<T, E>;

/// Registers with next-state functions, free inputs, named wires and global
/// assumptions. Immutable once handed to analyses.
#[derive(Debug, Clone, Default)]
pub struct TransitionSystem {
    pool: ExprPool,
    nets: Vec<Net>,
    by_name: HashMap<String, NetId>,
    inputs: Vec<NetId>,
    registers: Vec<RegisterDef>,
    reg_slot: HashMap<NetId, usize>,
    wires: Vec<NetId>,
    wire_def: HashMap<NetId, ExprId>,
    assumptions: Vec<ExprId>,
    outputs: Vec<NetId>,
}

impl TransitionSystem {
    pub fn new() -> Self {
        Self::default()
    }

    /// Expression pool, for building expressions.
    pub fn x(&mut self) -> &mut ExprPool {
        &mut self.pool
    }

    pub fn pool(&self) -> &ExprPool {
        &self.pool
    }

    fn fresh_net(&mut self, name: &str, width: u32, kind: NetKind) -> Result<NetId> {
        if width == 0 || width > MAX_WIDTH as u32 {
            return Err(NetlistError::InvalidWidth(width));
        }
        if self.by_name.contains_key(name) {
            return Err(NetlistError::DuplicateName(name.to_string()));
        }
        let id = NetId(self.nets.len() as u32);
        self.nets.push(Net { name: name.to_string(), width: width as u8, kind });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn add_input(&mut self, name: &str, width: u32) -> Result<NetId> {
        let id = self.fresh_net(name, width, NetKind::Input)?;
        self.inputs.push(id);
        Ok(id)
    }

    /// Declares a register whose next-state function is set later with
    /// [`set_next`](Self::set_next).
    pub fn declare_register(&mut self, name: &str, width: u32, init: u64) -> Result<NetId> {
        if width >= 1 && width <= MAX_WIDTH as u32 && init & !mask(width as u8) != 0 {
            return Err(NetlistError::InitOverflow { name: name.to_string(), value: init });
        }
        let id = self.fresh_net(name, width, NetKind::Register)?;
        self.reg_slot.insert(id, self.registers.len());
        self.registers.push(RegisterDef { net: id, init, next: None });
        Ok(id)
    }

    pub fn add_register(&mut self, name: &str, width: u32, init: u64, next: ExprId) -> Result<NetId> {
        let id = self.declare_register(name, width, init)?;
        self.set_next(id, next)?;
        Ok(id)
    }

    pub fn set_next(&mut self, reg: NetId, next: ExprId) -> Result<()> {
        self.check_refs(next)?;
        let slot = *self
            .reg_slot
            .get(&reg)
            .ok_or_else(|| NetlistError::WrongKind(self.nets[reg.index()].name.clone(), "register"))?;
        let w = self.nets[reg.index()].width;
        if self.pool.width(next) != w {
            return Err(NetlistError::WidthMismatch {
                context: format!("next-state of `{}`", self.nets[reg.index()].name),
                expected: w as u32,
                found: self.pool.width(next) as u32,
            });
        }
        self.registers[slot].next = Some(next);
        Ok(())
    }

    pub fn declare_wire(&mut self, name: &str, width: u32) -> Result<NetId> {
        let id = self.fresh_net(name, width, NetKind::Wire)?;
        self.wires.push(id);
        Ok(id)
    }

    pub fn define_wire(&mut self, wire: NetId, expr: ExprId) -> Result<()> {
        let net = &self.nets[wire.index()];
        if net.kind != NetKind::Wire {
            return Err(NetlistError::WrongKind(net.name.clone(), "wire"));
        }
        if self.pool.width(expr) != net.width {
            return Err(NetlistError::WidthMismatch {
                context: format!("definition of `{}`", net.name),
                expected: net.width as u32,
                found: self.pool.width(expr) as u32,
            });
        }
        self.check_refs(expr)?;
        if self.reaches_wire(expr, wire) {
            return Err(NetlistError::CombinationalCycle(net.name.clone()));
        }
        self.wire_def.insert(wire, expr);
        Ok(())
    }

    pub fn add_wire(&mut self, name: &str, expr: ExprId) -> Result<NetId> {
        self.check_refs(expr)?;
        let id = self.declare_wire(name, self.pool.width(expr) as u32)?;
        self.define_wire(id, expr)?;
        Ok(id)
    }

    /// Adds a width-1 constraint that must hold at every cycle.
    pub fn add_assumption(&mut self, expr: ExprId) -> Result<()> {
        if self.pool.width(expr) != 1 {
            return Err(NetlistError::WidthMismatch {
                context: "assumption".into(),
                expected: 1,
                found: self.pool.width(expr) as u32,
            });
        }
        self.check_refs(expr)?;
        self.assumptions.push(expr);
        Ok(())
    }

    pub fn mark_output(&mut self, net: NetId) {
        if !self.outputs.contains(&net) {
            self.outputs.push(net);
        }
    }

    /// Turns a free input into a wire driven by `expr`.
    pub fn bind_input(&mut self, input: NetId, expr: ExprId) -> Result<()> {
        let net = &self.nets[input.index()];
        if net.kind != NetKind::Input {
            return Err(NetlistError::WrongKind(net.name.clone(), "input"));
        }
        self.nets[input.index()].kind = NetKind::Wire;
        self.inputs.retain(|&i| i != input);
        self.wires.push(input);
        if let Err(e) = self.define_wire(input, expr) {
            self.wires.pop();
            self.nets[input.index()].kind = NetKind::Input;
            self.inputs.push(input);
            return Err(e);
        }
        Ok(())
    }

    fn check_refs(&self, expr: ExprId) -> Result<()> {
        let mut stack = vec![expr];
        let mut seen = std::collections::HashSet::new();
        while let Some(e) = stack.pop() {
            if e.index() >= self.pool.len() {
                return Err(NetlistError::UnresolvedReference(format!("expression #{}", e.0)));
            }
            if !seen.insert(e) {
                continue;
            }
            let node = *self.pool.node(e);
            if let Node::Ref(n) = node {
                if n.index() >= self.nets.len() {
                    return Err(NetlistError::UnresolvedReference(format!("net #{}", n.0)));
                }
            }
            stack.extend(node.children());
        }
        Ok(())
    }

    fn reaches_wire(&self, expr: ExprId, target: NetId) -> bool {
        let mut stack = vec![expr];
        let mut seen = std::collections::HashSet::new();
        while let Some(e) = stack.pop() {
            if !seen.insert(e) {
                continue;
            }
            match *self.pool.node(e) {
                Node::Ref(n) => {
                    if n == target {
                        return true;
                    }
                    if let Some(&d) = self.wire_def.get(&n) {
                        stack.push(d);
                    }
                }
                node => stack.extend(node.children()),
            }
        }
        false
    }

    /// Reference to a net as an expression.
    pub fn sig(&mut self, net: NetId) -> ExprId {
        let w = self.nets[net.index()].width;
        self.pool.mk_ref(net, w)
    }

    /// Reference by name; fails with "unresolved reference" for unknown names.
    pub fn sig_named(&mut self, name: &str) -> Result<ExprId> {
        let id = self.net_id(name).ok_or_else(|| NetlistError::UnresolvedReference(name.to_string()))?;
        Ok(self.sig(id))
    }

    pub fn net_id(&self, name: &str) -> Option<NetId> {
        self.by_name.get(name).copied()
    }

    pub fn net(&self, id: NetId) -> &Net {
        &self.nets[id.index()]
    }

    pub fn nets(&self) -> impl Iterator<Item = (NetId, &Net)> {
        self.nets.iter().enumerate().map(|(i, n)| (NetId(i as u32), n))
    }

    pub fn net_count(&self) -> usize {
        self.nets.len()
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn registers(&self) -> &[RegisterDef] {
        &self.registers
    }

    pub fn register_slot(&self, net: NetId) -> Option<usize> {
        self.reg_slot.get(&net).copied()
    }

    pub fn input_slot(&self, net: NetId) -> Option<usize> {
        self.inputs.iter().position(|&i| i == net)
    }

    pub fn wires(&self) -> &[NetId] {
        &self.wires
    }

    pub fn wire_def(&self, net: NetId) -> Option<ExprId> {
        self.wire_def.get(&net).copied()
    }

    pub fn assumptions(&self) -> &[ExprId] {
        &self.assumptions
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn width(&self, e: ExprId) -> u8 {
        self.pool.width(e)
    }

    /// Operands of `e` with wire references resolved to their definitions.
    pub fn deps(&self, e: ExprId) -> Vec<ExprId> {
        match *self.pool.node(e) {
            Node::Ref(n) => self.wire_def.get(&n).copied().into_iter().collect(),
            node => node.children().collect(),
        }
    }

    /// Checks the structural invariants: every register has a next-state
    /// function and every wire a definition.
    pub fn validate(&self) -> Result<()> {
        for r in &self.registers {
            if r.next.is_none() {
                return Err(NetlistError::MissingNext(self.nets[r.net.index()].name.clone()));
            }
        }
        for w in &self.wires {
            if !self.wire_def.contains_key(w) {
                return Err(NetlistError::UndefinedWire(self.nets[w.index()].name.clone()));
            }
        }
        Ok(())
    }

    pub fn init_state(&self) -> Vec<u64> {
        self.registers.iter().map(|r| r.init).collect()
    }

    /// Total number of register bits.
    pub fn state_bits(&self) -> usize {
        self.registers.iter().map(|r| self.nets[r.net.index()].width as usize).sum()
    }

    /// Copies `e` from `src` into this system's pool, mapping each referenced
    /// net through `map`. Operations fold as they are rebuilt.
    pub fn import_expr(
        &mut self,
        src: &TransitionSystem,
        e: ExprId,
        map: &mut dyn FnMut(&mut TransitionSystem, NetId) -> ExprId,
        memo: &mut HashMap<ExprId, ExprId>,
    ) -> ExprId {
        // Iterative post-order over the source DAG (no wire resolution).
        let mut stack = vec![(e, false)];
        while let Some((cur, expanded)) = stack.pop() {
            if memo.contains_key(&cur) {
                continue;
            }
            let node = *src.pool.node(cur);
            if !expanded {
                stack.push((cur, true));
                for c in node.children() {
                    if !memo.contains_key(&c) {
                        stack.push((c, false));
                    }
                }
                continue;
            }
            let m = |x: ExprId| memo[&x];
            let new = match node {
                Node::Const { width, value } => self.pool.constant(width, value),
                Node::Ref(n) => map(self, n),
                Node::Not(a) => self.pool.not(m(a)),
                Node::And(a, b) => self.pool.mk(Node::And(m(a), m(b))),
                Node::Or(a, b) => self.pool.mk(Node::Or(m(a), m(b))),
                Node::Xor(a, b) => self.pool.mk(Node::Xor(m(a), m(b))),
                Node::Ite(c, t, f) => self.pool.mk(Node::Ite(m(c), m(t), m(f))),
                Node::Eq(a, b) => self.pool.mk(Node::Eq(m(a), m(b))),
                Node::Neq(a, b) => self.pool.mk(Node::Neq(m(a), m(b))),
                Node::Ult(a, b) => self.pool.mk(Node::Ult(m(a), m(b))),
                Node::Ule(a, b) => self.pool.mk(Node::Ule(m(a), m(b))),
                Node::Slt(a, b) => self.pool.mk(Node::Slt(m(a), m(b))),
                Node::Sle(a, b) => self.pool.mk(Node::Sle(m(a), m(b))),
                Node::Add(a, b) => self.pool.mk(Node::Add(m(a), m(b))),
                Node::Sub(a, b) => self.pool.mk(Node::Sub(m(a), m(b))),
                Node::Shl(a, b) => self.pool.mk(Node::Shl(m(a), m(b))),
                Node::Lshr(a, b) => self.pool.mk(Node::Lshr(m(a), m(b))),
                Node::Ashr(a, b) => self.pool.mk(Node::Ashr(m(a), m(b))),
                Node::Slice { arg, hi, lo } => self.pool.mk(Node::Slice { arg: m(arg), hi, lo }),
                Node::Concat(a, b) => self.pool.mk(Node::Concat(m(a), m(b))),
                Node::SignExtend { arg, width } => self.pool.mk(Node::SignExtend { arg: m(arg), width }),
                Node::ZeroExtend { arg, width } => self.pool.mk(Node::ZeroExtend { arg: m(arg), width }),
            };
            memo.insert(cur, new);
        }
        memo[&e]
    }

    /// Rebuilds the system keeping only `keep` nets (plus whatever they
    /// reference) and substituting constants for the `pinned` inputs.
    /// Returns the new system and a map from old to new net ids.
    pub fn restrict(
        &self,
        keep: &std::collections::BTreeSet<NetId>,
        pinned: &HashMap<NetId, u64>,
    ) -> (TransitionSystem, HashMap<NetId, NetId>) {
        let mut out = TransitionSystem::new();
        let mut net_map: HashMap<NetId, NetId> = HashMap::new();
        // Declare nets first, in original order.
        for (id, net) in self.nets() {
            if !keep.contains(&id) || pinned.contains_key(&id) {
                continue;
            }
            let new = match net.kind {
                NetKind::Input => out.add_input(&net.name, net.width as u32),
                NetKind::Register => {
                    let r = &self.registers[self.reg_slot[&id]];
                    out.declare_register(&net.name, net.width as u32, r.init)
                }
                NetKind::Wire => out.declare_wire(&net.name, net.width as u32),
            }
            .expect("names are unique in the source system");
            net_map.insert(id, new);
        }
        let mut memo = HashMap::new();
        let nm = net_map.clone();
        let mut mapper = |ts: &mut TransitionSystem, n: NetId| -> ExprId {
            if let Some(&v) = pinned.get(&n) {
                let w = self.nets[n.index()].width;
                return ts.x().constant(w, v);
            }
            let new = *nm.get(&n).expect("reference outside the kept set");
            ts.sig(new)
        };
        for (id, net) in self.nets() {
            let Some(&new) = net_map.get(&id) else { continue };
            match net.kind {
                NetKind::Register => {
                    let next = self.registers[self.reg_slot[&id]].next.expect("validated system");
                    let e = out.import_expr(self, next, &mut mapper, &mut memo);
                    out.set_next(new, e).expect("same width");
                }
                NetKind::Wire => {
                    let def = self.wire_def[&id];
                    let e = out.import_expr(self, def, &mut mapper, &mut memo);
                    out.wire_def.insert(new, e);
                }
                NetKind::Input => {}
            }
        }
        for &a in &self.assumptions {
            let e = out.import_expr(self, a, &mut mapper, &mut memo);
            if out.pool.const_value(e) != Some(1) {
                out.assumptions.push(e);
            }
        }
        for o in &self.outputs {
            if let Some(&n) = net_map.get(o) {
                out.outputs.push(n);
            }
        }
        (out, net_map)
    }

    /// Copies an expression of this system into `dst` through a net map
    /// produced by [`restrict`](Self::restrict).
    pub fn translate_expr(
        &self,
        e: ExprId,
        dst: &mut TransitionSystem,
        net_map: &HashMap<NetId, NetId>,
        pinned: &HashMap<NetId, u64>,
    ) -> Option<ExprId> {
        let mut missing = false;
        let mut memo = HashMap::new();
        let r = dst.import_expr(
            self,
            e,
            &mut |ts: &mut TransitionSystem, n: NetId| {
                if let Some(&v) = pinned.get(&n) {
                    let w = self.nets[n.index()].width;
                    return ts.x().constant(w, v);
                }
                match net_map.get(&n) {
                    Some(&m) => ts.sig(m),
                    None => {
                        missing = true;
                        ts.x().constant(self.nets[n.index()].width, 0)
                    }
                }
            },
            &mut memo,
        );
        (!missing).then_some(r)
    }
}
