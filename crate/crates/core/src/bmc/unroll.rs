// SPDX-License-Identifier: Apache-2.0

//! Time-frame expansion of a transition system into CNF.

use std::collections::HashMap;

use crate::netlist::{blast_node, ExprId, GateSink, NetId, NetKind, Node, TransitionSystem};
use crate::sat::{Cnf, Lit, Solver};
use crate::trace::Trace;

/// Anything clauses can be written to.
pub trait ClauseDb {
    fn fresh(&mut self) -> Lit;
    fn clause(&mut self, lits: &[Lit]);
}

impl ClauseDb for Solver {
    fn fresh(&mut self) -> Lit {
        self.new_var()
    }
    fn clause(&mut self, lits: &[Lit]) {
        self.add_clause(lits);
    }
}

impl ClauseDb for Cnf {
    fn fresh(&mut self) -> Lit {
        self.new_var()
    }
    fn clause(&mut self, lits: &[Lit]) {
        self.add_clause(lits);
    }
}

/// Tseitin encoder with constant propagation and structural hashing.
struct Gates<'a, D> {
    db: &'a mut D,
    tru: Lit,
    ands: &'a mut HashMap<(Lit, Lit), Lit>,
    xors: &'a mut HashMap<(Lit, Lit), Lit>,
}

impl<D: ClauseDb> GateSink for Gates<'_, D> {
    type Bit = Lit;

    fn konst(&mut self, b: bool) -> Lit {
        if b {
            self.tru
        } else {
            !self.tru
        }
    }

    fn not(&mut self, a: Lit) -> Lit {
        !a
    }

    fn and(&mut self, a: Lit, b: Lit) -> Lit {
        let f = !self.tru;
        if a == f || b == f || a == !b {
            return f;
        }
        if a == self.tru || a == b {
            return b;
        }
        if b == self.tru {
            return a;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&o) = self.ands.get(&key) {
            return o;
        }
        let o = self.db.fresh();
        self.db.clause(&[!o, a]);
        self.db.clause(&[!o, b]);
        self.db.clause(&[o, !a, !b]);
        self.ands.insert(key, o);
        o
    }

    fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        let t = self.tru;
        // Strip negations and constants to a positive pair.
        let mut neg = false;
        let (mut a, mut b) = (a, b);
        if a.is_neg() {
            a = !a;
            neg = !neg;
        }
        if b.is_neg() {
            b = !b;
            neg = !neg;
        }
        let flip = |l: Lit| if neg { !l } else { l };
        if a == b {
            return flip(!t);
        }
        if a == t {
            return flip(!b);
        }
        if b == t {
            return flip(!a);
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&o) = self.xors.get(&key) {
            return flip(o);
        }
        let o = self.db.fresh();
        self.db.clause(&[!o, a, b]);
        self.db.clause(&[!o, !a, !b]);
        self.db.clause(&[o, !a, b]);
        self.db.clause(&[o, a, !b]);
        self.xors.insert(key, o);
        flip(o)
    }

    fn mux(&mut self, s: Lit, t: Lit, e: Lit) -> Lit {
        if t == e || s == self.tru {
            return t;
        }
        if s == !self.tru {
            return e;
        }
        let a = self.and(s, t);
        let b = self.and(!s, e);
        self.or(a, b)
    }
}

/// How frame 0 is initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// Registers hold their reset values.
    Reset,
    /// Registers are unconstrained (induction step).
    Free,
}

struct Frame {
    regs: Vec<Vec<Lit>>,
    inputs: Vec<Option<Vec<Lit>>>,
    memo: HashMap<ExprId, Vec<Lit>>,
}

/// Incremental unrolling: frames are added one at a time and expressions are
/// encoded on demand, so only the logic that is actually asked for reaches
/// the clause database.
pub struct Unroller<'a, D> {
    ts: &'a TransitionSystem,
    pub db: D,
    tru: Lit,
    ands: HashMap<(Lit, Lit), Lit>,
    xors: HashMap<(Lit, Lit), Lit>,
    frames: Vec<Frame>,
    init: InitMode,
}

impl<'a, D: ClauseDb> Unroller<'a, D> {
    pub fn new(ts: &'a TransitionSystem, mut db: D, init: InitMode) -> Self {
        let tru = db.fresh();
        db.clause(&[tru]);
        Unroller { ts, db, tru, ands: HashMap::new(), xors: HashMap::new(), frames: Vec::new(), init }
    }

    pub fn system(&self) -> &'a TransitionSystem {
        self.ts
    }

    pub fn true_lit(&self) -> Lit {
        self.tru
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    /// Appends a frame and returns its index. Register values of frame `k`
    /// are the next-state functions of frame `k - 1`.
    pub fn add_frame(&mut self) -> usize {
        let k = self.frames.len();
        let regs = if k == 0 {
            self.ts
                .registers()
                .iter()
                .map(|r| {
                    let w = self.ts.net(r.net).width as usize;
                    match self.init {
                        InitMode::Reset => {
                            (0..w).map(|i| if (r.init >> i) & 1 == 1 { self.tru } else { !self.tru }).collect()
                        }
                        InitMode::Free => (0..w).map(|_| self.db.fresh()).collect(),
                    }
                })
                .collect()
        } else {
            let nexts: Vec<ExprId> =
                self.ts.registers().iter().map(|r| r.next.expect("validated system")).collect();
            nexts.into_iter().map(|e| self.encode(k - 1, e)).collect()
        };
        self.frames.push(Frame { regs, inputs: vec![None; self.ts.inputs().len()], memo: HashMap::new() });
        k
    }

    /// Bits (LSB first) of `e` evaluated in frame `f`.
    pub fn encode(&mut self, f: usize, e: ExprId) -> Vec<Lit> {
        if let Some(v) = self.frames[f].memo.get(&e) {
            return v.clone();
        }
        let ts = self.ts;
        let pool = ts.pool();
        let mut stack: Vec<(ExprId, bool)> = vec![(e, false)];
        while let Some((x, expanded)) = stack.pop() {
            if self.frames[f].memo.contains_key(&x) {
                continue;
            }
            let node = *pool.node(x);
            let wire_def = match node {
                Node::Ref(n) if ts.net(n).kind == NetKind::Wire => ts.wire_def(n),
                _ => None,
            };
            if !expanded {
                stack.push((x, true));
                match node {
                    Node::Ref(_) => stack.extend(wire_def.map(|d| (d, false))),
                    _ => stack.extend(node.children().map(|c| (c, false))),
                }
                continue;
            }
            let bits = match node {
                Node::Ref(n) => match ts.net(n).kind {
                    NetKind::Wire => self.frames[f].memo[&wire_def.expect("validated system")].clone(),
                    NetKind::Register => self.frames[f].regs[ts.register_slot(n).expect("register")].clone(),
                    NetKind::Input => self.input_bits(f, n),
                },
                _ => {
                    let args: Vec<Vec<Lit>> = node.children().map(|c| self.frames[f].memo[&c].clone()).collect();
                    let refs: Vec<&[Lit]> = args.iter().map(|v| v.as_slice()).collect();
                    let mut g = Gates { db: &mut self.db, tru: self.tru, ands: &mut self.ands, xors: &mut self.xors };
                    blast_node(&mut g, &node, &refs)
                }
            };
            self.frames[f].memo.insert(x, bits);
        }
        self.frames[f].memo[&e].clone()
    }

    fn input_bits(&mut self, f: usize, n: NetId) -> Vec<Lit> {
        let slot = self.ts.input_slot(n).expect("input");
        if let Some(v) = &self.frames[f].inputs[slot] {
            return v.clone();
        }
        let w = self.ts.net(n).width as usize;
        let v: Vec<Lit> = (0..w).map(|_| self.db.fresh()).collect();
        self.frames[f].inputs[slot] = Some(v.clone());
        v
    }

    /// Single literal for a width-1 expression in frame `f`.
    pub fn lit(&mut self, f: usize, e: ExprId) -> Lit {
        let v = self.encode(f, e);
        assert_eq!(v.len(), 1, "expected a width-1 expression");
        v[0]
    }

    /// Bits of a net in frame `f`.
    pub fn net_bits(&mut self, f: usize, n: NetId) -> Vec<Lit> {
        match self.ts.net(n).kind {
            NetKind::Register => self.frames[f].regs[self.ts.register_slot(n).expect("register")].clone(),
            NetKind::Input => self.input_bits(f, n),
            NetKind::Wire => {
                let d = self.ts.wire_def(n).expect("validated system");
                self.encode(f, d)
            }
        }
    }

    /// Adds every assumption of the system in frame `f` as a unit clause.
    pub fn assume_frame(&mut self, f: usize) {
        let asm: Vec<ExprId> = self.ts.assumptions().to_vec();
        for a in asm {
            let l = self.lit(f, a);
            self.db.clause(&[l]);
        }
    }

    /// Clauses forcing the register state of frames `a` and `b` to differ.
    pub fn assert_distinct(&mut self, a: usize, b: usize) {
        let pairs: Vec<(Lit, Lit)> = self.frames[a]
            .regs
            .iter()
            .flatten()
            .copied()
            .zip(self.frames[b].regs.iter().flatten().copied())
            .collect();
        let mut diff = Vec::with_capacity(pairs.len());
        for (x, y) in pairs {
            let mut g = Gates { db: &mut self.db, tru: self.tru, ands: &mut self.ands, xors: &mut self.xors };
            let d = g.xor(x, y);
            if d == self.tru {
                return;
            }
            if d != !self.tru {
                diff.push(d);
            }
        }
        self.db.clause(&diff);
    }

    /// Reads a trace of frames `0..=last` through a literal valuation.
    /// Inputs never encoded in a frame read as 0.
    pub fn extract(&self, last: usize, value: impl Fn(Lit) -> bool) -> Trace {
        let ts = self.ts;
        let word = |bits: &[Lit]| bits.iter().enumerate().fold(0u64, |acc, (i, &l)| acc | (u64::from(value(l)) << i));
        let mut t = Trace::empty_for(ts);
        for fr in &self.frames[..=last] {
            t.inputs.push(fr.inputs.iter().map(|v| v.as_deref().map_or(0, word)).collect());
            t.states.push(fr.regs.iter().map(|r| word(r)).collect());
        }
        t
    }
}

/// Total variable map of an unrolling: `frames[c][net]` is the bit vector of
/// net `net` in cycle `c`.
#[derive(Debug, Clone)]
pub struct VarMap {
    pub frames: Vec<HashMap<NetId, Vec<Lit>>>,
    pub true_lit: Lit,
}

impl VarMap {
    pub fn bits(&self, cycle: usize, net: NetId) -> &[Lit] {
        &self.frames[cycle][&net]
    }

    /// Value of `net` in `cycle` under a DIMACS-style model (indexed by
    /// variable).
    pub fn value(&self, model: &[bool], cycle: usize, net: NetId) -> u64 {
        self.bits(cycle, net).iter().enumerate().fold(0, |acc, (i, l)| {
            let v = model.get(l.var() as usize).copied().unwrap_or(false) != l.is_neg();
            acc | (u64::from(v) << i)
        })
    }
}

/// Unrolls `ts` for cycles `0..=k` from the reset state with all
/// assumptions asserted, encoding every net in every cycle.
pub fn unroll(ts: &TransitionSystem, k: usize) -> (Cnf, VarMap) {
    let mut u = Unroller::new(ts, Cnf::new(), InitMode::Reset);
    let mut frames = Vec::with_capacity(k + 1);
    for _ in 0..=k {
        let f = u.add_frame();
        u.assume_frame(f);
        let mut m = HashMap::new();
        for (id, _) in ts.nets() {
            m.insert(id, u.net_bits(f, id));
        }
        frames.push(m);
    }
    let true_lit = u.true_lit();
    (u.db, VarMap { frames, true_lit })
}
