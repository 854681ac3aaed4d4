// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap, HashSet};

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use seuformal::netlist::{
    bitblast, coi, eval_expr, eval_step, mask, ExprId, NetId, NetKind, Node, Simulator, TransitionSystem,
};

const WIDTHS: [u8; 7] = [1, 3, 4, 8, 16, 32, 64];

struct Gen {
    rng: StdRng,
    inputs: HashMap<u8, Vec<NetId>>,
}

impl Gen {
    fn new(ts: &mut TransitionSystem, seed: u64) -> Gen {
        let mut inputs = HashMap::new();
        for &w in &WIDTHS {
            let v = (0..2).map(|i| ts.add_input(&format!("in{w}_{i}"), w as u32).unwrap()).collect();
            inputs.insert(w, v);
        }
        Gen { rng: StdRng::seed_from_u64(seed), inputs }
    }

    fn leaf(&mut self, ts: &mut TransitionSystem, w: u8) -> ExprId {
        if self.rng.gen_bool(0.2) {
            let v = self.rng.gen::<u64>() & mask(w);
            return ts.x().constant(w, v);
        }
        if let Some(v) = self.inputs.get(&w) {
            let n = v[self.rng.gen_range(0..v.len())];
            return ts.sig(n);
        }
        let n = self.inputs[&64][self.rng.gen_range(0..2)];
        let lo = self.rng.gen_range(0..=64 - w);
        let e = ts.sig(n);
        ts.x().slice(e, lo + w - 1, lo)
    }

    fn expr(&mut self, ts: &mut TransitionSystem, w: u8, depth: u32) -> ExprId {
        if depth == 0 || self.rng.gen_bool(0.15) {
            return self.leaf(ts, w);
        }
        let d = depth - 1;
        let pick = self.rng.gen_range(0..if w == 1 { 16 } else { 13 });
        match pick {
            0 => {
                let a = self.expr(ts, w, d);
                ts.x().not(a)
            }
            1..=3 => {
                let a = self.expr(ts, w, d);
                let b = self.expr(ts, w, d);
                match pick {
                    1 => ts.x().and(a, b),
                    2 => ts.x().or(a, b),
                    _ => ts.x().xor(a, b),
                }
            }
            4 => {
                let c = self.expr(ts, 1, d);
                let a = self.expr(ts, w, d);
                let b = self.expr(ts, w, d);
                ts.x().ite(c, a, b)
            }
            5 | 6 => {
                let a = self.expr(ts, w, d);
                let b = self.expr(ts, w, d);
                if pick == 5 {
                    ts.x().add(a, b)
                } else {
                    ts.x().sub(a, b)
                }
            }
            7..=9 => {
                let a = self.expr(ts, w, d);
                let aw = WIDTHS[self.rng.gen_range(0..WIDTHS.len())];
                let amt = self.expr(ts, aw, d);
                match pick {
                    7 => ts.x().shl(a, amt),
                    8 => ts.x().lshr(a, amt),
                    _ => ts.x().ashr(a, amt),
                }
            }
            10 => {
                let aw = self.rng.gen_range(w..=64);
                let a = self.expr(ts, aw, d);
                let lo = self.rng.gen_range(0..=aw - w);
                ts.x().slice(a, lo + w - 1, lo)
            }
            11 if w > 1 => {
                let lo_w = self.rng.gen_range(1..w);
                let hi = self.expr(ts, w - lo_w, d);
                let lo = self.expr(ts, lo_w, d);
                ts.x().concat(hi, lo)
            }
            11 | 12 if w > 1 => {
                let aw = self.rng.gen_range(1..w);
                let a = self.expr(ts, aw, d);
                if self.rng.gen() {
                    ts.x().sext(a, w)
                } else {
                    ts.x().zext(a, w)
                }
            }
            11 | 12 => self.leaf(ts, w),
            _ => {
                let aw = WIDTHS[self.rng.gen_range(0..WIDTHS.len())];
                let a = self.expr(ts, aw, d);
                let b = self.expr(ts, aw, d);
                match self.rng.gen_range(0..6) {
                    0 => ts.x().eq(a, b),
                    1 => ts.x().neq(a, b),
                    2 => ts.x().ult(a, b),
                    3 => ts.x().ule(a, b),
                    4 => ts.x().slt(a, b),
                    _ => ts.x().sle(a, b),
                }
            }
        }
    }
}

fn edge_value(rng: &mut StdRng, w: u8) -> u64 {
    match rng.gen_range(0..5) {
        0 => 0,
        1 => mask(w),
        2 => 1u64 << (w - 1),
        3 => rng.gen_range(0..8),
        _ => rng.gen::<u64>() & mask(w),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn bitblast_matches_word_semantics(seed in any::<u64>()) {
        let mut ts = TransitionSystem::new();
        let mut g = Gen::new(&mut ts, seed);
        let w = WIDTHS[g.rng.gen_range(0..WIDTHS.len())];
        let e = g.expr(&mut ts, w, 4);
        let bits = bitblast(&mut ts, e);
        prop_assert_eq!(bits.len(), w as usize);
        for &b in &bits {
            prop_assert_eq!(ts.width(b), 1);
        }
        let mut roots = bits.clone();
        roots.push(e);
        let mut sim = Simulator::with_roots(&ts, &roots);
        for _ in 0..4 {
            let inputs: Vec<u64> = ts.inputs().iter().map(|&i| edge_value(&mut g.rng, ts.net(i).width)).collect();
            sim.evaluate(&[], &inputs);
            let word = sim.expr(e);
            let from_bits = bits.iter().enumerate().fold(0u64, |acc, (i, &b)| acc | (sim.expr(b) & 1) << i);
            prop_assert_eq!(word, from_bits, "expr {}", ts.expr_to_prefix(e));
        }
    }
}

#[test]
fn blast_examples() {
    let mut ts = TransitionSystem::new();
    let one = ts.x().constant(2, 1);
    let a = ts.add_input("a", 2).unwrap();
    let ea = ts.sig(a);
    let sum = ts.x().add(ea, one);
    let bits = bitblast(&mut ts, sum);
    let env: HashMap<NetId, u64> = [(a, 1)].into_iter().collect();
    let v: Vec<u64> = bits.iter().map(|&b| eval_expr(&ts, b, &env)).collect();
    assert_eq!(v, vec![0, 1]);

    let c = ts.add_input("c", 4).unwrap();
    let ec = ts.sig(c);
    let sl = ts.x().slice(ec, 3, 2);
    let bits = bitblast(&mut ts, sl);
    let env: HashMap<NetId, u64> = [(c, 0b1100)].into_iter().collect();
    let v: Vec<u64> = bits.iter().map(|&b| eval_expr(&ts, b, &env)).collect();
    assert_eq!(v, vec![1, 1]);

    let m1 = ts.add_input("m1", 32).unwrap();
    let em = ts.sig(m1);
    let zero = ts.x().constant(32, 0);
    let lt = ts.x().slt(em, zero);
    let bits = bitblast(&mut ts, lt);
    let env: HashMap<NetId, u64> = [(m1, 0xFFFF_FFFF)].into_iter().collect();
    assert_eq!(eval_expr(&ts, bits[0], &env), 1);
}

#[test]
fn unresolved_reference_is_an_error() {
    let mut ts = TransitionSystem::new();
    let err = ts.sig_named("nope").unwrap_err();
    assert!(err.to_string().contains("unresolved reference"));
}

#[test]
fn eval_step_is_pure() {
    let mut ts = TransitionSystem::new();
    let mut g = Gen::new(&mut ts, 3);
    let r = ts.declare_register("r", 16, 0).unwrap();
    let e = g.expr(&mut ts, 16, 5);
    ts.set_next(r, e).unwrap();
    let inputs: Vec<u64> = ts.inputs().iter().map(|_| g.rng.gen()).collect();
    let a = eval_step(&ts, &[0x1234], &inputs);
    let b = eval_step(&ts, &[0x1234], &inputs);
    assert_eq!(a, b);
}

/// Random system: `n` registers whose next functions read a few random
/// registers and inputs.
fn random_system(seed: u64, n: usize) -> TransitionSystem {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut ts = TransitionSystem::new();
    let ins: Vec<NetId> = (0..3).map(|i| ts.add_input(&format!("i{i}"), 8).unwrap()).collect();
    let regs: Vec<NetId> = (0..n)
        .map(|i| ts.declare_register(&format!("r{i}"), 8, rng.gen::<u8>() as u64).unwrap())
        .collect();
    for (k, &r) in regs.iter().enumerate() {
        let fanin = rng.gen_range(0..3);
        let mut acc = ts.sig(r);
        for _ in 0..fanin {
            let src = if rng.gen_bool(0.8) { regs[rng.gen_range(0..n)] } else { ins[rng.gen_range(0..3)] };
            let s = ts.sig(src);
            acc = match rng.gen_range(0..3) {
                0 => ts.x().add(acc, s),
                1 => ts.x().xor(acc, s),
                _ => {
                    let c = ts.x().bit(s, 0);
                    ts.x().ite(c, s, acc)
                }
            };
        }
        if k % 5 == 0 {
            let w = ts.add_wire(&format!("w{k}"), acc).unwrap();
            acc = ts.sig(w);
        }
        ts.set_next(r, acc).unwrap();
    }
    ts.validate().unwrap();
    ts
}

fn registers(ts: &TransitionSystem) -> Vec<NetId> {
    ts.registers().iter().map(|r| r.net).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn coi_is_monotone(seed in any::<u64>(), pick in proptest::collection::vec(0usize..12, 1..6)) {
        let ts = random_system(seed, 12);
        let regs = registers(&ts);
        let small: Vec<NetId> = pick.iter().take(pick.len() / 2 + 1).map(|&i| regs[i]).collect();
        let big: Vec<NetId> = pick.iter().map(|&i| regs[i]).collect();
        let c1 = coi(&ts, &small);
        let c2 = coi(&ts, &big);
        prop_assert!(c1.is_subset(&c2));
    }
}

#[test]
fn coi_excluded_registers_cannot_affect_roots() {
    let mut rng = StdRng::seed_from_u64(42);
    for sys in 0..10u64 {
        let ts = random_system(1000 + sys, 12);
        let regs = registers(&ts);
        let roots: Vec<NetId> = vec![regs[rng.gen_range(0..regs.len())]];
        let cone = coi(&ts, &roots);
        let outside: Vec<usize> =
            (0..regs.len()).filter(|&i| !cone.contains(&regs[i])).collect();
        let root_slots: Vec<usize> = roots.iter().map(|&r| ts.register_slot(r).unwrap()).collect();
        for _ in 0..10 {
            let stim: Vec<Vec<u64>> = (0..20).map(|_| (0..3).map(|_| rng.gen::<u8>() as u64).collect()).collect();
            let mut a = ts.init_state();
            let mut b = a.clone();
            for &i in &outside {
                b[i] = rng.gen::<u8>() as u64;
            }
            for inp in &stim {
                for &s in &root_slots {
                    assert_eq!(a[s], b[s]);
                }
                a = eval_step(&ts, &a, inp).0;
                b = eval_step(&ts, &b, inp).0;
            }
        }
    }
}

/// Dependency closure computed independently of the library by walking the
/// raw expression nodes.
fn reachable(ts: &TransitionSystem, root: NetId) -> HashSet<NetId> {
    let mut seen = HashSet::new();
    let mut work = vec![root];
    while let Some(n) = work.pop() {
        if !seen.insert(n) {
            continue;
        }
        let def = match ts.net(n).kind {
            NetKind::Wire => ts.wire_def(n),
            NetKind::Register => ts.registers().iter().find(|r| r.net == n).and_then(|r| r.next),
            NetKind::Input => None,
        };
        let mut stack: Vec<ExprId> = def.into_iter().collect();
        let mut vis = HashSet::new();
        while let Some(e) = stack.pop() {
            if !vis.insert(e) {
                continue;
            }
            let node = *ts.pool().node(e);
            if let Node::Ref(m) = node {
                work.push(m);
            }
            stack.extend(node.children());
        }
    }
    seen
}

#[test]
fn hardwired_zero_register_is_outside_the_cone() {
    // Toy register file: x0 is written like any other entry but reads of
    // index 0 are muxed to zero.
    let mut ts = TransitionSystem::new();
    let we = ts.add_input("we", 1).unwrap();
    let waddr = ts.add_input("waddr", 2).unwrap();
    let wdata = ts.add_input("wdata", 8).unwrap();
    let raddr = ts.add_input("raddr", 2).unwrap();
    let regs: Vec<NetId> = (0..4).map(|i| ts.declare_register(&format!("rf{i}"), 8, 0).unwrap()).collect();
    for (i, &r) in regs.iter().enumerate() {
        let (ewe, ewa, ewd, er) = (ts.sig(we), ts.sig(waddr), ts.sig(wdata), ts.sig(r));
        let hit = ts.x().eq_const(ewa, i as u64);
        let en = ts.x().and(ewe, hit);
        let nx = ts.x().ite(en, ewd, er);
        ts.set_next(r, nx).unwrap();
    }
    let era = ts.sig(raddr);
    let mut rd = ts.x().constant(8, 0);
    for (i, &r) in regs.iter().enumerate().skip(1) {
        let er = ts.sig(r);
        let hit = ts.x().eq_const(era, i as u64);
        rd = ts.x().ite(hit, er, rd);
    }
    let out = ts.add_wire("rdata", rd).unwrap();
    let lib: BTreeSet<NetId> = coi(&ts, &[out]);
    let oracle: BTreeSet<NetId> = reachable(&ts, out).into_iter().collect();
    assert_eq!(lib, oracle);
    assert!(!lib.contains(&regs[0]));
    assert!(regs[1..].iter().all(|r| lib.contains(r)));
}
