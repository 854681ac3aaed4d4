// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::Duration;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use seuformal::bmc::{
    check_assert, check_cover, check_many, coi_reduce, export_dimacs, unroll, verify_witness, BmcOptions, Target,
    Verdict,
};
use seuformal::netlist::{ExprId, NetId, Simulator, TransitionSystem};
use seuformal::oracle::replay;
use seuformal::sat::{self, Cnf, SatResult};

fn opts(bound: usize) -> BmcOptions {
    BmcOptions { bound, budget: None, ..BmcOptions::default() }
}

/// 3-bit wrapping counter from 0.
fn counter() -> (TransitionSystem, NetId) {
    let mut ts = TransitionSystem::new();
    let c = ts.declare_register("c", 3, 0).unwrap();
    let s = ts.sig(c);
    let one = ts.x().constant(3, 1);
    let n = ts.x().add(s, one);
    ts.set_next(c, n).unwrap();
    (ts, c)
}

#[test]
fn counter_reaches_seven_at_cycle_seven() {
    let (mut ts, c) = counter();
    let s = ts.sig(c);
    let seven = ts.x().constant(3, 7);
    let p = ts.x().neq(s, seven);
    let r = check_assert(&ts, p, &opts(12)).unwrap();
    assert_eq!(r.verdict, Verdict::Failed);
    assert_eq!(r.failed_at, Some(7));
    let t = r.trace.unwrap();
    assert_eq!(t.len(), 8);
    for k in 0..8 {
        assert_eq!(t.register(k, "c"), Some(k as u64));
    }
    let rep = replay(&ts, &t, &[p]).unwrap();
    assert!(rep.violates_at_end(0));

    let short = check_assert(&ts, p, &BmcOptions { induction: false, ..opts(6) }).unwrap();
    assert_eq!(short.verdict, Verdict::BoundedProven(6));
}

#[test]
fn counter_bound_is_proven() {
    let (mut ts, c) = counter();
    let s = ts.sig(c);
    let seven = ts.x().constant(3, 7);
    let p = ts.x().ule(s, seven);
    let r = check_assert(&ts, p, &opts(12)).unwrap();
    assert_eq!(r.verdict, Verdict::Proven);
    assert_eq!(r.stats.induction_depth, Some(1));
}

#[test]
fn saturating_counter_needs_only_plain_induction() {
    let mut ts = TransitionSystem::new();
    let c = ts.declare_register("c", 3, 0).unwrap();
    let s = ts.sig(c);
    let x = ts.x();
    let five = x.constant(3, 5);
    let at = x.eq(s, five);
    let one = x.constant(3, 1);
    let inc = x.add(s, one);
    let n = x.ite(at, s, inc);
    let p = x.ule(s, five);
    ts.set_next(c, n).unwrap();
    let r = check_assert(&ts, p, &opts(12)).unwrap();
    assert_eq!(r.verdict, Verdict::Proven);
    assert!(!r.stats.simple_path_used);
}

#[test]
fn unreachable_self_loop_needs_simple_path() {
    // 0 -> 1 -> 2 -> 0; 3 -> 3 or 6 under an input; 6 is bad and only
    // reachable from the unreachable state 3.
    let mut ts = TransitionSystem::new();
    let i = ts.add_input("i", 1).unwrap();
    let s = ts.declare_register("s", 3, 0).unwrap();
    let (si, ss) = (ts.sig(i), ts.sig(s));
    let x = ts.x();
    let c = |x: &mut seuformal::netlist::ExprPool, v| x.constant(3, v);
    let (k0, k1, k2, k3, k6) = (c(x, 0), c(x, 1), c(x, 2), c(x, 3), c(x, 6));
    let is0 = x.eq(ss, k0);
    let is1 = x.eq(ss, k1);
    let is3 = x.eq(ss, k3);
    let from3 = x.ite(si, k3, k6);
    let e = x.ite(is3, from3, k0);
    let e = x.ite(is1, k2, e);
    let n = x.ite(is0, k1, e);
    let p = x.neq(ss, k6);
    ts.set_next(s, n).unwrap();
    let plain = check_assert(&ts, p, &BmcOptions { simple_path: false, ..opts(8) }).unwrap();
    assert_eq!(plain.verdict, Verdict::BoundedProven(8));
    let r = check_assert(&ts, p, &opts(8)).unwrap();
    assert_eq!(r.verdict, Verdict::Proven);
    assert!(r.stats.simple_path_used);
}

#[test]
fn cover_witness_has_six_cycles() {
    let (mut ts, c) = counter();
    let s = ts.sig(c);
    let p = ts.x().eq_const(s, 5);
    let r = check_cover(&ts, p, &opts(12)).unwrap();
    assert_eq!(r.verdict, Verdict::Failed);
    assert_eq!(r.verdict.label(seuformal::property::Directive::Cover), "Covered");
    assert_eq!(r.trace.as_ref().unwrap().len(), 6);
    verify_witness(&ts, r.trace.as_ref().unwrap(), &Target::cover(p)).unwrap();

    // A 3-bit value never equals 8 after zero extension.
    let z = ts.x().zext(s, 4);
    let never = ts.x().eq_const(z, 8);
    let r = check_cover(&ts, never, &opts(12)).unwrap();
    assert_eq!(r.verdict, Verdict::Proven);
    assert_eq!(r.verdict.label(seuformal::property::Directive::Cover), "Unreachable");
}

#[test]
fn toggle_unrolling_has_a_total_variable_map() {
    let mut ts = TransitionSystem::new();
    let r = ts.declare_register("r", 1, 0).unwrap();
    let s = ts.sig(r);
    let n = ts.x().not(s);
    ts.set_next(r, n).unwrap();
    let w = ts.add_wire("w", n).unwrap();
    let (cnf, vm) = unroll(&ts, 5);
    assert_eq!(vm.frames.len(), 6);
    for f in &vm.frames {
        assert!(f.contains_key(&r) && f.contains_key(&w));
    }
    let SatResult::Sat(model) = sat::solve(&cnf).unwrap() else { panic!("satisfiable") };
    for k in 0..=5 {
        assert_eq!(vm.value(&model, k, r), (k % 2) as u64);
        assert_eq!(vm.value(&model, k, w), ((k + 1) % 2) as u64);
    }
}

#[test]
fn contradictory_assumptions_are_vacuous() {
    let mut ts = TransitionSystem::new();
    let i = ts.add_input("i", 1).unwrap();
    let si = ts.sig(i);
    let ni = ts.x().not(si);
    ts.add_assumption(si).unwrap();
    ts.add_assumption(ni).unwrap();
    let f = ts.x().bool_const(false);
    let (cnf, _) = unroll(&ts, 0);
    assert_eq!(sat::solve(&cnf).unwrap(), SatResult::Unsat);
    let r = check_assert(&ts, f, &opts(4)).unwrap();
    assert_ne!(r.verdict, Verdict::Failed);
}

#[test]
fn dimacs_export_agrees_with_the_engine() {
    let (mut ts, c) = counter();
    let s = ts.sig(c);
    let seven = ts.x().constant(3, 7);
    let p7 = ts.x().neq(s, seven);
    for k in 0..10 {
        let text = export_dimacs(&ts, &Target::assert(p7), k);
        let cnf = Cnf::from_dimacs(&text).unwrap();
        let sat = matches!(sat::solve(&cnf).unwrap(), SatResult::Sat(_));
        assert_eq!(sat, k == 7, "k = {k}");
    }
}

#[test]
fn exhausted_budget_is_flagged() {
    // Preimage search through a mixing function is too hard for a zero
    // budget.
    let mut ts = TransitionSystem::new();
    let i = ts.add_input("i", 16).unwrap();
    let x = ts.declare_register("x", 16, 0x1234).unwrap();
    let (si, sx) = (ts.sig(i), ts.sig(x));
    let p = ts.x();
    let three = p.constant(4, 3);
    let sh = p.shl(sx, three);
    let m = p.xor(sh, si);
    let n = p.add(sx, m);
    let target = p.constant(16, 0xBEEF);
    let prop = p.neq(sx, target);
    ts.set_next(x, n).unwrap();
    let r = check_assert(&ts, prop, &BmcOptions { budget: Some(Duration::ZERO), ..opts(12) }).unwrap();
    assert!(r.stats.budget_exceeded);
    assert!(matches!(r.verdict, Verdict::BoundedProven(_)));
}

// Random small systems against explicit-state search.

struct Sys {
    ts: TransitionSystem,
    prop: ExprId,
    core: Vec<NetId>,
}

fn leaf(rng: &mut StdRng, ts: &mut TransitionSystem, nets: &[NetId], w: u8) -> ExprId {
    let cands: Vec<NetId> = nets.iter().copied().filter(|&n| ts.net(n).width == w).collect();
    if cands.is_empty() || rng.gen_bool(0.2) {
        let v = rng.gen::<u64>() & seuformal::netlist::mask(w);
        return ts.x().constant(w, v);
    }
    let n = cands[rng.gen_range(0..cands.len())];
    ts.sig(n)
}

fn rexpr(rng: &mut StdRng, ts: &mut TransitionSystem, nets: &[NetId], w: u8, d: u32) -> ExprId {
    if d == 0 || rng.gen_bool(0.25) {
        return leaf(rng, ts, nets, w);
    }
    match rng.gen_range(0..8) {
        0 => {
            let a = rexpr(rng, ts, nets, w, d - 1);
            ts.x().not(a)
        }
        1 => {
            let a = rexpr(rng, ts, nets, w, d - 1);
            let b = rexpr(rng, ts, nets, w, d - 1);
            ts.x().and(a, b)
        }
        2 => {
            let a = rexpr(rng, ts, nets, w, d - 1);
            let b = rexpr(rng, ts, nets, w, d - 1);
            ts.x().xor(a, b)
        }
        3 => {
            let a = rexpr(rng, ts, nets, w, d - 1);
            let b = rexpr(rng, ts, nets, w, d - 1);
            ts.x().add(a, b)
        }
        4 => {
            let c = rexpr(rng, ts, nets, 1, d - 1);
            let a = rexpr(rng, ts, nets, w, d - 1);
            let b = rexpr(rng, ts, nets, w, d - 1);
            ts.x().ite(c, a, b)
        }
        5 if w == 1 => {
            let aw = rng.gen_range(1..=3);
            let a = rexpr(rng, ts, nets, aw, d - 1);
            let b = rexpr(rng, ts, nets, aw, d - 1);
            if rng.gen() {
                ts.x().eq(a, b)
            } else {
                ts.x().ult(a, b)
            }
        }
        6 if w < 3 => {
            let a = rexpr(rng, ts, nets, 3, d - 1);
            let lo = rng.gen_range(0..=3 - w);
            ts.x().slice(a, lo + w - 1, lo)
        }
        _ => leaf(rng, ts, nets, w),
    }
}

/// Core registers (6 state bits), an unrelated register, optional
/// assumption and a random property over the core.
fn random_sys(seed: u64) -> Sys {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut ts = TransitionSystem::new();
    let i0 = ts.add_input("i0", 1).unwrap();
    let i1 = ts.add_input("i1", 2).unwrap();
    let r0 = ts.declare_register("r0", 3, rng.gen_range(0..8)).unwrap();
    let r1 = ts.declare_register("r1", 2, rng.gen_range(0..4)).unwrap();
    let r2 = ts.declare_register("r2", 1, rng.gen_range(0..2)).unwrap();
    let junk = ts.declare_register("junk", 2, 0).unwrap();
    let core = vec![i0, i1, r0, r1, r2];
    for &(r, w) in &[(r0, 3u8), (r1, 2), (r2, 1)] {
        let e = rexpr(&mut rng, &mut ts, &core, w, 3);
        ts.set_next(r, e).unwrap();
    }
    let j = rexpr(&mut rng, &mut ts, &[junk, i1, r0], 2, 2);
    ts.set_next(junk, j).unwrap();
    if rng.gen_bool(0.5) {
        let a = rexpr(&mut rng, &mut ts, &core, 1, 2);
        ts.add_assumption(a).unwrap();
    }
    let prop = rexpr(&mut rng, &mut ts, &core, 1, 3);
    ts.validate().unwrap();
    Sys { ts, prop, core }
}

/// First cycle at which the property can be false, by exhaustive search of
/// state sets; `None` if never.
fn first_violation(ts: &TransitionSystem, prop: ExprId) -> Option<usize> {
    let mut sim = Simulator::with_roots(ts, &[prop]);
    let inputs: Vec<Vec<u64>> = (0..2u64).flat_map(|a| (0..4u64).map(move |b| vec![a, b])).collect();
    let mut cur: BTreeSet<Vec<u64>> = [ts.init_state()].into_iter().collect();
    let mut seen: HashSet<BTreeSet<Vec<u64>>> = HashSet::new();
    for c in 0.. {
        if !seen.insert(cur.clone()) {
            return None;
        }
        let mut next = BTreeSet::new();
        for s in &cur {
            for v in &inputs {
                sim.evaluate(s, v);
                if !sim.assumptions_hold() {
                    continue;
                }
                if sim.expr(prop) == 0 {
                    return Some(c);
                }
                next.insert(sim.next_state());
            }
        }
        cur = next;
    }
    unreachable!()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn verdicts_match_explicit_search(seed in any::<u64>()) {
        let sys = random_sys(seed);
        let truth = first_violation(&sys.ts, sys.prop);
        let r = check_assert(&sys.ts, sys.prop, &opts(8)).unwrap();
        match r.verdict {
            Verdict::Failed => {
                prop_assert_eq!(r.failed_at, truth);
                let t = r.trace.unwrap();
                prop_assert!(replay(&sys.ts, &t, &[sys.prop]).unwrap().violates_at_end(0));
            }
            Verdict::Proven => prop_assert_eq!(truth, None),
            Verdict::BoundedProven(k) => {
                prop_assert_eq!(k, 8);
                prop_assert!(truth.is_none_or(|t| t > 8));
            }
        }
    }

    #[test]
    fn deeper_bounds_never_lose_counterexamples(seed in any::<u64>(), k in 0usize..6) {
        let sys = random_sys(seed);
        let o = |b| BmcOptions { induction: false, ..opts(b) };
        let a = check_assert(&sys.ts, sys.prop, &o(k)).unwrap();
        let b = check_assert(&sys.ts, sys.prop, &o(k + 1)).unwrap();
        if a.verdict == Verdict::Failed {
            prop_assert_eq!(b.verdict, Verdict::Failed);
            prop_assert_eq!(a.failed_at, b.failed_at);
        } else if b.verdict == Verdict::Failed {
            prop_assert_eq!(b.failed_at, Some(k + 1));
        }
    }

    #[test]
    fn coi_reduction_preserves_verdicts(seed in any::<u64>()) {
        let sys = random_sys(seed);
        let red = coi_reduce(&sys.ts, &[sys.prop], &HashMap::new());
        prop_assert!(red.ts.net_id("junk").is_none() || sys.core.is_empty());
        let full = check_assert(&sys.ts, sys.prop, &opts(8)).unwrap();
        let small = check_assert(&red.ts, red.targets[0], &opts(8)).unwrap();
        prop_assert_eq!(full.verdict == Verdict::Failed, small.verdict == Verdict::Failed);
        prop_assert_eq!(full.failed_at, small.failed_at);
        // Extra registers can only lengthen simple paths, so a proof on the
        // full system implies one on the reduced system, not the reverse.
        if full.verdict == Verdict::Proven {
            prop_assert_eq!(small.verdict, Verdict::Proven);
        }
        if small.verdict == Verdict::Proven {
            prop_assert_eq!(first_violation(&sys.ts, sys.prop), None);
        }
    }

    #[test]
    fn shared_unrolling_matches_separate_checks(seed in any::<u64>(), seed2 in any::<u64>()) {
        let mut sys = random_sys(seed);
        let mut rng = StdRng::seed_from_u64(seed2);
        let core = sys.core.clone();
        let other = rexpr(&mut rng, &mut sys.ts, &core, 1, 3);
        let targets = [Target::assert(sys.prop), Target::assert(other), Target::cover(other)];
        let joint = check_many(&sys.ts, &targets, &opts(6)).unwrap();
        for (t, j) in targets.iter().zip(&joint) {
            let alone = check_many(&sys.ts, &[*t], &opts(6)).unwrap().remove(0);
            prop_assert_eq!(alone.verdict, j.verdict);
            prop_assert_eq!(alone.failed_at, j.failed_at);
        }
    }
}
