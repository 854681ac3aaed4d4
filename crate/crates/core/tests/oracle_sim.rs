// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeSet;

use common::*;
use seuformal::env::{loop_program, wfi_free_program, ProgramImage};
use seuformal::oracle::{exhaustive_campaign, replay, simulate, Effect, OracleConfig, OracleError, Rig, Stimulus};
use seuformal::rv32::{CoreConfig, WFI_WORD};

fn loop_core() -> seuformal::rv32::Core {
    concrete(&CoreConfig::default(), loop_program(0), true)
}

#[test]
fn golden_loop_run_halts() {
    let core = loop_core();
    let rig = Rig::new(&core.ts, &core.census, Stimulus::none(), OracleConfig { horizon: 120, ..Default::default() }).unwrap();
    let halt = rig.golden_halt_cycle().unwrap();
    assert_eq!(rig.golden_retire(halt)[F_INSN], WFI_WORD as u64);
    assert!(rig.baseline().effects.is_empty());
}

#[test]
fn unread_register_bits_have_no_effect() {
    let core = loop_core();
    let rig = Rig::new(&core.ts, &core.census, Stimulus::none(), OracleConfig::default()).unwrap();
    for bit in 0..32 {
        let id = core.census.lookup("rf_x5", bit).unwrap();
        for c in 0..12 {
            let r = rig.inject_and_classify(id, c).unwrap();
            assert!(r.effects.is_empty(), "rf_x5:{bit} at {c}: {:?}", r.effects);
            assert_eq!(r.first_divergence, None);
        }
    }
}

#[test]
fn pc_fault_diverges() {
    let core = loop_core();
    let rig = Rig::new(&core.ts, &core.census, Stimulus::none(), OracleConfig::default()).unwrap();
    let id = core.census.lookup("pc_q", 2).unwrap();
    let r = rig.inject_and_classify(id, 3).unwrap();
    assert!(r.effects.contains(&Effect::Sdc), "{:?}", r);
    assert!(r.first_divergence.unwrap() > 3);
}

#[test]
fn loop_counter_flip_hangs() {
    let core = loop_core();
    let cfg0 = OracleConfig { horizon: 200, ..Default::default() };
    let halt = Rig::new(&core.ts, &core.census, Stimulus::none(), cfg0).unwrap().golden_halt_cycle().unwrap();
    let cfg = OracleConfig { horizon: halt + 24, progress_deadline: Some(halt + 16), ..Default::default() };
    let rig = Rig::new(&core.ts, &core.census, Stimulus::none(), cfg).unwrap();
    // x1 holds 10 after the first retire; setting bit 20 makes the loop
    // run ~2^20 iterations.
    let id = core.census.lookup("rf_x1", 20).unwrap();
    let hit: Vec<BTreeSet<Effect>> = (0..cfg.horizon).map(|c| rig.inject_and_classify(id, c).unwrap().effects).collect();
    assert!(hit.iter().any(|e| e.contains(&Effect::HangProgress)));
}

#[test]
fn store_address_flip_crashes() {
    // sw x0, 16(x0); wfi; padding so address 16 is inside the image.
    let img = ProgramImage::new(0, vec![0x0000_2823, WFI_WORD, 0x13, 0x13, 0x13]).unwrap();
    let core = concrete(&CoreConfig::default(), img, true);
    let cfg = OracleConfig { horizon: 12, ..Default::default() };
    let rig = Rig::new(&core.ts, &core.census, Stimulus::none(), cfg).unwrap();
    let found = (0..32).any(|b| {
        let id = core.census.lookup("lsu_addr_q", b).unwrap();
        (0..12).any(|c| rig.inject_and_classify(id, c).unwrap().effects.contains(&Effect::Crash(7)))
    });
    assert!(found);
}

#[test]
fn fetched_word_flip_retires_wfi() {
    let core = concrete(&CoreConfig::default(), wfi_free_program(0), true);
    let cfg = OracleConfig { horizon: 12, ..Default::default() };
    let rig = Rig::new(&core.ts, &core.census, Stimulus::none(), cfg).unwrap();
    assert!(rig.baseline().effects.is_empty());
    let bits: Vec<u32> = (0..32).map(|b| core.census.lookup("instr_rdata_q", b).unwrap()).collect();
    let res = exhaustive_campaign(&core.ts, &core.census, &[Stimulus::none()], &bits, cfg).unwrap();
    let wfi: Vec<u32> = res.bits.iter().filter(|(_, e)| e.effects.contains(&Effect::HangWfi)).map(|(&b, _)| b).collect();
    // beq x0, x5, +256 (0x10500063) differs from WFI only in bit 4.
    assert_eq!(wfi, vec![core.census.lookup("instr_rdata_q", 4).unwrap()]);
}

#[test]
fn campaign_is_deterministic_and_partial_when_capped() {
    let core = loop_core();
    let cfg = OracleConfig { horizon: 8, ..Default::default() };
    let bits: Vec<u32> = (0..core.census.total_bits()).collect();
    let a = exhaustive_campaign(&core.ts, &core.census, &[Stimulus::none()], &bits, cfg).unwrap();
    let b = exhaustive_campaign(&core.ts, &core.census, &[Stimulus::none()], &bits, cfg).unwrap();
    assert_eq!(a, b);
    assert!(!a.partial);
    assert!(a.baseline.is_empty());
    let pc_hit = (0..32).any(|i| !a.bits[&core.census.lookup("pc_q", i).unwrap()].effects.is_empty());
    assert!(pc_hit);
    let capped = exhaustive_campaign(&core.ts, &core.census, &[Stimulus::none()], &bits, OracleConfig { max_runs: Some(80), ..cfg })
        .unwrap();
    assert!(capped.partial);
    assert_eq!(capped.bits.len(), 10);
}

#[test]
fn replay_detects_tampering() {
    let core = loop_core();
    let tr = simulate(&core.ts, &Stimulus::none(), 20).unwrap();
    let valid = core.ts.net_id("valid").unwrap();
    let mut ts = core.ts.clone();
    let v = ts.sig(valid);
    let ok = replay(&ts, &tr, &[v]).unwrap();
    assert_eq!(ok.assumption_violation, None);
    assert_eq!(ok.obligations.len(), 20);
    let mut bad = tr.clone();
    bad.states[7][1] ^= 4;
    assert!(matches!(replay(&ts, &bad, &[]), Err(OracleError::StateMismatch { cycle: 7, .. })));
    // Text round trip.
    let back = seuformal::trace::Trace::from_text(&tr.to_text(), &ts).unwrap();
    assert_eq!(back, tr);
}

#[test]
fn simulate_reports_assumption_violation() {
    // jalr x0, 2(x0) fetches from a misaligned address, which the alignment
    // assumption forbids.
    let core = concrete(&CoreConfig::default(), ProgramImage::new(0, vec![0x0020_0067, 0x13]).unwrap(), true);
    assert!(matches!(simulate(&core.ts, &Stimulus::none(), 20), Err(OracleError::AssumptionViolated { .. })));
}
