// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use seuformal::bmc::Verdict;
use seuformal::campaign::*;
use seuformal::env::ProgramImage;
use seuformal::oracle::{exhaustive_campaign, Effect, OracleConfig, Stimulus};
use seuformal::property::Family;
use seuformal::rv32::WFI_WORD;

fn bounded(families: &[Family], regex: &str) -> CampaignConfig {
    CampaignConfig {
        families: families.to_vec(),
        induction: false,
        workers: 1,
        bits: BitFilter { regex: Some(regex.into()), range: None },
        ..Default::default()
    }
}

#[test]
fn unread_debug_register_is_safe_without_solving() {
    let mut c = bounded(&Family::ALL, "^dbg_q:");
    c.core.debug_register = true;
    let r = run_campaign(&c).unwrap();
    assert_eq!(r.total_bits, 8);
    assert_eq!(r.stats.solver_calls, 0);
    assert_eq!(r.stats.checks, 0);
    assert!(r.bits.iter().all(|b| b.class == BitClass::Safe && b.safe_by == Some(SafeBy::Coi)));
    assert!(r.bits.iter().all(|b| b.verdicts.values().all(|v| v.verdict == Verdict::Proven)));
}

fn fake(register: &str, bit: u32, id: u32, score: usize) -> BitClassification {
    BitClassification {
        bit_id: id,
        label: format!("{register}:{bit}"),
        register: register.into(),
        bit,
        class: if score > 0 { BitClass::Vulnerable } else { BitClass::Safe },
        safe_by: None,
        effects: BTreeSet::new(),
        score,
        budget_exceeded: false,
        consistency_flag: false,
        family_disagreement: false,
        verdicts: BTreeMap::new(),
    }
}

#[test]
fn ranking_orders_by_score_then_name() {
    let bits = vec![fake("pc_q", 3, 0, 1), fake("pc_q", 1, 1, 5), fake("alu_q", 9, 2, 1), fake("alu_q", 10, 3, 1)];
    assert_eq!(rank_bits(&bits), vec![1, 2, 3, 0]);
    let safe = vec![fake("b", 2, 0, 0), fake("a", 7, 1, 0), fake("b", 1, 2, 0)];
    assert_eq!(rank_bits(&safe), vec![1, 2, 0]);
}

#[test]
fn rows_conserve_bits_and_witnesses_replay() {
    let c = bounded(&[Family::Crash, Family::Hang], "^(pc_q:[0-3]|rf_x0:0|instr_rdata_q:[0-4])$");
    let r = run_campaign(&c).unwrap();
    assert_eq!(r.total_bits, 10);
    for row in &r.properties {
        assert_eq!(row.proven + row.bounded + row.failed, r.total_bits, "{}", row.property);
    }
    assert_eq!(r.stats.replay_failed, 0);
    assert!(r.stats.replay_ok > 0);
    for b in &r.bits {
        for (name, v) in &b.verdicts {
            if v.verdict == Verdict::Failed {
                assert_eq!(v.replay_ok, Some(true), "{} {name}", b.label);
                assert!(v.activation.is_some());
            }
        }
    }
    assert_eq!(r.ranking.len(), 10);
}

#[test]
fn fetched_instruction_flips_fail_strobe() {
    let r = run_campaign(&bounded(&[Family::Strobe], "^instr_rdata_q:[0-7]$")).unwrap();
    assert!(r.bits.iter().any(|b| b.class == BitClass::Vulnerable && b.effects.contains(&Effect::Sdc)));
}

#[test]
fn store_access_failures_agree_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    // sw x0, 16(x0); wfi; padding so address 16 is inside the image.
    let img = ProgramImage::new(0, vec![0x0000_2823, WFI_WORD, 0x13, 0x13, 0x13]).unwrap();
    std::fs::write(dir.path().join("store.img"), img.to_text()).unwrap();
    let mut c = bounded(&[Family::Crash], "^lsu_addr_q:");
    c.env.program = "store.img".into();
    c.base_dir = dir.path().to_path_buf();
    let s = Setup::build(&c).unwrap();
    let r = run_with(&s).unwrap();
    let formal = r.bits.iter().filter(|b| b.effects.contains(&Effect::Crash(7))).map(|b| b.bit_id).collect::<BTreeSet<_>>();
    assert!(!formal.is_empty());
    let bits: Vec<u32> = r.bits.iter().map(|b| b.bit_id).collect();
    let cfg = OracleConfig { horizon: 12, ..Default::default() };
    let o = exhaustive_campaign(&s.plain, &s.core.census, &[Stimulus::none()], &bits, cfg).unwrap();
    for b in &formal {
        assert!(o.bits[b].effects.contains(&Effect::Crash(7)), "bit {b}");
    }
    assert!(compare(&r, &o).contradictions.is_empty());
}

#[test]
fn cache_resumes_with_identical_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = bounded(&[Family::Hang], "^(pc_q:[2-3]|ctrl_fsm_cs:[01])$");
    c.cache_dir = Some(dir.path().to_path_buf());
    let a = run_campaign(&c).unwrap();
    assert_eq!(a.stats.cache_hits, 0);
    let b = run_campaign(&c).unwrap();
    assert_eq!(b.stats.checks, 0);
    let checked = a.bits.iter().flat_map(|b| b.verdicts.values()).filter(|v| v.source == Source::Check).count();
    assert!(checked > 0);
    assert_eq!(b.stats.cache_hits, checked);
    let classes = |r: &Report| r.bits.iter().map(|b| (b.bit_id, b.class_label())).collect::<Vec<_>>();
    assert_eq!(classes(&a), classes(&b));
    // A different bound is a different key.
    c.k_max = 6;
    assert_eq!(run_campaign(&c).unwrap().stats.cache_hits, 0);
}

#[test]
fn harvest_finds_failing_bits_without_pinning() {
    let mut c = bounded(&[Family::Crash], "^instr_rdata_q:");
    c.harvest_limit = 2;
    let s = Setup::build(&c).unwrap();
    let i = s.property_index("crash.illegal_insn").unwrap();
    let (b, r) = s.harvest(i, &[], &c.bmc_options(1)).unwrap().expect("an illegal instruction is reachable");
    assert_eq!(r.verdict, Verdict::Failed);
    assert_eq!(r.replay_ok, Some(true));
    let (b2, _) = s.harvest(i, &[b], &c.bmc_options(1)).unwrap().unwrap();
    assert_ne!(b, b2);
}

#[test]
fn report_files_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_campaign(&bounded(&[Family::Hang], "^pc_q:[0-1]$")).unwrap();
    r.write_dir(dir.path()).unwrap();
    let props = std::fs::read_to_string(dir.path().join("properties.csv")).unwrap();
    assert!(props.starts_with("family,property,directive,proven,bounded_proven,failed\n"));
    assert!(props.contains("hang,hang.wfi,assert,"));
    let bits = std::fs::read_to_string(dir.path().join("bits.csv")).unwrap();
    assert_eq!(bits.lines().count(), 3);
    let json: Report = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(json.total_bits, 2);
    assert!(std::fs::read_to_string(dir.path().join("summary.txt")).unwrap().contains("bits: 2"));
}

#[test]
fn config_round_trips_and_rejects_bad_values() {
    let text = r#"
        families = ["crash", "hang"]
        k_max = 8
        budget_secs = 5.0
        [core]
        regfile_size = 16
        [env]
        mode = "symbolic"
        alignment_constraint = false
        [bits]
        regex = "^pc_q:"
        range = [0, 100]
    "#;
    let c = CampaignConfig::from_toml(text).unwrap();
    assert_eq!(c.families, vec![Family::Crash, Family::Hang]);
    assert_eq!(c.core.regfile_size, 16);
    assert_eq!(c.env.mode, EnvKind::Symbolic);
    assert_eq!(CampaignConfig::from_toml(&c.to_toml()).unwrap(), c);

    for bad in ["k_max = 0", "families = []", "budget_secs = 0.0", "bogus = 1", "[core]\nregfile_size = 12", "families = [\"timing\"]"] {
        assert!(CampaignConfig::from_toml(bad).is_err(), "{bad}");
    }
    let c = CampaignConfig { bits: BitFilter { regex: Some("(".into()), range: None }, ..Default::default() };
    assert!(matches!(run_campaign(&c), Err(CampaignError::Config(_))));
}
