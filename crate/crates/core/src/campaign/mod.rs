// SPDX-License-Identifier: Apache-2.0

//! Per-bit campaigns: every census bit is checked against every selected
//! property with the fault location pinned, and the verdicts are folded into
//! a Safe / Vulnerable / Undetermined classification and a ranking.

mod cache;
mod config;
mod report;
mod setup;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bmc::{BmcError, Verdict};
use crate::env::EnvError;
use crate::fault::FaultError;
use crate::netlist::NetlistError;
use crate::oracle::{Effect, OracleError, Stimulus};
use crate::property::{Directive, ElabError, Family, CRASH_CODES};
use crate::rv32::{Census, LockstepError};

pub use cache::{cache_key, Cache, CacheRecord, CACHE_FILE};
pub use config::{BitFilter, CampaignConfig, EnvKind, EnvSection};
pub use report::{compare, Agreement, BitClass, BitClassification, PropertyRow, Report, SafeBy, Stats};
pub use setup::{CampaignProperty, PairResult, Setup, SystemKind};

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Fault(#[from] FaultError),
    #[error(transparent)]
    Elab(#[from] ElabError),
    #[error(transparent)]
    Lockstep(#[from] LockstepError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("bit {bit}, {property}: {msg}")]
    Check { bit: String, property: String, msg: String },
    #[error("witness for {property} does not replay: {msg}")]
    Replay { property: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<BmcError> for CampaignError {
    fn from(e: BmcError) -> Self {
        CampaignError::Check { bit: "-".into(), property: "-".into(), msg: e.to_string() }
    }
}

/// Where a (bit, property) verdict came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// The register lies outside the cone of every property.
    Coi,
    /// The register lies outside this property's cone: fault-free verdict.
    Baseline,
    Check,
    Harvest,
    Cache,
}

/// One (bit, property) outcome as stored in the report.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PairRecord {
    pub verdict: Verdict,
    pub source: Source,
    pub failed_at: Option<usize>,
    /// Injection cycle of the witness.
    pub activation: Option<u64>,
    pub witness: Option<Stimulus>,
    pub replay_ok: Option<bool>,
    pub budget_exceeded: bool,
}

impl PairRecord {
    fn proven(source: Source) -> Self {
        PairRecord {
            verdict: Verdict::Proven,
            source,
            failed_at: None,
            activation: None,
            witness: None,
            replay_ok: None,
            budget_exceeded: false,
        }
    }

    fn from_result(r: PairResult, source: Source) -> Self {
        let activation = r.witness.as_ref().and_then(|w| w.values.get(crate::fault::FAULT_TIME)).and_then(|v| v.first().copied());
        let activation = activation.or(r.witness.as_ref().map(|_| 0)).filter(|_| source != Source::Baseline);
        PairRecord {
            verdict: r.verdict,
            source,
            failed_at: r.failed_at,
            activation,
            witness: r.witness,
            replay_ok: r.replay_ok,
            budget_exceeded: r.stats.budget_exceeded,
        }
    }
}

/// Effect a failing property stands for.
pub fn effect_of(property: &str) -> Option<Effect> {
    let (fam, rest) = property.split_once('.')?;
    match fam {
        "strobe" | "arch" => Some(Effect::Sdc),
        "crash" => CRASH_CODES.iter().find(|(n, _)| *n == rest).map(|&(_, c)| Effect::Crash(c as u8)),
        "hang" => match rest {
            "wfi" => Some(Effect::HangWfi),
            "progress" => Some(Effect::HangProgress),
            _ => None,
        },
        _ => None,
    }
}

/// Orders bits by descending score, then by register name and bit index.
pub fn rank_bits(bits: &[BitClassification]) -> Vec<u32> {
    let mut v: Vec<&BitClassification> = bits.iter().collect();
    v.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| (&a.register, a.bit).cmp(&(&b.register, b.bit))));
    v.into_iter().map(|b| b.bit_id).collect()
}

/// Folds the verdicts of one bit. Covers do not take part in the
/// classification.
pub fn classify(
    census: &Census,
    bit_id: u32,
    props: &[CampaignProperty],
    pairs: BTreeMap<String, PairRecord>,
    coi_safe: bool,
) -> BitClassification {
    let e = census.entry(bit_id).expect("bit within the census");
    let asserts: Vec<&PairRecord> = props
        .iter()
        .filter(|p| p.directive() == Directive::Assert)
        .filter_map(|p| pairs.get(p.name()))
        .collect();
    let score = asserts.iter().filter(|r| r.verdict == Verdict::Failed).count();
    let class = if score > 0 {
        BitClass::Vulnerable
    } else if asserts.iter().all(|r| r.verdict == Verdict::Proven) {
        BitClass::Safe
    } else {
        BitClass::Undetermined
    };
    let safe_by = match class {
        BitClass::Safe if coi_safe => Some(SafeBy::Coi),
        BitClass::Safe => Some(SafeBy::Proof),
        _ => None,
    };
    let effects: BTreeSet<Effect> = pairs
        .iter()
        .filter(|(_, r)| r.verdict == Verdict::Failed)
        .filter(|(n, _)| props.iter().any(|p| p.name() == n.as_str() && p.directive() == Directive::Assert))
        .filter_map(|(n, _)| effect_of(n))
        .collect();
    let fam_failed = |f: Family| {
        props.iter().filter(|p| p.family == f && p.directive() == Directive::Assert).any(|p| {
            pairs.get(p.name()).is_some_and(|r| r.verdict == Verdict::Failed)
        })
    };
    let fam_proven = |f: Family| {
        let mut it = props.iter().filter(|p| p.family == f && p.directive() == Directive::Assert).peekable();
        it.peek().is_some() && it.all(|p| pairs.get(p.name()).is_some_and(|r| r.verdict == Verdict::Proven))
    };
    let consistency_flag = (fam_failed(Family::Strobe) && fam_proven(Family::Arch))
        || (fam_failed(Family::Arch) && fam_proven(Family::Strobe));
    let both = props.iter().any(|p| p.family == Family::Strobe) && props.iter().any(|p| p.family == Family::Arch);
    let family_disagreement = both && fam_failed(Family::Strobe) != fam_failed(Family::Arch);
    BitClassification {
        bit_id,
        label: census.label(bit_id),
        register: e.register.clone(),
        bit: e.bit,
        class,
        safe_by,
        effects,
        score,
        budget_exceeded: pairs.values().any(|r| r.budget_exceeded),
        consistency_flag,
        family_disagreement,
        verdicts: pairs,
    }
}

/// Runs a campaign from scratch.
pub fn run_campaign(config: &CampaignConfig) -> Result<Report, CampaignError> {
    let setup = Setup::build(config)?;
    run_with(&setup)
}

struct Item {
    bit: u32,
    group: usize,
    props: Vec<usize>,
}

/// Runs the campaign on a prepared setup.
pub fn run_with(setup: &Setup) -> Result<Report, CampaignError> {
    let start = Instant::now();
    let cfg = &setup.config;
    let census = &setup.core.census;
    let bits = cfg.bits.select(census)?;
    let coi_safe_regs = if cfg.coi_prepass { setup.coi_safe_registers() } else { BTreeSet::new() };

    // Check groups: the properties of one family share an unrolling.
    let mut groups: Vec<(Family, Vec<usize>)> = Vec::new();
    for (i, p) in setup.props.iter().enumerate() {
        match groups.iter_mut().find(|(f, _)| *f == p.family) {
            Some((_, v)) => v.push(i),
            None => groups.push((p.family, vec![i])),
        }
    }

    let mut stats = Stats::default();
    let mut pairs: BTreeMap<u32, BTreeMap<String, PairRecord>> = BTreeMap::new();
    let mut cache = match &cfg.cache_dir {
        Some(d) => Some(Cache::open(&cfg.base_dir.join(d))?),
        None => None,
    };
    let key = |bit: u32, prop: usize| cache_key(&setup.core_hash, bit, setup.props[prop].name(), cfg.k_max, cfg.induction);

    // Fault-free verdicts for properties whose cone misses the register.
    let mut baseline: HashMap<usize, PairRecord> = HashMap::new();
    if cfg.coi_prepass {
        for (g, (fam, idx)) in groups.iter().enumerate() {
            let needed = bits.iter().any(|&b| {
                let r = setup.register_of(b);
                !coi_safe_regs.contains(r) && idx.iter().any(|&i| !setup.props[i].cone.contains(r))
            });
            if !needed {
                continue;
            }
            let t = Instant::now();
            let res = setup.check(None, idx, true, &cfg.bmc_options(idx.len()))?;
            *stats.family_secs.entry(fam.to_string()).or_default() += t.elapsed().as_secs_f64();
            stats.solver_calls += res.first().map_or(0, |r| r.stats.solves);
            for (&i, r) in idx.iter().zip(res) {
                baseline.insert(i, PairRecord::from_result(r, Source::Baseline));
            }
            log::info!("baseline for group {g} ({fam}) in {:.1?}", t.elapsed());
        }
    }

    // Optional free-location harvest.
    let mut harvested: BTreeSet<(u32, usize)> = BTreeSet::new();
    if cfg.harvest_limit > 0 {
        let selected: BTreeSet<u32> = bits.iter().copied().collect();
        for (i, p) in setup.props.iter().enumerate() {
            if p.directive() != Directive::Assert {
                continue;
            }
            let t = Instant::now();
            let mut found: Vec<u32> = Vec::new();
            for _ in 0..cfg.harvest_limit {
                let Some((b, r)) = setup.harvest(i, &found, &cfg.bmc_options(1))? else { break };
                stats.solver_calls += r.stats.solves;
                found.push(b);
                if r.replay_ok == Some(true) && selected.contains(&b) {
                    harvested.insert((b, i));
                    pairs.entry(b).or_default().insert(p.name().to_string(), PairRecord::from_result(r, Source::Harvest));
                }
            }
            *stats.family_secs.entry(p.family.to_string()).or_default() += t.elapsed().as_secs_f64();
        }
        stats.harvested = harvested.len();
    }

    let mut items: Vec<Item> = Vec::new();
    for &b in &bits {
        let reg = setup.register_of(b);
        let entry = pairs.entry(b).or_default();
        if coi_safe_regs.contains(reg) {
            for p in &setup.props {
                entry.insert(p.name().to_string(), PairRecord::proven(Source::Coi));
            }
            stats.coi_safe_bits += 1;
            continue;
        }
        for (g, (_, idx)) in groups.iter().enumerate() {
            let mut todo = Vec::new();
            for &i in idx {
                if harvested.contains(&(b, i)) {
                    continue;
                }
                let name = setup.props[i].name().to_string();
                if cfg.coi_prepass && !setup.props[i].cone.contains(reg) {
                    if let Some(base) = baseline.get(&i).filter(|r| r.verdict != Verdict::Failed) {
                        entry.insert(name, base.clone());
                        continue;
                    }
                }
                if let Some(rec) = cache.as_ref().and_then(|c| c.get(&key(b, i))) {
                    let ok = match (&rec.witness, rec.failed_at) {
                        (Some(w), Some(at)) => setup.verify_stimulus(i, w, at + 1),
                        _ => rec.verdict != Verdict::Failed,
                    };
                    if ok {
                        let activation = rec.witness.as_ref().map(|w| {
                            w.values.get(crate::fault::FAULT_TIME).and_then(|v| v.first().copied()).unwrap_or(0)
                        });
                        entry.insert(
                            name,
                            PairRecord {
                                verdict: rec.verdict,
                                source: Source::Cache,
                                failed_at: rec.failed_at,
                                activation,
                                witness: rec.witness.clone(),
                                replay_ok: rec.witness.as_ref().map(|_| true),
                                budget_exceeded: false,
                            },
                        );
                        stats.cache_hits += 1;
                        continue;
                    }
                }
                todo.push(i);
            }
            if !todo.is_empty() {
                items.push(Item { bit: b, group: g, props: todo });
            }
        }
    }

    // Dispatch: workers share the setup read-only; this thread merges.
    let workers = if cfg.workers == 0 { rayon::current_num_threads() } else { cfg.workers };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CampaignError::Config(format!("worker pool: {e}")))?;
    let total = items.len();
    let (tx, rx) = mpsc::sync_channel::<(usize, Duration, Result<Vec<PairResult>, CampaignError>)>(workers * 2);
    let mut first_error = None;
    std::thread::scope(|s| {
        let items = &items;
        s.spawn(move || {
            pool.install(|| {
                items.par_iter().enumerate().for_each_with(tx, |tx, (n, it)| {
                    let t = Instant::now();
                    let r = setup.check(Some(it.bit), &it.props, true, &cfg.bmc_options(it.props.len()));
                    let _ = tx.send((n, t.elapsed(), r));
                });
            })
        });
        for (done, (n, dt, r)) in rx.iter().enumerate() {
            let it = &items[n];
            let fam = groups[it.group].0.to_string();
            *stats.family_secs.entry(fam).or_default() += dt.as_secs_f64();
            match r {
                Ok(results) => {
                    stats.solver_calls += results.first().map_or(0, |r| r.stats.solves);
                    for (&i, r) in it.props.iter().zip(results) {
                        let rec = PairRecord::from_result(r, Source::Check);
                        if let Some(c) = cache.as_mut().filter(|_| !rec.budget_exceeded) {
                            let stored = CacheRecord {
                                key: key(it.bit, i),
                                bit: it.bit,
                                property: setup.props[i].name().to_string(),
                                verdict: rec.verdict,
                                failed_at: rec.failed_at,
                                witness: rec.witness.clone(),
                            };
                            if let Err(e) = c.insert(stored) {
                                first_error.get_or_insert(e);
                            }
                        }
                        pairs.entry(it.bit).or_default().insert(setup.props[i].name().to_string(), rec);
                    }
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
            if (done + 1) % 50 == 0 || done + 1 == total {
                log::info!("{}/{} checks done", done + 1, total);
            }
        }
    });
    if let Some(e) = first_error {
        return Err(e);
    }

    let bits_out: Vec<BitClassification> = pairs
        .into_iter()
        .map(|(b, p)| {
            let safe = coi_safe_regs.contains(setup.register_of(b));
            classify(census, b, &setup.props, p, safe)
        })
        .collect();
    for b in &bits_out {
        for r in b.verdicts.values() {
            match r.replay_ok {
                Some(true) => stats.replay_ok += 1,
                Some(false) => stats.replay_failed += 1,
                None => {}
            }
            stats.budget_exceeded += r.budget_exceeded as usize;
        }
        stats.consistency_flags += (b.consistency_flag && b.class != BitClass::Undetermined) as usize;
        stats.family_disagreements += (b.family_disagreement && !b.budget_exceeded) as usize;
    }
    stats.partial = stats.budget_exceeded > 0;
    stats.checks = total;
    stats.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(Report::assemble(setup, bits_out, stats))
}
