// SPDX-License-Identifier: Apache-2.0

//! The analysed systems and the per-bit check.

use std::collections::{BTreeSet, HashMap};

use sha2::{Digest, Sha256};

use crate::bmc::{check_many, coi_reduce, BmcOptions, CheckStats, Target, Verdict};
use crate::env::{attach_env, EnvMode, ProgramImage};
use crate::fault::{instrument, FaultPort, FAULT_ENABLE, FAULT_LOCATION, FAULT_TIME};
use crate::netlist::{coi, support, ExprId, NetId, NetKind, TransitionSystem};
use crate::oracle::{replay, simulate, OracleConfig, Rig, Stimulus};
use crate::property::{generate, imem_property, Directive, Family, GenOptions, Property};
use crate::rv32::{build_core, compose_lockstep, Core, FAULTY};
use crate::trace::Trace;

use super::{CampaignConfig, CampaignError};

/// Which composed system a property is checked on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SystemKind {
    /// Instrumented core with environment and monitors.
    Single,
    /// Golden core beside the instrumented core.
    Lockstep,
}

#[derive(Debug, Clone)]
pub struct CampaignProperty {
    pub family: Family,
    pub system: SystemKind,
    pub property: Property,
    /// Census registers in the cone of the property and the assumptions.
    pub cone: BTreeSet<String>,
}

impl CampaignProperty {
    pub fn name(&self) -> &str {
        &self.property.name
    }
    pub fn directive(&self) -> Directive {
        self.property.directive
    }
    fn target(&self, e: ExprId) -> Target {
        Target { directive: self.property.directive, expr: e }
    }
}

/// Outcome of one (bit, property) check.
#[derive(Debug, Clone)]
pub struct PairResult {
    pub verdict: Verdict,
    pub failed_at: Option<usize>,
    /// Inputs of the witness (including the fault port), by name.
    pub witness: Option<Stimulus>,
    /// The witness replayed on the unreduced system.
    pub replay_ok: Option<bool>,
    pub stats: CheckStats,
}

pub struct Setup {
    pub config: CampaignConfig,
    pub core: Core,
    pub image: Option<ProgramImage>,
    pub gen: GenOptions,
    /// Uninstrumented core with environment (the oracle's system).
    pub plain: TransitionSystem,
    pub single: TransitionSystem,
    pub lockstep: Option<TransitionSystem>,
    pub port: FaultPort,
    pub props: Vec<CampaignProperty>,
    pub core_hash: String,
}

impl Setup {
    pub fn build(config: &CampaignConfig) -> Result<Setup, CampaignError> {
        config.validate()?;
        let core = build_core(&config.core).map_err(|e| CampaignError::Config(e.to_string()))?;
        let env = config.env.env_config(&config.base_dir)?;
        let image = match &env.mode {
            EnvMode::Concrete(img) => Some(img.clone()),
            EnvMode::Symbolic => None,
        };
        let mut plain = core.ts.clone();
        attach_env(&mut plain, &config.core, &env)?;
        let mut inst = core.ts.clone();
        let port = instrument(&mut inst, &core.census, config.core.cycle_counter_width)?;
        attach_env(&mut inst, &config.core, &env)?;

        let progress_deadline = match (config.progress_deadline, config.progress_margin, &image) {
            (Some(d), _, _) => Some(d),
            (None, Some(m), Some(_)) => golden_halt(&plain, &core)?.map(|h| h as u32 + m),
            _ => None,
        };
        let gen = GenOptions {
            regfile_size: config.core.regfile_size,
            reset_pc: config.core.reset_pc,
            progress_deadline,
            dead_state_n: config.dead_state_n,
        };

        let mut single = inst.clone();
        let mut lockstep = None;
        let mut raw: Vec<(Family, SystemKind, Property)> = Vec::new();
        for &f in &config.families {
            if f == Family::Strobe {
                let mut ls = compose_lockstep(&plain, &inst)?;
                for p in generate(f, &mut ls, &gen)? {
                    raw.push((f, SystemKind::Lockstep, p));
                }
                lockstep = Some(ls);
                continue;
            }
            for p in generate(f, &mut single, &gen)? {
                raw.push((f, SystemKind::Single, p));
            }
            if f == Family::Arch {
                if let Some(img) = &image {
                    raw.push((f, SystemKind::Single, imem_property(&mut single, img)?));
                }
            }
        }

        let census_regs: BTreeSet<String> = core.census.registers().map(|(n, _, _)| n.to_string()).collect();
        let mut props = Vec::with_capacity(raw.len());
        for (family, system, property) in raw {
            let ts = match system {
                SystemKind::Single => &single,
                SystemKind::Lockstep => lockstep.as_ref().expect("built with the strobe family"),
            };
            let cone = property_cone(ts, property.obligation, system, &census_regs);
            props.push(CampaignProperty { family, system, property, cone });
        }

        let mut h = Sha256::new();
        h.update(single.dump().as_bytes());
        if let Some(ls) = &lockstep {
            h.update(ls.dump().as_bytes());
        }
        for p in &props {
            h.update(p.property.ast.to_string().as_bytes());
        }
        let core_hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();

        Ok(Setup { config: config.clone(), core, image, gen, plain, single, lockstep, port, props, core_hash })
    }

    pub fn system(&self, kind: SystemKind) -> &TransitionSystem {
        match kind {
            SystemKind::Single => &self.single,
            SystemKind::Lockstep => self.lockstep.as_ref().expect("strobe family selected"),
        }
    }

    pub fn property_index(&self, name: &str) -> Option<usize> {
        self.props.iter().position(|p| p.name() == name)
    }

    /// Registers of the census outside every property cone.
    pub fn coi_safe_registers(&self) -> BTreeSet<String> {
        let mut all: BTreeSet<String> = self.core.census.registers().map(|(n, _, _)| n.to_string()).collect();
        for p in &self.props {
            all.retain(|r| !p.cone.contains(r));
        }
        all
    }

    pub fn register_of(&self, bit: u32) -> &str {
        &self.core.census.entry(bit).expect("bit within the census").register
    }

    /// Fault-port pins: `Some(bit)` enables a flip of `bit` at a free time,
    /// `None` disables the port.
    pub fn pins(&self, kind: SystemKind, bit: Option<u32>) -> HashMap<NetId, u64> {
        let ts = self.system(kind);
        let id = |n: &str| ts.net_id(n).expect("fault port input");
        match bit {
            Some(b) => [(id(FAULT_ENABLE), 1), (id(FAULT_LOCATION), b as u64)].into_iter().collect(),
            None => [(id(FAULT_ENABLE), 0), (id(FAULT_LOCATION), self.port.total_bits as u64), (id(FAULT_TIME), 0)]
                .into_iter()
                .collect(),
        }
    }

    /// Checks the properties `idx` (all on one system) with the port pinned
    /// by `bit`. With `reduce`, the system is first restricted to the cone
    /// of the targets. Failed verdicts are replayed on the unreduced system.
    pub fn check(
        &self,
        bit: Option<u32>,
        idx: &[usize],
        reduce: bool,
        opts: &BmcOptions,
    ) -> Result<Vec<PairResult>, CampaignError> {
        let Some(&first) = idx.first() else { return Ok(Vec::new()) };
        let kind = self.props[first].system;
        assert!(idx.iter().all(|&i| self.props[i].system == kind), "one system per check");
        let full = self.system(kind);
        let pins = self.pins(kind, bit);
        let obligations: Vec<ExprId> = idx.iter().map(|&i| self.props[i].property.obligation).collect();
        let ctx = |e: &dyn std::fmt::Display| CampaignError::Check {
            bit: bit.map(|b| self.core.census.label(b)).unwrap_or_else(|| "none".into()),
            property: self.props[first].name().to_string(),
            msg: e.to_string(),
        };
        let (ts, exprs) = if reduce {
            let red = coi_reduce(full, &obligations, &pins);
            (red.ts, red.targets)
        } else {
            let mut ts = full.clone();
            for (&n, &v) in &pins {
                let s = ts.sig(n);
                let a = ts.x().eq_const(s, v);
                ts.add_assumption(a).map_err(|e| ctx(&e))?;
            }
            (ts, obligations.clone())
        };
        let targets: Vec<Target> = idx.iter().zip(&exprs).map(|(&i, &e)| self.props[i].target(e)).collect();
        let results = check_many(&ts, &targets, opts).map_err(|e| ctx(&e))?;
        let mut out = Vec::with_capacity(results.len());
        for ((r, &i), &obl) in results.into_iter().zip(idx).zip(&obligations) {
            let (witness, replay_ok) = match &r.trace {
                Some(t) => {
                    let stim = witness_stimulus(t, full, &pins);
                    let ok = self.verify(kind, i, obl, &stim, t).is_ok();
                    (Some(stim), Some(ok))
                }
                None => (None, None),
            };
            out.push(PairResult { verdict: r.verdict, failed_at: r.failed_at, witness, replay_ok, stats: r.stats });
        }
        Ok(out)
    }

    /// Re-simulates a witness on the unreduced system: assumptions must hold
    /// in every cycle, the registers recorded in `reduced` must match, and
    /// the property must be violated (or the cover hit) in the last cycle.
    fn verify(
        &self,
        kind: SystemKind,
        prop: usize,
        obligation: ExprId,
        stim: &Stimulus,
        reduced: &Trace,
    ) -> Result<(), CampaignError> {
        let full = self.system(kind);
        let bad = |m: String| CampaignError::Replay { property: self.props[prop].name().to_string(), msg: m };
        let t = simulate(full, stim, reduced.len()).map_err(|e| bad(e.to_string()))?;
        for (r, name) in reduced.register_names.iter().enumerate() {
            for c in 0..reduced.len() {
                if t.register(c, name) != Some(reduced.states[c][r]) {
                    return Err(bad(format!("`{name}` differs in cycle {c}")));
                }
            }
        }
        let rep = replay(full, &t, &[obligation]).map_err(|e| bad(e.to_string()))?;
        let last = *rep.obligations.last().map(|v| &v[0]).ok_or_else(|| bad("empty witness".into()))?;
        let hit = match self.props[prop].directive() {
            Directive::Cover => last,
            _ => !last,
        };
        if !hit || rep.assumption_violation.is_some() {
            return Err(bad("target not reached".into()));
        }
        Ok(())
    }

    /// Free-location check of one assertion with the fault enabled and the
    /// `exclude`d locations ruled out. Returns the flipped bit of the
    /// counterexample.
    pub fn harvest(
        &self,
        prop: usize,
        exclude: &[u32],
        opts: &BmcOptions,
    ) -> Result<Option<(u32, PairResult)>, CampaignError> {
        let p = &self.props[prop];
        let full = self.system(p.system);
        let mut ts = full.clone();
        let ctx = |e: &dyn std::fmt::Display| CampaignError::Check {
            bit: "free".into(),
            property: p.name().to_string(),
            msg: e.to_string(),
        };
        let en = ts.sig_named(FAULT_ENABLE)?;
        let loc = ts.sig_named(FAULT_LOCATION)?;
        let mut terms = vec![en];
        let x = ts.x();
        let w = x.width(loc);
        let lim = x.constant(w, self.port.total_bits as u64);
        terms.push(x.ult(loc, lim));
        for &b in exclude {
            let hit = x.eq_const(loc, b as u64);
            terms.push(x.not(hit));
        }
        let a = x.all(&terms);
        ts.add_assumption(a).map_err(|e| ctx(&e))?;
        let red = coi_reduce(&ts, &[p.property.obligation], &HashMap::new());
        let r = check_many(&red.ts, &[p.target(red.targets[0])], opts).map_err(|e| ctx(&e))?.remove(0);
        let Some(t) = &r.trace else { return Ok(None) };
        let bit = t.input(0, FAULT_LOCATION).unwrap_or(0) as u32;
        let stim = witness_stimulus(t, full, &HashMap::new());
        let ok = self.verify(p.system, prop, p.property.obligation, &stim, t).is_ok();
        let res = PairResult {
            verdict: r.verdict,
            failed_at: r.failed_at,
            witness: Some(stim),
            replay_ok: Some(ok),
            stats: r.stats,
        };
        Ok(Some((bit, res)))
    }

    /// Replays a stored witness stimulus for `prop` over `len` cycles.
    pub fn verify_stimulus(&self, prop: usize, stim: &Stimulus, len: usize) -> bool {
        let p = &self.props[prop];
        let full = self.system(p.system);
        let Ok(t) = simulate(full, stim, len) else { return false };
        let Ok(rep) = replay(full, &t, &[p.property.obligation]) else { return false };
        let last = rep.obligations.last().map(|v| v[0]);
        rep.assumption_violation.is_none()
            && match p.directive() {
                Directive::Cover => last == Some(true),
                _ => last == Some(false),
            }
    }

    /// Full-system trace of a witness, for display.
    pub fn witness_trace(&self, prop: usize, stim: &Stimulus, len: usize) -> Result<Trace, CampaignError> {
        let full = self.system(self.props[prop].system);
        simulate(full, stim, len).map_err(|e| CampaignError::Replay {
            property: self.props[prop].name().to_string(),
            msg: e.to_string(),
        })
    }
}

/// Census registers (by unprefixed name) in the cone of `obligation` and the
/// system's assumptions.
fn property_cone(
    ts: &TransitionSystem,
    obligation: ExprId,
    kind: SystemKind,
    census: &BTreeSet<String>,
) -> BTreeSet<String> {
    let mut roots: BTreeSet<NetId> = support(ts, obligation);
    for &a in ts.assumptions() {
        roots.extend(support(ts, a));
    }
    coi(ts, &roots.into_iter().collect::<Vec<_>>())
        .into_iter()
        .filter(|&n| ts.net(n).kind == NetKind::Register)
        .filter_map(|n| {
            let name = &ts.net(n).name;
            let base = match kind {
                SystemKind::Single => Some(name.as_str()),
                SystemKind::Lockstep => name.strip_prefix(FAULTY),
            }?;
            census.contains(base).then(|| base.to_string())
        })
        .collect()
}

/// Inputs of a (possibly reduced) trace plus the pinned port values.
fn witness_stimulus(t: &Trace, full: &TransitionSystem, pins: &HashMap<NetId, u64>) -> Stimulus {
    let mut s = Stimulus::none();
    for (i, name) in t.input_names.iter().enumerate() {
        let v: Vec<u64> = t.inputs.iter().map(|row| row[i]).collect();
        if v.iter().any(|&x| x != 0) {
            s = s.with(name, v);
        }
    }
    for (&n, &v) in pins {
        s = s.with(&full.net(n).name, vec![v; t.len()]);
    }
    s
}

fn golden_halt(plain: &TransitionSystem, core: &Core) -> Result<Option<usize>, CampaignError> {
    let cfg = OracleConfig { horizon: 4096, ..OracleConfig::default() };
    let rig = Rig::new(plain, &core.census, Stimulus::none(), cfg).map_err(|e| CampaignError::Config(e.to_string()))?;
    Ok(rig.golden_halt_cycle())
}
