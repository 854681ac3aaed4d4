// SPDX-License-Identifier: Apache-2.0

//! Forward fault injection by concrete simulation.
//!
//! A golden run of the uninstrumented core is computed once per stimulus;
//! each injection replays it up to the fault cycle, flips one state bit and
//! simulates onward, comparing the retire interface cycle by cycle. This is
//! equivalent to running a golden and a faulty core in lockstep on the same
//! stimulus, and it does not use the XOR-mask instrumentation, so the two can
//! be checked against each other.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::netlist::{ExprId, NetId, Simulator, TransitionSystem};
use crate::rv32::{cause, Census, RetireInterface, RETIRE_FIELDS, WFI_WORD};
use crate::trace::Trace;

/// Effects of a fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Effect {
    /// A retire-interface mismatch against the golden run.
    Sdc,
    /// mcause holds this exception code in machine mode.
    Crash(u8),
    /// WFI retired before the last instruction.
    HangWfi,
    /// The halting instruction has not retired by the progress deadline.
    HangProgress,
    /// No retirement in the trailing quiet window while the golden run
    /// retires.
    HangQuiet,
}

impl Effect {
    pub fn is_hang(self) -> bool {
        matches!(self, Effect::HangWfi | Effect::HangProgress | Effect::HangQuiet)
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Effect::Sdc => f.write_str("SDC"),
            Effect::Crash(c) => write!(f, "Crash({c})"),
            Effect::HangWfi => f.write_str("Hang-WFI"),
            Effect::HangProgress => f.write_str("Hang-progress"),
            Effect::HangQuiet => f.write_str("Hang-quiet"),
        }
    }
}

impl std::str::FromStr for Effect {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "SDC" => Effect::Sdc,
            "Hang-WFI" => Effect::HangWfi,
            "Hang-progress" => Effect::HangProgress,
            "Hang-quiet" => Effect::HangQuiet,
            _ => {
                let code = s
                    .strip_prefix("Crash(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| format!("unknown effect `{s}`"))?;
                Effect::Crash(code)
            }
        })
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("assumption {index} violated in cycle {cycle}")]
    AssumptionViolated { cycle: usize, index: usize },
    #[error("state mismatch at cycle {cycle} (register `{register}`)")]
    StateMismatch { cycle: usize, register: String },
    #[error("bit {0} is outside the census")]
    BitOutOfRange(u32),
    #[error("cycle {cycle} is not below the horizon {horizon}")]
    CycleOutOfRange { cycle: usize, horizon: usize },
    #[error("missing net `{0}`")]
    MissingNet(String),
    #[error(transparent)]
    Trace(#[from] crate::trace::TraceError),
}

/// Values of the free inputs, by input name, per cycle. Missing names or
/// cycles read as 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stimulus {
    pub values: BTreeMap<String, Vec<u64>>,
}

impl Stimulus {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, per_cycle: Vec<u64>) -> Self {
        self.values.insert(name.to_string(), per_cycle);
        self
    }

    /// Input vector in slot order of `ts` for `cycle`.
    pub fn vector(&self, ts: &TransitionSystem, cycle: usize) -> Vec<u64> {
        ts.inputs()
            .iter()
            .map(|&i| self.values.get(&ts.net(i).name).and_then(|v| v.get(cycle)).copied().unwrap_or(0))
            .collect()
    }
}

/// Runs `ts` from its initial state for `n` cycles. Fails on the first
/// violated assumption.
pub fn simulate(ts: &TransitionSystem, stimulus: &Stimulus, n: usize) -> Result<Trace, OracleError> {
    let mut trace = Trace::empty_for(ts);
    let mut sim = Simulator::new(ts);
    let mut state = ts.init_state();
    for c in 0..n {
        let inputs = stimulus.vector(ts, c);
        sim.evaluate(&state, &inputs);
        if let Some(index) = sim.violated_assumption() {
            return Err(OracleError::AssumptionViolated { cycle: c, index });
        }
        trace.inputs.push(inputs);
        trace.states.push(state.clone());
        state = sim.next_state();
    }
    Ok(trace)
}

/// Result of replaying a trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    /// Value of each obligation in every cycle.
    pub obligations: Vec<Vec<bool>>,
    /// First cycle whose assumptions do not hold, if any.
    pub assumption_violation: Option<usize>,
}

impl Replay {
    /// True iff assumptions hold throughout and obligation `i` is false in
    /// the last cycle.
    pub fn violates_at_end(&self, i: usize) -> bool {
        self.assumption_violation.is_none() && self.obligations.last().is_some_and(|o| !o[i])
    }
}

/// Re-simulates `trace` from the initial state using only its inputs, checks
/// every recorded state, and evaluates `obligations` in each cycle.
pub fn replay(ts: &TransitionSystem, trace: &Trace, obligations: &[ExprId]) -> Result<Replay, OracleError> {
    trace.check_shape(ts)?;
    let mut sim = Simulator::with_roots(ts, obligations);
    let mut state = ts.init_state();
    let mut out = Replay { obligations: Vec::new(), assumption_violation: None };
    for c in 0..trace.len() {
        if let Some(r) = (0..state.len()).find(|&r| state[r] != trace.states[c][r]) {
            return Err(OracleError::StateMismatch { cycle: c, register: trace.register_names[r].clone() });
        }
        sim.evaluate(&state, &trace.inputs[c]);
        if out.assumption_violation.is_none() && !sim.assumptions_hold() {
            out.assumption_violation = Some(c);
        }
        out.obligations.push(obligations.iter().map(|&o| sim.expr(o) & 1 == 1).collect());
        state = sim.next_state();
    }
    Ok(out)
}

/// Oracle settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Faults are injected in cycles `0..horizon`; cycles `0..=horizon` are
    /// observed.
    pub horizon: usize,
    /// Quiet-window length for [`Effect::HangQuiet`].
    pub h_quiet: usize,
    /// Cycle from which the halting instruction must have retired.
    pub progress_deadline: Option<usize>,
    /// Upper bound on simulated injections; the rest are skipped and the
    /// result is flagged partial.
    pub max_runs: Option<u64>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { horizon: 12, h_quiet: 16, progress_deadline: None, max_runs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Obs {
    retire: [u64; 16],
    mcause: u64,
    privl: u64,
    assumptions_ok: bool,
}

/// Simulation context for one core (with environment, not instrumented).
pub struct Rig<'a> {
    ts: &'a TransitionSystem,
    census: &'a Census,
    retire: [NetId; 16],
    mcause_slot: usize,
    priv_slot: usize,
    bit_slot: Vec<(usize, u32)>,
    cfg: OracleConfig,
    stimulus: Stimulus,
    golden_states: Vec<Vec<u64>>,
    golden_obs: Vec<Obs>,
}

/// Effects found for one (bit, cycle) injection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectRecord {
    pub bit_id: u32,
    pub cycle: usize,
    pub effects: BTreeSet<Effect>,
    pub first_divergence: Option<usize>,
}

impl<'a> Rig<'a> {
    pub fn new(
        ts: &'a TransitionSystem,
        census: &'a Census,
        stimulus: Stimulus,
        cfg: OracleConfig,
    ) -> Result<Rig<'a>, OracleError> {
        let retire = RetireInterface::resolve(ts, "").ok_or_else(|| OracleError::MissingNet("retire interface".into()))?;
        let slot = |name: &str| {
            ts.net_id(name).and_then(|n| ts.register_slot(n)).ok_or_else(|| OracleError::MissingNet(name.into()))
        };
        let mcause_slot = slot("mcause_q")?;
        let priv_slot = slot("priv_lvl_q")?;
        let bit_slot = census
            .entries()
            .iter()
            .map(|e| Ok((slot(&e.register)?, e.bit)))
            .collect::<Result<Vec<_>, OracleError>>()?;
        let mut rig = Rig {
            ts,
            census,
            retire: retire.nets(),
            mcause_slot,
            priv_slot,
            bit_slot,
            cfg,
            stimulus,
            golden_states: Vec::new(),
            golden_obs: Vec::new(),
        };
        let mut sim = Simulator::new(ts);
        let mut state = ts.init_state();
        for c in 0..=cfg.horizon {
            let obs = rig.observe(&mut sim, &state, c);
            if !obs.assumptions_ok {
                let index = sim.violated_assumption().unwrap_or(0);
                return Err(OracleError::AssumptionViolated { cycle: c, index });
            }
            rig.golden_states.push(state.clone());
            rig.golden_obs.push(obs);
            state = sim.next_state();
        }
        Ok(rig)
    }

    pub fn config(&self) -> &OracleConfig {
        &self.cfg
    }

    fn observe(&self, sim: &mut Simulator<'_>, state: &[u64], cycle: usize) -> Obs {
        let inputs = self.stimulus.vector(self.ts, cycle);
        sim.evaluate(state, &inputs);
        let mut retire = [0u64; 16];
        for (k, &n) in self.retire.iter().enumerate() {
            retire[k] = sim.net(n);
        }
        Obs {
            retire,
            mcause: state[self.mcause_slot],
            privl: state[self.priv_slot],
            assumptions_ok: sim.assumptions_hold(),
        }
    }

    /// Golden retire-interface values in `cycle`, in [`RETIRE_FIELDS`] order.
    pub fn golden_retire(&self, cycle: usize) -> [u64; 16] {
        self.golden_obs[cycle].retire
    }

    /// First cycle in which the golden run retires the halting instruction.
    pub fn golden_halt_cycle(&self) -> Option<usize> {
        self.golden_obs.iter().position(|o| o.retire[0] == 1 && o.retire[15] == 1)
    }

    /// Observations of the faulty run: golden up to and including `cycle`,
    /// then simulated with `bit` flipped in the state of `cycle + 1`. Stops
    /// at the first cycle whose assumptions fail (that cycle is dropped).
    fn faulty_run(&self, bit: u32, cycle: usize) -> Vec<Obs> {
        let mut obs: Vec<Obs> = self.golden_obs[..=cycle].to_vec();
        let (slot, b) = self.bit_slot[bit as usize];
        let mut sim = Simulator::new(self.ts);
        let mut state = if cycle < self.cfg.horizon {
            let mut s = self.golden_states[cycle + 1].clone();
            s[slot] ^= 1 << b;
            s
        } else {
            return obs;
        };
        for c in cycle + 1..=self.cfg.horizon {
            if state == self.golden_states[c] {
                // Masked: the rest equals the golden run.
                obs.extend_from_slice(&self.golden_obs[c..]);
                break;
            }
            let o = self.observe(&mut sim, &state, c);
            if !o.assumptions_ok {
                break;
            }
            obs.push(o);
            state = sim.next_state();
        }
        obs
    }

    /// Classifies a single injection: `bit` flips when its register is
    /// written at the end of `cycle`.
    pub fn inject_and_classify(&self, bit: u32, cycle: usize) -> Result<EffectRecord, OracleError> {
        if bit >= self.census.total_bits() {
            return Err(OracleError::BitOutOfRange(bit));
        }
        if cycle >= self.cfg.horizon {
            return Err(OracleError::CycleOutOfRange { cycle, horizon: self.cfg.horizon });
        }
        let run = self.faulty_run(bit, cycle);
        Ok(self.classify(bit, cycle, &run))
    }

    fn classify(&self, bit: u32, cycle: usize, run: &[Obs]) -> EffectRecord {
        let mut effects = BTreeSet::new();
        let mut first_divergence = None;
        let mut halted = false;
        for (j, o) in run.iter().enumerate() {
            let g = &self.golden_obs[j];
            let (fv, gv) = (o.retire[0], g.retire[0]);
            let mismatch = fv != gv || (fv == 1 && (1..15).any(|k| o.retire[k] != g.retire[k]));
            if mismatch {
                effects.insert(Effect::Sdc);
                first_divergence.get_or_insert(j);
            }
            if o.privl == 3 && cause::ALL.contains(&o.mcause) {
                effects.insert(Effect::Crash(o.mcause as u8));
            }
            let (halt, insn) = (o.retire[15], o.retire[1]);
            if fv == 1 && halt == 0 && insn == WFI_WORD as u64 {
                effects.insert(Effect::HangWfi);
            }
            if let Some(d) = self.cfg.progress_deadline {
                if j >= d && !halted && !(fv == 1 && halt == 1) {
                    effects.insert(Effect::HangProgress);
                }
            }
            if fv == 1 && halt == 1 {
                halted = true;
            }
        }
        let q = self.cfg.h_quiet;
        let n = self.cfg.horizon + 1;
        if run.len() == n && n >= q {
            let faulty_silent = run[n - q..].iter().all(|o| o.retire[0] == 0);
            let golden_retires = self.golden_obs[n - q..].iter().any(|o| o.retire[0] == 1);
            if faulty_silent && golden_retires {
                effects.insert(Effect::HangQuiet);
            }
        }
        EffectRecord { bit_id: bit, cycle, effects, first_divergence }
    }

    /// Effects of the fault-free run under the same observation rules.
    pub fn baseline(&self) -> EffectRecord {
        let mut r = self.classify(0, self.cfg.horizon, &self.golden_obs);
        r.bit_id = u32::MAX;
        r
    }
}

/// Union of effects per bit over all injection cycles and stimuli.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct BitEffects {
    pub effects: BTreeSet<Effect>,
    pub first_divergence: Option<usize>,
    /// `(stimulus index, injection cycle)` of the first injection showing
    /// each effect.
    pub evidence: BTreeMap<Effect, (usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub bits: BTreeMap<u32, BitEffects>,
    pub runs: u64,
    pub partial: bool,
    /// Effects of the fault-free runs (should be empty).
    pub baseline: BTreeSet<Effect>,
}

/// Exhaustive forward campaign over `bits` × injection cycles × stimuli.
pub fn exhaustive_campaign(
    ts: &TransitionSystem,
    census: &Census,
    stimuli: &[Stimulus],
    bits: &[u32],
    cfg: OracleConfig,
) -> Result<CampaignResult, OracleError> {
    let start = Instant::now();
    let rigs: Vec<Rig<'_>> =
        stimuli.iter().map(|s| Rig::new(ts, census, s.clone(), cfg)).collect::<Result<_, _>>()?;
    let per_bit = (cfg.horizon * rigs.len()) as u64;
    let allowed_bits = match cfg.max_runs {
        Some(m) if per_bit > 0 => (m / per_bit) as usize,
        _ => bits.len(),
    };
    let partial = allowed_bits < bits.len();
    let todo = &bits[..allowed_bits.min(bits.len())];
    let results: Vec<(u32, BitEffects)> = todo
        .par_iter()
        .map(|&b| {
            let mut be = BitEffects::default();
            for (si, rig) in rigs.iter().enumerate() {
                for c in 0..cfg.horizon {
                    let r = rig.inject_and_classify(b, c)?;
                    for &e in &r.effects {
                        be.evidence.entry(e).or_insert((si, c));
                    }
                    be.effects.extend(r.effects);
                    be.first_divergence = match (be.first_divergence, r.first_divergence) {
                        (Some(a), Some(b)) => Some(a.min(b)),
                        (a, b) => a.or(b),
                    };
                }
            }
            Ok((b, be))
        })
        .collect::<Result<_, OracleError>>()?;
    let mut baseline = BTreeSet::new();
    for rig in &rigs {
        baseline.extend(rig.baseline().effects);
    }
    log::info!("oracle: {} bits x {} cycles x {} stimuli in {:.1?}", todo.len(), cfg.horizon, rigs.len(), start.elapsed());
    Ok(CampaignResult {
        bits: results.into_iter().collect(),
        runs: todo.len() as u64 * per_bit,
        partial,
        baseline,
    })
}

/// Stimuli for a symbolic-mode core: each of the first `fetches` fetch
/// responses of the golden run receives a word from `pool` (all
/// combinations); other cycles carry `filler`. Load data is taken from
/// `data_pool` in every cycle (one stimulus per value).
pub fn enumerate_fetch_stimuli(
    ts: &TransitionSystem,
    pool: &[u32],
    fetches: usize,
    filler: u32,
    data_pool: &[u32],
    horizon: usize,
) -> Result<Vec<Stimulus>, OracleError> {
    assert!(fetches <= 3, "enumeration is limited to three fetched instructions");
    let pend = ts
        .net_id("fetch_pending_q")
        .and_then(|n| ts.register_slot(n))
        .ok_or_else(|| OracleError::MissingNet("fetch_pending_q".into()))?;
    let mut combos: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..fetches {
        combos = combos.into_iter().flat_map(|c| pool.iter().map(move |&w| [c.clone(), vec![w]].concat())).collect();
    }
    let mut out = Vec::new();
    for combo in combos {
        for &d in data_pool {
            // Fetch-response cycles depend on the words already chosen, so
            // the schedule is rebuilt by simulation as words are placed.
            let mut words = vec![filler as u64; horizon + 1];
            let base = Stimulus::none().with(crate::env::DMEM_WORD, vec![d as u64; horizon + 1]);
            let mut placed = 0;
            let mut stim = base.clone().with(crate::env::IMEM_WORD, words.clone());
            while placed < combo.len() {
                let tr = simulate(ts, &stim, horizon + 1)?;
                let resp: Vec<usize> = (0..tr.len()).filter(|&c| tr.states[c][pend] == 1).collect();
                let Some(&c) = resp.get(placed) else { break };
                words[c] = combo[placed] as u64;
                placed += 1;
                stim = base.clone().with(crate::env::IMEM_WORD, words.clone());
            }
            out.push(stim);
        }
    }
    Ok(out)
}

/// Names of retire fields compared for SDC, in order.
pub fn compared_fields() -> impl Iterator<Item = &'static str> {
    RETIRE_FIELDS[..15].iter().map(|(n, _)| *n)
}
