// SPDX-License-Identifier: Apache-2.0

//! SAT-based bounded model checking with k-induction.
//!
//! Assertions are checked by searching for a reachable cycle where the
//! obligation is false; covers by searching for one where the condition is
//! true. Frames are added incrementally to one solver and each depth is a
//! single call under an assumption literal. Targets that survive the bound
//! are handed to k-induction, first plain, then with the simple-path
//! constraint.

mod reduce;
mod unroll;

use std::time::{Duration, Instant};

use crate::netlist::{ExprId, Simulator, TransitionSystem};
use crate::property::Directive;
use crate::sat::{Cnf, ExternalSolver, SatError, SatResult, SolveStatus, Solver};
use crate::trace::Trace;

pub use reduce::{coi_reduce, Reduced};
pub use unroll::{unroll, ClauseDb, InitMode, Unroller, VarMap};

/// Default per-check wall-clock budget.
pub const DEFAULT_BUDGET: Duration = Duration::from_secs(60);

#[derive(Debug, Clone)]
pub struct BmcOptions {
    /// Deepest cycle searched: frames `0..=bound`.
    pub bound: usize,
    pub induction: bool,
    pub simple_path: bool,
    /// Wall-clock budget for one call; `None` is unlimited.
    pub budget: Option<Duration>,
    /// Seeds the solver's initial variable order (0 keeps natural order).
    pub seed: u64,
    /// Solve base-case queries with an external DIMACS solver instead.
    pub external: Option<ExternalSolver>,
}

impl Default for BmcOptions {
    fn default() -> Self {
        BmcOptions { bound: 12, induction: true, simple_path: true, budget: Some(DEFAULT_BUDGET), seed: 0, external: None }
    }
}

/// Outcome of one check. For covers, `Failed` means the condition was
/// reached (covered) and `Proven` means it is unreachable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Verdict {
    Proven,
    /// No counterexample in cycles `0..=k`.
    BoundedProven(usize),
    Failed,
}

impl Verdict {
    /// Label in the vocabulary of the directive.
    pub fn label(self, d: Directive) -> String {
        match (d, self) {
            (Directive::Cover, Verdict::Failed) => "Covered".into(),
            (Directive::Cover, Verdict::Proven) => "Unreachable".into(),
            (Directive::Cover, Verdict::BoundedProven(k)) => format!("Uncovered({k})"),
            (_, Verdict::Proven) => "Proven".into(),
            (_, Verdict::BoundedProven(k)) => format!("BoundedProven({k})"),
            (_, Verdict::Failed) => "Failed".into(),
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label(Directive::Assert))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CheckStats {
    /// Number of base-case frames fully decided.
    pub frames: usize,
    /// Induction depth that closed the proof.
    pub induction_depth: Option<usize>,
    pub simple_path_used: bool,
    pub vars: usize,
    pub clauses: usize,
    pub conflicts: u64,
    pub solves: u64,
    pub elapsed: Duration,
    /// The budget ran out before the search completed.
    pub budget_exceeded: bool,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub verdict: Verdict,
    /// Counterexample or cover witness, cycles `0..=failed_at`.
    pub trace: Option<Trace>,
    pub failed_at: Option<usize>,
    pub stats: CheckStats,
}

impl CheckResult {
    /// True when the base case ran to the full bound (with or without a
    /// closing induction).
    pub fn complete(&self) -> bool {
        !self.stats.budget_exceeded
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BmcError {
    #[error("target is not a width-1 expression")]
    Width,
    #[error("system is not well formed: {0}")]
    System(#[from] crate::netlist::NetlistError),
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error("solver model does not satisfy the formula")]
    BadModel,
    #[error("witness does not replay on the system at cycle {0}")]
    Replay(usize),
}

/// A check target: the obligation of an assertion or the condition of a
/// cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Target {
    pub directive: Directive,
    pub expr: ExprId,
}

impl Target {
    pub fn assert(expr: ExprId) -> Self {
        Target { directive: Directive::Assert, expr }
    }
    pub fn cover(expr: ExprId) -> Self {
        Target { directive: Directive::Cover, expr }
    }
}

pub fn check_assert(ts: &TransitionSystem, obligation: ExprId, opts: &BmcOptions) -> Result<CheckResult, BmcError> {
    Ok(check_many(ts, &[Target::assert(obligation)], opts)?.remove(0))
}

pub fn check_cover(ts: &TransitionSystem, condition: ExprId, opts: &BmcOptions) -> Result<CheckResult, BmcError> {
    Ok(check_many(ts, &[Target::cover(condition)], opts)?.remove(0))
}

/// Literal that is true in frame `f` exactly when the target is hit.
fn bad_lit<D: ClauseDb>(u: &mut Unroller<'_, D>, f: usize, t: &Target) -> crate::sat::Lit {
    let l = u.lit(f, t.expr);
    match t.directive {
        Directive::Cover => l,
        Directive::Assert | Directive::Assume => !l,
    }
}

/// Checks several targets on one system, sharing the unrolling.
pub fn check_many(ts: &TransitionSystem, targets: &[Target], opts: &BmcOptions) -> Result<Vec<CheckResult>, BmcError> {
    ts.validate()?;
    if targets.iter().any(|t| ts.width(t.expr) != 1) {
        return Err(BmcError::Width);
    }
    let start = Instant::now();
    let deadline = opts.budget.map(|b| start + b);
    let n = targets.len();
    let mut verdicts: Vec<Option<(Verdict, Option<Trace>, Option<usize>)>> = vec![None; n];
    let mut stats = CheckStats::default();
    let mut timed_out = false;

    // Base case.
    let mut solver = Solver::new().with_seed(opts.seed);
    solver.set_deadline(deadline);
    let mut u = Unroller::new(ts, solver, InitMode::Reset);
    for k in 0..=opts.bound {
        u.add_frame();
        u.assume_frame(k);
        for (i, t) in targets.iter().enumerate() {
            if verdicts[i].is_some() {
                continue;
            }
            let b = bad_lit(&mut u, k, t);
            if expired(deadline) {
                timed_out = true;
                break;
            }
            let (status, ext_trace) = match &opts.external {
                Some(ext) => external_query(ext, ts, t, k)?,
                None => (u.db.solve(&[b]), None),
            };
            match status {
                SolveStatus::Sat => {
                    let trace = match ext_trace {
                        Some(tr) => tr,
                        None => {
                            if !u.db.verify_model() {
                                return Err(BmcError::BadModel);
                            }
                            let s = &u.db;
                            u.extract(k, |l| s.model_value(l))
                        }
                    };
                    verify_witness(ts, &trace, t)?;
                    verdicts[i] = Some((Verdict::Failed, Some(trace), Some(k)));
                }
                SolveStatus::Unsat => {
                    u.db.add_clause(&[!b]);
                }
                SolveStatus::Unknown => {
                    timed_out = true;
                    break;
                }
            }
        }
        if timed_out {
            break;
        }
        stats.frames = k + 1;
        if verdicts.iter().all(Option::is_some) {
            break;
        }
    }
    absorb(&mut stats, &u.db);
    drop(u);

    // Induction.
    if opts.induction && !timed_out && stats.frames == opts.bound + 1 {
        let modes: &[bool] = if opts.simple_path { &[false, true] } else { &[false] };
        'modes: for &simple in modes {
            if verdicts.iter().all(Option::is_some) {
                break;
            }
            let mut solver = Solver::new().with_seed(opts.seed);
            solver.set_deadline(deadline);
            let mut u = Unroller::new(ts, solver, InitMode::Free);
            u.add_frame();
            u.assume_frame(0);
            let mut hyps: Vec<Vec<crate::sat::Lit>> = vec![Vec::new(); n];
            for j in 1..=opts.bound.max(1) {
                u.add_frame();
                u.assume_frame(j);
                if simple {
                    for a in 0..j {
                        u.assert_distinct(a, j);
                    }
                }
                for (i, t) in targets.iter().enumerate() {
                    if verdicts[i].is_some() {
                        continue;
                    }
                    let h = bad_lit(&mut u, j - 1, t);
                    hyps[i].push(!h);
                    let b = bad_lit(&mut u, j, t);
                    if expired(deadline) {
                        timed_out = true;
                        absorb(&mut stats, &u.db);
                        break 'modes;
                    }
                    let mut assumptions = hyps[i].clone();
                    assumptions.push(b);
                    match u.db.solve(&assumptions) {
                        SolveStatus::Unsat => {
                            verdicts[i] = Some((Verdict::Proven, None, None));
                            stats.induction_depth = Some(stats.induction_depth.map_or(j, |d| d.max(j)));
                            stats.simple_path_used |= simple;
                        }
                        SolveStatus::Sat => {}
                        SolveStatus::Unknown => {
                            timed_out = true;
                            absorb(&mut stats, &u.db);
                            break 'modes;
                        }
                    }
                }
                if verdicts.iter().all(Option::is_some) {
                    break;
                }
            }
            absorb(&mut stats, &u.db);
        }
    }

    stats.budget_exceeded = timed_out;
    stats.elapsed = start.elapsed();
    let reached = stats.frames.saturating_sub(1);
    Ok(verdicts
        .into_iter()
        .map(|v| {
            let (verdict, trace, failed_at) = v.unwrap_or((Verdict::BoundedProven(reached), None, None));
            CheckResult { verdict, trace, failed_at, stats: stats.clone() }
        })
        .collect())
}

fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

fn absorb(stats: &mut CheckStats, s: &Solver) {
    let st = &s.stats;
    stats.vars += s.num_vars();
    stats.clauses += s.num_clauses();
    stats.conflicts += st.conflicts;
    stats.solves += st.solves;
}

/// Simulates the witness inputs from reset and confirms that the recorded
/// states are reproduced, assumptions hold throughout and the target is hit
/// in the last cycle.
pub fn verify_witness(ts: &TransitionSystem, trace: &Trace, t: &Target) -> Result<(), BmcError> {
    trace.check_shape(ts).map_err(|_| BmcError::Replay(0))?;
    let mut sim = Simulator::with_roots(ts, &[t.expr]);
    let mut state = ts.init_state();
    let last = trace.len().checked_sub(1).ok_or(BmcError::Replay(0))?;
    for c in 0..=last {
        if trace.states[c] != state {
            return Err(BmcError::Replay(c));
        }
        sim.evaluate(&state, &trace.inputs[c]);
        if !sim.assumptions_hold() {
            return Err(BmcError::Replay(c));
        }
        state = sim.next_state();
    }
    let hit = sim.expr(t.expr) == 1;
    let want = t.directive == Directive::Cover;
    if hit != want {
        return Err(BmcError::Replay(last));
    }
    Ok(())
}

/// One-shot CNF for "the target is hit in cycle `k`": the full unrolling of
/// cycles `0..=k` with assumptions plus the target literal as a unit.
pub fn query_cnf<'a>(ts: &'a TransitionSystem, t: &Target, k: usize) -> Unroller<'a, Cnf> {
    let mut u = Unroller::new(ts, Cnf::new(), InitMode::Reset);
    for f in 0..=k {
        u.add_frame();
        u.assume_frame(f);
    }
    let b = bad_lit(&mut u, k, t);
    u.db.add_clause(&[b]);
    u
}

/// DIMACS text of [`query_cnf`].
pub fn export_dimacs(ts: &TransitionSystem, t: &Target, k: usize) -> String {
    query_cnf(ts, t, k).db.to_dimacs()
}

fn external_query(
    ext: &ExternalSolver,
    ts: &TransitionSystem,
    t: &Target,
    k: usize,
) -> Result<(SolveStatus, Option<Trace>), BmcError> {
    let u = query_cnf(ts, t, k);
    Ok(match ext.solve(&u.db)? {
        SatResult::Sat(model) => {
            if u.db.first_violated(&model).is_some() {
                return Err(BmcError::BadModel);
            }
            let tr = u.extract(k, |l| model.get(l.var() as usize).copied().unwrap_or(false) != l.is_neg());
            (SolveStatus::Sat, Some(tr))
        }
        SatResult::Unsat => (SolveStatus::Unsat, None),
        SatResult::Unknown => (SolveStatus::Unknown, None),
    })
}
