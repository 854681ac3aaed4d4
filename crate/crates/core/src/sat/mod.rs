// SPDX-License-Identifier: Apache-2.0

//! Propositional satisfiability: literals, CNF formulas, DIMACS exchange, an
//! internal CDCL solver and a bridge to external DIMACS solvers.

mod external;
mod solver;

use std::fmt::Write as _;
use std::ops::Not;

pub use external::ExternalSolver;
pub use solver::{SolveStatus, Solver, SolverStats};

/// A literal: variable index (0-based) and polarity.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Lit(pub(crate) u32);

impl Lit {
    pub fn new(var: u32, positive: bool) -> Lit {
        Lit((var << 1) | u32::from(!positive))
    }
    pub fn var(self) -> u32 {
        self.0 >> 1
    }
    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }
    #[inline]
    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }
    /// DIMACS form: variable `v` is `v + 1`, negation is a minus sign.
    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.var()) + 1;
        if self.is_neg() {
            -v
        } else {
            v
        }
    }
    pub fn from_dimacs(d: i64) -> Option<Lit> {
        if d == 0 || d.unsigned_abs() > u64::from(u32::MAX >> 1) {
            return None;
        }
        Some(Lit::new((d.unsigned_abs() - 1) as u32, d > 0))
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SatError {
    #[error("DIMACS parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("external solver I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("external solver failed: {0}")]
    External(String),
    #[error("solver returned a model that violates clause {0}")]
    BadModel(usize),
}

/// Result of a one-shot solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// Model indexed by variable.
    Sat(Vec<bool>),
    Unsat,
    Unknown,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_var(&mut self) -> Lit {
        let v = self.num_vars;
        self.num_vars += 1;
        Lit::new(v, true)
    }

    pub fn add_clause(&mut self, lits: &[Lit]) {
        for l in lits {
            self.num_vars = self.num_vars.max(l.var() + 1);
        }
        self.clauses.push(lits.to_vec());
    }

    /// Index of the first clause not satisfied by `model`, if any.
    pub fn first_violated(&self, model: &[bool]) -> Option<usize> {
        self.clauses.iter().position(|c| {
            !c.iter().any(|l| model.get(l.var() as usize).copied().unwrap_or(false) != l.is_neg())
        })
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = String::with_capacity(16 * self.clauses.len() + 32);
        let _ = writeln!(s, "p cnf {} {}", self.num_vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let _ = write!(s, "{} ", l.to_dimacs());
            }
            s.push_str("0\n");
        }
        s
    }

    /// Parses DIMACS CNF. Comment lines (`c`) are skipped; clauses may span
    /// lines and are terminated by `0`.
    pub fn from_dimacs(text: &str) -> Result<Cnf, SatError> {
        let mut cnf = Cnf::new();
        let mut header: Option<(u32, usize)> = None;
        let mut cur: Vec<Lit> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line_no = ln + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('c') || t.starts_with('%') {
                continue;
            }
            if t.starts_with('p') {
                let f: Vec<&str> = t.split_whitespace().collect();
                if f.len() != 4 || f[1] != "cnf" {
                    return Err(SatError::Parse { line: line_no, msg: "expected `p cnf <vars> <clauses>`".into() });
                }
                let nv = f[2].parse().map_err(|_| SatError::Parse { line: line_no, msg: "bad variable count".into() })?;
                let nc = f[3].parse().map_err(|_| SatError::Parse { line: line_no, msg: "bad clause count".into() })?;
                header = Some((nv, nc));
                cnf.num_vars = nv;
                continue;
            }
            let Some((nv, _)) = header else {
                return Err(SatError::Parse { line: line_no, msg: "clause before header".into() });
            };
            for tok in t.split_whitespace() {
                let d: i64 = tok
                    .parse()
                    .map_err(|_| SatError::Parse { line: line_no, msg: format!("bad literal `{tok}`") })?;
                if d == 0 {
                    cnf.clauses.push(std::mem::take(&mut cur));
                    continue;
                }
                if d.unsigned_abs() > u64::from(nv) {
                    return Err(SatError::Parse { line: line_no, msg: format!("literal {d} exceeds declared variables") });
                }
                cur.push(Lit::from_dimacs(d).expect("non-zero"));
            }
        }
        let Some((_, nc)) = header else {
            return Err(SatError::Parse { line: 0, msg: "missing header".into() });
        };
        if !cur.is_empty() {
            cnf.clauses.push(cur);
        }
        if cnf.clauses.len() != nc {
            return Err(SatError::Parse {
                line: 0,
                msg: format!("header declares {nc} clauses, found {}", cnf.clauses.len()),
            });
        }
        Ok(cnf)
    }
}

/// Solves `cnf` with the internal solver and checks the model.
pub fn solve(cnf: &Cnf) -> Result<SatResult, SatError> {
    solve_seeded(cnf, 0)
}

pub fn solve_seeded(cnf: &Cnf, seed: u64) -> Result<SatResult, SatError> {
    let mut s = Solver::new().with_seed(seed);
    s.ensure_vars(cnf.num_vars as usize);
    for c in &cnf.clauses {
        if !s.add_clause(c) {
            return Ok(SatResult::Unsat);
        }
    }
    match s.solve(&[]) {
        SolveStatus::Sat => {
            let mut model = s.model().to_vec();
            model.resize(cnf.num_vars as usize, false);
            if let Some(i) = cnf.first_violated(&model) {
                return Err(SatError::BadModel(i));
            }
            Ok(SatResult::Sat(model))
        }
        SolveStatus::Unsat => Ok(SatResult::Unsat),
        SolveStatus::Unknown => Ok(SatResult::Unknown),
    }
}
