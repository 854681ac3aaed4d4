// SPDX-License-Identifier: Apache-2.0

//! Runs an external solver on a DIMACS file. The solver is expected to follow
//! the usual competition output conventions (`s SATISFIABLE` /
//! `s UNSATISFIABLE`, `v` model lines, exit codes 10/20).

use std::path::PathBuf;
use std::process::Command;
use std::time::Duration;

use super::{Cnf, Lit, SatError, SatResult};

#[derive(Debug, Clone)]
pub struct ExternalSolver {
    pub program: PathBuf,
    pub args: Vec<String>,
    pub timeout: Option<Duration>,
}

impl ExternalSolver {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExternalSolver { program: program.into(), args: Vec::new(), timeout: None }
    }

    pub fn solve(&self, cnf: &Cnf) -> Result<SatResult, SatError> {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("seuformal-{}-{}.cnf", std::process::id(), unique()));
        std::fs::write(&path, cnf.to_dimacs())?;
        let out = Command::new(&self.program).args(&self.args).arg(&path).output();
        let _ = std::fs::remove_file(&path);
        let out = out?;
        let stdout = String::from_utf8_lossy(&out.stdout);
        let res = parse_output(&stdout, cnf.num_vars)?;
        if let SatResult::Sat(m) = &res {
            if let Some(i) = cnf.first_violated(m) {
                return Err(SatError::BadModel(i));
            }
        }
        match (&res, out.status.code()) {
            (SatResult::Unknown, Some(c)) if c != 0 && c != 10 && c != 20 => {
                Err(SatError::External(format!("exit code {c}: {}", String::from_utf8_lossy(&out.stderr).trim())))
            }
            _ => Ok(res),
        }
    }
}

fn unique() -> u64 {
    use std::sync::atomic::{AtomicU64, Ordering};
    static N: AtomicU64 = AtomicU64::new(0);
    N.fetch_add(1, Ordering::Relaxed)
}

/// Parses competition-format solver output.
pub(crate) fn parse_output(text: &str, num_vars: u32) -> Result<SatResult, SatError> {
    let mut status = None;
    let mut model = vec![false; num_vars as usize];
    for line in text.lines() {
        let t = line.trim();
        if let Some(s) = t.strip_prefix("s ") {
            status = Some(match s.trim() {
                "SATISFIABLE" => true,
                "UNSATISFIABLE" => false,
                "UNKNOWN" => return Ok(SatResult::Unknown),
                other => return Err(SatError::External(format!("unexpected status `{other}`"))),
            });
        } else if let Some(v) = t.strip_prefix("v ") {
            for tok in v.split_whitespace() {
                let d: i64 = tok.parse().map_err(|_| SatError::External(format!("bad model literal `{tok}`")))?;
                if let Some(l) = Lit::from_dimacs(d) {
                    if let Some(slot) = model.get_mut(l.var() as usize) {
                        *slot = !l.is_neg();
                    }
                }
            }
        }
    }
    Ok(match status {
        Some(true) => SatResult::Sat(model),
        Some(false) => SatResult::Unsat,
        None => SatResult::Unknown,
    })
}
