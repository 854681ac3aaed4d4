// SPDX-License-Identifier: Apache-2.0

//! Execution traces: per-cycle inputs and register state, with a plain-text
//! exchange format (`cycle net value` lines).

use std::fmt::Write as _;

use crate::netlist::TransitionSystem;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub input_names: Vec<String>,
    pub register_names: Vec<String>,
    /// `inputs[c][i]`: value of input slot `i` in cycle `c`.
    pub inputs: Vec<Vec<u64>>,
    /// `states[c][r]`: value of register slot `r` at the start of cycle `c`.
    pub states: Vec<Vec<u64>>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("trace line {0}: {1}")]
    Parse(usize, String),
    #[error("trace does not fit the system: {0}")]
    Shape(String),
}

impl Trace {
    pub fn empty_for(ts: &TransitionSystem) -> Trace {
        Trace {
            input_names: ts.inputs().iter().map(|&i| ts.net(i).name.clone()).collect(),
            register_names: ts.registers().iter().map(|r| ts.net(r.net).name.clone()).collect(),
            inputs: Vec::new(),
            states: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn input(&self, cycle: usize, name: &str) -> Option<u64> {
        let i = self.input_names.iter().position(|n| n == name)?;
        self.inputs.get(cycle).map(|v| v[i])
    }

    pub fn register(&self, cycle: usize, name: &str) -> Option<u64> {
        let i = self.register_names.iter().position(|n| n == name)?;
        self.states.get(cycle).map(|v| v[i])
    }

    /// Checks that names line up with `ts` slot order and the shape is
    /// consistent.
    pub fn check_shape(&self, ts: &TransitionSystem) -> Result<(), TraceError> {
        let ins: Vec<&str> = ts.inputs().iter().map(|&i| ts.net(i).name.as_str()).collect();
        let regs: Vec<&str> = ts.registers().iter().map(|r| ts.net(r.net).name.as_str()).collect();
        if self.input_names != ins {
            return Err(TraceError::Shape("input names differ".into()));
        }
        if self.register_names != regs {
            return Err(TraceError::Shape("register names differ".into()));
        }
        if self.inputs.len() != self.states.len() {
            return Err(TraceError::Shape("input and state cycle counts differ".into()));
        }
        if self.inputs.iter().any(|v| v.len() != ins.len()) || self.states.iter().any(|v| v.len() != regs.len()) {
            return Err(TraceError::Shape("ragged rows".into()));
        }
        Ok(())
    }

    /// Reorders by name onto the slot order of `ts`. Inputs missing from the
    /// trace read as 0; missing registers are an error.
    pub fn aligned_to(&self, ts: &TransitionSystem) -> Result<Trace, TraceError> {
        let mut out = Trace::empty_for(ts);
        let in_idx: Vec<Option<usize>> =
            out.input_names.iter().map(|n| self.input_names.iter().position(|m| m == n)).collect();
        let reg_idx: Vec<usize> = out
            .register_names
            .iter()
            .map(|n| {
                self.register_names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| TraceError::Shape(format!("register `{n}` missing from trace")))
            })
            .collect::<Result<_, _>>()?;
        for c in 0..self.len() {
            out.inputs.push(in_idx.iter().map(|i| i.map_or(0, |i| self.inputs[c][i])).collect());
            out.states.push(reg_idx.iter().map(|&i| self.states[c][i]).collect());
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# cycle net value");
        let _ = writeln!(s, "cycles {}", self.len());
        for c in 0..self.len() {
            for (n, v) in self.input_names.iter().zip(&self.inputs[c]) {
                let _ = writeln!(s, "{c} {n} {v:#x}");
            }
            for (n, v) in self.register_names.iter().zip(&self.states[c]) {
                let _ = writeln!(s, "{c} {n} {v:#x}");
            }
        }
        s
    }

    /// Parses the text form against `ts`, which supplies the net kinds and
    /// slot order.
    pub fn from_text(text: &str, ts: &TransitionSystem) -> Result<Trace, TraceError> {
        let mut t = Trace::empty_for(ts);
        let mut cycles: Option<usize> = None;
        let mut seen: Vec<Vec<bool>> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let l = line.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            let bad = |m: String| TraceError::Parse(ln + 1, m);
            let f: Vec<&str> = l.split_whitespace().collect();
            if f[0] == "cycles" {
                let n: usize = f.get(1).and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad cycle count".into()))?;
                cycles = Some(n);
                t.inputs = vec![vec![0; t.input_names.len()]; n];
                t.states = vec![vec![0; t.register_names.len()]; n];
                seen = vec![vec![false; t.register_names.len()]; n];
                continue;
            }
            let n = cycles.ok_or_else(|| bad("missing `cycles` header".into()))?;
            if f.len() != 3 {
                return Err(bad("expected `cycle net value`".into()));
            }
            let c: usize = f[0].parse().map_err(|_| bad(format!("bad cycle `{}`", f[0])))?;
            if c >= n {
                return Err(bad(format!("cycle {c} beyond trace length {n}")));
            }
            let v = parse_value(f[2]).ok_or_else(|| bad(format!("bad value `{}`", f[2])))?;
            if let Some(i) = t.input_names.iter().position(|m| m == f[1]) {
                t.inputs[c][i] = v;
            } else if let Some(r) = t.register_names.iter().position(|m| m == f[1]) {
                t.states[c][r] = v;
                seen[c][r] = true;
            } else {
                return Err(bad(format!("unknown net `{}`", f[1])));
            }
        }
        if cycles.is_none() {
            return Err(TraceError::Parse(0, "missing `cycles` header".into()));
        }
        if let Some((c, r)) =
            seen.iter().enumerate().find_map(|(c, row)| row.iter().position(|s| !s).map(|r| (c, r)))
        {
            return Err(TraceError::Shape(format!("no value for `{}` in cycle {c}", t.register_names[r])));
        }
        Ok(t)
    }
}

fn parse_value(s: &str) -> Option<u64> {
    if let Some(h) = s.strip_prefix("0x") {
        u64::from_str_radix(h, 16).ok()
    } else {
        s.parse().ok()
    }
}
