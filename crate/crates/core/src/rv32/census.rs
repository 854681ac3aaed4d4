// SPDX-License-Identifier: Apache-2.0

//! Register-bit census: a dense numbering of every register bit.

use std::collections::HashMap;
use std::fmt::Write;

use crate::netlist::TransitionSystem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensusEntry {
    pub register: String,
    pub bit: u32,
    pub id: u32,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CensusError {
    #[error("unknown register `{0}`")]
    UnknownRegister(String),
    #[error("bit {bit} out of range for `{register}` (width {width})")]
    BitOutOfRange { register: String, bit: u32, width: u32 },
    #[error("bit id {0} out of range")]
    IdOutOfRange(u64),
    #[error("malformed bit reference `{0}` (expected `register:bit` or a numeric id)")]
    Malformed(String),
    #[error("census table line {0}: {1}")]
    Table(usize, String),
}

/// Ordered list of register bits. Ids are dense in `[0, total_bits)`, bits
/// of one register are contiguous and least significant first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Census {
    entries: Vec<CensusEntry>,
    regs: Vec<(String, u32, u32)>,
    by_name: HashMap<String, usize>,
}

impl Census {
    /// Every register of `ts`, in declaration order.
    pub fn from_registers(ts: &TransitionSystem) -> Census {
        let mut c = Census::default();
        for r in ts.registers() {
            let net = ts.net(r.net);
            c.push(&net.name, net.width as u32);
        }
        c
    }

    fn push(&mut self, name: &str, width: u32) {
        let start = self.entries.len() as u32;
        for bit in 0..width {
            self.entries.push(CensusEntry { register: name.to_string(), bit, id: start + bit });
        }
        self.by_name.insert(name.to_string(), self.regs.len());
        self.regs.push((name.to_string(), start, width));
    }

    pub fn total_bits(&self) -> u32 {
        self.entries.len() as u32
    }

    pub fn entries(&self) -> &[CensusEntry] {
        &self.entries
    }

    pub fn entry(&self, id: u32) -> Option<&CensusEntry> {
        self.entries.get(id as usize)
    }

    /// `(name, first id, width)` per register.
    pub fn registers(&self) -> impl Iterator<Item = (&str, u32, u32)> {
        self.regs.iter().map(|(n, s, w)| (n.as_str(), *s, *w))
    }

    pub fn lookup(&self, register: &str, bit: u32) -> Result<u32, CensusError> {
        let &i = self.by_name.get(register).ok_or_else(|| CensusError::UnknownRegister(register.to_string()))?;
        let (_, start, width) = &self.regs[i];
        if bit >= *width {
            return Err(CensusError::BitOutOfRange { register: register.to_string(), bit, width: *width });
        }
        Ok(start + bit)
    }

    /// Parses `register:bit` or a plain numeric id.
    pub fn parse_bit(&self, spec: &str) -> Result<u32, CensusError> {
        let spec = spec.trim();
        if let Some((reg, bit)) = spec.rsplit_once(':') {
            let bit: u32 = bit.parse().map_err(|_| CensusError::Malformed(spec.to_string()))?;
            return self.lookup(reg, bit);
        }
        let id: u64 = spec.parse().map_err(|_| CensusError::Malformed(spec.to_string()))?;
        if id >= self.total_bits() as u64 {
            return Err(CensusError::IdOutOfRange(id));
        }
        Ok(id as u32)
    }

    /// `register:bit` label of an id.
    pub fn label(&self, id: u32) -> String {
        match self.entry(id) {
            Some(e) => format!("{}:{}", e.register, e.bit),
            None => format!("#{id}"),
        }
    }

    /// Text table, one bit per line: `global_bit_id register_name bit_index`.
    pub fn to_table(&self) -> String {
        let mut s = String::from("# global_bit_id register_name bit_index\n");
        for e in &self.entries {
            let _ = writeln!(s, "{} {} {}", e.id, e.register, e.bit);
        }
        s
    }

    pub fn from_table(text: &str) -> Result<Census, CensusError> {
        let mut c = Census::default();
        let mut cur: Option<(String, u32)> = None;
        for (ln, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = t.split_whitespace().collect();
            let bad = |m: &str| CensusError::Table(ln + 1, m.to_string());
            if f.len() != 3 {
                return Err(bad("expected three fields"));
            }
            let id: u32 = f[0].parse().map_err(|_| bad("bad id"))?;
            let bit: u32 = f[2].parse().map_err(|_| bad("bad bit index"))?;
            let expected_id = c.entries.len() as u32 + cur.as_ref().map_or(0, |(_, w)| *w);
            if id != expected_id {
                return Err(bad("ids must be dense and ascending"));
            }
            match &mut cur {
                Some((name, w)) if name == f[1] && bit == *w => *w += 1,
                _ => {
                    if bit != 0 {
                        return Err(bad("register bits must start at 0"));
                    }
                    if let Some((name, w)) = cur.take() {
                        c.push(&name, w);
                    }
                    cur = Some((f[1].to_string(), 1));
                }
            }
        }
        if let Some((name, w)) = cur {
            c.push(&name, w);
        }
        Ok(c)
    }
}
