// SPDX-License-Identifier: Apache-2.0

//! Memory environment: binds a core's memory-side inputs either to free
//! inputs under validity assumptions (symbolic mode) or to a read-only
//! program image (concrete mode). Both ports answer one cycle after the
//! request.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::netlist::{ExprId, ExprPool, NetlistError, TransitionSystem};
use crate::rv32::{decode_logic, Class, CoreConfig, WFI_WORD};

/// Free input carrying the fetched word in symbolic mode.
pub const IMEM_WORD: &str = "env_imem_word";
/// Free input carrying load data in symbolic mode.
pub const DMEM_WORD: &str = "env_dmem_word";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramImage {
    pub base: u32,
    pub words: Vec<u32>,
}

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("program image line {line}: {msg}")]
    Image { line: usize, msg: String },
    #[error("program image base {0:#010x} is not 4-aligned")]
    Misaligned(u32),
    #[error("core has no net `{0}`; was it already bound?")]
    Interface(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ProgramImage {
    pub fn new(base: u32, words: Vec<u32>) -> Result<Self, EnvError> {
        if !base.is_multiple_of(4) {
            return Err(EnvError::Misaligned(base));
        }
        Ok(ProgramImage { base, words })
    }

    pub fn end(&self) -> u64 {
        self.base as u64 + 4 * self.words.len() as u64
    }

    pub fn word_at(&self, addr: u32) -> Option<u32> {
        let off = addr.wrapping_sub(self.base) as u64 / 4;
        if (addr as u64) < self.base as u64 || addr as u64 >= self.end() {
            return None;
        }
        self.words.get(off as usize).copied()
    }

    /// Address of the last word.
    pub fn last_addr(&self) -> Option<u32> {
        (!self.words.is_empty()).then(|| self.base + 4 * (self.words.len() as u32 - 1))
    }

    /// Text form: base address on the first line, then one word per line,
    /// all as 8 hex digits.
    pub fn to_text(&self) -> String {
        let mut s = format!("{:08x}\n", self.base);
        for w in &self.words {
            let _ = writeln!(s, "{w:08x}");
        }
        s
    }

    /// Parses the text form. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, EnvError> {
        let mut vals = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                continue;
            }
            let t = t.strip_prefix("0x").unwrap_or(t);
            if t.len() != 8 {
                return Err(EnvError::Image { line: i + 1, msg: format!("expected 8 hex digits, got `{t}`") });
            }
            let v = u32::from_str_radix(t, 16)
                .map_err(|_| EnvError::Image { line: i + 1, msg: format!("bad hex word `{t}`") })?;
            vals.push(v);
        }
        let (&base, words) =
            vals.split_first().ok_or(EnvError::Image { line: 0, msg: "missing base address".into() })?;
        ProgramImage::new(base, words.to_vec())
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Word-addressed lookup as logic; out-of-image addresses read 0.
    pub fn lookup_expr(&self, x: &mut ExprPool, addr: ExprId) -> ExprId {
        let hi = x.slice(addr, 31, 2);
        let mut v = x.constant(32, 0);
        for (i, &w) in self.words.iter().enumerate().rev() {
            let wa = (self.base as u64 / 4) + i as u64;
            let hit = x.eq_const(hi, wa & 0x3FFF_FFFF);
            let c = x.constant(32, w as u64);
            v = x.ite(hit, c, v);
        }
        v
    }

    fn contains_expr(&self, x: &mut ExprPool, addr: ExprId) -> ExprId {
        let base = x.constant(32, self.base as u64);
        let off = x.sub(addr, base);
        let size = x.constant(32, (4 * self.words.len() as u64).min(u32::MAX as u64));
        x.ult(off, size)
    }
}

/// Counted loop: `i = 10; while i != 0 { i -= 1 }; a = i`, terminated by
/// WFI so that a fault-free run halts.
pub fn loop_program(base: u32) -> ProgramImage {
    ProgramImage::new(
        base,
        vec![
            0x00A0_0093, // addi x1, x0, 10
            0x0000_8663, // beq  x1, x0, +12
            0xFFF0_8093, // addi x1, x1, -1
            0xFF9F_F06F, // jal  x0, -8
            0x0000_8193, // addi x3, x1, 0
            WFI_WORD,
        ],
    )
    .expect("aligned base")
}

/// A program without WFI whose branch word differs from WFI in one bit.
pub fn wfi_free_program(base: u32) -> ProgramImage {
    ProgramImage::new(
        base,
        vec![
            0x0050_0293, // addi x5, x0, 5
            0x1050_0063, // beq  x0, x5, +256 (never taken)
            0x0012_8293, // addi x5, x5, 1
            0xFF9F_F06F, // jal  x0, -8
        ],
    )
    .expect("aligned base")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum EnvMode {
    #[default]
    Symbolic,
    Concrete(ProgramImage),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub mode: EnvMode,
    pub alignment_constraint: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig { mode: EnvMode::Symbolic, alignment_constraint: true }
    }
}

/// True iff `word` decodes to a supported instruction for a core with
/// `regfile_size` registers and, when `alignment` is set, `addr` is
/// 4-aligned.
pub fn instruction_validity_constraint(
    x: &mut ExprPool,
    word: ExprId,
    addr: ExprId,
    regfile_size: u32,
    alignment: bool,
) -> ExprId {
    let d = decode_logic(x, word, regfile_size);
    let legal = x.not(d.is(Class::ILLEGAL));
    if !alignment {
        return legal;
    }
    let low = x.slice(addr, 1, 0);
    let aligned = x.eq_const(low, 0);
    x.and(legal, aligned)
}

fn net(ts: &mut TransitionSystem, name: &str) -> Result<ExprId, EnvError> {
    ts.sig_named(name).map_err(|_| EnvError::Interface(name.to_string()))
}

fn bind(ts: &mut TransitionSystem, name: &str, e: ExprId) -> Result<(), EnvError> {
    let id = ts.net_id(name).ok_or_else(|| EnvError::Interface(name.to_string()))?;
    ts.bind_input(id, e)?;
    Ok(())
}

/// Binds the memory inputs of a core (possibly already fault-instrumented).
///
/// Symbolic mode adds the free inputs [`IMEM_WORD`] and [`DMEM_WORD`]; each
/// granted fetch must satisfy the validity constraint and must not be ECALL
/// or EBREAK. Concrete mode serves fetches and loads from `image`; accesses
/// outside it are access faults. Access faults are also raised outside the
/// configured legal ranges.
pub fn attach_env(ts: &mut TransitionSystem, core: &CoreConfig, env: &EnvConfig) -> Result<(), EnvError> {
    let fpend = net(ts, "fetch_pending_q")?;
    let faddr = net(ts, "fetch_addr_q")?;
    let wait = net(ts, "lsu_wait_q")?;
    let laddr = net(ts, "lsu_addr_q")?;
    match &env.mode {
        EnvMode::Symbolic => {
            let iw = ts.add_input(IMEM_WORD, 32)?;
            let dw = ts.add_input(DMEM_WORD, 32)?;
            let (iw, dw) = (ts.sig(iw), ts.sig(dw));
            let x = ts.x();
            let ilegal = core.legal_imem.contains_expr(x, faddr);
            let ierr = x.not(ilegal);
            let dlegal = core.legal_dmem.contains_expr(x, laddr);
            let derr = x.not(dlegal);
            let last = x.eq_const(iw, WFI_WORD as u64);
            let valid = instruction_validity_constraint(x, iw, faddr, core.regfile_size, env.alignment_constraint);
            let ecall = x.eq_const(iw, 0x0000_0073);
            let ebreak = x.eq_const(iw, 0x0010_0073);
            let sys = x.or(ecall, ebreak);
            let no_sys = x.not(sys);
            let ok = x.and(valid, no_sys);
            let assume = x.implies(fpend, ok);
            ts.add_assumption(assume)?;
            bind(ts, "imem_gnt", fpend)?;
            bind(ts, "imem_rdata", iw)?;
            bind(ts, "imem_err", ierr)?;
            bind(ts, "imem_last", last)?;
            bind(ts, "dmem_gnt", wait)?;
            bind(ts, "dmem_rdata", dw)?;
            bind(ts, "dmem_err", derr)?;
        }
        EnvMode::Concrete(img) => {
            let x = ts.x();
            let word = img.lookup_expr(x, faddr);
            let in_img = img.contains_expr(x, faddr);
            let ilegal = core.legal_imem.contains_expr(x, faddr);
            let iok = x.and(in_img, ilegal);
            let ierr = x.not(iok);
            let last = match img.last_addr() {
                Some(a) => {
                    let hi = x.slice(faddr, 31, 2);
                    x.eq_const(hi, (a >> 2) as u64)
                }
                None => x.bool_const(false),
            };
            let dword = img.lookup_expr(x, laddr);
            let d_in = img.contains_expr(x, laddr);
            let dlegal = core.legal_dmem.contains_expr(x, laddr);
            let dok = x.and(d_in, dlegal);
            let derr = x.not(dok);
            if env.alignment_constraint {
                let low = x.slice(faddr, 1, 0);
                let aligned = x.eq_const(low, 0);
                let assume = x.implies(fpend, aligned);
                ts.add_assumption(assume)?;
            }
            bind(ts, "imem_gnt", fpend)?;
            bind(ts, "imem_rdata", word)?;
            bind(ts, "imem_err", ierr)?;
            bind(ts, "imem_last", last)?;
            bind(ts, "dmem_gnt", wait)?;
            bind(ts, "dmem_rdata", dword)?;
            bind(ts, "dmem_err", derr)?;
        }
    }
    ts.validate()?;
    Ok(())
}
