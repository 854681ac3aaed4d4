// SPDX-License-Identifier: Apache-2.0

//! A two-stage RV32I core (fetch; decode/execute) as a transition system,
//! with a retire interface for observation and a machine-mode trap model.
//!
//! Timing: a fetch request issued in cycle `t` is answered in `t + 1` and
//! the instruction executes in `t + 2`. Loads and stores take two cycles in
//! the execute stage (issue, then completion on the data grant). Taken
//! branches and jumps cost one bubble.

mod census;
mod decode;
mod lockstep;

use serde::{Deserialize, Serialize};

use crate::netlist::{ExprId, ExprPool, NetId, NetlistError, TransitionSystem};

pub use census::{Census, CensusEntry, CensusError};
pub use decode::{decode, decode_for, decode_logic, Class, DecodeLogic, DecodedInsn, WFI_WORD};
pub use lockstep::{compose_lockstep, LockstepError, GOLDEN, FAULTY};

pub const FSM_BOOT: u64 = 0;
pub const FSM_RUN: u64 = 1;
pub const FSM_TRAP: u64 = 2;
pub const FSM_SLEEP: u64 = 3;

/// mcause exception codes.
pub mod cause {
    pub const MISALIGNED_FETCH: u64 = 0;
    pub const FETCH_ACCESS: u64 = 1;
    pub const ILLEGAL: u64 = 2;
    pub const BREAKPOINT: u64 = 3;
    pub const LOAD_ACCESS: u64 = 5;
    pub const STORE_ACCESS: u64 = 7;
    pub const ECALL_M: u64 = 11;
    /// Reset value of mcause_q; not an exception code.
    pub const RESET: u64 = 0x3F;

    pub const ALL: [u64; 7] = [MISALIGNED_FETCH, FETCH_ACCESS, ILLEGAL, BREAKPOINT, LOAD_ACCESS, STORE_ACCESS, ECALL_M];
}

/// Half-open address interval `[base, base + size)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddrRange {
    pub base: u32,
    pub size: u64,
}

impl AddrRange {
    pub const FULL: AddrRange = AddrRange { base: 0, size: 1 << 32 };

    pub fn contains(&self, addr: u32) -> bool {
        (addr.wrapping_sub(self.base) as u64) < self.size
    }

    /// Width-1 membership test over a 32-bit address expression.
    pub fn contains_expr(&self, x: &mut ExprPool, addr: ExprId) -> ExprId {
        if self.size >= 1 << 32 {
            return x.bool_const(true);
        }
        let base = x.constant(32, self.base as u64);
        let off = x.sub(addr, base);
        let size = x.constant(32, self.size);
        x.ult(off, size)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoreConfig {
    pub regfile_size: u32,
    pub reset_pc: u32,
    pub trap_vector: u32,
    pub legal_imem: AddrRange,
    pub legal_dmem: AddrRange,
    pub cycle_counter_width: u32,
    /// Adds `dbg_q`, a register nothing reads.
    pub debug_register: bool,
}

impl Default for CoreConfig {
    fn default() -> Self {
        CoreConfig {
            regfile_size: 8,
            reset_pc: 0,
            trap_vector: 0x100,
            legal_imem: AddrRange::FULL,
            legal_dmem: AddrRange::FULL,
            cycle_counter_width: 8,
            debug_register: false,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("regfile_size must be 8, 16 or 32 (got {0})")]
    RegfileSize(u32),
    #[error("{0} range must be non-empty with a 4-aligned base")]
    Range(&'static str),
    #[error("cycle_counter_width must be in 2..=16 (got {0})")]
    CounterWidth(u32),
}

impl CoreConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if ![8, 16, 32].contains(&self.regfile_size) {
            return Err(ConfigError::RegfileSize(self.regfile_size));
        }
        for (name, r) in [("imem", self.legal_imem), ("dmem", self.legal_dmem)] {
            if r.size == 0 || r.size > 1 << 32 || r.base % 4 != 0 {
                return Err(ConfigError::Range(name));
            }
        }
        if !(2..=16).contains(&self.cycle_counter_width) {
            return Err(ConfigError::CounterWidth(self.cycle_counter_width));
        }
        Ok(())
    }
}

/// Retire-interface net names with their widths, in strobe-property order
/// (`valid` first), followed by `halt`.
pub const RETIRE_FIELDS: [(&str, u32); 16] = [
    ("valid", 1),
    ("insn", 32),
    ("rs1_addr", 5),
    ("rs2_addr", 5),
    ("rs1_rdata", 32),
    ("rs2_rdata", 32),
    ("rd_addr", 5),
    ("rd_wdata", 32),
    ("pc_rdata", 32),
    ("pc_wdata", 32),
    ("mem_addr", 32),
    ("mem_rmask", 4),
    ("mem_rdata", 32),
    ("mem_wmask", 4),
    ("mem_wdata", 32),
    ("halt", 1),
];

/// Handles to the retire nets of one core.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetireInterface {
    pub valid: NetId,
    pub insn: NetId,
    pub rs1_addr: NetId,
    pub rs2_addr: NetId,
    pub rs1_rdata: NetId,
    pub rs2_rdata: NetId,
    pub rd_addr: NetId,
    pub rd_wdata: NetId,
    pub pc_rdata: NetId,
    pub pc_wdata: NetId,
    pub mem_addr: NetId,
    pub mem_rmask: NetId,
    pub mem_rdata: NetId,
    pub mem_wmask: NetId,
    pub mem_wdata: NetId,
    pub halt: NetId,
}

impl RetireInterface {
    /// Looks the retire nets up by name, with an optional prefix such as
    /// `golden_`.
    pub fn resolve(ts: &TransitionSystem, prefix: &str) -> Option<RetireInterface> {
        let n = |f: &str| ts.net_id(&format!("{prefix}{f}"));
        Some(RetireInterface {
            valid: n("valid")?,
            insn: n("insn")?,
            rs1_addr: n("rs1_addr")?,
            rs2_addr: n("rs2_addr")?,
            rs1_rdata: n("rs1_rdata")?,
            rs2_rdata: n("rs2_rdata")?,
            rd_addr: n("rd_addr")?,
            rd_wdata: n("rd_wdata")?,
            pc_rdata: n("pc_rdata")?,
            pc_wdata: n("pc_wdata")?,
            mem_addr: n("mem_addr")?,
            mem_rmask: n("mem_rmask")?,
            mem_rdata: n("mem_rdata")?,
            mem_wmask: n("mem_wmask")?,
            mem_wdata: n("mem_wdata")?,
            halt: n("halt")?,
        })
    }

    pub fn nets(&self) -> [NetId; 16] {
        [
            self.valid,
            self.insn,
            self.rs1_addr,
            self.rs2_addr,
            self.rs1_rdata,
            self.rs2_rdata,
            self.rd_addr,
            self.rd_wdata,
            self.pc_rdata,
            self.pc_wdata,
            self.mem_addr,
            self.mem_rmask,
            self.mem_rdata,
            self.mem_wmask,
            self.mem_wdata,
            self.halt,
        ]
    }
}

/// Memory-side input names. The environment binds them.
pub const MEM_INPUTS: [(&str, u32); 7] = [
    ("imem_gnt", 1),
    ("imem_rdata", 32),
    ("imem_err", 1),
    ("imem_last", 1),
    ("dmem_gnt", 1),
    ("dmem_rdata", 32),
    ("dmem_err", 1),
];

/// A built core.
#[derive(Debug, Clone)]
pub struct Core {
    pub config: CoreConfig,
    pub ts: TransitionSystem,
    pub retire: RetireInterface,
    pub census: Census,
}

fn reg_read(x: &mut ExprPool, regs: &[ExprId], idx: ExprId) -> ExprId {
    let mut v = x.constant(32, 0);
    for (i, &r) in regs.iter().enumerate().skip(1) {
        let hit = x.eq_const(idx, i as u64);
        v = x.ite(hit, r, v);
    }
    v
}

/// Selects the value of the first matching `(condition, value)` pair, or
/// `default`.
fn select(x: &mut ExprPool, cases: &[(ExprId, ExprId)], default: ExprId) -> ExprId {
    let mut v = default;
    for &(c, val) in cases.iter().rev() {
        v = x.ite(c, val, v);
    }
    v
}

/// Builds the core. Memory inputs (see [`MEM_INPUTS`]) are left free for the
/// environment to bind.
pub fn build_core(config: &CoreConfig) -> Result<Core, ConfigError> {
    config.validate()?;
    Ok(build(config).expect("core construction is internally consistent"))
}

fn build(cfg: &CoreConfig) -> Result<Core, NetlistError> {
    use Class::*;
    let mut ts = TransitionSystem::new();

    let fsm = ts.declare_register("ctrl_fsm_cs", 2, FSM_BOOT)?;
    let pc_q = ts.declare_register("pc_q", 32, cfg.reset_pc as u64)?;
    let fetch_pending_q = ts.declare_register("fetch_pending_q", 1, 0)?;
    let fetch_addr_q = ts.declare_register("fetch_addr_q", 32, 0)?;
    let instr_valid_q = ts.declare_register("instr_valid_q", 1, 0)?;
    let instr_rdata_q = ts.declare_register("instr_rdata_q", 32, 0)?;
    let instr_pc_q = ts.declare_register("instr_pc_q", 32, 0)?;
    let instr_err_q = ts.declare_register("instr_err_q", 1, 0)?;
    let instr_halt_q = ts.declare_register("instr_halt_q", 1, 0)?;
    let lsu_wait_q = ts.declare_register("lsu_wait_q", 1, 0)?;
    let lsu_addr_q = ts.declare_register("lsu_addr_q", 32, 0)?;
    let lsu_wdata_q = ts.declare_register("lsu_wdata_q", 32, 0)?;
    let rf: Vec<NetId> =
        (0..cfg.regfile_size).map(|i| ts.declare_register(&format!("rf_x{i}"), 32, 0)).collect::<Result<_, _>>()?;
    let mcause_q = ts.declare_register("mcause_q", 6, cause::RESET)?;
    let priv_q = ts.declare_register("priv_lvl_q", 2, 3)?;
    let dbg_q = if cfg.debug_register { Some(ts.declare_register("dbg_q", 8, 0)?) } else { None };

    let mut inp = std::collections::HashMap::new();
    for (name, w) in MEM_INPUTS {
        let id = ts.add_input(name, w)?;
        inp.insert(name, ts.sig(id));
    }
    let (imem_gnt, imem_rdata, imem_err, imem_last) =
        (inp["imem_gnt"], inp["imem_rdata"], inp["imem_err"], inp["imem_last"]);
    let (dmem_gnt, dmem_rdata, dmem_err) = (inp["dmem_gnt"], inp["dmem_rdata"], inp["dmem_err"]);

    let s_fsm = ts.sig(fsm);
    let s_pc = ts.sig(pc_q);
    let s_fpend = ts.sig(fetch_pending_q);
    let s_faddr = ts.sig(fetch_addr_q);
    let s_ivalid = ts.sig(instr_valid_q);
    let s_insn = ts.sig(instr_rdata_q);
    let s_ipc = ts.sig(instr_pc_q);
    let s_ierr = ts.sig(instr_err_q);
    let s_ihalt = ts.sig(instr_halt_q);
    let s_wait = ts.sig(lsu_wait_q);
    let s_laddr = ts.sig(lsu_addr_q);
    let s_lwdata = ts.sig(lsu_wdata_q);
    let s_rf: Vec<ExprId> = rf.iter().map(|&r| ts.sig(r)).collect();
    let s_mcause = ts.sig(mcause_q);
    let s_priv = ts.sig(priv_q);

    let x = ts.x();
    let d = decode_logic(x, s_insn, cfg.regfile_size);
    let t = x.bool_const(true);
    let f = x.bool_const(false);
    let is_boot = x.eq_const(s_fsm, FSM_BOOT);
    let run = x.eq_const(s_fsm, FSM_RUN);

    // Decode groups.
    let is_load = d.any(x, Class::is_load);
    let is_store = d.any(x, Class::is_store);
    let is_mem = x.or(is_load, is_store);
    let is_branch = d.any(x, Class::is_branch);
    let is_op = d.any(x, Class::is_op);
    let uses_rs1 = d.any(x, Class::uses_rs1);
    let uses_rs2 = d.any(x, Class::uses_rs2);
    let uses_rd = d.any(x, Class::uses_rd);

    // Traps detected before execution, highest priority first.
    let ill = d.is(ILLEGAL);
    let low2 = x.slice(s_ipc, 1, 0);
    let misal = x.reduce_or(low2);
    let c6 = |x: &mut ExprPool, v: u64| x.constant(6, v);
    let early = [
        (s_ierr, c6(x, cause::FETCH_ACCESS)),
        (ill, c6(x, cause::ILLEGAL)),
        (misal, c6(x, cause::MISALIGNED_FETCH)),
        (d.is(EBREAK), c6(x, cause::BREAKPOINT)),
        (d.is(ECALL), c6(x, cause::ECALL_M)),
    ];
    let early_trap = x.any(&early.map(|(c, _)| c));
    let zero6 = c6(x, 0);
    let early_code = select(x, &early, zero6);

    let exec = x.and(run, s_ivalid);
    let n_early = x.not(early_trap);
    let exec_ok = x.and(exec, n_early);
    let exec_mem = x.and(exec_ok, is_mem);
    let n_wait = x.not(s_wait);
    let mem_issue = x.and(exec_mem, n_wait);
    let wg = x.and(s_wait, dmem_gnt);
    let mem_done = x.and(exec_mem, wg);
    let mem_err = x.and(mem_done, dmem_err);
    let early_hit = x.and(exec, early_trap);
    let trap = x.or(early_hit, mem_err);
    let load_code = c6(x, cause::LOAD_ACCESS);
    let store_code = c6(x, cause::STORE_ACCESS);
    let mem_code = x.ite(is_load, load_code, store_code);
    let trap_code = x.ite(early_trap, early_code, mem_code);
    let n_mem = x.not(is_mem);
    let done_or_nonmem = x.or(n_mem, mem_done);
    let completes = x.and(exec_ok, done_or_nonmem);
    let n_mem_err = x.not(mem_err);
    let valid = x.and(completes, n_mem_err);

    // Operands and ALU.
    let rs1v = reg_read(x, &s_rf, d.rs1);
    let rs2v = reg_read(x, &s_rf, d.rs2);
    let op_b = x.ite(is_op, rs2v, d.imm_i);
    let shamt5 = x.slice(op_b, 4, 0);
    let shamt = x.zext(shamt5, 32);
    let sum = x.add(rs1v, op_b);
    let diff = x.sub(rs1v, rs2v);
    let sll = x.shl(rs1v, shamt);
    let srl = x.lshr(rs1v, shamt);
    let sra = x.ashr(rs1v, shamt);
    let lt = x.slt(rs1v, op_b);
    let ltu = x.ult(rs1v, op_b);
    let lt32 = x.zext(lt, 32);
    let ltu32 = x.zext(ltu, 32);
    let xr = x.xor(rs1v, op_b);
    let or = x.or(rs1v, op_b);
    let and = x.and(rs1v, op_b);
    let zero32 = x.constant(32, 0);
    let alu = {
        let g = |c: Class| d.is(c);
        let is_add = x.any(&[g(ADD), g(ADDI)]);
        let is_sll = x.any(&[g(SLL), g(SLLI)]);
        let is_srl = x.any(&[g(SRL), g(SRLI)]);
        let is_sra = x.any(&[g(SRA), g(SRAI)]);
        let is_slt = x.any(&[g(SLT), g(SLTI)]);
        let is_sltu = x.any(&[g(SLTU), g(SLTIU)]);
        let is_xor = x.any(&[g(XOR), g(XORI)]);
        let is_or = x.any(&[g(OR), g(ORI)]);
        let is_and = x.any(&[g(AND), g(ANDI)]);
        select(
            x,
            &[
                (is_add, sum),
                (g(SUB), diff),
                (is_sll, sll),
                (is_srl, srl),
                (is_sra, sra),
                (is_slt, lt32),
                (is_sltu, ltu32),
                (is_xor, xr),
                (is_or, or),
                (is_and, and),
            ],
            zero32,
        )
    };

    // Load/store issue.
    let ls_imm = x.ite(is_store, d.imm_s, d.imm_i);
    let ls_addr = x.add(rs1v, ls_imm);
    let byte_shift = |x: &mut ExprPool, addr: ExprId| -> ExprId {
        let off = x.slice(addr, 1, 0);
        let z3 = x.constant(3, 0);
        let bits = x.concat(off, z3);
        x.zext(bits, 32)
    };
    let issue_shift = byte_shift(x, ls_addr);
    let store_data = x.shl(rs2v, issue_shift);
    let size_mask = {
        let byte = d.any(x, |c| matches!(c, LB | LBU | SB));
        let half = d.any(x, |c| matches!(c, LH | LHU | SH));
        let m1 = x.constant(4, 0x1);
        let m3 = x.constant(4, 0x3);
        let mf = x.constant(4, 0xF);
        let hm = x.ite(half, m3, mf);
        x.ite(byte, m1, hm)
    };
    let lane_mask = {
        let off = x.slice(s_laddr, 1, 0);
        let off4 = x.zext(off, 4);
        x.shl(size_mask, off4)
    };

    // Load completion.
    let done_shift = byte_shift(x, s_laddr);
    let shifted = x.lshr(dmem_rdata, done_shift);
    let b = x.slice(shifted, 7, 0);
    let h = x.slice(shifted, 15, 0);
    let load_val = {
        let lb = x.sext(b, 32);
        let lbu = x.zext(b, 32);
        let lh = x.sext(h, 32);
        let lhu = x.zext(h, 32);
        select(x, &[(d.is(LB), lb), (d.is(LBU), lbu), (d.is(LH), lh), (d.is(LHU), lhu)], shifted)
    };

    // Results and control flow.
    let four = x.constant(32, 4);
    let pc4 = x.add(s_ipc, four);
    let auipc = x.add(s_ipc, d.imm_u);
    let rd_val = select(
        x,
        &[
            (d.is(LUI), d.imm_u),
            (d.is(AUIPC), auipc),
            (d.is(JAL), pc4),
            (d.is(JALR), pc4),
            (is_load, load_val),
        ],
        alu,
    );
    let rd_wdata = x.ite(uses_rd, rd_val, zero32);
    let eq = x.eq(rs1v, rs2v);
    let ne = x.not(eq);
    let blt = x.slt(rs1v, rs2v);
    let bge = x.not(blt);
    let bltu = x.ult(rs1v, rs2v);
    let bgeu = x.not(bltu);
    let taken = select(
        x,
        &[(d.is(BEQ), eq), (d.is(BNE), ne), (d.is(BLT), blt), (d.is(BGE), bge), (d.is(BLTU), bltu), (d.is(BGEU), bgeu)],
        f,
    );
    let jal_t = x.add(s_ipc, d.imm_j);
    let jalr_sum = x.add(rs1v, d.imm_i);
    let not1 = x.constant(32, 0xFFFF_FFFE);
    let jalr_t = x.and(jalr_sum, not1);
    let br_t = x.add(s_ipc, d.imm_b);
    let br_taken = x.and(is_branch, taken);
    let pc_wdata = select(x, &[(d.is(JAL), jal_t), (d.is(JALR), jalr_t), (br_taken, br_t)], pc4);
    let jumps = x.any(&[d.is(JAL), d.is(JALR), br_taken]);
    let redirect = x.and(valid, jumps);
    let wfi_retire = x.and(valid, d.is(WFI));

    // Fetch.
    let resp0 = x.and(run, s_fpend);
    let resp = x.and(resp0, imem_gnt);
    let consumed0 = x.or(valid, trap);
    let consumed = x.and(exec, consumed0);
    let n_ivalid = x.not(s_ivalid);
    let buf_free = x.or(n_ivalid, consumed);
    let n_run = x.not(run);
    let stop = x.any(&[trap, wfi_retire, n_run]);
    let n_stop = x.not(stop);
    let n_redirect = x.not(redirect);
    let accept = x.all(&[resp, buf_free, n_redirect, n_stop]);
    let n_free = x.not(buf_free);
    let drop_full = x.and(resp, n_free);
    let req = n_stop;
    let seq_addr = x.ite(drop_full, s_faddr, s_pc);
    let req_addr = x.ite(redirect, pc_wdata, seq_addr);

    // Next-state functions.
    let tv = x.constant(32, cfg.trap_vector as u64);
    let req_next = x.add(req_addr, four);
    let pc_run = x.ite(req, req_next, s_pc);
    let pc_next = x.ite(trap, tv, pc_run);
    let faddr_next = x.ite(req, req_addr, s_faddr);
    let keep_ivalid = x.ite(consumed, f, s_ivalid);
    let ivalid_next = x.ite(accept, t, keep_ivalid);
    let insn_next = x.ite(accept, imem_rdata, s_insn);
    let ipc_next = x.ite(accept, s_faddr, s_ipc);
    let ierr_next = x.ite(accept, imem_err, s_ierr);
    let ihalt_next = x.ite(accept, imem_last, s_ihalt);
    let n_done = x.not(mem_done);
    let still_waiting = x.all(&[s_wait, is_mem, n_done, n_early]);
    let wait_exec = x.ite(mem_issue, t, still_waiting);
    let wait_next = x.ite(exec, wait_exec, s_wait);
    let laddr_next = x.ite(mem_issue, ls_addr, s_laddr);
    let lwdata_next = x.ite(mem_issue, store_data, s_lwdata);
    let rd_idx = d.rd;
    let wen = x.and(valid, uses_rd);
    let rf_next: Vec<ExprId> = s_rf
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let hit = x.eq_const(rd_idx, i as u64);
            let we = x.and(wen, hit);
            x.ite(we, rd_val, r)
        })
        .collect();
    let mcause_next = x.ite(trap, trap_code, s_mcause);
    let c_run = x.constant(2, FSM_RUN);
    let c_trap = x.constant(2, FSM_TRAP);
    let c_sleep = x.constant(2, FSM_SLEEP);
    let after_wfi = x.ite(wfi_retire, c_sleep, c_run);
    let from_run = x.ite(trap, c_trap, after_wfi);
    let running = x.ite(run, from_run, s_fsm);
    let fsm_next = x.ite(is_boot, c_run, running);

    // Retire fields.
    let rs1_addr = {
        let z = x.constant(5, 0);
        x.ite(uses_rs1, d.rs1, z)
    };
    let rs2_addr = {
        let z = x.constant(5, 0);
        x.ite(uses_rs2, d.rs2, z)
    };
    let rd_addr = {
        let z = x.constant(5, 0);
        x.ite(uses_rd, d.rd, z)
    };
    let rs1_rdata = x.ite(uses_rs1, rs1v, zero32);
    let rs2_rdata = x.ite(uses_rs2, rs2v, zero32);
    let mem_addr = x.ite(is_mem, s_laddr, zero32);
    let z4 = x.constant(4, 0);
    let mem_rmask = x.ite(is_load, lane_mask, z4);
    let mem_wmask = x.ite(is_store, lane_mask, z4);
    let mem_rdata = x.ite(is_load, dmem_rdata, zero32);
    let mem_wdata = x.ite(is_store, s_lwdata, zero32);

    // Memory request outputs.
    let dmem_req = mem_issue;
    let lsu_be = {
        let off = x.slice(ls_addr, 1, 0);
        let off4 = x.zext(off, 4);
        x.shl(size_mask, off4)
    };

    ts.set_next(fsm, fsm_next)?;
    ts.set_next(pc_q, pc_next)?;
    ts.set_next(fetch_pending_q, req)?;
    ts.set_next(fetch_addr_q, faddr_next)?;
    ts.set_next(instr_valid_q, ivalid_next)?;
    ts.set_next(instr_rdata_q, insn_next)?;
    ts.set_next(instr_pc_q, ipc_next)?;
    ts.set_next(instr_err_q, ierr_next)?;
    ts.set_next(instr_halt_q, ihalt_next)?;
    ts.set_next(lsu_wait_q, wait_next)?;
    ts.set_next(lsu_addr_q, laddr_next)?;
    ts.set_next(lsu_wdata_q, lwdata_next)?;
    for (r, n) in rf.iter().zip(rf_next) {
        ts.set_next(*r, n)?;
    }
    ts.set_next(mcause_q, mcause_next)?;
    ts.set_next(priv_q, s_priv)?;
    if let Some(dbg) = dbg_q {
        let lo = ts.x().slice(s_pc, 7, 0);
        ts.set_next(dbg, lo)?;
    }

    let retire_defs = [
        ("valid", valid),
        ("insn", s_insn),
        ("rs1_addr", rs1_addr),
        ("rs2_addr", rs2_addr),
        ("rs1_rdata", rs1_rdata),
        ("rs2_rdata", rs2_rdata),
        ("rd_addr", rd_addr),
        ("rd_wdata", rd_wdata),
        ("pc_rdata", s_ipc),
        ("pc_wdata", pc_wdata),
        ("mem_addr", mem_addr),
        ("mem_rmask", mem_rmask),
        ("mem_rdata", mem_rdata),
        ("mem_wmask", mem_wmask),
        ("mem_wdata", mem_wdata),
        ("halt", s_ihalt),
    ];
    for (name, e) in retire_defs {
        let w = ts.add_wire(name, e)?;
        ts.mark_output(w);
    }
    for (name, e) in [
        ("imem_req", req),
        ("imem_addr", req_addr),
        ("dmem_req", dmem_req),
        ("dmem_we", is_store),
        ("dmem_addr", ls_addr),
        ("dmem_be", lsu_be),
        ("dmem_wdata", store_data),
        ("trap", trap),
    ] {
        let w = ts.add_wire(name, e)?;
        ts.mark_output(w);
    }
    ts.validate()?;
    let retire = RetireInterface::resolve(&ts, "").expect("retire nets were just added");
    let census = Census::from_registers(&ts);
    Ok(Core { config: cfg.clone(), ts, retire, census })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn census_size_scales_with_register_file() {
        let c8 = build_core(&CoreConfig::default()).unwrap();
        let c16 = build_core(&CoreConfig { regfile_size: 16, ..Default::default() }).unwrap();
        assert_eq!(c16.census.total_bits() - c8.census.total_bits(), 8 * 32);
        assert_eq!(c8.census.total_bits(), c8.ts.state_bits() as u32);
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = CoreConfig { regfile_size: 12, ..Default::default() };
        assert_eq!(build_core(&bad).unwrap_err(), ConfigError::RegfileSize(12));
    }
}
