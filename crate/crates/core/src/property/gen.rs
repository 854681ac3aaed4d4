// SPDX-License-Identifier: Apache-2.0

//! Builtin property families and the monitor logic they read.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{elaborate, parse, ElabError, Property, PropertyAst};
use crate::env::ProgramImage;
use crate::netlist::{ExprId, ExprPool, NetlistError, TransitionSystem};
use crate::rv32::{cause, decode_logic, Class, FSM_BOOT, FSM_SLEEP, RETIRE_FIELDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Strobe,
    Arch,
    Crash,
    Hang,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Strobe, Family::Arch, Family::Crash, Family::Hang];

    pub fn name(self) -> &'static str {
        match self {
            Family::Strobe => "strobe",
            Family::Arch => "arch",
            Family::Crash => "crash",
            Family::Hang => "hang",
        }
    }

    /// Family of a builtin property name such as `crash.breakpoint`.
    pub fn of(property: &str) -> Option<Family> {
        property.split('.').next()?.parse().ok()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| format!("unknown property family `{s}`"))
    }
}

/// Crash property names with their exception codes.
pub const CRASH_CODES: [(&str, u64); 7] = [
    ("misaligned_fetch", cause::MISALIGNED_FETCH),
    ("insn_access_fault", cause::FETCH_ACCESS),
    ("illegal_insn", cause::ILLEGAL),
    ("breakpoint", cause::BREAKPOINT),
    ("load_access_fault", cause::LOAD_ACCESS),
    ("store_access_fault", cause::STORE_ACCESS),
    ("ecall_mmode", cause::ECALL_M),
];

/// Default repetition threshold of the dead-state cover.
pub const DEAD_STATE_N: u32 = 8;

const HANG_COUNTER_WIDTH: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenOptions {
    pub regfile_size: u32,
    pub reset_pc: u32,
    /// Cycle by which the halting instruction must have retired; enables
    /// `hang.progress`.
    pub progress_deadline: Option<u32>,
    pub dead_state_n: u32,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions { regfile_size: 8, reset_pc: 0, progress_deadline: None, dead_state_n: DEAD_STATE_N }
    }
}

fn stmt(text: &str) -> PropertyAst {
    parse(text).unwrap_or_else(|e| panic!("builtin property `{text}`: {e}"))
}

/// `strobe.valid` compares the completion strobes; the other fourteen
/// compare one retire field when both cores retire.
pub fn strobe_properties() -> Vec<PropertyAst> {
    RETIRE_FIELDS[..15]
        .iter()
        .map(|(f, _)| {
            if *f == "valid" {
                stmt("strobe.valid: assert property (golden_valid == faulty_valid);")
            } else {
                stmt(&format!(
                    "strobe.{f}: assert property (golden_valid && faulty_valid |-> golden_{f} == faulty_{f});"
                ))
            }
        })
        .collect()
}

pub fn crash_name_map() -> HashMap<String, String> {
    [("crash_priv_mode", "priv_lvl_q"), ("crash_mcause_q", "mcause_q")]
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

/// One property per exception code: in machine mode, mcause never holds it.
pub fn crash_properties() -> Vec<PropertyAst> {
    CRASH_CODES
        .iter()
        .map(|(n, c)| stmt(&format!("crash.{n}: assert property (crash_priv_mode == 2'b11 |-> crash_mcause_q != 6'd{c});")))
        .collect()
}

/// `hang.wfi`, `hang.progress` (when a deadline is given) and the
/// `hang.dead_state` cover.
pub fn hang_properties(progress_deadline: Option<u32>, dead_state_n: u32) -> Vec<PropertyAst> {
    let mut v = vec![stmt("hang.wfi: assert property (!halt && valid |-> insn != 32'h10500073);")];
    if let Some(d) = progress_deadline {
        v.push(stmt(&format!(
            "hang.progress: assert property (hang_cycle_q >= {HANG_COUNTER_WIDTH}'d{d} |-> hang_halted_q || valid && halt);"
        )));
    }
    v.push(stmt(&format!(
        "hang.dead_state: cover property (ctrl_fsm_cs != 2'd{FSM_BOOT} && ctrl_fsm_cs != 2'd{FSM_SLEEP} \
         && ctrl_fsm_cs == hang_fsm_prev_q && hang_fsm_run_q >= 4'd{});",
        dead_state_n.clamp(1, 16) - 1
    )));
    v
}

fn arch_consequent(c: Class) -> Option<String> {
    use Class::*;
    let pc4 = "pc_wdata == pc_rdata + 32'd4";
    let rd = |e: &str| format!("rd_wdata == {e} && {pc4}");
    let lmask = |m: &str| format!("mem_rmask == 4'b{m} << mem_addr[1:0] && mem_wmask == 4'd0");
    let smask = |m: &str| format!("mem_wmask == 4'b{m} << mem_addr[1:0] && mem_rmask == 4'd0");
    let branch = |cond: &str| format!("pc_wdata == ({cond} ? pc_rdata + arch_imm_b : pc_rdata + 32'd4)");
    let load = |m: &str, v: &str| {
        format!("mem_addr == rs1_rdata + arch_imm_i && {} && rd_wdata == {v} && {pc4}", lmask(m))
    };
    let store = |m: &str| {
        format!(
            "mem_addr == rs1_rdata + arch_imm_s && {} && (mem_wdata & arch_wbytes) == \
             (rs2_rdata << {{mem_addr[1:0], 3'b000}} & arch_wbytes) && {pc4}",
            smask(m)
        )
    };
    Some(match c {
        LUI => rd("arch_imm_u"),
        AUIPC => rd("pc_rdata + arch_imm_u"),
        JAL => "rd_wdata == pc_rdata + 32'd4 && pc_wdata == pc_rdata + arch_imm_j".into(),
        JALR => "rd_wdata == pc_rdata + 32'd4 && pc_wdata == (rs1_rdata + arch_imm_i & 32'hfffffffe)".into(),
        BEQ => branch("rs1_rdata == rs2_rdata"),
        BNE => branch("rs1_rdata != rs2_rdata"),
        BLT => branch("signed(rs1_rdata) < signed(rs2_rdata)"),
        BGE => branch("signed(rs1_rdata) >= signed(rs2_rdata)"),
        BLTU => branch("rs1_rdata < rs2_rdata"),
        BGEU => branch("rs1_rdata >= rs2_rdata"),
        LB => load("0001", "arch_ld_b"),
        LH => load("0011", "arch_ld_h"),
        LW => load("1111", "arch_ld_w"),
        LBU => load("0001", "arch_ld_bu"),
        LHU => load("0011", "arch_ld_hu"),
        SB => store("0001"),
        SH => store("0011"),
        SW => store("1111"),
        ADDI => rd("rs1_rdata + arch_imm_i"),
        SLTI => rd("{31'd0, signed(rs1_rdata) < signed(arch_imm_i)}"),
        SLTIU => rd("{31'd0, rs1_rdata < arch_imm_i}"),
        XORI => rd("(rs1_rdata ^ arch_imm_i)"),
        ORI => rd("(rs1_rdata | arch_imm_i)"),
        ANDI => rd("(rs1_rdata & arch_imm_i)"),
        SLLI => rd("rs1_rdata << arch_imm_i[4:0]"),
        SRLI => rd("rs1_rdata >> arch_imm_i[4:0]"),
        SRAI => rd("signed(rs1_rdata) >> arch_imm_i[4:0]"),
        ADD => rd("rs1_rdata + rs2_rdata"),
        SUB => rd("rs1_rdata - rs2_rdata"),
        SLL => rd("rs1_rdata << rs2_rdata[4:0]"),
        SLT => rd("{31'd0, signed(rs1_rdata) < signed(rs2_rdata)}"),
        SLTU => rd("{31'd0, rs1_rdata < rs2_rdata}"),
        XOR => rd("(rs1_rdata ^ rs2_rdata)"),
        SRL => rd("rs1_rdata >> rs2_rdata[4:0]"),
        SRA => rd("signed(rs1_rdata) >> rs2_rdata[4:0]"),
        OR => rd("(rs1_rdata | rs2_rdata)"),
        AND => rd("(rs1_rdata & rs2_rdata)"),
        WFI => pc4.into(),
        // Both trap instead of completing.
        ECALL | EBREAK => "1'b0".into(),
        ILLEGAL => return None,
    })
}

/// One property per supported instruction class (antecedent: a retire of
/// that class), plus two register/PC consistency checks against a shadow
/// architectural state.
pub fn arch_properties() -> Vec<PropertyAst> {
    let mut v: Vec<PropertyAst> = Class::supported()
        .filter_map(|c| {
            let cons = arch_consequent(c)?;
            let n = c.name().to_lowercase();
            Some(stmt(&format!("arch.{n}: assert property (valid && arch_is_{n} |-> {cons});")))
        })
        .collect();
    v.push(stmt(
        "arch.reg_read: assert property (valid |-> rs1_rdata == arch_shadow_rs1 && rs2_rdata == arch_shadow_rs2);",
    ));
    v.push(stmt("arch.pc_chain: assert property (valid |-> pc_rdata == arch_next_pc_q);"));
    v
}

/// Every builtin statement, for round-trip checks.
pub fn builtin_corpus() -> Vec<PropertyAst> {
    let mut v = strobe_properties();
    v.extend(arch_properties());
    v.extend(crash_properties());
    v.extend(hang_properties(Some(100), DEAD_STATE_N));
    v
}

fn has(ts: &TransitionSystem, name: &str) -> bool {
    ts.net_id(name).is_some()
}

fn byte_lanes(x: &mut ExprPool, mask4: ExprId) -> ExprId {
    let lanes: Vec<ExprId> = (0..4u8)
        .rev()
        .map(|i| {
            let b = x.bit(mask4, i);
            x.sext(b, 8)
        })
        .collect();
    x.concat_all(&lanes)
}

/// Decoder, immediate, load-extension and shadow-state monitors read by the
/// architectural family. Idempotent.
pub fn add_arch_monitors(ts: &mut TransitionSystem, opts: &GenOptions) -> Result<(), NetlistError> {
    if has(ts, "arch_next_pc_q") {
        return Ok(());
    }
    let insn = ts.sig_named("insn")?;
    let valid = ts.sig_named("valid")?;
    let mem_rdata = ts.sig_named("mem_rdata")?;
    let mem_addr = ts.sig_named("mem_addr")?;
    let mem_wmask = ts.sig_named("mem_wmask")?;
    let (rs1_addr, rs2_addr, rd_addr) = (ts.sig_named("rs1_addr")?, ts.sig_named("rs2_addr")?, ts.sig_named("rd_addr")?);
    let rd_wdata = ts.sig_named("rd_wdata")?;
    let pc_wdata = ts.sig_named("pc_wdata")?;

    let x = ts.x();
    let d = decode_logic(x, insn, opts.regfile_size);
    let off = x.slice(mem_addr, 1, 0);
    let z3 = x.constant(3, 0);
    let sh = x.concat(off, z3);
    let sh32 = x.zext(sh, 32);
    let lane = x.lshr(mem_rdata, sh32);
    let b = x.slice(lane, 7, 0);
    let h = x.slice(lane, 15, 0);
    let (lb, lbu, lh, lhu) = (x.sext(b, 32), x.zext(b, 32), x.sext(h, 32), x.zext(h, 32));
    let wbytes = byte_lanes(x, mem_wmask);
    let mut wires: Vec<(String, ExprId)> = Class::supported().map(|c| (format!("arch_is_{}", c.name().to_lowercase()), d.is(c))).collect();
    wires.extend(
        [
            ("arch_imm_i", d.imm_i),
            ("arch_imm_s", d.imm_s),
            ("arch_imm_b", d.imm_b),
            ("arch_imm_u", d.imm_u),
            ("arch_imm_j", d.imm_j),
            ("arch_ld_b", lb),
            ("arch_ld_bu", lbu),
            ("arch_ld_h", lh),
            ("arch_ld_hu", lhu),
            ("arch_ld_w", lane),
            ("arch_wbytes", wbytes),
        ]
        .map(|(n, e)| (n.to_string(), e)),
    );
    for (n, e) in wires {
        ts.add_wire(&n, e)?;
    }

    // Shadow register file, written from the retire interface.
    let mut shadow = vec![ts.x().constant(32, 0)];
    for i in 1..opts.regfile_size {
        let r = ts.declare_register(&format!("arch_shadow_x{i}"), 32, 0)?;
        let s = ts.sig(r);
        let x = ts.x();
        let hit = x.eq_const(rd_addr, i as u64);
        let we = x.and(valid, hit);
        let n = x.ite(we, rd_wdata, s);
        ts.set_next(r, n)?;
        shadow.push(s);
    }
    for (name, idx) in [("arch_shadow_rs1", rs1_addr), ("arch_shadow_rs2", rs2_addr)] {
        let x = ts.x();
        let mut v = x.constant(32, 0);
        for (i, &s) in shadow.iter().enumerate().skip(1) {
            let hit = x.eq_const(idx, i as u64);
            v = x.ite(hit, s, v);
        }
        ts.add_wire(name, v)?;
    }
    let npc = ts.declare_register("arch_next_pc_q", 32, opts.reset_pc as u64)?;
    let s = ts.sig(npc);
    let n = ts.x().ite(valid, pc_wdata, s);
    ts.set_next(npc, n)?;
    Ok(())
}

/// Halt tracker, saturating cycle counter and FSM repetition monitors read
/// by the hang family. Idempotent.
pub fn add_hang_monitors(ts: &mut TransitionSystem) -> Result<(), NetlistError> {
    if has(ts, "hang_halted_q") {
        return Ok(());
    }
    let valid = ts.sig_named("valid")?;
    let halt = ts.sig_named("halt")?;
    let fsm = ts.sig_named("ctrl_fsm_cs")?;
    let halted = ts.declare_register("hang_halted_q", 1, 0)?;
    let cyc = ts.declare_register("hang_cycle_q", HANG_COUNTER_WIDTH, 0)?;
    let prev = ts.declare_register("hang_fsm_prev_q", 2, FSM_BOOT)?;
    let run = ts.declare_register("hang_fsm_run_q", 4, 0)?;
    let (sh, sc, sp, sr) = (ts.sig(halted), ts.sig(cyc), ts.sig(prev), ts.sig(run));
    let x = ts.x();
    let done = x.and(valid, halt);
    let halted_n = x.or(sh, done);
    let max = x.eq_const(sc, crate::netlist::mask(HANG_COUNTER_WIDTH as u8));
    let one = x.constant(HANG_COUNTER_WIDTH as u8, 1);
    let inc = x.add(sc, one);
    let cyc_n = x.ite(max, sc, inc);
    let same = x.eq(fsm, sp);
    let rmax = x.eq_const(sr, 15);
    let one4 = x.constant(4, 1);
    let rinc = x.add(sr, one4);
    let rsat = x.ite(rmax, sr, rinc);
    let run_n = x.ite(same, rsat, one4);
    ts.set_next(halted, halted_n)?;
    ts.set_next(cyc, cyc_n)?;
    ts.set_next(prev, fsm)?;
    ts.set_next(run, run_n)?;
    Ok(())
}

/// `arch.imem` for a fixed program image: every retired word is the image
/// word at the retired pc. Adds the `arch_imem_word` lookup wire.
pub fn imem_property(ts: &mut TransitionSystem, image: &ProgramImage) -> Result<Property, ElabError> {
    if !has(ts, "arch_imem_word") {
        let netlist = |e: NetlistError| ElabError::Invalid(e.to_string());
        let pc = ts.sig_named("pc_rdata").map_err(netlist)?;
        let w = image.lookup_expr(ts.x(), pc);
        ts.add_wire("arch_imem_word", w).map_err(netlist)?;
    }
    elaborate(&stmt("arch.imem: assert property (valid |-> insn == arch_imem_word);"), ts, &HashMap::new())
}

/// Adds the family's monitors to `ts` and elaborates its properties. The
/// strobe family expects a lockstep composition; the others a single core.
pub fn generate(family: Family, ts: &mut TransitionSystem, opts: &GenOptions) -> Result<Vec<Property>, ElabError> {
    let netlist = |e: NetlistError| ElabError::Invalid(e.to_string());
    let (asts, map) = match family {
        Family::Strobe => (strobe_properties(), HashMap::new()),
        Family::Arch => {
            add_arch_monitors(ts, opts).map_err(netlist)?;
            (arch_properties(), HashMap::new())
        }
        Family::Crash => (crash_properties(), crash_name_map()),
        Family::Hang => {
            add_hang_monitors(ts).map_err(netlist)?;
            (hang_properties(opts.progress_deadline, opts.dead_state_n), HashMap::new())
        }
    };
    asts.iter().map(|a| elaborate(a, ts, &map)).collect()
}
