// SPDX-License-Identifier: Apache-2.0

#![allow(dead_code)]

pub mod isa;

use seuformal::env::{attach_env, EnvConfig, EnvMode, ProgramImage};
use seuformal::netlist::{Simulator, TransitionSystem};
use seuformal::rv32::{build_core, Core, CoreConfig, RetireInterface};

/// Core with a concrete program environment.
pub fn concrete(cfg: &CoreConfig, img: ProgramImage, alignment: bool) -> Core {
    let mut core = build_core(cfg).unwrap();
    attach_env(&mut core.ts, cfg, &EnvConfig { mode: EnvMode::Concrete(img), alignment_constraint: alignment }).unwrap();
    core
}

/// Core with the symbolic environment.
pub fn symbolic(cfg: &CoreConfig, alignment: bool) -> Core {
    let mut core = build_core(cfg).unwrap();
    attach_env(&mut core.ts, cfg, &EnvConfig { mode: EnvMode::Symbolic, alignment_constraint: alignment }).unwrap();
    core
}

/// One observed cycle: retire fields in interface order plus a few state
/// registers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cycle {
    pub retire: [u64; 16],
    pub fsm: u64,
    pub mcause: u64,
    pub assumptions_ok: bool,
}

pub fn reg(ts: &TransitionSystem, state: &[u64], name: &str) -> u64 {
    state[ts.register_slot(ts.net_id(name).unwrap()).unwrap()]
}

/// Simulates `n` cycles with inputs from `inputs(cycle)`.
pub fn run(ts: &TransitionSystem, n: usize, mut inputs: impl FnMut(usize) -> Vec<u64>) -> Vec<Cycle> {
    let ri = RetireInterface::resolve(ts, "").unwrap().nets();
    let mut sim = Simulator::new(ts);
    let mut state = ts.init_state();
    let mut out = Vec::new();
    for c in 0..n {
        sim.evaluate(&state, &inputs(c));
        let mut retire = [0; 16];
        for (k, &r) in ri.iter().enumerate() {
            retire[k] = sim.net(r);
        }
        out.push(Cycle {
            retire,
            fsm: reg(ts, &state, "ctrl_fsm_cs"),
            mcause: reg(ts, &state, "mcause_q"),
            assumptions_ok: sim.assumptions_hold(),
        });
        state = sim.next_state();
    }
    out
}

pub fn retired(cycles: &[Cycle]) -> Vec<[u64; 16]> {
    cycles.iter().filter(|c| c.retire[0] == 1).map(|c| c.retire).collect()
}

pub const F_INSN: usize = 1;
pub const F_RS1: usize = 2;
pub const F_RS2: usize = 3;
pub const F_RS1_DATA: usize = 4;
pub const F_RS2_DATA: usize = 5;
pub const F_RD: usize = 6;
pub const F_RD_DATA: usize = 7;
pub const F_PC: usize = 8;
pub const F_PC_NEXT: usize = 9;
pub const F_MEM_ADDR: usize = 10;
pub const F_HALT: usize = 15;
