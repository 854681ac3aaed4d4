// SPDX-License-Identifier: Apache-2.0

//! Instruction-level reference interpreter for the supported RV32I subset,
//! written directly from the ISA manual's semantics. Memory is a read-only
//! image; accesses outside it fault.

#![allow(dead_code)]

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Retire {
    pub insn: u32,
    pub pc: u32,
    pub next_pc: u32,
    pub rd: u32,
    pub rd_val: u32,
    pub rs1_val: u32,
    pub rs2_val: u32,
    pub mem_addr: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stop {
    Trap(u32),
    Wfi,
    Limit,
}

pub struct Isa {
    pub base: u32,
    pub words: Vec<u32>,
    pub regs: Vec<u32>,
    pub pc: u32,
}

fn sext(v: u32, bits: u32) -> u32 {
    let s = 32 - bits;
    (((v << s) as i32) >> s) as u32
}

impl Isa {
    pub fn new(base: u32, words: Vec<u32>, nregs: usize, pc: u32) -> Self {
        Isa { base, words, regs: vec![0; nregs], pc }
    }

    fn in_image(&self, a: u32) -> bool {
        a.wrapping_sub(self.base) < 4 * self.words.len() as u32
    }

    fn word(&self, a: u32) -> u32 {
        let i = (a >> 2).wrapping_sub(self.base >> 2) as usize;
        self.words.get(i).copied().unwrap_or(0)
    }

    fn reg(&self, i: u32) -> Option<u32> {
        if i as usize >= self.regs.len() {
            None
        } else if i == 0 {
            Some(0)
        } else {
            Some(self.regs[i as usize])
        }
    }

    /// Executes one instruction.
    pub fn step(&mut self) -> Result<Retire, Stop> {
        let pc = self.pc;
        if !self.in_image(pc) {
            return Err(Stop::Trap(1));
        }
        let w = self.word(pc);
        let op = w & 0x7f;
        let f3 = (w >> 12) & 7;
        let f7 = w >> 25;
        let (rd, rs1, rs2) = ((w >> 7) & 31, (w >> 15) & 31, (w >> 20) & 31);
        let imm_i = sext(w >> 20, 12);
        let imm_s = sext(((w >> 25) << 5) | ((w >> 7) & 31), 12);
        let imm_b = sext(((w >> 31) << 12) | (((w >> 7) & 1) << 11) | (((w >> 25) & 63) << 5) | (((w >> 8) & 15) << 1), 13);
        let imm_u = w & 0xFFFF_F000;
        let imm_j = sext(((w >> 31) << 20) | (((w >> 12) & 255) << 12) | (((w >> 20) & 1) << 11) | (((w >> 21) & 1023) << 1), 21);
        let n = self.regs.len() as u32;

        // Which register fields the format uses, for the register-count check.
        let (u1, u2, ud) = match op {
            0x37 | 0x17 | 0x6f => (false, false, true),
            0x67 | 0x03 | 0x13 => (true, false, true),
            0x63 | 0x23 => (true, true, false),
            0x33 => (true, true, true),
            _ => (false, false, false),
        };
        let legal_fmt = match op {
            0x37 | 0x17 | 0x6f => true,
            0x67 => f3 == 0,
            0x63 => f3 != 2 && f3 != 3,
            0x03 => matches!(f3, 0 | 1 | 2 | 4 | 5),
            0x23 => f3 <= 2,
            0x13 => match f3 {
                1 => f7 == 0,
                5 => f7 == 0 || f7 == 0x20,
                _ => true,
            },
            0x33 => f7 == 0 || (f7 == 0x20 && (f3 == 0 || f3 == 5)),
            0x73 => w == 0x73 || w == 0x0010_0073 || w == 0x1050_0073,
            _ => false,
        };
        let regs_ok = (!u1 || rs1 < n) && (!u2 || rs2 < n) && (!ud || rd < n);
        if !legal_fmt || !regs_ok {
            return Err(Stop::Trap(2));
        }
        if pc & 3 != 0 {
            return Err(Stop::Trap(0));
        }
        match w {
            0x0010_0073 => return Err(Stop::Trap(3)),
            0x73 => return Err(Stop::Trap(11)),
            _ => {}
        }
        let a = if u1 { self.reg(rs1).unwrap() } else { 0 };
        let b = if u2 { self.reg(rs2).unwrap() } else { 0 };
        let mut r = Retire { insn: w, pc, next_pc: pc.wrapping_add(4), rd: 0, rd_val: 0, rs1_val: a, rs2_val: b, mem_addr: None };
        let mut wb: Option<u32> = None;
        match op {
            0x37 => wb = Some(imm_u),
            0x17 => wb = Some(pc.wrapping_add(imm_u)),
            0x6f => {
                wb = Some(pc.wrapping_add(4));
                r.next_pc = pc.wrapping_add(imm_j);
            }
            0x67 => {
                wb = Some(pc.wrapping_add(4));
                r.next_pc = a.wrapping_add(imm_i) & !1;
            }
            0x63 => {
                let t = match f3 {
                    0 => a == b,
                    1 => a != b,
                    4 => (a as i32) < (b as i32),
                    5 => (a as i32) >= (b as i32),
                    6 => a < b,
                    _ => a >= b,
                };
                if t {
                    r.next_pc = pc.wrapping_add(imm_b);
                }
            }
            0x03 => {
                let addr = a.wrapping_add(imm_i);
                r.mem_addr = Some(addr);
                if !self.in_image(addr) {
                    return Err(Stop::Trap(5));
                }
                let d = self.word(addr) >> (8 * (addr & 3));
                wb = Some(match f3 {
                    0 => sext(d & 0xff, 8),
                    1 => sext(d & 0xffff, 16),
                    4 => d & 0xff,
                    5 => d & 0xffff,
                    _ => d,
                });
            }
            0x23 => {
                let addr = a.wrapping_add(imm_s);
                r.mem_addr = Some(addr);
                if !self.in_image(addr) {
                    return Err(Stop::Trap(7));
                }
            }
            0x13 | 0x33 => {
                let y = if op == 0x33 { b } else { imm_i };
                let sh = y & 31;
                wb = Some(match f3 {
                    0 if op == 0x33 && f7 == 0x20 => a.wrapping_sub(b),
                    0 => a.wrapping_add(y),
                    1 => a << sh,
                    2 => ((a as i32) < (y as i32)) as u32,
                    3 => (a < y) as u32,
                    4 => a ^ y,
                    5 if f7 == 0x20 => ((a as i32) >> sh) as u32,
                    5 => a >> sh,
                    6 => a | y,
                    _ => a & y,
                });
            }
            _ => {
                // WFI
                self.pc = r.next_pc;
                return Ok(r);
            }
        }
        if let Some(v) = wb {
            r.rd = rd;
            r.rd_val = v;
            if rd != 0 {
                self.regs[rd as usize] = v;
            }
        }
        self.pc = r.next_pc;
        Ok(r)
    }

    /// Runs up to `limit` instructions. WFI is included in the retire list.
    pub fn run(&mut self, limit: usize) -> (Vec<Retire>, Stop) {
        let mut out = Vec::new();
        for _ in 0..limit {
            match self.step() {
                Ok(r) => {
                    let wfi = r.insn == 0x1050_0073;
                    out.push(r);
                    if wfi {
                        return (out, Stop::Wfi);
                    }
                }
                Err(s) => return (out, s),
            }
        }
        (out, Stop::Limit)
    }
}
