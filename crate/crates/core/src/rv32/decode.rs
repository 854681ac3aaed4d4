// SPDX-License-Identifier: Apache-2.0

//! RV32I decoding, once over concrete words and once as logic.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::netlist::{ExprId, ExprPool};

macro_rules! classes {
    ($($name:ident),* $(,)?) => {
        /// Instruction class. `Illegal` covers every unsupported pattern.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[allow(clippy::upper_case_acronyms)]
        pub enum Class { $($name,)* }

        impl Class {
            pub const ALL: &'static [Class] = &[$(Class::$name,)*];

            pub fn name(self) -> &'static str {
                match self { $(Class::$name => stringify!($name),)* }
            }
        }
    };
}

classes!(
    LUI, AUIPC, JAL, JALR, BEQ, BNE, BLT, BGE, BLTU, BGEU, LB, LH, LW, LBU, LHU, SB, SH, SW, ADDI, SLTI,
    SLTIU, XORI, ORI, ANDI, SLLI, SRLI, SRAI, ADD, SUB, SLL, SLT, SLTU, XOR, SRL, SRA, OR, AND, ECALL,
    EBREAK, WFI, ILLEGAL,
);

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Class {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Class::ALL
            .iter()
            .copied()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown instruction class `{s}`"))
    }
}

impl Class {
    /// Every class except `ILLEGAL`.
    pub fn supported() -> impl Iterator<Item = Class> {
        Class::ALL.iter().copied().filter(|&c| c != Class::ILLEGAL)
    }

    pub fn is_branch(self) -> bool {
        matches!(self, Class::BEQ | Class::BNE | Class::BLT | Class::BGE | Class::BLTU | Class::BGEU)
    }
    pub fn is_load(self) -> bool {
        matches!(self, Class::LB | Class::LH | Class::LW | Class::LBU | Class::LHU)
    }
    pub fn is_store(self) -> bool {
        matches!(self, Class::SB | Class::SH | Class::SW)
    }
    pub fn is_op_imm(self) -> bool {
        matches!(
            self,
            Class::ADDI
                | Class::SLTI
                | Class::SLTIU
                | Class::XORI
                | Class::ORI
                | Class::ANDI
                | Class::SLLI
                | Class::SRLI
                | Class::SRAI
        )
    }
    pub fn is_op(self) -> bool {
        matches!(
            self,
            Class::ADD
                | Class::SUB
                | Class::SLL
                | Class::SLT
                | Class::SLTU
                | Class::XOR
                | Class::SRL
                | Class::SRA
                | Class::OR
                | Class::AND
        )
    }
    pub fn uses_rs1(self) -> bool {
        self == Class::JALR || self.is_branch() || self.is_load() || self.is_store() || self.is_op_imm() || self.is_op()
    }
    pub fn uses_rs2(self) -> bool {
        self.is_branch() || self.is_store() || self.is_op()
    }
    pub fn uses_rd(self) -> bool {
        matches!(self, Class::LUI | Class::AUIPC | Class::JAL | Class::JALR)
            || self.is_load()
            || self.is_op_imm()
            || self.is_op()
    }

    /// Fixed bits of the encoding: `word & mask == value`.
    pub fn pattern(self) -> Option<(u32, u32)> {
        const OPC: u32 = 0x7F;
        const F3: u32 = 0x707F;
        const F7: u32 = 0xFE00_707F;
        Some(match self {
            Class::LUI => (OPC, 0x37),
            Class::AUIPC => (OPC, 0x17),
            Class::JAL => (OPC, 0x6F),
            Class::JALR => (F3, 0x67),
            Class::BEQ => (F3, 0x63),
            Class::BNE => (F3, 0x1063),
            Class::BLT => (F3, 0x4063),
            Class::BGE => (F3, 0x5063),
            Class::BLTU => (F3, 0x6063),
            Class::BGEU => (F3, 0x7063),
            Class::LB => (F3, 0x03),
            Class::LH => (F3, 0x1003),
            Class::LW => (F3, 0x2003),
            Class::LBU => (F3, 0x4003),
            Class::LHU => (F3, 0x5003),
            Class::SB => (F3, 0x23),
            Class::SH => (F3, 0x1023),
            Class::SW => (F3, 0x2023),
            Class::ADDI => (F3, 0x13),
            Class::SLTI => (F3, 0x2013),
            Class::SLTIU => (F3, 0x3013),
            Class::XORI => (F3, 0x4013),
            Class::ORI => (F3, 0x6013),
            Class::ANDI => (F3, 0x7013),
            Class::SLLI => (F7, 0x1013),
            Class::SRLI => (F7, 0x5013),
            Class::SRAI => (F7, 0x4000_5013),
            Class::ADD => (F7, 0x33),
            Class::SUB => (F7, 0x4000_0033),
            Class::SLL => (F7, 0x1033),
            Class::SLT => (F7, 0x2033),
            Class::SLTU => (F7, 0x3033),
            Class::XOR => (F7, 0x4033),
            Class::SRL => (F7, 0x5033),
            Class::SRA => (F7, 0x4000_5033),
            Class::OR => (F7, 0x6033),
            Class::AND => (F7, 0x7033),
            Class::ECALL => (u32::MAX, 0x0000_0073),
            Class::EBREAK => (u32::MAX, 0x0010_0073),
            Class::WFI => (u32::MAX, 0x1050_0073),
            Class::ILLEGAL => return None,
        })
    }
}

pub const WFI_WORD: u32 = 0x1050_0073;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodedInsn {
    pub opcode: u32,
    pub funct3: u32,
    pub funct7: u32,
    pub rs1: u32,
    pub rs2: u32,
    pub rd: u32,
    pub imm_i: u32,
    pub imm_s: u32,
    pub imm_b: u32,
    pub imm_u: u32,
    pub imm_j: u32,
    pub class: Class,
}

fn sext(v: u32, bits: u32) -> u32 {
    let shift = 32 - bits;
    (((v << shift) as i32) >> shift) as u32
}

/// Decodes with all 32 architectural registers.
pub fn decode(word: u32) -> DecodedInsn {
    decode_for(word, 32)
}

/// Decodes for a core with `regfile_size` registers. Register fields naming a
/// register that does not exist make the word illegal.
pub fn decode_for(word: u32, regfile_size: u32) -> DecodedInsn {
    let opcode = word & 0x7F;
    let rd = (word >> 7) & 0x1F;
    let funct3 = (word >> 12) & 7;
    let rs1 = (word >> 15) & 0x1F;
    let rs2 = (word >> 20) & 0x1F;
    let funct7 = word >> 25;
    let imm_i = sext(word >> 20, 12);
    let imm_s = sext(((word >> 25) << 5) | rd, 12);
    let imm_b = sext(
        ((word >> 31) << 12) | (((word >> 7) & 1) << 11) | (((word >> 25) & 0x3F) << 5) | (((word >> 8) & 0xF) << 1),
        13,
    );
    let imm_u = word & 0xFFFF_F000;
    let imm_j = sext(
        ((word >> 31) << 20) | (((word >> 12) & 0xFF) << 12) | (((word >> 20) & 1) << 11) | (((word >> 21) & 0x3FF) << 1),
        21,
    );
    use Class::*;
    let class = match opcode {
        0b0110111 => LUI,
        0b0010111 => AUIPC,
        0b1101111 => JAL,
        0b1100111 if funct3 == 0 => JALR,
        0b1100011 => match funct3 {
            0 => BEQ,
            1 => BNE,
            4 => BLT,
            5 => BGE,
            6 => BLTU,
            7 => BGEU,
            _ => ILLEGAL,
        },
        0b0000011 => match funct3 {
            0 => LB,
            1 => LH,
            2 => LW,
            4 => LBU,
            5 => LHU,
            _ => ILLEGAL,
        },
        0b0100011 => match funct3 {
            0 => SB,
            1 => SH,
            2 => SW,
            _ => ILLEGAL,
        },
        0b0010011 => match (funct3, funct7) {
            (0, _) => ADDI,
            (2, _) => SLTI,
            (3, _) => SLTIU,
            (4, _) => XORI,
            (6, _) => ORI,
            (7, _) => ANDI,
            (1, 0) => SLLI,
            (5, 0) => SRLI,
            (5, 0b0100000) => SRAI,
            _ => ILLEGAL,
        },
        0b0110011 => match (funct7, funct3) {
            (0, 0) => ADD,
            (0b0100000, 0) => SUB,
            (0, 1) => SLL,
            (0, 2) => SLT,
            (0, 3) => SLTU,
            (0, 4) => XOR,
            (0, 5) => SRL,
            (0b0100000, 5) => SRA,
            (0, 6) => OR,
            (0, 7) => AND,
            _ => ILLEGAL,
        },
        0b1110011 => match word {
            0x0000_0073 => ECALL,
            0x0010_0073 => EBREAK,
            WFI_WORD => WFI,
            _ => ILLEGAL,
        },
        _ => ILLEGAL,
    };
    let regs_ok = (!class.uses_rd() || rd < regfile_size)
        && (!class.uses_rs1() || rs1 < regfile_size)
        && (!class.uses_rs2() || rs2 < regfile_size);
    let class = if regs_ok { class } else { ILLEGAL };
    DecodedInsn { opcode, funct3, funct7, rs1, rs2, rd, imm_i, imm_s, imm_b, imm_u, imm_j, class }
}

/// Decoder logic over a 32-bit word expression.
#[derive(Debug, Clone)]
pub struct DecodeLogic {
    /// One width-1 expression per entry of [`Class::ALL`]; mutually exclusive
    /// and exhaustive.
    pub class: Vec<ExprId>,
    pub rs1: ExprId,
    pub rs2: ExprId,
    pub rd: ExprId,
    pub imm_i: ExprId,
    pub imm_s: ExprId,
    pub imm_b: ExprId,
    pub imm_u: ExprId,
    pub imm_j: ExprId,
}

impl DecodeLogic {
    pub fn is(&self, c: Class) -> ExprId {
        self.class[c as usize]
    }

    /// OR over the classes matching `pred`.
    pub fn any(&self, x: &mut ExprPool, pred: impl Fn(Class) -> bool) -> ExprId {
        let terms: Vec<ExprId> = Class::supported().filter(|&c| pred(c)).map(|c| self.is(c)).collect();
        x.any(&terms)
    }
}

pub fn decode_logic(x: &mut ExprPool, word: ExprId, regfile_size: u32) -> DecodeLogic {
    let rd = x.slice(word, 11, 7);
    let rs1 = x.slice(word, 19, 15);
    let rs2 = x.slice(word, 24, 20);
    let imm_i = {
        let f = x.slice(word, 31, 20);
        x.sext(f, 32)
    };
    let imm_s = {
        let hi = x.slice(word, 31, 25);
        let lo = x.slice(word, 11, 7);
        let c = x.concat(hi, lo);
        x.sext(c, 32)
    };
    let imm_b = {
        let parts = [
            x.slice(word, 31, 31),
            x.slice(word, 7, 7),
            x.slice(word, 30, 25),
            x.slice(word, 11, 8),
            x.constant(1, 0),
        ];
        let c = x.concat_all(&parts);
        x.sext(c, 32)
    };
    let imm_u = {
        let hi = x.slice(word, 31, 12);
        let z = x.constant(12, 0);
        x.concat(hi, z)
    };
    let imm_j = {
        let parts = [
            x.slice(word, 31, 31),
            x.slice(word, 19, 12),
            x.slice(word, 20, 20),
            x.slice(word, 30, 21),
            x.constant(1, 0),
        ];
        let c = x.concat_all(&parts);
        x.sext(c, 32)
    };
    let in_range = |x: &mut ExprPool, f: ExprId| -> ExprId {
        if regfile_size >= 32 {
            x.bool_const(true)
        } else {
            let lim = x.constant(5, regfile_size as u64);
            x.ult(f, lim)
        }
    };
    let rd_ok = in_range(x, rd);
    let rs1_ok = in_range(x, rs1);
    let rs2_ok = in_range(x, rs2);
    let mut class = Vec::with_capacity(Class::ALL.len());
    for &c in Class::ALL {
        if c == Class::ILLEGAL {
            class.push(x.bool_const(false));
            continue;
        }
        let (m, v) = c.pattern().expect("supported class");
        let mc = x.constant(32, m as u64);
        let masked = x.and(word, mc);
        let mut t = x.eq_const(masked, v as u64);
        if c.uses_rd() {
            t = x.and(t, rd_ok);
        }
        if c.uses_rs1() {
            t = x.and(t, rs1_ok);
        }
        if c.uses_rs2() {
            t = x.and(t, rs2_ok);
        }
        class.push(t);
    }
    let legal = {
        let terms: Vec<ExprId> = class[..Class::ILLEGAL as usize].to_vec();
        x.any(&terms)
    };
    class[Class::ILLEGAL as usize] = x.not(legal);
    DecodeLogic { class, rs1, rs2, rd, imm_i, imm_s, imm_b, imm_u, imm_j }
}
