// SPDX-License-Identifier: Apache-2.0

//! Word-level to bit-level lowering. Bit vectors are least significant bit
//! first.

use std::collections::HashMap;

use super::{ExprId, Node, TransitionSystem};

/// A target for bit-level gates: the expression pool itself (for
/// [`bitblast`]) or a CNF encoder.
pub trait GateSink {
    type Bit: Copy + PartialEq;

    fn konst(&mut self, b: bool) -> Self::Bit;
    fn not(&mut self, a: Self::Bit) -> Self::Bit;
    fn and(&mut self, a: Self::Bit, b: Self::Bit) -> Self::Bit;
    fn xor(&mut self, a: Self::Bit, b: Self::Bit) -> Self::Bit;

    fn or(&mut self, a: Self::Bit, b: Self::Bit) -> Self::Bit {
        let na = self.not(a);
        let nb = self.not(b);
        let n = self.and(na, nb);
        self.not(n)
    }

    fn mux(&mut self, s: Self::Bit, t: Self::Bit, e: Self::Bit) -> Self::Bit {
        if t == e {
            return t;
        }
        let a = self.and(s, t);
        let ns = self.not(s);
        let b = self.and(ns, e);
        self.or(a, b)
    }

    fn xnor(&mut self, a: Self::Bit, b: Self::Bit) -> Self::Bit {
        let x = self.xor(a, b);
        self.not(x)
    }

    fn and_all(&mut self, bits: &[Self::Bit]) -> Self::Bit {
        let mut acc = self.konst(true);
        for &b in bits {
            acc = self.and(acc, b);
        }
        acc
    }

    fn or_all(&mut self, bits: &[Self::Bit]) -> Self::Bit {
        let mut acc = self.konst(false);
        for &b in bits {
            acc = self.or(acc, b);
        }
        acc
    }
}

fn add_bits<S: GateSink>(s: &mut S, a: &[S::Bit], b: &[S::Bit], mut carry: S::Bit) -> Vec<S::Bit> {
    let mut out = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let axb = s.xor(a[i], b[i]);
        out.push(s.xor(axb, carry));
        let g = s.and(a[i], b[i]);
        let p = s.and(axb, carry);
        carry = s.or(g, p);
    }
    out
}

/// Unsigned a < b.
fn ult_bits<S: GateSink>(s: &mut S, a: &[S::Bit], b: &[S::Bit]) -> S::Bit {
    let mut lt = s.konst(false);
    for i in 0..a.len() {
        let na = s.not(a[i]);
        let here = s.and(na, b[i]);
        let same = s.xnor(a[i], b[i]);
        let keep = s.and(same, lt);
        lt = s.or(here, keep);
    }
    lt
}

fn slt_bits<S: GateSink>(s: &mut S, a: &[S::Bit], b: &[S::Bit]) -> S::Bit {
    let n = a.len();
    let mut a2 = a.to_vec();
    let mut b2 = b.to_vec();
    a2[n - 1] = s.not(a[n - 1]);
    b2[n - 1] = s.not(b[n - 1]);
    ult_bits(s, &a2, &b2)
}

fn eq_bits<S: GateSink>(s: &mut S, a: &[S::Bit], b: &[S::Bit]) -> S::Bit {
    let xs: Vec<S::Bit> = a.iter().zip(b).map(|(&x, &y)| s.xnor(x, y)).collect();
    s.and_all(&xs)
}

#[derive(Clone, Copy)]
enum ShiftKind {
    Left,
    RightLogical,
    RightArith,
}

fn shift_bits<S: GateSink>(s: &mut S, a: &[S::Bit], amt: &[S::Bit], kind: ShiftKind) -> Vec<S::Bit> {
    let w = a.len();
    let fill = match kind {
        ShiftKind::RightArith => a[w - 1],
        _ => s.konst(false),
    };
    let mut cur = a.to_vec();
    let mut overflow = s.konst(false);
    for (j, &sel) in amt.iter().enumerate() {
        let dist = 1usize.checked_shl(j as u32).unwrap_or(usize::MAX);
        if dist >= w {
            overflow = s.or(overflow, sel);
            continue;
        }
        let shifted: Vec<S::Bit> = (0..w)
            .map(|i| match kind {
                ShiftKind::Left => {
                    if i >= dist {
                        cur[i - dist]
                    } else {
                        fill
                    }
                }
                _ => {
                    if i + dist < w {
                        cur[i + dist]
                    } else {
                        fill
                    }
                }
            })
            .collect();
        cur = (0..w).map(|i| s.mux(sel, shifted[i], cur[i])).collect();
    }
    cur.iter().map(|&b| s.mux(overflow, fill, b)).collect()
}

/// Lowers one node given the bit vectors of its operands (in child order).
/// `Ref` and `Const` are handled by the caller, except that constants may be
/// passed through here with `args` empty.
pub fn blast_node<S: GateSink>(s: &mut S, node: &Node, args: &[&[S::Bit]]) -> Vec<S::Bit> {
    match *node {
        Node::Const { width, value } => (0..width).map(|i| s.konst((value >> i) & 1 == 1)).collect(),
        Node::Ref(_) => unreachable!("references are resolved by the caller"),
        Node::Not(_) => args[0].iter().map(|&b| s.not(b)).collect(),
        Node::And(..) => args[0].iter().zip(args[1]).map(|(&a, &b)| s.and(a, b)).collect(),
        Node::Or(..) => args[0].iter().zip(args[1]).map(|(&a, &b)| s.or(a, b)).collect(),
        Node::Xor(..) => args[0].iter().zip(args[1]).map(|(&a, &b)| s.xor(a, b)).collect(),
        Node::Ite(..) => {
            let c = args[0][0];
            args[1].iter().zip(args[2]).map(|(&t, &e)| s.mux(c, t, e)).collect()
        }
        Node::Eq(..) => vec![eq_bits(s, args[0], args[1])],
        Node::Neq(..) => {
            let e = eq_bits(s, args[0], args[1]);
            vec![s.not(e)]
        }
        Node::Ult(..) => vec![ult_bits(s, args[0], args[1])],
        Node::Ule(..) => {
            let gt = ult_bits(s, args[1], args[0]);
            vec![s.not(gt)]
        }
        Node::Slt(..) => vec![slt_bits(s, args[0], args[1])],
        Node::Sle(..) => {
            let gt = slt_bits(s, args[1], args[0]);
            vec![s.not(gt)]
        }
        Node::Add(..) => {
            let c = s.konst(false);
            add_bits(s, args[0], args[1], c)
        }
        Node::Sub(..) => {
            let nb: Vec<S::Bit> = args[1].iter().map(|&b| s.not(b)).collect();
            let c = s.konst(true);
            add_bits(s, args[0], &nb, c)
        }
        Node::Shl(..) => shift_bits(s, args[0], args[1], ShiftKind::Left),
        Node::Lshr(..) => shift_bits(s, args[0], args[1], ShiftKind::RightLogical),
        Node::Ashr(..) => shift_bits(s, args[0], args[1], ShiftKind::RightArith),
        Node::Slice { hi, lo, .. } => args[0][lo as usize..=hi as usize].to_vec(),
        Node::Concat(..) => {
            let mut v = args[1].to_vec();
            v.extend_from_slice(args[0]);
            v
        }
        Node::SignExtend { width, .. } => {
            let mut v = args[0].to_vec();
            let msb = *v.last().expect("non-empty operand");
            v.resize(width as usize, msb);
            v
        }
        Node::ZeroExtend { width, .. } => {
            let mut v = args[0].to_vec();
            let z = s.konst(false);
            v.resize(width as usize, z);
            v
        }
    }
}

/// Gate sink that builds width-1 expressions in a system's pool.
struct PoolSink<'a>(&'a mut TransitionSystem);

impl GateSink for PoolSink<'_> {
    type Bit = ExprId;
    fn konst(&mut self, b: bool) -> ExprId {
        self.0.x().bool_const(b)
    }
    fn not(&mut self, a: ExprId) -> ExprId {
        self.0.x().not(a)
    }
    fn and(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.0.x().and(a, b)
    }
    fn xor(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.0.x().xor(a, b)
    }
    fn or(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.0.x().or(a, b)
    }
}

/// Lowers `expr` to one width-1 expression per bit, least significant first.
/// Net references become single-bit slices of the net; wire references stay
/// references (their bits are slices of the wire).
pub fn bitblast(ts: &mut TransitionSystem, expr: ExprId) -> Vec<ExprId> {
    let order = {
        // Post-order without wire resolution.
        let mut order = Vec::new();
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![(expr, false)];
        while let Some((e, done)) = stack.pop() {
            if done {
                order.push(e);
                continue;
            }
            if !seen.insert(e) {
                continue;
            }
            stack.push((e, true));
            for c in ts.pool().node(e).children() {
                if !seen.contains(&c) {
                    stack.push((c, false));
                }
            }
        }
        order
    };
    let mut memo: HashMap<ExprId, Vec<ExprId>> = HashMap::new();
    for e in order {
        if memo.contains_key(&e) {
            continue;
        }
        let node = *ts.pool().node(e);
        let bits = match node {
            Node::Ref(_) => {
                let w = ts.width(e);
                (0..w).map(|i| ts.x().bit(e, i)).collect()
            }
            _ => {
                let kids: Vec<Vec<ExprId>> = node.children().map(|c| memo[&c].clone()).collect();
                let refs: Vec<&[ExprId]> = kids.iter().map(|v| v.as_slice()).collect();
                blast_node(&mut PoolSink(ts), &node, &refs)
            }
        };
        memo.insert(e, bits);
    }
    memo.remove(&expr).expect("root visited")
}
