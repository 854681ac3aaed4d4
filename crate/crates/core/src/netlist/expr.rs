// SPDX-License-Identifier: Apache-2.0

//! Hash-consed word-level expression pool.

use std::collections::HashMap;

use super::{NetId, NetlistError, MAX_WIDTH};

/// Handle to a node in an [`ExprPool`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExprId(pub(crate) u32);

impl ExprId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One expression node. Binary arithmetic and comparison operands share a
/// width; shift amounts may have any width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Const { width: u8, value: u64 },
    Ref(NetId),
    Not(ExprId),
    And(ExprId, ExprId),
    Or(ExprId, ExprId),
    Xor(ExprId, ExprId),
    Ite(ExprId, ExprId, ExprId),
    Eq(ExprId, ExprId),
    Neq(ExprId, ExprId),
    Ult(ExprId, ExprId),
    Ule(ExprId, ExprId),
    Slt(ExprId, ExprId),
    Sle(ExprId, ExprId),
    Add(ExprId, ExprId),
    Sub(ExprId, ExprId),
    Shl(ExprId, ExprId),
    Lshr(ExprId, ExprId),
    Ashr(ExprId, ExprId),
    Slice { arg: ExprId, hi: u8, lo: u8 },
    /// `Concat(hi, lo)`: `lo` occupies the least significant bits.
    Concat(ExprId, ExprId),
    SignExtend { arg: ExprId, width: u8 },
    ZeroExtend { arg: ExprId, width: u8 },
}

impl Node {
    /// Direct operands, in order.
    pub fn children(&self) -> impl Iterator<Item = ExprId> {
        let (a, b, c) = match *self {
            Node::Const { .. } | Node::Ref(_) => (None, None, None),
            Node::Not(a) | Node::Slice { arg: a, .. } => (Some(a), None, None),
            Node::SignExtend { arg: a, .. } | Node::ZeroExtend { arg: a, .. } => (Some(a), None, None),
            Node::Ite(c, t, e) => (Some(c), Some(t), Some(e)),
            Node::And(a, b)
            | Node::Or(a, b)
            | Node::Xor(a, b)
            | Node::Eq(a, b)
            | Node::Neq(a, b)
            | Node::Ult(a, b)
            | Node::Ule(a, b)
            | Node::Slt(a, b)
            | Node::Sle(a, b)
            | Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Shl(a, b)
            | Node::Lshr(a, b)
            | Node::Ashr(a, b)
            | Node::Concat(a, b) => (Some(a), Some(b), None),
        };
        a.into_iter().chain(b).chain(c)
    }

    pub fn op_name(&self) -> &'static str {
        match self {
            Node::Const { .. } => "const",
            Node::Ref(_) => "ref",
            Node::Not(_) => "not",
            Node::And(..) => "and",
            Node::Or(..) => "or",
            Node::Xor(..) => "xor",
            Node::Ite(..) => "ite",
            Node::Eq(..) => "eq",
            Node::Neq(..) => "neq",
            Node::Ult(..) => "ult",
            Node::Ule(..) => "ule",
            Node::Slt(..) => "slt",
            Node::Sle(..) => "sle",
            Node::Add(..) => "add",
            Node::Sub(..) => "sub",
            Node::Shl(..) => "shl",
            Node::Lshr(..) => "lshr",
            Node::Ashr(..) => "ashr",
            Node::Slice { .. } => "slice",
            Node::Concat(..) => "concat",
            Node::SignExtend { .. } => "sext",
            Node::ZeroExtend { .. } => "zext",
        }
    }
}

#[inline]
pub fn mask(width: u8) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[inline]
fn to_signed(v: u64, width: u8) -> i64 {
    let shift = 64 - width as u32;
    ((v << shift) as i64) >> shift
}

/// Concrete semantics of one node given its operand values (already masked to
/// their widths). `widths` yields the operand widths in child order.
pub fn eval_node(node: &Node, width: u8, args: &[u64], arg_widths: &[u8]) -> u64 {
    let m = mask(width);
    let v = match *node {
        Node::Const { value, .. } => value,
        Node::Ref(_) => unreachable!("references are resolved by the caller"),
        Node::Not(_) => !args[0],
        Node::And(..) => args[0] & args[1],
        Node::Or(..) => args[0] | args[1],
        Node::Xor(..) => args[0] ^ args[1],
        Node::Ite(..) => {
            if args[0] & 1 == 1 {
                args[1]
            } else {
                args[2]
            }
        }
        Node::Eq(..) => (args[0] == args[1]) as u64,
        Node::Neq(..) => (args[0] != args[1]) as u64,
        Node::Ult(..) => (args[0] < args[1]) as u64,
        Node::Ule(..) => (args[0] <= args[1]) as u64,
        Node::Slt(..) => (to_signed(args[0], arg_widths[0]) < to_signed(args[1], arg_widths[1])) as u64,
        Node::Sle(..) => (to_signed(args[0], arg_widths[0]) <= to_signed(args[1], arg_widths[1])) as u64,
        Node::Add(..) => args[0].wrapping_add(args[1]),
        Node::Sub(..) => args[0].wrapping_sub(args[1]),
        Node::Shl(..) => {
            if args[1] >= width as u64 {
                0
            } else {
                args[0] << args[1]
            }
        }
        Node::Lshr(..) => {
            if args[1] >= width as u64 {
                0
            } else {
                args[0] >> args[1]
            }
        }
        Node::Ashr(..) => {
            let s = to_signed(args[0], width);
            let amt = args[1].min(63);
            (s >> amt) as u64
        }
        Node::Slice { lo, .. } => args[0] >> lo,
        Node::Concat(..) => (args[0] << arg_widths[1]) | args[1],
        Node::SignExtend { .. } => to_signed(args[0], arg_widths[0]) as u64,
        Node::ZeroExtend { .. } => args[0],
    };
    v & m
}

/// Arena of structurally-hashed expression nodes. Construction folds
/// operations over constants and a few identities; folding never changes
/// semantics.
#[derive(Debug, Clone, Default)]
pub struct ExprPool {
    nodes: Vec<Node>,
    widths: Vec<u8>,
    dedup: HashMap<Node, ExprId>,
}

impl ExprPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, e: ExprId) -> &Node {
        &self.nodes[e.index()]
    }

    pub fn width(&self, e: ExprId) -> u8 {
        self.widths[e.index()]
    }

    pub fn const_value(&self, e: ExprId) -> Option<u64> {
        match self.nodes[e.index()] {
            Node::Const { value, .. } => Some(value),
            _ => None,
        }
    }

    fn intern(&mut self, node: Node, width: u8) -> ExprId {
        if let Some(&id) = self.dedup.get(&node) {
            return id;
        }
        let id = ExprId(self.nodes.len() as u32);
        self.nodes.push(node);
        self.widths.push(width);
        self.dedup.insert(node, id);
        id
    }

    pub(crate) fn mk_ref(&mut self, net: NetId, width: u8) -> ExprId {
        self.intern(Node::Ref(net), width)
    }

    pub fn constant(&mut self, width: u8, value: u64) -> ExprId {
        assert!((1..=MAX_WIDTH).contains(&width), "constant width {width} out of range");
        self.intern(Node::Const { width, value: value & mask(width) }, width)
    }

    pub fn bool_const(&mut self, b: bool) -> ExprId {
        self.constant(1, b as u64)
    }

    /// Result width of `node`, or the reason it is ill-typed.
    pub fn type_check(&self, node: &Node) -> Result<u8, NetlistError> {
        let w = |e: ExprId| self.widths[e.index()];
        let same = |a: ExprId, b: ExprId, op: &str| -> Result<u8, NetlistError> {
            if w(a) != w(b) {
                Err(NetlistError::WidthMismatch {
                    context: op.to_string(),
                    expected: w(a) as u32,
                    found: w(b) as u32,
                })
            } else {
                Ok(w(a))
            }
        };
        match *node {
            Node::Const { width, .. } => {
                if (1..=MAX_WIDTH).contains(&width) {
                    Ok(width)
                } else {
                    Err(NetlistError::InvalidWidth(width as u32))
                }
            }
            Node::Ref(_) => Err(NetlistError::Internal("Ref nodes are created through the transition system".into())),
            Node::Not(a) => Ok(w(a)),
            Node::And(a, b) | Node::Or(a, b) | Node::Xor(a, b) | Node::Add(a, b) | Node::Sub(a, b) => {
                same(a, b, node.op_name())
            }
            Node::Eq(a, b) | Node::Neq(a, b) | Node::Ult(a, b) | Node::Ule(a, b) | Node::Slt(a, b) | Node::Sle(a, b) => {
                same(a, b, node.op_name()).map(|_| 1)
            }
            Node::Shl(a, _) | Node::Lshr(a, _) | Node::Ashr(a, _) => Ok(w(a)),
            Node::Ite(c, t, e) => {
                if w(c) != 1 {
                    return Err(NetlistError::WidthMismatch { context: "ite condition".into(), expected: 1, found: w(c) as u32 });
                }
                same(t, e, "ite")
            }
            Node::Slice { arg, hi, lo } => {
                if hi < lo || hi >= w(arg) {
                    Err(NetlistError::SliceOutOfRange { hi: hi as u32, lo: lo as u32, width: w(arg) as u32 })
                } else {
                    Ok(hi - lo + 1)
                }
            }
            Node::Concat(a, b) => {
                let total = w(a) as u32 + w(b) as u32;
                if total > MAX_WIDTH as u32 {
                    Err(NetlistError::InvalidWidth(total))
                } else {
                    Ok(total as u8)
                }
            }
            Node::SignExtend { arg, width } | Node::ZeroExtend { arg, width } => {
                if width < w(arg) || width > MAX_WIDTH {
                    Err(NetlistError::InvalidWidth(width as u32))
                } else {
                    Ok(width)
                }
            }
        }
    }

    /// Checked construction; used for untrusted input such as parsed properties.
    pub fn try_mk(&mut self, node: Node) -> Result<ExprId, NetlistError> {
        let width = self.type_check(&node)?;
        Ok(self.build(node, width))
    }

    /// Construction for trusted builders; a width error is a programming bug.
    pub fn mk(&mut self, node: Node) -> ExprId {
        match self.try_mk(node) {
            Ok(e) => e,
            Err(err) => panic!("ill-typed {} node: {err}", node.op_name()),
        }
    }

    fn build(&mut self, node: Node, width: u8) -> ExprId {
        let consts: Vec<Option<u64>> = node.children().map(|c| self.const_value(c)).collect();
        if !matches!(node, Node::Const { .. }) && !consts.is_empty() && consts.iter().all(Option::is_some) {
            let args: Vec<u64> = consts.iter().map(|c| c.unwrap()).collect();
            let aw: Vec<u8> = node.children().map(|c| self.width(c)).collect();
            let v = eval_node(&node, width, &args, &aw);
            return self.constant(width, v);
        }
        if let Some(e) = self.simplify(&node, width) {
            return e;
        }
        self.intern(node, width)
    }

    fn is_const(&self, e: ExprId, v: u64) -> bool {
        self.const_value(e) == Some(v & mask(self.width(e)))
    }

    fn simplify(&mut self, node: &Node, width: u8) -> Option<ExprId> {
        let ones = mask(width);
        match *node {
            Node::And(a, b) => {
                if self.is_const(a, 0) || self.is_const(b, 0) {
                    return Some(self.constant(width, 0));
                }
                if self.is_const(a, ones) || a == b {
                    return Some(b);
                }
                if self.is_const(b, ones) {
                    return Some(a);
                }
                None
            }
            Node::Or(a, b) => {
                if self.is_const(a, ones) || self.is_const(b, ones) {
                    return Some(self.constant(width, ones));
                }
                if self.is_const(a, 0) || a == b {
                    return Some(b);
                }
                if self.is_const(b, 0) {
                    return Some(a);
                }
                None
            }
            Node::Xor(a, b) => {
                if a == b {
                    return Some(self.constant(width, 0));
                }
                if self.is_const(a, 0) {
                    return Some(b);
                }
                if self.is_const(b, 0) {
                    return Some(a);
                }
                None
            }
            Node::Not(a) => match *self.node(a) {
                Node::Not(inner) => Some(inner),
                _ => None,
            },
            Node::Ite(c, t, e) => {
                if t == e {
                    return Some(t);
                }
                match self.const_value(c) {
                    Some(1) => Some(t),
                    Some(_) => Some(e),
                    None => None,
                }
            }
            Node::Eq(a, b) if a == b => Some(self.constant(1, 1)),
            Node::Neq(a, b) if a == b => Some(self.constant(1, 0)),
            Node::Add(a, b) | Node::Sub(a, b) if self.is_const(b, 0) => Some(a),
            Node::Add(a, b) if self.is_const(a, 0) => Some(b),
            Node::Slice { arg, hi, lo } if lo == 0 && hi + 1 == self.width(arg) => Some(arg),
            Node::SignExtend { arg, width } | Node::ZeroExtend { arg, width } if width == self.width(arg) => Some(arg),
            _ => None,
        }
    }

    // Convenience constructors for trusted builders.

    pub fn not(&mut self, a: ExprId) -> ExprId {
        self.mk(Node::Not(a))
    }
    pub fn and(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.mk(Node::And(a, b))
    }
    pub fn or(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.mk(Node::Or(a, b))
    }
    pub fn xor(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.mk(Node::Xor(a, b))
    }
    pub fn ite(&mut self, c: ExprId, t: ExprId, e: ExprId) -> ExprId {
        self.mk(Node::Ite(c, t, e))
    }
    pub fn eq(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.mk(Node::Eq(a, b))
    }
    pub fn neq(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.mk(Node::Neq(a, b))
    }
    pub fn ult(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.mk(Node::Ult(a, b))
    }
    pub fn ule(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.mk(Node::Ule(a, b))
    }
    pub fn slt(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.mk(Node::Slt(a, b))
    }
    pub fn sle(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.mk(Node::Sle(a, b))
    }
    pub fn add(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.mk(Node::Add(a, b))
    }
    pub fn sub(&mut self, a: ExprId, b: ExprId) -> ExprId {
        self.mk(Node::Sub(a, b))
    }
    pub fn shl(&mut self, a: ExprId, amt: ExprId) -> ExprId {
        self.mk(Node::Shl(a, amt))
    }
    pub fn lshr(&mut self, a: ExprId, amt: ExprId) -> ExprId {
        self.mk(Node::Lshr(a, amt))
    }
    pub fn ashr(&mut self, a: ExprId, amt: ExprId) -> ExprId {
        self.mk(Node::Ashr(a, amt))
    }
    pub fn slice(&mut self, arg: ExprId, hi: u8, lo: u8) -> ExprId {
        self.mk(Node::Slice { arg, hi, lo })
    }
    pub fn bit(&mut self, arg: ExprId, i: u8) -> ExprId {
        self.slice(arg, i, i)
    }
    pub fn concat(&mut self, hi: ExprId, lo: ExprId) -> ExprId {
        self.mk(Node::Concat(hi, lo))
    }
    /// Concatenation of several parts, most significant first.
    pub fn concat_all(&mut self, parts: &[ExprId]) -> ExprId {
        let mut it = parts.iter().copied();
        let mut acc = it.next().expect("concat of zero parts");
        for p in it {
            acc = self.concat(acc, p);
        }
        acc
    }
    pub fn sext(&mut self, arg: ExprId, width: u8) -> ExprId {
        self.mk(Node::SignExtend { arg, width })
    }
    pub fn zext(&mut self, arg: ExprId, width: u8) -> ExprId {
        self.mk(Node::ZeroExtend { arg, width })
    }
    pub fn implies(&mut self, a: ExprId, b: ExprId) -> ExprId {
        let na = self.not(a);
        self.or(na, b)
    }
    pub fn eq_const(&mut self, a: ExprId, v: u64) -> ExprId {
        let c = self.constant(self.width(a), v);
        self.eq(a, c)
    }
    /// Conjunction of width-1 terms; empty means true.
    pub fn all(&mut self, terms: &[ExprId]) -> ExprId {
        let mut acc = self.bool_const(true);
        for &t in terms {
            acc = self.and(acc, t);
        }
        acc
    }
    /// Disjunction of width-1 terms; empty means false.
    pub fn any(&mut self, terms: &[ExprId]) -> ExprId {
        let mut acc = self.bool_const(false);
        for &t in terms {
            acc = self.or(acc, t);
        }
        acc
    }
    /// Width-1 "value is nonzero".
    pub fn reduce_or(&mut self, a: ExprId) -> ExprId {
        let z = self.constant(self.width(a), 0);
        self.neq(a, z)
    }
}
