// SPDX-License-Identifier: Apache-2.0

//! Debug listing: one line per net with its defining expression in prefix
//! form. Not a stable format.

use std::fmt::Write;

use super::{ExprId, NetKind, Node, TransitionSystem};

impl TransitionSystem {
    pub fn expr_to_prefix(&self, e: ExprId) -> String {
        let mut s = String::new();
        self.write_prefix(e, &mut s, 0);
        s
    }

    fn write_prefix(&self, e: ExprId, out: &mut String, depth: usize) {
        if depth > 4 {
            let _ = write!(out, "#{}", e.0);
            return;
        }
        let node = *self.pool().node(e);
        match node {
            Node::Const { width, value } => {
                let _ = write!(out, "{width}'h{value:x}");
            }
            Node::Ref(n) => out.push_str(&self.net(n).name),
            Node::Slice { arg, hi, lo } => {
                let _ = write!(out, "(slice {hi} {lo} ");
                self.write_prefix(arg, out, depth + 1);
                out.push(')');
            }
            Node::SignExtend { arg, width } | Node::ZeroExtend { arg, width } => {
                let _ = write!(out, "({} {width} ", node.op_name());
                self.write_prefix(arg, out, depth + 1);
                out.push(')');
            }
            _ => {
                out.push('(');
                out.push_str(node.op_name());
                for c in node.children() {
                    out.push(' ');
                    self.write_prefix(c, out, depth + 1);
                }
                out.push(')');
            }
        }
    }

    /// Text listing of every net: kind, width, definition.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (id, net) in self.nets() {
            match net.kind {
                NetKind::Input => {
                    let _ = writeln!(out, "input {} {}", net.width, net.name);
                }
                NetKind::Register => {
                    let r = &self.registers()[self.register_slot(id).unwrap()];
                    let next = r.next.map(|n| self.expr_to_prefix(n)).unwrap_or_else(|| "?".into());
                    let _ = writeln!(out, "reg {} {} init={:#x} next={}", net.width, net.name, r.init, next);
                }
                NetKind::Wire => {
                    let def = self.wire_def(id).map(|d| self.expr_to_prefix(d)).unwrap_or_else(|| "?".into());
                    let _ = writeln!(out, "wire {} {} = {}", net.width, net.name, def);
                }
            }
        }
        for a in self.assumptions() {
            let _ = writeln!(out, "assume {}", self.expr_to_prefix(*a));
        }
        out
    }
}
