// SPDX-License-Identifier: Apache-2.0

//! A small SVA subset: same-cycle `assert`/`cover`/`assume` properties with
//! optional `|->` implication, elaborated against a transition system.

mod ast;
mod gen;
mod parse;

use std::collections::{BTreeSet, HashMap};

pub use ast::{BinOp, Directive, Expr, PropertyAst, Radix, UnOp};
pub use gen::{
    arch_properties, builtin_corpus, crash_name_map, crash_properties, generate, hang_properties, imem_property, strobe_properties,
    Family, GenOptions, CRASH_CODES, DEAD_STATE_N,
};
pub use parse::{parse, parse_file, ParseError};

use crate::netlist::{support, ExprId, NetId, TransitionSystem};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ElabError {
    #[error("unresolved identifier `{0}`")]
    Unresolved(String),
    #[error("width mismatch in `{expr}`: {left} vs {right} bits")]
    Width { expr: String, left: u8, right: u8 },
    #[error("{0}")]
    Invalid(String),
}

/// An elaborated property. For `assert` and `assume` the obligation is
/// `antecedent -> consequent` and must hold in every cycle; for `cover` it is
/// `antecedent && consequent` and is the condition to reach.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Property {
    pub name: String,
    pub directive: Directive,
    pub obligation: ExprId,
    pub ast: PropertyAst,
}

impl Property {
    /// Nets the obligation reads directly.
    pub fn support(&self, ts: &TransitionSystem) -> BTreeSet<NetId> {
        support(ts, self.obligation)
    }
}

#[derive(Clone, Copy)]
struct Val {
    e: ExprId,
    signed: bool,
}

struct Elab<'a> {
    ts: &'a mut TransitionSystem,
    map: &'a HashMap<String, String>,
}

fn unsigned(e: ExprId) -> Val {
    Val { e, signed: false }
}

fn is_unsized(e: &Expr) -> bool {
    matches!(e, Expr::Num { width: None, .. })
}

impl Elab<'_> {
    fn width(&self, v: Val) -> u8 {
        self.ts.width(v.e)
    }

    fn boolean(&mut self, v: Val) -> ExprId {
        if self.width(v) == 1 {
            v.e
        } else {
            self.ts.x().reduce_or(v.e)
        }
    }

    fn bool_of(&mut self, e: &Expr) -> Result<ExprId, ElabError> {
        let v = self.expr(e, None)?;
        Ok(self.boolean(v))
    }

    /// Elaborates two operands to a common width; an unsized literal takes
    /// the width of the other side.
    fn pair(&mut self, whole: &Expr, a: &Expr, b: &Expr, want: Option<u8>) -> Result<(Val, Val), ElabError> {
        let (va, vb) = if is_unsized(a) && !is_unsized(b) {
            let vb = self.expr(b, want)?;
            let w = self.width(vb);
            (self.expr(a, Some(w))?, vb)
        } else {
            let va = self.expr(a, want)?;
            let w = self.width(va);
            (va, self.expr(b, Some(w))?)
        };
        let (wa, wb) = (self.width(va), self.width(vb));
        if wa != wb {
            return Err(ElabError::Width { expr: whole.to_string(), left: wa, right: wb });
        }
        Ok((va, vb))
    }

    fn expr(&mut self, e: &Expr, want: Option<u8>) -> Result<Val, ElabError> {
        Ok(match e {
            Expr::Ident(name) => {
                let target = self.map.get(name).map(String::as_str).unwrap_or(name);
                let id = self.ts.net_id(target).ok_or_else(|| ElabError::Unresolved(name.clone()))?;
                unsigned(self.ts.sig(id))
            }
            Expr::Num { width, value, .. } => {
                let w = match width {
                    Some(w) => *w as u8,
                    None => want.unwrap_or(32),
                };
                if w < 64 && value >> w != 0 {
                    return Err(ElabError::Invalid(format!("literal {value} does not fit {w} bits")));
                }
                unsigned(self.ts.x().constant(w, *value))
            }
            Expr::Unary(UnOp::LNot, a) => {
                let b = self.bool_of(a)?;
                unsigned(self.ts.x().not(b))
            }
            Expr::Unary(UnOp::BNot, a) => {
                let v = self.expr(a, want)?;
                Val { e: self.ts.x().not(v.e), signed: v.signed }
            }
            Expr::Signed(a) => {
                let v = self.expr(a, want)?;
                Val { e: v.e, signed: true }
            }
            Expr::Index(a, hi, lo) => {
                let v = self.expr(a, None)?;
                let w = self.width(v) as u32;
                if *hi >= w {
                    return Err(ElabError::Invalid(format!("`{e}` indexes past width {w}")));
                }
                unsigned(self.ts.x().slice(v.e, *hi as u8, *lo as u8))
            }
            Expr::Concat(parts) => {
                let mut ids = Vec::new();
                let mut total = 0u32;
                for p in parts {
                    if is_unsized(p) {
                        return Err(ElabError::Invalid(format!("unsized literal in concatenation `{e}`")));
                    }
                    let v = self.expr(p, None)?;
                    total += self.width(v) as u32;
                    ids.push(v.e);
                }
                if total > 64 {
                    return Err(ElabError::Invalid(format!("`{e}` is wider than 64 bits")));
                }
                unsigned(self.ts.x().concat_all(&ids))
            }
            Expr::Ternary(c, t, f) => {
                let cb = self.bool_of(c)?;
                let (vt, vf) = self.pair(e, t, f, want)?;
                Val { e: self.ts.x().ite(cb, vt.e, vf.e), signed: vt.signed && vf.signed }
            }
            Expr::Binary(op, a, b) => {
                use BinOp::*;
                match op {
                    LAnd | LOr => {
                        let (x, y) = (self.bool_of(a)?, self.bool_of(b)?);
                        let p = self.ts.x();
                        unsigned(if *op == LAnd { p.and(x, y) } else { p.or(x, y) })
                    }
                    Shl | Shr => {
                        let va = self.expr(a, want)?;
                        let vb = self.expr(b, None)?;
                        let p = self.ts.x();
                        let r = match op {
                            Shl => p.shl(va.e, vb.e),
                            _ if va.signed => p.ashr(va.e, vb.e),
                            _ => p.lshr(va.e, vb.e),
                        };
                        Val { e: r, signed: va.signed }
                    }
                    Eq | Neq | Lt | Le | Gt | Ge => {
                        let (va, vb) = self.pair(e, a, b, None)?;
                        let signed = va.signed && vb.signed;
                        let p = self.ts.x();
                        let (lt, le): (fn(&mut _, _, _) -> _, fn(&mut _, _, _) -> _) = if signed {
                            (crate::netlist::ExprPool::slt, crate::netlist::ExprPool::sle)
                        } else {
                            (crate::netlist::ExprPool::ult, crate::netlist::ExprPool::ule)
                        };
                        unsigned(match op {
                            Eq => p.eq(va.e, vb.e),
                            Neq => p.neq(va.e, vb.e),
                            Lt => lt(p, va.e, vb.e),
                            Le => le(p, va.e, vb.e),
                            Gt => lt(p, vb.e, va.e),
                            _ => le(p, vb.e, va.e),
                        })
                    }
                    BOr | BXor | BAnd | Add | Sub => {
                        let (va, vb) = self.pair(e, a, b, want)?;
                        let p = self.ts.x();
                        let r = match op {
                            BOr => p.or(va.e, vb.e),
                            BXor => p.xor(va.e, vb.e),
                            BAnd => p.and(va.e, vb.e),
                            Add => p.add(va.e, vb.e),
                            _ => p.sub(va.e, vb.e),
                        };
                        Val { e: r, signed: va.signed && vb.signed }
                    }
                }
            }
        })
    }
}

/// Elaborates `ast` against `ts`. Identifiers are looked up through
/// `name_map` first, then by net name.
pub fn elaborate(
    ast: &PropertyAst,
    ts: &mut TransitionSystem,
    name_map: &HashMap<String, String>,
) -> Result<Property, ElabError> {
    let mut el = Elab { ts, map: name_map };
    let cons = el.bool_of(&ast.consequent)?;
    let ante = match &ast.antecedent {
        Some(a) => Some(el.bool_of(a)?),
        None => None,
    };
    let x = ts.x();
    let obligation = match (ast.directive, ante) {
        (Directive::Cover, Some(a)) => x.and(a, cons),
        (_, Some(a)) => x.implies(a, cons),
        (_, None) => cons,
    };
    Ok(Property { name: ast.name.clone().unwrap_or_else(|| ast.to_string()), directive: ast.directive, obligation, ast: ast.clone() })
}

/// Parses and elaborates `assume` statements and adds them to `ts`.
pub fn add_assumptions(ts: &mut TransitionSystem, props: &[Property]) -> Result<(), ElabError> {
    for p in props.iter().filter(|p| p.directive == Directive::Assume) {
        ts.add_assumption(p.obligation).map_err(|e| ElabError::Invalid(e.to_string()))?;
    }
    Ok(())
}
