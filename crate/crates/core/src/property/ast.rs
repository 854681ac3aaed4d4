// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Directive {
    Assert,
    Cover,
    Assume,
}

impl Directive {
    pub fn keyword(self) -> &'static str {
        match self {
            Directive::Assert => "assert",
            Directive::Cover => "cover",
            Directive::Assume => "assume",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    /// `!`: logical negation.
    LNot,
    /// `~`: bitwise negation.
    BNot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    LOr,
    LAnd,
    BOr,
    BXor,
    BAnd,
    Eq,
    Neq,
    Lt,
    Le,
    Gt,
    Ge,
    Shl,
    Shr,
    Add,
    Sub,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        use BinOp::*;
        match self {
            LOr => "||",
            LAnd => "&&",
            BOr => "|",
            BXor => "^",
            BAnd => "&",
            Eq => "==",
            Neq => "!=",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Shl => "<<",
            Shr => ">>",
            Add => "+",
            Sub => "-",
        }
    }

    /// Binding strength; higher binds tighter. All levels are left
    /// associative.
    pub fn precedence(self) -> u8 {
        use BinOp::*;
        match self {
            LOr => 1,
            LAnd => 2,
            BOr => 3,
            BXor => 4,
            BAnd => 5,
            Eq | Neq => 6,
            Lt | Le | Gt | Ge => 7,
            Shl | Shr => 8,
            Add | Sub => 9,
        }
    }
}

/// Radix a literal was written in; kept so printing is faithful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Radix {
    Bin,
    Dec,
    Hex,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Ident(String),
    /// `width'radix digits`, or a plain decimal when `width` is `None`.
    Num { width: Option<u32>, radix: Radix, value: u64 },
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `signed(e)`.
    Signed(Box<Expr>),
    /// `e[hi:lo]`, or `e[i]` when `hi == lo`.
    Index(Box<Expr>, u32, u32),
    /// `{a, b, ...}`, most significant part first.
    Concat(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PropertyAst {
    pub name: Option<String>,
    pub directive: Directive,
    pub antecedent: Option<Expr>,
    pub consequent: Expr,
}

impl Expr {
    pub fn ident(s: &str) -> Expr {
        Expr::Ident(s.to_string())
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    /// Identifiers in first-occurrence order.
    pub fn identifiers(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Ident(s) = e {
                if !out.contains(s) {
                    out.push(s.clone());
                }
            }
        });
        out
    }

    fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Ident(_) | Expr::Num { .. } => {}
            Expr::Unary(_, a) | Expr::Signed(a) | Expr::Index(a, ..) => a.walk(f),
            Expr::Binary(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Ternary(a, b, c) => {
                a.walk(f);
                b.walk(f);
                c.walk(f);
            }
            Expr::Concat(v) => v.iter().for_each(|e| e.walk(f)),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Ternary(..) => 0,
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Unary(..) => 10,
            _ => 11,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Ident(s) => write!(f, "{s}"),
            Expr::Num { width: None, value, .. } => write!(f, "{value}"),
            Expr::Num { width: Some(w), radix, value } => match radix {
                Radix::Bin => write!(f, "{w}'b{value:b}"),
                Radix::Dec => write!(f, "{w}'d{value}"),
                Radix::Hex => write!(f, "{w}'h{value:x}"),
            },
            Expr::Unary(op, a) => {
                write!(f, "{}", if *op == UnOp::LNot { "!" } else { "~" })?;
                a.fmt_prec(f, 10)
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                a.fmt_prec(f, p)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_prec(f, p + 1)
            }
            Expr::Ternary(c, t, e) => {
                c.fmt_prec(f, 1)?;
                write!(f, " ? ")?;
                t.fmt_prec(f, 1)?;
                write!(f, " : ")?;
                e.fmt_prec(f, 0)
            }
            Expr::Signed(a) => {
                write!(f, "signed(")?;
                a.fmt_prec(f, 0)?;
                write!(f, ")")
            }
            Expr::Index(a, hi, lo) => {
                a.fmt_prec(f, 11)?;
                if hi == lo {
                    write!(f, "[{hi}]")
                } else {
                    write!(f, "[{hi}:{lo}]")
                }
            }
            Expr::Concat(v) => {
                write!(f, "{{")?;
                for (i, e) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    e.fmt_prec(f, 0)?;
                }
                write!(f, "}}")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl fmt::Display for PropertyAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = &self.name {
            write!(f, "{n}: ")?;
        }
        write!(f, "{} property (", self.directive.keyword())?;
        if let Some(a) = &self.antecedent {
            write!(f, "{a} |-> ")?;
        }
        write!(f, "{});", self.consequent)
    }
}
