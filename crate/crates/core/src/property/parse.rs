// SPDX-License-Identifier: Apache-2.0

//! Tokenizer and recursive-descent parser for property statements.

use super::ast::{BinOp, Directive, Expr, PropertyAst, Radix, UnOp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num { width: Option<u32>, radix: Radix, value: u64 },
    Op(&'static str),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const OPS: [&str; 28] = [
    "|->", "&&", "||", "==", "!=", "<=", ">=", "<<", ">>", "!", "~", "&", "|", "^", "<", ">", "+", "-", "?", ":", "(",
    ")", "[", "]", "{", "}", ",", ";",
];

fn digits(radix: Radix, s: &str) -> Option<u64> {
    let s: String = s.chars().filter(|&c| c != '_').collect();
    if s.is_empty() {
        return None;
    }
    let r = match radix {
        Radix::Bin => 2,
        Radix::Dec => 10,
        Radix::Hex => 16,
    };
    u64::from_str_radix(&s, r).ok()
}

fn tokenize(text: &str, line0: usize) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        let err = |col: usize, msg: String| ParseError { line: line0 + li, col: col + 1, msg };
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
                break;
            }
            let start = i;
            let tok = if c.is_ascii_alphabetic() || c == '_' || c == '$' {
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                Tok::Ident(chars[start..i].iter().collect())
            } else if c.is_ascii_digit() {
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
                    i += 1;
                }
                let first: String = chars[start..i].iter().collect();
                if chars.get(i) == Some(&'\'') {
                    let width = digits(Radix::Dec, &first)
                        .filter(|&w| (1..=64).contains(&w))
                        .ok_or_else(|| err(start, format!("literal width `{first}` must be 1..64")))?
                        as u32;
                    i += 1;
                    let radix = match chars.get(i).map(|c| c.to_ascii_lowercase()) {
                        Some('b') => Radix::Bin,
                        Some('d') => Radix::Dec,
                        Some('h') => Radix::Hex,
                        _ => return Err(err(i, "expected radix b, d or h".into())),
                    };
                    i += 1;
                    let ds = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    let body: String = chars[ds..i].iter().collect();
                    let value = digits(radix, &body).ok_or_else(|| err(ds, format!("bad digits `{body}`")))?;
                    if width < 64 && value >> width != 0 {
                        return Err(err(start, format!("literal {value} overflows {width} bits")));
                    }
                    Tok::Num { width: Some(width), radix, value }
                } else {
                    let value = digits(Radix::Dec, &first).ok_or_else(|| err(start, format!("bad number `{first}`")))?;
                    Tok::Num { width: None, radix: Radix::Dec, value }
                }
            } else {
                let rest: String = chars[i..].iter().take(3).collect();
                match OPS.iter().find(|op| rest.starts_with(*op)) {
                    Some(op) => {
                        i += op.len();
                        Tok::Op(op)
                    }
                    None => return Err(err(i, format!("unexpected character `{c}`"))),
                }
            };
            out.push(Token { tok, line: line0 + li, col: start + 1 });
        }
    }
    let (line, col) = match text.lines().enumerate().last() {
        Some((l, s)) => (line0 + l, s.chars().count() + 1),
        None => (line0, 1),
    };
    out.push(Token { tok: Tok::End, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let t = &self.toks[self.pos];
        let found = match &t.tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num { .. } => "number".to_string(),
            Tok::Op(o) => format!("`{o}`"),
            Tok::End => "end of input".to_string(),
        };
        Err(ParseError { line: t.line, col: t.col, msg: format!("{}, found {found}", msg.into()) })
    }

    fn eat(&mut self, op: &str) -> bool {
        if *self.peek() == Tok::Op(leak(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &str) -> Result<(), ParseError> {
        if self.eat(op) {
            Ok(())
        } else {
            self.err(format!("expected `{op}`"))
        }
    }

    fn ident(&mut self) -> Option<String> {
        if let Tok::Ident(s) = self.peek() {
            let s = s.clone();
            self.pos += 1;
            Some(s)
        } else {
            None
        }
    }

    fn statement(&mut self) -> Result<PropertyAst, ParseError> {
        let mut name = None;
        if matches!(self.peek(), Tok::Ident(_)) && self.toks.get(self.pos + 1).map(|t| &t.tok) == Some(&Tok::Op(":")) {
            name = self.ident();
            self.pos += 1;
        }
        let directive = match self.peek() {
            Tok::Ident(s) if s == "assert" => Directive::Assert,
            Tok::Ident(s) if s == "cover" => Directive::Cover,
            Tok::Ident(s) if s == "assume" => Directive::Assume,
            _ => return self.err("expected `assert`, `cover` or `assume`"),
        };
        self.pos += 1;
        if !matches!(self.peek(), Tok::Ident(s) if s == "property") {
            return self.err("expected `property`");
        }
        self.pos += 1;
        self.expect("(")?;
        let first = self.expr()?;
        let (antecedent, consequent) = if self.eat("|->") { (Some(first), self.expr()?) } else { (None, first) };
        self.expect(")")?;
        self.eat(";");
        Ok(PropertyAst { name, directive, antecedent, consequent })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let c = self.binary(1)?;
        if self.eat("?") {
            let t = self.expr()?;
            self.expect(":")?;
            let e = self.expr()?;
            return Ok(Expr::Ternary(Box::new(c), Box::new(t), Box::new(e)));
        }
        Ok(c)
    }

    fn binop(&self) -> Option<BinOp> {
        use BinOp::*;
        let Tok::Op(o) = self.peek() else { return None };
        Some(match *o {
            "||" => LOr,
            "&&" => LAnd,
            "|" => BOr,
            "^" => BXor,
            "&" => BAnd,
            "==" => Eq,
            "!=" => Neq,
            "<" => Lt,
            "<=" => Le,
            ">" => Gt,
            ">=" => Ge,
            "<<" => Shl,
            ">>" => Shr,
            "+" => Add,
            "-" => Sub,
            _ => return None,
        })
    }

    fn binary(&mut self, min: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop().filter(|op| op.precedence() >= min) {
            self.pos += 1;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat("!") {
            return Ok(Expr::Unary(UnOp::LNot, Box::new(self.unary()?)));
        }
        if self.eat("~") {
            return Ok(Expr::Unary(UnOp::BNot, Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn index_num(&mut self) -> Result<u32, ParseError> {
        match *self.peek() {
            Tok::Num { width: None, value, .. } if value < 64 => {
                self.pos += 1;
                Ok(value as u32)
            }
            _ => self.err("expected a bit index"),
        }
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        while self.eat("[") {
            let hi = self.index_num()?;
            let lo = if self.eat(":") { self.index_num()? } else { hi };
            if lo > hi {
                return self.err(format!("slice [{hi}:{lo}] has lo > hi"));
            }
            self.expect("]")?;
            e = Expr::Index(Box::new(e), hi, lo);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num { width, radix, value } => {
                self.pos += 1;
                Ok(Expr::Num { width, radix, value })
            }
            Tok::Ident(s) => {
                self.pos += 1;
                if (s == "signed" || s == "$signed") && self.eat("(") {
                    let e = self.expr()?;
                    self.expect(")")?;
                    return Ok(Expr::Signed(Box::new(e)));
                }
                if s.starts_with('$') {
                    self.pos -= 1;
                    return self.err("unknown system function");
                }
                Ok(Expr::Ident(s))
            }
            Tok::Op("(") => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Op("{") => {
                self.pos += 1;
                let mut parts = vec![self.expr()?];
                while self.eat(",") {
                    parts.push(self.expr()?);
                }
                self.expect("}")?;
                Ok(Expr::Concat(parts))
            }
            _ => self.err("expected an expression"),
        }
    }
}

fn leak(op: &str) -> &'static str {
    OPS.iter().find(|o| **o == op).copied().expect("known operator")
}

/// Parses one statement such as `a: assert property (x |-> y);`.
pub fn parse(text: &str) -> Result<PropertyAst, ParseError> {
    let mut p = Parser { toks: tokenize(text, 1)?, pos: 0 };
    let s = p.statement()?;
    if *p.peek() != Tok::End {
        return p.err("expected end of statement");
    }
    Ok(s)
}

/// Parses a property file: one statement per line; blank lines and `#` or
/// `//` comments are skipped.
pub fn parse_file(text: &str) -> Result<Vec<PropertyAst>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let toks = tokenize(line, i + 1)?;
        if toks.len() == 1 {
            continue;
        }
        let mut p = Parser { toks, pos: 0 };
        out.push(p.statement()?);
        if *p.peek() != Tok::End {
            return p.err("expected end of statement");
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_points_at_closing_paren() {
        let e = parse("assert property (foo ==);").unwrap_err();
        assert_eq!((e.line, e.col), (1, 24));
    }

    #[test]
    fn overflowing_literal() {
        let e = parse("assert property (x == 3'd9);").unwrap_err();
        assert!(e.msg.contains("overflows"), "{e}");
        assert!(parse("assert property (x == 64'hffffffffffffffff);").is_ok());
    }

    #[test]
    fn file_skips_comments() {
        let f = "# header\n\nassert property (a == b); // trailing\ncover property (c);\n";
        let v = parse_file(f).unwrap();
        assert_eq!(v.len(), 2);
        let e = parse_file("assert property (a);\nassert property (b ==);\n").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
