//! Arithmetic expressions used for widths, slice bounds, repeat counts and
//! angles in model files.
//!
//! Grammar: `+ - * / // % **`, unary minus, parentheses, numbers, `pi`,
//! identifiers, `len(x)` and the `x.len` / `x.size` forms.

use std::fmt;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Len(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("expression `{text}` at offset {pos}: {msg}")]
    Syntax { text: String, pos: usize, msg: String },
    #[error("unknown name `{0}`")]
    Unknown(String),
    #[error("`{0}` is not an integer")]
    NotInteger(String),
}

/// Name resolution for evaluation.
pub trait Scope {
    fn var(&self, name: &str) -> Option<f64>;
    fn len(&self, name: &str) -> Option<usize>;
}

pub struct EmptyScope;

impl Scope for EmptyScope {
    fn var(&self, _: &str) -> Option<f64> {
        None
    }
    fn len(&self, _: &str) -> Option<usize> {
        None
    }
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Num(v as f64)
    }

    pub fn parse(text: &str) -> Result<Expr, ExprError> {
        let mut p = Parser { text, toks: tokenize(text)?, i: 0 };
        let e = p.expr()?;
        if p.i != p.toks.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, scope: &dyn Scope) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(n) if n == "pi" => std::f64::consts::PI,
            Expr::Var(n) => scope.var(n).ok_or_else(|| ExprError::Unknown(n.clone()))?,
            Expr::Len(n) => scope.len(n).ok_or_else(|| ExprError::Unknown(n.clone()))? as f64,
            Expr::Neg(e) => -e.eval(scope)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(scope)?, b.eval(scope)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::FloorDiv => (a / b).floor(),
                    BinOp::Mod => a.rem_euclid(b),
                    BinOp::Pow => a.powf(b),
                }
            }
        })
    }

    pub fn eval_int(&self, scope: &dyn Scope) -> Result<i64, ExprError> {
        let v = self.eval(scope)?;
        if v.fract() != 0.0 || !v.is_finite() || v.abs() > 9.0e15 {
            return Err(ExprError::NotInteger(self.to_string()));
        }
        Ok(v as i64)
    }

    /// Value when the expression mentions no names.
    pub fn constant(&self) -> Option<f64> {
        self.eval(&EmptyScope).ok()
    }

    pub fn names(&self, out: &mut Vec<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) | Expr::Len(n) => out.push(n.clone()),
            Expr::Neg(e) => e.names(out),
            Expr::Bin(_, a, b) => {
                a.names(out);
                b.names(out);
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(n) => f.write_str(n),
            Expr::Len(n) => write!(f, "len({n})"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(&'static str),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, msg: &str| ExprError::Syntax { text: text.to_string(), pos, msg: msg.to_string() };
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && i + 1 < b.len() && (b[i + 1] as char).is_ascii_digit()) {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                i += 1;
                if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
                    i += 1;
                }
                while i < b.len() && (b[i] as char).is_ascii_digit() {
                    i += 1;
                }
            }
            let v: f64 = text[start..i].parse().map_err(|_| err(start, "bad number"))?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
        } else {
            let two = if i + 1 < b.len() { &text[i..i + 2] } else { "" };
            let op: &'static str = match two {
                "**" => "**",
                "//" => "//",
                _ => match c {
                    '+' => "+",
                    '-' => "-",
                    '*' => "*",
                    '/' => "/",
                    '%' => "%",
                    '(' => "(",
                    ')' => ")",
                    '.' => ".",
                    _ => return Err(err(i, "unexpected character")),
                },
            };
            out.push((i, Tok::Op(op)));
            i += op.len();
        }
    }
    Ok(out)
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<(usize, Tok)>,
    i: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> ExprError {
        let pos = self.toks.get(self.i).map(|t| t.0).unwrap_or(self.text.len());
        ExprError::Syntax { text: self.text.to_string(), pos, msg: msg.to_string() }
    }

    fn peek_op(&self) -> Option<&'static str> {
        match self.toks.get(self.i) {
            Some((_, Tok::Op(o))) => Some(o),
            _ => None,
        }
    }

    fn eat(&mut self, op: &str) -> bool {
        if self.peek_op() == Some(op) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_op() {
                Some("+") => BinOp::Add,
                Some("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.i += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_op() {
                Some("*") => BinOp::Mul,
                Some("/") => BinOp::Div,
                Some("//") => BinOp::FloorDiv,
                Some("%") => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.i += 1;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat("+") {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.eat("**") {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let tok = self.toks.get(self.i).cloned().ok_or_else(|| self.err("unexpected end"))?;
        self.i += 1;
        match tok.1 {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op("(") => {
                let e = self.expr()?;
                if !self.eat(")") {
                    return Err(self.err("expected `)`"));
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "len" && self.eat("(") {
                    let arg = match self.toks.get(self.i).cloned() {
                        Some((_, Tok::Ident(a))) => a,
                        _ => return Err(self.err("expected a name inside len()")),
                    };
                    self.i += 1;
                    if !self.eat(")") {
                        return Err(self.err("expected `)`"));
                    }
                    return Ok(Expr::Len(arg));
                }
                if self.eat(".") {
                    match self.toks.get(self.i).cloned() {
                        Some((_, Tok::Ident(a))) if a == "len" || a == "size" => {
                            self.i += 1;
                            return Ok(Expr::Len(name));
                        }
                        _ => return Err(self.err("expected `len` or `size` after `.`")),
                    }
                }
                Ok(Expr::Var(name))
            }
            Tok::Op(_) => {
                self.i -= 1;
                Err(self.err("expected a value"))
            }
        }
    }
}
