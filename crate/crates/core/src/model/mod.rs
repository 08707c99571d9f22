//! User-facing model: functions over named quantum variables, with control,
//! invert, repeat, within/apply and select among implementations.

mod elaborate;
mod format;
mod inline;
mod validate;

pub use elaborate::{control_elems, elaborate, flatten, invert_elems, qubit_set, Elaborated, Elem, FlatItem};
pub use format::{parse_model, read_model, to_json, to_json_value};
pub use inline::inline_composites;
pub use validate::{validate, Diagnostic};

use crate::expr::{Expr, ExprError};
use indexmap::IndexMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {msg}")]
    Json { line: usize, column: usize, msg: String },
    #[error("at {path}: {msg}")]
    Syntax { path: String, msg: String },
    #[error("at {path}: {source}")]
    Expr { path: String, source: ExprError },
    #[error("unresolved name `{name}` in {context}")]
    Unresolved { name: String, context: String },
    #[error("empty slice `{0}`")]
    EmptySlice(String),
    #[error("`{operand}` is out of bounds for width {width}")]
    OutOfBounds { operand: String, width: usize },
    #[error("width mismatch in {context}: expected {want}, got {got}")]
    WidthMismatch { context: String, want: usize, got: usize },
    #[error("recursive definition through `{0}`")]
    Recursive(String),
    #[error("`{func}` takes {want} arguments, got {got}")]
    Arity { func: String, want: usize, got: usize },
    #[error("qubit used twice in one operation: {0}")]
    Aliasing(String),
    #[error("use of freed variable `{0}`")]
    UseAfterFree(String),
    #[error("{0}")]
    Invalid(String),
    #[error("missing choice for select at `{0}`")]
    MissingChoice(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub functions: IndexMap<String, FunctionDef>,
    pub entry: String,
    /// Quantum variables of the entry function and their widths.
    pub variables: IndexMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub kind: ParamKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamKind {
    Qubit,
    QubitArray(Option<Expr>),
    QNum(Option<Expr>),
    Real,
}

impl ParamKind {
    pub fn is_quantum(&self) -> bool {
        !matches!(self, ParamKind::Real)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ParamKind::Qubit => "qubit",
            ParamKind::QubitArray(_) => "qubit_array",
            ParamKind::QNum(_) => "qnum",
            ParamKind::Real => "real",
        }
    }

    pub fn declared_width(&self) -> Option<&Expr> {
        match self {
            ParamKind::QubitArray(w) | ParamKind::QNum(w) => w.as_ref(),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrimGate {
    H,
    X,
    Rz,
    Cx,
    CPhase,
}

impl PrimGate {
    pub fn parse(s: &str) -> Option<PrimGate> {
        Some(match s.to_ascii_uppercase().as_str() {
            "H" => PrimGate::H,
            "X" => PrimGate::X,
            "RZ" => PrimGate::Rz,
            "CX" => PrimGate::Cx,
            "CPHASE" => PrimGate::CPhase,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            PrimGate::H => "H",
            PrimGate::X => "X",
            PrimGate::Rz => "RZ",
            PrimGate::Cx => "CX",
            PrimGate::CPhase => "CPHASE",
        }
    }

    /// Parameter list in argument order.
    pub fn signature(self) -> Vec<Param> {
        let q = |n: &str| Param { name: n.into(), kind: ParamKind::Qubit };
        let r = |n: &str| Param { name: n.into(), kind: ParamKind::Real };
        match self {
            PrimGate::H | PrimGate::X => vec![q("q")],
            PrimGate::Rz => vec![r("theta"), q("q")],
            PrimGate::Cx => vec![q("ctrl"), q("target")],
            PrimGate::CPhase => vec![r("theta"), q("a"), q("b")],
        }
    }
}

/// Library functions callable by name from a model.
pub fn stdlib_signature(name: &str) -> Option<Vec<Param>> {
    let arr = |n: &str| Param { name: n.into(), kind: ParamKind::QubitArray(None) };
    let num = |n: &str| Param { name: n.into(), kind: ParamKind::QNum(None) };
    let q = |n: &str| Param { name: n.into(), kind: ParamKind::Qubit };
    let r = |n: &str| Param { name: n.into(), kind: ParamKind::Real };
    Some(match name {
        "mcx" => vec![arr("ctrl"), q("target")],
        "mcphase" => vec![r("theta"), arr("q")],
        "reflect_about_zero" => vec![arr("x")],
        "hadamard_transform" => vec![arr("x")],
        "add_const" => vec![r("value"), num("x")],
        _ => return None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Index {
    At(Expr),
    Range(Option<Expr>, Option<Expr>),
}

/// A reference to qubits: a variable, one bit, a slice, or a concatenation.
#[derive(Clone, Debug, PartialEq)]
pub enum Operand {
    Var { name: String, index: Option<Index> },
    Concat(Vec<Operand>),
}

impl Operand {
    pub fn var(name: &str) -> Operand {
        Operand::Var { name: name.into(), index: None }
    }

    pub fn parse(text: &str) -> Result<Operand, ExprError> {
        let t = text.trim();
        let syntax = |pos: usize, msg: &str| ExprError::Syntax { text: text.into(), pos, msg: msg.into() };
        let Some(open) = t.find('[') else {
            if !is_ident(t) {
                return Err(syntax(0, "expected a variable name"));
            }
            return Ok(Operand::var(t));
        };
        let name = t[..open].trim();
        if !is_ident(name) {
            return Err(syntax(0, "expected a variable name"));
        }
        if !t.ends_with(']') {
            return Err(syntax(t.len(), "expected `]`"));
        }
        let inner = &t[open + 1..t.len() - 1];
        let index = match top_level_colon(inner) {
            None => Index::At(Expr::parse(inner)?),
            Some(c) => {
                let part = |s: &str| -> Result<Option<Expr>, ExprError> {
                    if s.trim().is_empty() {
                        Ok(None)
                    } else {
                        Expr::parse(s).map(Some)
                    }
                };
                Index::Range(part(&inner[..c])?, part(&inner[c + 1..])?)
            }
        };
        Ok(Operand::Var { name: name.into(), index: Some(index) })
    }

    pub fn names(&self, out: &mut Vec<String>) {
        match self {
            Operand::Var { name, index } => {
                out.push(name.clone());
                match index {
                    Some(Index::At(e)) => e.names(out),
                    Some(Index::Range(a, b)) => {
                        for e in [a, b].into_iter().flatten() {
                            e.names(out);
                        }
                    }
                    None => {}
                }
            }
            Operand::Concat(parts) => parts.iter().for_each(|p| p.names(out)),
        }
    }

    /// Variables whose qubits this operand refers to.
    pub fn roots(&self, out: &mut Vec<String>) {
        match self {
            Operand::Var { name, .. } => out.push(name.clone()),
            Operand::Concat(parts) => parts.iter().for_each(|p| p.roots(out)),
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && c.all(|ch| ch.is_ascii_alphanumeric() || ch == '_')
}

fn top_level_colon(s: &str) -> Option<usize> {
    let mut depth = 0i32;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ':' if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var { name, index: None } => f.write_str(name),
            Operand::Var { name, index: Some(Index::At(e)) } => write!(f, "{name}[{e}]"),
            Operand::Var { name, index: Some(Index::Range(a, b)) } => {
                write!(f, "{name}[")?;
                if let Some(a) = a {
                    write!(f, "{a}")?;
                }
                f.write_str(":")?;
                if let Some(b) = b {
                    write!(f, "{b}")?;
                }
                f.write_str("]")
            }
            Operand::Concat(parts) => {
                f.write_str("{")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Arg {
    Qubits(Operand),
    Value(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    Call {
        func: String,
        args: Vec<Arg>,
    },
    Gate {
        gate: PrimGate,
        args: Vec<Arg>,
    },
    /// Body runs when `operand` holds `value` (all ones when absent).
    Control {
        operand: Operand,
        value: Option<Expr>,
        body: Vec<Stmt>,
    },
    Invert(Vec<Stmt>),
    Repeat {
        count: Expr,
        var: Option<String>,
        body: Vec<Stmt>,
    },
    Select(Vec<Vec<Stmt>>),
    /// `within; apply; inverse(within)`.
    Within {
        within: Vec<Stmt>,
        apply: Vec<Stmt>,
    },
    Allocate {
        var: String,
        width: Expr,
    },
    Free {
        var: String,
    },
    /// Zero-cost alias for an operand.
    Let {
        name: String,
        operand: Operand,
    },
    /// An inlined function body: `params` are bound to `args` in a scope that
    /// extends the enclosing one.
    Inline {
        origin: String,
        params: Vec<Param>,
        args: Vec<Arg>,
        body: Vec<Stmt>,
    },
}

impl Stmt {
    pub fn kind(&self) -> &'static str {
        match self {
            Stmt::Call { .. } => "call",
            Stmt::Gate { .. } => "gate",
            Stmt::Control { .. } => "control",
            Stmt::Invert(_) => "invert",
            Stmt::Repeat { .. } => "repeat",
            Stmt::Select(_) => "select",
            Stmt::Within { .. } => "within",
            Stmt::Allocate { .. } => "allocate",
            Stmt::Free { .. } => "free",
            Stmt::Let { .. } => "let",
            Stmt::Inline { .. } => "inline",
        }
    }

    /// Nested statement lists in pre-order.
    pub fn children(&self) -> Vec<&Vec<Stmt>> {
        match self {
            Stmt::Control { body, .. } | Stmt::Repeat { body, .. } | Stmt::Inline { body, .. } => vec![body],
            Stmt::Invert(b) => vec![b],
            Stmt::Select(alts) => alts.iter().collect(),
            Stmt::Within { within, apply } => vec![within, apply],
            _ => vec![],
        }
    }
}

/// Visits statements in pre-order, passing each one's pre-order index.
pub fn walk_stmts<'a>(body: &'a [Stmt], f: &mut dyn FnMut(usize, &'a Stmt)) {
    fn go<'a>(body: &'a [Stmt], next: &mut usize, f: &mut dyn FnMut(usize, &'a Stmt)) {
        for s in body {
            let k = *next;
            *next += 1;
            f(k, s);
            for child in s.children() {
                go(child, next, f);
            }
        }
    }
    let mut next = 0;
    go(body, &mut next, f);
}

impl Model {
    pub fn entry_def(&self) -> Option<&FunctionDef> {
        self.functions.get(&self.entry)
    }

    pub fn functional_width(&self) -> usize {
        self.variables.values().sum()
    }

    pub fn has_select(&self) -> bool {
        let mut found = false;
        for f in self.functions.values() {
            walk_stmts(&f.body, &mut |_, s| found |= matches!(s, Stmt::Select(_)));
        }
        found
    }
}
