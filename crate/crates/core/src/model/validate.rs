//! Static model checks. Structural problems are reported per occurrence;
//! when none are found the model is elaborated to catch width and bounds
//! errors.

use super::*;
use std::collections::{HashMap, HashSet};

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub function: Option<String>,
    pub error: ModelError,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.function {
            Some(func) => write!(f, "in `{func}`: {}", self.error),
            None => write!(f, "{}", self.error),
        }
    }
}

pub fn validate(model: &Model) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |function: Option<&str>, error: ModelError| {
        out.push(Diagnostic { function: function.map(str::to_string), error })
    };
    match model.entry_def() {
        None => push(None, ModelError::Unresolved { name: model.entry.clone(), context: "entry".into() }),
        Some(f) if !f.params.is_empty() => {
            push(Some(&f.name), ModelError::Invalid("entry function must not take parameters".into()))
        }
        _ => {}
    }
    for (name, &w) in &model.variables {
        if w == 0 {
            push(None, ModelError::Invalid(format!("variable `{name}` has width 0")));
        }
        if model.functions.contains_key(name) {
            push(None, ModelError::Invalid(format!("variable `{name}` shadows a function")));
        }
    }
    for (name, f) in &model.functions {
        if stdlib_signature(name).is_some() {
            push(Some(name), ModelError::Invalid(format!("`{name}` redefines a library function")));
        }
        let mut seen = HashSet::new();
        for p in &f.params {
            if !seen.insert(p.name.as_str()) {
                push(Some(name), ModelError::Invalid(format!("duplicate parameter `{}`", p.name)));
            }
        }
        let mut scope: Vec<String> = f.params.iter().map(|p| p.name.clone()).collect();
        if *name == model.entry {
            scope.extend(model.variables.keys().cloned());
        }
        for p in &f.params {
            if let Some(w) = p.kind.declared_width() {
                check_expr(w, &scope, name, &mut push);
            }
        }
        check_body(model, &f.body, &mut scope, name, &mut push);
    }
    if let Some(cycle) = find_recursion(model) {
        push(Some(&cycle), ModelError::Recursive(cycle.clone()));
    }
    if out.is_empty() {
        if let Err(e) = elaborate(model) {
            out.push(Diagnostic { function: None, error: e });
        }
    }
    out
}

fn check_expr(e: &Expr, scope: &[String], func: &str, push: &mut dyn FnMut(Option<&str>, ModelError)) {
    let mut names = Vec::new();
    e.names(&mut names);
    for n in names {
        if n != "pi" && !scope.contains(&n) {
            push(Some(func), ModelError::Unresolved { name: n, context: func.into() });
        }
    }
}

fn check_operand(o: &Operand, scope: &[String], func: &str, push: &mut dyn FnMut(Option<&str>, ModelError)) {
    let mut names = Vec::new();
    o.names(&mut names);
    for n in names {
        if n != "pi" && !scope.contains(&n) {
            push(Some(func), ModelError::Unresolved { name: n, context: func.into() });
        }
    }
}

fn check_args(
    args: &[Arg],
    sig: &[Param],
    callee: &str,
    scope: &[String],
    func: &str,
    push: &mut dyn FnMut(Option<&str>, ModelError),
) {
    if args.len() != sig.len() {
        push(Some(func), ModelError::Arity { func: callee.into(), want: sig.len(), got: args.len() });
    }
    for a in args {
        match a {
            Arg::Qubits(o) => check_operand(o, scope, func, push),
            Arg::Value(e) => check_expr(e, scope, func, push),
        }
    }
}

fn check_body(
    model: &Model,
    body: &[Stmt],
    scope: &mut Vec<String>,
    func: &str,
    push: &mut dyn FnMut(Option<&str>, ModelError),
) {
    let mark = scope.len();
    for s in body {
        match s {
            Stmt::Call { func: callee, args } => {
                let sig = model.functions.get(callee).map(|f| f.params.clone()).or_else(|| stdlib_signature(callee));
                match sig {
                    Some(sig) => check_args(args, &sig, callee, scope, func, push),
                    None => push(Some(func), ModelError::Unresolved { name: callee.clone(), context: func.into() }),
                }
            }
            Stmt::Gate { gate, args } => check_args(args, &gate.signature(), gate.name(), scope, func, push),
            Stmt::Control { operand, value, body } => {
                check_operand(operand, scope, func, push);
                if let Some(v) = value {
                    check_expr(v, scope, func, push);
                }
                check_body(model, body, scope, func, push);
            }
            Stmt::Invert(b) => check_body(model, b, scope, func, push),
            Stmt::Repeat { count, var, body } => {
                check_expr(count, scope, func, push);
                if let Some(v) = var {
                    scope.push(v.clone());
                }
                check_body(model, body, scope, func, push);
                if var.is_some() {
                    scope.pop();
                }
            }
            Stmt::Select(alts) => {
                if alts.is_empty() {
                    push(Some(func), ModelError::Invalid("select needs at least one alternative".into()));
                }
                for a in alts {
                    check_body(model, a, scope, func, push);
                }
            }
            Stmt::Within { within, apply } => {
                // Names bound in `within` stay visible in `apply`.
                let m = scope.len();
                check_body_keep(model, within, scope, func, push);
                check_body_keep(model, apply, scope, func, push);
                scope.truncate(m);
            }
            Stmt::Allocate { var, width } => {
                check_expr(width, scope, func, push);
                scope.push(var.clone());
            }
            Stmt::Free { var } => {
                if !scope.contains(var) {
                    push(Some(func), ModelError::Unresolved { name: var.clone(), context: func.into() });
                }
            }
            Stmt::Let { name, operand } => {
                check_operand(operand, scope, func, push);
                scope.push(name.clone());
            }
            Stmt::Inline { origin, params, args, body } => {
                check_args(args, params, origin, scope, func, push);
                let m = scope.len();
                scope.extend(params.iter().map(|p| p.name.clone()));
                check_body(model, body, scope, func, push);
                scope.truncate(m);
            }
        }
    }
    scope.truncate(mark);
}

fn check_body_keep(
    model: &Model,
    body: &[Stmt],
    scope: &mut Vec<String>,
    func: &str,
    push: &mut dyn FnMut(Option<&str>, ModelError),
) {
    // Same as `check_body` but leaves top-level bindings in scope.
    for s in body {
        check_body(model, std::slice::from_ref(s), scope, func, push);
        match s {
            Stmt::Let { name, .. } => scope.push(name.clone()),
            Stmt::Allocate { var, .. } => scope.push(var.clone()),
            _ => {}
        }
    }
}

fn callees(body: &[Stmt], out: &mut Vec<String>) {
    walk_stmts(body, &mut |_, s| {
        if let Stmt::Call { func, .. } = s {
            out.push(func.clone());
        }
    });
}

/// Returns a function on a call cycle, if any.
fn find_recursion(model: &Model) -> Option<String> {
    let mut edges: HashMap<&str, Vec<String>> = HashMap::new();
    for (name, f) in &model.functions {
        let mut c = Vec::new();
        callees(&f.body, &mut c);
        edges.insert(name, c);
    }
    // 0 = unvisited, 1 = on stack, 2 = done.
    let mut state: HashMap<&str, u8> = HashMap::new();
    fn dfs<'a>(
        n: &'a str,
        edges: &'a HashMap<&'a str, Vec<String>>,
        state: &mut HashMap<&'a str, u8>,
    ) -> Option<String> {
        state.insert(n, 1);
        for c in edges.get(n).into_iter().flatten() {
            let Some((key, _)) = edges.get_key_value(c.as_str()) else { continue };
            match state.get(key).copied().unwrap_or(0) {
                1 => return Some(c.clone()),
                0 => {
                    if let Some(r) = dfs(key, edges, state) {
                        return Some(r);
                    }
                }
                _ => {}
            }
        }
        state.insert(n, 2);
        None
    }
    for name in model.functions.keys() {
        if state.get(name.as_str()).copied().unwrap_or(0) == 0 {
            if let Some(r) = dfs(name, &edges, &mut state) {
                return Some(r);
            }
        }
    }
    None
}
