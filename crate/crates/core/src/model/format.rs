//! JSON reading and writing of models.

use super::*;
use serde_json::{json, Map, Value};

const STMT_KEYS: &[&str] =
    &["call", "gate", "control", "invert", "repeat", "select", "within", "allocate", "free", "let", "inline"];

/// Parses and validates a model document; the first diagnostic becomes the
/// error.
pub fn parse_model(text: &str) -> Result<Model, ModelError> {
    let model = read_model(text)?;
    if let Some(d) = validate(&model).into_iter().next() {
        return Err(d.error);
    }
    Ok(model)
}

/// Syntax-level reading without semantic checks.
pub fn read_model(text: &str) -> Result<Model, ModelError> {
    let v: Value = serde_json::from_str(text).map_err(|e| ModelError::Json {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    from_value(&v)
}

fn syn(path: &str, msg: impl Into<String>) -> ModelError {
    ModelError::Syntax { path: path.to_string(), msg: msg.into() }
}

fn obj<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, ModelError> {
    v.as_object().ok_or_else(|| syn(path, "expected an object"))
}

fn check_keys(m: &Map<String, Value>, allowed: &[&str], path: &str) -> Result<(), ModelError> {
    for k in m.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(syn(path, format!("unexpected key `{k}`")));
        }
    }
    Ok(())
}

pub fn from_value(v: &Value) -> Result<Model, ModelError> {
    let top = obj(v, "$")?;
    check_keys(top, &["functions", "entry", "variables"], "$")?;
    let entry =
        top.get("entry").and_then(Value::as_str).ok_or_else(|| syn("$.entry", "expected a function name"))?.to_string();
    let mut variables = IndexMap::new();
    if let Some(vars) = top.get("variables") {
        for (name, w) in obj(vars, "$.variables")? {
            let w = w.as_u64().ok_or_else(|| syn(&format!("$.variables.{name}"), "expected a width"))?;
            variables.insert(name.clone(), w as usize);
        }
    }
    let funcs = obj(top.get("functions").ok_or_else(|| syn("$", "missing `functions`"))?, "$.functions")?;

    let mut sigs: IndexMap<String, Vec<Param>> = IndexMap::new();
    for (name, f) in funcs {
        let path = format!("$.functions.{name}");
        let f = obj(f, &path)?;
        check_keys(f, &["params", "body"], &path)?;
        let params = match f.get("params") {
            Some(p) => read_params(p, &format!("{path}.params"))?,
            None => vec![],
        };
        sigs.insert(name.clone(), params);
    }
    let mut functions = IndexMap::new();
    for (name, f) in funcs {
        let path = format!("$.functions.{name}");
        let body = match f.get("body") {
            Some(b) => read_body(b, &format!("{path}.body"), &sigs)?,
            None => vec![],
        };
        functions.insert(name.clone(), FunctionDef { name: name.clone(), params: sigs[name].clone(), body });
    }
    Ok(Model { functions, entry, variables })
}

fn read_params(v: &Value, path: &str) -> Result<Vec<Param>, ModelError> {
    let arr = v.as_array().ok_or_else(|| syn(path, "expected a list"))?;
    let mut out = Vec::new();
    for (i, p) in arr.iter().enumerate() {
        let path = format!("{path}[{i}]");
        let m = obj(p, &path)?;
        check_keys(m, &["name", "kind", "width"], &path)?;
        let name = m.get("name").and_then(Value::as_str).ok_or_else(|| syn(&path, "missing `name`"))?;
        let kind = m.get("kind").and_then(Value::as_str).ok_or_else(|| syn(&path, "missing `kind`"))?;
        let width = m.get("width").map(|w| read_expr(w, &format!("{path}.width"))).transpose()?;
        let kind = match kind {
            "qubit" | "qbit" => ParamKind::Qubit,
            "qubit_array" | "qbit[]" => ParamKind::QubitArray(width),
            "qnum" => ParamKind::QNum(width),
            "real" | "int" => ParamKind::Real,
            k => return Err(syn(&path, format!("unknown parameter kind `{k}`"))),
        };
        out.push(Param { name: name.to_string(), kind });
    }
    Ok(out)
}

fn read_expr(v: &Value, path: &str) -> Result<Expr, ModelError> {
    match v {
        Value::Number(n) => Ok(Expr::Num(n.as_f64().unwrap_or(f64::NAN))),
        Value::String(s) => Expr::parse(s).map_err(|source| ModelError::Expr { path: path.into(), source }),
        _ => Err(syn(path, "expected a number or expression string")),
    }
}

fn read_operand(v: &Value, path: &str) -> Result<Operand, ModelError> {
    match v {
        Value::String(s) => Operand::parse(s).map_err(|source| ModelError::Expr { path: path.into(), source }),
        Value::Array(parts) => Ok(Operand::Concat(
            parts
                .iter()
                .enumerate()
                .map(|(i, p)| read_operand(p, &format!("{path}[{i}]")))
                .collect::<Result<_, _>>()?,
        )),
        _ => Err(syn(path, "expected an operand string or list")),
    }
}

fn read_args(v: Option<&Value>, sig: Option<&[Param]>, path: &str) -> Result<Vec<Arg>, ModelError> {
    let Some(v) = v else { return Ok(vec![]) };
    let arr = v.as_array().ok_or_else(|| syn(path, "expected a list"))?;
    let mut out = Vec::new();
    for (i, a) in arr.iter().enumerate() {
        let p = format!("{path}[{i}]");
        let quantum = match sig.and_then(|s| s.get(i)) {
            Some(param) => param.kind.is_quantum(),
            None => !a.is_number() && (a.is_array() || a.as_str().is_some_and(|s| Operand::parse(s).is_ok())),
        };
        out.push(if quantum { Arg::Qubits(read_operand(a, &p)?) } else { Arg::Value(read_expr(a, &p)?) });
    }
    Ok(out)
}

fn read_body(v: &Value, path: &str, sigs: &IndexMap<String, Vec<Param>>) -> Result<Vec<Stmt>, ModelError> {
    let arr = v.as_array().ok_or_else(|| syn(path, "expected a list of statements"))?;
    arr.iter().enumerate().map(|(i, s)| read_stmt(s, &format!("{path}[{i}]"), sigs)).collect()
}

fn read_stmt(v: &Value, path: &str, sigs: &IndexMap<String, Vec<Param>>) -> Result<Stmt, ModelError> {
    let m = obj(v, path)?;
    let kinds: Vec<&str> = STMT_KEYS.iter().copied().filter(|k| m.contains_key(*k)).collect();
    let kind = match kinds.as_slice() {
        [k] => *k,
        [] => return Err(syn(path, "statement has no kind key")),
        _ => return Err(syn(path, format!("statement has several kind keys: {}", kinds.join(", ")))),
    };
    let sub = |key: &str| format!("{path}.{key}");
    let get = |key: &str| m.get(key).ok_or_else(|| syn(path, format!("missing `{key}`")));
    let string = |key: &str| -> Result<String, ModelError> {
        get(key)?.as_str().map(str::to_string).ok_or_else(|| syn(&sub(key), "expected a string"))
    };
    let body = |key: &str| read_body(get(key)?, &sub(key), sigs);
    Ok(match kind {
        "call" => {
            check_keys(m, &["call", "args"], path)?;
            let func = string("call")?;
            let sig = sigs.get(&func).cloned().or_else(|| stdlib_signature(&func));
            Stmt::Call { args: read_args(m.get("args"), sig.as_deref(), &sub("args"))?, func }
        }
        "gate" => {
            check_keys(m, &["gate", "args"], path)?;
            let name = string("gate")?;
            let gate = PrimGate::parse(&name).ok_or_else(|| syn(&sub("gate"), format!("unknown gate `{name}`")))?;
            Stmt::Gate { gate, args: read_args(m.get("args"), Some(&gate.signature()), &sub("args"))? }
        }
        "control" => {
            check_keys(m, &["control", "value", "body"], path)?;
            Stmt::Control {
                operand: read_operand(get("control")?, &sub("control"))?,
                value: m.get("value").map(|e| read_expr(e, &sub("value"))).transpose()?,
                body: body("body")?,
            }
        }
        "invert" => {
            check_keys(m, &["invert"], path)?;
            Stmt::Invert(body("invert")?)
        }
        "repeat" => {
            check_keys(m, &["repeat", "var", "body"], path)?;
            Stmt::Repeat {
                count: read_expr(get("repeat")?, &sub("repeat"))?,
                var: m.get("var").map(|_| string("var")).transpose()?,
                body: body("body")?,
            }
        }
        "select" => {
            check_keys(m, &["select"], path)?;
            let alts = get("select")?.as_array().ok_or_else(|| syn(&sub("select"), "expected a list of bodies"))?;
            Stmt::Select(
                alts.iter()
                    .enumerate()
                    .map(|(i, a)| read_body(a, &format!("{path}.select[{i}]"), sigs))
                    .collect::<Result<_, _>>()?,
            )
        }
        "within" => {
            check_keys(m, &["within", "apply"], path)?;
            Stmt::Within { within: body("within")?, apply: body("apply")? }
        }
        "allocate" => {
            check_keys(m, &["allocate", "width"], path)?;
            let width = match m.get("width") {
                Some(w) => read_expr(w, &sub("width"))?,
                None => Expr::int(1),
            };
            Stmt::Allocate { var: string("allocate")?, width }
        }
        "free" => {
            check_keys(m, &["free"], path)?;
            Stmt::Free { var: string("free")? }
        }
        "let" => {
            check_keys(m, &["let", "be"], path)?;
            Stmt::Let { name: string("let")?, operand: read_operand(get("be")?, &sub("be"))? }
        }
        "inline" => {
            check_keys(m, &["inline", "params", "args", "body"], path)?;
            let params = match m.get("params") {
                Some(p) => read_params(p, &sub("params"))?,
                None => vec![],
            };
            let args = read_args(m.get("args"), Some(&params), &sub("args"))?;
            Stmt::Inline { origin: string("inline")?, params, args, body: body("body")? }
        }
        _ => unreachable!(),
    })
}

fn expr_value(e: &Expr) -> Value {
    match e {
        Expr::Num(v) if v.fract() == 0.0 && v.abs() < 9.0e15 => json!(*v as i64),
        Expr::Num(v) => json!(v),
        _ => Value::String(e.to_string()),
    }
}

fn operand_value(o: &Operand) -> Value {
    match o {
        Operand::Concat(parts) => Value::Array(parts.iter().map(operand_value).collect()),
        _ => Value::String(o.to_string()),
    }
}

fn args_value(args: &[Arg]) -> Value {
    Value::Array(
        args.iter()
            .map(|a| match a {
                Arg::Qubits(o) => operand_value(o),
                Arg::Value(e) => expr_value(e),
            })
            .collect(),
    )
}

fn params_value(params: &[Param]) -> Value {
    Value::Array(
        params
            .iter()
            .map(|p| {
                let mut m = Map::new();
                m.insert("name".into(), json!(p.name));
                m.insert("kind".into(), json!(p.kind.name()));
                if let Some(w) = p.kind.declared_width() {
                    m.insert("width".into(), expr_value(w));
                }
                Value::Object(m)
            })
            .collect(),
    )
}

fn body_value(body: &[Stmt]) -> Value {
    Value::Array(body.iter().map(stmt_value).collect())
}

fn stmt_value(s: &Stmt) -> Value {
    match s {
        Stmt::Call { func, args } => json!({"call": func, "args": args_value(args)}),
        Stmt::Gate { gate, args } => json!({"gate": gate.name(), "args": args_value(args)}),
        Stmt::Control { operand, value, body } => {
            let mut m = Map::new();
            m.insert("control".into(), operand_value(operand));
            if let Some(v) = value {
                m.insert("value".into(), expr_value(v));
            }
            m.insert("body".into(), body_value(body));
            Value::Object(m)
        }
        Stmt::Invert(b) => json!({"invert": body_value(b)}),
        Stmt::Repeat { count, var, body } => {
            let mut m = Map::new();
            m.insert("repeat".into(), expr_value(count));
            if let Some(v) = var {
                m.insert("var".into(), json!(v));
            }
            m.insert("body".into(), body_value(body));
            Value::Object(m)
        }
        Stmt::Select(alts) => json!({"select": alts.iter().map(|a| body_value(a)).collect::<Vec<_>>()}),
        Stmt::Within { within, apply } => json!({"within": body_value(within), "apply": body_value(apply)}),
        Stmt::Allocate { var, width } => json!({"allocate": var, "width": expr_value(width)}),
        Stmt::Free { var } => json!({"free": var}),
        Stmt::Let { name, operand } => json!({"let": name, "be": operand_value(operand)}),
        Stmt::Inline { origin, params, args, body } => json!({
            "inline": origin,
            "params": params_value(params),
            "args": args_value(args),
            "body": body_value(body),
        }),
    }
}

pub fn to_json_value(model: &Model) -> Value {
    let mut funcs = Map::new();
    for (name, f) in &model.functions {
        let mut m = Map::new();
        if !f.params.is_empty() {
            m.insert("params".into(), params_value(&f.params));
        }
        m.insert("body".into(), body_value(&f.body));
        funcs.insert(name.clone(), Value::Object(m));
    }
    let vars: Map<String, Value> = model.variables.iter().map(|(k, w)| (k.clone(), json!(w))).collect();
    json!({"functions": funcs, "entry": model.entry, "variables": vars})
}

pub fn to_json(model: &Model) -> String {
    let mut s = serde_json::to_string_pretty(&to_json_value(model)).expect("model serializes");
    s.push('\n');
    s
}
