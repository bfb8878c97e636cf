//! Canonical program document: UTF-8 JSON with alphabetically ordered keys.
//!
//! ```json
//! {"body": [...], "task": {"id": "task8_pgp", "mode": "EXECUTE", "result_variable": "Result"}, "version": 1}
//! ```
//!
//! Statements and expressions are objects tagged by `"kind"`; crypto blocks
//! are `{"kind": "crypto", "opcode": "...", "args": [...]}`.

use std::fmt;

use serde_json::{Map, Value as Json};

use crate::blocks::Opcode;
use crate::program::{BlockProgram, Expression, Literal, Mode, Statement, TaskBinding};

pub const FORMAT_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Position {
    LineColumn { line: usize, column: usize },
    Pointer(String),
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::LineColumn { line, column } => write!(f, "line {line} column {column}"),
            Position::Pointer(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("parse error at {position}: {reason}")]
    Parse { position: Position, reason: String },
    #[error("schema error at {path}: {reason}")]
    Schema { path: String, reason: String },
}

impl FormatError {
    pub fn kind(&self) -> &'static str {
        match self {
            FormatError::Parse { .. } => "ParseError",
            FormatError::Schema { .. } => "SchemaError",
        }
    }
}

fn parse_err(path: &str, reason: impl Into<String>) -> FormatError {
    FormatError::Parse {
        position: Position::Pointer(if path.is_empty() {
            "/".into()
        } else {
            path.into()
        }),
        reason: reason.into(),
    }
}

fn schema_err(path: &str, reason: impl Into<String>) -> FormatError {
    FormatError::Schema {
        path: if path.is_empty() {
            "/".into()
        } else {
            path.into()
        },
        reason: reason.into(),
    }
}

pub fn parse_program(document: &[u8]) -> Result<BlockProgram, FormatError> {
    let json: Json = serde_json::from_slice(document).map_err(|e| {
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let full = e.to_string();
        FormatError::Parse {
            position: Position::LineColumn {
                line: e.line(),
                column: e.column(),
            },
            reason: full.strip_suffix(&suffix).unwrap_or(&full).to_owned(),
        }
    })?;
    program_from_json(&json)
}

pub fn parse_program_str(document: &str) -> Result<BlockProgram, FormatError> {
    parse_program(document.as_bytes())
}

/// Builds a program from an already-decoded JSON document.
pub fn program_from_json(json: &Json) -> Result<BlockProgram, FormatError> {
    let mut top = Fields::new(json, "")?;
    match top.take("version")? {
        Json::Number(n) if n.as_i64() == Some(FORMAT_VERSION) => {}
        Json::Number(n) => return Err(schema_err("/version", format!("unsupported version {n}"))),
        _ => return Err(parse_err("/version", "expected an integer")),
    }
    let task = match top.take_optional("task") {
        None | Some(Json::Null) => None,
        Some(t) => Some(parse_task(t)?),
    };
    let body = parse_block(top.take("body")?, "/body")?;
    top.finish()?;
    Ok(BlockProgram::new(task, body))
}

fn parse_task(json: &Json) -> Result<TaskBinding, FormatError> {
    let mut f = Fields::new(json, "/task")?;
    let task_id = f.string("id")?;
    let mode = match f.string("mode")?.as_str() {
        "HELP" => Mode::Help,
        "EXECUTE" => Mode::Execute,
        other => return Err(schema_err("/task/mode", format!("unknown mode {other:?}"))),
    };
    let result_variable = f.string("result_variable")?;
    f.finish()?;
    Ok(TaskBinding {
        task_id,
        mode,
        result_variable,
    })
}

fn parse_block(json: &Json, path: &str) -> Result<Vec<Statement>, FormatError> {
    let Json::Array(items) = json else {
        return Err(parse_err(path, "expected an array of statements"));
    };
    items
        .iter()
        .enumerate()
        .map(|(i, s)| parse_statement(s, &format!("{path}/{i}")))
        .collect()
}

fn parse_statement(json: &Json, path: &str) -> Result<Statement, FormatError> {
    let mut f = Fields::new(json, path)?;
    let kind = f.string("kind")?;
    let stmt = match kind.as_str() {
        "set" => Statement::Set {
            name: f.string("name")?,
            value: parse_expr(f.take("value")?, &f.sub("value"))?,
        },
        "change" => Statement::Change {
            name: f.string("name")?,
            by: parse_expr(f.take("by")?, &f.sub("by"))?,
        },
        "repeat" => Statement::Repeat {
            count: parse_expr(f.take("count")?, &f.sub("count"))?,
            body: parse_block(f.take("body")?, &f.sub("body"))?,
        },
        "if_else" => Statement::IfElse {
            condition: parse_expr(f.take("condition")?, &f.sub("condition"))?,
            then_branch: parse_block(f.take("then")?, &f.sub("then"))?,
            else_branch: parse_block(f.take("else")?, &f.sub("else"))?,
        },
        "say" => Statement::Say(parse_expr(f.take("value")?, &f.sub("value"))?),
        "set_keypair" => Statement::SetKeypair {
            owner: parse_expr(f.take("owner")?, &f.sub("owner"))?,
            public: f.string("public")?,
            private: f.string("private")?,
        },
        other => {
            return Err(schema_err(
                path,
                format!("unknown statement kind {other:?}"),
            ))
        }
    };
    f.finish()?;
    Ok(stmt)
}

fn parse_expr(json: &Json, path: &str) -> Result<Expression, FormatError> {
    let mut f = Fields::new(json, path)?;
    let kind = f.string("kind")?;
    let boxed = |f: &mut Fields, key: &str| -> Result<Box<Expression>, FormatError> {
        let sub = f.sub(key);
        Ok(Box::new(parse_expr(f.take(key)?, &sub)?))
    };
    let expr = match kind.as_str() {
        "literal" => {
            let lit = match f.take("value")? {
                Json::String(s) => Literal::Text(s.clone()),
                Json::Bool(b) => Literal::Boolean(*b),
                Json::Number(n) => match n.as_i64() {
                    Some(i) => Literal::Integer(i),
                    None => {
                        return Err(parse_err(
                            &f.sub("value"),
                            "literal numbers must be 64-bit integers",
                        ))
                    }
                },
                _ => {
                    return Err(parse_err(
                        &f.sub("value"),
                        "literal must be a string, integer or boolean",
                    ))
                }
            };
            Expression::Literal(lit)
        }
        "var" => Expression::Var(f.string("name")?),
        "join" => Expression::Join(boxed(&mut f, "left")?, boxed(&mut f, "right")?),
        "equals" => Expression::Equals(boxed(&mut f, "left")?, boxed(&mut f, "right")?),
        "contains" => Expression::Contains {
            haystack: boxed(&mut f, "haystack")?,
            needle: boxed(&mut f, "needle")?,
        },
        "crypto" => {
            let name = f.string("opcode")?;
            let opcode: Opcode = name.parse().map_err(|e: crate::blocks::UnknownOpcode| {
                schema_err(&f.sub("opcode"), e.to_string())
            })?;
            let args_path = f.sub("args");
            let Json::Array(raw) = f.take("args")? else {
                return Err(parse_err(&args_path, "expected an array of expressions"));
            };
            if raw.len() != opcode.arity() {
                return Err(schema_err(
                    &args_path,
                    format!(
                        "{opcode} takes {} argument(s), got {}",
                        opcode.arity(),
                        raw.len()
                    ),
                ));
            }
            let args = raw
                .iter()
                .enumerate()
                .map(|(i, a)| parse_expr(a, &format!("{args_path}/{i}")))
                .collect::<Result<_, _>>()?;
            Expression::Crypto { opcode, args }
        }
        other => {
            return Err(schema_err(
                path,
                format!("unknown expression kind {other:?}"),
            ))
        }
    };
    f.finish()?;
    Ok(expr)
}

/// Tracks which keys of a JSON object have been consumed so leftovers can
/// be rejected.
struct Fields<'a> {
    map: &'a Map<String, Json>,
    path: String,
    seen: Vec<&'a str>,
}

impl<'a> Fields<'a> {
    fn new(json: &'a Json, path: &str) -> Result<Self, FormatError> {
        match json {
            Json::Object(map) => Ok(Fields {
                map,
                path: path.to_owned(),
                seen: Vec::new(),
            }),
            _ => Err(parse_err(path, "expected an object")),
        }
    }

    fn sub(&self, key: &str) -> String {
        format!("{}/{key}", self.path)
    }

    fn take_optional(&mut self, key: &str) -> Option<&'a Json> {
        let (k, v) = self.map.get_key_value(key)?;
        self.seen.push(k.as_str());
        Some(v)
    }

    fn take(&mut self, key: &str) -> Result<&'a Json, FormatError> {
        self.take_optional(key)
            .ok_or_else(|| parse_err(&self.path, format!("missing field {key:?}")))
    }

    fn string(&mut self, key: &str) -> Result<String, FormatError> {
        match self.take(key)? {
            Json::String(s) => Ok(s.clone()),
            _ => Err(parse_err(&self.sub(key), "expected a string")),
        }
    }

    fn finish(self) -> Result<(), FormatError> {
        match self.map.keys().find(|k| !self.seen.contains(&k.as_str())) {
            Some(extra) => Err(parse_err(&self.path, format!("unexpected field {extra:?}"))),
            None => Ok(()),
        }
    }
}

/// Canonical bytes: keys sorted, two-space indentation, trailing newline.
pub fn serialize_program(program: &BlockProgram) -> String {
    let mut out = serde_json::to_string_pretty(&program_to_json(program)).expect("json serializes");
    out.push('\n');
    out
}

pub fn program_to_json(program: &BlockProgram) -> Json {
    let task = match program.task() {
        None => Json::Null,
        Some(t) => obj([
            ("id", Json::from(t.task_id.as_str())),
            (
                "mode",
                Json::from(match t.mode {
                    Mode::Help => "HELP",
                    Mode::Execute => "EXECUTE",
                }),
            ),
            ("result_variable", Json::from(t.result_variable.as_str())),
        ]),
    };
    obj([
        ("body", block_json(program.body())),
        ("task", task),
        ("version", Json::from(FORMAT_VERSION)),
    ])
}

/// Builds an object with keys inserted in sorted order, so output stays
/// canonical even if the map type preserves insertion order.
fn obj<const N: usize>(mut entries: [(&str, Json); N]) -> Json {
    entries.sort_by(|a, b| a.0.cmp(b.0));
    let mut map = Map::new();
    for (k, v) in entries {
        map.insert(k.to_owned(), v);
    }
    Json::Object(map)
}

fn block_json(stmts: &[Statement]) -> Json {
    Json::Array(stmts.iter().map(statement_json).collect())
}

fn statement_json(s: &Statement) -> Json {
    match s {
        Statement::Set { name, value } => obj([
            ("kind", "set".into()),
            ("name", name.as_str().into()),
            ("value", expr_json(value)),
        ]),
        Statement::Change { name, by } => obj([
            ("kind", "change".into()),
            ("name", name.as_str().into()),
            ("by", expr_json(by)),
        ]),
        Statement::Repeat { count, body } => obj([
            ("kind", "repeat".into()),
            ("count", expr_json(count)),
            ("body", block_json(body)),
        ]),
        Statement::IfElse {
            condition,
            then_branch,
            else_branch,
        } => obj([
            ("kind", "if_else".into()),
            ("condition", expr_json(condition)),
            ("then", block_json(then_branch)),
            ("else", block_json(else_branch)),
        ]),
        Statement::Say(e) => obj([("kind", "say".into()), ("value", expr_json(e))]),
        Statement::SetKeypair {
            owner,
            public,
            private,
        } => obj([
            ("kind", "set_keypair".into()),
            ("owner", expr_json(owner)),
            ("public", public.as_str().into()),
            ("private", private.as_str().into()),
        ]),
    }
}

fn expr_json(e: &Expression) -> Json {
    match e {
        Expression::Literal(lit) => {
            let v = match lit {
                Literal::Text(s) => Json::from(s.as_str()),
                Literal::Integer(i) => Json::from(*i),
                Literal::Boolean(b) => Json::from(*b),
            };
            obj([("kind", "literal".into()), ("value", v)])
        }
        Expression::Var(name) => obj([("kind", "var".into()), ("name", name.as_str().into())]),
        Expression::Join(l, r) => obj([
            ("kind", "join".into()),
            ("left", expr_json(l)),
            ("right", expr_json(r)),
        ]),
        Expression::Equals(l, r) => obj([
            ("kind", "equals".into()),
            ("left", expr_json(l)),
            ("right", expr_json(r)),
        ]),
        Expression::Contains { haystack, needle } => obj([
            ("kind", "contains".into()),
            ("haystack", expr_json(haystack)),
            ("needle", expr_json(needle)),
        ]),
        Expression::Crypto { opcode, args } => obj([
            ("kind", "crypto".into()),
            ("opcode", opcode.name().into()),
            ("args", Json::Array(args.iter().map(expr_json).collect())),
        ]),
    }
}
