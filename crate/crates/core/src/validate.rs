//! Static checks run before a program is executed.

use std::collections::BTreeSet;
use std::fmt;

use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::blocks::Opcode;
use crate::program::{AstPath, BlockProgram, Expression, Literal, Statement};

pub const MAX_NESTING_DEPTH: usize = 32;
pub const MAX_STATEMENTS: usize = 10_000;
pub const MAX_LITERAL_REPEAT: i64 = 1_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiagnosticKind {
    UnboundVariable(String),
    RepeatBoundExceeded {
        count: i64,
    },
    NegativeRepeatCount {
        count: i64,
    },
    NestingTooDeep {
        depth: usize,
    },
    TooManyStatements {
        count: usize,
    },
    ArityMismatch {
        opcode: Opcode,
        expected: usize,
        found: usize,
    },
    StatementOnlyBlock(Opcode),
    EmptyVariableName,
    EmptyResultVariable,
    ResultVariableUnassigned(String),
    UnknownTask(String),
}

impl DiagnosticKind {
    pub fn code(&self) -> &'static str {
        match self {
            DiagnosticKind::UnboundVariable(_) => "UNBOUND_VARIABLE",
            DiagnosticKind::RepeatBoundExceeded { .. } => "REPEAT_BOUND_EXCEEDED",
            DiagnosticKind::NegativeRepeatCount { .. } => "NEGATIVE_REPEAT_COUNT",
            DiagnosticKind::NestingTooDeep { .. } => "NESTING_TOO_DEEP",
            DiagnosticKind::TooManyStatements { .. } => "TOO_MANY_STATEMENTS",
            DiagnosticKind::ArityMismatch { .. } => "ARITY_MISMATCH",
            DiagnosticKind::StatementOnlyBlock(_) => "STATEMENT_ONLY_BLOCK",
            DiagnosticKind::EmptyVariableName => "EMPTY_VARIABLE_NAME",
            DiagnosticKind::EmptyResultVariable => "EMPTY_RESULT_VARIABLE",
            DiagnosticKind::ResultVariableUnassigned(_) => "RESULT_VARIABLE_UNASSIGNED",
            DiagnosticKind::UnknownTask(_) => "UNKNOWN_TASK",
        }
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticKind::UnboundVariable(v) => {
                write!(f, "variable {v:?} is used before it is set on every path")
            }
            DiagnosticKind::RepeatBoundExceeded { count } => {
                write!(
                    f,
                    "repeat count {count} exceeds the limit of {MAX_LITERAL_REPEAT}"
                )
            }
            DiagnosticKind::NegativeRepeatCount { count } => {
                write!(f, "repeat count {count} is negative")
            }
            DiagnosticKind::NestingTooDeep { depth } => {
                write!(f, "blocks nested {depth} deep (limit {MAX_NESTING_DEPTH})")
            }
            DiagnosticKind::TooManyStatements { count } => {
                write!(f, "program has {count} statements (limit {MAX_STATEMENTS})")
            }
            DiagnosticKind::ArityMismatch {
                opcode,
                expected,
                found,
            } => {
                write!(f, "{opcode} takes {expected} argument(s), got {found}")
            }
            DiagnosticKind::StatementOnlyBlock(op) => {
                write!(f, "{op} must be used through the set_keypair statement")
            }
            DiagnosticKind::EmptyVariableName => f.write_str("variable name is empty"),
            DiagnosticKind::EmptyResultVariable => {
                f.write_str("the task block's result variable is empty")
            }
            DiagnosticKind::ResultVariableUnassigned(v) => {
                write!(f, "result variable {v:?} is not set on every path")
            }
            DiagnosticKind::UnknownTask(id) => write!(f, "no task named {id:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: AstPath,
    pub kind: DiagnosticKind,
}

impl Serialize for Diagnostic {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Diagnostic", 3)?;
        st.serialize_field("code", self.kind.code())?;
        st.serialize_field("message", &self.kind.to_string())?;
        st.serialize_field("path", &self.path)?;
        st.end()
    }
}

/// Checks every structural invariant. `prebound` names the variables the
/// task environment provides before the program starts.
///
/// Variable binding is checked path-sensitively: a use is accepted only if
/// every path reaching it assigns the variable first. An assignment inside
/// one branch of an `if_else`, or inside a loop that may run zero times,
/// does not count after that block.
pub fn validate_program(program: &BlockProgram, prebound: &BTreeSet<String>) -> Vec<Diagnostic> {
    let mut v = Validator {
        diags: Vec::new(),
        statements: 0,
    };
    let mut bound = prebound.clone();
    v.block(program.body(), &AstPath::root().key("body"), 1, &mut bound);

    if v.statements > MAX_STATEMENTS {
        v.push(
            AstPath::root().key("body"),
            DiagnosticKind::TooManyStatements {
                count: v.statements,
            },
        );
    }
    if let Some(task) = program.task() {
        let path = AstPath::root().key("task").key("result_variable");
        if task.result_variable.is_empty() {
            v.push(path, DiagnosticKind::EmptyResultVariable);
        } else if !bound.contains(&task.result_variable) {
            v.push(
                path,
                DiagnosticKind::ResultVariableUnassigned(task.result_variable.clone()),
            );
        }
    }
    v.diags
}

struct Validator {
    diags: Vec<Diagnostic>,
    statements: usize,
}

impl Validator {
    fn push(&mut self, path: AstPath, kind: DiagnosticKind) {
        self.diags.push(Diagnostic { path, kind });
    }

    fn block(
        &mut self,
        stmts: &[Statement],
        path: &AstPath,
        depth: usize,
        bound: &mut BTreeSet<String>,
    ) {
        if depth > MAX_NESTING_DEPTH && !stmts.is_empty() {
            self.push(path.clone(), DiagnosticKind::NestingTooDeep { depth });
            return;
        }
        for (i, s) in stmts.iter().enumerate() {
            self.statement(s, &path.index(i), depth, bound);
        }
    }

    fn name(&mut self, name: &str, path: AstPath) {
        if name.is_empty() {
            self.push(path, DiagnosticKind::EmptyVariableName);
        }
    }

    fn statement(
        &mut self,
        s: &Statement,
        path: &AstPath,
        depth: usize,
        bound: &mut BTreeSet<String>,
    ) {
        self.statements += 1;
        match s {
            Statement::Set { name, value } => {
                self.expr(value, &path.key("value"), bound);
                self.name(name, path.key("name"));
                bound.insert(name.clone());
            }
            Statement::Change { name, by } => {
                self.name(name, path.key("name"));
                if !name.is_empty() && !bound.contains(name) {
                    self.push(
                        path.key("name"),
                        DiagnosticKind::UnboundVariable(name.clone()),
                    );
                }
                self.expr(by, &path.key("by"), bound);
            }
            Statement::Repeat { count, body } => {
                self.expr(count, &path.key("count"), bound);
                let literal = match count {
                    Expression::Literal(Literal::Integer(n)) => Some(*n),
                    _ => None,
                };
                match literal {
                    Some(n) if n > MAX_LITERAL_REPEAT => self.push(
                        path.key("count"),
                        DiagnosticKind::RepeatBoundExceeded { count: n },
                    ),
                    Some(n) if n < 0 => self.push(
                        path.key("count"),
                        DiagnosticKind::NegativeRepeatCount { count: n },
                    ),
                    _ => {}
                }
                let mut inner = bound.clone();
                self.block(body, &path.key("body"), depth + 1, &mut inner);
                if matches!(literal, Some(n) if n > 0) {
                    *bound = inner;
                }
            }
            Statement::IfElse {
                condition,
                then_branch,
                else_branch,
            } => {
                self.expr(condition, &path.key("condition"), bound);
                let mut then_bound = bound.clone();
                self.block(then_branch, &path.key("then"), depth + 1, &mut then_bound);
                let mut else_bound = bound.clone();
                self.block(else_branch, &path.key("else"), depth + 1, &mut else_bound);
                *bound = then_bound.intersection(&else_bound).cloned().collect();
            }
            Statement::Say(e) => self.expr(e, &path.key("value"), bound),
            Statement::SetKeypair {
                owner,
                public,
                private,
            } => {
                self.expr(owner, &path.key("owner"), bound);
                self.name(public, path.key("public"));
                self.name(private, path.key("private"));
                bound.insert(public.clone());
                bound.insert(private.clone());
            }
        }
    }

    fn expr(&mut self, e: &Expression, path: &AstPath, bound: &BTreeSet<String>) {
        match e {
            Expression::Literal(_) => {}
            Expression::Var(name) => {
                if name.is_empty() {
                    self.push(path.clone(), DiagnosticKind::EmptyVariableName);
                } else if !bound.contains(name) {
                    self.push(path.clone(), DiagnosticKind::UnboundVariable(name.clone()));
                }
            }
            Expression::Join(l, r) | Expression::Equals(l, r) => {
                self.expr(l, &path.key("left"), bound);
                self.expr(r, &path.key("right"), bound);
            }
            Expression::Contains { haystack, needle } => {
                self.expr(haystack, &path.key("haystack"), bound);
                self.expr(needle, &path.key("needle"), bound);
            }
            Expression::Crypto { opcode, args } => {
                if opcode.is_statement_only() {
                    self.push(path.clone(), DiagnosticKind::StatementOnlyBlock(*opcode));
                }
                if args.len() != opcode.arity() {
                    self.push(
                        path.key("args"),
                        DiagnosticKind::ArityMismatch {
                            opcode: *opcode,
                            expected: opcode.arity(),
                            found: args.len(),
                        },
                    );
                }
                for (i, a) in args.iter().enumerate() {
                    self.expr(a, &path.key("args").index(i), bound);
                }
            }
        }
    }
}
