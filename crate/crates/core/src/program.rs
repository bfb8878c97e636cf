//! The block-language AST.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::blocks::Opcode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    Help,
    Execute,
}

/// The task block's header: `Task Id - [MODE] [RESULT]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskBinding {
    pub task_id: String,
    pub mode: Mode,
    pub result_variable: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Set {
        name: String,
        value: Expression,
    },
    Change {
        name: String,
        by: Expression,
    },
    Repeat {
        count: Expression,
        body: Vec<Statement>,
    },
    IfElse {
        condition: Expression,
        then_branch: Vec<Statement>,
        else_branch: Vec<Statement>,
    },
    Say(Expression),
    /// Binds both halves of a freshly generated RSA keypair.
    SetKeypair {
        owner: Expression,
        public: String,
        private: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Text(String),
    Integer(i64),
    Boolean(bool),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expression {
    Literal(Literal),
    Var(String),
    Join(Box<Expression>, Box<Expression>),
    Equals(Box<Expression>, Box<Expression>),
    Contains {
        haystack: Box<Expression>,
        needle: Box<Expression>,
    },
    Crypto {
        opcode: Opcode,
        args: Vec<Expression>,
    },
}

impl Expression {
    pub fn text(s: impl Into<String>) -> Self {
        Expression::Literal(Literal::Text(s.into()))
    }

    pub fn int(i: i64) -> Self {
        Expression::Literal(Literal::Integer(i))
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expression::Var(name.into())
    }

    pub fn join(left: Expression, right: Expression) -> Self {
        Expression::Join(Box::new(left), Box::new(right))
    }

    pub fn crypto(opcode: Opcode, args: Vec<Expression>) -> Self {
        Expression::Crypto { opcode, args }
    }
}

impl Statement {
    pub fn set(name: impl Into<String>, value: Expression) -> Self {
        Statement::Set {
            name: name.into(),
            value,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Statement::Set { .. } => "set",
            Statement::Change { .. } => "change",
            Statement::Repeat { .. } => "repeat",
            Statement::IfElse { .. } => "if_else",
            Statement::Say(_) => "say",
            Statement::SetKeypair { .. } => "set_keypair",
        }
    }
}

/// A learner's program: an optional task header plus the enclosed blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockProgram {
    task: Option<TaskBinding>,
    body: Vec<Statement>,
    declared_variables: BTreeSet<String>,
}

impl BlockProgram {
    pub fn new(task: Option<TaskBinding>, body: Vec<Statement>) -> Self {
        let mut declared = BTreeSet::new();
        collect_assigned(&body, &mut declared);
        BlockProgram {
            task,
            body,
            declared_variables: declared,
        }
    }

    pub fn task(&self) -> Option<&TaskBinding> {
        self.task.as_ref()
    }

    pub fn body(&self) -> &[Statement] {
        &self.body
    }

    /// Every variable some statement assigns.
    pub fn declared_variables(&self) -> &BTreeSet<String> {
        &self.declared_variables
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        if let Some(t) = self.task.as_mut() {
            t.mode = mode;
        }
        self
    }
}

fn collect_assigned(stmts: &[Statement], out: &mut BTreeSet<String>) {
    for s in stmts {
        match s {
            Statement::Set { name, .. } | Statement::Change { name, .. } => {
                out.insert(name.clone());
            }
            Statement::SetKeypair {
                public, private, ..
            } => {
                out.insert(public.clone());
                out.insert(private.clone());
            }
            Statement::Repeat { body, .. } => collect_assigned(body, out),
            Statement::IfElse {
                then_branch,
                else_branch,
                ..
            } => {
                collect_assigned(then_branch, out);
                collect_assigned(else_branch, out);
            }
            Statement::Say(_) => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathSegment {
    Key(&'static str),
    Index(usize),
}

/// Location of a node in the program document, rendered as a JSON pointer
/// (`/body/2/then/0/value`) so editors can map it back to a block.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AstPath(Vec<PathSegment>);

impl AstPath {
    pub fn root() -> Self {
        AstPath::default()
    }

    pub fn key(&self, k: &'static str) -> Self {
        let mut v = self.0.clone();
        v.push(PathSegment::Key(k));
        AstPath(v)
    }

    pub fn index(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v.push(PathSegment::Index(i));
        AstPath(v)
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.0
    }
}

impl fmt::Display for AstPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for seg in &self.0 {
            match seg {
                PathSegment::Key(k) => write!(f, "/{k}")?,
                PathSegment::Index(i) => write!(f, "/{i}")?,
            }
        }
        Ok(())
    }
}

impl Serialize for AstPath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
