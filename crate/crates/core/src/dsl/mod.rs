//! Requirement language for organization classes (`.ocls` files).
//!
//! ```text
//! # comment
//! class "Polish Software Company" {
//!   organization:profile:localization = "Poland"
//!   competence:name includes {"Java programming"}
//!   capability:name includes {"Server administration"}
//! }
//! ```
//!
//! Requirements are `<path> <op> <operand>` with the operators `=`, `!=`,
//! `<`, `<=`, `>=`, `includes`, `contains`, `matches` and `exists`.
//! Juxtaposed expressions inside the braces are combined with AND; explicit
//! `AND`, `OR`, `NOT` and parentheses build other trees (`NOT` binds
//! tightest, then `AND`, then `OR`). Strings are double-quoted, dates are
//! ISO-8601 (`2009-11-01`), sets are written `{"a", "b"}`.

mod ast;
mod eval;
mod lexer;
mod parser;
mod printer;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ast::{Expr, InvalidPath, OrganizationClass, Predicate, PropertyPath, Requirement, RESERVED};
pub use eval::{eval_predicate, EvalError};
pub use parser::{parse_class, parse_classes, parse_expr, parse_requirement};
pub use printer::{print_class, print_classes, print_expr, print_requirement, print_value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ErrorKind {
    Lexical,
    Syntax,
    Type,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Lexical => "lexical error",
            ErrorKind::Syntax => "syntax error",
            ErrorKind::Type => "type error",
        })
    }
}

/// A parse failure with its 1-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind} at line {line}, column {column}: {message}")]
pub struct DslError {
    pub kind: ErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}
