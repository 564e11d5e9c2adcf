use std::fmt::Write;

use super::ast::{Expr, OrganizationClass, Predicate, Requirement};
use crate::value::Value;

/// Canonical text of a class. Top-level conjuncts go on separate lines;
/// compound sub-expressions are always parenthesized.
pub fn print_class(class: &OrganizationClass) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "class {} {{", quote(&class.name));
    match &class.expr {
        Expr::And(items) => {
            for item in items {
                let _ = writeln!(out, "  {}", print_operand(item));
            }
        }
        other => {
            let _ = writeln!(out, "  {}", print_expr(other));
        }
    }
    out.push_str("}\n");
    out
}

pub fn print_classes(classes: &[OrganizationClass]) -> String {
    classes.iter().map(print_class).collect::<Vec<_>>().join("\n")
}

pub fn print_expr(expr: &Expr) -> String {
    match expr {
        Expr::Req(r) => print_requirement(r),
        Expr::And(items) => join(items, " AND "),
        Expr::Or(items) => join(items, " OR "),
        Expr::Not(child) => format!("NOT {}", print_operand(child)),
    }
}

fn join(items: &[Expr], sep: &str) -> String {
    items.iter().map(print_operand).collect::<Vec<_>>().join(sep)
}

fn print_operand(expr: &Expr) -> String {
    match expr {
        Expr::Req(r) => print_requirement(r),
        other => format!("({})", print_expr(other)),
    }
}

pub fn print_requirement(req: &Requirement) -> String {
    let path = req.path.as_str();
    match &req.predicate {
        Predicate::Equals(v) => format!("{path} = {}", print_value(v)),
        Predicate::NotEquals(v) => format!("{path} != {}", print_value(v)),
        Predicate::LessThan(v) => format!("{path} < {}", print_value(v)),
        Predicate::AtMost(v) => format!("{path} <= {}", print_value(v)),
        Predicate::AtLeast(v) => format!("{path} >= {}", print_value(v)),
        Predicate::IncludesAll(set) => format!(
            "{path} includes {{{}}}",
            set.iter().map(print_value).collect::<Vec<_>>().join(", ")
        ),
        Predicate::ContainsElement(v) => format!("{path} contains {}", print_value(v)),
        Predicate::Matches(p) => format!("{path} matches {}", quote(p)),
        Predicate::Exists => format!("{path} exists"),
    }
}

pub fn print_value(value: &Value) -> String {
    match value {
        Value::Text(s) => quote(s),
        Value::Number(n) => format!("{n}"),
        Value::Date(d) => d.format("%Y-%m-%d").to_string(),
        Value::Bool(b) => b.to_string(),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
