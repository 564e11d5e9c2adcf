use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::value::{Value, ValueKind};

/// Words that cannot be used as a single-segment property path.
pub const RESERVED: &[&str] = &[
    "class", "includes", "contains", "matches", "exists", "AND", "OR", "NOT", "true", "false",
];

/// A colon-separated property path such as `organization:profile:name`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PropertyPath(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid property path `{0}`")]
pub struct InvalidPath(pub String);

impl PropertyPath {
    pub fn parse(text: &str) -> Result<Self, InvalidPath> {
        let segments: Vec<&str> = text.split(':').collect();
        let valid_segment = |s: &&str| {
            let mut chars = s.chars();
            matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
                && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        };
        if text.is_empty()
            || !segments.iter().all(valid_segment)
            || (segments.len() == 1 && RESERVED.contains(&text))
        {
            return Err(InvalidPath(text.to_string()));
        }
        Ok(PropertyPath(text.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.0.split(':')
    }
}

impl TryFrom<String> for PropertyPath {
    type Error = InvalidPath;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        PropertyPath::parse(&value)
    }
}

impl From<PropertyPath> for String {
    fn from(p: PropertyPath) -> Self {
        p.0
    }
}

impl fmt::Display for PropertyPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The expected-value predicate of a requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Predicate {
    Equals(Value),
    NotEquals(Value),
    LessThan(Value),
    AtLeast(Value),
    AtMost(Value),
    /// The property's value set includes every listed element.
    IncludesAll(BTreeSet<Value>),
    ContainsElement(Value),
    /// Anchored regular expression over a text value.
    Matches(String),
    Exists,
}

impl Predicate {
    /// Checks operand typing: order predicates take numbers or dates,
    /// `IncludesAll` a nonempty set, `Matches` a valid pattern.
    pub fn check(&self) -> Result<(), String> {
        match self {
            Predicate::LessThan(v) | Predicate::AtLeast(v) | Predicate::AtMost(v) => {
                match v.kind() {
                    ValueKind::Number | ValueKind::Date => Ok(()),
                    other => Err(format!("order comparison needs a number or date, found {other}")),
                }
            }
            Predicate::IncludesAll(set) if set.is_empty() => {
                Err("`includes` needs a nonempty set".to_string())
            }
            Predicate::Matches(pattern) => regex::Regex::new(&format!("^(?:{pattern})$"))
                .map(|_| ())
                .map_err(|e| format!("invalid pattern: {e}")),
            _ => Ok(()),
        }
    }
}

/// A property path paired with the predicate its value must satisfy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub path: PropertyPath,
    pub predicate: Predicate,
}

impl Requirement {
    pub fn new(path: &str, predicate: Predicate) -> Result<Self, InvalidPath> {
        Ok(Requirement {
            path: PropertyPath::parse(path)?,
            predicate,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Expr {
    Req(Requirement),
    And(Vec<Expr>),
    Or(Vec<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    /// Leaves in definition (left-to-right) order.
    pub fn leaves(&self) -> Vec<&Requirement> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Requirement>) {
        match self {
            Expr::Req(r) => out.push(r),
            Expr::And(children) | Expr::Or(children) => {
                children.iter().for_each(|c| c.collect_leaves(out))
            }
            Expr::Not(child) => child.collect_leaves(out),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Expr::Req(_) => 1,
            Expr::And(children) | Expr::Or(children) => children.iter().map(Expr::leaf_count).sum(),
            Expr::Not(child) => child.leaf_count(),
        }
    }

    pub fn contains_not(&self) -> bool {
        match self {
            Expr::Req(_) => false,
            Expr::And(children) | Expr::Or(children) => children.iter().any(Expr::contains_not),
            Expr::Not(_) => true,
        }
    }

    fn check(&self) -> Result<(), String> {
        match self {
            Expr::Req(r) => r.predicate.check(),
            Expr::And(children) | Expr::Or(children) => {
                if children.len() < 2 {
                    return Err("AND/OR nodes need at least two children".into());
                }
                children.iter().try_for_each(Expr::check)
            }
            Expr::Not(child) => child.check(),
        }
    }
}

/// A named logical expression over competence requirements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrganizationClass {
    pub name: String,
    pub expr: Expr,
}

impl OrganizationClass {
    /// Builds a class whose requirements are combined with AND.
    pub fn conjunction(name: impl Into<String>, mut requirements: Vec<Requirement>) -> Result<Self, String> {
        let expr = match requirements.len() {
            0 => return Err("a class needs at least one requirement".into()),
            1 => Expr::Req(requirements.remove(0)),
            _ => Expr::And(requirements.into_iter().map(Expr::Req).collect()),
        };
        let class = OrganizationClass {
            name: name.into(),
            expr,
        };
        class.validate()?;
        Ok(class)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.expr.check()
    }

    pub fn leaves(&self) -> Vec<&Requirement> {
        self.expr.leaves()
    }
}
