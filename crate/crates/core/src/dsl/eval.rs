use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;

use regex::Regex;

use super::ast::Predicate;
use crate::value::{PropertyValue, Value, ValueKind};

const PATTERN_CACHE: usize = 256;

thread_local! {
    static PATTERNS: RefCell<HashMap<String, Regex>> = RefCell::new(HashMap::new());
}

/// Anchored regex for `pattern`, compiled once per thread.
fn compiled(pattern: &str) -> Result<Regex, regex::Error> {
    PATTERNS.with(|cache| {
        if let Some(re) = cache.borrow().get(pattern) {
            return Ok(re.clone());
        }
        let re = Regex::new(&format!("^(?:{pattern})$"))?;
        let mut cache = cache.borrow_mut();
        if cache.len() >= PATTERN_CACHE {
            cache.clear();
        }
        cache.insert(pattern.to_string(), re.clone());
        Ok(re)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("property is not defined")]
    PropertyMissing,
    #[error("type mismatch: predicate expects {expected}, property holds {found}")]
    TypeMismatch { expected: String, found: String },
}

fn mismatch(expected: impl Into<String>, found: &PropertyValue) -> EvalError {
    let found = match found {
        PropertyValue::Scalar(v) => v.kind().to_string(),
        PropertyValue::Set(_) => "a set".to_string(),
    };
    EvalError::TypeMismatch {
        expected: expected.into(),
        found,
    }
}

/// Evaluates a predicate against the value stored at a property path, or
/// against `None` when the path is not defined.
///
/// Only `Exists` accepts a missing property (it is then false); every other
/// predicate reports [`EvalError::PropertyMissing`]. Type mismatches are
/// errors, never `false`.
pub fn eval_predicate(predicate: &Predicate, property: Option<&PropertyValue>) -> Result<bool, EvalError> {
    let Some(property) = property else {
        return match predicate {
            Predicate::Exists => Ok(false),
            _ => Err(EvalError::PropertyMissing),
        };
    };
    match predicate {
        Predicate::Exists => Ok(true),
        Predicate::Equals(expected) => scalar_same_kind(expected, property).map(|v| v == expected),
        Predicate::NotEquals(expected) => scalar_same_kind(expected, property).map(|v| v != expected),
        Predicate::LessThan(bound) => ordered(bound, property).map(|o| o == Ordering::Less),
        Predicate::AtMost(bound) => ordered(bound, property).map(|o| o != Ordering::Greater),
        Predicate::AtLeast(bound) => ordered(bound, property).map(|o| o != Ordering::Less),
        Predicate::IncludesAll(required) => match property {
            PropertyValue::Set(values) => Ok(required.is_subset(values)),
            other => Err(mismatch("a set", other)),
        },
        Predicate::ContainsElement(element) => match property {
            PropertyValue::Set(values) => Ok(values.contains(element)),
            other => Err(mismatch("a set", other)),
        },
        Predicate::Matches(pattern) => match property {
            PropertyValue::Scalar(Value::Text(text)) => {
                let re = compiled(pattern).map_err(|e| EvalError::TypeMismatch {
                    expected: "a valid pattern".into(),
                    found: e.to_string(),
                })?;
                Ok(re.is_match(text))
            }
            other => Err(mismatch("text", other)),
        },
    }
}

fn scalar_same_kind<'a>(expected: &Value, property: &'a PropertyValue) -> Result<&'a Value, EvalError> {
    match property {
        PropertyValue::Scalar(v) if v.kind() == expected.kind() => Ok(v),
        other => Err(mismatch(expected.kind().to_string(), other)),
    }
}

/// Ordering of the property value relative to `bound`.
fn ordered(bound: &Value, property: &PropertyValue) -> Result<Ordering, EvalError> {
    match (bound.kind(), property) {
        (ValueKind::Number | ValueKind::Date, PropertyValue::Scalar(v)) if v.kind() == bound.kind() => {
            Ok(v.cmp(bound))
        }
        (kind, other) => Err(mismatch(kind.to_string(), other)),
    }
}
