//! Property values and the flattened property view of an organization.
//!
//! Requirements address organizations through colon-separated property
//! paths (`organization:profile:localization`). A [`PropertyView`] maps each
//! path to either a single value or a set of values.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// A scalar property value.
///
/// Values of different kinds never compare equal. Numbers compare by
/// `f64::total_cmp`, so `34` and `34.0` are the same value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "camelCase")]
pub enum Value {
    Text(String),
    Number(f64),
    Date(NaiveDate),
    Bool(bool),
}

impl Value {
    pub fn text(s: impl Into<String>) -> Self {
        Value::Text(s.into())
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Text(_) => ValueKind::Text,
            Value::Number(_) => ValueKind::Number,
            Value::Date(_) => ValueKind::Date,
            Value::Bool(_) => ValueKind::Bool,
        }
    }

    /// Converts a JSON scalar. Strings in strict ISO-8601 date form become
    /// dates; arrays, objects and null are rejected.
    pub fn from_json(value: &serde_json::Value) -> Option<Value> {
        match value {
            serde_json::Value::String(s) => Some(match parse_iso_date(s) {
                Some(d) => Value::Date(d),
                None => Value::Text(s.clone()),
            }),
            serde_json::Value::Number(n) => n.as_f64().map(Value::Number),
            serde_json::Value::Bool(b) => Some(Value::Bool(*b)),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Text(_) => 0,
            Value::Number(_) => 1,
            Value::Date(_) => 2,
            Value::Bool(_) => 3,
        }
    }
}

/// Parses `YYYY-MM-DD` exactly (no time component, no lenient forms).
pub fn parse_iso_date(s: &str) -> Option<NaiveDate> {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return None;
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Number(a), Value::Number(b)) => {
                // -0.0 and 0.0 are the same number here.
                if a == b {
                    Ordering::Equal
                } else {
                    a.total_cmp(b)
                }
            }
            (Value::Date(a), Value::Date(b)) => a.cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Text(s) => write!(f, "{s}"),
            Value::Number(n) => write!(f, "{n}"),
            Value::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<f64> for Value {
    fn from(n: f64) -> Self {
        Value::Number(n)
    }
}

impl From<NaiveDate> for Value {
    fn from(d: NaiveDate) -> Self {
        Value::Date(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ValueKind {
    Text,
    Number,
    Date,
    Bool,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Text => "text",
            ValueKind::Number => "number",
            ValueKind::Date => "date",
            ValueKind::Bool => "bool",
        })
    }
}

/// The value stored at one property path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PropertyValue {
    Scalar(Value),
    Set(BTreeSet<Value>),
}

impl PropertyValue {
    pub fn set<I, V>(items: I) -> Self
    where
        I: IntoIterator<Item = V>,
        V: Into<Value>,
    {
        PropertyValue::Set(items.into_iter().map(Into::into).collect())
    }
}

impl From<Value> for PropertyValue {
    fn from(v: Value) -> Self {
        PropertyValue::Scalar(v)
    }
}

/// A flattened set of `(path, value)` pairs describing one organization
/// (or one service, for service requirements).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PropertyView {
    entries: BTreeMap<String, PropertyValue>,
}

impl PropertyView {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, path: impl Into<String>, value: impl Into<PropertyValue>) {
        self.entries.insert(path.into(), value.into());
    }

    /// Adds one element to a set-valued path, creating the set if needed.
    /// A scalar already stored at `path` is promoted to a set.
    pub fn insert_into_set(&mut self, path: impl Into<String>, value: Value) {
        let slot = self
            .entries
            .entry(path.into())
            .or_insert_with(|| PropertyValue::Set(BTreeSet::new()));
        match slot {
            PropertyValue::Set(set) => {
                set.insert(value);
            }
            PropertyValue::Scalar(existing) => {
                let set = BTreeSet::from([existing.clone(), value]);
                *slot = PropertyValue::Set(set);
            }
        }
    }

    /// Ensures a (possibly empty) set is stored at `path`.
    pub fn ensure_set(&mut self, path: impl Into<String>) {
        self.entries
            .entry(path.into())
            .or_insert_with(|| PropertyValue::Set(BTreeSet::new()));
    }

    pub fn get(&self, path: &str) -> Option<&PropertyValue> {
        self.entries.get(path)
    }

    pub fn remove(&mut self, path: &str) -> Option<PropertyValue> {
        self.entries.remove(path)
    }

    pub fn contains(&self, path: &str) -> bool {
        self.entries.contains_key(path)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &PropertyValue)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl<K: Into<String>, V: Into<PropertyValue>> FromIterator<(K, V)> for PropertyView {
    fn from_iter<T: IntoIterator<Item = (K, V)>>(iter: T) -> Self {
        let mut view = PropertyView::new();
        for (k, v) in iter {
            view.insert(k, v);
        }
        view
    }
}
