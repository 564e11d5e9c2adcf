//! Competence description model.
//!
//! An [`OrganizationRecord`] bundles an organization profile with its
//! competence profile (competences, capabilities and their contextual
//! variants, conspicuities) and its service profiles. Competences,
//! capabilities and capability variants are versioned independently: a record
//! may hold several versions of the same id, and the highest one is current.

mod ops;
mod validate;
mod view;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use ops::{competence_closure, new_version, select_variant, ModelError, VersionedId};
pub use validate::{validate_record, validate_record_as_of, Rule, ValidationReport, Violation};
pub use view::{flatten_properties, service_view};

/// Identifier of a registered organization.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrgId(String);

impl OrgId {
    pub fn new(id: impl Into<String>) -> Self {
        OrgId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for OrgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for OrgId {
    fn from(s: &str) -> Self {
        OrgId(s.to_string())
    }
}

impl From<String> for OrgId {
    fn from(s: String) -> Self {
        OrgId(s)
    }
}

impl std::borrow::Borrow<str> for OrgId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

/// A monetary amount. No currency conversion is ever performed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Money {
    pub amount: f64,
    pub currency: String,
}

impl Money {
    pub fn new(amount: f64, currency: impl Into<String>) -> Self {
        Money {
            amount,
            currency: currency.into(),
        }
    }
}

/// The monetary value of the expenditures of a capability variant.
pub type Cost = Money;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OrganizationProfile {
    pub id: OrgId,
    #[serde(default = "one")]
    pub version: u32,
    pub name: String,
    pub localization: String,
    #[serde(with = "lenient_date")]
    pub creation_date: NaiveDate,
    pub number_of_employees: u64,
    #[serde(default)]
    pub memberships: BTreeSet<String>,
    #[serde(default)]
    pub contact: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub financial_capital: Option<Money>,
    #[serde(default)]
    pub board: Vec<String>,
    /// Additional `(path, value)` pairs, emitted under `organization:profile:`.
    #[serde(default)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Competence {
    pub id: String,
    #[serde(default = "one")]
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub capability_refs: BTreeSet<String>,
    #[serde(default)]
    pub sub_competence_refs: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub externalizing_service_ref: Option<String>,
    #[serde(default)]
    pub conspicuity_refs: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Capability {
    pub id: String,
    #[serde(default = "one")]
    pub version: u32,
    pub name: String,
    pub activity_ref: String,
    pub variants: Vec<CapabilityVariant>,
    #[serde(default)]
    pub conspicuity_refs: BTreeSet<String>,
}

impl Capability {
    /// Current version of every variant of this capability, in id order.
    pub fn current_variants(&self) -> Vec<&CapabilityVariant> {
        latest(&self.variants)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CapabilityVariant {
    pub id: String,
    #[serde(default = "one")]
    pub version: u32,
    #[serde(default)]
    pub context: CapabilityContext,
    pub cost: Cost,
    #[serde(default)]
    pub capacities: Vec<Capacity>,
    /// Open properties such as `duration` (a number of days).
    #[serde(default)]
    pub properties: BTreeMap<String, serde_json::Value>,
}

impl CapabilityVariant {
    pub fn duration(&self) -> Option<f64> {
        self.properties.get("duration").and_then(|v| v.as_f64())
    }
}

/// One `<object, predicate, subject>` statement describing circumstances.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContextTriple {
    pub object: String,
    pub predicate: String,
    pub subject: String,
}

impl ContextTriple {
    pub fn new(
        object: impl Into<String>,
        predicate: impl Into<String>,
        subject: impl Into<String>,
    ) -> Self {
        ContextTriple {
            object: object.into(),
            predicate: predicate.into(),
            subject: subject.into(),
        }
    }
}

/// The circumstances under which a capability variant applies. The empty
/// set is the default (unconditional) context.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CapabilityContext {
    pub triples: BTreeSet<ContextTriple>,
}

impl CapabilityContext {
    pub fn new<I: IntoIterator<Item = ContextTriple>>(triples: I) -> Self {
        CapabilityContext {
            triples: triples.into_iter().collect(),
        }
    }

    pub fn is_default(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn is_subset(&self, other: &CapabilityContext) -> bool {
        self.triples.is_subset(&other.triples)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Capacity {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_ref: Option<String>,
    pub amount: f64,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Activity {
    pub id: String,
    #[serde(default = "one")]
    pub version: u32,
    pub name: String,
    pub product_ref: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Product {
    pub id: String,
    #[serde(default = "one")]
    pub version: u32,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Resource {
    pub id: String,
    #[serde(default = "one")]
    pub version: u32,
    pub name: String,
    #[serde(default)]
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ServiceProfile {
    pub id: String,
    #[serde(default = "one")]
    pub version: u32,
    pub owner_org_id: OrgId,
    pub name: String,
    pub competence_ref: String,
    /// Nonempty for compound services.
    #[serde(default)]
    pub component_service_refs: BTreeSet<String>,
    /// Strategic goals, formal requirements and similar `(path, value)` pairs.
    #[serde(default)]
    pub business_info: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConspicuityKind {
    Certificate,
    Diploma,
    ReferenceLetter,
    Report,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClaimValue {
    Number(f64),
    Text(String),
}

impl ClaimValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ClaimValue::Number(n) => Some(*n),
            ClaimValue::Text(_) => None,
        }
    }
}

/// A structured statement carried by a conspicuity, e.g.
/// `collaborationCount = 10`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Claim {
    pub claim_kind: String,
    pub claim_value: ClaimValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TargetKind {
    Service,
    Organization,
    Competence,
    Capability,
    /// The cost of the capability variant named by `id`.
    Cost,
    /// Capacity number `index` of the capability variant named by `id`.
    Capacity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TargetRef {
    pub kind: TargetKind,
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Conspicuity {
    pub id: String,
    #[serde(default = "one")]
    pub version: u32,
    pub kind: ConspicuityKind,
    pub document_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub claim: Option<Claim>,
    pub target_ref: TargetRef,
}

/// Organization profile, competence profile and service profiles of one
/// organization. This is also the JSON interchange document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OrganizationRecord {
    pub organization_profile: OrganizationProfile,
    #[serde(default)]
    pub competences: Vec<Competence>,
    #[serde(default)]
    pub capabilities: Vec<Capability>,
    #[serde(default)]
    pub activities: Vec<Activity>,
    #[serde(default)]
    pub products: Vec<Product>,
    #[serde(default)]
    pub resources: Vec<Resource>,
    #[serde(default)]
    pub services: Vec<ServiceProfile>,
    #[serde(default)]
    pub conspicuities: Vec<Conspicuity>,
}

/// Error raised when a record document cannot be decoded. The message names
/// the JSON path of the offending value.
#[derive(Debug, thiserror::Error)]
#[error("{path}: {message}")]
pub struct DecodeError {
    pub path: String,
    pub message: String,
}

impl OrganizationRecord {
    pub fn from_json_str(text: &str) -> Result<Self, DecodeError> {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|err| {
            let path = err.path().to_string();
            DecodeError {
                path,
                message: err.into_inner().to_string(),
            }
        })
    }

    pub fn org_id(&self) -> &OrgId {
        &self.organization_profile.id
    }

    pub fn current_competences(&self) -> Vec<&Competence> {
        latest(&self.competences)
    }

    pub fn current_capabilities(&self) -> Vec<&Capability> {
        latest(&self.capabilities)
    }

    pub fn current_services(&self) -> Vec<&ServiceProfile> {
        latest(&self.services)
    }

    pub fn current_activities(&self) -> Vec<&Activity> {
        latest(&self.activities)
    }

    pub fn current_conspicuities(&self) -> Vec<&Conspicuity> {
        latest(&self.conspicuities)
    }

    pub fn competence(&self, id: &str) -> Option<&Competence> {
        find_latest(&self.competences, id)
    }

    pub fn capability(&self, id: &str) -> Option<&Capability> {
        find_latest(&self.capabilities, id)
    }

    pub fn service(&self, id: &str) -> Option<&ServiceProfile> {
        find_latest(&self.services, id)
    }

    pub fn activity(&self, id: &str) -> Option<&Activity> {
        find_latest(&self.activities, id)
    }

    pub fn product(&self, id: &str) -> Option<&Product> {
        find_latest(&self.products, id)
    }

    pub fn resource(&self, id: &str) -> Option<&Resource> {
        find_latest(&self.resources, id)
    }

    pub fn conspicuity(&self, id: &str) -> Option<&Conspicuity> {
        find_latest(&self.conspicuities, id)
    }

    /// Current version of the variant `id` together with its capability.
    pub fn variant(&self, id: &str) -> Option<(&Capability, &CapabilityVariant)> {
        self.current_capabilities().into_iter().find_map(|cap| {
            find_latest(&cap.variants, id).map(|variant| (cap, variant))
        })
    }

    /// Current capability performing the activity named `activity_name`.
    pub fn capability_for_activity(&self, activity_name: &str) -> Option<&Capability> {
        self.current_capabilities().into_iter().find(|cap| {
            self.activity(&cap.activity_ref)
                .is_some_and(|act| act.name == activity_name)
        })
    }

    /// All stored versions of an entity (competence, capability or variant),
    /// oldest first.
    pub fn version_history(&self, id: &str) -> Vec<VersionedId> {
        let mut versions: BTreeSet<u32> = BTreeSet::new();
        versions.extend(self.competences.iter().filter(|c| c.id == id).map(|c| c.version));
        versions.extend(self.capabilities.iter().filter(|c| c.id == id).map(|c| c.version));
        if let Some(cap) = self.current_capabilities().into_iter().find(|cap| cap.variants.iter().any(|v| v.id == id)) {
            versions.extend(cap.variants.iter().filter(|v| v.id == id).map(|v| v.version));
        }
        versions
            .into_iter()
            .map(|version| VersionedId {
                id: id.to_string(),
                version,
            })
            .collect()
    }
}

/// Entities that carry an id and a version number.
pub trait Versioned {
    fn id(&self) -> &str;
    fn version(&self) -> u32;
}

macro_rules! impl_versioned {
    ($($ty:ty),*) => {
        $(impl Versioned for $ty {
            fn id(&self) -> &str {
                &self.id
            }
            fn version(&self) -> u32 {
                self.version
            }
        })*
    };
}

impl_versioned!(
    Competence,
    Capability,
    CapabilityVariant,
    Activity,
    Product,
    Resource,
    ServiceProfile,
    Conspicuity
);

/// Highest version of every distinct id, ordered by id.
pub fn latest<T: Versioned>(items: &[T]) -> Vec<&T> {
    let mut best: BTreeMap<&str, &T> = BTreeMap::new();
    for item in items {
        best.entry(item.id())
            .and_modify(|cur| {
                if item.version() > cur.version() {
                    *cur = item;
                }
            })
            .or_insert(item);
    }
    best.into_values().collect()
}

pub fn find_latest<'a, T: Versioned>(items: &'a [T], id: &str) -> Option<&'a T> {
    items
        .iter()
        .filter(|item| item.id() == id)
        .max_by_key(|item| item.version())
}

fn one() -> u32 {
    1
}

/// Accepts ISO-8601 dates as well as the `Nov, 1st, 2009` form; always
/// writes ISO-8601.
mod lenient_date {
    use chrono::NaiveDate;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(date: &NaiveDate, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&date.format("%Y-%m-%d").to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDate, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).ok_or_else(|| serde::de::Error::custom(format!("invalid date `{text}`")))
    }

    pub fn parse(text: &str) -> Option<NaiveDate> {
        if let Ok(date) = NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d") {
            return Some(date);
        }
        // "Nov, 1st, 2009": drop the ordinal suffix on the day.
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return None;
        }
        let day = parts[1].trim_end_matches(|c: char| c.is_ascii_alphabetic());
        let normalized = format!("{} {} {}", parts[0], day, parts[2]);
        NaiveDate::parse_from_str(&normalized, "%b %d %Y").ok()
    }

}
