use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dsl::{parse_class, parse_requirement, DslError, OrganizationClass, Requirement};
use crate::matching::{WeightError, WeightSpec, WeightedClass};
use crate::social::{SocialError, SocialNetworkSchema};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProcessStep {
    /// Activity name, matched against the activities of candidate
    /// organizations.
    pub activity: String,
    pub role: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoleDocument {
    /// Name of a stored organization class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    /// Inline class source, used instead of `class`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightSpec>,
    /// Requirements over `service:` paths of the service playing the role.
    #[serde(default)]
    pub service_requirements: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SortField {
    CompetenceScore,
    SocialScore,
    TotalCost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SortOrder {
    Asc,
    Desc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortKey {
    pub key: SortField,
    pub order: SortOrder,
}

impl SortKey {
    pub fn defaults() -> Vec<SortKey> {
        vec![
            SortKey {
                key: SortField::CompetenceScore,
                order: SortOrder::Desc,
            },
            SortKey {
                key: SortField::TotalCost,
                order: SortOrder::Asc,
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct Preferences {
    /// Empty means the defaults: competence score descending, then total
    /// cost ascending.
    pub sort_keys: Vec<SortKey>,
    pub min_acceptable_score: f64,
    pub allow_multi_role_org: bool,
    /// Drop variants violating a social requirement instead of sorting them
    /// last.
    pub strict_social: bool,
}

impl Default for Preferences {
    fn default() -> Self {
        Preferences {
            sort_keys: Vec::new(),
            min_acceptable_score: 0.0,
            allow_multi_role_org: true,
            strict_social: false,
        }
    }
}

impl Preferences {
    pub fn effective_sort_keys(&self) -> Vec<SortKey> {
        if self.sort_keys.is_empty() {
            SortKey::defaults()
        } else {
            self.sort_keys.clone()
        }
    }
}

/// A VO specification as written by the planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpecDocument {
    pub id: String,
    pub process_model: Vec<ProcessStep>,
    pub roles: BTreeMap<String, RoleDocument>,
    #[serde(default)]
    pub schema: SocialNetworkSchema,
    #[serde(default)]
    pub preferences: Preferences,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoleSpec {
    pub weighted: WeightedClass,
    pub service_requirements: Vec<Requirement>,
}

/// A validated specification with its classes resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct VOSpecification {
    document: SpecDocument,
    roles: BTreeMap<String, RoleSpec>,
}

impl VOSpecification {
    pub fn id(&self) -> &str {
        &self.document.id
    }

    pub fn document(&self) -> &SpecDocument {
        &self.document
    }

    pub fn process_model(&self) -> &[ProcessStep] {
        &self.document.process_model
    }

    pub fn roles(&self) -> &BTreeMap<String, RoleSpec> {
        &self.roles
    }

    pub fn role(&self, name: &str) -> Option<&RoleSpec> {
        self.roles.get(name)
    }

    pub fn schema(&self) -> &SocialNetworkSchema {
        &self.document.schema
    }

    pub fn preferences(&self) -> &Preferences {
        &self.document.preferences
    }

    /// Activities performed by `role`, in process order.
    pub fn activities_of(&self, role: &str) -> Vec<&str> {
        self.document
            .process_model
            .iter()
            .filter(|s| s.role == role)
            .map(|s| s.activity.as_str())
            .collect()
    }

    /// Same specification with other preferences.
    pub fn with_preferences(&self, preferences: Preferences) -> Result<Self, SpecError> {
        check_preferences(&preferences)?;
        let mut next = self.clone();
        next.document.preferences = preferences;
        Ok(next)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecError {
    #[error("invalid specification document: {0}")]
    Decode(String),
    #[error("specification id is empty")]
    EmptyId,
    #[error("process model is empty")]
    EmptyProcessModel,
    #[error("activity `{activity}` names undeclared role `{role}`")]
    UndeclaredRole { activity: String, role: String },
    #[error("role `{0}` must give exactly one of `class` and `classText`")]
    ClassSource(String),
    #[error("role `{role}` references unknown class `{class}`")]
    UnknownClass { role: String, class: String },
    #[error("role `{role}`: {error}")]
    Dsl { role: String, error: DslError },
    #[error("role `{role}`: {error}")]
    Weights { role: String, error: WeightError },
    #[error("schema role `{0}` is not declared")]
    UndeclaredSchemaRole(String),
    #[error(transparent)]
    Schema(#[from] SocialError),
    #[error("minAcceptableScore {0} outside [0, 1]")]
    MinScore(f64),
}

impl SpecDocument {
    pub fn from_json_str(text: &str) -> Result<Self, SpecError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| SpecError::Decode(e.to_string()))
    }
}

fn check_preferences(p: &Preferences) -> Result<(), SpecError> {
    if !(0.0..=1.0).contains(&p.min_acceptable_score) {
        return Err(SpecError::MinScore(p.min_acceptable_score));
    }
    Ok(())
}

/// Validates a specification document, resolving class names through
/// `classes`. Empty schema roles default to the declared roles.
pub fn define_spec<F>(mut document: SpecDocument, classes: F) -> Result<VOSpecification, SpecError>
where
    F: Fn(&str) -> Option<OrganizationClass>,
{
    if document.id.trim().is_empty() {
        return Err(SpecError::EmptyId);
    }
    if document.process_model.is_empty() {
        return Err(SpecError::EmptyProcessModel);
    }
    if let Some(step) = document
        .process_model
        .iter()
        .find(|s| !document.roles.contains_key(&s.role))
    {
        return Err(SpecError::UndeclaredRole {
            activity: step.activity.clone(),
            role: step.role.clone(),
        });
    }
    check_preferences(&document.preferences)?;

    let mut roles = BTreeMap::new();
    for (name, role) in &document.roles {
        let class = match (&role.class, &role.class_text) {
            (Some(class), None) => classes(class).ok_or_else(|| SpecError::UnknownClass {
                role: name.clone(),
                class: class.clone(),
            })?,
            (None, Some(text)) => parse_class(text).map_err(|error| SpecError::Dsl {
                role: name.clone(),
                error,
            })?,
            _ => return Err(SpecError::ClassSource(name.clone())),
        };
        let weighted = WeightedClass::from_spec(class, role.weights.as_ref()).map_err(|error| {
            SpecError::Weights {
                role: name.clone(),
                error,
            }
        })?;
        let service_requirements = role
            .service_requirements
            .iter()
            .map(|text| parse_requirement(text))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|error| SpecError::Dsl {
                role: name.clone(),
                error,
            })?;
        roles.insert(
            name.clone(),
            RoleSpec {
                weighted,
                service_requirements,
            },
        );
    }

    let schema = &mut document.schema;
    if schema.roles.is_empty() {
        schema.roles = document.roles.keys().cloned().collect::<BTreeSet<_>>();
    }
    if let Some(role) = schema.roles.iter().find(|r| !document.roles.contains_key(*r)) {
        return Err(SpecError::UndeclaredSchemaRole(role.clone()));
    }
    schema.validate()?;
    Ok(VOSpecification { document, roles })
}
