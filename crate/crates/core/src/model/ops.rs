use std::collections::BTreeSet;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::{
    CapabilityContext, CapabilityVariant, OrganizationRecord, Versioned,
};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VersionedId {
    pub id: String,
    pub version: u32,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown {kind} `{id}`")]
    Unresolved { kind: &'static str, id: String },
    #[error("capability `{capability}` has no variant for the query and no default variant")]
    NoVariant { capability: String },
    #[error("`{0}` names more than one versionable entity")]
    AmbiguousEntity(String),
    #[error("invalid change: {0}")]
    InvalidChange(String),
}

/// Capability ids reachable from `comp_id` through sub-competences.
pub fn competence_closure(
    comp_id: &str,
    record: &OrganizationRecord,
) -> Result<BTreeSet<String>, ModelError> {
    let root = record.competence(comp_id).ok_or_else(|| ModelError::Unresolved {
        kind: "competence",
        id: comp_id.to_string(),
    })?;
    let mut capabilities = BTreeSet::new();
    let mut seen = BTreeSet::from([root.id.as_str()]);
    let mut pending = vec![root];
    while let Some(comp) = pending.pop() {
        capabilities.extend(comp.capability_refs.iter().cloned());
        for sub in &comp.sub_competence_refs {
            if seen.insert(sub.as_str()) {
                let next = record.competence(sub).ok_or_else(|| ModelError::Unresolved {
                    kind: "competence",
                    id: sub.clone(),
                })?;
                pending.push(next);
            }
        }
    }
    Ok(capabilities)
}

/// Picks the variant of `cap_id` best fitting `query`.
///
/// Candidates are the current variants whose context is a subset of the
/// query; the default (empty) context always qualifies. The largest context
/// wins, then the highest version, then the smallest variant id.
pub fn select_variant<'r>(
    cap_id: &str,
    query: &CapabilityContext,
    record: &'r OrganizationRecord,
) -> Result<&'r CapabilityVariant, ModelError> {
    let cap = record.capability(cap_id).ok_or_else(|| ModelError::Unresolved {
        kind: "capability",
        id: cap_id.to_string(),
    })?;
    cap.current_variants()
        .into_iter()
        .filter(|v| v.context.is_subset(query))
        .max_by(|a, b| {
            a.context
                .len()
                .cmp(&b.context.len())
                .then(a.version.cmp(&b.version))
                .then_with(|| b.id.cmp(&a.id))
        })
        .ok_or_else(|| ModelError::NoVariant {
            capability: cap_id.to_string(),
        })
}

enum Target {
    Competence,
    Capability,
    Variant { capability_index: usize },
}

/// Appends a new version of a competence, capability or capability variant.
///
/// `changes` is a JSON object whose fields overwrite those of the current
/// version (camelCase names, as in the record document). Earlier versions
/// stay in the record unchanged. Versions are per entity: revising a
/// variant leaves its capability's version alone.
pub fn new_version(
    record: &mut OrganizationRecord,
    entity_id: &str,
    changes: &serde_json::Map<String, serde_json::Value>,
) -> Result<VersionedId, ModelError> {
    for key in ["id", "version"] {
        if changes.contains_key(key) {
            return Err(ModelError::InvalidChange(format!("`{key}` cannot be changed")));
        }
    }

    let mut targets = Vec::new();
    if record.competence(entity_id).is_some() {
        targets.push(Target::Competence);
    }
    if record.capability(entity_id).is_some() {
        targets.push(Target::Capability);
    }
    if let Some((cap, _)) = record.variant(entity_id) {
        let (cap_id, cap_version) = (cap.id.clone(), cap.version);
        let capability_index = record
            .capabilities
            .iter()
            .position(|c| c.id == cap_id && c.version == cap_version)
            .expect("current capability is stored");
        targets.push(Target::Variant { capability_index });
    }
    let target = match targets.len() {
        0 => {
            return Err(ModelError::Unresolved {
                kind: "versionable entity",
                id: entity_id.to_string(),
            })
        }
        1 => targets.pop().unwrap(),
        _ => return Err(ModelError::AmbiguousEntity(entity_id.to_string())),
    };

    match target {
        Target::Competence => append_revision(&mut record.competences, entity_id, changes),
        Target::Capability => {
            if changes.contains_key("variants") {
                return Err(ModelError::InvalidChange(
                    "variants are revised through their own ids".into(),
                ));
            }
            append_revision(&mut record.capabilities, entity_id, changes)
        }
        Target::Variant { capability_index } => append_revision(
            &mut record.capabilities[capability_index].variants,
            entity_id,
            changes,
        ),
    }
}

fn append_revision<T>(
    items: &mut Vec<T>,
    id: &str,
    changes: &serde_json::Map<String, serde_json::Value>,
) -> Result<VersionedId, ModelError>
where
    T: Versioned + Serialize + DeserializeOwned,
{
    let current = super::find_latest(items, id).expect("entity resolved by caller");
    let version = items
        .iter()
        .filter(|item| item.id() == id)
        .map(|item| item.version())
        .max()
        .unwrap_or(0)
        + 1;
    let mut doc = serde_json::to_value(current).map_err(|e| ModelError::InvalidChange(e.to_string()))?;
    let fields = doc.as_object_mut().expect("entities serialize as objects");
    for (key, value) in changes {
        fields.insert(key.clone(), value.clone());
    }
    fields.insert("version".into(), version.into());
    let revised: T =
        serde_json::from_value(doc).map_err(|e| ModelError::InvalidChange(e.to_string()))?;
    items.push(revised);
    Ok(VersionedId {
        id: id.to_string(),
        version,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::ContextTriple;
    use serde_json::json;

    fn holidays() -> CapabilityContext {
        CapabilityContext::new([ContextTriple::new("season", "is", "holidays")])
    }

    fn names(record: &OrganizationRecord, ids: &BTreeSet<String>) -> BTreeSet<String> {
        ids.iter()
            .map(|id| record.capability(id).unwrap().name.clone())
            .collect()
    }

    #[test]
    fn closure_of_system_development() {
        let record = fixtures::software_company();
        let closure = competence_closure("system-development", &record).unwrap();
        let expected: BTreeSet<String> = [
            "information system modelling",
            "software requirements gathering",
            "Java programming",
            "software testing",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(names(&record, &closure), expected);
    }

    #[test]
    fn closure_without_sub_competences() {
        let record = fixtures::software_company();
        let comp = record.competence("software-requirements-engineering").unwrap();
        let closure = competence_closure(&comp.id, &record).unwrap();
        assert_eq!(closure, comp.capability_refs);
    }

    #[test]
    fn closure_unknown_competence() {
        let record = fixtures::software_company();
        assert!(matches!(
            competence_closure("nope", &record),
            Err(ModelError::Unresolved { .. })
        ));
    }

    #[test]
    fn holiday_context_selects_holiday_variant() {
        let record = fixtures::holiday_contractor();
        let variant = select_variant("cap-system-development", &holidays(), &record).unwrap();
        assert_eq!(variant.id, "sd-holidays");
        let default = select_variant("cap-system-development", &CapabilityContext::default(), &record).unwrap();
        assert_eq!(default.id, "sd-default");
        assert!(variant.cost.amount > default.cost.amount);
        assert!(variant.duration().unwrap() > default.duration().unwrap());
    }

    #[test]
    fn unmatched_query_falls_back_to_default() {
        let record = fixtures::holiday_contractor();
        let query = CapabilityContext::new([ContextTriple::new("weather", "is", "rain")]);
        let variant = select_variant("cap-system-development", &query, &record).unwrap();
        assert_eq!(variant.id, "sd-default");
    }

    #[test]
    fn no_default_and_no_match() {
        let mut record = fixtures::holiday_contractor();
        record.capabilities[0].variants.retain(|v| !v.context.is_default());
        let err = select_variant("cap-system-development", &CapabilityContext::default(), &record).unwrap_err();
        assert!(matches!(err, ModelError::NoVariant { .. }));
    }

    #[test]
    fn ties_prefer_version_then_smallest_id() {
        let mut record = fixtures::holiday_contractor();
        let cap = &mut record.capabilities[0];
        let mut rival = cap.variants[1].clone();
        rival.id = "sd-aaa".into();
        rival.context = CapabilityContext::new([ContextTriple::new("day", "is", "sunday")]);
        cap.variants.push(rival);
        let query = CapabilityContext::new([
            ContextTriple::new("season", "is", "holidays"),
            ContextTriple::new("day", "is", "sunday"),
        ]);
        // Same size, same version: smaller id wins.
        assert_eq!(select_variant("cap-system-development", &query, &record).unwrap().id, "sd-aaa");
        new_version(&mut record, "sd-holidays", &json!({"cost": {"amount": 140.0, "currency": "EUR"}}).as_object().unwrap().clone()).unwrap();
        assert_eq!(select_variant("cap-system-development", &query, &record).unwrap().id, "sd-holidays");
    }

    #[test]
    fn versions_append() {
        let mut record = fixtures::software_company();
        let changes = json!({"name": "systems development"});
        let changes = changes.as_object().unwrap();
        for expected in 2..=4 {
            let id = new_version(&mut record, "system-development", changes).unwrap();
            assert_eq!(id.version, expected);
        }
        let history = record.version_history("system-development");
        assert_eq!(history.iter().map(|v| v.version).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert!(record.competences.iter().any(|c| c.id == "system-development" && c.version == 3));
        assert_eq!(record.competence("system-development").unwrap().version, 4);
    }

    #[test]
    fn variant_revision_leaves_capability_version() {
        let mut record = fixtures::holiday_contractor();
        let changes = json!({"properties": {"duration": 15.0}});
        let id = new_version(&mut record, "sd-holidays", changes.as_object().unwrap()).unwrap();
        assert_eq!(id.version, 2);
        assert_eq!(record.capability("cap-system-development").unwrap().version, 1);
        let (_, v) = record.variant("sd-holidays").unwrap();
        assert_eq!(v.duration(), Some(15.0));
    }

    #[test]
    fn unknown_entity_and_forbidden_fields() {
        let mut record = fixtures::software_company();
        let empty = serde_json::Map::new();
        assert!(matches!(
            new_version(&mut record, "nope", &empty),
            Err(ModelError::Unresolved { .. })
        ));
        let changes = json!({"version": 9});
        assert!(matches!(
            new_version(&mut record, "system-development", changes.as_object().unwrap()),
            Err(ModelError::InvalidChange(_))
        ));
    }
}
