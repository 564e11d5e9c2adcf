//! Operations of the registry: everything the HTTP API and the CLI do goes
//! through [`Service`].

use std::path::Path;
use std::sync::{Arc, Mutex};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;
use vobe_core::dsl::{parse_classes, print_class, OrganizationClass};
use vobe_core::mapss::{
    define_spec, generate_variants, select_candidates, CandidateOptions, Candidates, MapssError, Preferences,
    RoleAssignment, SpecDocument, SpecError, VOSpecification, Variant, VoRecord,
};
use vobe_core::matching::{rank, RankedOrg, WeightSpec, WeightedClass};
use vobe_core::model::{
    flatten_properties, validate_record, CapabilityContext, ContextTriple, OrgId, OrganizationRecord, Violation,
};
use vobe_core::social::{verify_claims, SocialError, SocialNetwork, VerificationReport};

use crate::config::Config;
use crate::events::{self, EventBus};
use crate::store::{Op, Store, StoreError, StoreSnapshot};

/// One reason a document was rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub message: String,
}

impl Problem {
    pub fn message(message: impl Into<String>) -> Self {
        Problem {
            rule: None,
            path: None,
            message: message.into(),
        }
    }
}

impl From<&Violation> for Problem {
    fn from(v: &Violation) -> Self {
        Problem {
            rule: Some(v.rule.name().to_string()),
            path: Some(v.path.clone()),
            message: format!("{}: {}", v.entity, v.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("{message}")]
    Invalid { message: String, problems: Vec<Problem> },
    #[error("unknown {kind} `{id}`")]
    NotFound { kind: &'static str, id: String },
    #[error("`{id}` is at version {actual}, not {expected}")]
    Conflict { id: String, expected: u32, actual: u32 },
    #[error("{count} assignments exceed the cap of {cap}; tighten the role requirements")]
    CapExceeded { count: u128, cap: u64 },
    #[error(transparent)]
    Storage(#[from] StoreError),
}

impl RegistryError {
    pub fn invalid(message: impl Into<String>) -> Self {
        let message = message.into();
        RegistryError::Invalid {
            problems: vec![Problem::message(message.clone())],
            message,
        }
    }

    fn not_found(kind: &'static str, id: impl Into<String>) -> Self {
        RegistryError::NotFound { kind, id: id.into() }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            RegistryError::Invalid { .. } | RegistryError::NotFound { .. } | RegistryError::Conflict { .. } => 1,
            RegistryError::Storage(_) => 2,
            RegistryError::CapExceeded { .. } => 3,
        }
    }
}

impl From<MapssError> for RegistryError {
    fn from(e: MapssError) -> Self {
        match e {
            MapssError::CapExceeded { count, cap } => RegistryError::CapExceeded { count, cap },
            MapssError::UnknownOrganization(id) => RegistryError::not_found("organization", id.as_str()),
            other => RegistryError::invalid(other.to_string()),
        }
    }
}

impl From<SpecError> for RegistryError {
    fn from(e: SpecError) -> Self {
        RegistryError::invalid(e.to_string())
    }
}

impl From<SocialError> for RegistryError {
    fn from(e: SocialError) -> Self {
        RegistryError::invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DocumentKind {
    Record,
    Classfile,
    Network,
    Spec,
}

impl DocumentKind {
    /// Guesses the kind from a file name and its contents.
    pub fn detect(file_name: &str, text: &str) -> Option<DocumentKind> {
        if file_name.ends_with(".ocls") {
            return Some(DocumentKind::Classfile);
        }
        let value: serde_json::Value = serde_json::from_str(text).ok()?;
        let object = value.as_object()?;
        if object.contains_key("organizationProfile") {
            Some(DocumentKind::Record)
        } else if object.contains_key("processModel") {
            Some(DocumentKind::Spec)
        } else if object.contains_key("nodes") || object.contains_key("edges") {
            Some(DocumentKind::Network)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Stored {
    pub kind: DocumentKind,
    pub id: String,
    /// Set for records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    /// False when an identical document was already current.
    pub changed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SearchRequest {
    /// Name of a stored class.
    pub class: Option<String>,
    /// Inline class text.
    pub class_text: Option<String>,
    pub weights: Option<WeightSpec>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct PlanRequest {
    pub context: Vec<ContextTriple>,
    /// Replaces the specification's preferences.
    pub preferences: Option<Preferences>,
    pub verify: bool,
    pub exclude_discrepant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Plan {
    pub spec_id: String,
    pub candidates: Candidates,
    pub variants: Vec<Variant>,
}

/// The variant to incept: either a variant as returned by planning (only its
/// assignment is used) or an index into a fresh plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InceptRequest {
    Variant { variant: ChosenVariant },
    Index {
        index: usize,
        #[serde(flatten)]
        plan: PlanRequest,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChosenVariant {
    pub assignment: std::collections::BTreeMap<String, RoleAssignment>,
}

pub struct Service {
    store: Store,
    events: EventBus,
    config: Config,
    commit: Mutex<()>,
}

impl Service {
    pub fn open(dir: impl AsRef<Path>, config: Config) -> Result<Arc<Service>, RegistryError> {
        Ok(Arc::new(Service {
            store: Store::open(dir)?,
            events: EventBus::new(),
            config,
            commit: Mutex::new(()),
        }))
    }

    pub fn events(&self) -> &EventBus {
        &self.events
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn snapshot(&self) -> Arc<StoreSnapshot> {
        self.store.snapshot()
    }

    /// Commits the operation chosen by `decide` and publishes the event it
    /// names. Commit and publication happen under one lock so that event
    /// order matches commit order.
    fn commit<T>(
        &self,
        decide: impl FnOnce(&StoreSnapshot) -> Result<(Option<Op>, T), RegistryError>,
        event: impl FnOnce(&T) -> Option<(&'static str, serde_json::Value)>,
    ) -> Result<T, RegistryError> {
        let _guard = self.commit.lock().expect("commit lock");
        let out = self.store.write(decide)?;
        if let Some((topic, payload)) = event(&out) {
            self.events.publish(topic, payload);
        }
        Ok(out)
    }

    pub fn ingest_text(&self, kind: DocumentKind, text: &str) -> Result<Vec<Stored>, RegistryError> {
        match kind {
            DocumentKind::Record => {
                let record = OrganizationRecord::from_json_str(text).map_err(|e| RegistryError::Invalid {
                    message: format!("cannot decode record: {e}"),
                    problems: vec![Problem {
                        rule: None,
                        path: Some(e.path.clone()),
                        message: e.message.clone(),
                    }],
                })?;
                Ok(vec![self.put_record(record, None)?])
            }
            DocumentKind::Classfile => self.put_classes(text, None),
            DocumentKind::Network => {
                let network = SocialNetwork::from_json_str(text)?;
                Ok(vec![self.put_network(network)?])
            }
            DocumentKind::Spec => Ok(vec![self.put_spec(SpecDocument::from_json_str(text)?)?]),
        }
    }

    /// Stores a new version of a record. `expected_version` (0 for a new
    /// organization) guards against concurrent edits.
    pub fn put_record(&self, mut record: OrganizationRecord, expected_version: Option<u32>) -> Result<Stored, RegistryError> {
        let report = validate_record(&record);
        if !report.is_valid() {
            return Err(RegistryError::Invalid {
                message: format!("record `{}` violates {} rule(s)", record.org_id(), report.violations.len()),
                problems: report.violations.iter().map(Problem::from).collect(),
            });
        }
        let id = record.org_id().clone();
        self.commit(
            |s| {
                let versions = s.organizations.get(&id).map_or(&[][..], |v| v.as_slice());
                let current = versions.len() as u32;
                if let Some(expected) = expected_version {
                    if expected != current {
                        return Err(RegistryError::Conflict {
                            id: id.to_string(),
                            expected,
                            actual: current,
                        });
                    }
                }
                if let Some(last) = versions.last() {
                    record.organization_profile.version = last.organization_profile.version;
                    if *last == record {
                        return Ok((None, stored_record(&id, current, false)));
                    }
                }
                record.organization_profile.version = current + 1;
                Ok((Some(Op::PutRecord(record)), stored_record(&id, current + 1, true)))
            },
            |out| {
                out.changed
                    .then(|| (events::RECORD_UPDATED, json!({ "orgId": out.id, "version": out.version })))
            },
        )
    }

    /// Defines every class of a class file. With `name`, the file must hold
    /// exactly that one class.
    pub fn put_classes(&self, text: &str, name: Option<&str>) -> Result<Vec<Stored>, RegistryError> {
        let classes = parse_classes(text).map_err(|e| RegistryError::Invalid {
            message: format!("cannot parse class file: {e}"),
            problems: vec![Problem {
                rule: None,
                path: Some(format!("{}:{}", e.line, e.column)),
                message: e.message.clone(),
            }],
        })?;
        if classes.is_empty() {
            return Err(RegistryError::invalid("class file defines no class"));
        }
        if let Some(name) = name {
            if classes.len() != 1 || classes[0].name != name {
                return Err(RegistryError::invalid(format!("expected exactly the class `{name}`")));
            }
        }
        classes.into_iter().map(|c| self.put_class(c)).collect()
    }

    fn put_class(&self, class: OrganizationClass) -> Result<Stored, RegistryError> {
        let name = class.name.clone();
        self.commit(
            |s| {
                let changed = s.classes.get(&name) != Some(&class);
                let op = changed.then(|| Op::PutClass {
                    name: name.clone(),
                    text: print_class(&class),
                });
                Ok((
                    op,
                    Stored {
                        kind: DocumentKind::Classfile,
                        id: name.clone(),
                        version: None,
                        changed,
                    },
                ))
            },
            |out| out.changed.then(|| (events::CLASS_DEFINED, json!({ "name": out.id }))),
        )
    }

    pub fn put_network(&self, network: SocialNetwork) -> Result<Stored, RegistryError> {
        network.validate()?;
        self.commit(
            |s| {
                let changed = s.network != network;
                Ok((
                    changed.then_some(Op::PutNetwork(network)),
                    Stored {
                        kind: DocumentKind::Network,
                        id: "network".into(),
                        version: None,
                        changed,
                    },
                ))
            },
            |out| out.changed.then(|| (events::NETWORK_UPDATED, json!({}))),
        )
    }

    pub fn put_spec(&self, document: SpecDocument) -> Result<Stored, RegistryError> {
        self.commit(
            |s| {
                define_spec(document.clone(), |name| s.classes.get(name).cloned())?;
                let changed = s.specs.get(&document.id) != Some(&document);
                let id = document.id.clone();
                Ok((
                    changed.then_some(Op::PutSpec(document)),
                    Stored {
                        kind: DocumentKind::Spec,
                        id,
                        version: None,
                        changed,
                    },
                ))
            },
            |out| out.changed.then(|| (events::SPEC_CREATED, json!({ "specId": out.id }))),
        )
    }

    pub fn organization(&self, id: &str, version: Option<u32>) -> Result<OrganizationRecord, RegistryError> {
        let s = self.snapshot();
        let found = match version {
            Some(v) => s.version(id, v),
            None => s.current(id),
        };
        found.cloned().ok_or_else(|| match version {
            Some(v) if s.current(id).is_some() => RegistryError::not_found("version", format!("{id}@{v}")),
            _ => RegistryError::not_found("organization", id),
        })
    }

    pub fn class(&self, name: &str) -> Result<OrganizationClass, RegistryError> {
        self.snapshot()
            .classes
            .get(name)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("class", name))
    }

    pub fn spec_document(&self, id: &str) -> Result<SpecDocument, RegistryError> {
        self.snapshot()
            .specs
            .get(id)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("specification", id))
    }

    pub fn network(&self) -> SocialNetwork {
        self.snapshot().network.clone()
    }

    pub fn vo(&self, id: &str) -> Result<VoRecord, RegistryError> {
        self.snapshot().vos.get(id).cloned().ok_or_else(|| RegistryError::not_found("VO", id))
    }

    /// Ranks every current record against a class.
    pub fn search(&self, request: &SearchRequest) -> Result<Vec<RankedOrg>, RegistryError> {
        let s = self.snapshot();
        let class = match (&request.class, &request.class_text) {
            (Some(name), None) => s.classes.get(name).cloned().ok_or_else(|| RegistryError::not_found("class", name))?,
            (None, Some(text)) => {
                let mut classes = self.parse_inline(text)?;
                if classes.len() != 1 {
                    return Err(RegistryError::invalid("inline class text must define exactly one class"));
                }
                classes.remove(0)
            }
            _ => return Err(RegistryError::invalid("give exactly one of `class` and `classText`")),
        };
        let weighted = WeightedClass::from_spec(class, request.weights.as_ref())
            .map_err(|e| RegistryError::invalid(e.to_string()))?;
        let views: Vec<(OrgId, _)> = s
            .organizations
            .iter()
            .filter_map(|(id, v)| v.last().map(|r| (id.clone(), flatten_properties(r))))
            .collect();
        Ok(rank(views.iter().map(|(id, view)| (id, view)), &weighted))
    }

    fn parse_inline(&self, text: &str) -> Result<Vec<OrganizationClass>, RegistryError> {
        parse_classes(text).map_err(|e| RegistryError::Invalid {
            message: format!("cannot parse class: {e}"),
            problems: vec![Problem {
                rule: None,
                path: Some(format!("{}:{}", e.line, e.column)),
                message: e.message.clone(),
            }],
        })
    }

    fn resolve_spec(&self, s: &StoreSnapshot, id: &str, preferences: Option<&Preferences>) -> Result<VOSpecification, RegistryError> {
        let document = s
            .specs
            .get(id)
            .cloned()
            .ok_or_else(|| RegistryError::not_found("specification", id))?;
        self.resolve_document(s, document, preferences)
    }

    fn resolve_document(
        &self,
        s: &StoreSnapshot,
        mut document: SpecDocument,
        preferences: Option<&Preferences>,
    ) -> Result<VOSpecification, RegistryError> {
        if let Some(p) = preferences {
            document.preferences = p.clone();
        }
        if document.preferences.sort_keys.is_empty() {
            document.preferences.sort_keys = self.config.default_sort_keys.clone();
        }
        Ok(define_spec(document, |name| s.classes.get(name).cloned())?)
    }

    fn options(&self, request: &PlanRequest) -> CandidateOptions {
        CandidateOptions {
            verify: request.verify,
            exclude_discrepant: request.exclude_discrepant,
            rules: self.config.verification,
        }
    }

    pub fn candidates(&self, spec_id: &str, request: &PlanRequest) -> Result<Candidates, RegistryError> {
        let s = self.snapshot();
        let spec = self.resolve_spec(&s, spec_id, request.preferences.as_ref())?;
        let candidates = select_candidates(&spec, &s.current_records(), &s.network, &self.options(request))?;
        self.events
            .publish(events::CANDIDATES_READY, json!({ "specId": spec_id, "candidates": candidates }));
        Ok(candidates)
    }

    pub fn plan(&self, spec_id: &str, request: &PlanRequest) -> Result<Plan, RegistryError> {
        let s = self.snapshot();
        let spec = self.resolve_spec(&s, spec_id, request.preferences.as_ref())?;
        let plan = self.plan_on(&s, &spec, request)?;
        self.events.publish(
            events::VARIANTS_READY,
            json!({ "specId": spec_id, "count": plan.variants.len() }),
        );
        Ok(plan)
    }

    /// Plans a specification that need not be stored.
    pub fn plan_document(&self, document: SpecDocument, request: &PlanRequest) -> Result<Plan, RegistryError> {
        let s = self.snapshot();
        let spec = self.resolve_document(&s, document, request.preferences.as_ref())?;
        self.plan_on(&s, &spec, request)
    }

    fn plan_on(&self, s: &StoreSnapshot, spec: &VOSpecification, request: &PlanRequest) -> Result<Plan, RegistryError> {
        let registry = s.current_records();
        let candidates = select_candidates(spec, &registry, &s.network, &self.options(request))?;
        let context = CapabilityContext::new(request.context.iter().cloned());
        let variants = generate_variants(spec, &candidates, &registry, &s.network, &context, self.config.variant_cap)?;
        Ok(Plan {
            spec_id: spec.id().to_string(),
            candidates,
            variants,
        })
    }

    /// Registers the chosen variant as a VO and records the collaboration
    /// among its members, in one commit.
    pub fn incept(&self, spec_id: &str, request: &InceptRequest) -> Result<VoRecord, RegistryError> {
        self.commit(
            |s| {
                let spec = self.resolve_spec(s, spec_id, None)?;
                let assignment = match request {
                    InceptRequest::Variant { variant } => variant.assignment.clone(),
                    InceptRequest::Index { index, plan } => {
                        let planned = self.resolve_spec(s, spec_id, plan.preferences.as_ref())?;
                        let mut variants = self.plan_on(s, &planned, plan)?.variants;
                        if *index >= variants.len() {
                            return Err(RegistryError::not_found("variant", index.to_string()));
                        }
                        variants.swap_remove(*index).assignment
                    }
                };
                check_assignment(&spec, s, &assignment)?;
                let vo = VoRecord {
                    id: format!("vo-{}", s.vos.len() + 1),
                    spec_id: spec_id.to_string(),
                    assignment,
                    created_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
                };
                Ok((Some(Op::Incept(vo.clone())), vo))
            },
            |vo| Some((events::VO_INCEPTED, serde_json::to_value(vo).expect("VO serializes"))),
        )
    }

    pub fn verify(&self, org_id: &str) -> Result<VerificationReport, RegistryError> {
        let s = self.snapshot();
        let record = s.current(org_id).ok_or_else(|| RegistryError::not_found("organization", org_id))?;
        let id = OrgId::from(org_id);
        if !s.network.nodes.contains(&id) {
            return Err(RegistryError::not_found("network node", org_id));
        }
        Ok(verify_claims(&id, record, &s.network, &self.config.verification)?)
    }

    pub fn export(&self) -> String {
        self.snapshot().export_json()
    }

    pub fn compact(&self) -> Result<u64, RegistryError> {
        let _guard = self.commit.lock().expect("commit lock");
        Ok(self.store.compact()?)
    }
}

fn stored_record(id: &OrgId, version: u32, changed: bool) -> Stored {
    Stored {
        kind: DocumentKind::Record,
        id: id.to_string(),
        version: Some(version),
        changed,
    }
}

fn check_assignment(
    spec: &VOSpecification,
    s: &StoreSnapshot,
    assignment: &std::collections::BTreeMap<String, RoleAssignment>,
) -> Result<(), RegistryError> {
    if !assignment.keys().eq(spec.roles().keys()) {
        return Err(RegistryError::invalid(format!(
            "assignment must cover exactly the roles {:?}",
            spec.roles().keys().collect::<Vec<_>>()
        )));
    }
    for (role, a) in assignment {
        let record = s
            .current(a.org_id.as_str())
            .ok_or_else(|| RegistryError::not_found("organization", a.org_id.as_str()))?;
        if let Some(service) = &a.service {
            if record.service(service).is_none() {
                return Err(RegistryError::invalid(format!(
                    "role `{role}`: `{}` has no service `{service}`",
                    a.org_id
                )));
            }
        }
    }
    if !spec.preferences().allow_multi_role_org {
        let mut orgs: Vec<&OrgId> = assignment.values().map(|a| &a.org_id).collect();
        orgs.sort();
        if orgs.windows(2).any(|w| w[0] == w[1]) {
            return Err(RegistryError::invalid("an organization is assigned to more than one role"));
        }
    }
    Ok(())
}
