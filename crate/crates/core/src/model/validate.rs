//! Structural validation of organization records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::{OrganizationRecord, TargetKind, Versioned};

/// A structural rule of the competence description model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "empty-id")]
    EmptyId,
    #[serde(rename = "duplicate-id")]
    DuplicateId,
    #[serde(rename = "version-gap")]
    VersionGap,
    #[serde(rename = "unresolved-reference")]
    UnresolvedReference,
    #[serde(rename = "competence-aggregates-nothing")]
    EmptyCompetence,
    #[serde(rename = "compound-competence cycle")]
    CompetenceCycle,
    #[serde(rename = "compound-service cycle")]
    ServiceCycle,
    #[serde(rename = "competence-service 1:1")]
    CompetenceServicePairing,
    #[serde(rename = "service-owner")]
    ServiceOwner,
    #[serde(rename = "capability-without-variants")]
    CapabilityWithoutVariants,
    #[serde(rename = "duplicate variant context")]
    DuplicateVariantContext,
    #[serde(rename = "negative-amount")]
    NegativeAmount,
    #[serde(rename = "creation-date-in-future")]
    FutureCreationDate,
    #[serde(rename = "conspicuity-target")]
    ConspicuityTarget,
}

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::EmptyId => "empty-id",
            Rule::DuplicateId => "duplicate-id",
            Rule::VersionGap => "version-gap",
            Rule::UnresolvedReference => "unresolved-reference",
            Rule::EmptyCompetence => "competence-aggregates-nothing",
            Rule::CompetenceCycle => "compound-competence cycle",
            Rule::ServiceCycle => "compound-service cycle",
            Rule::CompetenceServicePairing => "competence-service 1:1",
            Rule::ServiceOwner => "service-owner",
            Rule::CapabilityWithoutVariants => "capability-without-variants",
            Rule::DuplicateVariantContext => "duplicate variant context",
            Rule::NegativeAmount => "negative-amount",
            Rule::FutureCreationDate => "creation-date-in-future",
            Rule::ConspicuityTarget => "conspicuity-target",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: Rule,
    /// Id of the offending entity.
    pub entity: String,
    /// Location in the record document, e.g. `competences[2].subCompetenceRefs`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} at {}: {}", self.rule, self.entity, self.path, self.message)
    }
}

/// Every violated rule of a record; the record is valid iff this is empty.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has_rule(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    fn push(&mut self, rule: Rule, entity: &str, path: impl Into<String>, message: impl Into<String>) {
        let path = path.into();
        let duplicate = self
            .violations
            .iter()
            .any(|v| v.rule == rule && v.entity == entity && v.path == path);
        if !duplicate {
            self.violations.push(Violation {
                rule,
                entity: entity.to_string(),
                path,
                message: message.into(),
            });
        }
    }
}

/// Validates a record against the registry clock (today, UTC).
pub fn validate_record(record: &OrganizationRecord) -> ValidationReport {
    validate_record_as_of(record, Utc::now().date_naive())
}

/// Validates a record; `today` is the registry clock used for the
/// creation-date check.
pub fn validate_record_as_of(record: &OrganizationRecord, today: NaiveDate) -> ValidationReport {
    let mut report = ValidationReport::default();
    let org_id = record.org_id().as_str();

    check_profile(record, today, &mut report);

    check_versions(&record.competences, "competences", &mut report);
    check_versions(&record.capabilities, "capabilities", &mut report);
    check_versions(&record.activities, "activities", &mut report);
    check_versions(&record.products, "products", &mut report);
    check_versions(&record.resources, "resources", &mut report);
    check_versions(&record.services, "services", &mut report);
    check_versions(&record.conspicuities, "conspicuities", &mut report);
    for (i, cap) in record.capabilities.iter().enumerate() {
        check_versions(&cap.variants, &format!("capabilities[{i}].variants"), &mut report);
    }

    check_competences(record, &mut report);
    check_capabilities(record, &mut report);
    check_activities(record, &mut report);
    check_services(record, org_id, &mut report);
    check_conspicuities(record, org_id, &mut report);

    report
}

fn check_profile(record: &OrganizationRecord, today: NaiveDate, report: &mut ValidationReport) {
    let profile = &record.organization_profile;
    if profile.id.as_str().is_empty() {
        report.push(Rule::EmptyId, "", "organizationProfile.id", "organization id is empty");
    }
    if profile.version == 0 {
        report.push(
            Rule::VersionGap,
            profile.id.as_str(),
            "organizationProfile.version",
            "versions start at 1",
        );
    }
    if profile.creation_date > today {
        report.push(
            Rule::FutureCreationDate,
            profile.id.as_str(),
            "organizationProfile.creationDate",
            format!("creation date {} is after {today}", profile.creation_date),
        );
    }
}

fn check_versions<T: Versioned>(items: &[T], list: &str, report: &mut ValidationReport) {
    let mut by_id: BTreeMap<&str, Vec<(usize, u32)>> = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        if item.id().is_empty() {
            report.push(Rule::EmptyId, "", format!("{list}[{i}].id"), "entity id is empty");
            continue;
        }
        by_id.entry(item.id()).or_default().push((i, item.version()));
    }
    for (id, mut versions) in by_id {
        versions.sort_by_key(|&(_, v)| v);
        for pair in versions.windows(2) {
            if pair[0].1 == pair[1].1 {
                report.push(
                    Rule::DuplicateId,
                    id,
                    format!("{list}[{}]", pair[1].0),
                    format!("version {} of `{id}` appears twice", pair[1].1),
                );
            }
        }
        let distinct: BTreeSet<u32> = versions.iter().map(|&(_, v)| v).collect();
        let expected: BTreeSet<u32> = (1..=distinct.len() as u32).collect();
        if distinct != expected {
            let (index, _) = versions[versions.len() - 1];
            report.push(
                Rule::VersionGap,
                id,
                format!("{list}[{index}].version"),
                format!("versions {distinct:?} of `{id}` are not 1..={}", distinct.len()),
            );
        }
    }
}

fn index_of<T: Versioned>(items: &[T], id: &str) -> usize {
    items
        .iter()
        .enumerate()
        .filter(|(_, item)| item.id() == id)
        .max_by_key(|(_, item)| item.version())
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn check_competences(record: &OrganizationRecord, report: &mut ValidationReport) {
    let competences = record.current_competences();
    for comp in &competences {
        let at = format!("competences[{}]", index_of(&record.competences, &comp.id));
        if comp.capability_refs.is_empty() && comp.sub_competence_refs.is_empty() {
            report.push(
                Rule::EmptyCompetence,
                &comp.id,
                at.clone(),
                "a competence aggregates at least one capability or sub-competence",
            );
        }
        for cap in &comp.capability_refs {
            if record.capability(cap).is_none() {
                report.push(
                    Rule::UnresolvedReference,
                    &comp.id,
                    format!("{at}.capabilityRefs"),
                    format!("unknown capability `{cap}`"),
                );
            }
        }
        for sub in &comp.sub_competence_refs {
            if record.competence(sub).is_none() {
                report.push(
                    Rule::UnresolvedReference,
                    &comp.id,
                    format!("{at}.subCompetenceRefs"),
                    format!("unknown competence `{sub}`"),
                );
            }
        }
        for consp in &comp.conspicuity_refs {
            if record.conspicuity(consp).is_none() {
                report.push(
                    Rule::UnresolvedReference,
                    &comp.id,
                    format!("{at}.conspicuityRefs"),
                    format!("unknown conspicuity `{consp}`"),
                );
            }
        }
        if let Some(svc_id) = &comp.externalizing_service_ref {
            match record.service(svc_id) {
                None => report.push(
                    Rule::UnresolvedReference,
                    &comp.id,
                    format!("{at}.externalizingServiceRef"),
                    format!("unknown service `{svc_id}`"),
                ),
                Some(svc) if svc.competence_ref != comp.id => report.push(
                    Rule::CompetenceServicePairing,
                    &comp.id,
                    format!("{at}.externalizingServiceRef"),
                    format!(
                        "service `{svc_id}` externalizes `{}`, not `{}`",
                        svc.competence_ref, comp.id
                    ),
                ),
                Some(_) => {}
            }
        }
    }

    let edges: BTreeMap<&str, Vec<&str>> = competences
        .iter()
        .map(|c| (c.id.as_str(), c.sub_competence_refs.iter().map(String::as_str).collect()))
        .collect();
    for cycle in find_cycles(&edges) {
        let head = cycle[0];
        report.push(
            Rule::CompetenceCycle,
            head,
            format!("competences[{}].subCompetenceRefs", index_of(&record.competences, head)),
            format!("cycle {}", cycle.join(" -> ")),
        );
    }
}

fn check_capabilities(record: &OrganizationRecord, report: &mut ValidationReport) {
    let mut variant_owner: BTreeMap<&str, &str> = BTreeMap::new();
    for cap in record.current_capabilities() {
        let at = format!("capabilities[{}]", index_of(&record.capabilities, &cap.id));
        if record.activity(&cap.activity_ref).is_none() {
            report.push(
                Rule::UnresolvedReference,
                &cap.id,
                format!("{at}.activityRef"),
                format!("unknown activity `{}`", cap.activity_ref),
            );
        }
        for consp in &cap.conspicuity_refs {
            if record.conspicuity(consp).is_none() {
                report.push(
                    Rule::UnresolvedReference,
                    &cap.id,
                    format!("{at}.conspicuityRefs"),
                    format!("unknown conspicuity `{consp}`"),
                );
            }
        }
        if cap.variants.is_empty() {
            report.push(
                Rule::CapabilityWithoutVariants,
                &cap.id,
                format!("{at}.variants"),
                "a capability has at least one variant",
            );
        }
        let variants = cap.current_variants();
        let mut contexts = BTreeMap::new();
        for variant in &variants {
            let vat = format!("{at}.variants[{}]", index_of(&cap.variants, &variant.id));
            if let Some(owner) = variant_owner.insert(&variant.id, &cap.id) {
                if owner != cap.id {
                    report.push(
                        Rule::DuplicateId,
                        &variant.id,
                        vat.clone(),
                        format!("variant id also used by capability `{owner}`"),
                    );
                }
            }
            if let Some(other) = contexts.insert(&variant.context, &variant.id) {
                report.push(
                    Rule::DuplicateVariantContext,
                    &cap.id,
                    format!("{vat}.context"),
                    format!("variants `{other}` and `{}` have the same context", variant.id),
                );
            }
            if !variant.cost.amount.is_finite() || variant.cost.amount < 0.0 {
                report.push(
                    Rule::NegativeAmount,
                    &variant.id,
                    format!("{vat}.cost.amount"),
                    format!("cost {} is not a non-negative amount", variant.cost.amount),
                );
            }
            for (k, capacity) in variant.capacities.iter().enumerate() {
                if !capacity.amount.is_finite() || capacity.amount < 0.0 {
                    report.push(
                        Rule::NegativeAmount,
                        &variant.id,
                        format!("{vat}.capacities[{k}].amount"),
                        format!("capacity {} is not a non-negative amount", capacity.amount),
                    );
                }
                if let Some(res) = &capacity.resource_ref {
                    if record.resource(res).is_none() {
                        report.push(
                            Rule::UnresolvedReference,
                            &variant.id,
                            format!("{vat}.capacities[{k}].resourceRef"),
                            format!("unknown resource `{res}`"),
                        );
                    }
                }
            }
        }
    }
}

fn check_activities(record: &OrganizationRecord, report: &mut ValidationReport) {
    for act in record.current_activities() {
        if record.product(&act.product_ref).is_none() {
            report.push(
                Rule::UnresolvedReference,
                &act.id,
                format!("activities[{}].productRef", index_of(&record.activities, &act.id)),
                format!("unknown product `{}`", act.product_ref),
            );
        }
    }
}

fn check_services(record: &OrganizationRecord, org_id: &str, report: &mut ValidationReport) {
    let services = record.current_services();
    let mut by_competence: BTreeMap<&str, &str> = BTreeMap::new();
    for svc in &services {
        let at = format!("services[{}]", index_of(&record.services, &svc.id));
        if svc.owner_org_id.as_str() != org_id {
            report.push(
                Rule::ServiceOwner,
                &svc.id,
                format!("{at}.ownerOrgId"),
                format!("service is owned by `{}`, record is `{org_id}`", svc.owner_org_id),
            );
        }
        if let Some(first) = by_competence.insert(&svc.competence_ref, &svc.id) {
            report.push(
                Rule::CompetenceServicePairing,
                &svc.id,
                format!("{at}.competenceRef"),
                format!(
                    "services `{first}` and `{}` both externalize competence `{}`",
                    svc.id, svc.competence_ref
                ),
            );
        }
        match record.competence(&svc.competence_ref) {
            None => report.push(
                Rule::UnresolvedReference,
                &svc.id,
                format!("{at}.competenceRef"),
                format!("unknown competence `{}`", svc.competence_ref),
            ),
            Some(comp) if comp.externalizing_service_ref.as_deref() != Some(svc.id.as_str()) => {
                report.push(
                    Rule::CompetenceServicePairing,
                    &svc.id,
                    format!("{at}.competenceRef"),
                    format!("competence `{}` is not externalized by this service", comp.id),
                )
            }
            Some(_) => {}
        }
        for component in &svc.component_service_refs {
            if record.service(component).is_none() {
                report.push(
                    Rule::UnresolvedReference,
                    &svc.id,
                    format!("{at}.componentServiceRefs"),
                    format!("unknown service `{component}`"),
                );
            }
        }
    }

    let edges: BTreeMap<&str, Vec<&str>> = services
        .iter()
        .map(|s| (s.id.as_str(), s.component_service_refs.iter().map(String::as_str).collect()))
        .collect();
    for cycle in find_cycles(&edges) {
        let head = cycle[0];
        report.push(
            Rule::ServiceCycle,
            head,
            format!("services[{}].componentServiceRefs", index_of(&record.services, head)),
            format!("cycle {}", cycle.join(" -> ")),
        );
    }
}

fn check_conspicuities(record: &OrganizationRecord, org_id: &str, report: &mut ValidationReport) {
    for consp in record.current_conspicuities() {
        let at = format!("conspicuities[{}].targetRef", index_of(&record.conspicuities, &consp.id));
        let target = &consp.target_ref;
        let resolved = match target.kind {
            TargetKind::Service => record.service(&target.id).is_some(),
            TargetKind::Organization => target.id == org_id,
            TargetKind::Competence => record.competence(&target.id).is_some(),
            TargetKind::Capability => record.capability(&target.id).is_some(),
            TargetKind::Cost => record.variant(&target.id).is_some(),
            TargetKind::Capacity => match (record.variant(&target.id), target.index) {
                (Some((_, variant)), Some(index)) => index < variant.capacities.len(),
                _ => false,
            },
        };
        if !resolved {
            report.push(
                Rule::ConspicuityTarget,
                &consp.id,
                at,
                format!("target {:?} `{}` does not resolve", target.kind, target.id),
            );
        }
    }
}

/// One cycle per back edge found by a depth-first search, each listed from
/// the re-entered node back to itself.
fn find_cycles<'a>(edges: &BTreeMap<&'a str, Vec<&'a str>>) -> Vec<Vec<&'a str>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Fresh,
        Active,
        Done,
    }

    fn visit<'a>(
        node: &'a str,
        edges: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
        cycles: &mut Vec<Vec<&'a str>>,
    ) {
        marks.insert(node, Mark::Active);
        stack.push(node);
        for &next in edges.get(node).into_iter().flatten() {
            if !edges.contains_key(next) {
                continue;
            }
            match marks.get(next).copied().unwrap_or(Mark::Fresh) {
                Mark::Fresh => visit(next, edges, marks, stack, cycles),
                Mark::Active => {
                    let start = stack.iter().position(|&n| n == next).unwrap_or(0);
                    let mut cycle = stack[start..].to_vec();
                    cycle.push(next);
                    cycles.push(cycle);
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        marks.insert(node, Mark::Done);
    }

    let mut marks = BTreeMap::new();
    let mut cycles = Vec::new();
    for &node in edges.keys() {
        if marks.get(node).copied().unwrap_or(Mark::Fresh) == Mark::Fresh {
            visit(node, edges, &mut marks, &mut Vec::new(), &mut cycles);
        }
    }
    cycles
}
