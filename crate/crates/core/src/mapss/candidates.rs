use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MapssError, Registry, RoleSpec, VOSpecification};
use crate::dsl::eval_predicate;
use crate::matching::candidates_for_role;
use crate::model::{competence_closure, flatten_properties, service_view, OrgId, OrganizationRecord};
use crate::social::{verify_claims, SocialNetwork, VerificationRules};
use crate::value::PropertyView;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct CandidateOptions {
    /// Verify candidates' claims against the social network.
    pub verify: bool,
    /// Drop candidates with a discrepant claim (only with `verify`).
    pub exclude_discrepant: bool,
    pub rules: VerificationRules,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Candidate {
    pub org_id: OrgId,
    pub score: f64,
    /// Service of the organization through which it plays the role.
    pub service: Option<String>,
    pub discrepancy: bool,
    /// Claim reliability, when the organization was verified.
    pub reliability: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoleCandidates {
    pub candidates: Vec<Candidate>,
    pub needs_relaxation: bool,
    /// Instances removed because of discrepant claims.
    pub excluded: Vec<OrgId>,
}

impl RoleCandidates {
    pub fn org_ids(&self) -> Vec<&OrgId> {
        self.candidates.iter().map(|c| &c.org_id).collect()
    }
}

pub type Candidates = BTreeMap<String, RoleCandidates>;

/// Instances of each role's class scoring at least the minimum acceptable
/// score, with the service each one would use.
pub fn select_candidates(
    spec: &VOSpecification,
    registry: &Registry,
    network: &SocialNetwork,
    options: &CandidateOptions,
) -> Result<Candidates, MapssError> {
    let views: Vec<(&OrgId, PropertyView)> = registry
        .iter()
        .map(|(id, record)| (id, flatten_properties(record)))
        .collect();
    let min_score = spec.preferences().min_acceptable_score;
    let mut out = Candidates::new();
    for (name, role) in spec.roles() {
        let matches = candidates_for_role(&role.weighted, views.iter().map(|(id, v)| (*id, v)));
        let activities = spec.activities_of(name);
        let mut selected = RoleCandidates::default();
        for scored in matches.candidates.into_iter().filter(|c| c.score >= min_score) {
            let record = &registry[&scored.org_id];
            let service = match pick_service(name, role, &activities, record)? {
                ServicePick::Excluded => continue,
                ServicePick::Service(s) => s,
            };
            let mut candidate = Candidate {
                org_id: scored.org_id,
                score: scored.score,
                service,
                discrepancy: false,
                reliability: None,
            };
            if options.verify {
                if let Ok(report) = verify_claims(&candidate.org_id, record, network, &options.rules) {
                    candidate.discrepancy = report.has_discrepancy();
                    candidate.reliability = Some(report.reliability_score);
                }
                if candidate.discrepancy && options.exclude_discrepant {
                    selected.excluded.push(candidate.org_id);
                    continue;
                }
            }
            selected.candidates.push(candidate);
        }
        selected.needs_relaxation = selected.candidates.is_empty();
        out.insert(name.clone(), selected);
    }
    Ok(out)
}

enum ServicePick {
    Excluded,
    Service(Option<String>),
}

/// The organization's single service whose competence covers every
/// activity of the role and which meets the role's service requirements.
fn pick_service(
    role_name: &str,
    role: &RoleSpec,
    activities: &[&str],
    record: &OrganizationRecord,
) -> Result<ServicePick, MapssError> {
    let needed: Option<Vec<&str>> = activities
        .iter()
        .map(|a| record.capability_for_activity(a).map(|c| c.id.as_str()))
        .collect();
    let mut covering = Vec::new();
    if let Some(needed) = needed.filter(|n| !n.is_empty()) {
        for svc in record.current_services() {
            let Ok(closure) = competence_closure(&svc.competence_ref, record) else {
                continue;
            };
            if !needed.iter().all(|c| closure.contains(*c)) {
                continue;
            }
            let view = service_view(svc);
            let meets = role
                .service_requirements
                .iter()
                .all(|r| eval_predicate(&r.predicate, view.get(r.path.as_str())) == Ok(true));
            if meets {
                covering.push(svc.id.clone());
            }
        }
    }
    match covering.len() {
        0 if role.service_requirements.is_empty() => Ok(ServicePick::Service(None)),
        0 => Ok(ServicePick::Excluded),
        1 => Ok(ServicePick::Service(covering.pop())),
        count => Err(MapssError::AmbiguousService {
            role: role_name.to_string(),
            org: record.org_id().clone(),
            count,
        }),
    }
}
