//! Partner and service selection for a VO specification: candidate
//! selection, variant generation and sorting, KPI evaluation and VO
//! inception.

mod candidates;
mod kpi;
mod spec;
mod variants;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{OrgId, OrganizationRecord};
use crate::social::SocialNetwork;

pub use candidates::{select_candidates, Candidate, CandidateOptions, Candidates, RoleCandidates};
pub use kpi::{evaluate_performance, Kpi, KpiPlugin, KpiReport, PluginFailure, TOTAL_COST, TOTAL_DURATION};
pub use spec::{
    define_spec, ProcessStep, Preferences, RoleDocument, RoleSpec, SortField, SortKey, SortOrder,
    SpecDocument, SpecError, VOSpecification,
};
pub use variants::{
    compare_variants, generate_variants, LineItem, RoleAssignment, SocialResult, Variant,
    DEFAULT_VARIANT_CAP,
};

/// Current records of the breeding environment keyed by organization.
pub type Registry = BTreeMap<OrgId, OrganizationRecord>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapssError {
    #[error("{count} assignments exceed the cap of {cap}; tighten the role requirements")]
    CapExceeded { count: u128, cap: u64 },
    #[error("organization `{org}` has {count} services covering role `{role}`")]
    AmbiguousService { role: String, org: OrgId, count: usize },
    #[error("variant mixes currencies {0} and {1}")]
    MixedCurrency(String, String),
    #[error("unknown organization `{0}`")]
    UnknownOrganization(OrgId),
    #[error("role `{0}` has no candidate set")]
    MissingRole(String),
    #[error(transparent)]
    Social(#[from] crate::social::SocialError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// A created virtual organization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VoRecord {
    pub id: String,
    pub spec_id: String,
    pub assignment: BTreeMap<String, RoleAssignment>,
    pub created_at: String,
}

/// Registers a VO for `variant` and adds one past collaboration between
/// every two distinct organizations it assigns.
pub fn incept(
    vo_id: &str,
    variant: &Variant,
    spec: &VOSpecification,
    network: &mut SocialNetwork,
    created_at: &str,
) -> VoRecord {
    let vo = VoRecord {
        id: vo_id.to_string(),
        spec_id: spec.id().to_string(),
        assignment: variant.assignment.clone(),
        created_at: created_at.to_string(),
    };
    apply_inception(&vo, network);
    vo
}

/// The network side of an inception: collaboration edges among the VO's
/// organizations, which become nodes if they were not already.
pub fn apply_inception(vo: &VoRecord, network: &mut SocialNetwork) {
    let orgs: BTreeSet<&OrgId> = vo.assignment.values().map(|a| &a.org_id).collect();
    let orgs: Vec<&OrgId> = orgs.into_iter().collect();
    for (i, a) in orgs.iter().enumerate() {
        network.add_node((*a).clone());
        for b in &orgs[i + 1..] {
            network.record_collaboration(a, b, &vo.id, &vo.created_at);
        }
    }
}
