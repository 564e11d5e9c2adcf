use serde::{Deserialize, Serialize};

use super::{RelationType, SocialError, SocialNetwork};
use crate::model::{ClaimValue, OrgId, OrganizationRecord};

pub const COLLABORATION_COUNT: &str = "collaborationCount";
pub const RECOGNITION: &str = "recognition";

/// Thresholds of the built-in verification rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct VerificationRules {
    /// A collaboration-count claim is a discrepancy when fewer than
    /// `claimed * tau` distinct collaboration partners are observed.
    pub tau: f64,
    /// A recognition claim is a discrepancy when the observed mean rating is
    /// below `claimed - delta`.
    pub delta: f64,
}

impl Default for VerificationRules {
    fn default() -> Self {
        VerificationRules { tau: 0.5, delta: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Source {
    Monitoring,
    History,
    Opinions,
    Relations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Flag {
    Consistent,
    Discrepancy,
    Unverifiable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Check {
    pub conspicuity: String,
    pub claim: String,
    pub source_of_truth: Option<Source>,
    pub claimed_value: ClaimValue,
    pub observed_value: Option<f64>,
    pub flag: Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub org_id: OrgId,
    pub checks: Vec<Check>,
    pub reliability_score: f64,
}

impl VerificationReport {
    pub fn has_discrepancy(&self) -> bool {
        self.checks.iter().any(|c| c.flag == Flag::Discrepancy)
    }
}

/// Checks every structured claim in the current conspicuities of `record`
/// against the social network.
pub fn verify_claims(
    org_id: &OrgId,
    record: &OrganizationRecord,
    network: &SocialNetwork,
    rules: &VerificationRules,
) -> Result<VerificationReport, SocialError> {
    if record.org_id() != org_id || !network.nodes.contains(org_id) {
        return Err(SocialError::UnknownNode(org_id.clone()));
    }
    let mut checks = Vec::new();
    for consp in record.current_conspicuities() {
        let Some(claim) = &consp.claim else { continue };
        let claimed = claim.claim_value.as_f64();
        let (source, observed) = match (claim.claim_kind.as_str(), claimed) {
            (COLLABORATION_COUNT, Some(_)) => (
                Some(Source::History),
                Some(network.neighbors(org_id, &RelationType::PastCollaboration).len() as f64),
            ),
            (RECOGNITION, Some(_)) => observed_recognition(org_id, network),
            _ => (None, None),
        };
        let flag = match (claim.claim_kind.as_str(), claimed, observed) {
            (COLLABORATION_COUNT, Some(c), Some(o)) => consistent_if(o >= c * rules.tau),
            (RECOGNITION, Some(c), Some(o)) => consistent_if(o >= c - rules.delta),
            _ => Flag::Unverifiable,
        };
        checks.push(Check {
            conspicuity: consp.id.clone(),
            claim: claim.claim_kind.clone(),
            source_of_truth: if flag == Flag::Unverifiable { None } else { source },
            claimed_value: claim.claim_value.clone(),
            observed_value: observed,
            flag,
        });
    }
    let verifiable = checks.iter().filter(|c| c.flag != Flag::Unverifiable).count();
    let consistent = checks.iter().filter(|c| c.flag == Flag::Consistent).count();
    let reliability_score = if verifiable == 0 {
        1.0
    } else {
        consistent as f64 / verifiable as f64
    };
    Ok(VerificationReport {
        org_id: org_id.clone(),
        checks,
        reliability_score,
    })
}

fn consistent_if(ok: bool) -> Flag {
    if ok {
        Flag::Consistent
    } else {
        Flag::Discrepancy
    }
}

/// Mean of incoming recognition weights and opinion ratings about `org`.
fn observed_recognition(org: &OrgId, network: &SocialNetwork) -> (Option<Source>, Option<f64>) {
    let relations: Vec<f64> = network
        .edges
        .iter()
        .filter(|e| e.relation == RelationType::Recognition && &e.target == org)
        .map(|e| e.weight)
        .collect();
    let opinions: Vec<f64> = network
        .opinions
        .iter()
        .filter(|o| &o.subject == org)
        .map(|o| o.rating)
        .collect();
    let source = match (relations.is_empty(), opinions.is_empty()) {
        (true, true) => return (None, None),
        (false, _) => Source::Relations,
        (true, false) => Source::Opinions,
    };
    let all: Vec<f64> = relations.into_iter().chain(opinions).collect();
    (Some(source), Some(all.iter().sum::<f64>() / all.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::social::{Edge, Opinion};

    fn network_with_partners(org: &OrgId, partners: usize) -> SocialNetwork {
        let mut n = SocialNetwork::new();
        n.add_node(org.clone());
        for k in 0..partners {
            let p = OrgId::from(format!("partner-{k}"));
            n.add_node(p.clone());
            n.add_edge(Edge::new(org.clone(), p, RelationType::PastCollaboration, 1.0))
                .unwrap();
        }
        n
    }

    #[test]
    fn many_claimed_few_observed() {
        let record = fixtures::software_dev();
        let org = record.org_id().clone();
        let report = verify_claims(&org, &record, &network_with_partners(&org, 1), &VerificationRules::default()).unwrap();
        assert_eq!(report.checks.len(), 1);
        assert_eq!(report.checks[0].flag, Flag::Discrepancy);
        assert_eq!(report.checks[0].observed_value, Some(1.0));
        assert_eq!(report.checks[0].source_of_truth, Some(Source::History));
        assert_eq!(report.reliability_score, 0.0);

        let report = verify_claims(&org, &record, &network_with_partners(&org, 5), &VerificationRules::default()).unwrap();
        assert_eq!(report.checks[0].flag, Flag::Consistent);
        assert_eq!(report.reliability_score, 1.0);
    }

    #[test]
    fn recognition_uses_edges_and_opinions() {
        let mut record = fixtures::software_dev();
        let org = record.org_id().clone();
        let claim = record.conspicuities[0].claim.as_mut().unwrap();
        claim.claim_kind = RECOGNITION.into();
        claim.claim_value = ClaimValue::Number(0.9);
        let mut n = network_with_partners(&org, 1);
        let none = verify_claims(&org, &record, &n, &VerificationRules::default()).unwrap();
        assert_eq!(none.checks[0].flag, Flag::Unverifiable);
        assert_eq!(none.reliability_score, 1.0);

        n.add_opinion(Opinion {
            author: "partner-0".into(),
            subject: org.clone(),
            rating: 0.8,
            text: String::new(),
        })
        .unwrap();
        let report = verify_claims(&org, &record, &n, &VerificationRules::default()).unwrap();
        assert_eq!(report.checks[0].source_of_truth, Some(Source::Opinions));
        assert_eq!(report.checks[0].flag, Flag::Consistent);

        n.add_edge(Edge::new("partner-0", org.clone(), RelationType::Recognition, 0.2)).unwrap();
        let report = verify_claims(&org, &record, &n, &VerificationRules::default()).unwrap();
        assert_eq!(report.checks[0].source_of_truth, Some(Source::Relations));
        assert_eq!(report.checks[0].observed_value, Some(0.5));
        assert_eq!(report.checks[0].flag, Flag::Discrepancy);
    }

    #[test]
    fn unknown_claims_are_unverifiable() {
        let mut record = fixtures::software_dev();
        let org = record.org_id().clone();
        record.conspicuities[0].claim.as_mut().unwrap().claim_kind = "projectsDelivered".into();
        let report = verify_claims(&org, &record, &network_with_partners(&org, 0), &VerificationRules::default()).unwrap();
        assert_eq!(report.checks[0].flag, Flag::Unverifiable);
        assert_eq!(report.checks[0].source_of_truth, None);
    }

    #[test]
    fn org_must_be_in_network() {
        let record = fixtures::software_dev();
        let err = verify_claims(record.org_id(), &record, &SocialNetwork::new(), &VerificationRules::default());
        assert!(matches!(err, Err(SocialError::UnknownNode(_))));
    }
}
