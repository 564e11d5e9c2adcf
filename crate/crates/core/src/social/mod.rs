//! Social network of breeding-environment members: typed, weighted
//! relations, opinions, social requirements over role assignments and
//! verification of competence claims.
//!
//! `pastCollaboration` is symmetric: an edge in either direction relates the
//! pair, and both directions add up. Every other relation type is directed.
//! Trust and recognition weights lie in `[0, 1]`; collaboration and
//! financial-exchange weights are non-negative counts or amounts.

mod verify;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::OrgId;

pub use verify::{
    verify_claims, Check, Flag, Source, VerificationReport, VerificationRules, COLLABORATION_COUNT,
    RECOGNITION,
};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationType {
    PastCollaboration,
    Recognition,
    Trust,
    FinancialExchange,
    /// Deployment-specific relation types.
    Other(String),
}

impl RelationType {
    pub fn as_str(&self) -> &str {
        match self {
            RelationType::PastCollaboration => "pastCollaboration",
            RelationType::Recognition => "recognition",
            RelationType::Trust => "trust",
            RelationType::FinancialExchange => "financialExchange",
            RelationType::Other(name) => name,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self, RelationType::PastCollaboration)
    }

    /// Trust and recognition weights are ratings in `[0, 1]`.
    pub fn is_rating(&self) -> bool {
        matches!(self, RelationType::Recognition | RelationType::Trust)
    }
}

impl From<&str> for RelationType {
    fn from(s: &str) -> Self {
        match s {
            "pastCollaboration" => RelationType::PastCollaboration,
            "recognition" => RelationType::Recognition,
            "trust" => RelationType::Trust,
            "financialExchange" => RelationType::FinancialExchange,
            other => RelationType::Other(other.to_string()),
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for RelationType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for RelationType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            return Err(serde::de::Error::custom("empty relation type"));
        }
        Ok(RelationType::from(s.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub source: OrgId,
    pub target: OrgId,
    #[serde(rename = "type")]
    pub relation: RelationType,
    pub weight: f64,
    #[serde(default)]
    pub attributes: BTreeMap<String, serde_json::Value>,
}

impl Edge {
    pub fn new(source: impl Into<OrgId>, target: impl Into<OrgId>, relation: RelationType, weight: f64) -> Self {
        Edge {
            source: source.into(),
            target: target.into(),
            relation,
            weight,
            attributes: BTreeMap::new(),
        }
    }

    fn joins(&self, a: &OrgId, b: &OrgId) -> bool {
        (&self.source == a && &self.target == b)
            || (self.relation.is_symmetric() && &self.source == b && &self.target == a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Opinion {
    pub author: OrgId,
    pub subject: OrgId,
    /// Rating in `[0, 1]`.
    pub rating: f64,
    #[serde(default)]
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SocialError {
    #[error("unknown organization `{0}` in the social network")]
    UnknownNode(OrgId),
    #[error("self-loop on `{0}`")]
    SelfLoop(OrgId),
    #[error("{relation} edge {from} -> {to}: weight {weight} out of range")]
    WeightOutOfRange {
        from: OrgId,
        to: OrgId,
        relation: RelationType,
        weight: f64,
    },
    #[error("duplicate {relation} edge {from} -> {to}")]
    DuplicateEdge {
        from: OrgId,
        to: OrgId,
        relation: RelationType,
    },
    #[error("opinion of `{author}` on `{subject}`: {reason}")]
    InvalidOpinion {
        author: OrgId,
        subject: OrgId,
        reason: String,
    },
    #[error("role `{0}` is not assigned")]
    UnassignedRole(String),
    #[error("invalid social requirement: {0}")]
    InvalidRequirement(String),
    #[error("invalid network document: {0}")]
    Decode(String),
}

/// Organizations, their typed weighted relations and opinions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SocialNetwork {
    #[serde(default)]
    pub nodes: BTreeSet<OrgId>,
    #[serde(default)]
    pub edges: Vec<Edge>,
    #[serde(default)]
    pub opinions: Vec<Opinion>,
}

impl SocialNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    /// Decodes and validates an edge-list document.
    pub fn from_json_str(text: &str) -> Result<Self, SocialError> {
        let network: SocialNetwork =
            serde_json::from_str(text).map_err(|e| SocialError::Decode(e.to_string()))?;
        network.validate()?;
        Ok(network)
    }

    pub fn add_node(&mut self, org: impl Into<OrgId>) {
        self.nodes.insert(org.into());
    }

    pub fn add_edge(&mut self, edge: Edge) -> Result<(), SocialError> {
        self.check_edge(&edge)?;
        if self.edges.iter().any(|e| same_slot(e, &edge)) {
            return Err(SocialError::DuplicateEdge {
                from: edge.source,
                to: edge.target,
                relation: edge.relation,
            });
        }
        self.edges.push(edge);
        Ok(())
    }

    pub fn add_opinion(&mut self, opinion: Opinion) -> Result<(), SocialError> {
        self.check_opinion(&opinion)?;
        self.opinions.push(opinion);
        Ok(())
    }

    fn check_edge(&self, edge: &Edge) -> Result<(), SocialError> {
        if edge.source == edge.target {
            return Err(SocialError::SelfLoop(edge.source.clone()));
        }
        for end in [&edge.source, &edge.target] {
            if !self.nodes.contains(end) {
                return Err(SocialError::UnknownNode(end.clone()));
            }
        }
        let in_range = if edge.relation.is_rating() {
            (0.0..=1.0).contains(&edge.weight)
        } else {
            edge.weight >= 0.0 && edge.weight.is_finite()
        };
        if !in_range {
            return Err(SocialError::WeightOutOfRange {
                from: edge.source.clone(),
                to: edge.target.clone(),
                relation: edge.relation.clone(),
                weight: edge.weight,
            });
        }
        Ok(())
    }

    fn check_opinion(&self, opinion: &Opinion) -> Result<(), SocialError> {
        let invalid = |reason: &str| SocialError::InvalidOpinion {
            author: opinion.author.clone(),
            subject: opinion.subject.clone(),
            reason: reason.to_string(),
        };
        if !self.nodes.contains(&opinion.author) || !self.nodes.contains(&opinion.subject) {
            return Err(invalid("author and subject must be registered nodes"));
        }
        if opinion.author == opinion.subject {
            return Err(invalid("organizations cannot rate themselves"));
        }
        if !(0.0..=1.0).contains(&opinion.rating) {
            return Err(invalid("rating must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SocialError> {
        for (i, edge) in self.edges.iter().enumerate() {
            self.check_edge(edge)?;
            if self.edges[..i].iter().any(|e| same_slot(e, edge)) {
                return Err(SocialError::DuplicateEdge {
                    from: edge.source.clone(),
                    to: edge.target.clone(),
                    relation: edge.relation.clone(),
                });
            }
        }
        self.opinions.iter().try_for_each(|o| self.check_opinion(o))
    }

    /// Combined weight of `relation` from `a` to `b` (both directions for
    /// symmetric relations); `None` when no such edge exists.
    pub fn pair_weight(&self, a: &OrgId, b: &OrgId, relation: &RelationType) -> Option<f64> {
        let mut found = None;
        for edge in self.edges.iter().filter(|e| &e.relation == relation && e.joins(a, b)) {
            *found.get_or_insert(0.0) += edge.weight;
        }
        found
    }

    /// Organizations reachable from `org` over one `relation` edge.
    pub fn neighbors(&self, org: &OrgId, relation: &RelationType) -> BTreeSet<&OrgId> {
        self.edges
            .iter()
            .filter(|e| &e.relation == relation)
            .filter_map(|e| {
                if &e.source == org {
                    Some(&e.target)
                } else if relation.is_symmetric() && &e.target == org {
                    Some(&e.source)
                } else {
                    None
                }
            })
            .collect()
    }

    /// Hop distance from `a` to `b` over `relation`, if at most `max_hops`.
    pub fn distance_within(&self, a: &OrgId, b: &OrgId, relation: &RelationType, max_hops: u32) -> Option<u32> {
        if a == b {
            return Some(0);
        }
        let mut seen = BTreeSet::from([a]);
        let mut queue = VecDeque::from([(a, 0u32)]);
        while let Some((node, depth)) = queue.pop_front() {
            if depth == max_hops {
                continue;
            }
            for next in self.neighbors(node, relation) {
                if next == b {
                    return Some(depth + 1);
                }
                if seen.insert(next) {
                    queue.push_back((next, depth + 1));
                }
            }
        }
        None
    }

    /// Adds one collaboration between `a` and `b`: increments the existing
    /// `pastCollaboration` edge (either direction) or creates it with weight
    /// 1. Unknown organizations become nodes. Returns `false` for `a == b`.
    pub fn record_collaboration(&mut self, a: &OrgId, b: &OrgId, vo_id: &str, at: &str) -> bool {
        if a == b {
            return false;
        }
        self.nodes.insert(a.clone());
        self.nodes.insert(b.clone());
        let relation = RelationType::PastCollaboration;
        let edge = match self
            .edges
            .iter_mut()
            .find(|e| e.relation == relation && e.joins(a, b))
        {
            Some(edge) => {
                edge.weight += 1.0;
                edge
            }
            None => {
                let (source, target) = if a < b { (a, b) } else { (b, a) };
                self.edges.push(Edge::new(source.clone(), target.clone(), relation, 1.0));
                self.edges.last_mut().unwrap()
            }
        };
        let vos = edge
            .attributes
            .entry("vos".to_string())
            .or_insert_with(|| serde_json::Value::Array(Vec::new()));
        if let Some(list) = vos.as_array_mut() {
            list.push(serde_json::Value::String(vo_id.to_string()));
        }
        edge.attributes
            .insert("lastCollaboration".to_string(), serde_json::Value::String(at.to_string()));
        true
    }
}

fn same_slot(a: &Edge, b: &Edge) -> bool {
    a.relation == b.relation && a.joins(&b.source, &b.target)
}

/// What a social requirement demands of the relation between two roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Constraint {
    EdgeExists,
    WeightAtLeast(f64),
    CountAtLeast(u64),
    PathWithin(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SocialRequirement {
    pub role_a: String,
    pub role_b: String,
    pub relation: RelationType,
    pub constraint: Constraint,
}

impl SocialRequirement {
    pub fn validate(&self) -> Result<(), SocialError> {
        if self.role_a == self.role_b {
            return Err(SocialError::InvalidRequirement(format!(
                "roles must differ (both `{}`)",
                self.role_a
            )));
        }
        match self.constraint {
            Constraint::WeightAtLeast(x) if !(x.is_finite() && x >= 0.0) => Err(
                SocialError::InvalidRequirement(format!("weight threshold {x} must be non-negative")),
            ),
            Constraint::WeightAtLeast(x) if self.relation.is_rating() && x > 1.0 => Err(
                SocialError::InvalidRequirement(format!("{} weights lie in [0, 1], got {x}", self.relation)),
            ),
            Constraint::PathWithin(0) => Err(SocialError::InvalidRequirement(
                "path length must be at least one hop".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Roles of a VO specification and the social requirements between them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SocialNetworkSchema {
    #[serde(default)]
    pub roles: BTreeSet<String>,
    #[serde(default)]
    pub requirements: Vec<SocialRequirement>,
}

impl SocialNetworkSchema {
    pub fn validate(&self) -> Result<(), SocialError> {
        for req in &self.requirements {
            req.validate()?;
            for role in [&req.role_a, &req.role_b] {
                if !self.roles.contains(role) {
                    return Err(SocialError::InvalidRequirement(format!(
                        "role `{role}` is not declared in the schema"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Checks one social requirement on an assignment of organizations to
/// roles.
///
/// When both roles are played by the same organization the requirement
/// holds: an organization is trivially related to itself, and self-loops
/// are never stored.
pub fn evaluate_social_requirement(
    req: &SocialRequirement,
    assignment: &BTreeMap<String, OrgId>,
    network: &SocialNetwork,
) -> Result<bool, SocialError> {
    let a = assignment
        .get(&req.role_a)
        .ok_or_else(|| SocialError::UnassignedRole(req.role_a.clone()))?;
    let b = assignment
        .get(&req.role_b)
        .ok_or_else(|| SocialError::UnassignedRole(req.role_b.clone()))?;
    if a == b {
        return Ok(true);
    }
    Ok(match req.constraint {
        Constraint::EdgeExists => network.pair_weight(a, b, &req.relation).is_some(),
        Constraint::WeightAtLeast(x) => network.pair_weight(a, b, &req.relation).is_some_and(|w| w >= x),
        Constraint::CountAtLeast(n) => network
            .pair_weight(a, b, &req.relation)
            .is_some_and(|w| w >= n as f64),
        Constraint::PathWithin(k) => network.distance_within(a, b, &req.relation, k).is_some(),
    })
}

/// Induced subnetwork on `orgs`; opinions are kept when both author and
/// subject are inside.
pub fn subnetwork(orgs: &BTreeSet<OrgId>, network: &SocialNetwork) -> Result<SocialNetwork, SocialError> {
    if let Some(unknown) = orgs.iter().find(|o| !network.nodes.contains(*o)) {
        return Err(SocialError::UnknownNode(unknown.clone()));
    }
    Ok(SocialNetwork {
        nodes: orgs.clone(),
        edges: network
            .edges
            .iter()
            .filter(|e| orgs.contains(&e.source) && orgs.contains(&e.target))
            .cloned()
            .collect(),
        opinions: network
            .opinions
            .iter()
            .filter(|o| orgs.contains(&o.author) && orgs.contains(&o.subject))
            .cloned()
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn org(s: &str) -> OrgId {
        OrgId::from(s)
    }

    fn network() -> SocialNetwork {
        let mut n = SocialNetwork::new();
        for o in ["planner", "builder", "x", "y"] {
            n.add_node(o);
        }
        n.add_edge(Edge::new("planner", "builder", RelationType::Trust, 0.7)).unwrap();
        n.add_edge(Edge::new("builder", "x", RelationType::PastCollaboration, 2.0)).unwrap();
        n.add_edge(Edge::new("y", "x", RelationType::PastCollaboration, 1.0)).unwrap();
        n
    }

    fn assignment(a: &str, b: &str) -> BTreeMap<String, OrgId> {
        BTreeMap::from([("A".to_string(), org(a)), ("B".to_string(), org(b))])
    }

    fn req(relation: RelationType, constraint: Constraint) -> SocialRequirement {
        SocialRequirement {
            role_a: "A".into(),
            role_b: "B".into(),
            relation,
            constraint,
        }
    }

    #[test]
    fn trust_weight_threshold() {
        let r = req(RelationType::Trust, Constraint::WeightAtLeast(0.5));
        assert_eq!(evaluate_social_requirement(&r, &assignment("planner", "builder"), &network()), Ok(true));
        // Trust is directed.
        assert_eq!(evaluate_social_requirement(&r, &assignment("builder", "planner"), &network()), Ok(false));
    }

    #[test]
    fn collaboration_is_undirected() {
        let r = req(RelationType::PastCollaboration, Constraint::CountAtLeast(2));
        assert_eq!(evaluate_social_requirement(&r, &assignment("x", "builder"), &network()), Ok(true));
        let path = req(RelationType::PastCollaboration, Constraint::PathWithin(2));
        assert_eq!(evaluate_social_requirement(&path, &assignment("builder", "y"), &network()), Ok(true));
        let short = req(RelationType::PastCollaboration, Constraint::PathWithin(1));
        assert_eq!(evaluate_social_requirement(&short, &assignment("builder", "y"), &network()), Ok(false));
    }

    #[test]
    fn empty_network_has_no_counts() {
        let mut empty = SocialNetwork::new();
        empty.add_node("x");
        empty.add_node("y");
        let r = req(RelationType::PastCollaboration, Constraint::CountAtLeast(1));
        assert_eq!(evaluate_social_requirement(&r, &assignment("x", "y"), &empty), Ok(false));
    }

    #[test]
    fn unassigned_role() {
        let r = req(RelationType::Trust, Constraint::EdgeExists);
        let partial = BTreeMap::from([("A".to_string(), org("x"))]);
        assert_eq!(
            evaluate_social_requirement(&r, &partial, &network()),
            Err(SocialError::UnassignedRole("B".into()))
        );
    }

    #[test]
    fn invariants_on_edges() {
        let mut n = network();
        assert!(matches!(n.add_edge(Edge::new("x", "x", RelationType::Trust, 0.1)), Err(SocialError::SelfLoop(_))));
        assert!(matches!(n.add_edge(Edge::new("x", "ghost", RelationType::Trust, 0.1)), Err(SocialError::UnknownNode(_))));
        assert!(matches!(
            n.add_edge(Edge::new("x", "y", RelationType::Trust, 1.5)),
            Err(SocialError::WeightOutOfRange { .. })
        ));
        assert!(matches!(
            n.add_edge(Edge::new("x", "builder", RelationType::PastCollaboration, 1.0)),
            Err(SocialError::DuplicateEdge { .. })
        ));
    }

    #[test]
    fn collaboration_accumulates_without_self_loops() {
        let mut n = network();
        assert!(!n.record_collaboration(&org("x"), &org("x"), "vo-0", "t"));
        for k in 0..3 {
            n.record_collaboration(&org("planner"), &org("z"), &format!("vo-{k}"), "t");
        }
        assert_eq!(n.pair_weight(&org("z"), &org("planner"), &RelationType::PastCollaboration), Some(3.0));
        assert!(n.nodes.contains(&org("z")));
        assert!(n.edges.iter().all(|e| e.source != e.target));
    }

    #[test]
    fn subnetwork_basics() {
        let n = network();
        assert_eq!(subnetwork(&n.nodes.clone(), &n).unwrap(), n);
        let single = subnetwork(&BTreeSet::from([org("x")]), &n).unwrap();
        assert!(single.edges.is_empty());
        assert!(matches!(subnetwork(&BTreeSet::from([org("ghost")]), &n), Err(SocialError::UnknownNode(_))));
    }

    #[test]
    fn requirement_validation() {
        let mut r = req(RelationType::Trust, Constraint::WeightAtLeast(1.2));
        assert!(r.validate().is_err());
        r.constraint = Constraint::PathWithin(0);
        assert!(r.validate().is_err());
        r.constraint = Constraint::EdgeExists;
        r.role_b = "A".into();
        assert!(r.validate().is_err());
    }

    #[test]
    fn document_roundtrip() {
        let text = r#"{"nodes":["a","b"],"edges":[{"source":"a","target":"b","type":"trust","weight":0.4}],"opinions":[{"author":"a","subject":"b","rating":0.9,"text":"reliable"}]}"#;
        let n = SocialNetwork::from_json_str(text).unwrap();
        assert_eq!(n.edges[0].relation, RelationType::Trust);
        let again = SocialNetwork::from_json_str(&serde_json::to_string(&n).unwrap()).unwrap();
        assert_eq!(n, again);
    }
}
