//! Brute-force reference implementations shared by tests.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use vobe_core::mapss::{SortField, SortOrder};
use vobe_core::model::OrgId;
use vobe_core::social::{Constraint, RelationType, SocialNetwork, SocialRequirement};
use vobe_core::testkit::PlanningCase;

/// What a variant looks like to the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Expected {
    pub orgs: Vec<OrgId>,
    pub competence: f64,
    pub social: f64,
    pub satisfied: bool,
    pub cost: f64,
}

fn weight(net: &SocialNetwork, a: &OrgId, b: &OrgId, rel: &RelationType) -> Option<f64> {
    let undirected = *rel == RelationType::PastCollaboration;
    let ws: Vec<f64> = net
        .edges
        .iter()
        .filter(|e| &e.relation == rel)
        .filter(|e| (&e.source == a && &e.target == b) || (undirected && &e.source == b && &e.target == a))
        .map(|e| e.weight)
        .collect();
    (!ws.is_empty()).then(|| ws.iter().sum())
}

fn within(net: &SocialNetwork, a: &OrgId, b: &OrgId, rel: &RelationType, k: u32) -> bool {
    let mut frontier: BTreeSet<OrgId> = BTreeSet::from([a.clone()]);
    for _ in 0..k {
        let mut next = frontier.clone();
        for x in &frontier {
            for y in &net.nodes {
                if weight(net, x, y, rel).is_some() {
                    next.insert(y.clone());
                }
            }
        }
        frontier = next;
    }
    frontier.contains(b)
}

pub fn social_holds(net: &SocialNetwork, req: &SocialRequirement, a: &OrgId, b: &OrgId) -> bool {
    if a == b {
        return true;
    }
    let w = weight(net, a, b, &req.relation);
    match req.constraint {
        Constraint::EdgeExists => w.is_some(),
        Constraint::WeightAtLeast(x) => w.is_some_and(|w| w >= x),
        Constraint::CountAtLeast(n) => w.is_some_and(|w| w >= n as f64),
        Constraint::PathWithin(k) => within(net, a, b, &req.relation, k),
    }
}

/// Every assignment, filtered and evaluated independently, in the order the
/// preferences ask for.
pub fn expected_variants(case: &PlanningCase) -> Vec<Expected> {
    let roles: Vec<&String> = case.spec.roles().keys().collect();
    let prefs = case.spec.preferences();
    let mut combos: Vec<Vec<(OrgId, f64)>> = vec![Vec::new()];
    for role in &roles {
        let mut grown = Vec::new();
        for prefix in &combos {
            for c in &case.candidates[*role].candidates {
                let mut next = prefix.clone();
                next.push((c.org_id.clone(), c.score));
                grown.push(next);
            }
        }
        combos = grown;
    }
    let mut out = Vec::new();
    for combo in combos {
        let orgs: Vec<OrgId> = combo.iter().map(|c| c.0.clone()).collect();
        let distinct: BTreeSet<&OrgId> = orgs.iter().collect();
        if !prefs.allow_multi_role_org && distinct.len() < orgs.len() {
            continue;
        }
        let by_role: BTreeMap<&str, &OrgId> = roles.iter().map(|r| r.as_str()).zip(&orgs).collect();
        let reqs = &case.spec.schema().requirements;
        let met = reqs
            .iter()
            .filter(|r| social_holds(&case.network, r, by_role[r.role_a.as_str()], by_role[r.role_b.as_str()]))
            .count();
        let satisfied = met == reqs.len();
        if prefs.strict_social && !satisfied {
            continue;
        }
        let mut cost = 0.0;
        for step in case.spec.process_model() {
            let record = &case.registry[by_role[step.role.as_str()]];
            if let Some(cap) = record.capabilities.iter().find(|c| c.name == step.activity) {
                cost += cap.variants[0].cost.amount;
            }
        }
        out.push(Expected {
            competence: combo.iter().map(|c| c.1).sum::<f64>() / combo.len() as f64,
            social: if reqs.is_empty() { 1.0 } else { met as f64 / reqs.len() as f64 },
            satisfied,
            cost,
            orgs,
        });
    }
    let keys = prefs.effective_sort_keys();
    let social_key = keys.iter().any(|k| k.key == SortField::SocialScore);
    out.sort_by(|a, b| {
        let mut o = if social_key { Ordering::Equal } else { b.satisfied.cmp(&a.satisfied) };
        for k in &keys {
            let (x, y) = match k.key {
                SortField::CompetenceScore => (a.competence, b.competence),
                SortField::SocialScore => (a.social, b.social),
                SortField::TotalCost => (a.cost, b.cost),
            };
            let c = x.partial_cmp(&y).unwrap();
            o = o.then(if k.order == SortOrder::Asc { c } else { c.reverse() });
        }
        o.then_with(|| a.orgs.cmp(&b.orgs))
    });
    out
}
