use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Candidate, Candidates, MapssError, Registry, SortField, SortKey, SortOrder, VOSpecification};
use crate::model::{select_variant, CapabilityContext, Money, ModelError, OrgId};
use crate::social::{evaluate_social_requirement, SocialNetwork, SocialRequirement};

pub const DEFAULT_VARIANT_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoleAssignment {
    pub org_id: OrgId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SocialResult {
    pub requirement: SocialRequirement,
    pub satisfied: bool,
}

/// Cost and duration of one process activity under the planning context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LineItem {
    pub activity: String,
    pub role: String,
    pub org_id: OrgId,
    pub capability: String,
    pub variant: String,
    pub cost: Money,
    pub duration: Option<f64>,
}

/// One assignment of organizations to roles with its evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Variant {
    pub assignment: BTreeMap<String, RoleAssignment>,
    pub per_role_score: BTreeMap<String, f64>,
    /// Mean of the per-role scores.
    pub competence_score: f64,
    pub social: Vec<SocialResult>,
    /// Share of satisfied social requirements; 1 without requirements.
    pub social_score: f64,
    pub social_satisfied: bool,
    pub line_items: Vec<LineItem>,
    /// Activities for which the assigned organization offers no capability
    /// variant; they contribute nothing to cost or duration.
    pub unpriced: Vec<String>,
    pub total_cost: Money,
    pub total_duration: f64,
}

impl Variant {
    pub fn org_ids(&self) -> Vec<&OrgId> {
        self.assignment.values().map(|a| &a.org_id).collect()
    }

    fn field(&self, key: SortField) -> f64 {
        match key {
            SortField::CompetenceScore => self.competence_score,
            SortField::SocialScore => self.social_score,
            SortField::TotalCost => self.total_cost.amount,
        }
    }
}

/// Order of variants under `keys`. Unless `socialScore` is a key, variants
/// meeting every social requirement come first. Ties fall back to the
/// organization ids in role order.
pub fn compare_variants(a: &Variant, b: &Variant, keys: &[SortKey]) -> Ordering {
    let mut order = Ordering::Equal;
    if !keys.iter().any(|k| k.key == SortField::SocialScore) {
        order = b.social_satisfied.cmp(&a.social_satisfied);
    }
    for key in keys {
        order = order.then_with(|| {
            let o = a.field(key.key).total_cmp(&b.field(key.key));
            match key.order {
                SortOrder::Asc => o,
                SortOrder::Desc => o.reverse(),
            }
        });
    }
    order.then_with(|| a.org_ids().cmp(&b.org_ids()))
}

/// Enumerates every assignment of role candidates, evaluates it and sorts
/// the result by the specification's preferences.
pub fn generate_variants(
    spec: &VOSpecification,
    candidates: &Candidates,
    registry: &Registry,
    network: &SocialNetwork,
    context: &CapabilityContext,
    cap: u64,
) -> Result<Vec<Variant>, MapssError> {
    let roles: Vec<&String> = spec.roles().keys().collect();
    let lists: Vec<&[Candidate]> = roles
        .iter()
        .map(|r| {
            candidates
                .get(*r)
                .map(|c| c.candidates.as_slice())
                .ok_or_else(|| MapssError::MissingRole((*r).clone()))
        })
        .collect::<Result<_, _>>()?;
    let count = lists.iter().fold(1u128, |acc, l| acc.saturating_mul(l.len() as u128));
    if count > cap as u128 {
        return Err(MapssError::CapExceeded { count, cap });
    }
    let prefs = spec.preferences();
    let mut variants = Vec::new();
    if count == 0 {
        return Ok(variants);
    }
    let mut index = vec![0usize; lists.len()];
    loop {
        let picked: Vec<&Candidate> = index.iter().zip(&lists).map(|(&i, l)| &l[i]).collect();
        let distinct: BTreeSet<&OrgId> = picked.iter().map(|c| &c.org_id).collect();
        if prefs.allow_multi_role_org || distinct.len() == picked.len() {
            let variant = evaluate(spec, &roles, &picked, registry, network, context)?;
            if variant.social_satisfied || !prefs.strict_social {
                variants.push(variant);
            }
        }
        if !advance(&mut index, &lists) {
            break;
        }
    }
    let keys = prefs.effective_sort_keys();
    variants.sort_by(|a, b| compare_variants(a, b, &keys));
    Ok(variants)
}

fn advance(index: &mut [usize], lists: &[&[Candidate]]) -> bool {
    for pos in (0..index.len()).rev() {
        index[pos] += 1;
        if index[pos] < lists[pos].len() {
            return true;
        }
        index[pos] = 0;
    }
    false
}

fn evaluate(
    spec: &VOSpecification,
    roles: &[&String],
    picked: &[&Candidate],
    registry: &Registry,
    network: &SocialNetwork,
    context: &CapabilityContext,
) -> Result<Variant, MapssError> {
    let mut v = Variant::default();
    for (role, c) in roles.iter().zip(picked) {
        v.assignment.insert(
            (*role).clone(),
            RoleAssignment {
                org_id: c.org_id.clone(),
                service: c.service.clone(),
            },
        );
        v.per_role_score.insert((*role).clone(), c.score);
    }
    v.competence_score = picked.iter().map(|c| c.score).sum::<f64>() / picked.len() as f64;

    let orgs: BTreeMap<String, OrgId> = v
        .assignment
        .iter()
        .map(|(r, a)| (r.clone(), a.org_id.clone()))
        .collect();
    for req in &spec.schema().requirements {
        let satisfied = evaluate_social_requirement(req, &orgs, network)?;
        v.social.push(SocialResult {
            requirement: req.clone(),
            satisfied,
        });
    }
    let met = v.social.iter().filter(|s| s.satisfied).count();
    v.social_score = if v.social.is_empty() {
        1.0
    } else {
        met as f64 / v.social.len() as f64
    };
    v.social_satisfied = met == v.social.len();

    let mut currency: Option<String> = None;
    for step in spec.process_model() {
        let org = &orgs[&step.role];
        let record = registry
            .get(org)
            .ok_or_else(|| MapssError::UnknownOrganization(org.clone()))?;
        let Some(capability) = record.capability_for_activity(&step.activity) else {
            v.unpriced.push(step.activity.clone());
            continue;
        };
        let chosen = match select_variant(&capability.id, context, record) {
            Ok(chosen) => chosen,
            Err(ModelError::NoVariant { .. }) => {
                v.unpriced.push(step.activity.clone());
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        match &currency {
            Some(c) if *c != chosen.cost.currency => {
                return Err(MapssError::MixedCurrency(c.clone(), chosen.cost.currency.clone()))
            }
            Some(_) => {}
            None => currency = Some(chosen.cost.currency.clone()),
        }
        v.total_cost.amount += chosen.cost.amount;
        v.total_duration += chosen.duration().unwrap_or(0.0);
        v.line_items.push(LineItem {
            activity: step.activity.clone(),
            role: step.role.clone(),
            org_id: org.clone(),
            capability: capability.id.clone(),
            variant: chosen.id.clone(),
            cost: chosen.cost.clone(),
            duration: chosen.duration(),
        });
    }
    v.total_cost.currency = currency.unwrap_or_default();
    Ok(v)
}
