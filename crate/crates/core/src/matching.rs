//! Organization-class instance checking, weighted scoring and ranking.
//!
//! Instancehood follows the AND/OR/NOT structure of the class. The score is
//! structure-independent: `Σ wᵢ·satᵢ / Σ wᵢ` over the leaves, with binary
//! leaf satisfaction.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dsl::{eval_predicate, print_requirement, EvalError, Expr, OrganizationClass, Requirement};
use crate::model::OrgId;
use crate::value::PropertyView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Detail {
    Satisfied,
    ValueMismatch,
    PropertyMissing,
    TypeError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RequirementResult {
    pub requirement: Requirement,
    /// Canonical text of the requirement, for display.
    pub text: String,
    pub satisfied: bool,
    pub detail: Detail,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InstanceReport {
    pub is_instance: bool,
    /// One entry per leaf, in definition order.
    pub results: Vec<RequirementResult>,
    pub has_type_errors: bool,
}

/// Evaluates `class` over `view`. Missing properties and type errors make a
/// leaf unsatisfied; type errors are also flagged on the report.
pub fn is_instance(view: &PropertyView, class: &OrganizationClass) -> InstanceReport {
    let results: Vec<RequirementResult> = class
        .leaves()
        .into_iter()
        .map(|req| evaluate_leaf(view, req))
        .collect();
    let mut cursor = results.iter().map(|r| r.satisfied);
    let is_instance = eval_tree(&class.expr, &mut cursor);
    let has_type_errors = results.iter().any(|r| r.detail == Detail::TypeError);
    InstanceReport {
        is_instance,
        results,
        has_type_errors,
    }
}

fn evaluate_leaf(view: &PropertyView, req: &Requirement) -> RequirementResult {
    let (satisfied, detail, message) = match eval_predicate(&req.predicate, view.get(req.path.as_str())) {
        Ok(true) => (true, Detail::Satisfied, None),
        Ok(false) if view.get(req.path.as_str()).is_none() => (false, Detail::PropertyMissing, None),
        Ok(false) => (false, Detail::ValueMismatch, None),
        Err(EvalError::PropertyMissing) => (false, Detail::PropertyMissing, None),
        Err(err @ EvalError::TypeMismatch { .. }) => (false, Detail::TypeError, Some(err.to_string())),
    };
    RequirementResult {
        requirement: req.clone(),
        text: print_requirement(req),
        satisfied,
        detail,
        message,
    }
}

// Every child is evaluated (no short-circuit) so the cursor stays aligned.
fn eval_tree(expr: &Expr, leaves: &mut impl Iterator<Item = bool>) -> bool {
    match expr {
        Expr::Req(_) => leaves.next().expect("one result per leaf"),
        Expr::And(children) => children
            .iter()
            .map(|c| eval_tree(c, leaves))
            .fold(true, |acc, v| acc & v),
        Expr::Or(children) => children
            .iter()
            .map(|c| eval_tree(c, leaves))
            .fold(false, |acc, v| acc | v),
        Expr::Not(child) => !eval_tree(child, leaves),
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeightError {
    #[error("class has {expected} requirements but {found} weights were given")]
    Count { expected: usize, found: usize },
    #[error("weight {weight} of requirement #{index} is not a positive finite number")]
    NotPositive { index: usize, weight: f64 },
    #[error("no weight given for requirement `{0}`")]
    Missing(String),
    #[error("weight given for unknown requirement `{0}`")]
    Unknown(String),
    #[error("invalid class: {0}")]
    InvalidClass(String),
}

/// Weights as written in documents: a list aligned with the leaves, or a map
/// keyed by the canonical requirement text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    List(Vec<f64>),
    Named(BTreeMap<String, f64>),
}

/// A class together with one positive weight per leaf.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedClass {
    class: OrganizationClass,
    weights: Vec<f64>,
}

impl WeightedClass {
    pub fn new(class: OrganizationClass, weights: Vec<f64>) -> Result<Self, WeightError> {
        class.validate().map_err(WeightError::InvalidClass)?;
        let expected = class.expr.leaf_count();
        if weights.len() != expected {
            return Err(WeightError::Count {
                expected,
                found: weights.len(),
            });
        }
        if let Some((index, &weight)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(WeightError::NotPositive { index, weight });
        }
        Ok(WeightedClass { class, weights })
    }

    /// Every leaf weighted 1.
    pub fn uniform(class: OrganizationClass) -> Result<Self, WeightError> {
        let n = class.expr.leaf_count();
        Self::new(class, vec![1.0; n])
    }

    pub fn from_spec(class: OrganizationClass, spec: Option<&WeightSpec>) -> Result<Self, WeightError> {
        match spec {
            None => Self::uniform(class),
            Some(WeightSpec::List(weights)) => Self::new(class, weights.clone()),
            Some(WeightSpec::Named(named)) => {
                let texts: Vec<String> = class.leaves().into_iter().map(print_requirement).collect();
                if let Some(unknown) = named.keys().find(|k| !texts.contains(k)) {
                    return Err(WeightError::Unknown(unknown.clone()));
                }
                let weights = texts
                    .iter()
                    .map(|t| named.get(t).copied().ok_or_else(|| WeightError::Missing(t.clone())))
                    .collect::<Result<Vec<_>, _>>()?;
                Self::new(class, weights)
            }
        }
    }

    pub fn class(&self) -> &OrganizationClass {
        &self.class
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Multiplies every weight by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Result<Self, WeightError> {
        Self::new(
            self.class.clone(),
            self.weights.iter().map(|w| w * factor).collect(),
        )
    }
}

/// Weighted share of satisfied leaves of an existing report.
pub fn score_report(report: &InstanceReport, weights: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    let satisfied: f64 = report
        .results
        .iter()
        .zip(weights)
        .filter(|(r, _)| r.satisfied)
        .map(|(_, w)| w)
        .sum();
    if total > 0.0 {
        (satisfied / total).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

pub fn score(view: &PropertyView, weighted: &WeightedClass) -> f64 {
    score_report(&is_instance(view, &weighted.class), &weighted.weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankedOrg {
    pub org_id: OrgId,
    pub score: f64,
    pub is_instance: bool,
    pub results: Vec<RequirementResult>,
}

/// Total order used for rankings: instances first, then higher score,
/// then ascending org id.
pub fn ranking_order(a: (&OrgId, bool, f64), b: (&OrgId, bool, f64)) -> Ordering {
    b.1.cmp(&a.1)
        .then_with(|| b.2.total_cmp(&a.2))
        .then_with(|| a.0.cmp(b.0))
}

pub fn rank<'a, I>(views: I, weighted: &WeightedClass) -> Vec<RankedOrg>
where
    I: IntoIterator<Item = (&'a OrgId, &'a PropertyView)>,
{
    let mut ranked: Vec<RankedOrg> = views
        .into_iter()
        .map(|(org_id, view)| {
            let report = is_instance(view, &weighted.class);
            RankedOrg {
                org_id: org_id.clone(),
                score: score_report(&report, &weighted.weights),
                is_instance: report.is_instance,
                results: report.results,
            }
        })
        .collect();
    ranked.sort_by(|a, b| {
        ranking_order((&a.org_id, a.is_instance, a.score), (&b.org_id, b.is_instance, b.score))
    });
    ranked
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoredOrg {
    pub org_id: OrgId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RoleMatches {
    /// Instances of the role's class, best first.
    pub candidates: Vec<ScoredOrg>,
    /// Set when no organization qualifies; the planner should relax the
    /// requirements.
    pub needs_relaxation: bool,
}

pub fn candidates_for_role<'a, I>(weighted: &WeightedClass, views: I) -> RoleMatches
where
    I: IntoIterator<Item = (&'a OrgId, &'a PropertyView)>,
{
    let candidates: Vec<ScoredOrg> = rank(views, weighted)
        .into_iter()
        .filter(|r| r.is_instance)
        .map(|r| ScoredOrg {
            org_id: r.org_id,
            score: r.score,
        })
        .collect();
    RoleMatches {
        needs_relaxation: candidates.is_empty(),
        candidates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_class, parse_expr};
    use crate::fixtures;
    use crate::model::flatten_properties;

    fn details(report: &InstanceReport) -> Vec<Detail> {
        report.results.iter().map(|r| r.detail).collect()
    }

    #[test]
    fn software_dev_is_instance() {
        let report = is_instance(
            &flatten_properties(&fixtures::software_dev()),
            &fixtures::polish_software_company(),
        );
        assert!(report.is_instance);
        assert_eq!(details(&report), vec![Detail::Satisfied; 3]);
    }

    #[test]
    fn softis_is_not_instance() {
        let report = is_instance(&fixtures::softis_view(), &fixtures::polish_software_company());
        assert!(!report.is_instance);
        assert_eq!(
            details(&report),
            vec![Detail::ValueMismatch, Detail::Satisfied, Detail::PropertyMissing]
        );
    }

    #[test]
    fn existence_of_name() {
        let class = parse_class("class Named { organization:profile:name exists }").unwrap();
        let report = is_instance(&flatten_properties(&fixtures::softis()), &class);
        assert!(report.is_instance);
        assert_eq!(details(&report), vec![Detail::Satisfied]);
    }

    #[test]
    fn type_error_is_flagged_and_unsatisfied() {
        let class = parse_class("class T { organization:profile:localization >= 3 }").unwrap();
        let report = is_instance(&flatten_properties(&fixtures::software_dev()), &class);
        assert!(!report.is_instance);
        assert!(report.has_type_errors);
        assert_eq!(details(&report), vec![Detail::TypeError]);
    }

    #[test]
    fn weighted_sum_example() {
        // Leaves: true, true, false with weights 0.5, 0.3, 0.2.
        let class = OrganizationClass {
            name: "w".into(),
            expr: parse_expr(
                "organization:profile:localization = \"Poland\" OR competence:name includes {\"Java programming\"} OR capability:name includes {\"Cooking\"}",
            )
            .unwrap(),
        };
        let weighted = WeightedClass::new(class, vec![0.5, 0.3, 0.2]).unwrap();
        let s = score(&flatten_properties(&fixtures::software_dev()), &weighted);
        assert!((s - 0.8).abs() < 1e-12, "{s}");
    }

    #[test]
    fn score_extremes() {
        let view = flatten_properties(&fixtures::software_dev());
        let all = WeightedClass::new(fixtures::polish_software_company(), vec![3.0, 0.1, 7.0]).unwrap();
        assert_eq!(score(&view, &all), 1.0);
        let none = parse_class("class N { organization:profile:localization = \"Chile\"\n competence:name includes {\"Cooking\"} }").unwrap();
        assert_eq!(score(&view, &WeightedClass::uniform(none).unwrap()), 0.0);
    }

    #[test]
    fn rank_puts_instances_first_and_breaks_ties_by_id() {
        let dev = flatten_properties(&fixtures::software_dev());
        let softis = fixtures::softis_view();
        let (a, b, c) = (OrgId::from("SoftwareDev"), OrgId::from("Softis"), OrgId::from("AAA"));
        let weighted = WeightedClass::uniform(fixtures::polish_software_company()).unwrap();
        let ranked = rank([(&b, &softis), (&a, &dev), (&c, &softis)], &weighted);
        let order: Vec<&str> = ranked.iter().map(|r| r.org_id.as_str()).collect();
        assert_eq!(order, vec!["SoftwareDev", "AAA", "Softis"]);
        assert!(ranked[0].is_instance && !ranked[1].is_instance);
        assert!(ranked[1].score < 1.0);
    }

    #[test]
    fn weights_validation() {
        let class = fixtures::polish_software_company();
        assert!(matches!(
            WeightedClass::new(class.clone(), vec![1.0]),
            Err(WeightError::Count { .. })
        ));
        assert!(matches!(
            WeightedClass::new(class.clone(), vec![1.0, 0.0, 1.0]),
            Err(WeightError::NotPositive { index: 1, .. })
        ));
        let named = BTreeMap::from([
            ("organization:profile:localization = \"Poland\"".to_string(), 2.0),
            ("competence:name includes {\"Java programming\"}".to_string(), 1.0),
            ("capability:name includes {\"Server administration\"}".to_string(), 1.0),
        ]);
        let w = WeightedClass::from_spec(class.clone(), Some(&WeightSpec::Named(named))).unwrap();
        assert_eq!(w.weights(), &[2.0, 1.0, 1.0]);
        let partial = BTreeMap::from([("nope".to_string(), 1.0)]);
        assert!(matches!(
            WeightedClass::from_spec(class, Some(&WeightSpec::Named(partial))),
            Err(WeightError::Unknown(_))
        ));
    }

    #[test]
    fn candidates_and_relaxation() {
        let dev = flatten_properties(&fixtures::software_dev());
        let softis = flatten_properties(&fixtures::softis());
        let (a, b) = (OrgId::from("SoftwareDev"), OrgId::from("Softis"));
        let weighted = WeightedClass::uniform(fixtures::polish_software_company()).unwrap();
        let found = candidates_for_role(&weighted, [(&a, &dev), (&b, &softis)]);
        assert_eq!(found.candidates, vec![ScoredOrg { org_id: a.clone(), score: 1.0 }]);
        assert!(!found.needs_relaxation);

        let impossible = parse_class("class I { organization:profile:numberOfEmployees < 0 }").unwrap();
        let found = candidates_for_role(&WeightedClass::uniform(impossible).unwrap(), [(&a, &dev), (&b, &softis)]);
        assert!(found.candidates.is_empty() && found.needs_relaxation);

        let everyone = parse_class("class E { organization:profile:name exists }").unwrap();
        let found = candidates_for_role(&WeightedClass::uniform(everyone).unwrap(), [(&a, &dev), (&b, &softis)]);
        assert_eq!(found.candidates.len(), 2);
    }
}
