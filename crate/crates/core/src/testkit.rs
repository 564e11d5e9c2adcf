//! Seeded generators for records, classes, property views, networks and
//! planning cases. Everything is deterministic for a given seed.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dsl::{Expr, OrganizationClass, Predicate, Requirement};
use crate::mapss::{
    define_spec, Candidate, Candidates, Preferences, ProcessStep, Registry, RoleCandidates, RoleDocument,
    SortField, SortKey, SortOrder, SpecDocument, VOSpecification,
};
use crate::model::{
    Activity, Capability, CapabilityContext, CapabilityVariant, Capacity, Claim, ClaimValue, Competence,
    Conspicuity, ConspicuityKind, ContextTriple, Money, OrgId, OrganizationProfile, OrganizationRecord, Product,
    Resource, ServiceProfile, TargetKind, TargetRef,
};
use crate::social::{Constraint, Edge, Opinion, RelationType, SocialNetwork, SocialNetworkSchema, SocialRequirement};
use crate::value::{PropertyValue, PropertyView, Value};

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

const COUNTRIES: &[&str] = &["Poland", "Germany", "France", "Portugal", "Spain", "Italy"];
const SKILLS: &[&str] = &[
    "Java programming",
    "Ruby programming",
    "Python programming",
    "server administration",
    "software testing",
    "network configuration",
    "system modelling",
    "requirements gathering",
];
const SEASONS: &[&str] = &["holidays", "winter", "summer"];
const CURRENCY: &str = "EUR";

// ---------------------------------------------------------------------------
// Records

/// A record passing every validation rule. It always has at least two
/// competences, each externalized by its own service, so every corruption
/// in [`Corruption`] applies.
pub fn random_record(rng: &mut TestRng, org_id: &str) -> OrganizationRecord {
    let org = OrgId::from(org_id);
    let n_caps = rng.random_range(2..=6);
    let mut record = OrganizationRecord {
        organization_profile: OrganizationProfile {
            id: org.clone(),
            version: 1,
            name: format!("{org_id} Ltd"),
            localization: COUNTRIES.choose(rng).unwrap().to_string(),
            creation_date: NaiveDate::from_ymd_opt(rng.random_range(1990..=2020), rng.random_range(1..=12), 1)
                .unwrap(),
            number_of_employees: rng.random_range(1..500),
            memberships: BTreeSet::from(["SOVOBE".to_string()]),
            contact: format!("office@{org_id}.example"),
            financial_capital: rng
                .random_bool(0.5)
                .then(|| Money::new(rng.random_range(1..1000) as f64 * 1000.0, CURRENCY)),
            board: Vec::new(),
            extra: BTreeMap::new(),
        },
        competences: Vec::new(),
        capabilities: Vec::new(),
        activities: Vec::new(),
        products: Vec::new(),
        resources: vec![Resource {
            id: "res-staff".into(),
            version: 1,
            name: "staff".into(),
            kind: "human".into(),
        }],
        services: Vec::new(),
        conspicuities: Vec::new(),
    };

    let mut skills: Vec<&str> = SKILLS.to_vec();
    skills.sort_by_key(|_| rng.random::<u32>());
    for (i, skill) in skills.iter().take(n_caps).enumerate() {
        record.products.push(Product {
            id: format!("prod-{i}"),
            version: 1,
            name: format!("{skill} result"),
        });
        record.activities.push(Activity {
            id: format!("act-{i}"),
            version: 1,
            name: skill.to_string(),
            product_ref: format!("prod-{i}"),
        });
        let mut variants = vec![random_variant(rng, format!("cap-{i}-v0"), CapabilityContext::default())];
        let n_seasons = rng.random_range(0..=2);
        let seasons: Vec<&&str> = SEASONS.choose_multiple(rng, n_seasons).collect();
        for (k, season) in seasons.into_iter().enumerate() {
            let context = CapabilityContext::new([ContextTriple::new("season", "is", *season)]);
            variants.push(random_variant(rng, format!("cap-{i}-v{}", k + 1), context));
        }
        let versions = rng.random_range(1..=2);
        for version in 1..=versions {
            record.capabilities.push(Capability {
                id: format!("cap-{i}"),
                version,
                name: skill.to_string(),
                activity_ref: format!("act-{i}"),
                variants: variants.clone(),
                conspicuity_refs: BTreeSet::new(),
            });
        }
    }

    let n_comps = rng.random_range(2..=4);
    for c in 0..n_comps {
        let mut capability_refs: BTreeSet<String> = (0..n_caps)
            .filter(|_| rng.random_bool(0.4))
            .map(|i| format!("cap-{i}"))
            .collect();
        let sub_competence_refs: BTreeSet<String> = (0..c)
            .filter(|_| rng.random_bool(0.3))
            .map(|s| format!("comp-{s}"))
            .collect();
        if capability_refs.is_empty() {
            capability_refs.insert(format!("cap-{}", rng.random_range(0..n_caps)));
        }
        let name = format!("{} delivery", skills[c % n_caps]);
        record.competences.push(Competence {
            id: format!("comp-{c}"),
            version: 1,
            name,
            capability_refs,
            sub_competence_refs,
            externalizing_service_ref: Some(format!("svc-{c}")),
            conspicuity_refs: BTreeSet::new(),
        });
        let component_service_refs = (0..c)
            .filter(|_| rng.random_bool(0.3))
            .map(|s| format!("svc-{s}"))
            .collect();
        let mut business_info = BTreeMap::new();
        business_info.insert(
            "strategicGoal".to_string(),
            serde_json::Value::String(["growth", "quality", "public sector"].choose(rng).unwrap().to_string()),
        );
        record.services.push(ServiceProfile {
            id: format!("svc-{c}"),
            version: 1,
            owner_org_id: org.clone(),
            name: format!("service {c}"),
            competence_ref: format!("comp-{c}"),
            component_service_refs,
            business_info,
        });
    }

    if rng.random_bool(0.6) {
        record.conspicuities.push(Conspicuity {
            id: "ref-projects".into(),
            version: 1,
            kind: ConspicuityKind::ReferenceLetter,
            document_ref: "docs/references.pdf".into(),
            claim: Some(Claim {
                claim_kind: "collaborationCount".into(),
                claim_value: ClaimValue::Number(rng.random_range(0..12) as f64),
            }),
            target_ref: TargetRef {
                kind: TargetKind::Organization,
                id: org_id.to_string(),
                index: None,
            },
        });
    }
    if rng.random_bool(0.4) {
        record.conspicuities.push(Conspicuity {
            id: "cert".into(),
            version: 1,
            kind: ConspicuityKind::Certificate,
            document_ref: "docs/cert.pdf".into(),
            claim: None,
            target_ref: TargetRef {
                kind: TargetKind::Cost,
                id: "cap-0-v0".into(),
                index: None,
            },
        });
    }
    record
}

fn random_variant(rng: &mut TestRng, id: String, context: CapabilityContext) -> CapabilityVariant {
    let mut properties = BTreeMap::new();
    properties.insert("duration".to_string(), serde_json::json!(rng.random_range(1..30)));
    CapabilityVariant {
        id,
        version: 1,
        context,
        cost: Money::new(rng.random_range(10..200) as f64, CURRENCY),
        capacities: vec![Capacity {
            resource_ref: Some("res-staff".into()),
            amount: rng.random_range(1..10) as f64,
            unit: "persons".into(),
        }],
        properties,
    }
}

/// Ways of breaking a valid record from [`random_record`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    /// Two services externalize the same competence.
    CompetenceServicePairing,
    CompetenceCycle,
    ServiceCycle,
    /// Two variants of one capability share a context.
    DuplicateVariantContext,
    /// An entity jumps from version 1 to version 3.
    VersionGap,
}

impl Corruption {
    pub const ALL: [Corruption; 5] = [
        Corruption::CompetenceServicePairing,
        Corruption::CompetenceCycle,
        Corruption::ServiceCycle,
        Corruption::DuplicateVariantContext,
        Corruption::VersionGap,
    ];

    pub fn apply(self, record: &OrganizationRecord) -> OrganizationRecord {
        let mut r = record.clone();
        match self {
            Corruption::CompetenceServicePairing => {
                let target = r.services[0].competence_ref.clone();
                r.services[1].competence_ref = target;
            }
            Corruption::CompetenceCycle => {
                let (a, b) = (r.competences[0].id.clone(), r.competences[1].id.clone());
                r.competences[0].sub_competence_refs.insert(b);
                r.competences[1].sub_competence_refs.insert(a);
            }
            Corruption::ServiceCycle => {
                let (a, b) = (r.services[0].id.clone(), r.services[1].id.clone());
                r.services[0].component_service_refs.insert(b);
                r.services[1].component_service_refs.insert(a);
            }
            Corruption::DuplicateVariantContext => {
                let last = r
                    .capabilities
                    .iter()
                    .rposition(|c| c.id == "cap-0")
                    .expect("cap-0 exists");
                let cap = &mut r.capabilities[last];
                let mut copy = cap.variants[0].clone();
                copy.id = "cap-0-copy".into();
                cap.variants.push(copy);
            }
            Corruption::VersionGap => {
                let mut next = r.competences[0].clone();
                next.version = 3;
                r.competences.push(next);
            }
        }
        r
    }
}

/// A record whose capabilities perform `activities` (name, cost, duration)
/// with one default variant each.
pub fn minimal_record(org_id: &str, activities: &[(&str, f64, f64)]) -> OrganizationRecord {
    let mut record = OrganizationRecord {
        organization_profile: OrganizationProfile {
            id: OrgId::from(org_id),
            version: 1,
            name: org_id.to_string(),
            localization: "Poland".into(),
            creation_date: NaiveDate::from_ymd_opt(2010, 1, 1).unwrap(),
            number_of_employees: 10,
            memberships: BTreeSet::new(),
            contact: String::new(),
            financial_capital: None,
            board: Vec::new(),
            extra: BTreeMap::new(),
        },
        competences: Vec::new(),
        capabilities: Vec::new(),
        activities: Vec::new(),
        products: Vec::new(),
        resources: Vec::new(),
        services: Vec::new(),
        conspicuities: Vec::new(),
    };
    for (i, (name, cost, duration)) in activities.iter().enumerate() {
        record.products.push(Product {
            id: format!("prod-{i}"),
            version: 1,
            name: format!("{name} result"),
        });
        record.activities.push(Activity {
            id: format!("act-{i}"),
            version: 1,
            name: name.to_string(),
            product_ref: format!("prod-{i}"),
        });
        let mut properties = BTreeMap::new();
        properties.insert("duration".to_string(), serde_json::json!(duration));
        record.capabilities.push(Capability {
            id: format!("cap-{i}"),
            version: 1,
            name: name.to_string(),
            activity_ref: format!("act-{i}"),
            variants: vec![CapabilityVariant {
                id: format!("cap-{i}-default"),
                version: 1,
                context: CapabilityContext::default(),
                cost: Money::new(*cost, CURRENCY),
                capacities: Vec::new(),
                properties,
            }],
            conspicuity_refs: BTreeSet::new(),
        });
    }
    if !activities.is_empty() {
        record.competences.push(Competence {
            id: "comp-all".into(),
            version: 1,
            name: "all activities".into(),
            capability_refs: (0..activities.len()).map(|i| format!("cap-{i}")).collect(),
            sub_competence_refs: BTreeSet::new(),
            externalizing_service_ref: None,
            conspicuity_refs: BTreeSet::new(),
        });
    }
    record
}

// ---------------------------------------------------------------------------
// Classes

const SEGMENTS: &[&str] = &["organization", "profile", "competence", "capability", "name", "service", "x_1", "a-b", "_k"];
const PATTERNS: &[&str] = &["Pol.*", "[A-Z][a-z]+", "a|b", ".*land", "(ab)+", "\\d{2}"];
const WORDS: &[&str] = &["Poland", "Java programming", "a \"quoted\" word", "back\\slash", "tab\there", "line\nbreak", "zażółć", ""];

fn random_path(rng: &mut TestRng) -> String {
    let n = rng.random_range(1..=4);
    loop {
        let path: Vec<&str> = (0..n).map(|_| *SEGMENTS.choose(rng).unwrap()).collect();
        let text = path.join(":");
        if crate::dsl::PropertyPath::parse(&text).is_ok() {
            return text;
        }
    }
}

pub fn random_number(rng: &mut TestRng) -> f64 {
    match rng.random_range(0..4) {
        0 => rng.random_range(-1000..1000) as f64,
        1 => rng.random_range(-1.0e6..1.0e6),
        2 => rng.random::<f64>() * 1e-6,
        _ => rng.random_range(0..100) as f64 / 4.0,
    }
}

pub fn random_date(rng: &mut TestRng) -> NaiveDate {
    NaiveDate::from_ymd_opt(rng.random_range(1950..=2030), rng.random_range(1..=12), rng.random_range(1..=28)).unwrap()
}

pub fn random_scalar(rng: &mut TestRng) -> Value {
    match rng.random_range(0..4) {
        0 => Value::text(*WORDS.choose(rng).unwrap()),
        1 => Value::Number(random_number(rng)),
        2 => Value::Date(random_date(rng)),
        _ => Value::Bool(rng.random_bool(0.5)),
    }
}

fn random_ordered(rng: &mut TestRng) -> Value {
    if rng.random_bool(0.5) {
        Value::Number(random_number(rng))
    } else {
        Value::Date(random_date(rng))
    }
}

pub fn random_predicate(rng: &mut TestRng) -> Predicate {
    match rng.random_range(0..9) {
        0 => Predicate::Equals(random_scalar(rng)),
        1 => Predicate::NotEquals(random_scalar(rng)),
        2 => Predicate::LessThan(random_ordered(rng)),
        3 => Predicate::AtLeast(random_ordered(rng)),
        4 => Predicate::AtMost(random_ordered(rng)),
        5 => {
            let n = rng.random_range(1..=4);
            Predicate::IncludesAll((0..n).map(|_| random_scalar(rng)).collect())
        }
        6 => Predicate::ContainsElement(random_scalar(rng)),
        7 => Predicate::Matches(PATTERNS.choose(rng).unwrap().to_string()),
        _ => Predicate::Exists,
    }
}

pub fn random_requirement(rng: &mut TestRng) -> Requirement {
    Requirement::new(&random_path(rng), random_predicate(rng)).expect("generated path is valid")
}

/// A valid expression tree of at most `depth` levels of operators.
pub fn random_expr(rng: &mut TestRng, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.35) {
        return Expr::Req(random_requirement(rng));
    }
    match rng.random_range(0..3) {
        0 => Expr::And((0..rng.random_range(2..=3)).map(|_| random_expr(rng, depth - 1)).collect()),
        1 => Expr::Or((0..rng.random_range(2..=3)).map(|_| random_expr(rng, depth - 1)).collect()),
        _ => Expr::Not(Box::new(random_expr(rng, depth - 1))),
    }
}

pub fn random_class(rng: &mut TestRng) -> OrganizationClass {
    let name = format!("{} #{}", WORDS.choose(rng).unwrap(), rng.random_range(0..1000));
    OrganizationClass {
        name,
        expr: random_expr(rng, 4),
    }
}

/// A conjunction of `n` leaves (n >= 1).
pub fn random_conjunction(rng: &mut TestRng, n: usize) -> OrganizationClass {
    let leaves: Vec<Requirement> = (0..n).map(|_| random_requirement(rng)).collect();
    OrganizationClass::conjunction("conjunction", leaves).expect("nonempty")
}

// ---------------------------------------------------------------------------
// Property views

/// A view over the class's paths whose values satisfy, fail, are missing
/// or have the wrong type, chosen at random per leaf.
pub fn random_view_for(rng: &mut TestRng, class: &OrganizationClass) -> PropertyView {
    let mut view = PropertyView::default();
    for leaf in class.leaves() {
        if rng.random_bool(0.15) {
            continue;
        }
        view.insert(leaf.path.as_str(), value_near(rng, &leaf.predicate));
    }
    view
}

fn value_near(rng: &mut TestRng, predicate: &Predicate) -> PropertyValue {
    let scalar = |v: Value| PropertyValue::Scalar(v);
    if rng.random_bool(0.1) {
        return match predicate {
            Predicate::IncludesAll(_) | Predicate::ContainsElement(_) => scalar(random_scalar(rng)),
            _ => PropertyValue::set([random_scalar(rng)]),
        };
    }
    match predicate {
        Predicate::Equals(v) | Predicate::NotEquals(v) => {
            if rng.random_bool(0.5) {
                scalar(v.clone())
            } else {
                scalar(same_kind(rng, v))
            }
        }
        Predicate::LessThan(v) | Predicate::AtLeast(v) | Predicate::AtMost(v) => match rng.random_range(0..3) {
            0 => scalar(v.clone()),
            _ => scalar(same_kind(rng, v)),
        },
        Predicate::IncludesAll(set) => {
            let mut values: BTreeSet<Value> = set.iter().filter(|_| rng.random_bool(0.7)).cloned().collect();
            if rng.random_bool(0.5) {
                values.insert(random_scalar(rng));
            }
            PropertyValue::Set(values)
        }
        Predicate::ContainsElement(v) => {
            let mut values = BTreeSet::from([random_scalar(rng)]);
            if rng.random_bool(0.5) {
                values.insert(v.clone());
            }
            PropertyValue::Set(values)
        }
        Predicate::Matches(_) => scalar(Value::text(*["Poland", "ab", "b", "Xy", "12", "Finland"].choose(rng).unwrap())),
        Predicate::Exists => scalar(random_scalar(rng)),
    }
}

fn same_kind(rng: &mut TestRng, v: &Value) -> Value {
    match v {
        Value::Text(_) => Value::text(*WORDS.choose(rng).unwrap()),
        Value::Number(n) => Value::Number(n + rng.random_range(-2..=2) as f64),
        Value::Date(d) => Value::Date(*d + chrono::Days::new(rng.random_range(0..3)) - chrono::Days::new(1)),
        Value::Bool(_) => Value::Bool(rng.random_bool(0.5)),
    }
}

// ---------------------------------------------------------------------------
// Networks

const RELATIONS: [RelationType; 4] = [
    RelationType::PastCollaboration,
    RelationType::Recognition,
    RelationType::Trust,
    RelationType::FinancialExchange,
];

/// A network on `orgs` where each ordered pair gets each relation type with
/// probability `density`.
pub fn random_network(rng: &mut TestRng, orgs: &[OrgId], density: f64) -> SocialNetwork {
    let mut network = SocialNetwork::new();
    for org in orgs {
        network.add_node(org.clone());
    }
    for a in orgs {
        for b in orgs {
            if a == b {
                continue;
            }
            for relation in &RELATIONS {
                if relation.is_symmetric() && a > b {
                    continue;
                }
                if rng.random_bool(density) {
                    let weight = if relation.is_rating() {
                        rng.random_range(0..=10) as f64 / 10.0
                    } else {
                        rng.random_range(1..=5) as f64
                    };
                    network
                        .add_edge(Edge::new(a.clone(), b.clone(), relation.clone(), weight))
                        .expect("generated edge is valid");
                }
            }
            if rng.random_bool(density / 2.0) {
                network
                    .add_opinion(Opinion {
                        author: a.clone(),
                        subject: b.clone(),
                        rating: rng.random_range(0..=10) as f64 / 10.0,
                        text: String::new(),
                    })
                    .expect("generated opinion is valid");
            }
        }
    }
    network
}

pub fn random_constraint(rng: &mut TestRng, relation: &RelationType) -> Constraint {
    match rng.random_range(0..4) {
        0 => Constraint::EdgeExists,
        1 if relation.is_rating() => Constraint::WeightAtLeast(rng.random_range(0..=10) as f64 / 10.0),
        1 => Constraint::WeightAtLeast(rng.random_range(0..=4) as f64),
        2 => Constraint::CountAtLeast(rng.random_range(0..=4)),
        _ => Constraint::PathWithin(rng.random_range(1..=3)),
    }
}

// ---------------------------------------------------------------------------
// Planning

/// Inputs of one variant-generation run.
#[derive(Debug, Clone)]
pub struct PlanningCase {
    pub spec: VOSpecification,
    pub candidates: Candidates,
    pub registry: Registry,
    pub network: SocialNetwork,
}

/// Up to five roles with up to six candidates each, drawn from a pool of
/// organizations, and up to three social requirements.
pub fn random_planning_case(rng: &mut TestRng) -> PlanningCase {
    let n_roles = rng.random_range(1..=5);
    let roles: Vec<String> = (0..n_roles).map(|i| format!("role-{i}")).collect();
    let pool: Vec<OrgId> = (0..8).map(|i| OrgId::from(format!("org-{i}"))).collect();

    let process_model: Vec<ProcessStep> = roles
        .iter()
        .enumerate()
        .flat_map(|(i, role)| {
            let steps = rng.random_range(1..=2);
            (0..steps)
                .map(|k| ProcessStep {
                    activity: format!("activity-{i}-{k}"),
                    role: role.clone(),
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let registry: Registry = pool
        .iter()
        .map(|org| {
            let mut offered: Vec<(&str, f64, f64)> = Vec::new();
            for s in &process_model {
                if rng.random_bool(0.8) {
                    offered.push((
                        s.activity.as_str(),
                        rng.random_range(1..=5) as f64 * 10.0,
                        rng.random_range(1..=5) as f64,
                    ));
                }
            }
            (org.clone(), minimal_record(org.as_str(), &offered))
        })
        .collect();

    let mut schema = SocialNetworkSchema::default();
    if n_roles >= 2 {
        for _ in 0..rng.random_range(0..=3) {
            let picked: Vec<&String> = roles.choose_multiple(rng, 2).collect();
            let relation = [RelationType::PastCollaboration, RelationType::Trust]
                .choose(rng)
                .unwrap()
                .clone();
            schema.requirements.push(SocialRequirement {
                role_a: picked[0].clone(),
                role_b: picked[1].clone(),
                constraint: random_constraint(rng, &relation),
                relation,
            });
        }
    }

    let fields = [SortField::CompetenceScore, SortField::SocialScore, SortField::TotalCost];
    let n_keys = rng.random_range(0..=3);
    let picked: Vec<SortField> = fields.choose_multiple(rng, n_keys).copied().collect();
    let sort_keys: Vec<SortKey> = picked
        .into_iter()
        .map(|key| SortKey {
            key,
            order: if rng.random_bool(0.5) { SortOrder::Asc } else { SortOrder::Desc },
        })
        .collect();
    let preferences = Preferences {
        sort_keys,
        min_acceptable_score: 0.0,
        allow_multi_role_org: rng.random_bool(0.7),
        strict_social: rng.random_bool(0.2),
    };

    let document = SpecDocument {
        id: "random-plan".into(),
        roles: roles
            .iter()
            .map(|r| {
                (
                    r.clone(),
                    RoleDocument {
                        class_text: Some("class Any { organization:profile:name exists }".into()),
                        ..RoleDocument::default()
                    },
                )
            })
            .collect(),
        process_model,
        schema,
        preferences,
    };
    let spec = define_spec(document, |_| None).expect("generated spec is valid");

    let candidates: Candidates = roles
        .iter()
        .map(|r| {
            let n = rng.random_range(0..=6);
            let chosen: Vec<Candidate> = pool
                .choose_multiple(rng, n)
                .map(|org| Candidate {
                    org_id: org.clone(),
                    score: [0.5, 0.75, 1.0].choose(rng).copied().unwrap(),
                    service: None,
                    discrepancy: false,
                    reliability: None,
                })
                .collect();
            (
                r.clone(),
                RoleCandidates {
                    needs_relaxation: chosen.is_empty(),
                    candidates: chosen,
                    excluded: Vec::new(),
                },
            )
        })
        .collect();

    let network = random_network(rng, &pool, 0.25);
    PlanningCase {
        spec,
        candidates,
        registry,
        network,
    }
}
