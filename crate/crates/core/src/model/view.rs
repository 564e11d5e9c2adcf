use crate::value::{PropertyValue, PropertyView, Value};

use super::{OrganizationRecord, ServiceProfile};

/// Flattens the current state of a record into `(path, value)` pairs.
///
/// Always emits `organization:profile:{id,name,localization,creationDate,
/// numberOfEmployees,memberships,contact,board}`, and the set-valued paths
/// `competence:name`, `capability:name`, `activity:name`, `service:name`
/// and `conspicuity:kind` (possibly empty). Each `extra` entry `k` becomes
/// `organization:profile:k`; each service `businessInfo` entry `k` adds its
/// value to the set at `service:k`.
pub fn flatten_properties(record: &OrganizationRecord) -> PropertyView {
    let mut view = PropertyView::new();
    let profile = &record.organization_profile;
    let base = "organization:profile";

    view.insert(format!("{base}:id"), Value::text(profile.id.as_str()));
    view.insert(format!("{base}:name"), Value::text(&profile.name));
    view.insert(format!("{base}:localization"), Value::text(&profile.localization));
    view.insert(format!("{base}:creationDate"), Value::Date(profile.creation_date));
    view.insert(
        format!("{base}:numberOfEmployees"),
        Value::Number(profile.number_of_employees as f64),
    );
    view.insert(
        format!("{base}:memberships"),
        PropertyValue::set(profile.memberships.iter().map(String::as_str)),
    );
    view.insert(format!("{base}:contact"), Value::text(&profile.contact));
    view.insert(
        format!("{base}:board"),
        PropertyValue::set(profile.board.iter().map(String::as_str)),
    );
    if let Some(capital) = &profile.financial_capital {
        view.insert(format!("{base}:financialCapital:amount"), Value::Number(capital.amount));
        view.insert(format!("{base}:financialCapital:currency"), Value::text(&capital.currency));
    }
    for (key, value) in &profile.extra {
        insert_json(&mut view, &format!("{base}:{key}"), value);
    }

    for path in [
        "competence:name",
        "capability:name",
        "activity:name",
        "service:name",
        "conspicuity:kind",
    ] {
        view.ensure_set(path);
    }
    for comp in record.current_competences() {
        view.insert_into_set("competence:name", Value::text(&comp.name));
    }
    for cap in record.current_capabilities() {
        view.insert_into_set("capability:name", Value::text(&cap.name));
    }
    for act in record.current_activities() {
        view.insert_into_set("activity:name", Value::text(&act.name));
    }
    for consp in record.current_conspicuities() {
        let kind = serde_json::to_value(consp.kind).expect("enum serializes");
        if let Some(kind) = kind.as_str() {
            view.insert_into_set("conspicuity:kind", Value::text(kind));
        }
    }
    for svc in record.current_services() {
        view.insert_into_set("service:name", Value::text(&svc.name));
        for (key, value) in &svc.business_info {
            let path = format!("service:{key}");
            view.ensure_set(path.clone());
            for scalar in json_scalars(value) {
                view.insert_into_set(path.clone(), scalar);
            }
        }
    }
    view
}

/// Properties of a single service: `service:id`, `service:name`,
/// `service:competence` and one `service:k` per business-info entry.
pub fn service_view(service: &ServiceProfile) -> PropertyView {
    let mut view = PropertyView::new();
    view.insert("service:id", Value::text(&service.id));
    view.insert("service:name", Value::text(&service.name));
    view.insert("service:competence", Value::text(&service.competence_ref));
    for (key, value) in &service.business_info {
        insert_json(&mut view, &format!("service:{key}"), value);
    }
    view
}

fn insert_json(view: &mut PropertyView, path: &str, value: &serde_json::Value) {
    match value {
        serde_json::Value::Array(_) => {
            view.ensure_set(path);
            for scalar in json_scalars(value) {
                view.insert_into_set(path, scalar);
            }
        }
        serde_json::Value::Object(fields) => {
            for (key, nested) in fields {
                insert_json(view, &format!("{path}:{key}"), nested);
            }
        }
        other => {
            if let Some(scalar) = Value::from_json(other) {
                view.insert(path, scalar);
            }
        }
    }
}

fn json_scalars(value: &serde_json::Value) -> Vec<Value> {
    match value {
        serde_json::Value::Array(items) => items.iter().filter_map(Value::from_json).collect(),
        other => Value::from_json(other).into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn software_dev_properties() {
        let view = flatten_properties(&fixtures::software_dev());
        assert_eq!(
            view.get("organization:profile:localization"),
            Some(&PropertyValue::Scalar(Value::text("Poland")))
        );
        assert_eq!(
            view.get("organization:profile:numberOfEmployees"),
            Some(&PropertyValue::Scalar(Value::Number(34.0)))
        );
        assert_eq!(
            view.get("competence:name"),
            Some(&PropertyValue::set([
                "Java programming",
                "Ruby programming",
                "Python programming",
                "Software requirements engineering",
            ]))
        );
        assert_eq!(
            view.get("capability:name"),
            Some(&PropertyValue::set([
                "Server administration",
                "Computer network configuration"
            ]))
        );
        assert_eq!(
            view.get("organization:profile:creationDate"),
            Some(&PropertyValue::Scalar(Value::Date(
                chrono::NaiveDate::from_ymd_opt(2009, 11, 1).unwrap()
            )))
        );
    }

    #[test]
    fn zero_competences_gives_empty_set() {
        let mut record = fixtures::software_dev();
        record.competences.clear();
        record.services.clear();
        let view = flatten_properties(&record);
        assert_eq!(view.get("competence:name"), Some(&PropertyValue::Set(Default::default())));
    }

    #[test]
    fn deterministic() {
        let record = fixtures::software_company();
        assert_eq!(flatten_properties(&record), flatten_properties(&record));
    }

    #[test]
    fn extra_and_business_info_paths() {
        let mut record = fixtures::software_company();
        record
            .organization_profile
            .extra
            .insert("yearsOnMarket".into(), serde_json::json!(12));
        record.services[0]
            .business_info
            .insert("strategicGoal".into(), serde_json::json!("growth"));
        let view = flatten_properties(&record);
        assert_eq!(
            view.get("organization:profile:yearsOnMarket"),
            Some(&PropertyValue::Scalar(Value::Number(12.0)))
        );
        assert_eq!(view.get("service:strategicGoal"), Some(&PropertyValue::set(["growth"])));
        let svc = service_view(&record.services[0]);
        assert_eq!(
            svc.get("service:strategicGoal"),
            Some(&PropertyValue::Scalar(Value::text("growth")))
        );
    }
}
