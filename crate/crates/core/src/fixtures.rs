//! Small bundled examples: organization records and the Polish software
//! company class.

use crate::dsl::{parse_class, OrganizationClass};
use crate::model::OrganizationRecord;
use crate::value::{PropertyValue, PropertyView, Value};

pub const SOFTWARE_COMPANY_JSON: &str = include_str!("../fixtures/software_company.json");
pub const SOFTWARE_DEV_JSON: &str = include_str!("../fixtures/software_dev.json");
pub const SOFTIS_JSON: &str = include_str!("../fixtures/softis.json");
pub const HOLIDAY_CONTRACTOR_JSON: &str = include_str!("../fixtures/holiday_contractor.json");
pub const POLISH_SOFTWARE_COMPANY_OCLS: &str = include_str!("../fixtures/polish_software_company.ocls");

fn record(text: &str) -> OrganizationRecord {
    OrganizationRecord::from_json_str(text).expect("bundled fixture decodes")
}

/// Competence profile with nested competences and a shared capability.
pub fn software_company() -> OrganizationRecord {
    record(SOFTWARE_COMPANY_JSON)
}

/// Polish Java shop; an instance of the Polish software company class.
pub fn software_dev() -> OrganizationRecord {
    record(SOFTWARE_DEV_JSON)
}

/// German Java shop.
pub fn softis() -> OrganizationRecord {
    record(SOFTIS_JSON)
}

/// Softis as a bare property set: name, localization and competences, with
/// no `capability:name` defined at all.
pub fn softis_view() -> PropertyView {
    let mut view = PropertyView::default();
    view.insert("organization:profile:name", PropertyValue::Scalar(Value::text("Softis")));
    view.insert("organization:profile:localization", PropertyValue::Scalar(Value::text("Germany")));
    view.insert("competence:name", PropertyValue::set(["Java programming"]));
    view
}

/// Contractor whose system-development capability has a holiday variant.
pub fn holiday_contractor() -> OrganizationRecord {
    record(HOLIDAY_CONTRACTOR_JSON)
}

pub fn polish_software_company() -> OrganizationClass {
    parse_class(POLISH_SOFTWARE_COMPANY_OCLS).expect("bundled class parses")
}
