use std::panic::{catch_unwind, AssertUnwindSafe};

use serde::{Deserialize, Serialize};

use super::{Variant, VOSpecification};

pub const TOTAL_COST: &str = "totalCost";
pub const TOTAL_DURATION: &str = "totalDuration";

/// A performance indicator computed for a variant. Implementations must be
/// pure.
pub trait KpiPlugin: Send + Sync {
    fn name(&self) -> &str;
    fn evaluate(&self, variant: &Variant, spec: &VOSpecification) -> Result<Vec<(String, f64)>, String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kpi {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginFailure {
    pub plugin: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub kpis: Vec<Kpi>,
    pub failures: Vec<PluginFailure>,
}

impl KpiReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.kpis.iter().find(|k| k.name == name).map(|k| k.value)
    }
}

/// Built-in cost and duration totals followed by every plugin's values. A
/// failing or panicking plugin is reported and skipped.
pub fn evaluate_performance(variant: &Variant, spec: &VOSpecification, plugins: &[&dyn KpiPlugin]) -> KpiReport {
    let mut report = KpiReport {
        kpis: vec![
            Kpi {
                name: TOTAL_COST.into(),
                value: variant.line_items.iter().map(|i| i.cost.amount).sum(),
            },
            Kpi {
                name: TOTAL_DURATION.into(),
                value: variant.line_items.iter().filter_map(|i| i.duration).sum(),
            },
        ],
        failures: Vec::new(),
    };
    for plugin in plugins {
        let outcome = catch_unwind(AssertUnwindSafe(|| plugin.evaluate(variant, spec)));
        let message = match outcome {
            Ok(Ok(values)) => {
                report
                    .kpis
                    .extend(values.into_iter().map(|(name, value)| Kpi { name, value }));
                continue;
            }
            Ok(Err(message)) => message,
            Err(panic) => panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "plugin panicked".into()),
        };
        report.failures.push(PluginFailure {
            plugin: plugin.name().to_string(),
            message,
        });
    }
    report
}
