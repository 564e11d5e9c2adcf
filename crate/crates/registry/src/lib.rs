//! Registry service for organization records, classes, social networks and
//! virtual organization plans.

pub mod config;
pub mod store;
pub mod events;
pub mod service;
pub mod http;
