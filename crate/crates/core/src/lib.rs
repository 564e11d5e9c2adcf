//! Competence model, organization-class language, matching engine, social
//! network and partner-selection pipeline of a virtual organization
//! breeding environment.

pub mod dsl;
pub mod fixtures;
pub mod mapss;
pub mod matching;
pub mod model;
pub mod social;
#[cfg(feature = "testkit")]
pub mod testkit;
pub mod value;
