//! Review-guided program repair benchmark harness.

pub mod analysis;
pub mod backends;
pub mod cleaner;
pub mod corpus;
pub mod diff;
pub mod fixtures;
pub mod harness;
pub mod javatok;
pub mod metrics;
pub mod prompts;
pub mod retrieval;
pub mod store;
