//! Metadata classification, privacy-policy link auditing and snapshot
//! monitoring for GPT-store apps.

pub mod analysis;
pub mod audit;
pub mod driver;
pub mod fixture;
pub mod hash;
pub mod ingest;
pub mod model;
pub mod net;
pub mod pipeline;
pub mod store;
