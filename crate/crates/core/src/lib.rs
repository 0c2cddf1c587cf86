pub mod bench;
pub mod envelope;
pub mod groups;
pub mod indcpa;
pub mod policy;
pub mod scheme;
pub mod sites;
