//! A faceted query builder for SOSA sensor data: structured query documents,
//! their SPARQL compilation, sensor discovery, a rule-based chat front end
//! and the HTTP service tying them together.
//!
//! The `oracle` module is a small reference SPARQL evaluator used to check
//! compiled queries against in-memory graphs, and `mock` serves it over HTTP.

pub mod cli;
pub mod compiler;
pub mod discovery;
pub mod endpoint;
pub mod fixture;
pub mod mock;
pub mod model;
pub mod nlu;
pub mod oracle;
pub mod rdf;
pub mod service;
pub mod table;
