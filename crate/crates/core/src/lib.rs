//! Robustness testing for call-graph malware classifiers.
//!
//! A sample's function call graph is embedded into a feature vector and
//! classified. The search perturbs the graph with behavior-preserving edits
//! inside the critical area (everything that can reach a sensitive API) and
//! looks for an edit sequence the classifier calls benign.

pub mod attrib;
pub mod embed;
pub mod experiment;
pub mod genome;
pub mod graph;
pub mod metrics;
pub mod models;
pub mod perturb;
pub mod search;
pub mod synth;
