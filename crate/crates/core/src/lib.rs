//! Train small tabular classifiers and quantify how much they leak about
//! their training data through membership and attribute inference attacks.
//!
//! The crate has four layers:
//!
//! - [`space`]: feature-space geometry (metrics, portions, siblings and the
//!   radii that tie them together);
//! - [`model`]: deterministic multilayer-perceptron and logistic-regression
//!   training with per-class confidence output;
//! - [`attack`]: the confidence, loss and shadow-model membership scorers
//!   behind one interface;
//! - [`experiment`]: the measurement drivers — membership inference (MI),
//!   strong membership inference (SMI), attribute inference (AI) and
//!   approximate attribute inference (AAI) — plus the ROC, decision-region
//!   and feature-selection machinery they rest on.
//!
//! [`separation`] holds an executable construction of a classifier family
//! that is fully vulnerable to membership inference while strong membership
//! inference remains at chance, and the reduction that turns any attribute
//! inference adversary into a strong membership inference adversary.

pub mod attack;
pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod ingest;
pub mod model;
pub(crate) mod nn;
pub mod run;
pub mod seed;
pub mod separation;
pub mod space;

pub use error::{Error, Result};
