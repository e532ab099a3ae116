//! Enveloping semigroups of cascades on finite and sampled compact metric spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`spaces`] holds point sets, metrics, maps and the catalog of named models.
//! * [`hyperspace`] builds the induced map on finite subsets of bounded size.
//! * [`symbolic`] covers shifts of finite type, sofic shifts and block codes.
//! * [`envelope`] computes exact and tolerance-based enveloping semigroups.
//! * [`algebra`] analyses finite semigroups given by composition tables.
//! * [`properties`] checks transitivity, mixing, equicontinuity, rigidity and recurrence.
//! * [`verify`] cross-checks theorem consequences on generated corpora.

pub mod algebra;
pub mod envelope;
mod error;
pub mod hyperspace;
pub mod properties;
pub mod spaces;
pub mod symbolic;
pub mod verify;

pub use error::{Error, Result};
pub use spaces::{CascadeModel, PointId, SampledDynamics};
