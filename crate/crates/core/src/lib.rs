//! Probes for surface information in word and subword embeddings.
//!
//! The crate loads embedding tables, builds three probe tasks over their
//! vocabularies (token length, substring containment, and the character at
//! a given position), trains small MLP probes on frozen embeddings under
//! k-fold cross-validation, and reports MSE, weighted F1 and accuracy.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below name both. Tables are stored as `f64`; the runner casts them to the
//! configured compute precision.

pub mod embedding;
pub mod error;
pub mod metrics;
pub mod probe;
pub mod runner;
pub mod scalar;
pub mod seed;
pub mod synthetic;
pub mod tasks;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision embedding table, the runner's working type.
pub type Table = embedding::EmbeddingTable<f64>;
pub type TableF32 = embedding::EmbeddingTable<f32>;

/// Double-precision probe parameters.
pub type Probe = probe::MlpParams<f64>;
pub type ProbeF32 = probe::MlpParams<f32>;
