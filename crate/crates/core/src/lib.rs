//! Journal classification from aggregated citation matrices.
//!
//! The citing patterns of journals are factor-analyzed (principal components,
//! optionally varimax-rotated) and the cited journals are scored on each
//! factor. Positive-score sets become classifications that can be refactored
//! one level down, mapped as cosine-similarity graphs and compared.
//!
//! Modules follow the analysis workflow:
//!
//! - [`matrix`]: ingestion, corpus statistics, variance filtering, subsets
//! - [`factor`]: standardization, correlation, extraction, varimax, scores
//! - [`decomposition`]: factor designation, positive-score selection,
//!   drill-down, local citation environments, set comparison
//! - [`mapping`]: cosine graphs, Pajek export, score scatter series
//! - [`synth`]: planted block models and recovery scoring
//! - [`pipeline`]: configuration, artifact formats and the staged run

pub mod decomposition;
pub mod error;
pub mod factor;
pub mod mapping;
pub mod matrix;
pub mod pipeline;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use matrix::{CitationMatrix, JournalId};
