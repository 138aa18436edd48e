//! Feature-geometry alignment distances and the synthetic
//! orthogonality-preservation experiment.
//!
//! The crate is organized around the data the experiment moves through:
//!
//! * [`repr`] — representation and Gram matrix types, row normalization.
//! * [`linalg`] — SVD facade, nuclear norm, Gram factorization.
//! * [`metrics`] — the four alignment distances (Gram difference, learned
//!   projection, CKA, Procrustes).
//! * [`grad`] — analytic gradients of each distance used as a loss, plus the
//!   central finite-difference oracle they are validated against.
//! * [`synth`] — near-orthogonal teacher construction, student inits, the
//!   Gram-threshold graph, and Luby's maximal independent set.
//! * [`optim`] — mini-batch Adam over student rows with per-step traces.
//! * [`theorems`] — runnable numerical checks of the three alignment
//!   theorems and the PSD lemmas behind them.
//! * [`io`] — the plain-text matrix format shared by the CLI.

pub mod error;
pub mod grad;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod optim;
pub mod repr;
pub mod synth;
pub mod theorems;

pub use error::{Error, Result};
pub use metrics::{MetricKind, MetricValue, ProjectionMatrix};
pub use repr::{gram, normalize_rows, GramMatrix, RepresentationMatrix};
