//! File formats, synthetic data and the command-line front end for
//! rate-invariant analysis of SPD (and sphere) trajectories.

pub mod cli;
pub mod commands;
pub mod error;
pub mod format;
pub mod frames;
pub mod simulate;

pub use error::{AppError, AppResult};
pub use format::{AnyTrajectory, Manifest, ManifestEntry, ManifoldKind, Split};
