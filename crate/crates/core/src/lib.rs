//! Training source separators under label ambiguity.
//!
//! The crate covers the separation metric, a small mask-inference separator
//! with analytic gradients, the label-assignment strategies (minimum-loss PIT,
//! loudness ordering, constrained speaker clustering, labels recorded from a
//! PIT run), a sectioned training schedule that can interrupt PIT with a
//! fixed-label section, and the experiment harness behind the `pitflex` CLI.

pub mod error;
pub mod harness;
pub mod labels;
pub mod seed;
pub mod separator;
pub mod signal;
pub mod trainer;

pub use error::{Error, Result};
pub use labels::{Assignment, AssignmentTable};
pub use separator::{SeparatorConfig, SeparatorParams};
pub use signal::{Dataset, Mixture, Split, Waveform};
