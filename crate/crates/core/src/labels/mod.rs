//! Label assignment: which reference source each output channel is trained against.
//!
//! Strategies: per-epoch minimum-loss selection (PIT), loudness ordering,
//! constrained clustering of speaker embeddings, and tables recorded from a
//! PIT-trained model. Tables are compared with switch counts and difference
//! percentages.

mod cluster;
mod embedding;
mod energy;
mod perm;
mod pit;
mod table;

pub use cluster::{constrained_2means, embedding_assignment, ClusterConfig, ClusterState};
pub use embedding::{speaker_embedding, EmbeddingConfig, EmbeddingVector};
pub use energy::energy_assignment;
pub use perm::{best_permutation, check_permutation, permutations, MAX_SOURCES};
pub use pit::{pit_losses, pit_losses_from_cache, record_assignments};
pub use table::{diff_labels, switch_count, Assignment, AssignmentTable};
