//! Fixtures for the benchmarks.

use pitflex::labels::{speaker_embedding, EmbeddingConfig, EmbeddingVector};
use pitflex::separator::{init_params, SeparatorConfig, SeparatorParams};
use pitflex::signal::{draw_speakers, synthesize_split, Dataset, Split};

/// Training split of `mixtures` utterances of `samples` samples each.
pub fn dataset(mixtures: usize, samples: usize) -> Dataset {
    let speakers = draw_speakers(8, 8, 7).expect("valid speaker settings");
    synthesize_split(&speakers, mixtures, samples, (-2.5, 2.5), Split::Train, 7).expect("valid split settings")
}

/// Separator with the experiment defaults.
pub fn params() -> SeparatorParams {
    init_params(&SeparatorConfig { init_scale: 0.03, ..SeparatorConfig::default() }).expect("valid separator")
}

/// Deterministic, tie-free `n x n` loss matrix.
pub fn loss_matrix(n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..n).map(|c| (0..n).map(|j| ((c * 31 + j * 17 + k * 7) as f64 * 0.618).sin() * 50.0).collect()).collect()
}

pub fn embedding_pairs(dataset: &Dataset) -> Vec<[EmbeddingVector; 2]> {
    let config = EmbeddingConfig::default();
    dataset
        .mixtures
        .iter()
        .map(|m| {
            let e = |j: usize| speaker_embedding(&m.sources[j], &config).expect("non-silent source");
            [e(0), e(1)]
        })
        .collect()
}
