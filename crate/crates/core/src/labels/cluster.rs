//! Two-cluster k-means over per-utterance embeddings where the two utterances
//! of every mixture must fall in different clusters.
//!
//! Each iteration assigns every pair as a whole: `[s1→c1, s2→c2]` when
//! `d(s1,m1) + d(s2,m2) <= d(s1,m2) + d(s2,m1)`, the swap otherwise, with `d`
//! the squared Euclidean distance. Means are then recomputed from all members.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;
use crate::signal::Dataset;

use super::{speaker_embedding, Assignment, AssignmentTable, EmbeddingConfig, EmbeddingVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub seed: u64,
    pub max_iter: usize,
    /// Stop early once the objective improves by less than this.
    pub tol: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { seed: 0, max_iter: 100, tol: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    pub means: [Vec<f64>; 2],
    /// Per pair: `false` puts the first utterance in cluster 1, `true` the second.
    pub swapped: Vec<bool>,
    /// Objective of the final assignment, measured with the means that produced it.
    pub objective: f64,
    /// Objective after each assignment step.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ClusterState {
    /// Cluster id (1 or 2) of each utterance of each pair.
    pub fn assignments(&self) -> Vec<[u8; 2]> {
        self.swapped.iter().map(|&s| if s { [2, 1] } else { [1, 2] }).collect()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn assign(pairs: &[[EmbeddingVector; 2]], means: &[Vec<f64>; 2]) -> (Vec<bool>, f64) {
    let mut objective = 0.0;
    let swapped = pairs
        .iter()
        .map(|[s1, s2]| {
            let keep = sq_dist(s1.values(), &means[0]) + sq_dist(s2.values(), &means[1]);
            let swap = sq_dist(s1.values(), &means[1]) + sq_dist(s2.values(), &means[0]);
            let swapped = swap < keep;
            objective += if swapped { swap } else { keep };
            swapped
        })
        .collect();
    (swapped, objective)
}

fn update_means(pairs: &[[EmbeddingVector; 2]], swapped: &[bool], means: &mut [Vec<f64>; 2]) {
    let dim = means[0].len();
    let mut sums = [vec![0.0; dim], vec![0.0; dim]];
    let mut counts = [0usize; 2];
    for (pair, &s) in pairs.iter().zip(swapped) {
        let (first, second) = if s { (1, 0) } else { (0, 1) };
        for (cluster, e) in [(first, &pair[0]), (second, &pair[1])] {
            counts[cluster] += 1;
            sums[cluster].iter_mut().zip(e.values()).for_each(|(a, b)| *a += b);
        }
    }
    for c in 0..2 {
        // an empty cluster keeps its previous mean
        if counts[c] > 0 {
            means[c] = sums[c].iter().map(|x| x / counts[c] as f64).collect();
        }
    }
}

/// Runs the constrained clustering and derives the label table: channel 0
/// receives the cluster-1 utterance of each mixture.
pub fn constrained_2means(
    pairs: &[[EmbeddingVector; 2]],
    config: &ClusterConfig,
) -> Result<(ClusterState, AssignmentTable)> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dim = pairs[0][0].dim();
    if pairs.iter().flatten().any(|e| e.dim() != dim) {
        return Err(Error::ShapeMismatch("embeddings of different dimension".into()));
    }
    let mut rng = seed::rng(seed::derive(config.seed, "cluster-init", 0));
    let start = rng.gen_range(0..pairs.len());
    let mut means = [pairs[start][0].values().to_vec(), pairs[start][1].values().to_vec()];

    let mut history = Vec::new();
    let mut swapped: Vec<bool> = Vec::new();
    let mut converged = false;
    for iter in 0..config.max_iter.max(1) {
        let (next, objective) = assign(pairs, &means);
        let unchanged = iter > 0 && next == swapped;
        let stalled = history.last().is_some_and(|&prev: &f64| prev - objective < config.tol);
        history.push(objective);
        swapped = next;
        if unchanged || stalled {
            converged = true;
            break;
        }
        update_means(pairs, &swapped, &mut means);
    }
    let state = ClusterState {
        means,
        objective: *history.last().expect("at least one iteration"),
        iterations: history.len(),
        objective_history: history,
        swapped,
        converged,
    };
    let table = AssignmentTable::new(
        state.swapped.iter().map(|&s| if s { Assignment::swap2() } else { Assignment::identity(2) }).collect(),
    );
    Ok((state, table))
}

/// Embeds both sources of every mixture and clusters them.
pub fn embedding_assignment(
    dataset: &Dataset,
    embedding: &EmbeddingConfig,
    cluster: &ClusterConfig,
) -> Result<(ClusterState, AssignmentTable)> {
    if dataset.num_sources() != 2 {
        return Err(Error::InvalidConfig("speaker-embedding labels need 2 sources per mixture".into()));
    }
    let pairs = dataset
        .mixtures
        .iter()
        .map(|m| Ok([speaker_embedding(&m.sources[0], embedding)?, speaker_embedding(&m.sources[1], embedding)?]))
        .collect::<Result<Vec<_>>>()?;
    constrained_2means(&pairs, cluster)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> EmbeddingVector {
        EmbeddingVector::normalized(x.to_vec()).unwrap()
    }

    #[test]
    fn corners_converge_fast() {
        let e1 = v(&[1.0, 0.0]);
        let e2 = v(&[0.0, 1.0]);
        let n1 = v(&[-1.0, 0.0]);
        let n2 = v(&[0.0, -1.0]);
        let pairs = vec![[e1.clone(), n1.clone()], [n1, e1], [e2.clone(), n2.clone()], [n2, e2]];
        let (state, table) = constrained_2means(&pairs, &ClusterConfig::default()).unwrap();
        assert!(state.converged);
        assert!(state.iterations <= 2, "{}", state.iterations);
        for a in state.assignments() {
            assert_ne!(a[0], a[1]);
        }
        assert_eq!(table.len(), 4);
        // pairs 0 and 1 hold the same two vectors in opposite order
        assert_ne!(table.entries[0], table.entries[1]);
    }

    #[test]
    fn single_pair_is_split() {
        let pairs = vec![[v(&[1.0, 0.0]), v(&[0.99, 0.1])]];
        let (state, table) = constrained_2means(&pairs, &ClusterConfig::default()).unwrap();
        assert_eq!(state.assignments(), vec![[1, 2]]);
        assert_eq!(table.entries[0].perm(), &[0, 1]);
    }

    #[test]
    fn symmetric_tie_keeps_identity() {
        let a = v(&[1.0, 0.0]);
        let pairs = vec![[a.clone(), a]];
        let (state, _) = constrained_2means(&pairs, &ClusterConfig::default()).unwrap();
        assert_eq!(state.swapped, vec![false]);
    }

    #[test]
    fn empty_input() {
        assert!(matches!(constrained_2means(&[], &ClusterConfig::default()), Err(Error::EmptyInput)));
    }
}
