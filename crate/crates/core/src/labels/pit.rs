use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::separator::{ForwardCache, SeparatorParams};
use crate::signal::{sdr_terms, Dataset, Mixture};

use super::{best_permutation, AssignmentTable};

/// `loss[c][j] = -sdr(sources[j], estimate[c])` from an existing forward pass.
pub fn pit_losses_from_cache(cache: &ForwardCache, mixture: &Mixture) -> Result<Vec<Vec<f64>>> {
    if cache.estimates.len() != mixture.num_sources() {
        return Err(Error::ShapeMismatch(format!(
            "{} channels for {} sources",
            cache.estimates.len(),
            mixture.num_sources()
        )));
    }
    cache
        .estimates
        .iter()
        .map(|est| {
            mixture
                .sources
                .iter()
                .map(|src| sdr_terms(src.samples(), est).map(|t| -t.db))
                .collect()
        })
        .collect()
}

/// Pairwise loss matrix from a single forward pass.
pub fn pit_losses(params: &SeparatorParams, mixture: &Mixture) -> Result<Vec<Vec<f64>>> {
    let cache = crate::separator::forward_cache(params, &mixture.mix)?;
    pit_losses_from_cache(&cache, mixture)
}

/// Minimum-loss assignment of every mixture under `params`, without updating them.
/// The caller sets `epoch_tag`.
pub fn record_assignments(params: &SeparatorParams, dataset: &Dataset) -> Result<AssignmentTable> {
    let entries = dataset
        .mixtures
        .par_iter()
        .map(|m| best_permutation(&pit_losses(params, m)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(AssignmentTable::new(entries))
}
