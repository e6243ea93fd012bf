use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::labels::{
    best_permutation, embedding_assignment, energy_assignment, pit_losses_from_cache, record_assignments,
    switch_count, AssignmentTable,
};
use crate::seed;
use crate::separator::{
    adam_step, backward, forward_cache, init_params, loss_from_cache, Gradients, OptimizerState, SeparatorConfig,
    SeparatorParams,
};
use crate::signal::{sdr_improvement, Dataset, Waveform};

use super::{EpochRecord, LabelConfig, LabelSource, RunReport, Schedule, SectionMode, SectionSpec};

/// How each mixture's assignment is chosen inside one epoch.
#[derive(Debug, Clone, Copy)]
pub enum EpochMode<'a> {
    /// Minimum-loss permutation, re-selected against the current parameters.
    Pit,
    Fixed(&'a AssignmentTable),
}

#[derive(Debug, Clone)]
pub struct EpochOutcome {
    pub mean_loss: f64,
    pub optimizer_steps: usize,
    /// Minimum-loss assignments of the updated model (telemetry).
    pub assignments: AssignmentTable,
}

fn mixture_step(
    params: &SeparatorParams,
    dataset: &Dataset,
    id: usize,
    mode: EpochMode<'_>,
) -> Result<(f64, Gradients)> {
    let mixture = &dataset.mixtures[id];
    let mut cache = forward_cache(params, &mixture.mix)?;
    let perm = match mode {
        EpochMode::Pit => best_permutation(&pit_losses_from_cache(&cache, mixture)?)?,
        EpochMode::Fixed(table) => table.get(id).cloned().ok_or(Error::MissingLabels(id))?,
    };
    let loss = loss_from_cache(&mut cache, mixture, perm.perm())?;
    let grads = backward(params, mixture, perm.perm(), &cache)?;
    Ok((loss, grads))
}

/// One pass over `dataset` in seeded shuffled order, one optimizer step per
/// batch of `batch_size` mixtures, gradients averaged over the batch.
pub fn run_epoch(
    params: &mut SeparatorParams,
    opt: &mut OptimizerState,
    dataset: &Dataset,
    mode: EpochMode<'_>,
    batch_size: usize,
    shuffle_seed: u64,
) -> Result<EpochOutcome> {
    if batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
    }
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("cannot train on an empty dataset".into()));
    }
    if let EpochMode::Fixed(table) = mode {
        if table.len() != dataset.len() {
            return Err(Error::MissingLabels(table.len().min(dataset.len())));
        }
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut seed::rng(shuffle_seed));

    let mut total_loss = 0.0;
    let mut steps = 0;
    for batch in order.chunks(batch_size) {
        let mut ids = batch.to_vec();
        ids.sort_unstable();
        let results = ids
            .par_iter()
            .map(|&id| mixture_step(params, dataset, id, mode))
            .collect::<Result<Vec<_>>>()?;
        let mut grads = params.zeros_like();
        let scale = 1.0 / ids.len() as f64;
        for (loss, g) in &results {
            total_loss += loss;
            grads.add_scaled(g, scale);
        }
        adam_step(params, &grads, opt)?;
        steps += 1;
    }
    Ok(EpochOutcome {
        mean_loss: total_loss / dataset.len() as f64,
        optimizer_steps: steps,
        assignments: record_assignments(params, dataset)?,
    })
}

/// Mean SDR improvement with the best permutation per mixture.
pub fn validate(params: &SeparatorParams, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("cannot validate on an empty dataset".into()));
    }
    let scores = dataset
        .mixtures
        .par_iter()
        .map(|m| {
            let cache = forward_cache(params, &m.mix)?;
            let perm = best_permutation(&pit_losses_from_cache(&cache, m)?)?;
            let estimates = cache
                .estimates
                .iter()
                .map(|e| Waveform::new(e.clone(), m.mix.sample_rate()))
                .collect::<Result<Vec<_>>>()?;
            sdr_improvement(m, &estimates, perm.perm())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Model initialization seed of section `index` (0-based).
pub fn section_init_seed(schedule_seed: u64, index: usize) -> u64 {
    seed::derive(schedule_seed, "section-init", index as u64)
}

fn epoch_shuffle_seed(schedule_seed: u64, global_epoch: usize) -> u64 {
    seed::derive(schedule_seed, "shuffle", global_epoch as u64)
}

/// Model, optimizer and label state threaded through the sections of a run.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: SeparatorParams,
    pub opt: OptimizerState,
    pub separator: SeparatorConfig,
    /// Number of completed epochs.
    pub global_epoch: usize,
    /// Latest table recorded at the end of a section.
    pub recorded: Option<AssignmentTable>,
    /// End-of-epoch assignment snapshots, one per completed epoch.
    pub snapshots: Vec<AssignmentTable>,
    /// Tables resolved for fixed-label sections, by source name.
    pub fixed_tables: BTreeMap<String, AssignmentTable>,
}

impl TrainState {
    pub fn new(separator: &SeparatorConfig, schedule: &Schedule) -> Result<Self> {
        let config = SeparatorConfig { seed: section_init_seed(schedule.seed, 0), ..separator.clone() };
        let params = init_params(&config)?;
        let opt = OptimizerState::new(&params, schedule.adam);
        Ok(Self {
            params,
            opt,
            separator: config,
            global_epoch: 0,
            recorded: None,
            snapshots: Vec::new(),
            fixed_tables: BTreeMap::new(),
        })
    }
}

pub fn resolve_labels(
    source: &LabelSource,
    recorded: Option<&AssignmentTable>,
    train: &Dataset,
    config: &LabelConfig,
) -> Result<AssignmentTable> {
    let table = match source {
        LabelSource::Recorded => recorded.cloned().ok_or(Error::MissingLabels(0))?,
        LabelSource::Energy => energy_assignment(train, config.energy_frame_len, config.silence_margin_db)?,
        LabelSource::Embedding => embedding_assignment(train, &config.embedding, &config.cluster)?.1,
        LabelSource::Table(t) => t.clone(),
    };
    if table.len() != train.len() {
        return Err(Error::MissingLabels(table.len().min(train.len())));
    }
    Ok(table)
}

/// Runs one section and returns its per-epoch records.
pub fn run_section(
    state: &mut TrainState,
    section: &SectionSpec,
    index: usize,
    schedule: &Schedule,
    train: &Dataset,
    valid: &Dataset,
) -> Result<Vec<EpochRecord>> {
    if section.epochs == 0 {
        return Ok(Vec::new());
    }
    let table = match &section.mode {
        SectionMode::Pit => None,
        SectionMode::Fixed(source) => {
            let t = resolve_labels(source, state.recorded.as_ref(), train, &schedule.labels)?;
            state.fixed_tables.insert(source.name().to_string(), t.clone());
            Some(t)
        }
    };
    if section.reinit_model {
        state.separator.seed = section_init_seed(schedule.seed, index);
        state.params = init_params(&state.separator)?;
    }
    if section.reset_optimizer {
        state.opt = OptimizerState::new(&state.params, schedule.adam);
    }
    let mode = table.as_ref().map_or(EpochMode::Pit, EpochMode::Fixed);
    let mut records = Vec::with_capacity(section.epochs);
    for _ in 0..section.epochs {
        let epoch = state.global_epoch + 1;
        let outcome = run_epoch(
            &mut state.params,
            &mut state.opt,
            train,
            mode,
            schedule.batch_size,
            epoch_shuffle_seed(schedule.seed, epoch),
        )?;
        let switches = match state.snapshots.last() {
            Some(prev) => Some(switch_count(prev, &outcome.assignments)?),
            None => None,
        };
        records.push(EpochRecord {
            global_epoch: epoch,
            section: index + 1,
            mode: section.mode.name().to_string(),
            mean_train_loss: outcome.mean_loss,
            valid_sdri_db: validate(&state.params, valid)?,
            switch_count: switches.map(|s| s.0),
            switch_pct: switches.map(|s| s.1),
        });
        state.snapshots.push(outcome.assignments.with_epoch(epoch));
        state.global_epoch = epoch;
    }
    if section.record_at_end {
        state.recorded = state.snapshots.last().cloned();
    }
    Ok(records)
}

/// Executes every section in order and summarizes the run. `test` is scored
/// once, after the last epoch.
pub fn run_schedule(
    schedule: &Schedule,
    separator: &SeparatorConfig,
    train: &Dataset,
    valid: &Dataset,
    test: Option<&Dataset>,
) -> Result<(RunReport, TrainState)> {
    schedule.validate()?;
    let mut state = TrainState::new(separator, schedule)?;
    let mut records = Vec::with_capacity(schedule.total_epochs());
    for (i, section) in schedule.sections.iter().enumerate() {
        records.extend(run_section(&mut state, section, i, schedule, train, valid)?);
    }
    let final_valid = match records.last() {
        Some(r) => r.valid_sdri_db,
        None => validate(&state.params, valid)?,
    };
    let final_test = test.map(|t| validate(&state.params, t)).transpose()?;
    let mut tables = state.fixed_tables.clone();
    let final_table = match state.snapshots.last() {
        Some(t) => t.clone(),
        None => record_assignments(&state.params, train)?,
    };
    tables.insert("final".to_string(), final_table);
    if let Some(r) = &state.recorded {
        tables.insert("recorded".to_string(), r.clone());
    }
    let report = RunReport {
        records,
        final_valid_sdri_db: final_valid,
        final_test_sdri_db: final_test,
        tables,
        ..RunReport::default()
    };
    Ok((report, state))
}
