mod common;

use common::*;
use pitflex::labels::{best_permutation, pit_losses, record_assignments, switch_count, Assignment, AssignmentTable};
use pitflex::separator::{forward, init_params, loss, AdamConfig, OptimizerState};
use pitflex::trainer::{
    run_epoch, run_schedule, run_section, section_init_seed, validate, EpochMode, LabelSource, Preset, Schedule,
    SectionSpec, TrainState,
};
use pitflex::{Dataset, SeparatorConfig, SeparatorParams};
use rand::Rng;

fn sep() -> SeparatorConfig {
    SeparatorConfig { init_scale: 0.1, ..SeparatorConfig::default() }
}

fn random_table(n: usize, seed: u64) -> AssignmentTable {
    let mut r = rng(seed);
    AssignmentTable::new((0..n).map(|_| if r.gen() { Assignment::swap2() } else { Assignment::identity(2) }).collect())
}

fn schedule(preset: Preset, l: usize, e: usize, seed: u64) -> Schedule {
    let mut s = Schedule::new(preset.sections(l, e), seed);
    s.batch_size = 2;
    s.adam.lr = 0.005;
    s
}

/// Mean loss of one single-batch epoch, evaluated before the update.
fn full_batch_loss(params: &SeparatorParams, train: &Dataset, mode: EpochMode<'_>) -> f64 {
    let mut p = params.clone();
    let mut opt = OptimizerState::new(&p, AdamConfig::default());
    run_epoch(&mut p, &mut opt, train, mode, train.len(), 0).unwrap().mean_loss
}

#[test]
fn full_batch_epoch_is_one_step() {
    let (train, _) = datasets(12, 1, 64, 1);
    let mut params = init(&small_config(0));
    let mut opt = OptimizerState::new(&params, AdamConfig::default());
    let out = run_epoch(&mut params, &mut opt, &train, EpochMode::Pit, train.len(), 5).unwrap();
    assert_eq!(out.optimizer_steps, 1);
    assert_eq!(opt.step, 1);
    let out = run_epoch(&mut params, &mut opt, &train, EpochMode::Pit, 5, 5).unwrap();
    assert_eq!(out.optimizer_steps, 3);
}

#[test]
fn fixed_with_pit_argmin_table_matches_pit() {
    let (train, _) = datasets(10, 1, 64, 2);
    let params = init(&small_config(1));
    let argmin = record_assignments(&params, &train).unwrap();
    assert_eq!(
        full_batch_loss(&params, &train, EpochMode::Pit),
        full_batch_loss(&params, &train, EpochMode::Fixed(&argmin))
    );
}

#[test]
fn pit_contribution_never_exceeds_fixed() {
    let (train, _) = datasets(50, 1, 64, 3);
    let params = init(&small_config(2));
    for (id, m) in train.mixtures.iter().enumerate() {
        let best = best_permutation(&pit_losses(&params, m).unwrap()).unwrap();
        let pit = loss(&params, m, best.perm()).unwrap().0;
        for entry in [Assignment::identity(2), Assignment::swap2()] {
            assert!(pit <= loss(&params, m, entry.perm()).unwrap().0, "mixture {id}");
        }
    }
    let pit = full_batch_loss(&params, &train, EpochMode::Pit);
    for seed in 0..5 {
        let table = random_table(train.len(), seed);
        assert!(pit <= full_batch_loss(&params, &train, EpochMode::Fixed(&table)));
    }
}

#[test]
fn runs_are_deterministic() {
    let (train, valid) = datasets(16, 4, 128, 4);
    let s = schedule(Preset::Cascade, 2, 2, 9);
    let a = run_schedule(&s, &sep(), &train, &valid, None).unwrap().0;
    let b = run_schedule(&s, &sep(), &train, &valid, None).unwrap().0;
    assert_eq!(a, b);
    assert_eq!(a.epochs_csv(), b.epochs_csv());
}

#[test]
fn empty_section_leaves_state_alone() {
    let (train, valid) = datasets(6, 2, 64, 5);
    let s = schedule(Preset::Pit, 0, 1, 0);
    let mut state = TrainState::new(&sep(), &s).unwrap();
    let before = state.params.clone();
    let empty = SectionSpec { epochs: 0, reinit_model: true, ..SectionSpec::pit(0) };
    let records = run_section(&mut state, &empty, 0, &s, &train, &valid).unwrap();
    assert!(records.is_empty());
    assert_eq!(state.params, before);
    assert_eq!(state.global_epoch, 0);
}

#[test]
fn recorded_table_is_the_argmin_of_the_final_params() {
    let (train, valid) = datasets(10, 2, 64, 6);
    let s = schedule(Preset::FixedFromPit, 3, 1, 2);
    let mut state = TrainState::new(&sep(), &s).unwrap();
    run_section(&mut state, &s.sections[0], 0, &s, &train, &valid).unwrap();
    let recorded = state.recorded.clone().unwrap();
    assert_eq!(recorded.epoch_tag, Some(3));
    assert_eq!(recorded.entries, record_assignments(&state.params, &train).unwrap().entries);
}

#[test]
fn reinit_ignores_previous_params() {
    let (train, valid) = datasets(8, 2, 64, 7);
    let s = schedule(Preset::FixedFromPit, 2, 1, 3);
    let mut state = TrainState::new(&sep(), &s).unwrap();
    run_section(&mut state, &s.sections[0], 0, &s, &train, &valid).unwrap();
    let mut perturbed = state.clone();
    perturbed.params.add_scaled(&state.params, 1.0);
    let a = run_section(&mut state, &s.sections[1], 1, &s, &train, &valid).unwrap();
    let b = run_section(&mut perturbed, &s.sections[1], 1, &s, &train, &valid).unwrap();
    assert_eq!(a, b);
    assert_eq!(state.params, perturbed.params);

    // same as starting the section from a fresh init of the derived seed
    let mut manual = TrainState::new(&sep(), &s).unwrap();
    run_section(&mut manual, &s.sections[0], 0, &s, &train, &valid).unwrap();
    manual.params = init_params(&SeparatorConfig { seed: section_init_seed(3, 1), ..sep() }).unwrap();
    let no_reinit = SectionSpec { reinit_model: false, ..s.sections[1].clone() };
    let c = run_section(&mut manual, &no_reinit, 1, &s, &train, &valid).unwrap();
    assert_eq!(a, c);
}

#[test]
fn telemetry_is_consistent() {
    let (train, valid) = datasets(20, 4, 64, 8);
    let s = schedule(Preset::Cascade, 2, 3, 1);
    let (report, state) = run_schedule(&s, &sep(), &train, &valid, None).unwrap();
    assert_eq!(report.records.len(), s.total_epochs());
    assert_eq!(state.snapshots.len(), s.total_epochs());
    assert_eq!(report.section_ends(), vec![2, 5, 8]);
    assert!(report.records[0].switch_count.is_none());
    for (k, r) in report.records.iter().enumerate().skip(1) {
        let (count, pct) = switch_count(&state.snapshots[k - 1], &state.snapshots[k]).unwrap();
        assert_eq!(r.switch_count, Some(count));
        assert_eq!(r.switch_pct, Some(pct));
        assert_eq!(r.global_epoch, k + 1);
    }
    assert_eq!(report.final_table().unwrap(), state.snapshots.last().unwrap());
}

#[test]
fn reinit_drops_validation_at_the_section_boundary() {
    let (train, valid) = datasets(60, 10, 256, 9);
    let mut s = schedule(Preset::FixedFromPit, 5, 2, 0);
    s.batch_size = 1;
    let (report, _) = run_schedule(&s, &sep(), &train, &valid, None).unwrap();
    let last_pit = report.records[4].valid_sdri_db;
    let first_fixed = report.records[5].valid_sdri_db;
    assert!(first_fixed < last_pit, "{first_fixed} vs {last_pit}");
}

#[test]
fn fixed_energy_trains_on_the_energy_table() {
    let (train, valid) = datasets(10, 2, 64, 10);
    let s = schedule(Preset::FixedEnergy, 3, 2, 0);
    let (report, _) = run_schedule(&s, &sep(), &train, &valid, None).unwrap();
    assert_eq!(report.records.len(), 2);
    assert!(report.records.iter().all(|r| r.mode == "fixed"));
    let energy = pitflex::labels::energy_assignment(&train, 32, 40.0).unwrap();
    assert_eq!(report.tables["energy"], energy);
    let table = SectionSpec::fixed(LabelSource::Table(energy.clone()), 2);
    let direct = run_schedule(&Schedule { sections: vec![table], ..s }, &sep(), &train, &valid, None).unwrap().0;
    assert_eq!(direct.records, report.records);
}

fn oracle_sdri(d: &Dataset, params: &SeparatorParams) -> f64 {
    let mut total = 0.0;
    for m in &d.mixtures {
        let (est, _) = forward(params, &m.mix).unwrap();
        let score = |p: &[usize]| {
            p.iter()
                .enumerate()
                .map(|(c, &j)| {
                    sdr_oracle(m.sources[j].samples(), est[c].samples())
                        - sdr_oracle(m.sources[j].samples(), m.mix.samples())
                })
                .sum::<f64>()
                / 2.0
        };
        total += score(&[0, 1]).max(score(&[1, 0]));
    }
    total / d.len() as f64
}

#[test]
fn validation_matches_scalar_recomputation() {
    let (_, valid) = datasets(1, 12, 96, 11);
    for seed in 0..3 {
        let params = init(&small_config(seed));
        assert!((validate(&params, &valid).unwrap() - oracle_sdri(&valid, &params)).abs() < 1e-9);
    }
}
