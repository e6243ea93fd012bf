use std::fs;
use std::path::Path;

use pitflex::harness::{
    cmd_gen_data, cmd_labels, cmd_report, cmd_sweep_l, cmd_train, read_run_report, run_files, ExperimentConfig,
    LabelStrategy, REPORT_HEADER,
};
use pitflex::labels::{diff_labels, Assignment, AssignmentTable};
use pitflex::signal::{synthesize_split, write_dataset, SpeakerProfile, Split};
use pitflex::trainer::{LabelConfig, Preset, EPOCH_CSV_HEADER};
use pitflex::Error;

fn tiny(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        t_train: 16,
        t_valid: 4,
        t_test: 4,
        samples_per_utt: 128,
        pit_epochs: 2,
        epochs: 2,
        batch_size: 4,
        lr: 5e-3,
        seeds: vec![1],
        out_dir: dir.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn gen_data_writes_three_splits_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig { out_dir: dir.path().to_path_buf(), ..ExperimentConfig::default() };
    let manifest = cmd_gen_data(&config).unwrap();
    assert_eq!(manifest.splits.iter().map(|s| s.mixtures).collect::<Vec<_>>(), vec![200, 50, 50]);
    let first = files(&config.data_dir());
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, vec!["manifest.json", "test.pitd", "train.pitd", "valid.pitd"]);
    assert!(first.iter().filter(|(n, _)| n.ends_with(".pitd")).all(|(_, b)| &b[..4] == b"PITD"));
    cmd_gen_data(&config).unwrap();
    assert_eq!(files(&config.data_dir()), first);
}

#[test]
fn gen_data_rejects_empty_training_split() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig { t_train: 0, ..tiny(dir.path()) };
    assert!(matches!(cmd_gen_data(&config), Err(Error::InvalidConfig(_))));
}

#[test]
fn train_refuses_data_from_other_settings() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny(dir.path());
    cmd_gen_data(&config).unwrap();
    let other = ExperimentConfig { data_seed: 99, ..config };
    assert!(matches!(cmd_train(&other, Preset::Pit, 1), Err(Error::InvalidConfig(_))));
}

#[test]
fn energy_labels_are_total_two_source_permutations() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny(dir.path());
    cmd_gen_data(&config).unwrap();
    let out = cmd_labels(&config.data_dir().join("train.pitd"), LabelStrategy::Energy, &LabelConfig::default(), None)
        .unwrap();
    assert_eq!(out.table.len(), config.t_train);
    assert!(out.table.entries.iter().all(|a| *a == Assignment::identity(2) || *a == Assignment::swap2()));
    assert_eq!(AssignmentTable::read(&out.table_path).unwrap(), out.table);
    assert!(out.summary.cluster.is_none());
    assert!(out.summary_path.exists());
    assert!("loudness".parse::<LabelStrategy>().is_err());
}

#[test]
fn embedding_labels_group_disjoint_speakers() {
    let dir = tempfile::tempdir().unwrap();
    let speaker = |id: u32, bands: [f64; 8]| SpeakerProfile { speaker_id: id, band_weights: bands.to_vec(), base_amplitude: 0.8 };
    let speakers = [
        speaker(0, [0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        speaker(1, [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5]),
    ];
    let d = synthesize_split(&speakers, 30, 256, (-2.5, 2.5), Split::Train, 3).unwrap();
    let path = dir.path().join("train.pitd");
    write_dataset(&path, &d).unwrap();
    let out = cmd_labels(&path, LabelStrategy::Embed, &LabelConfig::default(), None).unwrap();
    let channel0: Vec<u32> =
        d.mixtures.iter().zip(&out.table.entries).map(|(m, a)| m.speaker_ids[a.perm()[0]]).collect();
    assert!(channel0.iter().all(|&s| s == channel0[0]), "{channel0:?}");
    let cluster = out.summary.cluster.unwrap();
    assert!(cluster.converged);
    assert_eq!(cluster.objective, *cluster.objective_history.last().unwrap());
}

#[test]
fn train_writes_the_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny(dir.path());
    cmd_gen_data(&config).unwrap();
    let pit = cmd_train(&config, Preset::Pit, 1).unwrap();
    assert!(pit.report.diff_labels_pct.is_none());
    let csv = fs::read_to_string(pit.run_dir.join(run_files::EPOCHS)).unwrap();
    assert_eq!(csv.lines().next(), Some(EPOCH_CSV_HEADER));
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(1) == Some("1")));

    let cascade = cmd_train(&config, Preset::Cascade, 1).unwrap();
    assert_eq!(cascade.report.section_ends(), vec![2, 4, 6]);
    assert_eq!(cascade.report.diff_labels_pct, Some(0.0));
    let csv = fs::read_to_string(cascade.run_dir.join(run_files::EPOCHS)).unwrap();
    let sections: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(sections, vec!["1", "1", "2", "2", "3", "3"]);
    for name in [run_files::REPORT, run_files::LABELS, run_files::FINAL_TABLE, run_files::MODEL] {
        assert!(cascade.run_dir.join(name).exists(), "{name}");
    }
    assert_eq!(fs::read_dir(cascade.run_dir.join(run_files::SNAPSHOTS)).unwrap().count(), 6);
    assert_eq!(read_run_report(&cascade.run_dir).unwrap(), cascade.report);

    // with the cascade run present, other runs are compared against its final table
    let energy = cmd_train(&config, Preset::FixedEnergy, 1).unwrap();
    let expected = diff_labels(energy.report.labels().unwrap(), cascade.report.final_table().unwrap()).unwrap();
    assert_eq!(energy.report.diff_labels_pct, Some(expected));
    assert_eq!(energy.report.records.len(), config.epochs);
}

#[test]
fn sweep_matches_fixed_from_pit_and_handles_one_value() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny(dir.path());
    cmd_gen_data(&config).unwrap();
    let single = cmd_sweep_l(&config, &[1], 2, 1).unwrap();
    assert_eq!(single.rows.len(), 1);
    let csv = fs::read_to_string(config.sweep_dir(1).join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);

    let sweep = cmd_sweep_l(&config, &[1, 2, 3], 2, 1).unwrap();
    assert_eq!(sweep.rows.iter().map(|r| r.l).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert_eq!(sweep.rows[1].diff_vs_ref_pct, 0.0);
    let ffp = cmd_train(&config, Preset::FixedFromPit, 1).unwrap().report;
    assert_eq!(sweep.rows[1].valid_sdri_db, ffp.final_valid_sdri_db);
    assert_eq!(Some(sweep.rows[1].test_sdri_db), ffp.final_test_sdri_db);
    assert_eq!(&sweep.tables[&2], ffp.labels().unwrap());
    assert!(cmd_sweep_l(&config, &[0], 2, 1).is_err());
}

#[test]
fn report_rows_mirror_the_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny(dir.path());
    cmd_gen_data(&config).unwrap();
    let pit = cmd_train(&config, Preset::Pit, 1).unwrap().run_dir;
    let one = cmd_report(std::slice::from_ref(&pit)).unwrap();
    assert_eq!(one.rows.len(), 1);
    assert_eq!(one.table_csv().lines().next(), Some(REPORT_HEADER));
    assert_eq!(one.rows[0].pct_diff_labels, None);

    let twin = cmd_report(&[pit.clone(), pit.clone()]).unwrap();
    assert_eq!(twin.rows[0], twin.rows[1]);

    let cascade = cmd_train(&config, Preset::Cascade, 1).unwrap().run_dir;
    let both = cmd_report(&[pit, cascade]).unwrap();
    assert_eq!(both.rows[1].approach, "cascade");
    assert_eq!(both.rows[1].labels, "csc");
    assert_eq!(both.rows[1].pct_diff_labels, Some(0.0));
    assert_eq!(both.rows[0].labels, "dyn");
    assert!(both.rows[0].pct_diff_labels.is_some());
    assert_eq!(both.curves.len(), 2);
    assert!(cmd_report(&[]).is_err());
}
