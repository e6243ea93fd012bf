//! Sectioned training: PIT and fixed-label sections, the interrupted cascade,
//! validation and per-epoch switch telemetry.

mod report;
mod schedule;
mod train;

pub use report::{EpochRecord, RunReport, EPOCH_CSV_HEADER};
pub use schedule::{LabelConfig, LabelSource, Preset, Schedule, SectionMode, SectionSpec};
pub use train::{
    resolve_labels, run_epoch, run_schedule, run_section, section_init_seed, validate, EpochMode, EpochOutcome,
    TrainState,
};
