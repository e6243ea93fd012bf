use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pitflex::harness::{self, ExperimentConfig, LabelStrategy};
use pitflex::trainer::{LabelConfig, Preset};

#[derive(Parser)]
#[command(name = "pitflex", version, about = "Label-assignment experiments for permutation invariant training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the train/valid/test datasets of a config.
    GenData {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute a label table for one dataset file.
    Labels {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum)]
        strategy: StrategyArg,
        /// Output CSV (default: next to the dataset).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Label settings as JSON (the `labels` object of a config).
        #[arg(long)]
        labels_config: Option<PathBuf>,
    },
    /// Train one preset with one seed.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        preset: PresetArg,
        /// Training seed (default: first entry of `seeds`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train fixed-label models from labels recorded at several epochs of one PIT run.
    #[command(name = "sweep-L")]
    SweepL {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "L", value_delimiter = ',', required = true)]
        l: Vec<usize>,
        #[arg(long = "ref-L")]
        ref_l: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Merge run directories into a comparison table.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Also write summary.csv and curve CSVs here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Energy,
    Embed,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Pit,
    FixedEnergy,
    FixedEmbed,
    FixedFromPit,
    Cascade,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Pit => Preset::Pit,
            PresetArg::FixedEnergy => Preset::FixedEnergy,
            PresetArg::FixedEmbed => Preset::FixedEmbed,
            PresetArg::FixedFromPit => Preset::FixedFromPit,
            PresetArg::Cascade => Preset::Cascade,
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading config {}", path.display()))
}

fn seed_or_first(config: &ExperimentConfig, seed: Option<u64>) -> u64 {
    seed.unwrap_or(config.seeds[0])
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { config } => {
            let config = load(&config)?;
            let manifest = harness::cmd_gen_data(&config)?;
            for s in &manifest.splits {
                println!("{}: {} mixtures -> {}", s.split.as_str(), s.mixtures, config.data_dir().join(&s.file).display());
            }
        }
        Command::Labels { dataset, strategy, out, labels_config } => {
            let labels = match labels_config {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    serde_json::from_str::<LabelConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
                }
                None => LabelConfig::default(),
            };
            let strategy = match strategy {
                StrategyArg::Energy => LabelStrategy::Energy,
                StrategyArg::Embed => LabelStrategy::Embed,
            };
            let outcome = harness::cmd_labels(&dataset, strategy, &labels, out.as_deref())?;
            let s = &outcome.summary;
            print!("{}: {} mixtures, {} swapped", s.strategy, s.mixtures, s.swapped);
            if let Some(c) = &s.cluster {
                print!(", objective {:.6} after {} iterations", c.objective, c.iterations);
            }
            println!(" -> {}", outcome.table_path.display());
        }
        Command::Train { config, preset, seed } => {
            let config = load(&config)?;
            let seed = seed_or_first(&config, seed);
            let outcome = harness::cmd_train(&config, preset.into(), seed)?;
            let r = &outcome.report;
            print!("{} seed {seed}: valid SDRi {:.2} dB", r.approach, r.final_valid_sdri_db);
            if let Some(t) = r.final_test_sdri_db {
                print!(", test SDRi {t:.2} dB");
            }
            println!(" -> {}", outcome.run_dir.display());
        }
        Command::SweepL { config, l, ref_l, seed } => {
            let config = load(&config)?;
            let seed = seed_or_first(&config, seed);
            let result = harness::cmd_sweep_l(&config, &l, ref_l, seed)?;
            print!("{}", result.to_csv());
        }
        Command::Report { dirs, out } => {
            let output = harness::cmd_report(&dirs)?;
            if let Some(dir) = out {
                harness::write_report(&dir, &output)?;
            }
            print!("{}", output.table_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut line = String::new();
            for cause in e.chain().map(|c| c.to_string()) {
                // some errors already embed their source in their message
                if !line.ends_with(&cause) {
                    if !line.is_empty() {
                        line.push_str(": ");
                    }
                    line.push_str(&cause);
                }
            }
            eprintln!("pitflex: {line}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_sweep_values() {
        let cli = Cli::try_parse_from(["pitflex", "sweep-L", "--config", "c.json", "--L", "1,5,10", "--ref-L", "10"]).unwrap();
        let Command::SweepL { l, ref_l, .. } = cli.command else { panic!("wrong subcommand") };
        assert_eq!(l, vec![1, 5, 10]);
        assert_eq!(ref_l, 10);
    }

    #[test]
    fn rejects_unknown_strategy() {
        assert!(Cli::try_parse_from(["pitflex", "labels", "--dataset", "d", "--strategy", "loudness"]).is_err());
    }
}
