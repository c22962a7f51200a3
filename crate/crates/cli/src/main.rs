use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use slotrack::eval::{evaluate, EvalLevel};
use slotrack::model::corpus_to_jsonl;
use slotrack::pipeline::training_set;
use slotrack::{
    count_priors, generate_corpus, hybrid_track, learn_enabled_slots, load_corpus, load_lexicon,
    load_ontology, predictions_from_jsonl, predictions_to_jsonl, train_hybrid, GeneratorSpec,
    LinearModel, Ontology, SynonymLexicon, Tracker, TrackerConfig,
};

#[derive(Parser)]
#[command(name = "slotrack", version, about = "Rule-based dialog state tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Resources {
    #[arg(long)]
    ontology: PathBuf,
    #[arg(long)]
    lexicon: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrackerKind {
    Baseline,
    Elaborate,
    Hybrid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Utterance,
    Subdialog,
}

#[derive(Subcommand)]
enum Command {
    /// Track every dialog of a corpus and write per-utterance predictions.
    Track {
        #[command(flatten)]
        res: Resources,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "elaborate")]
        tracker: TrackerKind,
        /// Trained model, required for the hybrid tracker.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against the corpus gold states.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_enum, default_value = "utterance")]
        level: Level,
        /// Needed only when the corpus must be validated against it.
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Choose the slots whose values should persist across utterances.
    LearnCarryover {
        #[command(flatten)]
        res: Resources,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count gold slot-value occurrences in a training corpus.
    CountPriors {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        ontology: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the hybrid classifier on rule-step features.
    TrainHybrid {
        #[command(flatten)]
        res: Resources,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic corpus.
    Generate {
        #[command(flatten)]
        res: Resources,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_resources(res: &Resources) -> anyhow::Result<(Ontology, SynonymLexicon)> {
    let ontology = load_ontology(&res.ontology)?;
    let lexicon = load_lexicon(&res.lexicon, &ontology)?;
    Ok((ontology, lexicon))
}

/// Corpus loading without an ontology accepts any topic and slot.
fn load_corpus_loose(
    path: &Path,
    ontology: Option<&Path>,
) -> anyhow::Result<Vec<slotrack::Dialog>> {
    match ontology {
        Some(o) => Ok(load_corpus(path, &load_ontology(o)?)?),
        None => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            text.lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    serde_json::from_str(l).map_err(|e| {
                        slotrack::Error::Parse {
                            location: format!("{} line {}", path.display(), i + 1),
                            message: e.to_string(),
                        }
                        .into()
                    })
                })
                .collect()
        }
    }
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Track {
            res,
            config,
            corpus,
            tracker,
            model,
            out,
        } => {
            let (ontology, lexicon) = load_resources(&res)?;
            let config = TrackerConfig::load(&config)?;
            let corpus = load_corpus(&corpus, &ontology)?;
            let t = Tracker::new(&ontology, &lexicon, config)?;
            let model = match (tracker, model) {
                (TrackerKind::Hybrid, Some(p)) => {
                    let text = fs::read_to_string(&p)
                        .with_context(|| format!("reading {}", p.display()))?;
                    Some(LinearModel::from_json(&text)?)
                }
                (TrackerKind::Hybrid, None) => bail!("--model is required with --tracker hybrid"),
                _ => None,
            };
            let results = corpus
                .iter()
                .map(|d| match (tracker, &model) {
                    (TrackerKind::Baseline, _) => t.baseline_dialog(d),
                    (TrackerKind::Elaborate, _) => t.track_dialog(d),
                    (TrackerKind::Hybrid, Some(m)) => hybrid_track(&t, m, d),
                    (TrackerKind::Hybrid, None) => unreachable!(),
                })
                .collect::<Result<Vec<_>, _>>()?;
            write(&out, &predictions_to_jsonl(&results))
        }
        Command::Evaluate {
            corpus,
            predictions,
            level,
            ontology,
            json,
        } => {
            let corpus = load_corpus_loose(&corpus, ontology.as_deref())?;
            let text = fs::read_to_string(&predictions)
                .with_context(|| format!("reading {}", predictions.display()))?;
            let results = predictions_from_jsonl(&text)?;
            let level = match level {
                Level::Utterance => EvalLevel::Utterance,
                Level::Subdialog => EvalLevel::Subdialog,
            };
            let report = evaluate(&corpus, &results, level)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{report}");
            }
            Ok(())
        }
        Command::LearnCarryover {
            res,
            config,
            train,
            out,
        } => {
            let (ontology, lexicon) = load_resources(&res)?;
            let config = TrackerConfig::load(&config)?;
            let corpus = load_corpus(&train, &ontology)?;
            let policy = learn_enabled_slots(&corpus, &ontology, &lexicon, &config)?;
            write(&out, &(policy.to_json() + "\n"))
        }
        Command::CountPriors {
            train,
            ontology,
            out,
        } => {
            let corpus = load_corpus_loose(&train, ontology.as_deref())?;
            write(&out, &(count_priors(&corpus)?.to_json() + "\n"))
        }
        Command::TrainHybrid {
            res,
            config,
            train,
            out,
        } => {
            let (ontology, lexicon) = load_resources(&res)?;
            let config = TrackerConfig::load(&config)?;
            let corpus = load_corpus(&train, &ontology)?;
            let params = config.hybrid.clone();
            let tracker = Tracker::new(&ontology, &lexicon, config)?;
            let (rows, labels) = training_set(&tracker, &corpus)?;
            let features: Vec<_> = rows.iter().map(|r| r.features).collect();
            let model = train_hybrid(&features, &labels, &params)?;
            write(&out, &(model.to_json() + "\n"))
        }
        Command::Generate { res, spec, out } => {
            let (ontology, lexicon) = load_resources(&res)?;
            let text =
                fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let spec = GeneratorSpec::from_json(&text)?;
            let corpus = generate_corpus(&ontology, &lexicon, &spec)?;
            write(&out, &corpus_to_jsonl(&corpus))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let validation = err
                .downcast_ref::<slotrack::Error>()
                .is_some_and(slotrack::Error::is_validation);
            ExitCode::from(if validation { 2 } else { 1 })
        }
    }
}
