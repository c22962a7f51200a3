//! Rule-based dialog state tracking: synonym matching with fuzzy fallback,
//! template coreference, pruning, slot carryover, a hybrid classifier over
//! rule features, and utterance/subdialog evaluation.

pub mod annotate;
pub mod carryover;
pub mod coref;
pub mod error;
pub mod eval;
pub mod generate;
pub mod matching;
pub mod model;
pub mod pipeline;
pub mod prune;

pub use carryover::{count_priors, learn_enabled_slots, CarryoverPolicy};
pub use error::{Error, Result, ValidationIssue};
pub use eval::{evaluate, EvalLevel, MetricsReport};
pub use generate::{generate_corpus, GeneratorSpec, PhenomenonWeights};
pub use matching::{Detection, MatcherConfig, Source};
pub use model::{
    load_corpus, load_lexicon, load_ontology, parse_corpus, Dialog, DialogState, Ontology,
    SlotValuePair, Speaker, Subdialog, Synonym, SynonymLexicon, Utterance,
};
pub use pipeline::{
    hybrid_track, predictions_from_jsonl, predictions_to_jsonl, train_hybrid, CarryoverScope,
    HybridParams, LinearModel, Tracker, TrackerConfig, TrackingResult,
};
pub use prune::PriorTable;
