//! The elaborate rule-based tracker: per utterance, synonym matching, then
//! coreference, then pruning, then carryover.

mod features;
mod hybrid;

pub use features::{export_features, FeatureRow, FeatureVector, FEATURE_NAMES};
pub use hybrid::{hybrid_track, label_rows, train_hybrid, training_set, HybridParams, LinearModel};

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotate::{AnnotatedUtterance, Tagger};
use crate::carryover::{apply_carryover, CarryoverPolicy};
use crate::coref::{detect_templates, resolve, HistoryIndex, PlaceTypeVocab};
use crate::error::{Error, Result};
use crate::matching::{baseline_track, detect_pairs, Detection, MatcherConfig, Source};
use crate::model::{Dialog, DialogState, Ontology, SlotValuePair, SynonymLexicon, Utterance};
use crate::prune::{prune, PriorTable, PruneContext};

/// Where carried pairs come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CarryoverScope {
    /// Detections accumulate within a subdialog; the final state of a
    /// subdialog carries into the next one when the topic is unchanged.
    #[default]
    Subdialog,
    /// No accumulation; each utterance carries from the previous one.
    Utterance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub matcher: MatcherConfig,
    pub carryover: CarryoverPolicy,
    pub carryover_scope: CarryoverScope,
    pub priors: PriorTable,
    pub enable_coref: bool,
    pub enable_prune: bool,
    pub hybrid: HybridParams,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            matcher: MatcherConfig::default(),
            carryover: CarryoverPolicy::default(),
            carryover_scope: CarryoverScope::default(),
            priors: PriorTable::default(),
            enable_coref: true,
            enable_prune: true,
            hybrid: HybridParams::default(),
        }
    }
}

fn yes() -> bool {
    true
}

/// `tracker-config.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackerConfigFile {
    #[serde(default)]
    pub matcher: MatcherConfig,
    #[serde(default)]
    pub carryover_slots: Vec<String>,
    #[serde(default)]
    pub carryover_scope: CarryoverScope,
    #[serde(default)]
    pub priors_path: Option<String>,
    #[serde(default = "yes")]
    pub enable_coref: bool,
    #[serde(default = "yes")]
    pub enable_prune: bool,
    #[serde(default)]
    pub hybrid: HybridParams,
}

impl TrackerConfig {
    /// Loads `tracker-config.json`; `priors_path` is relative to the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: TrackerConfigFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
            location: format!("{} line {}", path.display(), e.line()),
            message: e.to_string(),
        })?;
        let priors = match &file.priors_path {
            Some(p) => {
                let p = path.parent().unwrap_or(Path::new(".")).join(p);
                let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                PriorTable::from_json(&text)?
            }
            None => PriorTable::default(),
        };
        Ok(Self {
            matcher: file.matcher,
            carryover: CarryoverPolicy::new(file.carryover_slots),
            carryover_scope: file.carryover_scope,
            priors,
            enable_coref: file.enable_coref,
            enable_prune: file.enable_prune,
            hybrid: file.hybrid,
        })
    }
}

/// A detection as recorded in a tracking result.
#[derive(Debug, Clone, PartialEq)]
pub struct ProvenanceEntry {
    pub detection: Detection,
    /// Detected before pruning, but its pair did not survive.
    pub pruned: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceResult {
    pub subdialog_index: usize,
    /// Position within the subdialog.
    pub utterance_index: usize,
    pub state: DialogState,
    pub provenance: Vec<ProvenanceEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingResult {
    pub dialog_id: String,
    pub utterances: Vec<UtteranceResult>,
}

/// One line of `predictions.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub dialog_id: String,
    pub subdialog_index: usize,
    pub utterance_index: usize,
    pub state: DialogState,
}

impl TrackingResult {
    /// Final (last-utterance) state of each subdialog, in order.
    pub fn subdialog_states(&self) -> Vec<DialogState> {
        let mut out: Vec<DialogState> = Vec::new();
        let mut current = None;
        for u in &self.utterances {
            if current == Some(u.subdialog_index) {
                *out.last_mut().expect("nonempty") = u.state.clone();
            } else {
                out.push(u.state.clone());
                current = Some(u.subdialog_index);
            }
        }
        out
    }

    pub fn prediction_rows(&self) -> impl Iterator<Item = PredictionRow> + '_ {
        self.utterances.iter().map(|u| PredictionRow {
            dialog_id: self.dialog_id.clone(),
            subdialog_index: u.subdialog_index,
            utterance_index: u.utterance_index,
            state: u.state.clone(),
        })
    }
}

pub fn predictions_to_jsonl(results: &[TrackingResult]) -> String {
    let mut out = String::new();
    for row in results.iter().flat_map(TrackingResult::prediction_rows) {
        out.push_str(&serde_json::to_string(&row).expect("row serializes"));
        out.push('\n');
    }
    out
}

/// Groups prediction rows by dialog id, in first-appearance order. The
/// results carry no provenance.
pub fn predictions_from_jsonl(text: &str) -> Result<Vec<TrackingResult>> {
    let mut results: Vec<TrackingResult> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: PredictionRow = serde_json::from_str(line).map_err(|e| Error::Parse {
            location: format!("line {}", i + 1),
            message: e.to_string(),
        })?;
        let utt = UtteranceResult {
            subdialog_index: row.subdialog_index,
            utterance_index: row.utterance_index,
            state: row.state,
            provenance: Vec::new(),
        };
        match results.iter_mut().find(|r| r.dialog_id == row.dialog_id) {
            Some(r) => r.utterances.push(utt),
            None => results.push(TrackingResult {
                dialog_id: row.dialog_id,
                utterances: vec![utt],
            }),
        }
    }
    Ok(results)
}

/// Shared, immutable tracking resources.
#[derive(Debug, Clone)]
pub struct Tracker<'a> {
    ontology: &'a Ontology,
    lexicon: &'a SynonymLexicon,
    config: TrackerConfig,
    tagger: Tagger,
    vocab: PlaceTypeVocab,
}

impl<'a> Tracker<'a> {
    pub fn new(
        ontology: &'a Ontology,
        lexicon: &'a SynonymLexicon,
        config: TrackerConfig,
    ) -> Result<Self> {
        config
            .matcher
            .validate()
            .map_err(|m| Error::invalid("matcher", m))?;
        config.carryover.validate(ontology)?;
        Ok(Self {
            ontology,
            lexicon,
            tagger: Tagger::from_lexicon(lexicon),
            vocab: PlaceTypeVocab::from_ontology(ontology),
            config,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn ontology(&self) -> &'a Ontology {
        self.ontology
    }

    pub fn session(&self) -> TrackingSession<'_, 'a> {
        TrackingSession::new(self)
    }

    pub fn track_dialog(&self, dialog: &Dialog) -> Result<TrackingResult> {
        let mut session = self.session();
        let mut utterances = Vec::with_capacity(dialog.utterance_count());
        for sub in &dialog.subdialogs {
            session.begin_subdialog(&sub.topic)?;
            for utt in &sub.utterances {
                utterances.push(session.track_utterance(utt)?);
            }
        }
        Ok(TrackingResult {
            dialog_id: dialog.id.clone(),
            utterances,
        })
    }

    /// The fuzzy-matching baseline, accumulating matches within each
    /// subdialog.
    pub fn baseline_dialog(&self, dialog: &Dialog) -> Result<TrackingResult> {
        let mut utterances = Vec::with_capacity(dialog.utterance_count());
        for (si, sub) in dialog.subdialogs.iter().enumerate() {
            if !self.ontology.has_topic(&sub.topic) {
                return Err(Error::Tracking(format!("unknown topic {:?}", sub.topic)));
            }
            let mut state = DialogState::new();
            for (ui, utt) in sub.utterances.iter().enumerate() {
                for pair in
                    baseline_track(self.ontology, &sub.topic, utt, &self.config.matcher).iter()
                {
                    state.insert(pair.clone());
                }
                utterances.push(UtteranceResult {
                    subdialog_index: si,
                    utterance_index: ui,
                    state: state.clone(),
                    provenance: Vec::new(),
                });
            }
        }
        Ok(TrackingResult {
            dialog_id: dialog.id.clone(),
            utterances,
        })
    }
}

/// Per-dialog tracking state. Utterances must be fed in order.
#[derive(Debug)]
pub struct TrackingSession<'t, 'a> {
    tracker: &'t Tracker<'a>,
    history: HistoryIndex,
    position: usize,
    subdialog_index: Option<usize>,
    utterance_in_subdialog: usize,
    topic: Option<String>,
    annotated: Vec<(usize, AnnotatedUtterance)>,
    accumulated: Vec<Detection>,
    /// Final state and topic of the previous subdialog.
    prev_subdialog: (DialogState, Option<String>),
    /// State and topic of the previous utterance.
    prev_utterance: (DialogState, Option<String>),
}

impl<'t, 'a> TrackingSession<'t, 'a> {
    fn new(tracker: &'t Tracker<'a>) -> Self {
        Self {
            tracker,
            history: HistoryIndex::new(),
            position: 0,
            subdialog_index: None,
            utterance_in_subdialog: 0,
            topic: None,
            annotated: Vec::new(),
            accumulated: Vec::new(),
            prev_subdialog: (DialogState::new(), None),
            prev_utterance: (DialogState::new(), None),
        }
    }

    pub fn history(&self) -> &HistoryIndex {
        &self.history
    }

    pub fn begin_subdialog(&mut self, topic: &str) -> Result<()> {
        if !self.tracker.ontology.has_topic(topic) {
            return Err(Error::Tracking(format!("unknown topic {topic:?}")));
        }
        if self.subdialog_index.is_some() {
            self.prev_subdialog = self.prev_utterance.clone();
        }
        self.subdialog_index = Some(self.subdialog_index.map_or(0, |i| i + 1));
        self.utterance_in_subdialog = 0;
        self.topic = Some(topic.to_string());
        self.annotated.clear();
        self.accumulated.clear();
        Ok(())
    }

    pub fn track_utterance(&mut self, utterance: &Utterance) -> Result<UtteranceResult> {
        let (Some(topic), Some(subdialog_index)) = (self.topic.clone(), self.subdialog_index)
        else {
            return Err(Error::Tracking(
                "utterance tracked before any subdialog began".into(),
            ));
        };
        let tracker = self.tracker;
        let ontology = tracker.ontology;
        let config = &tracker.config;
        let index = self.position;

        // 1. synonym matching
        let annotated = tracker.tagger.annotate(utterance);
        let mut current = detect_pairs(
            tracker.lexicon,
            ontology,
            &topic,
            &annotated,
            index,
            &config.matcher,
        );

        // 2. coreference, with this utterance's matches visible as antecedents
        if config.enable_coref {
            let templates = detect_templates(&annotated, &tracker.vocab);
            if !templates.is_empty() {
                let mark = self.history.len();
                for d in &current {
                    self.history.push(d.clone(), ontology);
                }
                let resolved: Vec<Detection> = templates
                    .iter()
                    .filter_map(|t| resolve(t, &self.history, ontology, index))
                    .filter(|d| ontology.is_valid(&topic, &d.pair))
                    .collect();
                self.history.truncate(mark, ontology);
                current.extend(resolved);
            }
        }

        if config.carryover_scope == CarryoverScope::Utterance {
            self.accumulated.clear();
        }
        self.accumulated.extend(current);
        self.annotated.push((index, annotated));

        // 3. pruning
        let survivors = if config.enable_prune {
            let ctx = PruneContext {
                topic: &topic,
                utterances: &self.annotated,
                priors: &config.priors,
                ontology,
            };
            prune(self.accumulated.clone(), &ctx)
        } else {
            self.accumulated.clone()
        };

        // 4. carryover
        let slots_seen: BTreeSet<String> = survivors.iter().map(|d| d.pair.slot.clone()).collect();
        let (carry_from, carry_topic) = match config.carryover_scope {
            CarryoverScope::Subdialog => &self.prev_subdialog,
            CarryoverScope::Utterance => &self.prev_utterance,
        };
        let carried = apply_carryover(
            carry_from,
            carry_topic.as_deref(),
            &topic,
            &slots_seen,
            &config.carryover,
            index,
        );

        let state: DialogState = survivors
            .iter()
            .chain(&carried)
            .map(|d| d.pair.clone())
            .collect();

        let surviving: HashSet<&SlotValuePair> = survivors.iter().map(|d| &d.pair).collect();
        let mut provenance: Vec<ProvenanceEntry> = survivors
            .iter()
            .map(|d| ProvenanceEntry {
                detection: d.clone(),
                pruned: false,
            })
            .collect();
        provenance.extend(
            self.accumulated
                .iter()
                .filter(|d| !surviving.contains(&d.pair))
                .map(|d| ProvenanceEntry {
                    detection: d.clone(),
                    pruned: true,
                }),
        );
        provenance.extend(carried.into_iter().map(|d| ProvenanceEntry {
            detection: d,
            pruned: false,
        }));

        for d in survivors
            .into_iter()
            .filter(|d| d.utterance_index == index && d.source != Source::Carryover)
        {
            self.history.push(d, ontology);
        }

        self.prev_utterance = (state.clone(), Some(topic));
        self.position += 1;
        let result = UtteranceResult {
            subdialog_index,
            utterance_index: self.utterance_in_subdialog,
            state,
            provenance,
        };
        self.utterance_in_subdialog += 1;
        Ok(result)
    }
}
