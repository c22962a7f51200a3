//! Place-related anaphora resolution for dialogs.
//!
//! Three surface templates are recognized:
//!
//! 1. possessive adjective + place type ("our hotel", "your museums")
//! 2. demonstrative + place type ("this garden", "these parks")
//! 3. "here" / "there"
//!
//! Templates 1 and 2 resolve to the most recent detection whose value has
//! the same place type; template 3 resolves to the most recent detection of
//! any place slot. Detection uses token adjacency rather than a parse tree.

use std::collections::HashMap;

use crate::annotate::{lemma_of, tokenize, AnnotatedUtterance};
use crate::matching::{Detection, Source};
use crate::model::Ontology;

const POSSESSIVES: &[&str] = &["my", "your", "our"];
const DEMONSTRATIVES: &[&str] = &["the", "this", "that", "these", "those"];
const LOCATIVES: &[&str] = &["here", "there"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Template {
    Possessive,
    Demonstrative,
    HereThere,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateInstance {
    pub template: Template,
    /// Lemmatized place type; `None` for here/there.
    pub place_type: Option<String>,
    pub tokens: Vec<usize>,
}

/// Lemma sequence of each place type named in the ontology, keyed by the
/// joined lemma string.
#[derive(Debug, Clone, Default)]
pub struct PlaceTypeVocab {
    entries: Vec<(String, Vec<String>)>,
}

impl PlaceTypeVocab {
    pub fn new<I, S>(place_types: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut entries: Vec<(String, Vec<String>)> = place_types
            .into_iter()
            .map(|t| {
                let lemmas: Vec<String> = tokenize(t.as_ref())
                    .iter()
                    .map(|(w, _)| lemma_of(w))
                    .collect();
                (lemmas.join(" "), lemmas)
            })
            .filter(|(_, l)| !l.is_empty())
            .collect();
        // longest first, so "shopping mall" wins over "mall"
        entries.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then_with(|| a.0.cmp(&b.0)));
        entries.dedup();
        Self { entries }
    }

    pub fn from_ontology(ontology: &Ontology) -> Self {
        Self::new(ontology.place_types())
    }

    fn match_at(&self, utt: &AnnotatedUtterance, at: usize) -> Option<(&str, usize)> {
        self.entries.iter().find_map(|(key, lemmas)| {
            let end = at + lemmas.len();
            (end <= utt.tokens.len()
                && lemmas
                    .iter()
                    .zip(&utt.tokens[at..end])
                    .all(|(l, t)| *l == t.lemma))
            .then_some((key.as_str(), lemmas.len()))
        })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Canonical key of a place type string, matching [`PlaceTypeVocab`] keys.
pub fn place_type_key(place_type: &str) -> String {
    tokenize(place_type)
        .iter()
        .map(|(w, _)| lemma_of(w))
        .collect::<Vec<_>>()
        .join(" ")
}

/// All template instances, left to right.
pub fn detect_templates(utt: &AnnotatedUtterance, vocab: &PlaceTypeVocab) -> Vec<TemplateInstance> {
    let mut out = Vec::new();
    for (i, tok) in utt.tokens.iter().enumerate() {
        let folded = tok.folded.as_str();
        if LOCATIVES.contains(&folded) {
            out.push(TemplateInstance {
                template: Template::HereThere,
                place_type: None,
                tokens: vec![i],
            });
            continue;
        }
        let template = if POSSESSIVES.contains(&folded) {
            Template::Possessive
        } else if DEMONSTRATIVES.contains(&folded) {
            Template::Demonstrative
        } else {
            continue;
        };
        if let Some((key, len)) = vocab.match_at(utt, i + 1) {
            out.push(TemplateInstance {
                template,
                place_type: Some(key.to_string()),
                tokens: (i..=i + len).collect(),
            });
        }
    }
    out
}

/// Detections accepted so far in a dialog, with most-recent lookups by
/// place type and by slot.
#[derive(Debug, Clone, Default)]
pub struct HistoryIndex {
    log: Vec<Detection>,
    last_by_type: HashMap<String, usize>,
    last_by_slot: HashMap<String, usize>,
}

impl HistoryIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn log(&self) -> &[Detection] {
        &self.log
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }

    fn is_newer(&self, candidate: usize, current: Option<&usize>) -> bool {
        current.is_none_or(|&c| self.log[candidate].utterance_index >= self.log[c].utterance_index)
    }

    pub fn push(&mut self, detection: Detection, ontology: &Ontology) {
        let idx = self.log.len();
        let place_type = ontology
            .place_type(&detection.pair.value)
            .map(place_type_key);
        let slot = detection.pair.slot.clone();
        self.log.push(detection);
        if let Some(key) = place_type {
            if self.is_newer(idx, self.last_by_type.get(&key)) {
                self.last_by_type.insert(key, idx);
            }
        }
        if self.is_newer(idx, self.last_by_slot.get(&slot)) {
            self.last_by_slot.insert(slot, idx);
        }
    }

    /// Drops entries pushed after the log had `len` entries.
    pub fn truncate(&mut self, len: usize, ontology: &Ontology) {
        if len >= self.log.len() {
            return;
        }
        let log = std::mem::take(&mut self.log);
        self.last_by_type.clear();
        self.last_by_slot.clear();
        for d in log.into_iter().take(len) {
            self.push(d, ontology);
        }
    }

    pub fn last_of_type(&self, place_type: &str) -> Option<&Detection> {
        self.last_by_type.get(place_type).map(|&i| &self.log[i])
    }

    pub fn last_of_slots(&self, slots: &[String]) -> Option<&Detection> {
        slots
            .iter()
            .filter_map(|s| self.last_by_slot.get(s).copied())
            .max_by_key(|&i| (self.log[i].utterance_index, i))
            .map(|i| &self.log[i])
    }
}

/// Resolves a template against the history; `None` without an antecedent.
pub fn resolve(
    instance: &TemplateInstance,
    history: &HistoryIndex,
    ontology: &Ontology,
    utterance_index: usize,
) -> Option<Detection> {
    let antecedent = match instance.template {
        Template::Possessive | Template::Demonstrative => {
            history.last_of_type(instance.place_type.as_deref()?)
        }
        Template::HereThere => history.last_of_slots(ontology.place_slots()),
    }?;
    Some(Detection::derived(
        antecedent.pair.clone(),
        Source::Coref,
        utterance_index,
    ))
}
