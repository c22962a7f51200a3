//! Domain types and file formats: ontologies, synonym lexicons, dialogs and
//! gold dialog states.
//!
//! Three on-disk formats are supported, all JSON:
//!
//! * `ontology.json`: topics, slots, values and per-value attributes.
//! * `lexicon.json`: per slot-value synonyms, each an AND-set of words with
//!   optional noun/verb constraints.
//! * `corpus.jsonl`: one dialog per line.
//!
//! Every loader validates the full document and reports every violated
//! invariant at once; a loader never returns a partially valid object.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotate::tokenize;
use crate::error::{Error, Result, ValidationIssue};

/// The atomic unit of a dialog state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotValuePair {
    pub slot: String,
    pub value: String,
}

impl SlotValuePair {
    pub fn new(slot: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            slot: slot.into(),
            value: value.into(),
        }
    }
}

impl fmt::Display for SlotValuePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.slot, self.value)
    }
}

/// A set of slot-value pairs. A slot may hold several values at once.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DialogState(BTreeSet<SlotValuePair>);

impl DialogState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pair: SlotValuePair) -> bool {
        self.0.insert(pair)
    }

    pub fn contains(&self, pair: &SlotValuePair) -> bool {
        self.0.contains(pair)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SlotValuePair> {
        self.0.iter()
    }

    pub fn pairs(&self) -> &BTreeSet<SlotValuePair> {
        &self.0
    }

    /// Pairs of a single slot.
    pub fn restricted_to(&self, slot: &str) -> DialogState {
        self.0.iter().filter(|p| p.slot == slot).cloned().collect()
    }
}

impl FromIterator<SlotValuePair> for DialogState {
    fn from_iter<I: IntoIterator<Item = SlotValuePair>>(iter: I) -> Self {
        DialogState(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a DialogState {
    type Item = &'a SlotValuePair;
    type IntoIter = std::collections::btree_set::Iter<'a, SlotValuePair>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Extra knowledge attached to an ontology value.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSet {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbourhood: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_range: Option<String>,
    /// Identifier of a group of closely related values, e.g. a hotel chain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionSlots {
    pub to: String,
    pub from: String,
}

/// Slot/value catalog per topic, plus value attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    topics: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    #[serde(default)]
    value_attributes: BTreeMap<String, AttributeSet>,
    #[serde(default)]
    place_slots: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction_slots: Option<DirectionSlots>,
}

impl Ontology {
    pub fn from_json(text: &str) -> Result<Self> {
        let ontology: Ontology = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        ontology.validate()?;
        Ok(ontology)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ontology serializes")
    }

    fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        if self.topics.is_empty() {
            issues.push(ValidationIssue::new("topics", "ontology defines no topics"));
        }
        let mut all_values = HashSet::new();
        for (topic, slots) in &self.topics {
            if topic.trim().is_empty() {
                issues.push(ValidationIssue::new("topics", "empty topic name"));
            }
            for (slot, values) in slots {
                let loc = format!("topics.{topic}.{slot}");
                if slot.trim().is_empty() {
                    issues.push(ValidationIssue::new(&loc, "empty slot name"));
                }
                let mut seen = HashSet::new();
                for value in values {
                    if value.trim().is_empty() {
                        issues.push(ValidationIssue::new(&loc, "empty value"));
                    } else if tokenize(value).is_empty() {
                        issues.push(ValidationIssue::new(
                            &loc,
                            format!("value {value:?} contains no word characters"),
                        ));
                    }
                    if !seen.insert(value.as_str()) {
                        issues.push(ValidationIssue::new(
                            &loc,
                            format!("duplicate value {value:?}"),
                        ));
                    }
                    all_values.insert(value.as_str());
                }
            }
        }
        for (value, attrs) in &self.value_attributes {
            let loc = format!("value_attributes.{value}");
            if !all_values.contains(value.as_str()) {
                issues.push(ValidationIssue::new(
                    &loc,
                    "value does not appear under any topic/slot",
                ));
            }
            for (name, field) in [
                ("place_type", &attrs.place_type),
                ("neighbourhood", &attrs.neighbourhood),
                ("price_range", &attrs.price_range),
                ("group", &attrs.group),
            ] {
                if field.as_deref().is_some_and(|s| s.trim().is_empty()) {
                    issues.push(ValidationIssue::new(&loc, format!("{name} is empty")));
                }
            }
        }
        let known_slots = self.all_slots();
        for slot in &self.place_slots {
            if !known_slots.contains(slot.as_str()) {
                issues.push(ValidationIssue::new(
                    "place_slots",
                    format!("unknown slot {slot:?}"),
                ));
            }
        }
        if let Some(dir) = &self.direction_slots {
            for (key, slot) in [("to", &dir.to), ("from", &dir.from)] {
                if !known_slots.contains(slot.as_str()) {
                    issues.push(ValidationIssue::new(
                        format!("direction_slots.{key}"),
                        format!("unknown slot {slot:?}"),
                    ));
                }
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(issues))
        }
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.topics.keys().map(String::as_str)
    }

    pub fn has_topic(&self, topic: &str) -> bool {
        self.topics.contains_key(topic)
    }

    /// Slots of a topic, in name order.
    pub fn slots(&self, topic: &str) -> impl Iterator<Item = &str> {
        self.topics
            .get(topic)
            .into_iter()
            .flat_map(|slots| slots.keys().map(String::as_str))
    }

    pub fn values(&self, topic: &str, slot: &str) -> &[String] {
        self.topics
            .get(topic)
            .and_then(|slots| slots.get(slot))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn topic_has_slot(&self, topic: &str, slot: &str) -> bool {
        self.topics.get(topic).is_some_and(|s| s.contains_key(slot))
    }

    /// Position of the pair's value in its slot's value list for `topic`.
    pub fn value_index(&self, topic: &str, pair: &SlotValuePair) -> Option<usize> {
        self.values(topic, &pair.slot)
            .iter()
            .position(|v| *v == pair.value)
    }

    pub fn is_valid(&self, topic: &str, pair: &SlotValuePair) -> bool {
        self.value_index(topic, pair).is_some()
    }

    /// Whether the pair exists under any topic.
    pub fn contains_pair(&self, pair: &SlotValuePair) -> bool {
        self.topics.keys().any(|t| self.is_valid(t, pair))
    }

    /// All pairs of a topic: slots in name order, values in ontology order.
    pub fn topic_pairs(&self, topic: &str) -> Vec<SlotValuePair> {
        let Some(slots) = self.topics.get(topic) else {
            return Vec::new();
        };
        slots
            .iter()
            .flat_map(|(slot, values)| values.iter().map(move |v| SlotValuePair::new(slot, v)))
            .collect()
    }

    /// Every distinct pair of the ontology, sorted.
    pub fn all_pairs(&self) -> BTreeSet<SlotValuePair> {
        self.topics
            .keys()
            .flat_map(|t| self.topic_pairs(t))
            .collect()
    }

    pub fn all_slots(&self) -> BTreeSet<&str> {
        self.topics
            .values()
            .flat_map(|slots| slots.keys().map(String::as_str))
            .collect()
    }

    pub fn attributes(&self, value: &str) -> Option<&AttributeSet> {
        self.value_attributes.get(value)
    }

    pub fn place_type(&self, value: &str) -> Option<&str> {
        self.attributes(value).and_then(|a| a.place_type.as_deref())
    }

    /// Distinct place types named by value attributes.
    pub fn place_types(&self) -> BTreeSet<&str> {
        self.value_attributes
            .values()
            .filter_map(|a| a.place_type.as_deref())
            .collect()
    }

    pub fn place_slots(&self) -> &[String] {
        &self.place_slots
    }

    pub fn is_place_slot(&self, slot: &str) -> bool {
        self.place_slots.iter().any(|s| s == slot)
    }

    pub fn direction_slots(&self) -> Option<&DirectionSlots> {
        self.direction_slots.as_ref()
    }
}

pub fn load_ontology(path: impl AsRef<Path>) -> Result<Ontology> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ontology::from_json(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosConstraint {
    Noun,
    Verb,
}

/// One word of a synonym, optionally constrained to a part of speech.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SynonymTerm {
    pub word: String,
    #[serde(default)]
    pub pos: Option<PosConstraint>,
}

impl SynonymTerm {
    pub fn new(word: impl Into<String>, pos: Option<PosConstraint>) -> Self {
        Self {
            word: word.into(),
            pos,
        }
    }

    pub fn word(word: impl Into<String>) -> Self {
        Self::new(word, None)
    }
}

/// An AND-clause of terms: every term must occur in the utterance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Synonym {
    pub terms: Vec<SynonymTerm>,
}

impl Synonym {
    pub fn new(terms: Vec<SynonymTerm>) -> Self {
        Self { terms }
    }

    /// Unconstrained AND of the given words.
    pub fn of_words<S: AsRef<str>>(words: &[S]) -> Self {
        Self::new(
            words
                .iter()
                .map(|w| SynonymTerm::word(w.as_ref()))
                .collect(),
        )
    }

    /// The implicit synonym of a value: its own words, unconstrained.
    pub fn from_value(value: &str) -> Self {
        let mut seen = HashSet::new();
        let terms = tokenize(value)
            .into_iter()
            .filter(|(w, _)| seen.insert(w.to_lowercase()))
            .map(|(w, _)| SynonymTerm::word(w))
            .collect();
        Self { terms }
    }

    fn validate(&self, loc: &str, issues: &mut Vec<ValidationIssue>) {
        if self.terms.is_empty() {
            issues.push(ValidationIssue::new(loc, "synonym has no terms"));
        }
        let mut seen = HashSet::new();
        for term in &self.terms {
            if term.word.is_empty() || term.word.chars().any(char::is_whitespace) {
                issues.push(ValidationIssue::new(
                    loc,
                    format!("term {:?} must be a single non-empty token", term.word),
                ));
            }
            if !seen.insert((&term.word, term.pos)) {
                issues.push(ValidationIssue::new(
                    loc,
                    format!("duplicate term {:?}", term.word),
                ));
            }
        }
    }
}

/// Synonyms for every slot-value pair of an ontology.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    entries: BTreeMap<SlotValuePair, Vec<Synonym>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LexiconFile {
    entries: Vec<LexiconEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LexiconEntry {
    slot: String,
    value: String,
    #[serde(default)]
    suppress_default: bool,
    #[serde(default)]
    synonyms: Vec<Synonym>,
}

impl SynonymLexicon {
    /// Parses `lexicon.json` and adds the implicit synonym of every ontology
    /// pair whose entry does not set `suppress_default`.
    pub fn from_json(text: &str, ontology: &Ontology) -> Result<Self> {
        let file: LexiconFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        Self::build(file, ontology)
    }

    fn build(file: LexiconFile, ontology: &Ontology) -> Result<Self> {
        let mut issues = Vec::new();
        let mut explicit: BTreeMap<SlotValuePair, (bool, Vec<Synonym>)> = BTreeMap::new();
        for (i, entry) in file.entries.into_iter().enumerate() {
            let pair = SlotValuePair::new(entry.slot, entry.value);
            let loc = format!("entries[{i}] ({pair})");
            if !ontology.contains_pair(&pair) {
                issues.push(ValidationIssue::new(
                    &loc,
                    "slot-value pair is not in the ontology",
                ));
                continue;
            }
            for (j, syn) in entry.synonyms.iter().enumerate() {
                syn.validate(&format!("{loc}.synonyms[{j}]"), &mut issues);
            }
            if explicit.contains_key(&pair) {
                issues.push(ValidationIssue::new(&loc, "duplicate entry"));
                continue;
            }
            explicit.insert(pair, (entry.suppress_default, entry.synonyms));
        }
        if !issues.is_empty() {
            return Err(Error::Validation(issues));
        }

        let mut entries = BTreeMap::new();
        for pair in ontology.all_pairs() {
            let (suppress, mut synonyms) = explicit.remove(&pair).unwrap_or_default();
            if !suppress {
                let implicit = Synonym::from_value(&pair.value);
                if !synonyms.contains(&implicit) {
                    synonyms.push(implicit);
                }
            }
            entries.insert(pair, synonyms);
        }
        Ok(Self { entries })
    }

    /// Serializes every entry with its full synonym list and
    /// `suppress_default` set, so reloading yields an equal lexicon.
    pub fn to_json(&self) -> String {
        let file = LexiconFile {
            entries: self
                .entries
                .iter()
                .map(|(pair, syns)| LexiconEntry {
                    slot: pair.slot.clone(),
                    value: pair.value.clone(),
                    suppress_default: true,
                    synonyms: syns.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("lexicon serializes")
    }

    pub fn synonyms(&self, pair: &SlotValuePair) -> &[Synonym] {
        self.entries.get(pair).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&SlotValuePair, &[Synonym])> {
        self.entries.iter().map(|(p, s)| (p, s.as_slice()))
    }

    /// Appends a synonym to a pair (used when building lexicons in code).
    pub fn add_synonym(&mut self, pair: SlotValuePair, synonym: Synonym) {
        self.entries.entry(pair).or_default().push(synonym);
    }
}

pub fn load_lexicon(path: impl AsRef<Path>, ontology: &Ontology) -> Result<SynonymLexicon> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SynonymLexicon::from_json(&text, ontology)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Guide,
    Tourist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PosTag {
    Noun,
    Verb,
    Other,
}

/// Externally supplied token annotation, overriding the built-in annotator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuppliedToken {
    pub surface: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lemma: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<PosTag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub speaker: Speaker,
    pub text: String,
    #[serde(rename = "tokens", default)]
    pub supplied_tokens: Option<Vec<SuppliedToken>>,
}

impl Utterance {
    pub fn new(speaker: Speaker, text: impl Into<String>) -> Self {
        Self {
            speaker,
            text: text.into(),
            supplied_tokens: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subdialog {
    pub topic: String,
    #[serde(default)]
    pub gold_state: Option<DialogState>,
    pub utterances: Vec<Utterance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialog {
    pub id: String,
    pub subdialogs: Vec<Subdialog>,
}

impl Dialog {
    pub fn utterance_count(&self) -> usize {
        self.subdialogs.iter().map(|s| s.utterances.len()).sum()
    }

    /// Checks every dialog invariant against `ontology`.
    pub fn validate(&self, ontology: &Ontology) -> Vec<ValidationIssue> {
        let mut issues = Vec::new();
        let dloc = format!("dialog {:?}", self.id);
        if self.id.trim().is_empty() {
            issues.push(ValidationIssue::new(&dloc, "empty dialog id"));
        }
        if self.subdialogs.is_empty() {
            issues.push(ValidationIssue::new(&dloc, "dialog has no subdialogs"));
        }
        for (si, sub) in self.subdialogs.iter().enumerate() {
            let sloc = format!("{dloc} subdialog {si}");
            if !ontology.has_topic(&sub.topic) {
                issues.push(ValidationIssue::new(
                    &sloc,
                    format!("unknown topic {:?}", sub.topic),
                ));
            } else if let Some(gold) = &sub.gold_state {
                for pair in gold {
                    if !ontology.is_valid(&sub.topic, pair) {
                        issues.push(ValidationIssue::new(
                            &sloc,
                            format!(
                                "gold pair ({pair}) is not allowed for topic {:?}",
                                sub.topic
                            ),
                        ));
                    }
                }
            }
            if sub.utterances.is_empty() {
                issues.push(ValidationIssue::new(&sloc, "subdialog has no utterances"));
            }
            for (ui, utt) in sub.utterances.iter().enumerate() {
                let uloc = format!("{sloc} utterance {ui}");
                if utt.text.trim().is_empty() {
                    issues.push(ValidationIssue::new(&uloc, "empty utterance text"));
                }
                if let Some(tokens) = &utt.supplied_tokens {
                    let mut cursor = 0;
                    for tok in tokens {
                        if tok.surface.is_empty() {
                            issues.push(ValidationIssue::new(&uloc, "empty supplied token"));
                            continue;
                        }
                        if tok.lemma.as_deref().is_some_and(str::is_empty) {
                            issues.push(ValidationIssue::new(&uloc, "empty supplied lemma"));
                        }
                        match utt.text[cursor..].find(&tok.surface) {
                            Some(off) => cursor += off + tok.surface.len(),
                            None => {
                                issues.push(ValidationIssue::new(
                                    &uloc,
                                    format!(
                                        "supplied token {:?} not found in reading order",
                                        tok.surface
                                    ),
                                ));
                                break;
                            }
                        }
                    }
                }
            }
        }
        issues
    }
}

/// Parses a JSON-lines corpus and validates it against `ontology`.
pub fn parse_corpus(text: &str, ontology: &Ontology) -> Result<Vec<Dialog>> {
    let mut dialogs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let dialog: Dialog = serde_json::from_str(line).map_err(|e| Error::Parse {
            location: format!("line {}", i + 1),
            message: e.to_string(),
        })?;
        dialogs.push(dialog);
    }
    let mut issues = Vec::new();
    let mut ids = HashSet::new();
    for dialog in &dialogs {
        if !ids.insert(dialog.id.as_str()) {
            issues.push(ValidationIssue::new(
                format!("dialog {:?}", dialog.id),
                "duplicate dialog id",
            ));
        }
        issues.extend(dialog.validate(ontology));
    }
    if issues.is_empty() {
        Ok(dialogs)
    } else {
        Err(Error::Validation(issues))
    }
}

pub fn load_corpus(path: impl AsRef<Path>, ontology: &Ontology) -> Result<Vec<Dialog>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, ontology)
}

/// One dialog per line, newline-terminated.
pub fn corpus_to_jsonl(dialogs: &[Dialog]) -> String {
    let mut out = String::new();
    for dialog in dialogs {
        out.push_str(&serde_json::to_string(dialog).expect("dialog serializes"));
        out.push('\n');
    }
    out
}
