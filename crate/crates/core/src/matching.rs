//! Synonym matching and the fuzzy-matching baseline tracker.

use serde::{Deserialize, Serialize};

use crate::annotate::{edit_distance, edit_distance_chars, fold, lemma_of, AnnotatedUtterance};
use crate::model::{
    DialogState, Ontology, PosConstraint, PosTag, SlotValuePair, Synonym, SynonymLexicon,
    SynonymTerm, Utterance,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatcherConfig {
    /// A synonym is fuzzy-eligible only if its letters number strictly more than this.
    pub fuzzy_min_synonym_chars: usize,
    /// ...and every word is strictly longer than this.
    pub fuzzy_min_word_chars: usize,
    pub fuzzy_max_distance: usize,
    pub baseline_threshold: f64,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self {
            fuzzy_min_synonym_chars: 5,
            fuzzy_min_word_chars: 3,
            fuzzy_max_distance: 1,
            baseline_threshold: 0.8,
        }
    }
}

impl MatcherConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.baseline_threshold) {
            return Err(format!(
                "baseline_threshold {} is outside [0, 1]",
                self.baseline_threshold
            ));
        }
        Ok(())
    }
}

/// Which pipeline step produced a detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Synonym,
    Coref,
    Carryover,
}

/// A candidate slot-value pair with provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Detection {
    pub pair: SlotValuePair,
    pub source: Source,
    /// Token index matched by each synonym term; empty for coref/carryover.
    pub spans: Vec<usize>,
    pub synonym_used: Option<Synonym>,
    /// Position of the utterance in its dialog.
    pub utterance_index: usize,
}

impl Detection {
    pub fn derived(pair: SlotValuePair, source: Source, utterance_index: usize) -> Self {
        Self {
            pair,
            source,
            spans: Vec::new(),
            synonym_used: None,
            utterance_index,
        }
    }

    /// First matched token, if any.
    pub fn first_token(&self) -> Option<usize> {
        self.spans.iter().copied().min()
    }
}

pub fn fuzzy_eligible(synonym: &Synonym, config: &MatcherConfig) -> bool {
    let total: usize = synonym.terms.iter().map(|t| t.word.chars().count()).sum();
    total > config.fuzzy_min_synonym_chars
        && synonym
            .terms
            .iter()
            .all(|t| t.word.chars().count() > config.fuzzy_min_word_chars)
}

fn pos_ok(want: Option<PosConstraint>, got: PosTag) -> bool {
    match want {
        None => true,
        Some(PosConstraint::Noun) => got == PosTag::Noun,
        Some(PosConstraint::Verb) => got == PosTag::Verb,
    }
}

/// Indices of tokens matching a term, in order.
pub fn term_matches(
    term: &SynonymTerm,
    utt: &AnnotatedUtterance,
    allow_fuzzy: bool,
    config: &MatcherConfig,
) -> Vec<usize> {
    let lemma = lemma_of(&term.word);
    utt.tokens
        .iter()
        .enumerate()
        .filter(|(_, tok)| pos_ok(term.pos, tok.pos))
        .filter(|(_, tok)| {
            tok.lemma == lemma
                || (allow_fuzzy && edit_distance(&lemma, &tok.lemma) <= config.fuzzy_max_distance)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Matches every term of an AND-synonym against distinct tokens, assigning
/// each term greedily (in term order) to its earliest free token.
pub fn match_synonym(
    synonym: &Synonym,
    utt: &AnnotatedUtterance,
    config: &MatcherConfig,
) -> Option<Vec<usize>> {
    if synonym.terms.is_empty() {
        return None;
    }
    let allow_fuzzy = config.fuzzy_max_distance > 0 && fuzzy_eligible(synonym, config);
    let mut used: Vec<usize> = Vec::with_capacity(synonym.terms.len());
    for term in &synonym.terms {
        let idx = term_matches(term, utt, allow_fuzzy, config)
            .into_iter()
            .find(|i| !used.contains(i))?;
        used.push(idx);
    }
    Some(used)
}

/// Step 1: one detection per topic pair with a matching synonym.
pub fn detect_pairs(
    lexicon: &SynonymLexicon,
    ontology: &Ontology,
    topic: &str,
    utt: &AnnotatedUtterance,
    utterance_index: usize,
    config: &MatcherConfig,
) -> Vec<Detection> {
    let mut out = Vec::new();
    for pair in ontology.topic_pairs(topic) {
        let hit = lexicon
            .synonyms(&pair)
            .iter()
            .find_map(|syn| match_synonym(syn, utt, config).map(|spans| (syn, spans)));
        if let Some((syn, spans)) = hit {
            out.push(Detection {
                pair,
                source: Source::Synonym,
                spans,
                synonym_used: Some(syn.clone()),
                utterance_index,
            });
        }
    }
    out
}

/// Best normalized similarity between `value` and any window of `text`
/// whose length is within `slack` chars of the value's length.
pub fn window_score(value: &str, text: &str, slack: usize) -> f64 {
    let value: Vec<char> = fold(value).chars().collect();
    let text: Vec<char> = fold(text).chars().collect();
    if value.is_empty() || text.is_empty() {
        return 0.0;
    }
    let min_len = value.len().saturating_sub(slack).max(1);
    let max_len = value.len() + slack;
    let mut best = 0.0f64;
    let mut scored = false;
    for len in min_len..=max_len {
        if len > text.len() {
            break;
        }
        for start in 0..=text.len() - len {
            let window = &text[start..start + len];
            let d = edit_distance_chars(window, &value);
            best = best.max(1.0 - d as f64 / len.max(value.len()) as f64);
            scored = true;
            if best >= 1.0 {
                return 1.0;
            }
        }
    }
    if !scored {
        let d = edit_distance_chars(&text, &value);
        best = 1.0 - d as f64 / text.len().max(value.len()) as f64;
    }
    best
}

/// Fuzzy-matching baseline: a value scoring at or above the threshold makes
/// every topic pair carrying that value present.
pub fn baseline_track(
    ontology: &Ontology,
    topic: &str,
    utt: &Utterance,
    config: &MatcherConfig,
) -> DialogState {
    let pairs = ontology.topic_pairs(topic);
    let mut values: Vec<&str> = pairs.iter().map(|p| p.value.as_str()).collect();
    values.sort_unstable();
    values.dedup();
    let present: Vec<&str> = values
        .into_iter()
        .filter(|v| {
            window_score(v, &utt.text, config.fuzzy_max_distance) >= config.baseline_threshold
        })
        .collect();
    pairs
        .iter()
        .filter(|p| present.contains(&p.value.as_str()))
        .cloned()
        .collect()
}
