//! Seeded synthetic corpora for desk-scale experiments.
//!
//! Each subdialog's gold state is decided first; utterances are then
//! rendered from templates so that every gold pair is expressed through one
//! of the configured phenomena. Mention phenomena are picked per event by
//! weight; `persistence` is the probability weight (relative to the sum of
//! all weights) that a subdialog continues the previous topic with one of
//! its slots persisting unmentioned.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotate::{edit_distance, lemma_of};
use crate::coref::place_type_key;
use crate::error::{Error, Result};
use crate::matching::{fuzzy_eligible, MatcherConfig};
use crate::model::{
    Dialog, DialogState, Ontology, PosConstraint, SlotValuePair, Speaker, Subdialog, Synonym,
    SynonymLexicon, Utterance,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhenomenonWeights {
    pub synonym: f64,
    pub misspelling: f64,
    pub coreference: f64,
    pub substring: f64,
    pub direction: f64,
    pub persistence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub seed: u64,
    /// Inclusive `[min, max]` ranges.
    pub n_dialogs: [usize; 2],
    pub subdialogs_per_dialog: [usize; 2],
    pub utterances_per_subdialog: [usize; 2],
    #[serde(default)]
    pub weights: PhenomenonWeights,
    #[serde(default = "default_prefix")]
    pub id_prefix: String,
}

fn default_prefix() -> String {
    "synth".into()
}

impl GeneratorSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [
            ("n_dialogs", self.n_dialogs),
            ("subdialogs_per_dialog", self.subdialogs_per_dialog),
            ("utterances_per_subdialog", self.utterances_per_subdialog),
        ] {
            if lo > hi || (name != "n_dialogs" && lo == 0) {
                return Err(Error::Generation(format!(
                    "{name} range [{lo}, {hi}] is empty"
                )));
            }
        }
        let w = &self.weights;
        let all = [
            w.synonym,
            w.misspelling,
            w.coreference,
            w.substring,
            w.direction,
            w.persistence,
        ];
        if all.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Generation(
                "weights must be finite and non-negative".into(),
            ));
        }
        if w.synonym + w.misspelling + w.coreference + w.substring + w.direction <= 0.0 {
            return Err(Error::Generation(
                "at least one mention weight must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Synonym,
    Misspelling,
    Coreference,
    Substring,
    Direction,
}

const MENTION_TEMPLATES: &[&str] = &[
    "I recommend {}.",
    "How about {}?",
    "You might enjoy {}.",
    "Maybe {} is a good choice.",
    "I have heard good things about {}.",
    "Let me tell you about {}.",
];

const COREF_TEMPLATES: &[&str] = &[
    "{} is quite nice.",
    "How far is {}?",
    "I really liked {}.",
    "Can you tell me more about {}?",
];

const DIRECTION_TEMPLATES: &[&str] = &[
    "Let us travel {}.",
    "It is easy to get {}.",
    "We plan to go {}.",
];

const FILLERS: &[&str] = &[
    "Okay.",
    "Sounds good.",
    "I see.",
    "Yes, of course.",
    "Great, thank you.",
    "Sure, no problem.",
    "Right.",
    "Hmm, let me think.",
];

const DETERMINERS: &[&str] = &["our", "your", "my", "this", "that"];

fn fill(template: &str, mention: &str) -> String {
    let text = template.replacen("{}", mention, 1);
    let mut chars = text.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => text,
    }
}

fn render_synonym(synonym: &Synonym) -> String {
    synonym
        .terms
        .iter()
        .map(|t| match t.pos {
            Some(PosConstraint::Verb) => format!("to {}", t.word),
            Some(PosConstraint::Noun) => format!("a {}", t.word),
            None => t.word.clone(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Per-topic candidate tables.
struct TopicPlan {
    name: String,
    /// Pairs outside the direction slots.
    mentionable: Vec<SlotValuePair>,
    /// Mentionable pairs whose value strictly contains another value of the
    /// same slot.
    superstrings: Vec<SlotValuePair>,
    /// Mentionable pairs with at least one fuzzy-eligible synonym.
    misspellable: Vec<SlotValuePair>,
    /// Values valid under both direction slots.
    direction_values: Vec<String>,
}

struct Plan<'a> {
    ontology: &'a Ontology,
    lexicon: &'a SynonymLexicon,
    spec: &'a GeneratorSpec,
    topics: Vec<TopicPlan>,
    matcher: MatcherConfig,
}

#[derive(Default)]
struct SubdialogDraft {
    gold: BTreeSet<SlotValuePair>,
    /// Pairs that would collide with a gold pair (substring partners, group
    /// members).
    blocked: BTreeSet<SlotValuePair>,
}

struct DialogCtx {
    /// Gold pairs in mention order, for coreference antecedents.
    mentions: Vec<SlotValuePair>,
}

fn is_strict_substring(short: &str, long: &str) -> bool {
    let (s, l) = (short.to_lowercase(), long.to_lowercase());
    l.len() > s.len() && l.contains(&s)
}

impl<'a> Plan<'a> {
    fn new(
        ontology: &'a Ontology,
        lexicon: &'a SynonymLexicon,
        spec: &'a GeneratorSpec,
    ) -> Result<Self> {
        let matcher = MatcherConfig::default();
        let dir = ontology.direction_slots();
        let is_dir_slot = |slot: &str| dir.is_some_and(|d| d.to == slot || d.from == slot);
        let topics: Vec<TopicPlan> = ontology
            .topics()
            .map(|topic| {
                let mentionable: Vec<SlotValuePair> = ontology
                    .topic_pairs(topic)
                    .into_iter()
                    .filter(|p| !is_dir_slot(&p.slot))
                    .collect();
                let superstrings = mentionable
                    .iter()
                    .filter(|p| {
                        ontology
                            .values(topic, &p.slot)
                            .iter()
                            .any(|v| is_strict_substring(v, &p.value))
                    })
                    .cloned()
                    .collect();
                let misspellable = mentionable
                    .iter()
                    .filter(|p| {
                        lexicon
                            .synonyms(p)
                            .iter()
                            .any(|s| fuzzy_eligible(s, &matcher))
                    })
                    .cloned()
                    .collect();
                let direction_values = match dir {
                    Some(d) => ontology
                        .values(topic, &d.from)
                        .iter()
                        .filter(|v| ontology.values(topic, &d.to).contains(v))
                        .cloned()
                        .collect(),
                    None => Vec::new(),
                };
                TopicPlan {
                    name: topic.to_string(),
                    mentionable,
                    superstrings,
                    misspellable,
                    direction_values,
                }
            })
            .collect();

        let w = &spec.weights;
        if w.coreference > 0.0 && ontology.place_types().is_empty() {
            return Err(Error::Generation(
                "coreference weight is positive but no value has a place_type".into(),
            ));
        }
        if w.substring > 0.0 && topics.iter().all(|t| t.superstrings.is_empty()) {
            return Err(Error::Generation(
                "substring weight is positive but no value contains another value of its slot"
                    .into(),
            ));
        }
        if w.direction > 0.0 && topics.iter().all(|t| t.direction_values.len() < 2) {
            return Err(Error::Generation(
                "direction weight is positive but no topic has two values under both direction slots".into(),
            ));
        }
        if w.misspelling > 0.0 && topics.iter().all(|t| t.misspellable.is_empty()) {
            return Err(Error::Generation(
                "misspelling weight is positive but no synonym is long enough to misspell".into(),
            ));
        }
        Ok(Self {
            ontology,
            lexicon,
            spec,
            topics,
            matcher,
        })
    }

    fn dialog(&self, index: usize, rng: &mut ChaCha8Rng) -> Result<Dialog> {
        let [lo, hi] = self.spec.subdialogs_per_dialog;
        let n = rng.gen_range(lo..=hi);
        let w = &self.spec.weights;
        let total =
            w.synonym + w.misspelling + w.coreference + w.substring + w.direction + w.persistence;
        let mut ctx = DialogCtx {
            mentions: Vec::new(),
        };
        let mut subdialogs: Vec<Subdialog> = Vec::with_capacity(n);
        let mut speaker = Speaker::Guide;
        for _ in 0..n {
            let persist = subdialogs
                .last()
                .filter(|_| rng.gen_bool((w.persistence / total).clamp(0.0, 1.0)))
                .and_then(|prev| {
                    let gold = prev.gold_state.as_ref()?;
                    let slots: BTreeSet<&str> = gold.iter().map(|p| p.slot.as_str()).collect();
                    let slots: Vec<&str> = slots.into_iter().collect();
                    let slot = *slots.choose(rng)?;
                    Some((
                        prev.topic.clone(),
                        gold.restricted_to(slot),
                        slot.to_string(),
                    ))
                });
            let (topic_idx, mut draft, skip_slot) = match persist {
                Some((topic, kept, slot)) => {
                    let idx = self
                        .topics
                        .iter()
                        .position(|t| t.name == topic)
                        .expect("known topic");
                    let mut draft = SubdialogDraft::default();
                    for p in kept.iter() {
                        self.add_gold(&mut draft, idx, p.clone());
                    }
                    (idx, draft, Some(slot))
                }
                None => (
                    rng.gen_range(0..self.topics.len()),
                    SubdialogDraft::default(),
                    None,
                ),
            };

            let [ulo, uhi] = self.spec.utterances_per_subdialog;
            let n_utts = rng.gen_range(ulo..=uhi);
            let n_events = rng.gen_range(1..=n_utts.min(2));
            let mut slots: Vec<usize> = (0..n_utts).collect();
            slots.shuffle(rng);
            let mut event_at: Vec<usize> = slots[..n_events].to_vec();
            event_at.sort_unstable();

            let mut utterances = Vec::with_capacity(n_utts);
            for u in 0..n_utts {
                let text = if event_at.contains(&u) {
                    self.event(topic_idx, &mut draft, &mut ctx, skip_slot.as_deref(), rng)
                } else {
                    None
                };
                let text =
                    text.unwrap_or_else(|| FILLERS.choose(rng).expect("fillers").to_string());
                utterances.push(Utterance::new(speaker, text));
                speaker = match speaker {
                    Speaker::Guide => Speaker::Tourist,
                    Speaker::Tourist => Speaker::Guide,
                };
            }
            subdialogs.push(Subdialog {
                topic: self.topics[topic_idx].name.clone(),
                gold_state: Some(draft.gold.into_iter().collect::<DialogState>()),
                utterances,
            });
        }
        let dialog = Dialog {
            id: format!("{}-{index:03}", self.spec.id_prefix),
            subdialogs,
        };
        let issues = dialog.validate(self.ontology);
        if !issues.is_empty() {
            return Err(Error::Validation(issues));
        }
        Ok(dialog)
    }

    fn add_gold(&self, draft: &mut SubdialogDraft, topic_idx: usize, pair: SlotValuePair) {
        let topic = &self.topics[topic_idx].name;
        let group = self
            .ontology
            .attributes(&pair.value)
            .and_then(|a| a.group.clone());
        for v in self.ontology.values(topic, &pair.slot) {
            let related = is_strict_substring(v, &pair.value)
                || is_strict_substring(&pair.value, v)
                || (group.is_some()
                    && *v != pair.value
                    && self.ontology.attributes(v).and_then(|a| a.group.clone()) == group);
            if related {
                draft.blocked.insert(SlotValuePair::new(&pair.slot, v));
            }
        }
        draft.gold.insert(pair);
    }

    fn available(
        &self,
        pool: &[SlotValuePair],
        draft: &SubdialogDraft,
        skip_slot: Option<&str>,
    ) -> Vec<SlotValuePair> {
        pool.iter()
            .filter(|p| !draft.blocked.contains(p) && !draft.gold.contains(p))
            .filter(|p| skip_slot != Some(p.slot.as_str()))
            .cloned()
            .collect()
    }

    /// Renders one mention event, adding its pairs to the gold state.
    fn event(
        &self,
        topic_idx: usize,
        draft: &mut SubdialogDraft,
        ctx: &mut DialogCtx,
        skip_slot: Option<&str>,
        rng: &mut ChaCha8Rng,
    ) -> Option<String> {
        let plan = &self.topics[topic_idx];
        let w = &self.spec.weights;
        let dir = self.ontology.direction_slots();
        let coref_targets = self.coref_targets(topic_idx, draft, ctx, skip_slot);
        let dir_ok = dir.is_some_and(|d| {
            skip_slot != Some(d.to.as_str()) && skip_slot != Some(d.from.as_str())
        }) && plan.direction_values.len() >= 2;
        let options: Vec<(Kind, f64)> = [
            (
                Kind::Synonym,
                w.synonym,
                !self
                    .available(&plan.mentionable, draft, skip_slot)
                    .is_empty(),
            ),
            (
                Kind::Misspelling,
                w.misspelling,
                !self
                    .available(&plan.misspellable, draft, skip_slot)
                    .is_empty(),
            ),
            (Kind::Coreference, w.coreference, !coref_targets.is_empty()),
            (
                Kind::Substring,
                w.substring,
                !self
                    .available(&plan.superstrings, draft, skip_slot)
                    .is_empty(),
            ),
            (Kind::Direction, w.direction, dir_ok),
        ]
        .into_iter()
        .filter(|(_, weight, ok)| *ok && *weight > 0.0)
        .map(|(k, weight, _)| (k, weight))
        .collect();
        let kind = options.choose_weighted(rng, |(_, weight)| *weight).ok()?.0;

        let (template, mention, pairs) = match kind {
            Kind::Synonym => {
                let pair = self
                    .available(&plan.mentionable, draft, skip_slot)
                    .choose(rng)?
                    .clone();
                let syn = self.lexicon.synonyms(&pair).choose(rng)?;
                let mut mention = render_synonym(syn);
                let mut pairs = vec![pair.clone()];
                if let Some(extra) = self.neighbourhood_mention(topic_idx, &pair) {
                    mention = format!("{mention} in {}", extra.value);
                    pairs.push(extra);
                }
                (MENTION_TEMPLATES.choose(rng)?, mention, pairs)
            }
            Kind::Misspelling => {
                let pair = self
                    .available(&plan.misspellable, draft, skip_slot)
                    .choose(rng)?
                    .clone();
                let eligible: Vec<&Synonym> = self
                    .lexicon
                    .synonyms(&pair)
                    .iter()
                    .filter(|s| fuzzy_eligible(s, &self.matcher))
                    .collect();
                let syn = (*eligible.choose(rng)?).clone();
                let mention = misspell(&syn, rng).unwrap_or_else(|| render_synonym(&syn));
                (MENTION_TEMPLATES.choose(rng)?, mention, vec![pair])
            }
            Kind::Coreference => {
                let (place_type, pair) = coref_targets.choose(rng)?.clone();
                let det = DETERMINERS.choose(rng)?;
                (
                    COREF_TEMPLATES.choose(rng)?,
                    format!("{det} {place_type}"),
                    vec![pair],
                )
            }
            Kind::Substring => {
                let pair = self
                    .available(&plan.superstrings, draft, skip_slot)
                    .choose(rng)?
                    .clone();
                let mention = pair.value.clone();
                (MENTION_TEMPLATES.choose(rng)?, mention, vec![pair])
            }
            Kind::Direction => {
                let d = dir?;
                let mut values = plan.direction_values.clone();
                values.shuffle(rng);
                let (from, to) = (values[0].clone(), values[1].clone());
                let (mention, pairs) = match rng.gen_range(0..4) {
                    0 => (format!("to {to}"), vec![SlotValuePair::new(&d.to, &to)]),
                    1 => (
                        format!("from {from}"),
                        vec![SlotValuePair::new(&d.from, &from)],
                    ),
                    _ => (
                        format!("from {from} to {to}"),
                        vec![
                            SlotValuePair::new(&d.from, &from),
                            SlotValuePair::new(&d.to, &to),
                        ],
                    ),
                };
                (DIRECTION_TEMPLATES.choose(rng)?, mention, pairs)
            }
        };
        for p in pairs {
            ctx.mentions.push(p.clone());
            self.add_gold(draft, topic_idx, p);
        }
        Some(fill(template, &mention))
    }

    /// For grouped values, the topic pair naming the value's neighbourhood.
    fn neighbourhood_mention(
        &self,
        topic_idx: usize,
        pair: &SlotValuePair,
    ) -> Option<SlotValuePair> {
        let attrs = self.ontology.attributes(&pair.value)?;
        attrs.group.as_ref()?;
        let nb = attrs.neighbourhood.as_ref()?;
        let topic = &self.topics[topic_idx].name;
        self.ontology
            .slots(topic)
            .find(|s| self.ontology.values(topic, s).contains(nb))
            .map(|s| SlotValuePair::new(s, nb))
    }

    /// (place type, antecedent) for each place type whose most recent
    /// mention is valid in this topic.
    fn coref_targets(
        &self,
        topic_idx: usize,
        draft: &SubdialogDraft,
        ctx: &DialogCtx,
        skip_slot: Option<&str>,
    ) -> Vec<(String, SlotValuePair)> {
        let topic = &self.topics[topic_idx].name;
        let mut latest: BTreeMap<String, (String, &SlotValuePair)> = BTreeMap::new();
        for p in &ctx.mentions {
            if let Some(t) = self.ontology.place_type(&p.value) {
                latest.insert(place_type_key(t), (t.to_lowercase(), p));
            }
        }
        latest
            .into_values()
            .filter(|(_, p)| self.ontology.is_valid(topic, p))
            .filter(|(_, p)| !draft.blocked.contains(*p) && skip_slot != Some(p.slot.as_str()))
            .map(|(t, p)| (t, p.clone()))
            .collect()
    }
}

/// The synonym with one letter of one word substituted, such that the
/// misspelled lemma is at edit distance 1 from the original.
fn misspell(synonym: &Synonym, rng: &mut ChaCha8Rng) -> Option<String> {
    for _ in 0..16 {
        let t = rng.gen_range(0..synonym.terms.len());
        let chars: Vec<char> = synonym.terms[t].word.chars().collect();
        if chars.len() < 4 {
            continue;
        }
        let pos = rng.gen_range(1..=chars.len() - 3);
        let replacement = (b'a' + rng.gen_range(0..26u8)) as char;
        if chars[pos].to_ascii_lowercase() == replacement || !chars[pos].is_ascii_alphabetic() {
            continue;
        }
        let mut mutated = chars.clone();
        mutated[pos] = replacement;
        let mutated: String = mutated.into_iter().collect();
        let (orig_lemma, new_lemma) = (lemma_of(&synonym.terms[t].word), lemma_of(&mutated));
        if edit_distance(&orig_lemma, &new_lemma) != 1 {
            continue;
        }
        let mut terms = synonym.terms.clone();
        terms[t].word = mutated;
        return Some(render_synonym(&Synonym::new(terms)));
    }
    None
}

/// Generates a corpus; identical inputs give identical output.
pub fn generate_corpus(
    ontology: &Ontology,
    lexicon: &SynonymLexicon,
    spec: &GeneratorSpec,
) -> Result<Vec<Dialog>> {
    spec.validate()?;
    let plan = Plan::new(ontology, lexicon, spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = rng.gen_range(spec.n_dialogs[0]..=spec.n_dialogs[1]);
    (0..n).map(|i| plan.dialog(i, &mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::corpus_to_jsonl;

    fn ontology() -> Ontology {
        Ontology::from_json(
            r#"{"topics": {
                  "ACCOMMODATION": {"PLACE": ["Park Hotel", "Grand Park Hotel", "Merlion Hotel"]},
                  "TRANSPORTATION": {"FROM": ["Bugis", "Changi"], "TO": ["Bugis", "Changi"]}},
                "value_attributes": {"Park Hotel": {"place_type": "hotel"}},
                "direction_slots": {"to": "TO", "from": "FROM"}}"#,
        )
        .unwrap()
    }

    fn spec(weights: PhenomenonWeights) -> GeneratorSpec {
        GeneratorSpec {
            seed: 5,
            n_dialogs: [4, 6],
            subdialogs_per_dialog: [2, 4],
            utterances_per_subdialog: [1, 3],
            weights,
            id_prefix: "t".into(),
        }
    }

    fn all_weights() -> PhenomenonWeights {
        PhenomenonWeights {
            synonym: 1.0,
            misspelling: 1.0,
            coreference: 1.0,
            substring: 1.0,
            direction: 1.0,
            persistence: 1.0,
        }
    }

    #[test]
    fn deterministic_and_valid() {
        let o = ontology();
        let lex = SynonymLexicon::from_json(r#"{"entries": []}"#, &o).unwrap();
        let a = generate_corpus(&o, &lex, &spec(all_weights())).unwrap();
        let b = generate_corpus(&o, &lex, &spec(all_weights())).unwrap();
        assert_eq!(corpus_to_jsonl(&a), corpus_to_jsonl(&b));
        assert!((4..=6).contains(&a.len()));
        for d in &a {
            assert!(d.validate(&o).is_empty());
        }
    }

    #[test]
    fn unsupported_phenomenon_is_an_error() {
        let o = Ontology::from_json(r#"{"topics": {"T": {"S": ["alpha", "beta"]}}}"#).unwrap();
        let lex = SynonymLexicon::from_json(r#"{"entries": []}"#, &o).unwrap();
        for weights in [
            PhenomenonWeights {
                synonym: 1.0,
                coreference: 1.0,
                ..Default::default()
            },
            PhenomenonWeights {
                synonym: 1.0,
                substring: 1.0,
                ..Default::default()
            },
            PhenomenonWeights {
                synonym: 1.0,
                direction: 1.0,
                ..Default::default()
            },
        ] {
            assert!(generate_corpus(&o, &lex, &spec(weights)).is_err());
        }
        assert!(generate_corpus(&o, &lex, &spec(PhenomenonWeights::default())).is_err());
    }

    #[test]
    fn misspelling_is_one_edit_away() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let syn = Synonym::of_words(&["Merlion", "Hotel"]);
        for _ in 0..20 {
            let m = misspell(&syn, &mut rng).unwrap();
            let words: Vec<&str> = m.split(' ').collect();
            let d: usize = words
                .iter()
                .zip(["Merlion", "Hotel"])
                .map(|(a, b)| edit_distance(a, b))
                .sum();
            assert_eq!(d, 1, "{m}");
        }
    }
}
