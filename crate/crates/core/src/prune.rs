//! Selection among closely related detections.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::annotate::{lemma_of, tokenize, AnnotatedUtterance};
use crate::matching::{Detection, Source};
use crate::model::{Ontology, SlotValuePair};

/// Occurrence counts of pairs in training gold states.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PriorTable {
    counts: BTreeMap<SlotValuePair, u64>,
}

#[derive(Serialize, Deserialize)]
struct PriorRecord {
    slot: String,
    value: String,
    count: u64,
}

impl PriorTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, pair: &SlotValuePair) -> u64 {
        self.counts.get(pair).copied().unwrap_or(0)
    }

    pub fn add(&mut self, pair: SlotValuePair, n: u64) {
        *self.counts.entry(pair).or_default() += n;
    }

    pub fn set(&mut self, pair: SlotValuePair, n: u64) {
        self.counts.insert(pair, n);
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn to_json(&self) -> String {
        let records: Vec<PriorRecord> = self
            .counts
            .iter()
            .map(|(p, &count)| PriorRecord {
                slot: p.slot.clone(),
                value: p.value.clone(),
                count,
            })
            .collect();
        serde_json::to_string_pretty(&records).expect("priors serialize")
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        let records: Vec<PriorRecord> =
            serde_json::from_str(text).map_err(|e| crate::Error::Parse {
                location: format!("line {} column {}", e.line(), e.column()),
                message: e.to_string(),
            })?;
        let mut table = Self::new();
        for r in records {
            table.add(SlotValuePair::new(r.slot, r.value), r.count);
        }
        Ok(table)
    }
}

/// The subdialog context pruning decisions may consult.
#[derive(Debug, Clone, Copy)]
pub struct PruneContext<'a> {
    pub topic: &'a str,
    /// Annotated utterances of the current subdialog so far, keyed by their
    /// position in the dialog.
    pub utterances: &'a [(usize, AnnotatedUtterance)],
    pub priors: &'a PriorTable,
    pub ontology: &'a Ontology,
}

impl PruneContext<'_> {
    fn utterance(&self, index: usize) -> Option<&AnnotatedUtterance> {
        self.utterances
            .iter()
            .find(|(i, _)| *i == index)
            .map(|(_, u)| u)
    }

    fn mentions(&self, phrase: &str) -> bool {
        let lemmas: Vec<String> = tokenize(phrase).iter().map(|(w, _)| lemma_of(w)).collect();
        self.utterances
            .iter()
            .any(|(_, u)| u.find_lemmas(&lemmas, 0).is_some())
    }
}

/// Drops detections whose value is a strict substring (case-folded) of
/// another detected value in the same slot.
pub fn prune_substrings(detections: Vec<Detection>) -> Vec<Detection> {
    let keys: BTreeSet<(String, String)> = detections
        .iter()
        .map(|d| (d.pair.slot.clone(), d.pair.value.to_lowercase()))
        .collect();
    detections
        .into_iter()
        .filter(|d| {
            let value = d.pair.value.to_lowercase();
            !keys.iter().any(|(slot, other)| {
                *slot == d.pair.slot && other.len() > value.len() && other.contains(&value)
            })
        })
        .collect()
}

/// Keeps one member of each group of related synonym detections (same slot,
/// same attribute group): the one whose neighbourhood or price range is
/// mentioned most, then the one with the highest prior, then the first in
/// ontology order.
pub fn disambiguate_groups(detections: Vec<Detection>, ctx: &PruneContext<'_>) -> Vec<Detection> {
    let mut groups: BTreeMap<(&str, &str), BTreeSet<&SlotValuePair>> = BTreeMap::new();
    for d in detections.iter().filter(|d| d.source == Source::Synonym) {
        if let Some(group) = ctx
            .ontology
            .attributes(&d.pair.value)
            .and_then(|a| a.group.as_deref())
        {
            groups
                .entry((&d.pair.slot, group))
                .or_default()
                .insert(&d.pair);
        }
    }
    let mut losers: HashSet<SlotValuePair> = HashSet::new();
    for members in groups.values().filter(|m| m.len() >= 2) {
        let winner = members
            .iter()
            .max_by_key(|pair| {
                let attrs = ctx.ontology.attributes(&pair.value);
                let score = attrs
                    .map(|a| {
                        [&a.neighbourhood, &a.price_range]
                            .into_iter()
                            .flatten()
                            .filter(|v| ctx.mentions(v))
                            .count()
                    })
                    .unwrap_or(0);
                let order = ctx
                    .ontology
                    .value_index(ctx.topic, pair)
                    .unwrap_or(usize::MAX);
                (score, ctx.priors.count(pair), Reverse(order))
            })
            .copied();
        losers.extend(
            members
                .iter()
                .filter(|p| Some(**p) != winner)
                .map(|p| (*p).clone()),
        );
    }
    detections
        .into_iter()
        .filter(|d| d.source != Source::Synonym || !losers.contains(&d.pair))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    To,
    From,
}

const DETERMINERS: &[&str] = &["a", "an", "the", "this", "that", "these", "those"];

/// Preposition among the 3 non-determiner tokens preceding `token`.
fn preposition_before(utt: &AnnotatedUtterance, token: usize) -> Option<Direction> {
    let mut inspected = 0;
    for tok in utt.tokens[..token].iter().rev() {
        let w = tok.folded.as_str();
        if DETERMINERS.contains(&w) {
            continue;
        }
        match w {
            "to" | "into" | "towards" | "toward" => return Some(Direction::To),
            "from" => return Some(Direction::From),
            _ => {}
        }
        inspected += 1;
        if inspected == 3 {
            break;
        }
    }
    None
}

#[derive(Default)]
struct ValueMentions {
    first: (usize, usize),
    mark: Option<((usize, usize), Direction)>,
}

/// Moves detections between the TO and FROM slots according to a preceding
/// preposition, or by mention order (earliest FROM, latest TO) when at least
/// two values are unmarked.
pub fn assign_direction_slots(
    detections: Vec<Detection>,
    ctx: &PruneContext<'_>,
) -> Vec<Detection> {
    let Some(dir) = ctx.ontology.direction_slots() else {
        return detections;
    };
    if !ctx.ontology.topic_has_slot(ctx.topic, &dir.to)
        || !ctx.ontology.topic_has_slot(ctx.topic, &dir.from)
    {
        return detections;
    }
    let eligible = |d: &Detection| d.pair.slot == dir.to || d.pair.slot == dir.from;

    let mut values: BTreeMap<&str, ValueMentions> = BTreeMap::new();
    for d in detections.iter().filter(|d| eligible(d)) {
        let pos = (d.utterance_index, d.first_token().unwrap_or(usize::MAX));
        let entry = values
            .entry(&d.pair.value)
            .or_insert_with(|| ValueMentions {
                first: pos,
                mark: None,
            });
        entry.first = entry.first.min(pos);
        let mark = d.first_token().and_then(|t| {
            ctx.utterance(d.utterance_index)
                .and_then(|u| preposition_before(u, t))
        });
        if let Some(m) = mark {
            if entry.mark.is_none_or(|(p, _)| pos >= p) {
                entry.mark = Some((pos, m));
            }
        }
    }

    let mut targets: BTreeMap<&str, Direction> = BTreeMap::new();
    let mut unmarked: Vec<(&(usize, usize), &str)> = Vec::new();
    for (value, m) in &values {
        match m.mark {
            Some((_, d)) => {
                targets.insert(value, d);
            }
            None => unmarked.push((&m.first, value)),
        }
    }
    if unmarked.len() >= 2 {
        unmarked.sort();
        targets.insert(unmarked[0].1, Direction::From);
        targets.insert(unmarked[unmarked.len() - 1].1, Direction::To);
    }

    let targets: BTreeMap<String, Direction> = targets
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    detections
        .into_iter()
        .map(|mut d| {
            if eligible(&d) {
                if let Some(t) = targets.get(&d.pair.value) {
                    let slot = match t {
                        Direction::To => &dir.to,
                        Direction::From => &dir.from,
                    };
                    let moved = SlotValuePair::new(slot.clone(), d.pair.value.clone());
                    if ctx.ontology.is_valid(ctx.topic, &moved) {
                        d.pair = moved;
                    }
                }
            }
            d
        })
        .collect()
}

/// Step 3: substring pruning, then group disambiguation, then direction
/// assignment.
pub fn prune(detections: Vec<Detection>, ctx: &PruneContext<'_>) -> Vec<Detection> {
    let d = prune_substrings(detections);
    let d = disambiguate_groups(d, ctx);
    assign_direction_slots(d, ctx)
}
