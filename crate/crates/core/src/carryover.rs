//! Slot-value carryover and training-set statistics.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate_restricted, EvalLevel};
use crate::matching::{Detection, Source};
use crate::model::{Dialog, DialogState, Ontology, SynonymLexicon};
use crate::pipeline::{Tracker, TrackerConfig};
use crate::prune::PriorTable;

/// Slots whose pairs persist until replaced or the topic changes.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CarryoverPolicy {
    pub enabled_slots: BTreeSet<String>,
}

impl CarryoverPolicy {
    pub fn new<I, S>(slots: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            enabled_slots: slots.into_iter().map(Into::into).collect(),
        }
    }

    pub fn is_enabled(&self, slot: &str) -> bool {
        self.enabled_slots.contains(slot)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("policy serializes")
    }

    pub fn validate(&self, ontology: &Ontology) -> Result<()> {
        let slots = ontology.all_slots();
        let unknown: Vec<_> = self
            .enabled_slots
            .iter()
            .filter(|s| !slots.contains(s.as_str()))
            .map(|s| {
                crate::error::ValidationIssue::new("carryover_slots", format!("unknown slot {s:?}"))
            })
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(unknown))
        }
    }
}

/// Re-emits the previous state's pairs for enabled slots that have no new
/// detection yet. Nothing is carried across a topic change.
pub fn apply_carryover(
    prev_state: &DialogState,
    prev_topic: Option<&str>,
    cur_topic: &str,
    slots_with_new_detections: &BTreeSet<String>,
    policy: &CarryoverPolicy,
    utterance_index: usize,
) -> Vec<Detection> {
    if prev_topic != Some(cur_topic) {
        return Vec::new();
    }
    prev_state
        .iter()
        .filter(|p| policy.is_enabled(&p.slot) && !slots_with_new_detections.contains(&p.slot))
        .map(|p| Detection::derived(p.clone(), Source::Carryover, utterance_index))
        .collect()
}

/// Number of subdialogs whose gold state contains each pair.
pub fn count_priors(corpus: &[Dialog]) -> Result<PriorTable> {
    let mut table = PriorTable::new();
    for dialog in corpus {
        for (i, sub) in dialog.subdialogs.iter().enumerate() {
            let gold = sub.gold_state.as_ref().ok_or_else(|| {
                Error::Training(format!(
                    "dialog {:?} subdialog {i} has no gold state",
                    dialog.id
                ))
            })?;
            for pair in gold {
                table.add(pair.clone(), 1);
            }
        }
    }
    Ok(table)
}

/// Enables a slot iff carrying it alone raises utterance-level F1 on that
/// slot's pairs over carrying nothing.
pub fn learn_enabled_slots(
    corpus: &[Dialog],
    ontology: &Ontology,
    lexicon: &SynonymLexicon,
    config: &TrackerConfig,
) -> Result<CarryoverPolicy> {
    let run = |policy: CarryoverPolicy| -> Result<Vec<_>> {
        let config = TrackerConfig {
            carryover: policy,
            ..config.clone()
        };
        let tracker = Tracker::new(ontology, lexicon, config)?;
        corpus.iter().map(|d| tracker.track_dialog(d)).collect()
    };
    let without = run(CarryoverPolicy::default())?;
    let slots: Vec<&str> = ontology.all_slots().into_iter().collect();
    let decisions: Vec<(String, bool)> = slots
        .par_iter()
        .map(|&slot| -> Result<(String, bool)> {
            let with = run(CarryoverPolicy::new([slot]))?;
            let f1_with = evaluate_restricted(corpus, &with, EvalLevel::Utterance, Some(slot))?.f1;
            let f1_without =
                evaluate_restricted(corpus, &without, EvalLevel::Utterance, Some(slot))?.f1;
            Ok((slot.to_string(), f1_with > f1_without))
        })
        .collect::<Result<_>>()?;
    Ok(CarryoverPolicy::new(
        decisions.into_iter().filter(|(_, on)| *on).map(|(s, _)| s),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SlotValuePair, Speaker, Subdialog, Utterance};

    fn state(pairs: &[(&str, &str)]) -> DialogState {
        pairs
            .iter()
            .map(|(s, v)| SlotValuePair::new(*s, *v))
            .collect()
    }

    #[test]
    fn carryover_rules() {
        let prev = state(&[("PLACE", "Sentosa"), ("ACTIVITY", "Swimming")]);
        let policy = CarryoverPolicy::new(["PLACE"]);
        let none = BTreeSet::new();
        assert!(apply_carryover(&prev, Some("ATTRACTION"), "FOOD", &none, &policy, 3).is_empty());
        let carried = apply_carryover(&prev, Some("ATTRACTION"), "ATTRACTION", &none, &policy, 3);
        assert_eq!(carried.len(), 1);
        assert_eq!(carried[0].pair, SlotValuePair::new("PLACE", "Sentosa"));
        assert_eq!(carried[0].source, Source::Carryover);
        let seen: BTreeSet<String> = ["PLACE".to_string()].into();
        assert!(
            apply_carryover(&prev, Some("ATTRACTION"), "ATTRACTION", &seen, &policy, 3).is_empty()
        );
        assert!(apply_carryover(
            &prev,
            Some("ATTRACTION"),
            "ATTRACTION",
            &none,
            &CarryoverPolicy::default(),
            3
        )
        .is_empty());
        assert!(apply_carryover(&prev, None, "ATTRACTION", &none, &policy, 0).is_empty());
    }

    fn sub(gold: Option<DialogState>) -> Subdialog {
        Subdialog {
            topic: "T".into(),
            gold_state: gold,
            utterances: vec![Utterance::new(Speaker::Guide, "hi")],
        }
    }

    #[test]
    fn priors() {
        assert!(count_priors(&[]).unwrap().is_empty());
        let a = state(&[("S", "a")]);
        let d = Dialog {
            id: "d".into(),
            subdialogs: vec![
                sub(Some(a.clone())),
                sub(Some(DialogState::new())),
                sub(Some(a.clone())),
                sub(Some(a)),
                sub(Some(state(&[("S", "b")]))),
            ],
        };
        let t = count_priors(&[d]).unwrap();
        assert_eq!(t.count(&SlotValuePair::new("S", "a")), 3);
        assert_eq!(t.count(&SlotValuePair::new("S", "zzz")), 0);

        let missing = Dialog {
            id: "m".into(),
            subdialogs: vec![sub(None)],
        };
        let err = count_priors(&[missing]).unwrap_err();
        assert!(err.to_string().contains("\"m\""));
    }
}
