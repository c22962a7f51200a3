use std::collections::BTreeMap;

use crate::matching::Source;
use crate::model::SlotValuePair;
use crate::prune::PriorTable;

use super::TrackingResult;

pub const FEATURE_NAMES: [&str; 6] = [
    "matched_by_synonym",
    "matched_by_coref",
    "pruned",
    "carried_over",
    "log_prior",
    "in_previous_state",
];

/// Rule-step outputs for one candidate pair at one utterance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FeatureVector {
    pub matched_by_synonym: f64,
    pub matched_by_coref: f64,
    pub pruned: f64,
    pub carried_over: f64,
    pub log_prior: f64,
    /// Pair was in the previous utterance's state within the same subdialog.
    pub in_previous_state: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; 6] {
        [
            self.matched_by_synonym,
            self.matched_by_coref,
            self.pruned,
            self.carried_over,
            self.log_prior,
            self.in_previous_state,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            matched_by_synonym: a[0],
            matched_by_coref: a[1],
            pruned: a[2],
            carried_over: a[3],
            log_prior: a[4],
            in_previous_state: a[5],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub dialog_id: String,
    pub subdialog_index: usize,
    pub utterance_index: usize,
    /// Index into `TrackingResult::utterances`.
    pub position: usize,
    pub pair: SlotValuePair,
    pub features: FeatureVector,
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// One row per (utterance, candidate pair), where candidates are every pair
/// any step produced, pruned or not. Rows are ordered by utterance, then
/// slot, then value.
pub fn export_features(result: &TrackingResult, priors: &PriorTable) -> Vec<FeatureRow> {
    let mut rows = Vec::new();
    for (position, utt) in result.utterances.iter().enumerate() {
        let previous = position
            .checked_sub(1)
            .map(|p| &result.utterances[p])
            .filter(|p| p.subdialog_index == utt.subdialog_index);
        let mut pool: BTreeMap<&SlotValuePair, FeatureVector> = BTreeMap::new();
        for entry in &utt.provenance {
            let f = pool.entry(&entry.detection.pair).or_default();
            match entry.detection.source {
                Source::Synonym => f.matched_by_synonym = 1.0,
                Source::Coref => f.matched_by_coref = 1.0,
                Source::Carryover => f.carried_over = 1.0,
            }
            if entry.pruned {
                f.pruned = 1.0;
            }
        }
        for (pair, mut features) in pool {
            features.log_prior = (priors.count(pair) as f64).ln_1p();
            features.in_previous_state = flag(previous.is_some_and(|p| p.state.contains(pair)));
            rows.push(FeatureRow {
                dialog_id: result.dialog_id.clone(),
                subdialog_index: utt.subdialog_index,
                utterance_index: utt.utterance_index,
                position,
                pair: pair.clone(),
                features,
            });
        }
    }
    rows
}
