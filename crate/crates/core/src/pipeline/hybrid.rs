//! Logistic-regression classifier over rule-step features.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dialog, DialogState};

use super::features::{export_features, FeatureRow, FeatureVector, FEATURE_NAMES};
use super::{Tracker, TrackingResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridParams {
    pub threshold: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub negative_downsample_ratio: f64,
    pub seed: u64,
}

impl Default for HybridParams {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            learning_rate: 0.1,
            epochs: 30,
            negative_downsample_ratio: 3.0,
            seed: 13,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: [f64; 6],
    pub bias: f64,
    pub trained: bool,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    bias: f64,
    weights: BTreeMap<String, f64>,
    #[serde(default)]
    trained: bool,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn dot(w: &[f64; 6], x: &[f64; 6]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

impl LinearModel {
    pub fn new(weights: [f64; 6], bias: f64) -> Self {
        Self {
            weights,
            bias,
            trained: false,
        }
    }

    /// Weights under which the classifier reproduces the rule tracker: a
    /// candidate is accepted iff it survived pruning or was carried over.
    pub fn rule_mimicking() -> Self {
        Self::new([10.0, 10.0, -20.0, 20.0, 0.0, 0.0], -5.0)
    }

    /// Probability that the candidate belongs to the state.
    pub fn score(&self, features: &FeatureVector) -> f64 {
        sigmoid(dot(&self.weights, &features.to_array()) + self.bias)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            bias: self.bias,
            weights: FEATURE_NAMES
                .iter()
                .zip(self.weights)
                .map(|(n, w)| (n.to_string(), w))
                .collect(),
            trained: self.trained,
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let mut weights = [0.0; 6];
        for (name, w) in file.weights {
            let i = FEATURE_NAMES
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| Error::invalid("weights", format!("unknown feature {name:?}")))?;
            weights[i] = w;
        }
        let model = Self {
            weights,
            bias: file.bias,
            trained: file.trained,
        };
        if !model.is_finite() {
            return Err(Error::invalid("weights", "non-finite weight"));
        }
        Ok(model)
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }
}

/// Gold membership of each row's pair in its subdialog's gold state.
pub fn label_rows(rows: &[FeatureRow], dialog: &Dialog) -> Result<Vec<bool>> {
    rows.iter()
        .map(|row| {
            let sub = dialog.subdialogs.get(row.subdialog_index).ok_or_else(|| {
                Error::Training(format!(
                    "dialog {:?} has no subdialog {}",
                    dialog.id, row.subdialog_index
                ))
            })?;
            let gold = sub.gold_state.as_ref().ok_or_else(|| {
                Error::Training(format!(
                    "dialog {:?} subdialog {} has no gold state",
                    dialog.id, row.subdialog_index
                ))
            })?;
            Ok(gold.contains(&row.pair))
        })
        .collect()
}

/// Tracks every dialog and returns its feature rows with gold labels.
pub fn training_set(
    tracker: &Tracker<'_>,
    corpus: &[Dialog],
) -> Result<(Vec<FeatureRow>, Vec<bool>)> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for dialog in corpus {
        let result = tracker.track_dialog(dialog)?;
        let r = export_features(&result, &tracker.config().priors);
        labels.extend(label_rows(&r, dialog)?);
        rows.extend(r);
    }
    Ok((rows, labels))
}

/// All positives plus at most `ratio` × positives negatives, sorted.
fn select_rows(labels: &[bool], ratio: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let positives: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut negatives: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let cap = (ratio.max(0.0) * positives.len() as f64).floor() as usize;
    if negatives.len() > cap {
        negatives.shuffle(rng);
        negatives.truncate(cap);
    }
    let mut rows: Vec<usize> = positives.into_iter().chain(negatives).collect();
    rows.sort_unstable();
    rows
}

/// Trains by plain SGD on logistic loss after seeded downsampling of the
/// negatives to at most `negative_downsample_ratio` per positive.
pub fn train_hybrid(
    features: &[FeatureVector],
    labels: &[bool],
    params: &HybridParams,
) -> Result<LinearModel> {
    if features.len() != labels.len() {
        return Err(Error::Training(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if !labels.contains(&true) {
        return Err(Error::Training("no positive examples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order = select_rows(labels, params.negative_downsample_ratio, &mut rng);

    let mut weights = [0.0; 6];
    let mut bias = 0.0;
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = features[i].to_array();
            let y = if labels[i] { 1.0 } else { 0.0 };
            let g = sigmoid(dot(&weights, &x) + bias) - y;
            for (w, xi) in weights.iter_mut().zip(x) {
                *w -= params.learning_rate * g * xi;
            }
            bias -= params.learning_rate * g;
        }
    }
    let model = LinearModel {
        weights,
        bias,
        trained: true,
    };
    if !model.is_finite() {
        return Err(Error::Training("training diverged".into()));
    }
    Ok(model)
}

/// Rule tracking followed by classification of each utterance's candidate
/// pool; the state is every candidate scoring at least the threshold.
pub fn hybrid_track(
    tracker: &Tracker<'_>,
    model: &LinearModel,
    dialog: &Dialog,
) -> Result<TrackingResult> {
    let mut result = tracker.track_dialog(dialog)?;
    let rows = export_features(&result, &tracker.config().priors);
    let threshold = tracker.config().hybrid.threshold;
    for utt in &mut result.utterances {
        utt.state = DialogState::new();
    }
    for row in rows {
        if model.score(&row.features) >= threshold {
            result.utterances[row.position].state.insert(row.pair);
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(syn: f64, pruned: f64) -> FeatureVector {
        FeatureVector {
            matched_by_synonym: syn,
            pruned,
            ..FeatureVector::default()
        }
    }

    #[test]
    fn no_positives_or_misaligned() {
        let p = HybridParams::default();
        let feats = vec![fv(0.0, 0.0); 4];
        let err = train_hybrid(&feats, &[false; 4], &p).unwrap_err();
        assert!(err.to_string().contains("no positive examples"));
        assert!(train_hybrid(&feats, &[true; 3], &p).is_err());
    }

    #[test]
    fn negatives_are_capped() {
        let labels: Vec<bool> = (0..110).map(|i| i < 10).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows = select_rows(&labels, 2.0, &mut rng);
        assert_eq!(rows.iter().filter(|&&i| labels[i]).count(), 10);
        assert!(rows.iter().filter(|&&i| !labels[i]).count() <= 20);
    }

    #[test]
    fn identical_rows_predict_majority() {
        let p = HybridParams {
            epochs: 200,
            negative_downsample_ratio: 10.0,
            ..HybridParams::default()
        };
        let x = fv(1.0, 0.0);
        let feats = vec![x; 40];
        let mostly_pos: Vec<bool> = (0..40).map(|i| i % 4 != 0).collect();
        assert!(train_hybrid(&feats, &mostly_pos, &p).unwrap().score(&x) > 0.5);
        let mostly_neg: Vec<bool> = (0..40).map(|i| i % 4 == 0).collect();
        assert!(train_hybrid(&feats, &mostly_neg, &p).unwrap().score(&x) < 0.5);
    }

    #[test]
    fn seeded_training_is_bit_identical() {
        let feats: Vec<_> = (0..50)
            .map(|i| fv((i % 2) as f64, (i % 3 == 0) as u8 as f64))
            .collect();
        let labels: Vec<bool> = (0..50).map(|i| i % 2 == 1 && i % 3 != 0).collect();
        let p = HybridParams::default();
        let a = train_hybrid(&feats, &labels, &p).unwrap();
        let b = train_hybrid(&feats, &labels, &p).unwrap();
        assert_eq!(a.weights.map(f64::to_bits), b.weights.map(f64::to_bits));
        assert_eq!(a.bias.to_bits(), b.bias.to_bits());
    }

    #[test]
    fn model_json_round_trip() {
        let m = LinearModel::rule_mimicking();
        assert_eq!(LinearModel::from_json(&m.to_json()).unwrap(), m);
        assert!(LinearModel::from_json(r#"{"bias": 0, "weights": {"bogus": 1}}"#).is_err());
    }
}
