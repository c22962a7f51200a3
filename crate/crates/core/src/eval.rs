//! Utterance- and subdialog-level scoring: subset accuracy and
//! micro-averaged precision, recall and F1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dialog, DialogState};
use crate::pipeline::TrackingResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalLevel {
    Utterance,
    Subdialog,
}

impl fmt::Display for EvalLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalLevel::Utterance => "utterance",
            EvalLevel::Subdialog => "subdialog",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StateComparison {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub exact: bool,
}

pub fn compare_states(pred: &DialogState, gold: &DialogState) -> StateComparison {
    let tp = pred.iter().filter(|p| gold.contains(p)).count();
    StateComparison {
        tp,
        fp: pred.len() - tp,
        fn_: gold.len() - tp,
        exact: pred == gold,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub level: EvalLevel,
    pub subset_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub exact_matches: usize,
    pub units: usize,
}

impl MetricsReport {
    /// Empty denominators give precision/recall 1, and F1 is 0 when P+R is 0.
    pub fn from_counts(
        level: EvalLevel,
        tp: usize,
        fp: usize,
        fn_: usize,
        exact_matches: usize,
        units: usize,
    ) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                1.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            level,
            subset_accuracy: if units == 0 {
                0.0
            } else {
                exact_matches as f64 / units as f64
            },
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
            exact_matches,
            units,
        }
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<16} {:>10}", "level", self.level)?;
        writeln!(f, "{:<16} {:>10}", "units", self.units)?;
        writeln!(f, "{:<16} {:>10.4}", "accuracy", self.subset_accuracy)?;
        writeln!(f, "{:<16} {:>10.4}", "precision", self.precision)?;
        writeln!(f, "{:<16} {:>10.4}", "recall", self.recall)?;
        writeln!(f, "{:<16} {:>10.4}", "f1", self.f1)?;
        write!(
            f,
            "{:<16} {:>10}",
            "tp/fp/fn",
            format!("{}/{}/{}", self.tp, self.fp, self.fn_)
        )
    }
}

fn check_alignment(dialog: &Dialog, result: &TrackingResult) -> Result<()> {
    if dialog.id != result.dialog_id {
        return Err(Error::Evaluation(format!(
            "result for dialog {:?} aligned with dialog {:?}",
            result.dialog_id, dialog.id
        )));
    }
    let expected = dialog
        .subdialogs
        .iter()
        .enumerate()
        .flat_map(|(si, s)| (0..s.utterances.len()).map(move |ui| (si, ui)));
    let got: Vec<(usize, usize)> = result
        .utterances
        .iter()
        .map(|u| (u.subdialog_index, u.utterance_index))
        .collect();
    if !expected.eq(got.iter().copied()) {
        return Err(Error::Evaluation(format!(
            "predictions for dialog {:?} do not cover its utterances in order",
            dialog.id
        )));
    }
    Ok(())
}

pub fn evaluate(
    corpus: &[Dialog],
    results: &[TrackingResult],
    level: EvalLevel,
) -> Result<MetricsReport> {
    evaluate_restricted(corpus, results, level, None)
}

/// Like [`evaluate`], but with predicted and gold states restricted to one
/// slot when `slot` is given.
pub fn evaluate_restricted(
    corpus: &[Dialog],
    results: &[TrackingResult],
    level: EvalLevel,
    slot: Option<&str>,
) -> Result<MetricsReport> {
    if corpus.len() != results.len() {
        return Err(Error::Evaluation(format!(
            "{} dialogs but {} results",
            corpus.len(),
            results.len()
        )));
    }
    let restrict = |s: &DialogState| match slot {
        Some(slot) => s.restricted_to(slot),
        None => s.clone(),
    };
    let (mut tp, mut fp, mut fn_, mut exact, mut units) = (0, 0, 0, 0, 0);
    let mut tally = |pred: &DialogState, gold: &DialogState| {
        let c = compare_states(&restrict(pred), &restrict(gold));
        tp += c.tp;
        fp += c.fp;
        fn_ += c.fn_;
        exact += usize::from(c.exact);
        units += 1;
    };
    for (dialog, result) in corpus.iter().zip(results) {
        check_alignment(dialog, result)?;
        let golds = dialog
            .subdialogs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.gold_state.as_ref().ok_or_else(|| {
                    Error::Evaluation(format!(
                        "dialog {:?} subdialog {i} has no gold state",
                        dialog.id
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        match level {
            EvalLevel::Utterance => {
                for u in &result.utterances {
                    tally(&u.state, golds[u.subdialog_index]);
                }
            }
            EvalLevel::Subdialog => {
                for (state, gold) in result.subdialog_states().iter().zip(&golds) {
                    tally(state, gold);
                }
            }
        }
    }
    Ok(MetricsReport::from_counts(level, tp, fp, fn_, exact, units))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SlotValuePair, Speaker, Subdialog, Utterance};
    use crate::pipeline::UtteranceResult;
    use proptest::prelude::*;

    fn st(values: &[&str]) -> DialogState {
        values.iter().map(|v| SlotValuePair::new("S", *v)).collect()
    }

    #[test]
    fn compare_examples() {
        let c = compare_states(&st(&["a", "b"]), &st(&["b", "c"]));
        assert_eq!((c.tp, c.fp, c.fn_, c.exact), (1, 1, 1, false));
        let r = MetricsReport::from_counts(EvalLevel::Utterance, 1, 1, 1, 0, 1);
        assert_eq!((r.precision, r.recall, r.f1), (0.5, 0.5, 0.5));
        let c = compare_states(&st(&[]), &st(&[]));
        assert_eq!((c.tp, c.fp, c.fn_, c.exact), (0, 0, 0, true));
        let c = compare_states(&st(&["a"]), &st(&["a"]));
        assert_eq!((c.fp, c.fn_, c.exact), (0, 0, true));
    }

    fn dialog(id: &str, gold: DialogState, n: usize) -> Dialog {
        Dialog {
            id: id.into(),
            subdialogs: vec![Subdialog {
                topic: "T".into(),
                gold_state: Some(gold),
                utterances: (0..n)
                    .map(|_| Utterance::new(Speaker::Guide, "x"))
                    .collect(),
            }],
        }
    }

    fn result(id: &str, states: Vec<DialogState>) -> TrackingResult {
        TrackingResult {
            dialog_id: id.into(),
            utterances: states
                .into_iter()
                .enumerate()
                .map(|(i, state)| UtteranceResult {
                    subdialog_index: 0,
                    utterance_index: i,
                    state,
                    provenance: vec![],
                })
                .collect(),
        }
    }

    #[test]
    fn levels() {
        let d = dialog("d", st(&["a"]), 3);
        let r = result("d", vec![st(&[]), st(&[]), st(&["a"])]);
        let sub = evaluate(
            std::slice::from_ref(&d),
            std::slice::from_ref(&r),
            EvalLevel::Subdialog,
        )
        .unwrap();
        assert_eq!(sub.subset_accuracy, 1.0);
        let utt = evaluate(&[d], &[r], EvalLevel::Utterance).unwrap();
        assert!((utt.subset_accuracy - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn micro_average() {
        let corpus = vec![dialog("a", st(&["x"]), 1), dialog("b", st(&["y", "z"]), 1)];
        let results = vec![
            result("a", vec![st(&["x", "q"])]),
            result("b", vec![st(&["y"])]),
        ];
        let r = evaluate(&corpus, &results, EvalLevel::Utterance).unwrap();
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn misaligned_is_an_error() {
        let corpus = vec![dialog("a", st(&["x"]), 2)];
        assert!(evaluate(&corpus, &[], EvalLevel::Utterance).is_err());
        assert!(evaluate(
            &corpus,
            &[result("b", vec![st(&[]), st(&[])])],
            EvalLevel::Utterance
        )
        .is_err());
        assert!(evaluate(&corpus, &[result("a", vec![st(&[])])], EvalLevel::Utterance).is_err());
    }

    fn small_state() -> impl Strategy<Value = DialogState> {
        prop::collection::btree_set(prop::sample::select(vec!["a", "b", "c", "d"]), 0..4)
            .prop_map(|s| s.into_iter().map(|v| SlotValuePair::new("S", v)).collect())
    }

    proptest! {
        #[test]
        fn metrics_match_naive_recount(units in prop::collection::vec((small_state(), small_state()), 1..8)) {
            let corpus: Vec<Dialog> = units.iter().enumerate().map(|(i, (_, g))| dialog(&i.to_string(), g.clone(), 1)).collect();
            let results: Vec<TrackingResult> = units.iter().enumerate().map(|(i, (p, _))| result(&i.to_string(), vec![p.clone()])).collect();
            let r = evaluate(&corpus, &results, EvalLevel::Utterance).unwrap();
            let (mut tp, mut fp, mut fn_, mut ex) = (0, 0, 0, 0);
            for (p, g) in &units {
                for x in p { if g.contains(x) { tp += 1 } else { fp += 1 } }
                for x in g { if !p.contains(x) { fn_ += 1 } }
                if p == g { ex += 1 }
            }
            prop_assert_eq!((r.tp, r.fp, r.fn_, r.exact_matches), (tp, fp, fn_, ex));
            let p = if tp + fp == 0 { 1.0 } else { tp as f64 / (tp + fp) as f64 };
            let rc = if tp + fn_ == 0 { 1.0 } else { tp as f64 / (tp + fn_) as f64 };
            prop_assert_eq!(r.precision, p);
            prop_assert_eq!(r.recall, rc);
            prop_assert_eq!(r.subset_accuracy, ex as f64 / units.len() as f64);

            // invariant under reordering dialogs
            let rev_c: Vec<_> = corpus.iter().rev().cloned().collect();
            let rev_r: Vec<_> = results.iter().rev().cloned().collect();
            prop_assert_eq!(evaluate(&rev_c, &rev_r, EvalLevel::Utterance).unwrap(), r);
        }
    }
}
