use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use serde_json::{json, Value};
use slotrack::model::corpus_to_jsonl;
use slotrack::{parse_corpus, Ontology, SynonymLexicon};

mod common;

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,7}"
}

fn value() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..3).prop_map(|w| w.join(" "))
}

/// Topics T0.., slots from a small pool, values unique per slot.
fn ontology_json() -> impl Strategy<Value = Value> {
    let slot = prop::collection::btree_set(value(), 1..4);
    let topic = prop::collection::btree_map(prop::sample::select(vec!["A", "B", "C"]), slot, 1..3);
    (
        prop::collection::vec(topic, 1..3),
        any::<bool>(),
        prop::collection::vec(word(), 0..2),
    )
        .prop_map(|(topics, with_dir, place_types)| {
            let mut all_values = BTreeSet::new();
            let slot_names: BTreeSet<&str> =
                topics.iter().flat_map(|t| t.keys().copied()).collect();
            let topics: BTreeMap<String, Value> = topics
                .into_iter()
                .enumerate()
                .map(|(i, slots)| {
                    for v in slots.values().flatten() {
                        all_values.insert(v.clone());
                    }
                    (format!("T{i}"), json!(slots))
                })
                .collect();
            let attrs: BTreeMap<&String, Value> = all_values
                .iter()
                .zip(place_types.iter().cycle())
                .map(|(v, t)| (v, json!({"place_type": t})))
                .collect();
            let first = slot_names.iter().next().unwrap();
            let mut o =
                json!({"topics": topics, "value_attributes": attrs, "place_slots": [first]});
            if with_dir && slot_names.contains("A") && slot_names.contains("B") {
                o["direction_slots"] = json!({"to": "A", "from": "B"});
            }
            o
        })
}

/// (pair index, suppress_default, synonyms of (word, pos selector)).
type Picks = Vec<(usize, bool, Vec<Vec<(String, u8)>>)>;

fn lexicon_json(ontology: &Ontology, picks: Picks) -> Value {
    let pairs: Vec<_> = ontology.all_pairs().into_iter().collect();
    let mut seen = BTreeSet::new();
    let entries: Vec<Value> = picks
        .into_iter()
        .filter_map(|(i, suppress, syns)| {
            let pair = &pairs[i % pairs.len()];
            if !seen.insert(pair.clone()) {
                return None;
            }
            let syns: Vec<Value> = syns
                .into_iter()
                .map(|terms| {
                    let uniq: BTreeMap<String, u8> = terms.into_iter().collect();
                    let terms: Vec<Value> = uniq
                        .into_iter()
                        .map(|(w, p)| match p % 3 {
                            0 => json!({"word": w}),
                            1 => json!({"word": w, "pos": "noun"}),
                            _ => json!({"word": w, "pos": "verb"}),
                        })
                        .collect();
                    json!(terms)
                })
                .collect();
            Some(json!({"slot": pair.slot, "value": pair.value, "suppress_default": suppress, "synonyms": syns}))
        })
        .collect();
    json!({ "entries": entries })
}

fn synonym_picks() -> impl Strategy<Value = Picks> {
    prop::collection::vec(
        (
            0usize..64,
            any::<bool>(),
            prop::collection::vec(prop::collection::vec((word(), any::<u8>()), 1..3), 0..3),
        ),
        0..6,
    )
}

proptest! {
    #[test]
    fn ontology_round_trips(o in ontology_json()) {
        let ontology = Ontology::from_json(&o.to_string()).unwrap();
        let again = Ontology::from_json(&ontology.to_json()).unwrap();
        prop_assert_eq!(again, ontology);
    }

    #[test]
    fn lexicon_round_trips_and_keeps_implicit_synonyms(o in ontology_json(), picks in synonym_picks()) {
        let ontology = Ontology::from_json(&o.to_string()).unwrap();
        let lj = lexicon_json(&ontology, picks);
        let lexicon = SynonymLexicon::from_json(&lj.to_string(), &ontology).unwrap();
        let again = SynonymLexicon::from_json(&lexicon.to_json(), &ontology).unwrap();
        prop_assert_eq!(&again, &lexicon);

        let suppressed: BTreeSet<(String, String)> = lj["entries"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|e| e["suppress_default"] == true)
            .map(|e| (e["slot"].as_str().unwrap().to_string(), e["value"].as_str().unwrap().to_string()))
            .collect();
        for pair in ontology.all_pairs() {
            if !suppressed.contains(&(pair.slot.clone(), pair.value.clone())) {
                prop_assert!(!lexicon.synonyms(&pair).is_empty(), "{} has no synonym", pair);
            }
        }
    }

    #[test]
    fn corpus_round_trips(seed in 0u64..1000) {
        let o = common::ontology();
        let corpus = slotrack::generate_corpus(&o, &common::lexicon(&o), &common::spec(seed, 3, common::mixed())).unwrap();
        let text = corpus_to_jsonl(&corpus);
        let again = parse_corpus(&text, &o).unwrap();
        prop_assert_eq!(corpus_to_jsonl(&again), text);
        prop_assert_eq!(again, corpus);
    }
}

#[test]
fn malformed_fixtures_are_rejected() {
    let ontologies = [
        "",
        "[]",
        r#"{"topics": {}}"#,
        r#"{"topics": {"T": {"S": ["a", "a"]}}}"#,
        r#"{"topics": {"T": {"S": [""]}}}"#,
        r#"{"topics": {"T": {"S": ["a"]}}, "place_slots": ["Q"]}"#,
        r#"{"topics": {"T": {"S": ["a"]}}, "direction_slots": {"to": "S", "from": "Q"}}"#,
        r#"{"topics": {"T": {"S": ["a"]}}, "value_attributes": {"zzz": {"place_type": "hotel"}}}"#,
    ];
    for text in ontologies {
        assert!(
            Ontology::from_json(text).is_err(),
            "accepted ontology {text}"
        );
    }

    let o = Ontology::from_json(r#"{"topics": {"T": {"S": ["alpha"]}}}"#).unwrap();
    let lexicons = [
        "{}",
        r#"{"entries": [{"slot": "S", "value": "beta", "synonyms": []}]}"#,
        r#"{"entries": [{"slot": "S", "value": "alpha", "synonyms": [[{"word": "two words"}]]}]}"#,
        r#"{"entries": [{"slot": "S", "value": "alpha", "synonyms": [[{"word": ""}]]}]}"#,
        r#"{"entries": [{"slot": "S", "value": "alpha", "synonyms": [[{"word": "x", "pos": "adverb"}]]}]}"#,
    ];
    for text in lexicons {
        assert!(
            SynonymLexicon::from_json(text, &o).is_err(),
            "accepted lexicon {text}"
        );
    }

    let corpora = [
        "{",
        r#"{"id": "d", "subdialogs": [{"topic": "U", "gold_state": [], "utterances": [{"speaker": "guide", "text": "x"}]}]}"#,
        r#"{"id": "d", "subdialogs": [{"topic": "T", "gold_state": [], "utterances": [{"speaker": "robot", "text": "x"}]}]}"#,
        r#"{"id": "d", "subdialogs": [{"topic": "T", "gold_state": [], "utterances": [{"speaker": "guide", "text": ""}]}]}"#,
        r#"{"id": "d", "subdialogs": [{"topic": "T", "gold_state": [{"slot": "S", "value": "beta"}], "utterances": [{"speaker": "guide", "text": "x"}]}]}"#,
    ];
    for text in corpora {
        assert!(parse_corpus(text, &o).is_err(), "accepted corpus {text}");
    }
}

#[test]
fn bundled_files_load() {
    let o = common::ontology();
    let lex = common::lexicon(&o);
    assert_eq!(o.topics().count(), 4);
    let amoy = slotrack::SlotValuePair::new("PLACE", "Amoy by Far East Hospitality 4");
    assert_eq!(o.place_type(&amoy.value), Some("hotel"));
    assert!(lex.synonyms(&amoy).iter().any(|s| s.terms.len() == 2));
    for name in ["corpus-train.jsonl", "corpus-test.jsonl"] {
        let corpus = slotrack::load_corpus(common::data(name), &o).unwrap();
        assert!(corpus.len() >= 20);
    }
    common::config();
}
