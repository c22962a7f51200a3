#![allow(dead_code)]

use std::path::PathBuf;

use slotrack::{
    generate_corpus, load_lexicon, load_ontology, Dialog, GeneratorSpec, Ontology,
    PhenomenonWeights, SynonymLexicon, TrackerConfig,
};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn ontology() -> Ontology {
    load_ontology(data("ontology.json")).unwrap()
}

pub fn lexicon(ontology: &Ontology) -> SynonymLexicon {
    load_lexicon(data("lexicon.json"), ontology).unwrap()
}

pub fn config() -> TrackerConfig {
    TrackerConfig::load(data("tracker-config.json")).unwrap()
}

pub fn spec(seed: u64, n: usize, weights: PhenomenonWeights) -> GeneratorSpec {
    GeneratorSpec {
        seed,
        n_dialogs: [n, n],
        subdialogs_per_dialog: [2, 4],
        utterances_per_subdialog: [1, 4],
        weights,
        id_prefix: "p".into(),
    }
}

pub fn mixed() -> PhenomenonWeights {
    PhenomenonWeights {
        synonym: 3.0,
        misspelling: 1.0,
        coreference: 1.5,
        substring: 1.0,
        direction: 1.0,
        persistence: 1.5,
    }
}

pub fn corpus(seed: u64, n: usize) -> Vec<Dialog> {
    let o = ontology();
    generate_corpus(&o, &lexicon(&o), &spec(seed, n, mixed())).unwrap()
}
