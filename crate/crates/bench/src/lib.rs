//! Shared fixtures for the benchmarks: the bundled ontology, lexicon and a
//! corpus generated from the bundled spec.

use std::path::PathBuf;

use slotrack::{
    generate_corpus, load_lexicon, load_ontology, Dialog, GeneratorSpec, Ontology, SynonymLexicon,
};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub struct Fixture {
    pub ontology: Ontology,
    pub lexicon: SynonymLexicon,
    pub corpus: Vec<Dialog>,
}

pub fn fixture() -> Fixture {
    let dir = data_dir();
    let ontology = load_ontology(dir.join("ontology.json")).expect("bundled ontology");
    let lexicon = load_lexicon(dir.join("lexicon.json"), &ontology).expect("bundled lexicon");
    let spec =
        std::fs::read_to_string(dir.join("generator-spec-train.json")).expect("bundled spec");
    let spec = GeneratorSpec::from_json(&spec).expect("valid spec");
    let corpus = generate_corpus(&ontology, &lexicon, &spec).expect("generation");
    Fixture {
        ontology,
        lexicon,
        corpus,
    }
}
