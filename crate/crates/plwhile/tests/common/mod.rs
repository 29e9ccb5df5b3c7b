#![allow(dead_code)]

use std::path::PathBuf;

use plwhile::frontend::{parse, SourceFile};

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

pub fn source(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).expect("corpus file")
}

pub fn load(name: &str) -> SourceFile {
    parse(&source(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub const CORPUS: [&str; 4] = ["example.plw", "leaky.plw", "sampling.plw", "forged.plw"];
