//! Rank candidate emotion words in a forum corpus by TF-IDF.
//!
//! cargo run --example mine_terms [-- <threads.jsonl> <dict.tsv> <top_k>]

use std::path::PathBuf;

use cantolex::corpus::{load_corpus, mine_terms, segment_text, MineConfig, SegmenterDictionary};

fn main() -> cantolex::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus");
    let mut args = std::env::args().skip(1);
    let corpus_path = args.next().map_or(fixtures.join("threads.jsonl"), PathBuf::from);
    let dict_path = args.next().map_or(fixtures.join("dict.tsv"), PathBuf::from);
    let top_k = args.next().map_or(15, |k| k.parse().expect("top_k must be a number"));

    let corpus = load_corpus(&corpus_path)?;
    let dict = SegmenterDictionary::load(&dict_path)?;
    println!("{} documents, {} dictionary terms", corpus.len(), dict.len());

    let first = &corpus.documents()[0];
    let preview: Vec<String> = segment_text(&first.text, &dict)
        .into_iter()
        .filter(|t| !t.is_whitespace())
        .take(12)
        .map(|t| t.surface)
        .collect();
    println!("segmented {}: {}", first.id, preview.join(" / "));

    let config = MineConfig { top_k, ..MineConfig::default() };
    println!("\n{:<8} {:<4} {:>8} {:>10}", "term", "pos", "idf", "tfidf");
    for s in mine_terms(&corpus, &dict, &config)? {
        println!("{:<8} {:<4} {:>8.4} {:>10.6}", s.term, s.pos.as_str(), s.idf, s.tfidf);
    }
    Ok(())
}
