//! Score lexicons against a baseline on a parallel dataset with Cohen's kappa.
//!
//! Every lexicon runs on its own language version of each document; agreement
//! is measured against what the baseline lexicon finds in its version.

use std::path::PathBuf;

use cantolex::evaluate::{
    agreement, agreement_per_dimension, evaluate_matrix, load_dataset, run_lexicon, Language, LexiconCatalog,
};

fn main() -> cantolex::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let dataset = load_dataset(&fixtures.join("datasets/parallel.jsonl"))?;
    let lex_dir = fixtures.join("lexicons");
    let catalog = LexiconCatalog::load_dir(&lex_dir)?;
    let (rows, baseline) = catalog.resolve(&lex_dir, "emolex-en")?;

    let report = evaluate_matrix(std::slice::from_ref(&dataset), &rows, &baseline)?;
    let report = match &catalog.reference {
        Some(reference) => report.with_reference(reference)?,
        None => report,
    };
    println!("{}", report.to_table());

    // One cell in detail.
    let base_run = run_lexicon(&dataset, &baseline.lexicon, Language::En, baseline.mode)?;
    let zh = rows.iter().find(|r| r.language == Language::Zh).expect("a zh row");
    let zh_run = run_lexicon(&dataset, &zh.lexicon, Language::Zh, zh.mode)?;
    let k = agreement(&zh_run, &base_run)?;
    println!("{}: kappa {:.3} over {} indicators", zh.label, k.kappa, k.n_items);
    for (dim, kappa) in agreement_per_dimension(&zh_run, &base_run)?.per_dimension {
        match kappa {
            Some(k) => println!("  {:<13} {k:.3}", dim.name()),
            None => println!("  {:<13} undefined", dim.name()),
        }
    }
    Ok(())
}
