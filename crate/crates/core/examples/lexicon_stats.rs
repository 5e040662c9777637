//! Label proportions of a lexicon, and how far translation expanded it.

use std::path::PathBuf;

use cantolex::lexicon::{lexicon_stats, merge_expressions, parse_lexicon, Provenance, TranslationMap};

fn main() -> cantolex::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/lexicons");
    let base = parse_lexicon(&dir.join("emolex-en.tsv"))?;
    println!("{}", lexicon_stats(&base, None, None)?.to_table());

    // A hand-made translation map: machine output plus a few annotator alternatives.
    let mut tmap = TranslationMap::new();
    for (en, yue, kind) in [
        ("happy", "快樂", Provenance::NrcTranslated),
        ("happy", "開心", Provenance::Human),
        ("happy", "爽", Provenance::Llm),
        ("angry", "憤怒", Provenance::NrcTranslated),
        ("angry", "嬲", Provenance::Human),
        ("afraid", "害怕", Provenance::NrcTranslated),
    ] {
        tmap.add(en, yue, kind)?;
    }
    let merged = merge_expressions(&base, &tmap)?;
    println!("{}", lexicon_stats(&merged, Some(&base), Some(&tmap))?.to_table());
    Ok(())
}
