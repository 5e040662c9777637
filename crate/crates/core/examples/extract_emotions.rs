//! Profile texts against a lexicon in both matching modes.

use std::path::PathBuf;

use cantolex::lexicon::parse_lexicon;
use cantolex::{EmotionDimension, Extractor, MatchMode};

fn show(label: &str, text: &str, extractor: &Extractor, mode: MatchMode) {
    let profile = extractor.extract(text, mode);
    let counts: Vec<String> = EmotionDimension::ALL
        .iter()
        .filter(|d| profile.count(**d) > 0)
        .map(|d| format!("{}={}", d.name(), profile.count(*d)))
        .collect();
    let terms: Vec<&str> = profile.matched_terms.iter().map(|m| m.term.as_str()).collect();
    println!("{label}: {text}\n  matched {terms:?}\n  {}", counts.join(" "));
}

fn main() -> cantolex::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/lexicons");
    let en = Extractor::new(&parse_lexicon(&dir.join("emolex-en.tsv"))?);
    let yue = Extractor::new(&parse_lexicon(&dir.join("emolex-yue.tsv"))?);

    show("token", "Happy birthday! What a lovely gift, no hate here.", &en, MatchMode::Token);
    show("substring", "今日收到份禮物，好快樂，但係架巴士遲到真係嬲。", &yue, MatchMode::Substring);
    Ok(())
}
