//! Annotate mined words with the LLM pipeline against recorded replies.
//!
//! The replay fixture holds one reply per prompt digest, so this runs offline
//! and gives the same result every time. Swap in `LiveTransport` for real calls.

use std::path::PathBuf;

use cantolex::annotation::{Response, TaskKind};
use cantolex::corpus::{load_corpus, mine_terms, MineConfig, SegmenterDictionary};
use cantolex::llm::{annotate_batch, build_prompt, prompt_digest, AnnotateConfig, ReplayTransport};

fn main() -> cantolex::Result<()> {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let corpus = load_corpus(&fixtures.join("corpus/threads.jsonl"))?;
    let dict = SegmenterDictionary::load(&fixtures.join("corpus/dict.tsv"))?;
    let config = MineConfig { top_k: 30, ..MineConfig::default() };
    let words: Vec<String> = mine_terms(&corpus, &dict, &config)?.into_iter().map(|s| s.term).collect();

    let cfg = AnnotateConfig { batch_cap: 10, ..AnnotateConfig::default() };
    let prompt = build_prompt(TaskKind::EmotionAnnotation, &words[..10], cfg.batch_cap)?;
    println!("first prompt ({}):\n{}\n", prompt_digest(&prompt), prompt);

    let transport = ReplayTransport::load(&fixtures.join("llm/emotion_replay.json"))?;
    let run = annotate_batch(&transport, TaskKind::EmotionAnnotation, &words, &cfg)?;
    for batch in &run.log {
        println!("pass {} batch {}: {} words, {} attempt(s) {:?}", batch.pass, batch.batch, batch.words.len(), batch.attempts, batch.notes);
    }
    for rec in &run.records {
        if let Response::EmotionAnnotation { labels, .. } = &rec.response {
            let names: Vec<&str> = labels.iter().map(|d| d.name()).collect();
            println!("{:<30} {}", rec.task_id, names.join(","));
        }
    }
    for r in &run.rejected {
        println!("rejected {}: {}", r.word, r.reason);
    }
    println!("unannotated: {:?}", run.unannotated);
    Ok(())
}
