//! Split a word list into portions, assign them to annotator groups, and
//! aggregate the groups' answers by majority vote.

use std::collections::BTreeMap;
use std::path::PathBuf;

use cantolex::annotation::{
    aggregate_emotion_records, assignment_manifest, build_assignments, default_group_members,
    make_portions, sample_half, AnnotationRecord, Task, LLM_RATER_ID,
};
use cantolex::io::read_ndjson;

fn main() -> cantolex::Result<()> {
    let words: Vec<String> = (1..=11).map(|i| format!("word{i:02}")).collect();
    let portions = make_portions(&words, 3, 7)?;
    for (i, p) in portions.iter().enumerate() {
        println!("portion {i}: {}", p.join(" "));
    }
    println!("half sample: {}", sample_half(&words, 7)?.join(" "));

    let groups: BTreeMap<String, Vec<String>> =
        ["A", "B", "C"].map(|g| (g.to_string(), default_group_members(g, 3))).into();
    let tasks: Vec<Vec<Task>> = portions
        .iter()
        .map(|p| p.iter().map(|w| Task::emotion(w)).collect())
        .collect::<cantolex::Result<_>>()?;
    for entry in assignment_manifest(&build_assignments(3, &groups)?, &tasks) {
        println!("{} <- portion {} ({} tasks)", entry.annotator_id, entry.portion_index, entry.task_ids.len());
    }

    // Answers from three human groups on the fixture word list.
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/annotation/human_emotion.jsonl");
    let records: Vec<AnnotationRecord> = read_ndjson(&path)?;
    let mut words: Vec<&str> = records.iter().filter_map(|r| r.task_id.strip_prefix("emotion:")).collect();
    words.sort_unstable();
    words.dedup();
    let tasks: Vec<Task> = words.iter().map(|w| Task::emotion(w)).collect::<cantolex::Result<_>>()?;
    let agg = aggregate_emotion_records(&tasks, &records, 3, LLM_RATER_ID)?;
    println!("\n{} words aggregated, dropped as wrong words: {:?}", agg.outcomes.len(), agg.dropped);
    for o in agg.outcomes.iter().filter(|o| !o.dropped) {
        let labels: Vec<&str> = o.labels.iter().map(|d| d.name()).collect();
        println!("{:<6} {}", o.word, if labels.is_empty() { "(neutral)".to_string() } else { labels.join(",") });
    }
    Ok(())
}
