//! Inter-annotator agreement: Krippendorff's alpha over a reliability matrix
//! built from annotation records, and Cohen's kappa on a contingency table.

use std::path::PathBuf;

use cantolex::annotation::AnnotationRecord;
use cantolex::io::read_ndjson;
use cantolex::reliability::{build_reliability_matrix, cohens_kappa, interpret, krippendorff_alpha};

fn main() -> cantolex::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/annotation/human_emotion.jsonl");
    let records: Vec<AnnotationRecord> = read_ndjson(&path)?;

    // Within portion 0 the three groups saw the same words.
    for trio in [["A01", "B01", "C01"], ["A02", "B02", "C02"]] {
        let raters: Vec<String> = trio.map(String::from).to_vec();
        let m = build_reliability_matrix(&records, &raters);
        let r = krippendorff_alpha(&m)?;
        println!(
            "{}: alpha {:.4} ({}) over {} units, Do={:.4} De={:.4}",
            trio.join("/"),
            r.alpha,
            interpret(r.alpha),
            r.n_units,
            r.observed_disagreement,
            r.expected_disagreement
        );
    }

    // 40 yes/yes, 20 yes/no, 10 no/yes, 30 no/no.
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (x, y, n) in [(true, true, 40), (true, false, 20), (false, true, 10), (false, false, 30)] {
        a.extend(std::iter::repeat_n(x, n));
        b.extend(std::iter::repeat_n(y, n));
    }
    let k = cohens_kappa(&a, &b)?;
    println!(
        "kappa {:.3} ({}), po={:.2} pe={:.2}",
        k.kappa,
        interpret(k.kappa),
        k.observed_agreement,
        k.expected_agreement
    );
    Ok(())
}
