//! Agreement coefficients: Krippendorff's alpha (nominal, with missing data)
//! and Cohen's kappa.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotation::{AnnotationRecord, Response};
use crate::emotion::EmotionDimension;
use crate::error::{Error, Result};
use crate::io::read_to_string;

/// Units × raters grid of nominal values. `None` is a missing cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReliabilityMatrix {
    units: Vec<String>,
    raters: Vec<String>,
    values: Vec<Vec<Option<String>>>,
}

impl ReliabilityMatrix {
    pub fn new(
        units: Vec<String>,
        raters: Vec<String>,
        values: Vec<Vec<Option<String>>>,
    ) -> Result<Self> {
        if raters.len() < 2 {
            return Err(Error::Invalid("a reliability matrix needs at least 2 raters".into()));
        }
        if values.len() != units.len() {
            return Err(Error::Invalid(format!(
                "{} units but {} value rows",
                units.len(),
                values.len()
            )));
        }
        if let Some((i, row)) = values.iter().enumerate().find(|(_, r)| r.len() != raters.len()) {
            return Err(Error::Invalid(format!(
                "unit `{}` has {} cells, expected {}",
                units[i],
                row.len(),
                raters.len()
            )));
        }
        Ok(ReliabilityMatrix { units, raters, values })
    }

    pub fn units(&self) -> &[String] {
        &self.units
    }

    pub fn raters(&self) -> &[String] {
        &self.raters
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Option<String>]> {
        self.values.iter().map(Vec::as_slice)
    }

    pub fn cell(&self, unit: usize, rater: usize) -> Option<&str> {
        self.values[unit][rater].as_deref()
    }

    /// Header `unit<TAB>rater...`, one row per unit, empty cell for missing.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("unit");
        for r in &self.raters {
            out.push('\t');
            out.push_str(r);
        }
        out.push('\n');
        for (unit, row) in self.units.iter().zip(&self.values) {
            out.push_str(unit);
            for cell in row {
                out.push('\t');
                out.push_str(cell.as_deref().unwrap_or(""));
            }
            out.push('\n');
        }
        out
    }

    pub fn load_tsv(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        Self::parse_tsv(path, &text)
    }

    pub fn parse_tsv(path: &Path, text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing header row"))?;
        let raters: Vec<String> = header.split('\t').skip(1).map(str::to_string).collect();
        let mut units = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            let mut cols = line.split('\t');
            let unit = cols.next().unwrap_or_default().to_string();
            let row: Vec<Option<String>> = cols
                .map(|c| (!c.is_empty()).then(|| c.to_string()))
                .collect();
            if row.len() != raters.len() {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("expected {} cells, found {}", raters.len(), row.len()),
                ));
            }
            units.push(unit);
            values.push(row);
        }
        Self::new(units, raters, values)
    }
}

/// Binarizes emotion annotations: one unit per (word, dimension).
///
/// A cell is `1` if the rater picked the dimension and `0` if they answered
/// without picking it. It is missing when the rater skipped the word or
/// flagged it as a wrong word. Words are ordered by task id. A later record
/// for the same rater and task replaces an earlier one.
pub fn build_reliability_matrix(records: &[AnnotationRecord], raters: &[String]) -> ReliabilityMatrix {
    let rater_index: HashMap<&str, usize> = raters
        .iter()
        .enumerate()
        .map(|(i, r)| (r.as_str(), i))
        .collect();
    let mut answers: BTreeMap<&str, Vec<Option<&Response>>> = BTreeMap::new();
    for rec in records {
        let Some(&ri) = rater_index.get(rec.annotator_id.as_str()) else {
            continue;
        };
        if !matches!(rec.response, Response::EmotionAnnotation { .. }) {
            continue;
        }
        let row = answers
            .entry(rec.task_id.as_str())
            .or_insert_with(|| vec![None; raters.len()]);
        row[ri] = Some(&rec.response);
    }

    let mut units = Vec::with_capacity(answers.len() * 10);
    let mut values = Vec::with_capacity(answers.len() * 10);
    for (task, row) in &answers {
        for dim in EmotionDimension::ALL {
            units.push(format!("{task}#{dim}"));
            values.push(
                row.iter()
                    .map(|answer| match answer {
                        Some(Response::EmotionAnnotation {
                            labels,
                            wrong_word: false,
                            ..
                        }) => Some(if labels.contains(dim) { "1" } else { "0" }.to_string()),
                        _ => None,
                    })
                    .collect(),
            );
        }
    }
    ReliabilityMatrix {
        units,
        raters: raters.to_vec(),
        values,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    pub alpha: f64,
    pub observed_disagreement: f64,
    pub expected_disagreement: f64,
    /// Units with at least two present values.
    pub n_units: usize,
    /// Total pairable values across those units.
    pub n_values: usize,
}

/// Nominal Krippendorff's alpha via the coincidence matrix.
///
/// Each unit with `m ≥ 2` present values adds `1/(m-1)` to the coincidence
/// count of every ordered pair of its values. Units with fewer values are skipped.
pub fn krippendorff_alpha(m: &ReliabilityMatrix) -> Result<AlphaReport> {
    let domain: BTreeSet<&str> = m
        .values
        .iter()
        .flatten()
        .filter_map(|c| c.as_deref())
        .collect();
    let index: BTreeMap<&str, usize> = domain.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let k = index.len();
    let mut coincidence = vec![vec![0.0f64; k]; k];
    let mut n_units = 0;
    let mut counts = vec![0usize; k];
    for row in &m.values {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut m_u = 0usize;
        for v in row.iter().flatten() {
            counts[index[v.as_str()]] += 1;
            m_u += 1;
        }
        if m_u < 2 {
            continue;
        }
        n_units += 1;
        let w = 1.0 / (m_u - 1) as f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for kk in 0..k {
                let pairs = if c == kk {
                    counts[c] * (counts[c] - 1)
                } else {
                    counts[c] * counts[kk]
                };
                if pairs > 0 {
                    coincidence[c][kk] += pairs as f64 * w;
                }
            }
        }
    }
    if n_units == 0 {
        return Err(Error::Invalid(
            "no unit has two or more values; alpha is undefined".into(),
        ));
    }

    let marginals: Vec<f64> = coincidence.iter().map(|row| row.iter().sum()).collect();
    let n: f64 = marginals.iter().sum();
    let mut off_diagonal = 0.0;
    let mut expected_pairs = 0.0;
    for c in 0..k {
        for kk in 0..k {
            if c != kk {
                off_diagonal += coincidence[c][kk];
                expected_pairs += marginals[c] * marginals[kk];
            }
        }
    }
    let observed = off_diagonal / n;
    let expected = expected_pairs / (n * (n - 1.0));
    if expected == 0.0 {
        return Err(Error::Degenerate(
            "every pairable value is identical, expected disagreement is zero".into(),
        ));
    }
    Ok(AlphaReport {
        alpha: 1.0 - observed / expected,
        observed_disagreement: observed,
        expected_disagreement: expected,
        n_units,
        n_values: n.round() as usize,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub kappa: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
    pub n_items: usize,
}

/// Cohen's kappa for two aligned label sequences.
pub fn cohens_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<KappaReport> {
    if a.len() != b.len() {
        return Err(Error::Invalid(format!(
            "sequence lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Invalid("kappa needs at least one item".into()));
    }
    let n = a.len();
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count();
    let mut marginals: BTreeMap<&T, (u128, u128)> = BTreeMap::new();
    for x in a {
        marginals.entry(x).or_default().0 += 1;
    }
    for y in b {
        marginals.entry(y).or_default().1 += 1;
    }
    let chance: u128 = marginals.values().map(|(ca, cb)| ca * cb).sum();
    let p_o = agree as f64 / n as f64;
    let p_e = chance as f64 / (n as u128 * n as u128) as f64;
    if chance == (n as u128) * (n as u128) {
        return Err(Error::Degenerate(
            "both sequences hold the same single value, expected agreement is 1".into(),
        ));
    }
    Ok(KappaReport {
        kappa: (p_o - p_e) / (1.0 - p_e),
        observed_agreement: p_o,
        expected_agreement: p_e,
        n_items: n,
    })
}

/// Landis–Koch style reading of a coefficient.
pub fn interpret(coefficient: f64) -> &'static str {
    match coefficient {
        c if c < 0.0 => "poor",
        c if c < 0.20 => "slight",
        c if c < 0.40 => "fair",
        c if c < 0.60 => "moderate",
        c if c < 0.80 => "substantial",
        _ => "almost perfect",
    }
}

impl AlphaReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "alpha\t{:.6}\t({})", self.alpha, interpret(self.alpha));
        let _ = writeln!(out, "D_o\t{:.6}", self.observed_disagreement);
        let _ = writeln!(out, "D_e\t{:.6}", self.expected_disagreement);
        let _ = writeln!(out, "units\t{}", self.n_units);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emotion::EmotionSet;

    fn matrix(rows: &[&[Option<&str>]]) -> ReliabilityMatrix {
        let raters = (0..rows[0].len()).map(|i| format!("r{i}")).collect();
        let units = (0..rows.len()).map(|i| format!("u{i}")).collect();
        let values = rows
            .iter()
            .map(|r| r.iter().map(|c| c.map(str::to_string)).collect())
            .collect();
        ReliabilityMatrix::new(units, raters, values).unwrap()
    }

    #[test]
    fn perfect_agreement_is_one() {
        let m = matrix(&[
            &[Some("a"), Some("a")],
            &[Some("b"), Some("b")],
            &[Some("a"), None],
        ]);
        let r = krippendorff_alpha(&m).unwrap();
        assert_eq!(r.alpha, 1.0);
        assert_eq!(r.n_units, 2);
    }

    #[test]
    fn constant_matrix_is_degenerate() {
        let m = matrix(&[&[Some("a"), Some("a")], &[Some("a"), Some("a")]]);
        assert!(matches!(krippendorff_alpha(&m), Err(Error::Degenerate(_))));
    }

    #[test]
    fn no_pairable_unit_errors() {
        let m = matrix(&[&[Some("a"), None], &[None, Some("b")]]);
        assert!(matches!(krippendorff_alpha(&m), Err(Error::Invalid(_))));
    }

    #[test]
    fn textbook_nominal_example() {
        // Krippendorff's 4-coder, 12-unit nominal reliability data.
        let data: [[Option<&str>; 12]; 4] = [
            [Some("1"), Some("2"), Some("3"), Some("3"), Some("2"), Some("1"), Some("4"), Some("1"), Some("2"), None, None, None],
            [Some("1"), Some("2"), Some("3"), Some("3"), Some("2"), Some("2"), Some("4"), Some("1"), Some("2"), Some("5"), None, Some("3")],
            [None, Some("3"), Some("3"), Some("3"), Some("2"), Some("3"), Some("4"), Some("2"), Some("2"), Some("5"), Some("1"), None],
            [Some("1"), Some("2"), Some("3"), Some("3"), Some("2"), Some("4"), Some("4"), Some("1"), Some("2"), Some("5"), Some("1"), None],
        ];
        let rows: Vec<Vec<Option<&str>>> = (0..12).map(|u| (0..4).map(|r| data[r][u]).collect()).collect();
        let refs: Vec<&[Option<&str>]> = rows.iter().map(Vec::as_slice).collect();
        let r = krippendorff_alpha(&matrix(&refs)).unwrap();
        assert!((r.alpha - 0.743).abs() < 5e-4, "{}", r.alpha);
    }

    #[test]
    fn kappa_on_fixed_confusion_table() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (x, y, n) in [(1, 1, 40), (1, 0, 20), (0, 1, 10), (0, 0, 30)] {
            a.extend(std::iter::repeat_n(x, n));
            b.extend(std::iter::repeat_n(y, n));
        }
        let r = cohens_kappa(&a, &b).unwrap();
        assert!((r.observed_agreement - 0.7).abs() < 1e-12);
        assert!((r.expected_agreement - 0.5).abs() < 1e-12);
        assert!((r.kappa - 0.4).abs() < 1e-12);
    }

    #[test]
    fn kappa_errors() {
        assert!(cohens_kappa(&[1, 2], &[1]).is_err());
        assert!(cohens_kappa::<u8>(&[], &[]).is_err());
        assert!(matches!(cohens_kappa(&[1, 1], &[1, 1]), Err(Error::Degenerate(_))));
        assert_eq!(cohens_kappa(&["x", "y"], &["x", "y"]).unwrap().kappa, 1.0);
    }

    #[test]
    fn binarization_shape_and_missing_cells() {
        use crate::emotion::EmotionDimension::*;
        let rec = |who: &str, task: &str, labels: EmotionSet, wrong: bool| AnnotationRecord {
            annotator_id: who.into(),
            task_id: task.into(),
            response: Response::EmotionAnnotation {
                labels,
                wrong_word: wrong,
                better_expression: None,
            },
        };
        let records = vec![
            rec("a", "w1", EmotionSet::from([Joy]), false),
            rec("b", "w1", EmotionSet::empty(), true),
            rec("a", "w2", EmotionSet::from([Fear]), false),
            rec("b", "w2", EmotionSet::from([Fear]), false),
        ];
        let m = build_reliability_matrix(&records, &["a".into(), "b".into()]);
        assert_eq!(m.units().len(), 20);
        let joy = m.units().iter().position(|u| u == "w1#joy").unwrap();
        assert_eq!(m.cell(joy, 0), Some("1"));
        assert_eq!(m.cell(joy, 1), None);
        let anger = m.units().iter().position(|u| u == "w1#anger").unwrap();
        assert_eq!(m.cell(anger, 0), Some("0"));
        assert!((0..10).all(|d| m.cell(d, 1).is_none()));
    }

    #[test]
    fn tsv_round_trip() {
        let m = matrix(&[&[Some("a"), None, Some("b")], &[None, Some("c"), Some("c")]]);
        let back = ReliabilityMatrix::parse_tsv(Path::new("m.tsv"), &m.to_tsv()).unwrap();
        assert_eq!(back, m);
    }
}
