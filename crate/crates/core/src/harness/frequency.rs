//! Per-word training frequency against per-word F.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{spearman, EvalReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordFrequencyRow {
    pub word: usize,
    /// Mean training count over the folds.
    pub train_count: f64,
    /// Mean per-word F over folds where the word occurs in the test truth.
    pub f: Option<f64>,
    pub test_support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub rows: Vec<WordFrequencyRow>,
    /// Spearman correlation of `train_count` and `f` over words with an F.
    pub rank_correlation: f64,
}

/// Joins the fold reports of one learner into a per-word table.
pub fn frequency_report(reports: &[EvalReport]) -> Result<FrequencyReport> {
    let m = reports
        .first()
        .map(|r| r.per_word_f.len())
        .ok_or_else(|| Error::param("frequency report needs at least one evaluation"))?;
    if reports.iter().any(|r| r.per_word_f.len() != m || r.word_frequencies.len() != m) {
        return Err(Error::shape("evaluations cover different word counts"));
    }
    let rows: Vec<WordFrequencyRow> = (0..m)
        .map(|j| {
            let train_count =
                reports.iter().map(|r| r.word_frequencies[j] as f64).sum::<f64>() / reports.len() as f64;
            let present: Vec<f64> = reports
                .iter()
                .filter(|r| r.test_support[j] > 0)
                .map(|r| r.per_word_f[j])
                .collect();
            WordFrequencyRow {
                word: j,
                train_count,
                f: (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64),
                test_support: reports.iter().map(|r| r.test_support[j]).sum(),
            }
        })
        .collect();
    let (counts, fs): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(|r| r.f.map(|f| (r.train_count, f))).unzip();
    let rank_correlation = if counts.len() < 2 { 0.0 } else { spearman(&counts, &fs) };
    Ok(FrequencyReport { rows, rank_correlation })
}

/// CSV text with one line per (learner, word):
/// `learner,word,train_count,f,test_support`.
pub fn frequency_csv(reports: &[(String, FrequencyReport)]) -> String {
    let mut text = String::from("learner,word,train_count,f,test_support\n");
    for (learner, report) in reports {
        for r in &report.rows {
            let f = r.f.map(|f| format!("{f:.4}")).unwrap_or_default();
            text.push_str(&format!(
                "\"{}\",{},{},{f},{}\n",
                learner.replace('"', "\"\""),
                r.word,
                r.train_count,
                r.test_support
            ));
        }
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::evaluate;
    use crate::tutor::WordSet;

    #[test]
    fn unseen_words_score_zero_and_correlation_follows_frequency() {
        let truths = vec![WordSet::new(vec![0, 1]), WordSet::new(vec![0, 2]), WordSet::new(vec![0, 3])];
        let preds = vec![WordSet::new(vec![0, 1]), WordSet::new(vec![0]), WordSet::new(vec![0])];
        let report = evaluate(&truths, &preds, &[9, 5, 0, 1]).unwrap();
        let fr = frequency_report(&[report]).unwrap();
        assert_eq!(fr.rows[2].f, Some(0.0));
        assert_eq!(fr.rows[0].f, Some(100.0));
        assert!(fr.rank_correlation > 0.8, "{}", fr.rank_correlation);
    }

    #[test]
    fn constant_frequencies_give_no_correlation() {
        let truths = vec![WordSet::new(vec![0]), WordSet::new(vec![1]), WordSet::new(vec![2])];
        let preds = vec![WordSet::new(vec![0]), WordSet::empty(), WordSet::new(vec![2])];
        let report = evaluate(&truths, &preds, &[4, 4, 4]).unwrap();
        let fr = frequency_report(&[report]).unwrap();
        assert_eq!(fr.rank_correlation, 0.0);
        assert!(frequency_report(&[]).is_err());
    }
}
