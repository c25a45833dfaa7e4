//! Example-based (sample) and macro-averaged F-scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tutor::WordSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// Precision, recall and F of one predicted word set against the truth.
///
/// Empty prediction gives precision 0; empty truth gives recall 0; both empty
/// is a perfect match.
pub fn sample_fscore(truth: &WordSet, pred: &WordSet) -> SampleScore {
    if truth.is_empty() && pred.is_empty() {
        return SampleScore {
            precision: 1.0,
            recall: 1.0,
            f: 1.0,
        };
    }
    let hit = truth.intersection_len(pred) as f64;
    let ratio = |den: usize| if den == 0 { 0.0 } else { hit / den as f64 };
    let precision = ratio(pred.len());
    let recall = ratio(truth.len());
    let f = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    SampleScore { precision, recall, f }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Mean per-sample F, 0-100.
    pub sample_f: f64,
    pub sample_precision: f64,
    pub sample_recall: f64,
    /// Mean of `per_word_f` over words present in the test truth, 0-100.
    pub macro_f: f64,
    /// Binary F of each word over the test rows, 0-100.
    pub per_word_f: Vec<f64>,
    /// Occurrences of each word in the test truth.
    pub test_support: Vec<usize>,
    /// Occurrences of each word in the training labels.
    pub word_frequencies: Vec<usize>,
}

/// Scores predictions for a test set.
///
/// `train_label_counts` fixes the word universe size `m`; ids at or beyond
/// `m` are rejected.
pub fn evaluate(truths: &[WordSet], preds: &[WordSet], train_label_counts: &[usize]) -> Result<EvalReport> {
    if truths.len() != preds.len() {
        return Err(Error::shape(format!(
            "{} truth rows but {} prediction rows",
            truths.len(),
            preds.len()
        )));
    }
    let m = train_label_counts.len();
    let out_of_range = truths.iter().chain(preds).filter_map(WordSet::max_id).find(|&id| id >= m);
    if let Some(id) = out_of_range {
        return Err(Error::shape(format!("word id {id} outside a universe of {m} words")));
    }

    let rows = truths.len();
    let (mut sp, mut sr, mut sf) = (0.0, 0.0, 0.0);
    let mut tp = vec![0usize; m];
    let mut fp = vec![0usize; m];
    let mut support = vec![0usize; m];
    for (t, p) in truths.iter().zip(preds) {
        let s = sample_fscore(t, p);
        sp += s.precision;
        sr += s.recall;
        sf += s.f;
        for &j in t.ids() {
            support[j] += 1;
        }
        for &j in p.ids() {
            if t.contains(j) {
                tp[j] += 1;
            } else {
                fp[j] += 1;
            }
        }
    }
    let mean = |s: f64| if rows == 0 { 0.0 } else { 100.0 * s / rows as f64 };

    let per_word_f: Vec<f64> = (0..m)
        .map(|j| {
            let fn_ = support[j] - tp[j];
            let den = 2 * tp[j] + fp[j] + fn_;
            if den == 0 {
                0.0
            } else {
                100.0 * 2.0 * tp[j] as f64 / den as f64
            }
        })
        .collect();
    let present: Vec<f64> = (0..m).filter(|&j| support[j] > 0).map(|j| per_word_f[j]).collect();
    let macro_f = if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };

    Ok(EvalReport {
        sample_f: mean(sf),
        sample_precision: mean(sp),
        sample_recall: mean(sr),
        macro_f,
        per_word_f,
        test_support: support,
        word_frequencies: train_label_counts.to_vec(),
    })
}

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (ranks(a), ranks(b));
    pearson(&ra, &rb)
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    if a.is_empty() {
        return 0.0;
    }
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(ids: &[usize]) -> WordSet {
        WordSet::new(ids.to_vec())
    }

    #[test]
    fn sample_examples() {
        let t = ws(&[1, 2, 3, 4, 5]);
        assert_eq!(sample_fscore(&t, &t).f, 1.0);
        let s = sample_fscore(&t, &ws(&[1, 2, 3, 8, 9]));
        assert!((s.precision - 0.6).abs() < 1e-12 && (s.recall - 0.6).abs() < 1e-12 && (s.f - 0.6).abs() < 1e-12);
        assert_eq!(sample_fscore(&t, &WordSet::empty()).f, 0.0);
        assert_eq!(sample_fscore(&WordSet::empty(), &t).f, 0.0);
        assert_eq!(sample_fscore(&WordSet::empty(), &WordSet::empty()).f, 1.0);
    }

    #[test]
    fn manual_fixture() {
        // three samples over four words, computed by hand:
        //   row 0: T={0,1}   P={0}     -> P=1,   R=1/2, F=2/3
        //   row 1: T={1,2}   P={1,2,3} -> P=2/3, R=1,   F=4/5
        //   row 2: T={3}     P={}      -> P=0,   R=0,   F=0
        // per word (tp, fp, fn): w0 (1,0,0) F=1; w1 (1,0,1) F=2/3;
        //   w2 (1,0,0) F=1; w3 (0,1,1) F=0; macro over 4 present words = 2/3
        let truths = [ws(&[0, 1]), ws(&[1, 2]), ws(&[3])];
        let preds = [ws(&[0]), ws(&[1, 2, 3]), WordSet::empty()];
        let r = evaluate(&truths, &preds, &[3, 2, 1, 0]).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
        assert!(close(r.sample_f, 100.0 * (2.0 / 3.0 + 0.8) / 3.0));
        assert!(close(r.sample_precision, 100.0 * (1.0 + 2.0 / 3.0) / 3.0));
        assert!(close(r.sample_recall, 100.0 * 1.5 / 3.0));
        assert!(close(r.per_word_f[1], 200.0 / 3.0));
        assert!(close(r.per_word_f[3], 0.0));
        assert!(close(r.macro_f, 200.0 / 3.0));
        assert_eq!(r.test_support, vec![1, 2, 1, 1]);
    }

    #[test]
    fn perfect_and_empty_predictions() {
        let truths: Vec<WordSet> = (0..6).map(|i| ws(&[i, i + 1, i + 2, i + 3, i + 4])).collect();
        let r = evaluate(&truths, &truths, &[1; 12]).unwrap();
        assert_eq!((r.sample_f, r.macro_f), (100.0, 100.0));
        let empty = vec![WordSet::empty(); 6];
        assert_eq!(evaluate(&truths, &empty, &[1; 12]).unwrap().sample_f, 0.0);
        assert!(evaluate(&truths, &empty[..5], &[1; 12]).is_err());
        assert!(evaluate(&truths, &truths, &[1; 5]).is_err());
    }

    #[test]
    fn macro_skips_words_absent_from_test() {
        let r = evaluate(&[ws(&[0])], &[ws(&[0, 1])], &[0, 0, 0]).unwrap();
        assert_eq!(r.macro_f, 100.0);
        assert_eq!(r.per_word_f[1], 0.0);
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[4.0, 4.0, 4.0], &[1.0, 2.0, 3.0]), 0.0);
    }

    fn arb_set() -> impl proptest::strategy::Strategy<Value = WordSet> {
        proptest::collection::btree_set(0usize..12, 0..8).prop_map(|s| WordSet::new(s.into_iter().collect()))
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn f_is_symmetric_and_matches_closed_form(t in arb_set(), p in arb_set()) {
            let a = sample_fscore(&t, &p);
            let b = sample_fscore(&p, &t);
            prop_assert!((a.f - b.f).abs() < 1e-12);
            prop_assert!((a.precision - b.recall).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a.f));
            if !(t.is_empty() && p.is_empty()) {
                let closed = 2.0 * t.intersection_len(&p) as f64 / (t.len() + p.len()) as f64;
                prop_assert!((a.f - closed).abs() < 1e-12);
            }
        }

        #[test]
        fn adding_words_is_monotone(t in arb_set(), p in arb_set(), extra in 0usize..12) {
            let base = sample_fscore(&t, &p);
            let mut ids = p.ids().to_vec();
            ids.push(extra);
            let grown = sample_fscore(&t, &WordSet::new(ids));
            if p.contains(extra) {
                prop_assert_eq!(base, grown);
            } else if t.contains(extra) {
                prop_assert!(grown.f >= base.f - 1e-12);
            } else {
                prop_assert!(grown.precision <= base.precision + 1e-12);
            }
        }
    }
}
