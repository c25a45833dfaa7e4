//! The tutor: a lexicon of prototype words and the description-game production
//! rule.
//!
//! Each word holds a prototype in `[0,1]^n` and a binary sensitivity mask. For
//! an object the tutor measures a masked Euclidean distance to every prototype
//! and utters the `k` closest words. Ties go to the lower word id.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, RNG_ALGORITHM};

/// A sorted, duplicate-free set of word ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct WordSet(Vec<usize>);

impl WordSet {
    pub fn new(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        WordSet(ids)
    }

    pub fn empty() -> Self {
        WordSet(Vec::new())
    }

    pub fn ids(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.0.binary_search(&id).is_ok()
    }

    pub fn intersection_len(&self, other: &WordSet) -> usize {
        let (mut i, mut j, mut count) = (0, 0, 0);
        let (a, b) = (&self.0, &other.0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    pub fn max_id(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

impl FromIterator<usize> for WordSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        WordSet::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordEntry {
    pub word_id: usize,
    pub prototype: Vec<f64>,
    pub weight: Vec<bool>,
    active: Vec<usize>,
}

impl WordEntry {
    pub fn new(word_id: usize, prototype: Vec<f64>, weight: Vec<bool>) -> Result<Self> {
        if prototype.len() != weight.len() {
            return Err(Error::shape(format!(
                "word {word_id}: prototype has {} components, weight has {}",
                prototype.len(),
                weight.len()
            )));
        }
        if let Some(v) = prototype.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::param(format!(
                "word {word_id}: prototype component {v} outside [0,1]"
            )));
        }
        if !weight.iter().any(|&w| w) {
            return Err(Error::param(format!("word {word_id}: all-zero weight vector")));
        }
        let active = weight
            .iter()
            .enumerate()
            .filter_map(|(i, &w)| w.then_some(i))
            .collect();
        Ok(WordEntry {
            word_id,
            prototype,
            weight,
            active,
        })
    }

    pub fn n(&self) -> usize {
        self.prototype.len()
    }

    /// Dimensions this word attends to.
    pub fn active_dims(&self) -> &[usize] {
        &self.active
    }

    /// `sqrt(sum_i w_i (o_i - p_i)^2)`; masked terms are skipped.
    pub fn weighted_distance(&self, o: &[f64]) -> Result<f64> {
        if o.len() != self.n() {
            return Err(Error::shape(format!(
                "object has {} dimensions, lexicon has {}",
                o.len(),
                self.n()
            )));
        }
        Ok(self.squared_distance_unchecked(o).sqrt())
    }

    fn squared_distance_unchecked(&self, o: &[f64]) -> f64 {
        self.active
            .iter()
            .map(|&i| {
                let d = o[i] - self.prototype[i];
                d * d
            })
            .sum()
    }
}

pub fn weighted_distance(entry: &WordEntry, o: &[f64]) -> Result<f64> {
    entry.weighted_distance(o)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub words: Vec<WordEntry>,
    pub n: usize,
    pub sensitivity_p: f64,
    pub rng_seed: u64,
}

impl Lexicon {
    pub fn m(&self) -> usize {
        self.words.len()
    }

    /// Draws a fresh lexicon.
    ///
    /// Per word the stream yields `n` prototype components followed by `n`
    /// Bernoulli(`sensitivity_p`) weight draws. An all-zero mask costs one extra
    /// draw that picks the dimension forced to 1.
    pub fn generate(m: usize, n: usize, sensitivity_p: f64, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("word count m must be at least 1"));
        }
        if n == 0 {
            return Err(Error::param("dimension count n must be at least 1"));
        }
        if !(sensitivity_p > 0.0 && sensitivity_p <= 1.0) {
            return Err(Error::param(format!(
                "sensitivity_p must lie in (0,1], got {sensitivity_p}"
            )));
        }
        let mut rng = rng_from_seed(seed);
        let mut words = Vec::with_capacity(m);
        for word_id in 0..m {
            let prototype: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mut weight: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < sensitivity_p).collect();
            if !weight.iter().any(|&w| w) {
                weight[rng.random_range(0..n)] = true;
            }
            words.push(WordEntry::new(word_id, prototype, weight)?);
        }
        Ok(Lexicon {
            words,
            n,
            sensitivity_p,
            rng_seed: seed,
        })
    }

    /// Builds a lexicon from explicit entries; ids are reassigned by position.
    pub fn from_entries(entries: Vec<(Vec<f64>, Vec<bool>)>, sensitivity_p: f64, seed: u64) -> Result<Self> {
        let n = entries.first().map(|e| e.0.len()).ok_or_else(|| Error::param("empty lexicon"))?;
        let words = entries
            .into_iter()
            .enumerate()
            .map(|(id, (p, w))| {
                if p.len() != n {
                    return Err(Error::shape(format!("word {id} has {} dimensions, expected {n}", p.len())));
                }
                WordEntry::new(id, p, w)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Lexicon {
            words,
            n,
            sensitivity_p,
            rng_seed: seed,
        })
    }

    /// Squared weighted distance of `o` to every word.
    pub fn squared_distances(&self, o: &[f64]) -> Result<Vec<f64>> {
        if o.len() != self.n {
            return Err(Error::shape(format!(
                "object has {} dimensions, lexicon has {}",
                o.len(),
                self.n
            )));
        }
        Ok(self.words.iter().map(|w| w.squared_distance_unchecked(o)).collect())
    }

    /// The `k` words closest to `o`.
    pub fn describe(&self, o: &[f64], k: usize) -> Result<WordSet> {
        if k == 0 || k > self.m() {
            return Err(Error::param(format!(
                "k must satisfy 1 <= k <= m = {}, got {k}",
                self.m()
            )));
        }
        // sqrt is monotone, so ranking squared distances is equivalent
        let d = self.squared_distances(o)?;
        let mut order: Vec<usize> = (0..d.len()).collect();
        let by_distance = |&a: &usize, &b: &usize| d[a].total_cmp(&d[b]).then(a.cmp(&b));
        if k < order.len() {
            order.select_nth_unstable_by(k - 1, by_distance);
            order.truncate(k);
        }
        Ok(WordSet::new(order))
    }

    pub fn mean_weight_density(&self) -> f64 {
        let ones: usize = self.words.iter().map(|w| w.active.len()).sum();
        ones as f64 / (self.m() * self.n) as f64
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# wordlab lexicon v1\n");
        let _ = writeln!(s, "m={}", self.m());
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "sensitivity_p={}", self.sensitivity_p);
        let _ = writeln!(s, "seed={}", self.rng_seed);
        let _ = writeln!(s, "rng={RNG_ALGORITHM}");
        for w in &self.words {
            let _ = write!(s, "{}", w.word_id);
            for p in &w.prototype {
                let _ = write!(s, " {p}");
            }
            s.push_str(" | ");
            s.extend(w.weight.iter().map(|&b| if b { '1' } else { '0' }));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str, source: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse {
            path: source.to_string(),
            line,
            column: 1,
            message,
        };
        let mut header = std::collections::BTreeMap::new();
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((k, v)) = line.split_once('=') {
                header.insert(k.trim().to_string(), v.trim().to_string());
                continue;
            }
            let (lhs, bits) = line
                .split_once('|')
                .ok_or_else(|| perr(lineno, "expected `id p0 .. pn | bits`".into()))?;
            let mut fields = lhs.split_whitespace();
            let id: usize = fields
                .next()
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| perr(lineno, "missing word id".into()))?;
            if id != entries.len() {
                return Err(perr(lineno, format!("word ids must be consecutive, found {id}")));
            }
            let proto = fields
                .map(|f| f.parse::<f64>().map_err(|e| perr(lineno, format!("bad prototype value `{f}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let weight = bits
                .trim()
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(perr(lineno, format!("bad weight bit `{other}`"))),
                })
                .collect::<Result<Vec<_>>>()?;
            entries.push((proto, weight));
        }
        let get = |key: &str| header.get(key).ok_or_else(|| perr(1, format!("missing header `{key}`")));
        let m: usize = get("m")?.parse().map_err(|_| perr(1, "bad m".into()))?;
        let n: usize = get("n")?.parse().map_err(|_| perr(1, "bad n".into()))?;
        let p: f64 = get("sensitivity_p")?.parse().map_err(|_| perr(1, "bad sensitivity_p".into()))?;
        let seed: u64 = get("seed")?.parse().map_err(|_| perr(1, "bad seed".into()))?;
        if entries.len() != m {
            return Err(perr(1, format!("header says m={m}, found {} words", entries.len())));
        }
        let lex = Lexicon::from_entries(entries, p, seed)?;
        if lex.n != n {
            return Err(perr(1, format!("header says n={n}, words have {}", lex.n)));
        }
        Ok(lex)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string())
    }
}

pub fn generate_lexicon(m: usize, n: usize, sensitivity_p: f64, seed: u64) -> Result<Lexicon> {
    Lexicon::generate(m, n, sensitivity_p, seed)
}

pub fn describe(lexicon: &Lexicon, o: &[f64], k: usize) -> Result<WordSet> {
    lexicon.describe(o, k)
}

/// `C(m, k)` computed exactly, and the probability of guessing a uniformly
/// drawn `k`-subset.
pub fn chance_level(m: usize, k: usize) -> Result<(u128, f64)> {
    if k == 0 || k > m {
        return Err(Error::param(format!("chance level needs 1 <= k <= m, got m={m}, k={k}")));
    }
    let k = k.min(m - k) as u128;
    let m = m as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        // C(m, i+1) = C(m, i) * (m - i) / (i + 1) stays integral at every step
        c = c
            .checked_mul(m - i)
            .ok_or_else(|| Error::Overflow(format!("C({m}, {k})")))?
            / (i + 1);
    }
    Ok((c, 1.0 / c as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn brute_force_describe(lex: &Lexicon, o: &[f64], k: usize) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> = lex
            .words
            .iter()
            .map(|w| {
                let s: f64 = (0..lex.n)
                    .map(|i| if w.weight[i] { (o[i] - w.prototype[i]).powi(2) } else { 0.0 })
                    .sum();
                (s.sqrt(), w.word_id)
            })
            .collect();
        d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut ids: Vec<usize> = d[..k].iter().map(|x| x.1).collect();
        ids.sort();
        ids
    }

    #[test]
    fn weight_density_tracks_sensitivity() {
        for seed in 0..5 {
            let lex = generate_lexicon(100, 17, 0.5, seed).unwrap();
            assert!((lex.mean_weight_density() - 0.5).abs() <= 0.05, "seed {seed}");
        }
    }

    #[test]
    fn all_zero_masks_are_repaired_to_a_single_one() {
        let lex = generate_lexicon(1, 3, 1e-12, 9).unwrap();
        assert_eq!(lex.words[0].weight.iter().filter(|&&b| b).count(), 1);
    }

    #[test]
    fn certain_sensitivity_gives_full_masks() {
        let lex = generate_lexicon(5, 4, 1.0, 123).unwrap();
        assert!(lex.words.iter().all(|w| w.weight.iter().all(|&b| b)));
    }

    #[test]
    fn invalid_generation_parameters() {
        assert!(matches!(generate_lexicon(0, 3, 0.5, 1), Err(Error::Param(_))));
        assert!(matches!(generate_lexicon(3, 0, 0.5, 1), Err(Error::Param(_))));
        assert!(matches!(generate_lexicon(3, 3, 0.0, 1), Err(Error::Param(_))));
        assert!(matches!(generate_lexicon(3, 3, 1.5, 1), Err(Error::Param(_))));
    }

    #[test]
    fn generation_is_reproducible() {
        let a = generate_lexicon(20, 8, 0.3, 77).unwrap();
        let b = generate_lexicon(20, 8, 0.3, 77).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_lexicon(20, 8, 0.3, 78).unwrap());
    }

    #[test]
    fn distance_examples() {
        let e = WordEntry::new(0, vec![0.2, 0.9], vec![true, false]).unwrap();
        assert!((e.weighted_distance(&[0.6, 0.1]).unwrap() - 0.4).abs() < 1e-12);
        let e = WordEntry::new(0, vec![0.0; 3], vec![true; 3]).unwrap();
        assert_eq!(e.weighted_distance(&[1.0; 3]).unwrap(), 3f64.sqrt());
        let p = vec![0.3, 0.4, 0.5];
        let e = WordEntry::new(0, p.clone(), vec![true; 3]).unwrap();
        assert_eq!(e.weighted_distance(&p).unwrap(), 0.0);
        assert!(matches!(e.weighted_distance(&[0.1]), Err(Error::Shape(_))));
    }

    #[test]
    fn describe_edge_cases() {
        let lex = generate_lexicon(6, 4, 0.5, 5).unwrap();
        let o = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(lex.describe(&o, 6).unwrap().ids(), &[0, 1, 2, 3, 4, 5]);
        assert!(matches!(lex.describe(&o, 7), Err(Error::Param(_))));
        assert!(matches!(lex.describe(&o, 0), Err(Error::Param(_))));

        let twin = (vec![0.5, 0.5], vec![true, true]);
        let far = (vec![1.0, 1.0], vec![true, true]);
        let lex = Lexicon::from_entries(vec![far, twin.clone(), twin], 0.5, 0).unwrap();
        assert_eq!(lex.describe(&[0.5, 0.4], 1).unwrap().ids(), &[1]);
        assert_eq!(brute_force_describe(&lex, &[0.5, 0.4], 1), vec![1]);
    }

    #[test]
    fn describe_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for case in 0..200 {
            let lex = generate_lexicon(30, 6, 0.5, case).unwrap();
            let o: Vec<f64> = (0..6).map(|_| rng.random()).collect();
            assert_eq!(lex.describe(&o, 5).unwrap().ids(), brute_force_describe(&lex, &o, 5).as_slice());
        }
    }

    #[test]
    fn chance_level_values() {
        assert_eq!(chance_level(100, 5).unwrap().0, 75_287_520);
        assert_eq!(chance_level(10, 3).unwrap().0, 120);
        assert_eq!(chance_level(7, 7).unwrap(), (1, 1.0));
        assert_eq!(chance_level(40, 13).unwrap().0, chance_level(40, 27).unwrap().0);
        assert!(matches!(chance_level(3, 4), Err(Error::Param(_))));
        assert!(matches!(chance_level(400, 200), Err(Error::Overflow(_))));
    }

    #[test]
    fn text_round_trip() {
        let lex = generate_lexicon(7, 5, 0.4, 99).unwrap();
        let back = Lexicon::from_text(&lex.to_text(), "mem").unwrap();
        assert_eq!(lex, back);
        assert!(Lexicon::from_text("m=1\nn=1\nsensitivity_p=0.5\nseed=1\n0 0.5 | 2\n", "bad").is_err());
    }

    proptest::proptest! {
        #[test]
        fn masked_coordinates_do_not_matter(seed in 0u64..1000, shift in 0.0f64..1.0) {
            let lex = generate_lexicon(3, 8, 0.5, seed).unwrap();
            let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let o: Vec<f64> = (0..8).map(|_| r.random()).collect();
            for w in &lex.words {
                let mut o2 = o.clone();
                for (v, &on) in o2.iter_mut().zip(&w.weight) {
                    if !on {
                        *v = (*v + shift) % 1.0;
                    }
                }
                proptest::prop_assert_eq!(w.weighted_distance(&o).unwrap(), w.weighted_distance(&o2).unwrap());
            }
        }

        #[test]
        fn binomial_symmetry(m in 1usize..60, k in 1usize..60) {
            proptest::prop_assume!(k < m);
            proptest::prop_assert_eq!(chance_level(m, k).unwrap().0, chance_level(m, m - k).unwrap().0);
        }
    }
}
