//! Text-generation and classification scoring: BLEU-n, ROUGE-1/2/L,
//! METEOR-lite, and binary F1 with standard deviation across repeats.
//!
//! All scores are sentence-level and averaged over the test set by the
//! experiment layer. METEOR-lite keeps exact and Porter-stemmed unigram
//! matching plus the fragmentation penalty, but drops WordNet synonymy, so
//! values are not comparable with full METEOR implementations.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("predictions and labels have different lengths ({predictions} vs {labels})")]
    LengthMismatch { predictions: usize, labels: usize },
}

/// Lowercase and split on whitespace and punctuation boundaries; tokens are
/// maximal alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts: HashMap<&[String], usize> = HashMap::new();
    if tokens.len() >= n && n > 0 {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

const SMOOTHING_EPS: f64 = 1e-9;

/// BLEU with clipped n-gram precisions for n = 1..=max_n, add-epsilon
/// smoothing on zero counts, and the brevity penalty `exp(1 - r/c)` when the
/// candidate is shorter than the reference. Empty candidates score 0.
pub fn bleu(candidate: &str, reference: &str, max_n: usize) -> f64 {
    assert!(max_n >= 1, "max_n must be at least 1");
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let cand_counts = ngram_counts(&cand, n);
        let ref_counts = ngram_counts(&refr, n);
        let total: usize = cand_counts.values().sum();
        let clipped: usize = cand_counts
            .iter()
            .map(|(gram, &c)| c.min(ref_counts.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision = if total == 0 {
            SMOOTHING_EPS
        } else if clipped == 0 {
            SMOOTHING_EPS / total as f64
        } else {
            clipped as f64 / total as f64
        };
        log_sum += precision.ln();
    }
    let geo = (log_sum / max_n as f64).exp();
    let c = cand.len() as f64;
    let r = refr.len() as f64;
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    bp * geo
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RougeVariant {
    Rouge1,
    Rouge2,
    RougeL,
}

/// ROUGE F-measure: n-gram overlap for ROUGE-1/2, longest common
/// subsequence for ROUGE-L. Two empty texts score 1.0 by convention; one
/// empty text scores 0.
pub fn rouge(candidate: &str, reference: &str, variant: RougeVariant) -> f64 {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() && refr.is_empty() {
        return 1.0;
    }
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let (matches, cand_total, ref_total) = match variant {
        RougeVariant::Rouge1 | RougeVariant::Rouge2 => {
            let n = if variant == RougeVariant::Rouge1 {
                1
            } else {
                2
            };
            let cc = ngram_counts(&cand, n);
            let rc = ngram_counts(&refr, n);
            let m: usize = cc
                .iter()
                .map(|(gram, &c)| c.min(rc.get(gram).copied().unwrap_or(0)))
                .sum();
            let ct: usize = cc.values().sum();
            let rt: usize = rc.values().sum();
            if ct == 0 && rt == 0 {
                return 1.0;
            }
            (m, ct, rt)
        }
        RougeVariant::RougeL => (lcs_length(&cand, &refr), cand.len(), refr.len()),
    };
    if cand_total == 0 || ref_total == 0 {
        return 0.0;
    }
    let p = matches as f64 / cand_total as f64;
    let r = matches as f64 / ref_total as f64;
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Longest common subsequence length by the standard quadratic DP.
fn lcs_length(a: &[String], b: &[String]) -> usize {
    let mut dp = vec![0usize; b.len() + 1];
    for ai in a {
        let mut prev = 0;
        for (j, bj) in b.iter().enumerate() {
            let tmp = dp[j + 1];
            dp[j + 1] = if ai == bj {
                prev + 1
            } else {
                dp[j + 1].max(dp[j])
            };
            prev = tmp;
        }
    }
    dp[b.len()]
}

/// METEOR-lite: unigram alignment by exact match, then Porter-stemmed match
/// on the leftovers; `F_mean = 10PR / (R + 9P)`; fragmentation penalty
/// `0.5 (chunks/matches)^3`.
pub fn meteor_lite(candidate: &str, reference: &str) -> f64 {
    let cand = tokenize(candidate);
    let refr = tokenize(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    // pairs of (candidate index, reference index)
    let mut cand_used = vec![false; cand.len()];
    let mut ref_used = vec![false; refr.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, tok) in cand.iter().enumerate() {
        for (j, rtok) in refr.iter().enumerate() {
            if !ref_used[j] && tok == rtok {
                cand_used[i] = true;
                ref_used[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }
    let cand_stems: Vec<String> = cand.iter().map(|t| porter_stem(t)).collect();
    let ref_stems: Vec<String> = refr.iter().map(|t| porter_stem(t)).collect();
    for (i, stem) in cand_stems.iter().enumerate() {
        if cand_used[i] {
            continue;
        }
        for (j, rstem) in ref_stems.iter().enumerate() {
            if !ref_used[j] && stem == rstem {
                cand_used[i] = true;
                ref_used[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }
    let m = pairs.len();
    if m == 0 {
        return 0.0;
    }
    let p = m as f64 / cand.len() as f64;
    let r = m as f64 / refr.len() as f64;
    let f_mean = 10.0 * p * r / (r + 9.0 * p);
    pairs.sort_unstable();
    let mut chunks = 1usize;
    for w in pairs.windows(2) {
        if w[1].0 != w[0].0 + 1 || w[1].1 != w[0].1 + 1 {
            chunks += 1;
        }
    }
    let penalty = 0.5 * (chunks as f64 / m as f64).powi(3);
    f_mean * (1.0 - penalty)
}

/// Binary F1 and its confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F1Score {
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

/// `F1 = 2TP / (2TP + FP + FN)`, and 0 when the denominator is 0.
/// An unparseable prediction (`None`) is scored as incorrect: a false
/// negative on positive labels, a false positive on negative ones.
pub fn f1_binary(predictions: &[Option<bool>], labels: &[bool]) -> Result<F1Score, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (pred, &label) in predictions.iter().zip(labels) {
        let effective = pred.unwrap_or(!label);
        match (effective, label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let denom = 2 * tp + fp + fn_;
    let f1 = if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    };
    Ok(F1Score {
        f1,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        true_negatives: tn,
    })
}

/// Per-metric summary across repeated evaluations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricSummary {
    pub name: String,
    pub per_repeat: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation across repeats.
    pub std: f64,
}

/// Scores for one experiment: one summary per metric, aligned repeats.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScoreReport {
    pub metrics: Vec<MetricSummary>,
}

impl ScoreReport {
    /// `per_repeat[r][m]` is metric `m` of repeat `r`.
    pub fn new(metric_names: &[&str], per_repeat: &[Vec<f64>]) -> ScoreReport {
        let metrics = metric_names
            .iter()
            .enumerate()
            .map(|(m, name)| {
                let values: Vec<f64> = per_repeat.iter().map(|row| row[m]).collect();
                let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / values.len().max(1) as f64;
                MetricSummary {
                    name: name.to_string(),
                    per_repeat: values,
                    mean,
                    std: var.sqrt(),
                }
            })
            .collect();
        ScoreReport { metrics }
    }

    pub fn get(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn mean(&self, name: &str) -> Option<f64> {
        self.get(name).map(|m| m.mean)
    }

    /// CSV with one row per metric: name, mean, std, then per-repeat values.
    pub fn to_csv(&self) -> String {
        let repeats = self
            .metrics
            .first()
            .map(|m| m.per_repeat.len())
            .unwrap_or(0);
        let mut out = String::from("metric,mean,std");
        for r in 0..repeats {
            out.push_str(&format!(",repeat{r}"));
        }
        out.push('\n');
        for m in &self.metrics {
            out.push_str(&format!("{},{:.6},{:.6}", m.name, m.mean, m.std));
            for v in &m.per_repeat {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Porter stemming algorithm (the 1980 original, without the later
/// revisions). Words of one or two letters are returned unchanged.
pub fn porter_stem(word: &str) -> String {
    let mut w: Vec<u8> = word.to_lowercase().bytes().collect();
    if w.len() <= 2 {
        return String::from_utf8(w).unwrap();
    }

    fn is_consonant(w: &[u8], i: usize) -> bool {
        match w[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !is_consonant(w, i - 1),
            _ => true,
        }
    }

    fn measure(w: &[u8]) -> usize {
        let mut m = 0;
        let mut prev_vowel = false;
        for i in 0..w.len() {
            let cons = is_consonant(w, i);
            if prev_vowel && cons {
                m += 1;
            }
            prev_vowel = !cons;
        }
        m
    }

    fn has_vowel(w: &[u8]) -> bool {
        (0..w.len()).any(|i| !is_consonant(w, i))
    }

    fn ends_double_consonant(w: &[u8]) -> bool {
        w.len() >= 2 && w[w.len() - 1] == w[w.len() - 2] && is_consonant(w, w.len() - 1)
    }

    /// consonant-vowel-consonant ending where the final consonant is not
    /// w, x, or y
    fn ends_cvc(w: &[u8]) -> bool {
        if w.len() < 3 {
            return false;
        }
        let n = w.len();
        is_consonant(w, n - 3)
            && !is_consonant(w, n - 2)
            && is_consonant(w, n - 1)
            && !matches!(w[n - 1], b'w' | b'x' | b'y')
    }

    fn ends_with(w: &[u8], suffix: &str) -> bool {
        w.len() >= suffix.len() && &w[w.len() - suffix.len()..] == suffix.as_bytes()
    }

    fn replace(w: &mut Vec<u8>, suffix: &str, with: &str) {
        let keep = w.len() - suffix.len();
        w.truncate(keep);
        w.extend_from_slice(with.as_bytes());
    }

    // step 1a
    if ends_with(&w, "sses") {
        replace(&mut w, "sses", "ss");
    } else if ends_with(&w, "ies") {
        replace(&mut w, "ies", "i");
    } else if !ends_with(&w, "ss") && ends_with(&w, "s") {
        replace(&mut w, "s", "");
    }

    // step 1b
    let mut cleanup = false;
    if ends_with(&w, "eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            replace(&mut w, "eed", "ee");
        }
    } else if ends_with(&w, "ed") && has_vowel(&w[..w.len() - 2]) {
        replace(&mut w, "ed", "");
        cleanup = true;
    } else if ends_with(&w, "ing") && has_vowel(&w[..w.len() - 3]) {
        replace(&mut w, "ing", "");
        cleanup = true;
    }
    if cleanup {
        if ends_with(&w, "at") {
            replace(&mut w, "at", "ate");
        } else if ends_with(&w, "bl") {
            replace(&mut w, "bl", "ble");
        } else if ends_with(&w, "iz") {
            replace(&mut w, "iz", "ize");
        } else if ends_double_consonant(&w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
            w.pop();
        } else if measure(&w) == 1 && ends_cvc(&w) {
            w.push(b'e');
        }
    }

    // step 1c
    if ends_with(&w, "y") && has_vowel(&w[..w.len() - 1]) {
        replace(&mut w, "y", "i");
    }

    // step 2
    const STEP2: &[(&str, &str)] = &[
        ("ational", "ate"),
        ("tional", "tion"),
        ("enci", "ence"),
        ("anci", "ance"),
        ("izer", "ize"),
        ("abli", "able"),
        ("alli", "al"),
        ("entli", "ent"),
        ("eli", "e"),
        ("ousli", "ous"),
        ("ization", "ize"),
        ("ation", "ate"),
        ("ator", "ate"),
        ("alism", "al"),
        ("iveness", "ive"),
        ("fulness", "ful"),
        ("ousness", "ous"),
        ("aliti", "al"),
        ("iviti", "ive"),
        ("biliti", "ble"),
    ];
    for (suffix, with) in STEP2 {
        if ends_with(&w, suffix) {
            if measure(&w[..w.len() - suffix.len()]) > 0 {
                replace(&mut w, suffix, with);
            }
            break;
        }
    }

    // step 3
    const STEP3: &[(&str, &str)] = &[
        ("icate", "ic"),
        ("ative", ""),
        ("alize", "al"),
        ("iciti", "ic"),
        ("ical", "ic"),
        ("ful", ""),
        ("ness", ""),
    ];
    for (suffix, with) in STEP3 {
        if ends_with(&w, suffix) {
            if measure(&w[..w.len() - suffix.len()]) > 0 {
                replace(&mut w, suffix, with);
            }
            break;
        }
    }

    // step 4
    const STEP4: &[&str] = &[
        "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent", "ion",
        "ou", "ism", "ate", "iti", "ous", "ive", "ize",
    ];
    for suffix in STEP4 {
        if ends_with(&w, suffix) {
            let stem_len = w.len() - suffix.len();
            let ok = measure(&w[..stem_len]) > 1
                && (*suffix != "ion" || (stem_len > 0 && matches!(w[stem_len - 1], b's' | b't')));
            if ok {
                replace(&mut w, suffix, "");
            }
            break;
        }
    }

    // step 5a
    if ends_with(&w, "e") {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
    // step 5b
    if measure(&w) > 1 && ends_double_consonant(&w) && w[w.len() - 1] == b'l' {
        w.pop();
    }

    String::from_utf8(w).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bleu_identical_sentences() {
        assert!(
            (bleu("one two three four five", "one two three four five", 2) - 1.0).abs() < 1e-12
        );
        assert!(
            (bleu("one two three four five", "one two three four five", 4) - 1.0).abs() < 1e-12
        );
    }

    #[test]
    fn bleu_disjoint_vocabulary_is_near_zero() {
        assert!(bleu("alpha beta gamma", "delta epsilon zeta", 2) < 1e-4);
    }

    #[test]
    fn bleu_hand_computed_brevity_case() {
        // p1 = 1, p2 = 1, BP = exp(1 - 4/3)
        let expected = (1.0f64 - 4.0 / 3.0).exp();
        let got = bleu("the cat sat", "the cat sat down", 2);
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.7165).abs() < 1e-4);
    }

    #[test]
    fn bleu_empty_candidate_is_zero() {
        assert_eq!(bleu("", "anything here", 2), 0.0);
    }

    #[test]
    fn bleu_clips_repeated_ngrams() {
        // "the the the" vs "the cat": clipped unigram count is 1 of 3
        let got = bleu("the the the", "the cat", 1);
        assert!((got - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rouge_identical_and_disjoint() {
        for v in [
            RougeVariant::Rouge1,
            RougeVariant::Rouge2,
            RougeVariant::RougeL,
        ] {
            assert!((rouge("a b c d", "a b c d", v) - 1.0).abs() < 1e-12);
            assert_eq!(rouge("a b c", "x y z", v), 0.0);
        }
    }

    #[test]
    fn rouge_l_hand_computed_case() {
        // "a b c" vs "a c b": LCS = 2, P = R = 2/3, F1 = 2/3
        let got = rouge("a b c", "a c b", RougeVariant::RougeL);
        assert!((got - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rouge_empty_conventions() {
        assert_eq!(rouge("", "", RougeVariant::Rouge1), 1.0);
        assert_eq!(rouge("", "something", RougeVariant::RougeL), 0.0);
        assert_eq!(rouge("something", "", RougeVariant::Rouge2), 0.0);
    }

    #[test]
    fn lcs_against_naive_recursive_oracle() {
        fn naive(a: &[String], b: &[String]) -> usize {
            if a.is_empty() || b.is_empty() {
                0
            } else if a[a.len() - 1] == b[b.len() - 1] {
                naive(&a[..a.len() - 1], &b[..b.len() - 1]) + 1
            } else {
                naive(&a[..a.len() - 1], b).max(naive(a, &b[..b.len() - 1]))
            }
        }
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let vocab = ["a", "b", "c", "d"];
        for _ in 0..50 {
            let len_a = rng.random_range(0..8);
            let len_b = rng.random_range(0..8);
            let a: Vec<String> = (0..len_a)
                .map(|_| vocab[rng.random_range(0..vocab.len())].to_string())
                .collect();
            let b: Vec<String> = (0..len_b)
                .map(|_| vocab[rng.random_range(0..vocab.len())].to_string())
                .collect();
            assert_eq!(lcs_length(&a, &b), naive(&a, &b));
        }
    }

    #[test]
    fn meteor_identical_text_formula() {
        // chunks = 1, so score = F_mean * (1 - 0.5/m^3)
        let m = 4.0f64;
        let expected = 1.0 * (1.0 - 0.5 * (1.0 / m).powi(3));
        let got = meteor_lite("a b c d", "a b c d");
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn meteor_stemming_case() {
        // "cats sitting" vs "cat sat": one stem match, P = R = 0.5,
        // F_mean = 0.5, penalty = 0.5, score = 0.25
        let got = meteor_lite("cats sitting", "cat sat");
        assert!((got - 0.25).abs() < 1e-12);
    }

    #[test]
    fn meteor_disjoint_is_zero() {
        assert_eq!(meteor_lite("aaa bbb", "ccc ddd"), 0.0);
        assert_eq!(meteor_lite("", "ccc"), 0.0);
    }

    #[test]
    fn porter_stems_known_words() {
        for (word, stem) in [
            ("cats", "cat"),
            ("sitting", "sit"),
            ("ponies", "poni"),
            ("caresses", "caress"),
            ("running", "run"),
            ("agreed", "agre"),
            ("relational", "relat"),
            ("conditional", "condit"),
            ("hopeful", "hope"),
            ("goodness", "good"),
            ("electricity", "electr"),
            ("formalize", "formal"),
            ("molecules", "molecul"),
            ("aromatic", "aromat"),
            ("sat", "sat"),
        ] {
            assert_eq!(porter_stem(word), stem, "stem of {word}");
        }
    }

    #[test]
    fn f1_perfect_predictions() {
        let labels = [true, false, true, true];
        let preds: Vec<Option<bool>> = labels.iter().map(|&l| Some(l)).collect();
        let score = f1_binary(&preds, &labels).unwrap();
        assert_eq!(score.f1, 1.0);
        assert_eq!(score.true_positives, 3);
        assert_eq!(score.true_negatives, 1);
    }

    #[test]
    fn f1_all_negative_predictions_is_zero() {
        let labels = [true, false, true, false];
        let preds = vec![Some(false); 4];
        let score = f1_binary(&preds, &labels).unwrap();
        assert_eq!(score.f1, 0.0);
        assert_eq!(score.true_positives, 0);
    }

    #[test]
    fn f1_arithmetic_case() {
        // TP = 1, FP = 1, FN = 1 -> F1 = 0.5
        let labels = [true, false, true];
        let preds = [Some(true), Some(true), Some(false)];
        let score = f1_binary(&preds, &labels).unwrap();
        assert!((score.f1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn f1_unparseable_counts_as_wrong() {
        let labels = [true, false];
        let preds = [None, None];
        let score = f1_binary(&preds, &labels).unwrap();
        assert_eq!(score.false_negatives, 1);
        assert_eq!(score.false_positives, 1);
        assert_eq!(score.f1, 0.0);
    }

    #[test]
    fn f1_length_mismatch_is_an_error() {
        assert!(matches!(
            f1_binary(&[Some(true)], &[true, false]),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn score_report_mean_and_std() {
        let report = ScoreReport::new(
            &["bleu2", "rouge1"],
            &[vec![0.4, 0.6], vec![0.6, 0.8], vec![0.5, 0.7]],
        );
        let bleu2 = report.get("bleu2").unwrap();
        assert!((bleu2.mean - 0.5).abs() < 1e-12);
        let expected_std = (((0.4f64 - 0.5).powi(2) + (0.6f64 - 0.5).powi(2) + 0.0) / 3.0).sqrt();
        assert!((bleu2.std - expected_std).abs() < 1e-12);
        let csv = report.to_csv();
        assert!(csv.starts_with("metric,mean,std,repeat0,repeat1,repeat2\n"));
        assert!(csv.contains("rouge1,0.7"));
    }

    #[test]
    fn scores_stay_in_unit_interval() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        let vocab = ["mol", "ring", "atom", "acid", "chain", "ester"];
        for _ in 0..200 {
            let sample = |rng: &mut rand_chacha::ChaCha8Rng| {
                let len = rng.random_range(0..7);
                (0..len)
                    .map(|_| vocab[rng.random_range(0..vocab.len())])
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let c = sample(&mut rng);
            let r = sample(&mut rng);
            for score in [
                bleu(&c, &r, 2),
                bleu(&c, &r, 4),
                rouge(&c, &r, RougeVariant::Rouge1),
                rouge(&c, &r, RougeVariant::Rouge2),
                rouge(&c, &r, RougeVariant::RougeL),
                meteor_lite(&c, &r),
            ] {
                assert!((0.0..=1.0).contains(&score), "{c:?} vs {r:?}: {score}");
            }
        }
    }
}
