// SPDX-License-Identifier: Apache-2.0
//! Sentence-similarity metrics for generated intents: BLEU@1..4, CIDEr,
//! METEOR and ROUGE-L, plus a corpus evaluator.
//!
//! All metrics share [`tokenize`]. Scores are in `[0, 1]`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use rust_stemmers::{Algorithm, Stemmer};
use serde::Serialize;
use thiserror::Error;

pub const MAX_ORDER: usize = 4;
pub const METEOR_ALPHA: f64 = 0.9;
pub const METEOR_GAMMA: f64 = 0.5;
pub const METEOR_BETA: f64 = 3.0;
/// Separator between alternative references on one line of a references file.
pub const REFERENCE_SEPARATOR: &str = " ||| ";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("{candidates} candidate lines but {references} reference lines")]
    LineCountMismatch { candidates: usize, references: usize },
    #[error("unknown metric {0:?} (expected bleu1..bleu4, bleu, cider, meteor, rouge_l)")]
    UnknownMetric(String),
}

/// Lowercase and split on anything that is not a letter or digit.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    if n > 0 && tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// (clipped matches, candidate n-gram total) for one order.
fn clipped_counts(cand: &[String], refs: &[Vec<String>], n: usize) -> (usize, usize) {
    let c = ngrams(cand, n);
    let mut max_ref: HashMap<&[String], usize> = HashMap::new();
    for r in refs {
        for (g, k) in ngrams(r, n) {
            let e = max_ref.entry(g).or_insert(0);
            *e = (*e).max(k);
        }
    }
    let matched = c.iter().map(|(g, &k)| k.min(max_ref.get(g).copied().unwrap_or(0))).sum();
    (matched, cand.len().saturating_sub(n - 1))
}

/// Reference length closest to `c`, shorter on ties.
fn closest_ref_len(c: usize, refs: &[Vec<String>]) -> usize {
    refs.iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(c), r))
        .unwrap_or(0)
}

fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    }
}

fn geometric_bleu(matches: &[usize], totals: &[usize], bp: f64) -> f64 {
    let mut log_sum = 0.0;
    for (&m, &t) in matches.iter().zip(totals) {
        if m == 0 || t == 0 {
            return 0.0;
        }
        log_sum += (m as f64 / t as f64).ln();
    }
    bp * (log_sum / matches.len() as f64).exp()
}

/// Sentence BLEU@n: geometric mean of clipped 1..n-gram precisions times
/// the brevity penalty.
pub fn bleu_n(cand: &[String], refs: &[Vec<String>], n: usize) -> f64 {
    assert!((1..=MAX_ORDER).contains(&n), "BLEU order must be 1..=4");
    if cand.is_empty() {
        log::debug!("empty candidate scores 0");
        return 0.0;
    }
    if cand.len() < n || refs.is_empty() {
        return 0.0;
    }
    let (m, t): (Vec<usize>, Vec<usize>) = (1..=n).map(|k| clipped_counts(cand, refs, k)).unzip();
    geometric_bleu(&m, &t, brevity_penalty(cand.len(), closest_ref_len(cand.len(), refs)))
}

/// Corpus BLEU@n with clipped counts and lengths pooled over all items.
pub fn corpus_bleu(items: &[(Vec<String>, Vec<Vec<String>>)], n: usize) -> f64 {
    assert!((1..=MAX_ORDER).contains(&n), "BLEU order must be 1..=4");
    let mut m = vec![0; n];
    let mut t = vec![0; n];
    let (mut c, mut r) = (0, 0);
    for (cand, refs) in items {
        for k in 1..=n {
            let (mk, tk) = clipped_counts(cand, refs, k);
            m[k - 1] += mk;
            t[k - 1] += tk;
        }
        c += cand.len();
        r += closest_ref_len(cand.len(), refs);
    }
    geometric_bleu(&m, &t, brevity_penalty(c, r))
}

/// Length of the longest common subsequence.
pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

/// ROUGE-L F1, best over references.
pub fn rouge_l(cand: &[String], refs: &[Vec<String>]) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    refs.iter()
        .map(|r| {
            let l = lcs_len(cand, r) as f64;
            if l == 0.0 {
                return 0.0;
            }
            let p = l / cand.len() as f64;
            let rec = l / r.len() as f64;
            2.0 * p * rec / (p + rec)
        })
        .fold(0.0, f64::max)
}

/// Candidate/reference index pairs matched by METEOR, sorted by candidate index.
///
/// Exact matches first, then stem matches among the leftovers. Within a stage
/// each candidate token, left to right, takes the free reference position
/// right after the previous alignment if it fits, otherwise the leftmost
/// free fitting position.
pub fn meteor_alignment(cand: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let stemmer = Stemmer::create(Algorithm::English);
    let c_stems: Vec<String> = cand.iter().map(|t| stemmer.stem(t).into_owned()).collect();
    let r_stems: Vec<String> = reference.iter().map(|t| stemmer.stem(t).into_owned()).collect();
    let mut c_used = vec![false; cand.len()];
    let mut r_used = vec![false; reference.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for stage in 0..2 {
        let (cs, rs) = if stage == 0 { (cand, reference) } else { (&c_stems[..], &r_stems[..]) };
        let mut prev: Option<usize> = None;
        for i in 0..cand.len() {
            if c_used[i] {
                prev = pairs.iter().find(|p| p.0 == i).map(|p| p.1);
                continue;
            }
            let fits = |j: usize| !r_used[j] && rs[j] == cs[i];
            let next = prev.map(|p| p + 1).filter(|&j| j < reference.len() && fits(j));
            let pick = next.or_else(|| (0..reference.len()).find(|&j| fits(j)));
            if let Some(j) = pick {
                c_used[i] = true;
                r_used[j] = true;
                pairs.push((i, j));
                prev = Some(j);
            } else {
                prev = None;
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Number of runs of alignment pairs adjacent in both sentences.
pub fn chunks(alignment: &[(usize, usize)]) -> usize {
    if alignment.is_empty() {
        return 0;
    }
    1 + alignment.windows(2).filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1)).count()
}

fn meteor_single(cand: &[String], reference: &[String]) -> f64 {
    let align = meteor_alignment(cand, reference);
    let m = align.len() as f64;
    if m == 0.0 {
        return 0.0;
    }
    let p = m / cand.len() as f64;
    let r = m / reference.len() as f64;
    let fmean = p * r / (METEOR_ALPHA * p + (1.0 - METEOR_ALPHA) * r);
    let penalty = METEOR_GAMMA * (chunks(&align) as f64 / m).powf(METEOR_BETA);
    fmean * (1.0 - penalty)
}

/// METEOR with exact and stem matching, best over references.
pub fn meteor(cand: &[String], refs: &[Vec<String>]) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    refs.iter().map(|r| meteor_single(cand, r)).fold(0.0, f64::max)
}

/// Document frequencies of reference n-grams, one table per order.
pub struct CiderIdf {
    items: usize,
    df: Vec<HashMap<Vec<String>, usize>>,
}

impl CiderIdf {
    pub fn new(references_per_item: &[Vec<Vec<String>>]) -> CiderIdf {
        let mut df = vec![HashMap::new(); MAX_ORDER];
        for refs in references_per_item {
            for (n, table) in df.iter_mut().enumerate() {
                let mut seen: Vec<&[String]> = refs.iter().flat_map(|r| ngrams(r, n + 1).into_keys()).collect();
                seen.sort_unstable();
                seen.dedup();
                for g in seen {
                    *table.entry(g.to_vec()).or_insert(0) += 1;
                }
            }
        }
        CiderIdf { items: references_per_item.len(), df }
    }

    /// `ln((N + 1) / (df + 1)) + 1`
    pub fn idf(&self, gram: &[String]) -> f64 {
        let df = self.df[gram.len() - 1].get(gram).copied().unwrap_or(0);
        ((self.items as f64 + 1.0) / (df as f64 + 1.0)).ln() + 1.0
    }

    fn vector<'a>(&self, tokens: &'a [String], n: usize) -> HashMap<&'a [String], f64> {
        ngrams(tokens, n).into_iter().map(|(g, k)| (g, k as f64 * self.idf(g))).collect()
    }

    /// Per-item CIDEr: mean over orders 1..4 of the reference-averaged cosine.
    /// Orders with no n-grams on either side are left out.
    pub fn score(&self, cand: &[String], refs: &[Vec<String>]) -> f64 {
        if cand.is_empty() || refs.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        let mut orders = 0;
        for n in 1..=MAX_ORDER {
            if cand.len() < n && refs.iter().all(|r| r.len() < n) {
                continue;
            }
            orders += 1;
            let cv = self.vector(cand, n);
            let sum: f64 = refs.iter().map(|r| cosine(&cv, &self.vector(r, n))).sum();
            total += sum / refs.len() as f64;
        }
        if orders == 0 {
            0.0
        } else {
            total / orders as f64
        }
    }
}

fn cosine(a: &HashMap<&[String], f64>, b: &HashMap<&[String], f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(g, x)| b.get(g).map(|y| x * y)).sum();
    let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).min(1.0)
    }
}

/// Corpus CIDEr: mean of per-item scores with IDF over all references.
pub fn cider(candidates: &[Vec<String>], references_per_item: &[Vec<Vec<String>>]) -> f64 {
    if candidates.is_empty() {
        return 0.0;
    }
    let idf = CiderIdf::new(references_per_item);
    let sum: f64 = candidates.iter().zip(references_per_item).map(|(c, r)| idf.score(c, r)).sum();
    sum / candidates.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Metric {
    #[serde(rename = "bleu1")]
    Bleu1,
    #[serde(rename = "bleu2")]
    Bleu2,
    #[serde(rename = "bleu3")]
    Bleu3,
    #[serde(rename = "bleu4")]
    Bleu4,
    #[serde(rename = "cider")]
    Cider,
    #[serde(rename = "meteor")]
    Meteor,
    #[serde(rename = "rouge_l")]
    RougeL,
}

impl Metric {
    pub const ALL: [Metric; 7] =
        [Metric::Bleu1, Metric::Bleu2, Metric::Bleu3, Metric::Bleu4, Metric::Cider, Metric::Meteor, Metric::RougeL];

    pub fn header(self) -> &'static str {
        match self {
            Metric::Bleu1 => "BLEU@1",
            Metric::Bleu2 => "BLEU@2",
            Metric::Bleu3 => "BLEU@3",
            Metric::Bleu4 => "BLEU@4",
            Metric::Cider => "CIDEr",
            Metric::Meteor => "METEOR",
            Metric::RougeL => "ROUGE-L",
        }
    }

    /// Parse a comma-separated list; `bleu` expands to all four orders.
    pub fn parse_list(s: &str) -> Result<Vec<Metric>, MetricError> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("bleu") {
                out.extend(&Metric::ALL[..4]);
            } else {
                out.push(part.parse()?);
            }
        }
        out.dedup();
        Ok(out)
    }
}

impl FromStr for Metric {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Metric, MetricError> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        Ok(match key.as_str() {
            "bleu1" => Metric::Bleu1,
            "bleu2" => Metric::Bleu2,
            "bleu3" => Metric::Bleu3,
            "bleu4" => Metric::Bleu4,
            "cider" => Metric::Cider,
            "meteor" => Metric::Meteor,
            "rougel" | "rouge" => Metric::RougeL,
            _ => return Err(MetricError::UnknownMetric(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemScores {
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub cider: f64,
    pub meteor: f64,
    pub rouge_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub cider: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub per_item: Vec<ItemScores>,
}

impl MetricReport {
    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Bleu1 => self.bleu1,
            Metric::Bleu2 => self.bleu2,
            Metric::Bleu3 => self.bleu3,
            Metric::Bleu4 => self.bleu4,
            Metric::Cider => self.cider,
            Metric::Meteor => self.meteor,
            Metric::RougeL => self.rouge_l,
        }
    }

    pub fn percent(&self, m: Metric) -> f64 {
        self.get(m) * 100.0
    }

    /// Aligned two-row table, scores as percentages with four decimals.
    pub fn render_table(&self, metrics: &[Metric]) -> String {
        let cells: Vec<(String, String)> =
            metrics.iter().map(|&m| (m.header().to_string(), format!("{:.4}", self.percent(m)))).collect();
        let mut out = String::new();
        let widths: Vec<usize> = cells.iter().map(|(h, v)| h.len().max(v.len())).collect();
        for row in 0..2 {
            let line: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|((h, v), &w)| format!("{:>w$}", if row == 0 { h } else { v }))
                .collect();
            let _ = writeln!(out, "{}", line.join("  "));
        }
        out
    }

    /// JSON object with the chosen metrics as fractions and percentages.
    pub fn to_json(&self, metrics: &[Metric]) -> serde_json::Value {
        let mut scores = serde_json::Map::new();
        let mut percent = serde_json::Map::new();
        for &m in metrics {
            let key = serde_json::to_value(m).unwrap().as_str().unwrap().to_string();
            scores.insert(key.clone(), self.get(m).into());
            percent.insert(key, self.percent(m).into());
        }
        serde_json::json!({ "scores": scores, "percent": percent, "per_item": self.per_item })
    }
}

/// Score every (candidate, references) pair and aggregate: BLEU pooled over
/// the corpus, the other metrics as means of per-item scores.
pub fn evaluate_corpus<S: AsRef<str> + Sync>(pairs: &[(S, Vec<S>)]) -> Result<MetricReport, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let items: Vec<(Vec<String>, Vec<Vec<String>>)> = pairs
        .iter()
        .map(|(c, rs)| (tokenize(c.as_ref()), rs.iter().map(|r| tokenize(r.as_ref())).collect()))
        .collect();
    let refs: Vec<Vec<Vec<String>>> = items.iter().map(|(_, r)| r.clone()).collect();
    let idf = CiderIdf::new(&refs);
    let per_item: Vec<ItemScores> = items
        .par_iter()
        .map(|(c, r)| ItemScores {
            bleu1: bleu_n(c, r, 1),
            bleu2: bleu_n(c, r, 2),
            bleu3: bleu_n(c, r, 3),
            bleu4: bleu_n(c, r, 4),
            cider: idf.score(c, r),
            meteor: meteor(c, r),
            rouge_l: rouge_l(c, r),
        })
        .collect();
    let n = per_item.len() as f64;
    let mean = |f: fn(&ItemScores) -> f64| per_item.iter().map(f).sum::<f64>() / n;
    Ok(MetricReport {
        bleu1: corpus_bleu(&items, 1),
        bleu2: corpus_bleu(&items, 2),
        bleu3: corpus_bleu(&items, 3),
        bleu4: corpus_bleu(&items, 4),
        cider: mean(|s| s.cider),
        meteor: mean(|s| s.meteor),
        rouge_l: mean(|s| s.rouge_l),
        per_item,
    })
}

/// Pair up a candidates file (one sentence per line) with a references file
/// (same line count, alternatives separated by ` ||| `).
pub fn parse_eval_files(candidates: &str, references: &str) -> Result<Vec<(String, Vec<String>)>, MetricError> {
    let c: Vec<&str> = candidates.lines().collect();
    let r: Vec<&str> = references.lines().collect();
    if c.len() != r.len() {
        return Err(MetricError::LineCountMismatch { candidates: c.len(), references: r.len() });
    }
    if c.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    Ok(c.into_iter()
        .zip(r)
        .map(|(c, r)| (c.to_string(), r.split(REFERENCE_SEPARATOR).map(|s| s.trim().to_string()).collect()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<String> {
        tokenize(s)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn tokenizer() {
        assert_eq!(t("Click the 'Search' button!"), ["click", "the", "search", "button"]);
        assert!(t(" ,.; ").is_empty());
    }

    #[test]
    fn bleu_examples() {
        let c = t("click the search button");
        let r = vec![t("click search button")];
        assert!(close(bleu_n(&c, &r, 1), 0.75));
        assert!(close(bleu_n(&c, std::slice::from_ref(&c), 4), 1.0));
        assert_eq!(bleu_n(&t("a b"), &[t("c d")], 1), 0.0);
        assert_eq!(bleu_n(&t("a b"), &[t("a b")], 3), 0.0);
        assert_eq!(bleu_n(&[], &[t("a")], 1), 0.0);
        // short candidate: BP = e^(1 - 4/2)
        assert!(close(bleu_n(&t("a b"), &[t("a b c d")], 1), (-1.0f64).exp()));
    }

    #[test]
    fn rouge_examples() {
        assert!(close(rouge_l(&t("a b c d"), &[t("a c d")]), 6.0 / 7.0));
        assert_eq!(rouge_l(&t("a b"), &[t("c")]), 0.0);
        assert!(close(rouge_l(&t("x y"), &[t("q"), t("x y")]), 1.0));
    }

    #[test]
    fn meteor_examples() {
        let s = t("open the settings page");
        assert!(close(meteor(&s, std::slice::from_ref(&s)), 0.9921875));
        assert_eq!(meteor(&t("a b"), &[t("c d")]), 0.0);
        let a = meteor_alignment(&t("clicks button"), &t("click button"));
        assert_eq!(a, [(0, 0), (1, 1)]);
        assert!(close(meteor(&t("clicks button"), &[t("click button")]), 1.0 - 0.5 / 8.0));
        // swapped order: two chunks
        let a = meteor_alignment(&t("b a"), &t("a b"));
        assert_eq!(chunks(&a), 2);
    }

    #[test]
    fn cider_examples() {
        let c = vec![t("open the menu"), t("search for pizza places")];
        assert!(close(cider(&c, &[vec![c[0].clone()], vec![c[1].clone()]]), 1.0));
        assert_eq!(cider(&[t("a b")], &[vec![t("c d")]]), 0.0);
        let single = cider(&[t("tap ok")], &[vec![t("tap ok")]]);
        assert!(close(single, 1.0));
    }

    #[test]
    fn corpus_identity_and_disjoint() {
        let pairs = vec![("open the main menu now", vec!["open the main menu now"]), ("type a new note", vec!["type a new note"])];
        let r = evaluate_corpus(&pairs).unwrap();
        for m in [Metric::Bleu1, Metric::Bleu2, Metric::Bleu3, Metric::Bleu4, Metric::Cider, Metric::RougeL] {
            assert_eq!(r.get(m), 1.0, "{m:?}");
        }
        let expect = (1.0 - 0.5 / 125.0 + 1.0 - 0.5 / 64.0) / 2.0;
        assert!(close(r.meteor, expect));
        let r = evaluate_corpus(&[("a b c", vec!["d e f"])]).unwrap();
        assert!(Metric::ALL.iter().all(|&m| r.get(m) == 0.0));
        assert_eq!(evaluate_corpus::<&str>(&[]), Err(MetricError::EmptyCorpus));
    }

    #[test]
    fn metric_lists_and_files() {
        assert_eq!(Metric::parse_list("bleu, rouge-l").unwrap().len(), 5);
        assert!(Metric::parse_list("bleu9").is_err());
        let p = parse_eval_files("a\nb\n", "x ||| y\nz\n").unwrap();
        assert_eq!(p[0].1, ["x", "y"]);
        assert!(matches!(parse_eval_files("a\n", ""), Err(MetricError::LineCountMismatch { .. })));
    }

    #[test]
    fn table_rendering() {
        let r = evaluate_corpus(&[("a b", vec!["a b"])]).unwrap();
        let table = r.render_table(&[Metric::Bleu1, Metric::RougeL]);
        assert_eq!(table, "  BLEU@1   ROUGE-L\n100.0000  100.0000\n");
    }
}
