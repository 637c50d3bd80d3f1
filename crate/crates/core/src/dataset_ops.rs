//! Dataset construction: candidate retrieval, redundancy filtering, negative
//! down-sampling, split generation, and summary statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::concept_graph::{ConceptGraph, NodeKind};
use crate::error::{Error, Result};
use crate::seed;
use crate::text_ingest::{DependencyParse, ParseCorpus};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    #[default]
    None,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::None => "none",
        }
    }
}

impl FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            "none" => Ok(Split::None),
            _ => Err(Error::Usage(format!("unknown split {s:?} (train, val, test, none)"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairExample {
    pub pair_id: String,
    pub concept: String,
    pub sentence: String,
    pub label: Option<u8>,
    #[serde(default)]
    pub split: Split,
}

impl PairExample {
    pub fn new(concept: &str, sentence: &str, label: Option<u8>) -> Self {
        PairExample {
            pair_id: format!("{sentence}::{concept}"),
            concept: concept.to_string(),
            sentence: sentence.to_string(),
            label,
            split: Split::None,
        }
    }
}

pub fn pairs_to_jsonl(pairs: &[PairExample]) -> String {
    let mut s = String::new();
    for p in pairs {
        s.push_str(&serde_json::to_string(p).expect("pair serializes"));
        s.push('\n');
    }
    s
}

pub fn write_pairs(path: &Path, pairs: &[PairExample]) -> Result<()> {
    fs::write(path, pairs_to_jsonl(pairs)).map_err(|e| Error::io(path, e))
}

/// Reads a pairs file, rejecting duplicate `(concept, sentence)` pairs and
/// labels outside {0, 1}.
pub fn read_pairs(path: &Path) -> Result<Vec<PairExample>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: PairExample =
            serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if matches!(p.label, Some(l) if l > 1) {
            return Err(Error::parse(path, i + 1, "label must be 0, 1 or null"));
        }
        if !seen.insert((p.concept.clone(), p.sentence.clone())) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("duplicate pair ({}, {})", p.concept, p.sentence),
            ));
        }
        out.push(p);
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct LabelLine {
    concept: String,
    sentence: String,
    label: u8,
}

/// Gold labels, JSON-lines with keys `concept, sentence, label`.
pub fn read_labels(path: &Path) -> Result<BTreeMap<(String, String), u8>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let l: LabelLine =
            serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if l.label > 1 {
            return Err(Error::parse(path, i + 1, "label must be 0 or 1"));
        }
        out.insert((l.concept, l.sentence), l.label);
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WordFrequencyTable {
    counts: BTreeMap<String, u64>,
}

impl WordFrequencyTable {
    pub fn new(counts: BTreeMap<String, u64>) -> Self {
        WordFrequencyTable { counts }
    }

    /// `word<TAB>count` lines.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut counts = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (w, c) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, i + 1, "expected word<TAB>count"))?;
            let c: u64 = c
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad count {c:?}")))?;
            counts.insert(w.to_string(), c);
        }
        Ok(WordFrequencyTable { counts })
    }

    /// Counts token forms over the given parses.
    pub fn from_parses<'a>(parses: impl IntoIterator<Item = &'a DependencyParse>) -> Self {
        let mut counts = BTreeMap::new();
        for p in parses {
            for t in &p.tokens {
                *counts.entry(t.form.clone()).or_insert(0) += 1;
            }
        }
        WordFrequencyTable { counts }
    }

    pub fn get(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn aggregate<S: AsRef<str>>(&self, words: &[S]) -> u64 {
        words.iter().map(|w| self.get(w.as_ref())).sum()
    }
}

/// Parses in the corpus that are sentences, i.e. not concept phrases.
pub fn sentence_parses<'a>(corpus: &'a ParseCorpus, g: &ConceptGraph) -> Vec<&'a DependencyParse> {
    corpus
        .parses
        .values()
        .filter(|p| g.node(&p.id).is_none())
        .collect()
}

/// Sentences that name at least one entity of `concept`, in input order.
pub fn retrieve_candidates<'a>(
    g: &ConceptGraph,
    sentences: impl IntoIterator<Item = &'a DependencyParse>,
    concept: &str,
) -> Result<Vec<String>> {
    let entities = g.entities_of(concept)?;
    let mut seen = BTreeSet::new();
    Ok(sentences
        .into_iter()
        .filter(|s| s.named_entities.iter().any(|e| entities.contains(&e.entity)))
        .filter(|s| seen.insert(s.id.clone()))
        .map(|s| s.id.clone())
        .collect())
}

/// Candidate concepts per sentence over every concept of the graph.
pub fn candidate_map(g: &ConceptGraph, sentences: &[&DependencyParse]) -> Result<BTreeMap<String, Vec<String>>> {
    let concepts: Vec<&str> = g.concepts().map(|n| n.id.as_str()).collect();
    let per_concept: Vec<(String, Vec<String>)> = concepts
        .par_iter()
        .map(|c| Ok((c.to_string(), retrieve_candidates(g, sentences.iter().copied(), c)?)))
        .collect::<Result<_>>()?;
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (c, sents) in per_concept {
        for s in sents {
            out.entry(s).or_default().push(c.clone());
        }
    }
    Ok(out)
}

/// Keeps at most `cap` concepts per sentence, lowest summed word frequency
/// first, ties by concept id.
pub fn redundancy_filter(
    candidates: &BTreeMap<String, Vec<String>>,
    g: &ConceptGraph,
    freq: &WordFrequencyTable,
    cap: usize,
) -> Result<BTreeMap<String, Vec<String>>> {
    if cap == 0 {
        return Err(Error::Argument("redundancy cap must be at least 1".into()));
    }
    let mut out = BTreeMap::new();
    for (sentence, concepts) in candidates {
        let mut scored: Vec<(u64, &String)> = concepts
            .iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|c| {
                let words = g.node(c).map(|n| n.surface.as_slice()).unwrap_or_default();
                (freq.aggregate(words), c)
            })
            .collect();
        scored.sort();
        scored.truncate(cap);
        out.insert(sentence.clone(), scored.into_iter().map(|(_, c)| c.clone()).collect());
    }
    Ok(out)
}

/// Down-samples negatives to `round(ratio · positives)`, keeping input order.
/// Positives and unlabeled pairs pass through untouched.
pub fn balance_negatives(pairs: Vec<PairExample>, ratio: f64, seed: u64) -> Result<Vec<PairExample>> {
    if !(ratio >= 0.0 && ratio.is_finite()) {
        return Err(Error::Argument(format!("negative ratio must be non-negative, got {ratio}")));
    }
    let pos = pairs.iter().filter(|p| p.label == Some(1)).count();
    if pos == 0 {
        return Err(Error::Argument("cannot balance a dataset with no positives".into()));
    }
    let negs: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].label == Some(0)).collect();
    let want = ((ratio * pos as f64).round() as usize).min(negs.len());
    let mut rng = seed::rng(seed, "balance");
    let keep: BTreeSet<usize> = index::sample(&mut rng, negs.len(), want)
        .into_iter()
        .map(|k| negs[k])
        .collect();
    Ok(pairs
        .into_iter()
        .enumerate()
        .filter(|(i, p)| p.label != Some(0) || keep.contains(i))
        .map(|(_, p)| p)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitMode {
    Random,
    NonOverlapped,
}

impl FromStr for SplitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(SplitMode::Random),
            "non-overlapped" | "nonoverlapped" => Ok(SplitMode::NonOverlapped),
            _ => Err(Error::Usage(format!(
                "unknown split mode {s:?} (random, non-overlapped)"
            ))),
        }
    }
}

impl SplitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitMode::Random => "random",
            SplitMode::NonOverlapped => "non-overlapped",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub train_frac: f64,
    pub test_frac: f64,
    pub val_size: usize,
    pub seed: u64,
}

impl SplitSpec {
    /// Test share after normalizing the two fractions to sum to one.
    fn test_share(&self) -> Result<f64> {
        let (a, b) = (self.train_frac, self.test_frac);
        if !(a > 0.0 && b > 0.0 && a + b <= 1.0 + 1e-12) {
            return Err(Error::Argument(format!(
                "split fractions must be positive with sum ≤ 1, got train={a} test={b}"
            )));
        }
        Ok(b / (a + b))
    }
}

/// Assigns every pair to train, val or test. Overwrites only `split`.
pub fn make_splits(pairs: &mut [PairExample], spec: &SplitSpec) -> Result<()> {
    let share = spec.test_share()?;
    let n = pairs.len();
    let target_test = (share * n as f64).round() as usize;
    let mut rng = seed::rng(spec.seed, "split");
    match spec.mode {
        SplitMode::Random => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let (test, train) = order.split_at(target_test.min(n));
            if spec.val_size >= train.len() {
                return Err(Error::Partition(format!(
                    "val size {} leaves no training pairs out of {}",
                    spec.val_size,
                    train.len()
                )));
            }
            for &i in test {
                pairs[i].split = Split::Test;
            }
            for (k, &i) in train.iter().enumerate() {
                pairs[i].split = if k < spec.val_size { Split::Val } else { Split::Train };
            }
        }
        SplitMode::NonOverlapped => {
            let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, p) in pairs.iter().enumerate() {
                groups.entry(p.concept.as_str()).or_default().push(i);
            }
            let mut concepts: Vec<Vec<usize>> = groups.into_values().collect();
            concepts.shuffle(&mut rng);

            let mut assign = vec![Split::Train; concepts.len()];
            let mut test_n = 0usize;
            for (k, g) in concepts.iter().enumerate() {
                if closer(test_n, g.len(), target_test) {
                    assign[k] = Split::Test;
                    test_n += g.len();
                }
            }
            let mut val_n = 0usize;
            for (k, g) in concepts.iter().enumerate() {
                if assign[k] == Split::Train && closer(val_n, g.len(), spec.val_size) {
                    assign[k] = Split::Val;
                    val_n += g.len();
                }
            }
            let train_n = n - test_n - val_n;
            if test_n == 0 || train_n == 0 || (spec.val_size > 0 && val_n == 0) {
                return Err(Error::Partition(format!(
                    "no concept-disjoint partition near the requested sizes \
                     (train {train_n}, val {val_n}, test {test_n} of {n} pairs)"
                )));
            }
            for (k, g) in concepts.iter().enumerate() {
                for &i in g {
                    pairs[i].split = assign[k];
                }
            }
        }
    }
    if !pairs.iter().any(|p| p.split == Split::Train) || !pairs.iter().any(|p| p.split == Split::Test) {
        return Err(Error::Partition("split left train or test empty".into()));
    }
    Ok(())
}

/// True when adding `size` moves `current` strictly closer to `target`.
fn closer(current: usize, size: usize, target: usize) -> bool {
    (current + size).abs_diff(target) < current.abs_diff(target)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DatasetStats {
    pub concepts: usize,
    pub sentences: usize,
    pub positives: usize,
    pub pairs: usize,
    /// Distinct `isA` edges touching any concept of the set.
    pub cg_relations: usize,
}

pub fn dataset_stats<'a>(pairs: impl IntoIterator<Item = &'a PairExample>, g: &ConceptGraph) -> DatasetStats {
    let mut concepts = BTreeSet::new();
    let mut sentences = BTreeSet::new();
    let mut s = DatasetStats::default();
    for p in pairs {
        s.pairs += 1;
        s.positives += usize::from(p.label == Some(1));
        concepts.insert(p.concept.as_str());
        sentences.insert(p.sentence.as_str());
    }
    s.concepts = concepts.len();
    s.sentences = sentences.len();
    s.cg_relations = g
        .edges()
        .filter(|(c, p)| concepts.contains(c) || concepts.contains(p))
        .count();
    s
}

/// Stats for the whole set and each split, as an aligned text table.
pub fn stats_report(pairs: &[PairExample], g: &ConceptGraph) -> String {
    let mut rows = vec![("all", dataset_stats(pairs, g))];
    for split in [Split::Train, Split::Val, Split::Test] {
        rows.push((split.as_str(), dataset_stats(pairs.iter().filter(|p| p.split == split), g)));
    }
    let mut s = format!(
        "{:<6} {:>9} {:>10} {:>9} {:>7} {:>8}\n",
        "split", "concepts", "sentences", "positive", "pairs", "cg_rel"
    );
    for (name, r) in rows {
        s.push_str(&format!(
            "{:<6} {:>9} {:>10} {:>9} {:>7} {:>8}\n",
            name, r.concepts, r.sentences, r.positives, r.pairs, r.cg_relations
        ));
    }
    s
}

/// Concept ids of a graph that have at least one entity child.
pub fn concepts_with_entities(g: &ConceptGraph) -> Vec<String> {
    g.concepts()
        .filter(|c| {
            g.children_of(&c.id)
                .any(|ch| g.node(ch).is_some_and(|n| n.kind == NodeKind::Entity))
        })
        .map(|c| c.id.clone())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildSpec {
    pub cap: usize,
    pub neg_ratio: f64,
    pub split: SplitSpec,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildSummary {
    pub candidates: usize,
    pub after_filter: usize,
    pub unlabeled: usize,
}

/// Full pipeline: retrieve, filter, label, balance, split. Pairs without a
/// gold label are dropped and counted in the summary.
pub fn build_pairs(
    g: &ConceptGraph,
    corpus: &ParseCorpus,
    labels: &BTreeMap<(String, String), u8>,
    freq: &WordFrequencyTable,
    spec: &BuildSpec,
) -> Result<(Vec<PairExample>, BuildSummary)> {
    let sentences = sentence_parses(corpus, g);
    let cands = candidate_map(g, &sentences)?;
    let filtered = redundancy_filter(&cands, g, freq, spec.cap)?;
    let mut summary = BuildSummary {
        candidates: cands.values().map(Vec::len).sum(),
        after_filter: filtered.values().map(Vec::len).sum(),
        unlabeled: 0,
    };
    let mut pairs = Vec::new();
    for (sentence, concepts) in &filtered {
        for c in concepts {
            match labels.get(&(c.clone(), sentence.clone())) {
                Some(&l) => pairs.push(PairExample::new(c, sentence, Some(l))),
                None => summary.unlabeled += 1,
            }
        }
    }
    let mut pairs = balance_negatives(pairs, spec.neg_ratio, spec.split.seed)?;
    make_splits(&mut pairs, &spec.split)?;
    Ok((pairs, summary))
}
