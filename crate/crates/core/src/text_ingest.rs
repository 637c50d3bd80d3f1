//! Ingestion of pre-computed dependency parses and word vectors.
//!
//! Parse file layout (one block per sentence or concept phrase, token
//! fields tab-separated):
//!
//! ```text
//! #deprels root,nsubj,obj
//!
//! #id s1
//! #entities 2:2 Titanic
//! 1 watched VERB  None 0 root
//! 2 Titanic PROPN WORK 1 obj
//! ```
//!
//! Token indices and heads are 1-based in the file (head `0` is ROOT) and
//! 0-based in memory. Entity spans `i:j` are 1-based and inclusive.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

pub const NONE_TAG: &str = "None";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub pos: String,
    pub ner: String,
    /// `None` marks the ROOT token.
    pub head: Option<usize>,
    pub deprel: String,
}

/// Half-open token range `[start, end)` naming an entity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub entity: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyParse {
    pub id: String,
    pub tokens: Vec<Token>,
    pub named_entities: Vec<EntitySpan>,
}

impl DependencyParse {
    /// Checks head structure, span bounds and labels.
    pub fn validate(&self, deprels: &BTreeSet<String>) -> Result<()> {
        let id = &self.id;
        let n = self.tokens.len();
        if n == 0 {
            return Err(Error::Validation(format!("parse {id}: no tokens")));
        }
        for (i, t) in self.tokens.iter().enumerate() {
            if let Some(h) = t.head {
                if h >= n || h == i {
                    return Err(Error::Validation(format!(
                        "parse {id}: token {} has invalid head",
                        i + 1
                    )));
                }
            }
            if !deprels.contains(&t.deprel) {
                return Err(Error::Validation(format!(
                    "parse {id}: undeclared dependency label {:?}",
                    t.deprel
                )));
            }
        }
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while let Some(h) = self.tokens[cur].head {
                cur = h;
                steps += 1;
                if steps > n {
                    return Err(Error::Validation(format!(
                        "parse {id}: cyclic heads through token {}",
                        start + 1
                    )));
                }
            }
        }
        let roots = self.tokens.iter().filter(|t| t.head.is_none()).count();
        if roots != 1 {
            return Err(Error::Validation(format!(
                "parse {id}: expected exactly one ROOT token, found {roots}"
            )));
        }
        let mut spans: Vec<&EntitySpan> = self.named_entities.iter().collect();
        spans.sort_by_key(|s| s.start);
        for s in &spans {
            if s.start >= s.end || s.end > n {
                return Err(Error::Validation(format!(
                    "parse {id}: entity span for {} out of bounds",
                    s.entity
                )));
            }
        }
        for w in spans.windows(2) {
            if w[1].start < w[0].end {
                return Err(Error::Validation(format!(
                    "parse {id}: overlapping entity spans"
                )));
            }
        }
        Ok(())
    }

    pub fn forms(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.form.clone()).collect()
    }

    /// Entity ids mentioned in this parse.
    pub fn entity_ids(&self) -> BTreeSet<String> {
        self.named_entities.iter().map(|s| s.entity.clone()).collect()
    }

    /// Undirected tree distance between two tokens.
    pub fn tree_distance(&self, a: usize, b: usize) -> usize {
        let path = |mut t: usize| {
            let mut p = vec![t];
            while let Some(h) = self.tokens[t].head {
                t = h;
                p.push(t);
            }
            p
        };
        let pa = path(a);
        let pb = path(b);
        for (i, x) in pa.iter().enumerate() {
            if let Some(j) = pb.iter().position(|y| y == x) {
                return i + j;
            }
        }
        usize::MAX
    }
}

/// All parses of one file plus the declared label set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParseCorpus {
    /// Declared labels, in header order.
    pub deprels: Vec<String>,
    pub parses: BTreeMap<String, DependencyParse>,
}

impl ParseCorpus {
    pub fn new(deprels: Vec<String>, parses: Vec<DependencyParse>) -> Result<Self> {
        let set: BTreeSet<String> = deprels.iter().cloned().collect();
        if set.len() != deprels.len() {
            return Err(Error::Validation("duplicate dependency label in header".into()));
        }
        let mut map = BTreeMap::new();
        for p in parses {
            p.validate(&set)?;
            let id = p.id.clone();
            if map.insert(id.clone(), p).is_some() {
                return Err(Error::Validation(format!("duplicate parse id {id}")));
            }
        }
        Ok(ParseCorpus {
            deprels,
            parses: map,
        })
    }

    pub fn get(&self, id: &str) -> Option<&DependencyParse> {
        self.parses.get(id)
    }

    pub fn len(&self) -> usize {
        self.parses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parses.is_empty()
    }

    /// POS tags used anywhere, plus `None`, sorted.
    pub fn pos_tags(&self) -> Vec<String> {
        self.tag_set(|t| &t.pos)
    }

    pub fn ner_tags(&self) -> Vec<String> {
        self.tag_set(|t| &t.ner)
    }

    fn tag_set(&self, f: impl Fn(&Token) -> &String) -> Vec<String> {
        let mut set: BTreeSet<String> = self
            .parses
            .values()
            .flat_map(|p| p.tokens.iter().map(&f).cloned())
            .collect();
        set.insert(NONE_TAG.to_string());
        set.into_iter().collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "#deprels {}", self.deprels.join(","));
        for p in self.parses.values() {
            s.push('\n');
            let _ = writeln!(s, "#id {}", p.id);
            for e in &p.named_entities {
                let _ = writeln!(s, "#entities {}:{} {}", e.start + 1, e.end, e.entity);
            }
            for (i, t) in p.tokens.iter().enumerate() {
                let head = t.head.map_or(0, |h| h + 1);
                let _ = writeln!(
                    s,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    i + 1,
                    t.form,
                    t.pos,
                    t.ner,
                    head,
                    t.deprel
                );
            }
        }
        s
    }
}

pub fn load_parses(path: &Path) -> Result<ParseCorpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus_text(&text, path)
}

pub fn parse_corpus_text(text: &str, path: &Path) -> Result<ParseCorpus> {
    let mut deprels: Option<Vec<String>> = None;
    let mut parses = Vec::new();
    let mut cur: Option<DependencyParse> = None;

    let finish = |cur: &mut Option<DependencyParse>, out: &mut Vec<DependencyParse>| {
        if let Some(p) = cur.take() {
            out.push(p);
        }
    };

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            finish(&mut cur, &mut parses);
            continue;
        }
        if let Some(rest) = line.strip_prefix("#deprels") {
            if deprels.is_some() || cur.is_some() || !parses.is_empty() {
                return Err(Error::parse(path, lineno, "#deprels must appear once, before any parse"));
            }
            deprels = Some(
                rest.trim()
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect(),
            );
            continue;
        }
        if let Some(rest) = line.strip_prefix("#id") {
            finish(&mut cur, &mut parses);
            let id = rest.trim();
            if id.is_empty() {
                return Err(Error::parse(path, lineno, "empty parse id"));
            }
            cur = Some(DependencyParse {
                id: id.to_string(),
                tokens: Vec::new(),
                named_entities: Vec::new(),
            });
            continue;
        }
        if let Some(rest) = line.strip_prefix("#entities") {
            let p = cur
                .as_mut()
                .ok_or_else(|| Error::parse(path, lineno, "#entities outside a parse block"))?;
            let mut f = rest.split_whitespace();
            let (Some(span), Some(entity), None) = (f.next(), f.next(), f.next()) else {
                return Err(Error::parse(path, lineno, "expected `#entities i:j entity_id`"));
            };
            let (a, b) = span
                .split_once(':')
                .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
                .ok_or_else(|| Error::parse(path, lineno, format!("bad span {span:?}")))?;
            if a == 0 {
                return Err(Error::parse(path, lineno, "spans are 1-based"));
            }
            p.named_entities.push(EntitySpan {
                start: a - 1,
                end: b,
                entity: entity.to_string(),
            });
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let p = cur
            .as_mut()
            .ok_or_else(|| Error::parse(path, lineno, "token line outside a parse block"))?;
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 6 {
            return Err(Error::parse(path, lineno, "expected 6 tab-separated columns"));
        }
        let index: usize = f[0]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "bad token index"))?;
        if index != p.tokens.len() + 1 {
            return Err(Error::parse(path, lineno, "token indices must run 1..n"));
        }
        let head: usize = f[4]
            .parse()
            .map_err(|_| Error::parse(path, lineno, "bad head index"))?;
        p.tokens.push(Token {
            form: f[1].to_string(),
            pos: f[2].to_string(),
            ner: f[3].to_string(),
            head: head.checked_sub(1),
            deprel: f[5].to_string(),
        });
    }
    finish(&mut cur, &mut parses);

    let deprels = deprels.ok_or_else(|| Error::parse(path, 1, "missing #deprels header"))?;
    ParseCorpus::new(deprels, parses)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OovPolicy {
    #[default]
    ZeroVector,
    HashedRandom { seed: u64 },
}

/// word2vec-style lookup table with a fixed out-of-vocabulary policy.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    words: Vec<String>,
    vectors: Vec<f64>,
    index: HashMap<String, usize>,
    oov: OovPolicy,
}

impl EmbeddingTable {
    pub fn new(dim: usize, oov: OovPolicy) -> Self {
        EmbeddingTable {
            dim,
            words: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
            oov,
        }
    }

    /// Inserts a vector; a word already present keeps its first vector.
    pub fn insert(&mut self, word: &str, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Shape(format!(
                "vector for {word} has length {}, table dim {}",
                vector.len(),
                self.dim
            )));
        }
        if self.index.contains_key(word) {
            return Ok(false);
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.vectors.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn oov_policy(&self) -> OovPolicy {
        self.oov
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&i| &self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    /// Vector for `word`, resolving misses through the OOV policy.
    pub fn lookup(&self, word: &str) -> Vec<f64> {
        if let Some(v) = self.get(word) {
            return v.to_vec();
        }
        match self.oov {
            OovPolicy::ZeroVector => vec![0.0; self.dim],
            OovPolicy::HashedRandom { seed } => {
                let mut rng = seed::rng(seed, word);
                (0..self.dim).map(|_| rng.gen_range(-0.5..0.5)).collect()
            }
        }
    }

    /// Element-wise mean of the words' vectors.
    ///
    /// Summation runs in sorted word order so the result does not depend on
    /// the order of `words`.
    pub fn phrase_embedding<S: AsRef<str>>(&self, words: &[S]) -> Result<Vec<f64>> {
        if words.is_empty() {
            return Err(Error::Argument("phrase_embedding of an empty word list".into()));
        }
        let mut sorted: Vec<&str> = words.iter().map(AsRef::as_ref).collect();
        sorted.sort_unstable();
        let mut acc = vec![0.0; self.dim];
        for w in sorted {
            for (a, v) in acc.iter_mut().zip(self.lookup(w)) {
                *a += v;
            }
        }
        let n = words.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Ok(acc)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.words.len(), self.dim);
        for (i, w) in self.words.iter().enumerate() {
            s.push_str(w);
            for v in &self.vectors[i * self.dim..(i + 1) * self.dim] {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

pub fn load_embeddings(path: &Path, oov: OovPolicy) -> Result<EmbeddingTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings_text(&text, path, oov)
}

pub fn parse_embeddings_text(text: &str, path: &Path, oov: OovPolicy) -> Result<EmbeddingTable> {
    let mut lines = text.lines().enumerate();
    let (count, dim) = loop {
        match lines.next() {
            None => return Err(Error::parse(path, 1, "missing `count dim` header")),
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => {
                let mut f = l.split_whitespace();
                let parsed = (|| {
                    let c: usize = f.next()?.parse().ok()?;
                    let d: usize = f.next()?.parse().ok()?;
                    f.next().is_none().then_some((c, d))
                })();
                break parsed.ok_or_else(|| Error::parse(path, i + 1, "bad `count dim` header"))?;
            }
        }
    };
    let mut table = EmbeddingTable::new(dim, oov);
    let mut rows = 0usize;
    let mut buf = Vec::with_capacity(dim);
    for (i, l) in lines {
        let l = l.trim_end_matches('\r');
        if l.trim().is_empty() {
            continue;
        }
        let mut f = l.split(' ').filter(|s| !s.is_empty());
        let word = f.next().unwrap_or_default();
        buf.clear();
        for tok in f {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad number {tok:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, i + 1, "non-finite value"));
            }
            buf.push(v);
        }
        if buf.len() != dim {
            return Err(Error::parse(
                path,
                i + 1,
                format!("row has {} values, header dim is {dim}", buf.len()),
            ));
        }
        table.insert(word, &buf)?;
        rows += 1;
    }
    if rows != count {
        return Err(Error::parse(
            path,
            1,
            format!("header declares {count} rows, file has {rows}"),
        ));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("<mem>")
    }

    const TWO_TOKEN: &str = "#deprels root,obj\n\n#id s1\n#entities 2:2 Titanic\n1\twatched\tVERB\tNone\t0\troot\n2\tTitanic\tPROPN\tWORK\t1\tobj\n";

    #[test]
    fn minimal_parse() {
        let c = parse_corpus_text(TWO_TOKEN, &p()).unwrap();
        let s = c.get("s1").unwrap();
        assert_eq!(s.tokens[0].head, None);
        assert_eq!(s.tokens[1].head, Some(0));
        assert_eq!(s.named_entities[0].start, 1);
        assert_eq!(s.named_entities[0].end, 2);
        assert_eq!(c.to_text(), TWO_TOKEN);
    }

    #[test]
    fn cyclic_heads_rejected() {
        let t = "#deprels dep\n#id bad\n1\ta\tX\tNone\t2\tdep\n2\tb\tX\tNone\t1\tdep\n";
        match parse_corpus_text(t, &p()) {
            Err(Error::Validation(m)) => {
                assert!(m.contains("bad"));
                assert!(m.contains("cyclic"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_root_and_bad_span() {
        let no_root = "#deprels dep\n#id x\n1\ta\tX\tNone\t1\tdep\n";
        assert!(parse_corpus_text(no_root, &p()).is_err());
        let bad_span = "#deprels root\n#id y\n#entities 1:3 E\n1\ta\tX\tNone\t0\troot\n";
        assert!(matches!(parse_corpus_text(bad_span, &p()), Err(Error::Validation(_))));
        let overlap = "#deprels root,dep\n#id z\n#entities 1:2 E\n#entities 2:2 F\n1\ta\tX\tNone\t0\troot\n2\tb\tX\tNone\t1\tdep\n";
        assert!(parse_corpus_text(overlap, &p()).is_err());
    }

    #[test]
    fn undeclared_label_rejected() {
        let t = "#deprels root\n#id x\n1\ta\tX\tNone\t0\troot\n2\tb\tX\tNone\t1\tobj\n";
        assert!(matches!(parse_corpus_text(t, &p()), Err(Error::Validation(_))));
    }

    #[test]
    fn three_parses() {
        let mut t = String::from("#deprels root\n");
        for id in ["a", "b", "c"] {
            t.push_str(&format!("\n#id {id}\n1\tw\tX\tNone\t0\troot\n"));
        }
        assert_eq!(parse_corpus_text(&t, &p()).unwrap().len(), 3);
    }

    #[test]
    fn embeddings_basic() {
        let t = "2 3\na 1 2 3\nb 0.5 0 -1\n";
        let e = parse_embeddings_text(t, &p(), OovPolicy::ZeroVector).unwrap();
        assert_eq!(e.dim(), 3);
        assert_eq!(e.len(), 2);
        assert_eq!(e.lookup("zzz"), vec![0.0; 3]);
        assert_eq!(e.to_text(), t);
    }

    #[test]
    fn embeddings_duplicate_keeps_first() {
        let t = "2 1\na 1\na 2\n";
        let e = parse_embeddings_text(t, &p(), OovPolicy::ZeroVector).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.get("a"), Some(&[1.0][..]));
    }

    #[test]
    fn embeddings_row_length_error_has_line() {
        let t = "2 3\na 1 2 3\nb 1 2\n";
        match parse_embeddings_text(t, &p(), OovPolicy::ZeroVector) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hashed_oov_is_deterministic() {
        let e = EmbeddingTable::new(4, OovPolicy::HashedRandom { seed: 7 });
        let a = e.lookup("unseen");
        assert_eq!(a, e.lookup("unseen"));
        assert_ne!(a, vec![0.0; 4]);
        assert_ne!(a, e.lookup("other"));
    }

    #[test]
    fn phrase_embedding_cases() {
        let mut e = EmbeddingTable::new(2, OovPolicy::ZeroVector);
        e.insert("x", &[1.0, 0.0]).unwrap();
        e.insert("y", &[0.0, 1.0]).unwrap();
        e.insert("z", &[3.0, 3.0]).unwrap();
        assert_eq!(e.phrase_embedding(&["z"]).unwrap(), vec![3.0, 3.0]);
        assert_eq!(e.phrase_embedding(&["x", "y"]).unwrap(), vec![0.5, 0.5]);
        // (1,0) + (3,3) + (0,0) over three words
        assert_eq!(
            e.phrase_embedding(&["x", "oov", "z"]).unwrap(),
            vec![4.0 / 3.0, 1.0]
        );
        assert!(matches!(
            e.phrase_embedding::<&str>(&[]),
            Err(Error::Argument(_))
        ));
    }
}
