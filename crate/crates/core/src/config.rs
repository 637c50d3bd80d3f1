//! Flat `key = value` run configuration shared by every subcommand.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset_ops::{Split, SplitMode};
use crate::error::{Error, Result};
use crate::matcher::ModelKind;
use crate::rgcn::Decomposition;
use crate::synth::SynthConfig;
use crate::text_ingest::OovPolicy;

/// `(key, default, description)` for every accepted key, in echo order.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("data_dir", ".", "directory holding inputs and the pairs file"),
    ("out_dir", ".", "directory for checkpoints, logs, reports and predictions"),
    ("edges", "concept_edges.tsv", "concept graph edge list"),
    ("nodes", "concept_nodes.tsv", "concept graph node file (optional)"),
    ("parses", "parses.conll", "dependency parses of sentences and concepts"),
    ("embeddings", "embeddings.txt", "word vectors, word2vec text format"),
    ("labels", "labels.jsonl", "gold labels, JSON lines"),
    ("freq", "", "word frequency table; empty = count over the corpus"),
    ("pairs", "pairs.jsonl", "pairs file written by build"),
    ("model", "graph-graph", "graph-graph | graph-seq | seq-seq"),
    ("hidden", "128", "R-GCN hidden width"),
    ("layers", "3", "R-GCN layer count"),
    ("decomposition", "basis", "basis | block"),
    ("bases", "auto", "basis/block count; auto = 14 graph-graph, 2 otherwise"),
    ("final_activation", "true", "ReLU on the last R-GCN layer"),
    ("hops", "1", "concept-graph context radius"),
    ("oov", "zero", "zero | hashed"),
    ("oov_seed", "0", "seed for hashed OOV vectors"),
    ("epochs", "auto", "auto = 50 graph-seq, 20 otherwise"),
    ("lr", "0.0001", "peak learning rate"),
    ("warmup", "0.1", "warmup share of total steps"),
    ("batch", "8", "batch size"),
    ("seed", "1", "root seed"),
    ("repeats", "1", "independent seeded training runs"),
    ("split_mode", "random", "random | non-overlapped"),
    ("train_frac", "0.8", "train share before carving validation"),
    ("test_frac", "0.2", "test share"),
    ("val_size", "1000", "validation pairs carved from train"),
    ("neg_ratio", "1.0", "negatives kept per positive"),
    ("cap", "4", "max concepts kept per sentence"),
    ("eval_split", "test", "split scored by eval: train | val | test"),
    ("synth_concepts", "50", "synthetic concepts (top-level included)"),
    ("synth_top_concepts", "5", "synthetic top-level concepts"),
    ("synth_sentences", "400", "synthetic sentences"),
    ("synth_entities", "4", "entities per synthetic leaf concept"),
    ("synth_dim", "16", "synthetic word-vector width"),
    ("synth_two_clause", "0.6", "probability of a two-clause sentence"),
    ("synth_negation", "0.7", "probability that a sentence carries a negation"),
    ("synth_shared", "0.3", "probability that an entity has a second concept"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub edges: String,
    pub nodes: String,
    pub parses: String,
    pub embeddings: String,
    pub labels: String,
    pub freq: String,
    pub pairs: String,
    pub model: ModelKind,
    pub hidden: usize,
    pub layers: usize,
    pub decomposition: String,
    pub bases: Option<usize>,
    pub final_activation: bool,
    pub hops: usize,
    pub oov: String,
    pub oov_seed: u64,
    pub epochs: Option<usize>,
    pub lr: f64,
    pub warmup: f64,
    pub batch: usize,
    pub seed: u64,
    pub repeats: usize,
    pub split_mode: SplitMode,
    pub train_frac: f64,
    pub test_frac: f64,
    pub val_size: usize,
    pub neg_ratio: f64,
    pub cap: usize,
    pub eval_split: Split,
    pub synth: SynthConfig,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Usage(format!("invalid value {value:?} for `{key}`")))
}

fn auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn show_auto<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or("auto".into(), T::to_string)
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut c = RunConfig {
            data_dir: PathBuf::new(),
            out_dir: PathBuf::new(),
            edges: String::new(),
            nodes: String::new(),
            parses: String::new(),
            embeddings: String::new(),
            labels: String::new(),
            freq: String::new(),
            pairs: String::new(),
            model: ModelKind::GraphGraph,
            hidden: 0,
            layers: 0,
            decomposition: String::new(),
            bases: None,
            final_activation: true,
            hops: 0,
            oov: String::new(),
            oov_seed: 0,
            epochs: None,
            lr: 0.0,
            warmup: 0.0,
            batch: 0,
            seed: 0,
            repeats: 0,
            split_mode: SplitMode::Random,
            train_frac: 0.0,
            test_frac: 0.0,
            val_size: 0,
            neg_ratio: 0.0,
            cap: 0,
            eval_split: Split::Test,
            synth: SynthConfig::default(),
        };
        for (k, v, _) in KEYS {
            c.set(k, v).expect("defaults parse");
        }
        c
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "data_dir" => self.data_dir = PathBuf::from(v),
            "out_dir" => self.out_dir = PathBuf::from(v),
            "edges" => self.edges = v.into(),
            "nodes" => self.nodes = v.into(),
            "parses" => self.parses = v.into(),
            "embeddings" => self.embeddings = v.into(),
            "labels" => self.labels = v.into(),
            "freq" => self.freq = v.into(),
            "pairs" => self.pairs = v.into(),
            "model" => self.model = v.parse()?,
            "hidden" => self.hidden = parse(key, v)?,
            "layers" => self.layers = parse(key, v)?,
            "decomposition" => {
                if v != "basis" && v != "block" {
                    return Err(Error::Usage(format!("decomposition must be basis or block, got {v:?}")));
                }
                self.decomposition = v.into();
            }
            "bases" => self.bases = auto(key, v)?,
            "final_activation" => self.final_activation = parse(key, v)?,
            "hops" => self.hops = parse(key, v)?,
            "oov" => {
                if v != "zero" && v != "hashed" {
                    return Err(Error::Usage(format!("oov must be zero or hashed, got {v:?}")));
                }
                self.oov = v.into();
            }
            "oov_seed" => self.oov_seed = parse(key, v)?,
            "epochs" => self.epochs = auto(key, v)?,
            "lr" => self.lr = parse(key, v)?,
            "warmup" => self.warmup = parse(key, v)?,
            "batch" => self.batch = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "repeats" => self.repeats = parse(key, v)?,
            "split_mode" => self.split_mode = v.parse()?,
            "train_frac" => self.train_frac = parse(key, v)?,
            "test_frac" => self.test_frac = parse(key, v)?,
            "val_size" => self.val_size = parse(key, v)?,
            "neg_ratio" => self.neg_ratio = parse(key, v)?,
            "cap" => self.cap = parse(key, v)?,
            "eval_split" => self.eval_split = v.parse()?,
            "synth_concepts" => self.synth.concepts = parse(key, v)?,
            "synth_top_concepts" => self.synth.top_concepts = parse(key, v)?,
            "synth_sentences" => self.synth.sentences = parse(key, v)?,
            "synth_entities" => self.synth.entities_per_concept = parse(key, v)?,
            "synth_dim" => self.synth.embedding_dim = parse(key, v)?,
            "synth_two_clause" => self.synth.two_clause_prob = parse(key, v)?,
            "synth_negation" => self.synth.negation_prob = parse(key, v)?,
            "synth_shared" => self.synth.shared_entity_prob = parse(key, v)?,
            _ => return Err(Error::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "data_dir" => self.data_dir.display().to_string(),
            "out_dir" => self.out_dir.display().to_string(),
            "edges" => self.edges.clone(),
            "nodes" => self.nodes.clone(),
            "parses" => self.parses.clone(),
            "embeddings" => self.embeddings.clone(),
            "labels" => self.labels.clone(),
            "freq" => self.freq.clone(),
            "pairs" => self.pairs.clone(),
            "model" => self.model.to_string(),
            "hidden" => self.hidden.to_string(),
            "layers" => self.layers.to_string(),
            "decomposition" => self.decomposition.clone(),
            "bases" => show_auto(&self.bases),
            "final_activation" => self.final_activation.to_string(),
            "hops" => self.hops.to_string(),
            "oov" => self.oov.clone(),
            "oov_seed" => self.oov_seed.to_string(),
            "epochs" => show_auto(&self.epochs),
            "lr" => self.lr.to_string(),
            "warmup" => self.warmup.to_string(),
            "batch" => self.batch.to_string(),
            "seed" => self.seed.to_string(),
            "repeats" => self.repeats.to_string(),
            "split_mode" => self.split_mode.as_str().into(),
            "train_frac" => self.train_frac.to_string(),
            "test_frac" => self.test_frac.to_string(),
            "val_size" => self.val_size.to_string(),
            "neg_ratio" => self.neg_ratio.to_string(),
            "cap" => self.cap.to_string(),
            "eval_split" => self.eval_split.to_string(),
            "synth_concepts" => self.synth.concepts.to_string(),
            "synth_top_concepts" => self.synth.top_concepts.to_string(),
            "synth_sentences" => self.synth.sentences.to_string(),
            "synth_entities" => self.synth.entities_per_concept.to_string(),
            "synth_dim" => self.synth.embedding_dim.to_string(),
            "synth_two_clause" => self.synth.two_clause_prob.to_string(),
            "synth_negation" => self.synth.negation_prob.to_string(),
            "synth_shared" => self.synth.shared_entity_prob.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, i + 1, "expected `key = value`"))?;
            self.set(k.trim(), v).map_err(|e| match e {
                Error::Usage(msg) => Error::Usage(format!("{}:{}: {msg}", path.display(), i + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text, path)
    }

    /// Every key with its resolved value, one `key = value` per line.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|(k, _, _)| format!("{k} = {}\n", self.get(k).expect("listed key")))
            .collect()
    }

    pub fn input(&self, name: &str) -> PathBuf {
        self.data_dir.join(name)
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    /// Path of an input that must exist; a missing file is a usage error.
    pub fn require(&self, key: &str, name: &str) -> Result<PathBuf> {
        let p = self.input(name);
        if name.is_empty() || !p.is_file() {
            return Err(Error::Usage(format!("`{key}` file not found: {}", p.display())));
        }
        Ok(p)
    }

    pub fn bases(&self) -> usize {
        self.bases.unwrap_or_else(|| self.model.default_bases())
    }

    pub fn epochs(&self) -> usize {
        self.epochs.unwrap_or_else(|| self.model.default_epochs())
    }

    pub fn decomposition(&self) -> Decomposition {
        if self.decomposition == "block" {
            Decomposition::Block(self.bases())
        } else {
            Decomposition::Basis(self.bases())
        }
    }

    pub fn oov_policy(&self) -> OovPolicy {
        if self.oov == "hashed" {
            OovPolicy::HashedRandom { seed: self.oov_seed }
        } else {
            OovPolicy::ZeroVector
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            ..self.synth.clone()
        }
    }
}
