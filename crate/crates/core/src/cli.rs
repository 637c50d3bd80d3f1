//! Subcommand implementations. Each takes a resolved [`RunConfig`], writes
//! its files, and returns the text it would print.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::checkpoint::{self, CheckpointMeta};
use crate::concept_graph::ConceptGraph;
use crate::config::RunConfig;
use crate::dataset_ops::{self, BuildSpec, PairExample, Split, SplitSpec, WordFrequencyTable};
use crate::error::{Error, Result};
use crate::hetgraph::PairGraphBuilder;
use crate::matcher::{Matcher, ModelConfig, ModelKind};
use crate::synth;
use crate::text_ingest::{self, EmbeddingTable, ParseCorpus};
use crate::trainer::{self, Example, TrainConfig};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOG_FILE: &str = "train.log";
pub const REPORT_FILE: &str = "report.txt";
pub const PREDICTIONS_FILE: &str = "predictions.tsv";
pub const EVAL_FILE: &str = "eval.txt";
pub const STATS_FILE: &str = "stats.txt";
pub const SYNTH_CONFIG_FILE: &str = "synth.conf";

/// Inputs shared by build, train and eval.
pub struct Inputs {
    pub graph: ConceptGraph,
    pub parses: ParseCorpus,
    pub table: EmbeddingTable,
}

impl Inputs {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let edges = cfg.require("edges", &cfg.edges)?;
        let parses = cfg.require("parses", &cfg.parses)?;
        let embeddings = cfg.require("embeddings", &cfg.embeddings)?;
        let nodes = cfg.input(&cfg.nodes);
        let nodes = (!cfg.nodes.is_empty() && nodes.is_file()).then_some(nodes);
        Ok(Inputs {
            graph: ConceptGraph::load(&edges, nodes.as_deref())?,
            parses: text_ingest::load_parses(&parses)?,
            table: text_ingest::load_embeddings(&embeddings, cfg.oov_policy())?,
        })
    }

    pub fn builder(&self, cfg: &RunConfig) -> Result<PairGraphBuilder<'_>> {
        PairGraphBuilder::new(&self.graph, &self.parses, &self.table, cfg.hops)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_pairs(cfg: &RunConfig) -> Result<Vec<PairExample>> {
    let p = cfg.require("pairs", &cfg.pairs)?;
    dataset_ops::read_pairs(&p)
}

pub fn model_config(cfg: &RunConfig, builder: &PairGraphBuilder) -> ModelConfig {
    let mut m = ModelConfig::for_kind(
        cfg.model,
        builder.feature_width(),
        builder.table.dim(),
        cfg.hidden,
        cfg.bases(),
        builder.vocab.len(),
    );
    if cfg.model != ModelKind::SeqSeq {
        m.layers = cfg.layers;
    }
    m.decomposition = cfg.decomposition();
    m.final_activation = cfg.final_activation;
    m
}

fn split_pairs(pairs: &[PairExample], split: Split) -> Vec<&PairExample> {
    pairs.iter().filter(|p| p.split == split).collect()
}

fn model_label(kind: ModelKind) -> String {
    match kind {
        ModelKind::SeqSeq => format!("{kind} (mean word-vector encoder standing in for a pretrained language model)"),
        _ => kind.to_string(),
    }
}

/// Retrieves, filters, labels, balances and splits pairs; writes the pairs
/// file and a stats table.
pub fn cmd_build(cfg: &RunConfig) -> Result<String> {
    let inputs = Inputs::load(cfg)?;
    let labels = dataset_ops::read_labels(&cfg.require("labels", &cfg.labels)?)?;
    let freq = if cfg.freq.is_empty() {
        WordFrequencyTable::from_parses(dataset_ops::sentence_parses(&inputs.parses, &inputs.graph))
    } else {
        WordFrequencyTable::load(&cfg.require("freq", &cfg.freq)?)?
    };
    let spec = BuildSpec {
        cap: cfg.cap,
        neg_ratio: cfg.neg_ratio,
        split: SplitSpec {
            mode: cfg.split_mode,
            train_frac: cfg.train_frac,
            test_frac: cfg.test_frac,
            val_size: cfg.val_size,
            seed: cfg.seed,
        },
    };
    let (pairs, summary) = dataset_ops::build_pairs(&inputs.graph, &inputs.parses, &labels, &freq, &spec)?;
    let pairs_path = cfg.input(&cfg.pairs);
    write(&pairs_path, &dataset_ops::pairs_to_jsonl(&pairs))?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "candidates {} after_filter {} unlabeled {} kept {}",
        summary.candidates,
        summary.after_filter,
        summary.unlabeled,
        pairs.len()
    );
    out.push_str(&dataset_ops::stats_report(&pairs, &inputs.graph));
    write(&cfg.output(STATS_FILE), &out)?;
    let _ = writeln!(out, "wrote {}", pairs_path.display());
    Ok(out)
}

/// One finished training run.
#[derive(Clone, Debug)]
pub struct RunScore {
    pub seed: u64,
    pub best_epoch: usize,
    pub val_f1: f64,
    pub test_f1: f64,
    pub test_acc: f64,
}

fn train_once(
    cfg: &RunConfig,
    mcfg: &ModelConfig,
    seed: u64,
    train: &[Example],
    val: &[Example],
    test: &[Example],
) -> Result<(Matcher, String, RunScore)> {
    let model = Matcher::new(mcfg.clone(), seed)?;
    let tcfg = TrainConfig {
        epochs: cfg.epochs(),
        base_lr: cfg.lr,
        warmup_fraction: cfg.warmup,
        batch_size: cfg.batch,
        seed,
    };
    let out = trainer::train(model, train, val, &tcfg)?;
    let (test_report, _) = trainer::evaluate(&out.model, test)?;
    let log: String = out
        .report
        .history
        .iter()
        .map(|r| r.log_line() + "\n")
        .collect();
    let score = RunScore {
        seed,
        best_epoch: out.best_epoch,
        val_f1: out.report.f1,
        test_f1: test_report.f1,
        test_acc: test_report.accuracy,
    };
    Ok((out.model, log, score))
}

/// Trains `repeats` seeded runs. The first run writes `model.ckpt` and
/// `train.log`; later runs add a `.seed<N>` suffix.
pub fn cmd_train(cfg: &RunConfig) -> Result<String> {
    if cfg.repeats == 0 {
        return Err(Error::Usage("repeats must be at least 1".into()));
    }
    let inputs = Inputs::load(cfg)?;
    let pairs = load_pairs(cfg)?;
    let builder = inputs.builder(cfg)?;
    let mcfg = model_config(cfg, &builder);
    mcfg.validate()?;
    let encode = |s: Split| trainer::make_examples(cfg.model, &builder, &split_pairs(&pairs, s));
    let (train, val, test) = (encode(Split::Train)?, encode(Split::Val)?, encode(Split::Test)?);
    if test.is_empty() {
        return Err(Error::Argument("pairs file has no test split".into()));
    }
    let meta = |seed| CheckpointMeta {
        seed,
        pos_vocab: builder.pos.tags().to_vec(),
        ner_vocab: builder.ner.tags().to_vec(),
    };

    let mut report = String::new();
    let _ = writeln!(report, "model = {}", model_label(cfg.model));
    let _ = writeln!(report, "parameters = {}", mcfg.param_count());
    let _ = writeln!(
        report,
        "pairs = train {} val {} test {}",
        train.len(),
        val.len(),
        test.len()
    );
    let mut scores = Vec::with_capacity(cfg.repeats);
    for k in 0..cfg.repeats {
        let seed = cfg.seed + k as u64;
        let (model, log, score) = train_once(cfg, &mcfg, seed, &train, &val, &test)?;
        let suffix = if k == 0 { String::new() } else { format!(".seed{seed}") };
        write(
            &cfg.output(&format!("{CHECKPOINT_FILE}{suffix}")),
            &checkpoint::to_text(&model, &meta(seed)),
        )?;
        write(&cfg.output(&format!("{LOG_FILE}{suffix}")), &log)?;
        let _ = writeln!(
            report,
            "run seed {} best_epoch {} val_f1 {:.6} test_f1 {:.6} test_acc {:.6}",
            score.seed, score.best_epoch, score.val_f1, score.test_f1, score.test_acc
        );
        scores.push(score);
    }
    let n = scores.len() as f64;
    let _ = writeln!(
        report,
        "mean test_f1 {:.6} test_acc {:.6} over {} runs",
        scores.iter().map(|s| s.test_f1).sum::<f64>() / n,
        scores.iter().map(|s| s.test_acc).sum::<f64>() / n,
        scores.len()
    );
    write(&cfg.output(REPORT_FILE), &report)?;
    Ok(report)
}

/// Scores `eval_split` with the saved checkpoint and dumps predictions.
pub fn cmd_eval(cfg: &RunConfig) -> Result<String> {
    let ckpt = cfg.output(CHECKPOINT_FILE);
    if !ckpt.is_file() {
        return Err(Error::Usage(format!("checkpoint not found: {}", ckpt.display())));
    }
    let (model, meta) = checkpoint::load(&ckpt)?;
    let inputs = Inputs::load(cfg)?;
    let pairs = load_pairs(cfg)?;
    let builder = inputs.builder(cfg)?;
    check_compatible(&model.config, &meta, &builder)?;

    let selected = split_pairs(&pairs, cfg.eval_split);
    if selected.is_empty() {
        return Err(Error::Argument(format!("split {} is empty", cfg.eval_split)));
    }
    let examples = trainer::make_examples(model.config.kind, &builder, &selected)?;
    let (report, preds) = trainer::evaluate(&model, &examples)?;
    let dump: String = preds.iter().map(|p| p.dump_line() + "\n").collect();
    write(&cfg.output(PREDICTIONS_FILE), &dump)?;
    let mut out = format!("model = {}\nsplit = {}\n", model_label(model.config.kind), cfg.eval_split);
    out.push_str(&report.to_text());
    write(&cfg.output(EVAL_FILE), &out)?;
    Ok(out)
}

fn check_compatible(m: &ModelConfig, meta: &CheckpointMeta, builder: &PairGraphBuilder) -> Result<()> {
    let mismatch = |what: &str, ckpt: String, data: String| {
        Err(Error::Validation(format!(
            "checkpoint {what} ({ckpt}) does not match the data ({data})"
        )))
    };
    if m.embedding_dim != builder.table.dim() {
        return mismatch("embedding dim", m.embedding_dim.to_string(), builder.table.dim().to_string());
    }
    if m.kind == ModelKind::GraphGraph {
        if m.input_dim != builder.feature_width() {
            return mismatch("feature width", m.input_dim.to_string(), builder.feature_width().to_string());
        }
        if m.num_relations != builder.vocab.len() {
            return mismatch("relation count", m.num_relations.to_string(), builder.vocab.len().to_string());
        }
        if meta.pos_vocab != builder.pos.tags() || meta.ner_vocab != builder.ner.tags() {
            return mismatch("tag vocabulary", meta.pos_vocab.join(" "), builder.pos.tags().join(" "));
        }
    }
    Ok(())
}

/// Writes a synthetic corpus and a `synth.conf` that runs build/train/eval
/// on it.
pub fn cmd_synth(cfg: &RunConfig) -> Result<String> {
    let corpus = synth::generate(&cfg.synth_config())?;
    corpus.write(&cfg.data_dir)?;
    let mut conf = cfg.clone();
    for (k, v) in [
        ("edges", synth::EDGES_FILE),
        ("nodes", synth::NODES_FILE),
        ("parses", synth::PARSES_FILE),
        ("embeddings", synth::EMBEDDINGS_FILE),
        ("labels", synth::LABELS_FILE),
        ("freq", ""),
    ] {
        conf.set(k, v)?;
    }
    if cfg.hidden == 128 {
        conf.hidden = 32;
    }
    if cfg.val_size == 1000 {
        conf.val_size = 100;
    }
    let text = format!("# synthetic corpus, seed {}\n{}", cfg.seed, conf.to_text());
    write(&cfg.input(SYNTH_CONFIG_FILE), &text)?;
    let pos = corpus.labels.iter().filter(|l| l.2 == 1).count();
    Ok(format!(
        "concepts {} entities {} sentences {} labelled pairs {} positive {}\nwrote {}\n",
        corpus.graph.concepts().count(),
        corpus.graph.node_count() - corpus.graph.concepts().count(),
        cfg.synth.sentences,
        corpus.labels.len(),
        pos,
        cfg.input(SYNTH_CONFIG_FILE).display()
    ))
}

/// Stats table for the pairs file against the concept graph.
pub fn cmd_stats(cfg: &RunConfig) -> Result<String> {
    let edges = cfg.require("edges", &cfg.edges)?;
    let nodes = cfg.input(&cfg.nodes);
    let nodes = (!cfg.nodes.is_empty() && nodes.is_file()).then_some(nodes);
    let graph = ConceptGraph::load(&edges, nodes.as_deref())?;
    let pairs = load_pairs(cfg)?;
    let mut out = format!(
        "graph: {} nodes ({} concepts), {} isA edges\n",
        graph.node_count(),
        graph.concepts().count(),
        graph.edge_count()
    );
    out.push_str(&dataset_ops::stats_report(&pairs, &graph));
    Ok(out)
}
