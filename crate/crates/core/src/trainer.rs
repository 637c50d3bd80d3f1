//! Training loop, warmup + cosine schedule, Adam, and F1/accuracy metrics.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::dataset_ops::PairExample;
use crate::error::{Error, Result};
use crate::hetgraph::PairGraphBuilder;
use crate::matcher::{Matcher, ModelKind, PairInput};
use crate::seed;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub base_lr: f64,
    pub warmup_fraction: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            base_lr: 1e-4,
            warmup_fraction: 0.10,
            batch_size: 8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Argument("epochs must be at least 1".into()));
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::Argument("base learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::Argument("warmup fraction must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn warmup_steps(&self, total_steps: usize) -> usize {
        (self.warmup_fraction * total_steps as f64).ceil() as usize
    }

    pub fn total_steps(&self, train_len: usize) -> usize {
        self.epochs * train_len.div_ceil(self.batch_size)
    }
}

/// Linear warmup to `base_lr`, then cosine decay towards zero.
pub fn lr_at(cfg: &TrainConfig, step: usize, total_steps: usize) -> Result<f64> {
    if step >= total_steps {
        return Err(Error::OutOfRange {
            index: step,
            len: total_steps,
        });
    }
    let w = cfg.warmup_steps(total_steps).min(total_steps);
    if step < w {
        return Ok(cfg.base_lr * step as f64 / w as f64);
    }
    let progress = (step - w) as f64 / (total_steps - w) as f64;
    Ok(cfg.base_lr * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos()))
}

/// Adam with β1 = 0.9, β2 = 0.999, ε = 1e-8.
#[derive(Clone, Debug)]
pub struct Adam {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: i32,
}

impl Adam {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPS: f64 = 1e-8;

    pub fn new(params: &[&Tensor]) -> Self {
        Adam {
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            t: 0,
        }
    }

    pub fn step(&mut self, params: Vec<&mut Tensor>, grads: &[Tensor], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let it = p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut());
            for (((x, &gr), mi), vi) in it {
                *mi = Self::BETA1 * *mi + (1.0 - Self::BETA1) * gr;
                *vi = Self::BETA2 * *vi + (1.0 - Self::BETA2) * gr * gr;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *x -= lr * mhat / (vhat.sqrt() + Self::EPS);
            }
        }
    }
}

/// One labelled, model-ready example.
#[derive(Clone, Debug)]
pub struct Example {
    pub pair_id: String,
    pub input: PairInput,
    pub label: u8,
}

/// Encodes labelled pairs for the given model kind, in input order.
pub fn make_examples(kind: ModelKind, builder: &PairGraphBuilder, pairs: &[&PairExample]) -> Result<Vec<Example>> {
    pairs
        .par_iter()
        .map(|p| {
            let label = p
                .label
                .ok_or_else(|| Error::Argument(format!("pair {} has no label", p.pair_id)))?;
            let input = match kind {
                ModelKind::GraphGraph => PairInput::graph_graph(&builder.build(&p.concept, &p.sentence)?)?,
                ModelKind::GraphSeq => {
                    let sentence = builder.sentence(&p.sentence)?;
                    let shared = builder.shared_entities(&p.concept, sentence)?;
                    let ctx = builder.concepts.context_subgraph(&p.concept, &shared, builder.hops)?;
                    PairInput::graph_seq(&ctx, &p.concept, sentence, builder.table)?
                }
                ModelKind::SeqSeq => {
                    let concept = builder
                        .concepts
                        .node(&p.concept)
                        .ok_or_else(|| Error::NotFound(format!("concept {}", p.concept)))?;
                    let sentence = builder.sentence(&p.sentence)?;
                    PairInput::seq_seq(&concept.surface, &sentence.forms(), builder.table)?
                }
            };
            Ok(Example {
                pair_id: p.pair_id.clone(),
                input,
                label,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u8, u8)>) -> Self {
        let mut c = Confusion::default();
        for (pred, gold) in pairs {
            match (pred == 1, gold == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `2PR/(P+R)`; zero when precision or recall is undefined or both are zero.
    pub fn f1(&self) -> f64 {
        let pd = self.tp + self.fp;
        let rd = self.tp + self.fn_;
        if pd == 0 || rd == 0 {
            return 0.0;
        }
        let p = self.tp as f64 / pd as f64;
        let r = self.tp as f64 / rd as f64;
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            0.0
        } else {
            (self.tp + self.tn) as f64 / n as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_f1: f64,
    pub val_acc: f64,
    pub lr_last: f64,
}

impl EpochRecord {
    /// `epoch train_loss val_f1 val_acc lr_last`
    pub fn log_line(&self) -> String {
        format!(
            "{} {:.10} {:.6} {:.6} {:.6e}",
            self.epoch, self.train_loss, self.val_f1, self.val_acc, self.lr_last
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub f1: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
    pub history: Vec<EpochRecord>,
}

impl EvalReport {
    pub fn from_confusion(confusion: Confusion) -> Self {
        EvalReport {
            f1: confusion.f1(),
            accuracy: confusion.accuracy(),
            confusion,
            history: Vec::new(),
        }
    }

    /// Key-value text block.
    pub fn to_text(&self) -> String {
        let c = &self.confusion;
        let mut s = String::new();
        let _ = writeln!(s, "f1 = {:.6}", self.f1);
        let _ = writeln!(s, "accuracy = {:.6}", self.accuracy);
        let _ = writeln!(s, "tp = {}", c.tp);
        let _ = writeln!(s, "fp = {}", c.fp);
        let _ = writeln!(s, "tn = {}", c.tn);
        let _ = writeln!(s, "fn = {}", c.fn_);
        let _ = writeln!(s, "examples = {}", c.total());
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub pair_id: String,
    pub probability: f64,
    pub predicted: u8,
    pub gold: u8,
}

impl Prediction {
    /// `pair_id<TAB>probability<TAB>predicted<TAB>gold`
    pub fn dump_line(&self) -> String {
        format!(
            "{}\t{:.6}\t{}\t{}",
            self.pair_id, self.probability, self.predicted, self.gold
        )
    }
}

pub const THRESHOLD: f64 = 0.5;

pub fn predict_all(model: &Matcher, set: &[Example]) -> Result<Vec<Prediction>> {
    set.par_iter()
        .map(|ex| {
            let p = model.probability(&ex.input)?;
            Ok(Prediction {
                pair_id: ex.pair_id.clone(),
                probability: p,
                predicted: u8::from(p >= THRESHOLD),
                gold: ex.label,
            })
        })
        .collect()
}

pub fn evaluate(model: &Matcher, set: &[Example]) -> Result<(EvalReport, Vec<Prediction>)> {
    if set.is_empty() {
        return Err(Error::Argument("cannot evaluate an empty example set".into()));
    }
    let preds = predict_all(model, set)?;
    let c = Confusion::from_pairs(preds.iter().map(|p| (p.predicted, p.gold)));
    Ok((EvalReport::from_confusion(c), preds))
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the best validation F1.
    pub model: Matcher,
    pub best_epoch: usize,
    pub report: EvalReport,
}

/// Trains with softmax cross-entropy and Adam, evaluating on `val` after
/// every epoch. Returns the snapshot with the highest validation F1, the
/// earliest such epoch on ties.
pub fn train(mut model: Matcher, train_set: &[Example], val_set: &[Example], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::Argument("empty training set".into()));
    }
    if val_set.is_empty() {
        return Err(Error::Argument("empty validation set".into()));
    }
    let total = cfg.total_steps(train_set.len());
    let mut adam = Adam::new(&model.params());
    let mut rng = seed::rng(cfg.seed, "shuffle");
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut step = 0usize;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Matcher, EvalReport)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut lr = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<(f64, Vec<Tensor>)> = batch
                .par_iter()
                .map(|&i| model.loss_and_grads(&train_set[i].input, train_set[i].label))
                .collect::<Result<_>>()?;
            lr = lr_at(cfg, step, total)?;
            let mut iter = results.into_iter();
            let (mut batch_loss, mut grads) = iter.next().expect("non-empty batch");
            for (l, g) in iter {
                batch_loss += l;
                for (acc, gi) in grads.iter_mut().zip(&g) {
                    acc.add_assign(gi)?;
                }
            }
            let k = 1.0 / batch.len() as f64;
            grads.iter_mut().for_each(|g| g.scale(k));
            if !batch_loss.is_finite() || grads.iter().any(|g| !g.all_finite()) {
                let norms: Vec<String> = model
                    .param_names()
                    .iter()
                    .zip(&grads)
                    .map(|(n, g)| format!("{n}={:.3e}", g.sq_norm().sqrt()))
                    .collect();
                return Err(Error::Numeric(format!(
                    "non-finite loss {batch_loss} at step {step} (lr {lr:.3e}); grad norms: {}",
                    norms.join(", ")
                )));
            }
            loss_sum += batch_loss;
            adam.step(model.params_mut(), &grads, lr);
            step += 1;
        }
        let (val, _) = evaluate(&model, val_set)?;
        let rec = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_f1: val.f1,
            val_acc: val.accuracy,
            lr_last: lr,
        };
        history.push(rec);
        if best.as_ref().is_none_or(|(f1, ..)| val.f1 > *f1) {
            best = Some((val.f1, epoch, model.clone(), val));
        }
    }
    let (_, best_epoch, snapshot, mut report) = best.expect("at least one epoch");
    report.history = history;
    Ok(TrainOutcome {
        model: snapshot,
        best_epoch,
        report,
    })
}
