//! Text checkpoint: a `key value` manifest, then one `tensor` line per
//! parameter as `tensor <name> <shape> <values…>`.
//!
//! Values use Rust's shortest round-trip formatting, so a reload reproduces
//! every parameter bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matcher::{Matcher, ModelConfig, ModelKind};
use crate::rgcn::Decomposition;
use crate::tensor::Tensor;

const MAGIC: &str = "graphmatch-checkpoint 1";

/// Manifest fields that are not part of the model configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub pos_vocab: Vec<String>,
    pub ner_vocab: Vec<String>,
}

pub fn to_text(model: &Matcher, meta: &CheckpointMeta) -> String {
    let c = &model.config;
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "model {}", c.kind);
    let _ = writeln!(s, "layers {}", c.layers);
    let (mode, b) = match c.decomposition {
        Decomposition::Basis(b) => ("basis", b),
        Decomposition::Block(b) => ("block", b),
    };
    let _ = writeln!(s, "mode {mode} {b}");
    let _ = writeln!(
        s,
        "dims {} {} {}",
        c.input_dim, c.embedding_dim, c.hidden_dim
    );
    let _ = writeln!(s, "relations {}", c.num_relations);
    let _ = writeln!(s, "seed {}", meta.seed);
    let _ = writeln!(s, "final_activation {}", c.final_activation);
    let _ = writeln!(s, "pos_vocab {}", meta.pos_vocab.join(" "));
    let _ = writeln!(s, "ner_vocab {}", meta.ner_vocab.join(" "));
    for (name, t) in model.param_names().iter().zip(model.params()) {
        let shape: Vec<String> = t.shape().iter().map(usize::to_string).collect();
        let _ = write!(s, "tensor {name} {}", shape.join(","));
        for v in t.data() {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    s
}

pub fn save(path: &Path, model: &Matcher, meta: &CheckpointMeta) -> Result<()> {
    fs::write(path, to_text(model, meta)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(Matcher, CheckpointMeta)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text, path)
}

pub fn from_text(text: &str, path: &Path) -> Result<(Matcher, CheckpointMeta)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        _ => return Err(Error::parse(path, 1, format!("expected header {MAGIC:?}"))),
    }
    let mut kind = None;
    let mut layers = None;
    let mut mode = None;
    let mut dims = None;
    let mut relations = None;
    let mut final_activation = None;
    let mut meta = CheckpointMeta::default();
    let mut tensors: Vec<(usize, String, Tensor)> = Vec::new();

    for (i, line) in lines {
        let ln = i + 1;
        let bad = |msg: String| Error::parse(path, ln, msg);
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        let fields: Vec<&str> = rest.split_whitespace().collect();
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad(format!("bad integer {s:?}")));
        match key {
            "model" => kind = Some(rest.parse::<ModelKind>().map_err(|e| bad(e.to_string()))?),
            "layers" => layers = Some(num(rest)?),
            "mode" => {
                let [m, b] = fields[..] else {
                    return Err(bad("expected `mode <basis|block> <count>`".into()));
                };
                mode = Some(match m {
                    "basis" => Decomposition::Basis(num(b)?),
                    "block" => Decomposition::Block(num(b)?),
                    _ => return Err(bad(format!("unknown mode {m:?}"))),
                });
            }
            "dims" => {
                let [a, b, c] = fields[..] else {
                    return Err(bad("expected `dims <input> <embedding> <hidden>`".into()));
                };
                dims = Some((num(a)?, num(b)?, num(c)?));
            }
            "relations" => relations = Some(num(rest)?),
            "seed" => meta.seed = rest.parse().map_err(|_| bad(format!("bad seed {rest:?}")))?,
            "final_activation" => {
                final_activation = Some(rest.parse::<bool>().map_err(|_| bad(format!("bad flag {rest:?}")))?)
            }
            "pos_vocab" => meta.pos_vocab = fields.iter().map(|s| s.to_string()).collect(),
            "ner_vocab" => meta.ner_vocab = fields.iter().map(|s| s.to_string()).collect(),
            "tensor" => {
                let [name, shape, values @ ..] = &fields[..] else {
                    return Err(bad("expected `tensor <name> <shape> <values…>`".into()));
                };
                let shape: Vec<usize> = shape.split(',').map(num).collect::<Result<_>>()?;
                let data: Vec<f64> = values
                    .iter()
                    .map(|v| v.parse::<f64>().map_err(|_| bad(format!("bad value {v:?}"))))
                    .collect::<Result<_>>()?;
                let t = Tensor::from_vec(shape, data).map_err(|e| bad(e.to_string()))?;
                tensors.push((ln, name.to_string(), t));
            }
            "" => {}
            _ => return Err(bad(format!("unknown manifest key {key:?}"))),
        }
    }

    let missing = |k: &str| Error::Validation(format!("{}: checkpoint lacks `{k}`", path.display()));
    let (input_dim, embedding_dim, hidden_dim) = dims.ok_or_else(|| missing("dims"))?;
    let config = ModelConfig {
        kind: kind.ok_or_else(|| missing("model"))?,
        input_dim,
        embedding_dim,
        hidden_dim,
        layers: layers.ok_or_else(|| missing("layers"))?,
        decomposition: mode.ok_or_else(|| missing("mode"))?,
        num_relations: relations.ok_or_else(|| missing("relations"))?,
        final_activation: final_activation.ok_or_else(|| missing("final_activation"))?,
    };
    let mut model = Matcher::new(config, 0)?;
    let names = model.param_names();
    if names.len() != tensors.len() {
        return Err(Error::Validation(format!(
            "{}: expected {} tensors, found {}",
            path.display(),
            names.len(),
            tensors.len()
        )));
    }
    for ((expected, slot), (ln, name, t)) in names.iter().zip(model.params_mut()).zip(tensors) {
        if *expected != name || slot.shape() != t.shape() {
            return Err(Error::parse(
                path,
                ln,
                format!(
                    "tensor {name} {:?} does not match expected {expected} {:?}",
                    t.shape(),
                    slot.shape()
                ),
            ));
        }
        *slot = t;
    }
    Ok((model, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reload_is_bitwise() {
        let cfg = ModelConfig::for_kind(ModelKind::GraphGraph, 6, 4, 4, 2, 6);
        let model = Matcher::new(cfg, 9).unwrap();
        let meta = CheckpointMeta {
            seed: 9,
            pos_vocab: vec!["NOUN".into(), "None".into()],
            ner_vocab: vec!["None".into()],
        };
        let text = to_text(&model, &meta);
        let (back, meta2) = from_text(&text, Path::new("x")).unwrap();
        assert_eq!(meta, meta2);
        for (a, b) in model.params().iter().zip(back.params()) {
            let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
        assert_eq!(to_text(&back, &meta2), text);
    }

    #[test]
    fn truncated_tensor_is_rejected() {
        let cfg = ModelConfig::for_kind(ModelKind::SeqSeq, 0, 2, 4, 2, 0);
        let text = to_text(&Matcher::new(cfg, 1).unwrap(), &CheckpointMeta::default());
        let cut: Vec<&str> = text.lines().collect();
        let cut = cut[..cut.len() - 1].join("\n");
        assert!(from_text(&cut, Path::new("x")).is_err());
        assert!(from_text("nonsense", Path::new("x")).is_err());
    }
}
