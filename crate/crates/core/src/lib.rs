//! Concept-sentence matching over heterogeneous graphs with a relational GCN.
//!
//! The crate covers the whole pipeline: concept-graph and parse ingestion,
//! pair-graph construction, an R-GCN with basis and block decomposition,
//! the matching heads, training and evaluation, dataset construction, and a
//! synthetic corpus generator.

pub mod checkpoint;
pub mod cli;
pub mod concept_graph;
pub mod config;
pub mod dataset_ops;
pub mod error;
pub mod hetgraph;
pub mod matcher;
pub mod rgcn;
pub mod seed;
pub mod synth;
pub mod tensor;
pub mod text_ingest;
pub mod trainer;

pub use concept_graph::{ConceptGraph, GraphNode, NodeKind};
pub use error::{Error, Result};
pub use hetgraph::{HeteroGraph, PairGraphBuilder, RelationVocab, TagVocab};
pub use matcher::{Matcher, ModelConfig, ModelKind, PairInput};
pub use rgcn::{Decomposition, Edge, RgcnLayer};
pub use tensor::Tensor;
pub use text_ingest::{DependencyParse, EmbeddingTable, OovPolicy, ParseCorpus};
pub use trainer::{EvalReport, TrainConfig};
