//! Molecular in-context learning toolkit.
//!
//! `molicl` trains a graph attention encoder to align molecular graphs with
//! caption embeddings, then uses the trained embedding space to retrieve
//! diverse in-context demonstrations for LLM prompts. The pieces:
//!
//! - [`molgraph`] — SMILES parsing into attributed molecular graphs
//! - [`fingerprint`] — Morgan/ECFP circular fingerprints and Tanimoto similarity
//! - [`numerics`] — dense tensors, reverse-mode gradients, Adam, gradient checking
//! - [`encoder`] — two-layer GAT graph encoder with mean pooling and an MLP
//!   projector, plus a graph-autoencoder baseline decoder
//! - [`sampler`] — fingerprint-similarity positive/negative pair selection
//! - [`textemb`] — caption embeddings from files or an embedding HTTP service
//! - [`trainer`] — contrastive (NCE) alignment training loop
//! - [`retrieval`] — demonstration pools with random / scaffold / embedding
//!   top-k and MMR diverse selection
//! - [`promptllm`] — prompt assembly, mock and HTTP completion backends
//! - [`metrics`] — BLEU, ROUGE, METEOR-lite, and binary F1 scoring
//! - [`experiment`] — dataset ingestion, splits, and experiment orchestration
//! - [`toy`] — the bundled deterministic toy datasets used by the examples
//!   and the test suite
//!
//! Every capability has a runnable example under `examples/`; the `molicl`
//! binary exposes the same operations as subcommands.

mod binio;

pub mod encoder;
pub mod experiment;
pub mod fingerprint;
pub mod metrics;
pub mod molgraph;
pub mod numerics;
pub mod promptllm;
pub mod retrieval;
pub mod sampler;
pub mod textemb;
pub mod toy;
pub mod trainer;

pub use encoder::{EmbeddingVector, EncoderConfig};
pub use molgraph::{parse_smiles, MolecularGraph};
pub use retrieval::{DemonstrationPool, MmrConfig};
