//! The graph projector: two GAT layers, mean pooling over atoms, and an MLP
//! projection into the caption embedding space, plus the graph-autoencoder
//! baseline decoder trained on the same trunk.
//!
//! Layer 1 runs `heads_layer1` attention heads whose outputs are
//! concatenated and passed through ReLU; layer 2 is a single head with no
//! output nonlinearity. Per edge `(i, j)` the attention logit is
//! `leaky_relu(a_src . W h_i + a_dst . W h_j + a_edge . U e_ij)`, softmaxed
//! over `j` in the neighborhood of `i` plus a self-loop whose edge feature
//! is the zero vector. Attention is masked by adjacency, so disconnected
//! components never exchange messages.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::MolecularGraph;
use crate::numerics::{ParamStore, Tape, Tensor2, Var};

/// Hyperparameters of the graph encoder.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EncoderConfig {
    /// Width of both GAT layers; layer 1 splits it across heads.
    pub hidden_dim: usize,
    /// Number of concatenated attention heads in layer 1.
    pub heads_layer1: usize,
    /// Output dimension, matching the text embedding dimension.
    pub out_dim: usize,
    /// Negative slope of the leaky-relu on attention logits.
    pub attn_negative_slope: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            hidden_dim: 128,
            heads_layer1: 4,
            out_dim: 64,
            attn_negative_slope: 0.2,
        }
    }
}

impl EncoderConfig {
    fn head_dim(&self) -> usize {
        self.hidden_dim / self.heads_layer1
    }

    fn validate(&self) -> Result<(), EncoderError> {
        if self.hidden_dim == 0 || self.out_dim == 0 || self.heads_layer1 == 0 {
            return Err(EncoderError::Config("dimensions must be nonzero".into()));
        }
        if !self.hidden_dim.is_multiple_of(self.heads_layer1) {
            return Err(EncoderError::Config(format!(
                "hidden_dim {} is not divisible by heads_layer1 {}",
                self.hidden_dim, self.heads_layer1
            )));
        }
        Ok(())
    }
}

/// A unit-L2-norm vector in the shared graph-text embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Normalize to unit length. Vectors with norm below 1e-12 are rejected.
    pub fn from_unnormalized(mut values: Vec<f64>) -> EmbeddingVector {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm > 1e-12, "cannot normalize a zero vector");
        values.iter_mut().for_each(|v| *v /= norm);
        EmbeddingVector(values)
    }

    /// Wrap values that are already unit norm (within 1e-6).
    pub fn from_normalized(values: Vec<f64>) -> EmbeddingVector {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        debug_assert!((norm - 1.0).abs() < 1e-6, "vector is not unit norm: {norm}");
        EmbeddingVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Cosine similarity; equal to `dot` for unit vectors.
    pub fn cosine(&self, other: &EmbeddingVector) -> f64 {
        self.dot(other)
    }

    pub fn euclidean(&self, other: &EmbeddingVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("encoder config error: {0}")]
    Config(String),
    #[error("cannot encode an empty graph")]
    EmptyGraph,
}

/// Which GAT layer a standalone layer evaluation should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GatLayer {
    First,
    Second,
}

struct HeadVars {
    w: Var,
    u: Var,
    a_src: Var,
    a_dst: Var,
    a_edge: Var,
}

/// Tape bindings for the full projector.
pub struct EncoderVars {
    heads1: Vec<HeadVars>,
    layer2: HeadVars,
    proj_w1: Var,
    proj_b1: Var,
    proj_w2: Var,
    proj_b2: Var,
    slope: f64,
}

/// Tape bindings for the GAE trunk and decoder.
pub struct GaeVars {
    heads1: Vec<HeadVars>,
    layer2: HeadVars,
    dec_w1: Var,
    dec_b1: Var,
    dec_w2: Var,
    dec_b2: Var,
    slope: f64,
}

fn head_names(prefix: &str) -> [String; 5] {
    [
        format!("{prefix}.w"),
        format!("{prefix}.u"),
        format!("{prefix}.a_src"),
        format!("{prefix}.a_dst"),
        format!("{prefix}.a_edge"),
    ]
}

fn insert_head(
    store: &mut ParamStore,
    prefix: &str,
    in_dim: usize,
    edge_dim: usize,
    head_dim: usize,
    rng: &mut ChaCha8Rng,
) {
    let [w, u, a_src, a_dst, a_edge] = head_names(prefix);
    store.insert(w, Tensor2::xavier_uniform(in_dim, head_dim, rng));
    store.insert(u, Tensor2::xavier_uniform(edge_dim, head_dim, rng));
    store.insert(a_src, Tensor2::xavier_uniform(head_dim, 1, rng));
    store.insert(a_dst, Tensor2::xavier_uniform(head_dim, 1, rng));
    store.insert(a_edge, Tensor2::xavier_uniform(head_dim, 1, rng));
}

fn bind_head(tape: &mut Tape, store: &ParamStore, prefix: &str) -> HeadVars {
    let [w, u, a_src, a_dst, a_edge] = head_names(prefix);
    HeadVars {
        w: tape.param(&w, store),
        u: tape.param(&u, store),
        a_src: tape.param(&a_src, store),
        a_dst: tape.param(&a_dst, store),
        a_edge: tape.param(&a_edge, store),
    }
}

fn insert_trunk(
    store: &mut ParamStore,
    cfg: &EncoderConfig,
    node_dim: usize,
    edge_dim: usize,
    rng: &mut ChaCha8Rng,
) {
    for h in 0..cfg.heads_layer1 {
        insert_head(
            store,
            &format!("gat1.h{h}"),
            node_dim,
            edge_dim,
            cfg.head_dim(),
            rng,
        );
    }
    insert_head(store, "gat2", cfg.hidden_dim, edge_dim, cfg.hidden_dim, rng);
}

/// Initialize projector parameters: Xavier-uniform weights, zero biases,
/// fully determined by `seed`.
pub fn init_params(
    cfg: &EncoderConfig,
    node_dim: usize,
    edge_dim: usize,
    seed: u64,
) -> Result<ParamStore, EncoderError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new(seed);
    insert_trunk(&mut store, cfg, node_dim, edge_dim, &mut rng);
    store.insert(
        "proj.w1",
        Tensor2::xavier_uniform(cfg.hidden_dim, cfg.hidden_dim, &mut rng),
    );
    store.insert("proj.b1", Tensor2::zeros(1, cfg.hidden_dim));
    store.insert(
        "proj.w2",
        Tensor2::xavier_uniform(cfg.hidden_dim, cfg.out_dim, &mut rng),
    );
    store.insert("proj.b2", Tensor2::zeros(1, cfg.out_dim));
    Ok(store)
}

/// Initialize GAE parameters: the same GAT trunk plus the node-level decoder
/// MLP whose inner products reconstruct the adjacency matrix.
pub fn init_gae_params(
    cfg: &EncoderConfig,
    node_dim: usize,
    edge_dim: usize,
    seed: u64,
) -> Result<ParamStore, EncoderError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::new(seed);
    insert_trunk(&mut store, cfg, node_dim, edge_dim, &mut rng);
    store.insert(
        "gae.w1",
        Tensor2::xavier_uniform(cfg.hidden_dim, cfg.hidden_dim, &mut rng),
    );
    store.insert("gae.b1", Tensor2::zeros(1, cfg.hidden_dim));
    store.insert(
        "gae.w2",
        Tensor2::xavier_uniform(cfg.hidden_dim, cfg.hidden_dim, &mut rng),
    );
    store.insert("gae.b2", Tensor2::zeros(1, cfg.hidden_dim));
    Ok(store)
}

/// Bind all projector parameters onto a tape.
pub fn bind_encoder(tape: &mut Tape, store: &ParamStore, cfg: &EncoderConfig) -> EncoderVars {
    EncoderVars {
        heads1: (0..cfg.heads_layer1)
            .map(|h| bind_head(tape, store, &format!("gat1.h{h}")))
            .collect(),
        layer2: bind_head(tape, store, "gat2"),
        proj_w1: tape.param("proj.w1", store),
        proj_b1: tape.param("proj.b1", store),
        proj_w2: tape.param("proj.w2", store),
        proj_b2: tape.param("proj.b2", store),
        slope: cfg.attn_negative_slope,
    }
}

/// Bind GAE trunk and decoder parameters onto a tape.
pub fn bind_gae(tape: &mut Tape, store: &ParamStore, cfg: &EncoderConfig) -> GaeVars {
    GaeVars {
        heads1: (0..cfg.heads_layer1)
            .map(|h| bind_head(tape, store, &format!("gat1.h{h}")))
            .collect(),
        layer2: bind_head(tape, store, "gat2"),
        dec_w1: tape.param("gae.w1", store),
        dec_b1: tape.param("gae.b1", store),
        dec_w2: tape.param("gae.w2", store),
        dec_b2: tape.param("gae.b2", store),
        slope: cfg.attn_negative_slope,
    }
}

/// Constant tape inputs derived from one molecular graph.
pub struct GraphInputs {
    x: Var,
    /// N^2 x F_e matrix whose row `i*N + j` holds the feature of the bond
    /// between atoms i and j, or zeros (also the self-loop edge feature).
    p_edge: Var,
    mask: Tensor2,
    n: usize,
}

/// Load a featurized graph onto the tape as constants.
pub fn graph_inputs(tape: &mut Tape, graph: &MolecularGraph) -> Result<GraphInputs, EncoderError> {
    let n = graph.atom_count();
    if n == 0 {
        return Err(EncoderError::EmptyGraph);
    }
    if graph.node_features.len() != n {
        return Err(EncoderError::Config(
            "graph is missing node features; run featurize first".into(),
        ));
    }
    let x = tape.constant(Tensor2::from_rows(&graph.node_features));
    let edge_dim = crate::molgraph::EDGE_FEATURE_WIDTH;
    let mut p = Tensor2::zeros(n * n, edge_dim);
    for (bi, bond) in graph.bonds.iter().enumerate() {
        let (a, b) = bond.endpoints;
        for (k, &f) in graph.edge_features[bi].iter().enumerate() {
            p.set(a * n + b, k, f);
            p.set(b * n + a, k, f);
        }
    }
    let p_edge = tape.constant(p);
    let mut mask = Tensor2::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let adj = graph.adjacency[i * n + j] != 0 || i == j;
            mask.set(i, j, if adj { 1.0 } else { 0.0 });
        }
    }
    Ok(GraphInputs { x, p_edge, mask, n })
}

fn head_forward(tape: &mut Tape, head: &HeadVars, h_in: Var, g: &GraphInputs, slope: f64) -> Var {
    let n = g.n;
    let hw = tape.matmul(h_in, head.w);
    let s_src = tape.matmul(hw, head.a_src);
    let s_dst = tape.matmul(hw, head.a_dst);
    let w_e = tape.matmul(head.u, head.a_edge);
    let edge_flat = tape.matmul(g.p_edge, w_e);
    let edge_scores = tape.reshape(edge_flat, n, n);

    let ones_row = tape.constant(Tensor2::new(1, n, vec![1.0; n]));
    let ones_col = tape.constant(Tensor2::new(n, 1, vec![1.0; n]));
    let src_grid = tape.matmul(s_src, ones_row);
    let s_dst_t = tape.transpose(s_dst);
    let dst_grid = tape.matmul(ones_col, s_dst_t);

    let pair = tape.add(src_grid, dst_grid);
    let logits = tape.add(pair, edge_scores);
    let logits = tape.leaky_relu(logits, slope);
    let att = tape.masked_softmax_row(logits, g.mask.clone());
    tape.matmul(att, hw)
}

fn trunk_forward(
    tape: &mut Tape,
    heads1: &[HeadVars],
    layer2: &HeadVars,
    slope: f64,
    g: &GraphInputs,
) -> Var {
    let head_outs: Vec<Var> = heads1
        .iter()
        .map(|head| head_forward(tape, head, g.x, g, slope))
        .collect();
    let concat = tape.concat_cols(&head_outs);
    let h1 = tape.relu(concat);
    head_forward(tape, layer2, h1, g, slope)
}

/// Full projector forward pass: trunk, mean pooling, projection MLP, and L2
/// normalization. Returns the `1 x out_dim` embedding node.
pub fn encode_on_tape(tape: &mut Tape, vars: &EncoderVars, g: &GraphInputs) -> Var {
    let h2 = trunk_forward(tape, &vars.heads1, &vars.layer2, vars.slope, g);
    let pooled = tape.mean_pool_rows(h2);
    let l1 = tape.matmul(pooled, vars.proj_w1);
    let l1 = tape.add_row(l1, vars.proj_b1);
    let l1 = tape.relu(l1);
    let out = tape.matmul(l1, vars.proj_w2);
    let out = tape.add_row(out, vars.proj_b2);
    tape.l2_normalize_rows(out)
}

/// Encode a molecule with trained or initialized parameters.
pub fn encode(
    graph: &MolecularGraph,
    store: &ParamStore,
    cfg: &EncoderConfig,
) -> Result<EmbeddingVector, EncoderError> {
    cfg.validate()?;
    let mut tape = Tape::new();
    let vars = bind_encoder(&mut tape, store, cfg);
    let g = graph_inputs(&mut tape, graph)?;
    let z = encode_on_tape(&mut tape, &vars, &g);
    Ok(EmbeddingVector::from_normalized(
        tape.value(z).data().to_vec(),
    ))
}

/// GAE trunk then mean pooling and normalization: the baseline's retrieval
/// embedding.
pub fn encode_gae(
    graph: &MolecularGraph,
    store: &ParamStore,
    cfg: &EncoderConfig,
) -> Result<EmbeddingVector, EncoderError> {
    cfg.validate()?;
    let mut tape = Tape::new();
    let vars = bind_gae(&mut tape, store, cfg);
    let g = graph_inputs(&mut tape, graph)?;
    let h2 = trunk_forward(&mut tape, &vars.heads1, &vars.layer2, vars.slope, &g);
    let pooled = tape.mean_pool_rows(h2);
    let z = tape.l2_normalize_rows(pooled);
    Ok(EmbeddingVector::from_normalized(
        tape.value(z).data().to_vec(),
    ))
}

/// Decoder and reconstruction loss on the tape: `A_hat = sigmoid(M M^T)`
/// with `M = mlp(H)`, mean squared error against `A` over off-diagonal
/// entries.
pub fn gae_loss_on_tape(tape: &mut Tape, vars: &GaeVars, g: &GraphInputs, h2: Var) -> Var {
    let n = g.n;
    let m = tape.matmul(h2, vars.dec_w1);
    let m = tape.add_row(m, vars.dec_b1);
    let m = tape.relu(m);
    let m = tape.matmul(m, vars.dec_w2);
    let m = tape.add_row(m, vars.dec_b2);
    let mt = tape.transpose(m);
    let scores = tape.matmul(m, mt);
    let a_hat = tape.sigmoid(scores);

    let mut adjacency = Tensor2::zeros(n, n);
    let mut offdiag = Tensor2::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                offdiag.set(i, j, 1.0);
                adjacency.set(i, j, if g.mask.get(i, j) != 0.0 { 1.0 } else { 0.0 });
            }
        }
    }
    let a_const = tape.constant(adjacency);
    let neg_a = tape.scale(a_const, -1.0);
    let diff = tape.add(a_hat, neg_a);
    let sq = tape.mul(diff, diff);
    let mask_const = tape.constant(offdiag);
    let masked = tape.mul(sq, mask_const);
    let total = tape.sum(masked);
    let count = (n * n - n).max(1) as f64;
    tape.scale(total, 1.0 / count)
}

/// Forward pass of the GAE trunk returning node embeddings (pre-pooling).
pub fn gae_trunk_on_tape(tape: &mut Tape, vars: &GaeVars, g: &GraphInputs) -> Var {
    trunk_forward(tape, &vars.heads1, &vars.layer2, vars.slope, g)
}

/// Reconstruct the adjacency estimate for a graph with current parameters.
pub fn gae_decode(
    graph: &MolecularGraph,
    store: &ParamStore,
    cfg: &EncoderConfig,
) -> Result<Tensor2, EncoderError> {
    cfg.validate()?;
    let mut tape = Tape::new();
    let vars = bind_gae(&mut tape, store, cfg);
    let g = graph_inputs(&mut tape, graph)?;
    let h2 = trunk_forward(&mut tape, &vars.heads1, &vars.layer2, vars.slope, &g);
    let m = tape.matmul(h2, vars.dec_w1);
    let m = tape.add_row(m, vars.dec_b1);
    let m = tape.relu(m);
    let m = tape.matmul(m, vars.dec_w2);
    let m = tape.add_row(m, vars.dec_b2);
    let mt = tape.transpose(m);
    let scores = tape.matmul(m, mt);
    let a_hat = tape.sigmoid(scores);
    Ok(tape.value(a_hat).clone())
}

/// Mean squared error between a reconstructed and a true adjacency over all
/// off-diagonal entries.
pub fn gae_loss(a_hat: &Tensor2, adjacency: &Tensor2) -> f64 {
    assert_eq!(a_hat.shape(), adjacency.shape(), "adjacency shapes");
    let n = a_hat.rows();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d = a_hat.get(i, j) - adjacency.get(i, j);
                total += d * d;
            }
        }
    }
    total / ((n * n - n).max(1) as f64)
}

/// Evaluate a single GAT layer on an explicit node matrix. Layer `First`
/// expects `node_dim`-wide input and applies the multi-head concatenation
/// plus ReLU; layer `Second` expects `hidden_dim`-wide input.
pub fn gat_layer(
    h_in: &Tensor2,
    graph: &MolecularGraph,
    store: &ParamStore,
    cfg: &EncoderConfig,
    layer: GatLayer,
) -> Result<Tensor2, EncoderError> {
    cfg.validate()?;
    if h_in.rows() != graph.atom_count() {
        return Err(EncoderError::Config(format!(
            "node matrix has {} rows for {} atoms",
            h_in.rows(),
            graph.atom_count()
        )));
    }
    let expected_cols = match layer {
        GatLayer::First => store.get("gat1.h0.w").rows(),
        GatLayer::Second => store.get("gat2.w").rows(),
    };
    if h_in.cols() != expected_cols {
        return Err(EncoderError::Config(format!(
            "node matrix width {} does not match layer input width {}",
            h_in.cols(),
            expected_cols
        )));
    }
    let mut tape = Tape::new();
    let g = graph_inputs(&mut tape, graph)?;
    let h_var = tape.constant(h_in.clone());
    let out = match layer {
        GatLayer::First => {
            let heads: Vec<HeadVars> = (0..cfg.heads_layer1)
                .map(|h| bind_head(&mut tape, store, &format!("gat1.h{h}")))
                .collect();
            let outs: Vec<Var> = heads
                .iter()
                .map(|head| head_forward(&mut tape, head, h_var, &g, cfg.attn_negative_slope))
                .collect();
            let concat = tape.concat_cols(&outs);
            tape.relu(concat)
        }
        GatLayer::Second => {
            let head = bind_head(&mut tape, store, "gat2");
            head_forward(&mut tape, &head, h_var, &g, cfg.attn_negative_slope)
        }
    };
    Ok(tape.value(out).clone())
}
