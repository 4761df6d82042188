//! Contrastive alignment of graph embeddings to caption embeddings, plus the
//! graph-autoencoder baseline trainer.
//!
//! Each epoch resamples fingerprint-grounded positives and negatives,
//! shuffles anchors with a seeded RNG, and applies Adam per minibatch.
//! Validation separation is the mean cosine between an embedding and its own
//! caption minus the mean cosine against sampled other captions; the
//! checkpoint with the best separation wins.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::encoder::{
    self, bind_encoder, bind_gae, encode_on_tape, gae_loss_on_tape, gae_trunk_on_tape,
    graph_inputs, EmbeddingVector, EncoderConfig, EncoderError,
};
use crate::fingerprint::{fnv1a, FingerprintVector};
use crate::molgraph::MolecularGraph;
use crate::numerics::{adam_step, AdamConfig, NumericsError, ParamStore, Tape, Tensor2, Var};
use crate::sampler::{sample_pairs, SamplerConfig, SamplerError};
use crate::textemb::TextEmbeddingIndex;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// NCE temperature.
    pub temperature: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub sampler: SamplerConfig,
    pub seed: u64,
    /// When false, reduce to plain contrastive training: the anchor's own
    /// caption is the only positive and negatives are drawn uniformly.
    pub morgan_sampling: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            temperature: 0.1,
            epochs: 50,
            batch_size: 64,
            lr: 1e-3,
            sampler: SamplerConfig::default(),
            seed: 7,
            morgan_sampling: true,
        }
    }
}

/// One training molecule: parsed graph plus its fingerprint, keyed by the
/// caption id.
#[derive(Debug, Clone)]
pub struct TrainItem {
    pub id: String,
    pub graph: MolecularGraph,
    pub fingerprint: FingerprintVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    /// Cosine separation on the validation split (negated reconstruction
    /// loss for the GAE trainer).
    pub val_separation: f64,
}

#[derive(Debug)]
pub struct TrainOutput {
    /// Parameters of the best-validation epoch.
    pub params: ParamStore,
    pub curve: Vec<EpochStats>,
    pub best_epoch: usize,
}

#[derive(Debug, Error)]
pub enum TrainerError {
    #[error("trainer config error: {0}")]
    Config(String),
    #[error("missing caption embeddings for ids: {}", missing_ids.join(", "))]
    Data { missing_ids: Vec<String> },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
}

/// Batch NCE loss on plain vectors:
/// `-(1/N) sum_i log(exp(z_i.y_i+/tau) / (exp(z_i.y_i+/tau) + sum_j exp(z_i.y_ij-/tau)))`,
/// averaging the per-positive terms when an anchor has several positives.
pub fn nce_loss(
    z_batch: &[EmbeddingVector],
    positives: &[Vec<EmbeddingVector>],
    negatives: &[Vec<EmbeddingVector>],
    tau: f64,
) -> Result<f64, TrainerError> {
    if tau <= 0.0 {
        return Err(TrainerError::Config(format!(
            "temperature must be positive, got {tau}"
        )));
    }
    if z_batch.len() != positives.len() || z_batch.len() != negatives.len() {
        return Err(TrainerError::Config(
            "z_batch, positives, and negatives must have equal lengths".into(),
        ));
    }
    if z_batch.is_empty() {
        return Err(TrainerError::Config("empty batch".into()));
    }
    let mut total = 0.0;
    for ((z, pos), neg) in z_batch.iter().zip(positives).zip(negatives) {
        if pos.is_empty() {
            return Err(TrainerError::Config("anchor without positives".into()));
        }
        let neg_logits: Vec<f64> = neg.iter().map(|y| z.dot(y) / tau).collect();
        let mut anchor_loss = 0.0;
        for p in pos {
            let pos_logit = z.dot(p) / tau;
            let max = neg_logits.iter().fold(pos_logit, |acc, &l| acc.max(l));
            let denom: f64 =
                (pos_logit - max).exp() + neg_logits.iter().map(|l| (l - max).exp()).sum::<f64>();
            anchor_loss += -(pos_logit - max - denom.ln());
        }
        total += anchor_loss / pos.len() as f64;
    }
    Ok(total / z_batch.len() as f64)
}

/// The same per-anchor loss assembled on a tape for backpropagation.
fn nce_loss_on_tape(
    tape: &mut Tape,
    z: Var,
    positives: &[&[f64]],
    negatives: &[&[f64]],
    tau: f64,
) -> Var {
    let inv_tau = 1.0 / tau;
    let neg_logits: Vec<Var> = negatives
        .iter()
        .map(|y| {
            let c = tape.constant(Tensor2::row_vector(y));
            let d = tape.dot(z, c);
            tape.scale(d, inv_tau)
        })
        .collect();
    let mut selector = vec![0.0; 1 + negatives.len()];
    selector[0] = 1.0;
    let mut per_positive = Vec::with_capacity(positives.len());
    for y in positives {
        let c = tape.constant(Tensor2::row_vector(y));
        let d = tape.dot(z, c);
        let pos_logit = tape.scale(d, inv_tau);
        let mut row = vec![pos_logit];
        row.extend_from_slice(&neg_logits);
        let logits = tape.concat_cols(&row);
        let probs = tape.softmax_row(logits);
        let sel = tape.constant(Tensor2::row_vector(&selector));
        let p0 = tape.dot(probs, sel);
        let log_p0 = tape.log(p0);
        per_positive.push(tape.scale(log_p0, -1.0));
    }
    let stacked = tape.concat_cols(&per_positive);
    let total = tape.sum(stacked);
    tape.scale(total, 1.0 / positives.len() as f64)
}

fn check_ids(items: &[TrainItem], index: &TextEmbeddingIndex) -> Result<(), TrainerError> {
    let missing: Vec<String> = items
        .iter()
        .filter(|item| !index.contains(&item.id))
        .map(|item| item.id.clone())
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(TrainerError::Data {
            missing_ids: missing,
        })
    }
}

fn epoch_anchor_seed(seed: u64, epoch: usize, anchor: usize, salt: u64) -> u64 {
    seed ^ fnv1a(&[epoch as u64, anchor as u64, salt])
}

/// Train the graph projector against caption embeddings. Returns the
/// best-validation parameters and the per-epoch loss curve.
pub fn train(
    train_items: &[TrainItem],
    valid_items: &[TrainItem],
    text_index: &TextEmbeddingIndex,
    encoder_cfg: &EncoderConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutput, TrainerError> {
    if cfg.epochs == 0 {
        return Err(TrainerError::Config("epochs must be at least 1".into()));
    }
    if cfg.temperature <= 0.0 {
        return Err(TrainerError::Config("temperature must be positive".into()));
    }
    if train_items.is_empty() {
        return Err(TrainerError::Config("no training items".into()));
    }
    check_ids(train_items, text_index)?;
    check_ids(valid_items, text_index)?;
    if encoder_cfg.out_dim != text_index.dim() {
        return Err(TrainerError::Config(format!(
            "encoder out_dim {} does not match text embedding dim {}",
            encoder_cfg.out_dim,
            text_index.dim()
        )));
    }

    let node_dim = crate::molgraph::NODE_FEATURE_WIDTH;
    let edge_dim = crate::molgraph::EDGE_FEATURE_WIDTH;
    let mut params = encoder::init_params(encoder_cfg, node_dim, edge_dim, cfg.seed)?;
    let adam = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };
    let fingerprints: Vec<FingerprintVector> =
        train_items.iter().map(|t| t.fingerprint.clone()).collect();
    let sampler_cfg = if cfg.morgan_sampling {
        cfg.sampler.clone()
    } else {
        SamplerConfig::without_morgan(cfg.sampler.negatives)
    };

    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, ParamStore)> = None;

    for epoch in 1..=cfg.epochs {
        // fresh pairs every epoch, one derived seed per anchor
        let mut samples = Vec::with_capacity(train_items.len());
        for anchor in 0..train_items.len() {
            let mut rng =
                ChaCha8Rng::seed_from_u64(epoch_anchor_seed(cfg.seed, epoch, anchor, 0x5a));
            samples.push(sample_pairs(anchor, &fingerprints, &sampler_cfg, &mut rng)?);
        }

        let mut order: Vec<usize> = (0..train_items.len()).collect();
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ fnv1a(&[epoch as u64, 0x0e]));
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            params.zero_grads();
            let weight = 1.0 / chunk.len() as f64;
            for &anchor in chunk {
                let sample = &samples[anchor];
                let positives: Vec<&[f64]> = sample
                    .positives
                    .iter()
                    .map(|&i| text_index.get(&train_items[i].id).unwrap())
                    .collect();
                let negatives: Vec<&[f64]> = sample
                    .negatives
                    .iter()
                    .map(|&i| text_index.get(&train_items[i].id).unwrap())
                    .collect();

                let mut tape = Tape::new();
                let vars = bind_encoder(&mut tape, &params, encoder_cfg);
                let gi = graph_inputs(&mut tape, &train_items[anchor].graph)?;
                let z = encode_on_tape(&mut tape, &vars, &gi);
                let loss = nce_loss_on_tape(&mut tape, z, &positives, &negatives, cfg.temperature);
                let scaled = tape.scale(loss, weight);
                tape.backward(scaled)?;
                tape.accumulate_grads(&mut params);
                epoch_loss += tape.value(loss).get(0, 0);
            }
            adam_step(&mut params, &adam);
        }
        let train_loss = epoch_loss / train_items.len() as f64;

        let val_separation = validation_separation(
            valid_items,
            text_index,
            &params,
            encoder_cfg,
            cfg.seed,
            epoch,
        )?;
        curve.push(EpochStats {
            epoch,
            train_loss,
            val_separation,
        });
        let improved = match &best {
            None => true,
            Some((_, best_sep, _)) => val_separation > *best_sep,
        };
        if improved {
            best = Some((epoch, val_separation, params.clone()));
        }
    }

    let (best_epoch, _, best_params) = best.expect("at least one epoch ran");
    Ok(TrainOutput {
        params: best_params,
        curve,
        best_epoch,
    })
}

/// Mean positive-pair cosine minus mean negative-pair cosine on a held-out
/// split. Negative captions are sampled with an epoch-derived seed.
fn validation_separation(
    valid_items: &[TrainItem],
    text_index: &TextEmbeddingIndex,
    params: &ParamStore,
    encoder_cfg: &EncoderConfig,
    seed: u64,
    epoch: usize,
) -> Result<f64, TrainerError> {
    if valid_items.is_empty() {
        return Ok(0.0);
    }
    let all_ids: Vec<&str> = text_index.ids().collect();
    let mut total = 0.0;
    for (i, item) in valid_items.iter().enumerate() {
        let z = encoder::encode(&item.graph, params, encoder_cfg)?;
        let own = text_index.get(&item.id).unwrap();
        let pos: f64 = z.values().iter().zip(own).map(|(a, b)| a * b).sum();
        let mut rng = ChaCha8Rng::seed_from_u64(epoch_anchor_seed(seed, epoch, i, 0xa1));
        let mut neg_sum = 0.0;
        let draws = 8;
        for _ in 0..draws {
            use rand::RngExt;
            let pick = loop {
                let candidate = all_ids[rng.random_range(0..all_ids.len())];
                if candidate != item.id {
                    break candidate;
                }
            };
            let other = text_index.get(pick).unwrap();
            neg_sum += z
                .values()
                .iter()
                .zip(other)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
        total += pos - neg_sum / draws as f64;
    }
    Ok(total / valid_items.len() as f64)
}

/// Train the GAE baseline by adjacency reconstruction. Validation is the
/// negated mean reconstruction loss on the held-out split.
pub fn train_gae(
    train_items: &[TrainItem],
    valid_items: &[TrainItem],
    encoder_cfg: &EncoderConfig,
    cfg: &TrainConfig,
) -> Result<TrainOutput, TrainerError> {
    if cfg.epochs == 0 {
        return Err(TrainerError::Config("epochs must be at least 1".into()));
    }
    if train_items.is_empty() {
        return Err(TrainerError::Config("no training items".into()));
    }
    let node_dim = crate::molgraph::NODE_FEATURE_WIDTH;
    let edge_dim = crate::molgraph::EDGE_FEATURE_WIDTH;
    let mut params = encoder::init_gae_params(encoder_cfg, node_dim, edge_dim, cfg.seed)?;
    let adam = AdamConfig {
        lr: cfg.lr,
        ..AdamConfig::default()
    };

    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, ParamStore)> = None;
    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..train_items.len()).collect();
        let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ fnv1a(&[epoch as u64, 0x0e]));
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            params.zero_grads();
            let weight = 1.0 / chunk.len() as f64;
            for &idx in chunk {
                let mut tape = Tape::new();
                let vars = bind_gae(&mut tape, &params, encoder_cfg);
                let gi = graph_inputs(&mut tape, &train_items[idx].graph)?;
                let h2 = gae_trunk_on_tape(&mut tape, &vars, &gi);
                let loss = gae_loss_on_tape(&mut tape, &vars, &gi, h2);
                let scaled = tape.scale(loss, weight);
                tape.backward(scaled)?;
                tape.accumulate_grads(&mut params);
                epoch_loss += tape.value(loss).get(0, 0);
            }
            adam_step(&mut params, &adam);
        }
        let train_loss = epoch_loss / train_items.len() as f64;

        let mut val_loss = 0.0;
        for item in valid_items {
            let mut tape = Tape::new();
            let vars = bind_gae(&mut tape, &params, encoder_cfg);
            let gi = graph_inputs(&mut tape, &item.graph)?;
            let h2 = gae_trunk_on_tape(&mut tape, &vars, &gi);
            let loss = gae_loss_on_tape(&mut tape, &vars, &gi, h2);
            val_loss += tape.value(loss).get(0, 0);
        }
        let val_metric = if valid_items.is_empty() {
            -train_loss
        } else {
            -val_loss / valid_items.len() as f64
        };
        curve.push(EpochStats {
            epoch,
            train_loss,
            val_separation: val_metric,
        });
        let improved = match &best {
            None => true,
            Some((_, best_metric, _)) => val_metric > *best_metric,
        };
        if improved {
            best = Some((epoch, val_metric, params.clone()));
        }
    }
    let (best_epoch, _, best_params) = best.expect("at least one epoch ran");
    Ok(TrainOutput {
        params: best_params,
        curve,
        best_epoch,
    })
}

/// Render the loss curve as `epoch,train_loss,val_separation` CSV.
pub fn loss_curve_csv(curve: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,val_separation\n");
    for row in curve {
        out.push_str(&format!(
            "{},{:.6},{:.6}\n",
            row.epoch, row.train_loss, row.val_separation
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fingerprint::morgan_fingerprint;
    use crate::molgraph::parse_smiles;

    fn item(id: &str, smiles: &str) -> TrainItem {
        let graph = parse_smiles(smiles).unwrap();
        let fingerprint = morgan_fingerprint(&graph, 2, 2048);
        TrainItem {
            id: id.to_string(),
            graph,
            fingerprint,
        }
    }

    fn small_encoder(out_dim: usize) -> EncoderConfig {
        EncoderConfig {
            hidden_dim: 8,
            heads_layer1: 2,
            out_dim,
            attn_negative_slope: 0.2,
        }
    }

    #[test]
    fn nce_uniform_logits_give_ln_k_plus_one() {
        // all dot products equal: softmax is uniform over 1 + K entries
        let z = EmbeddingVector::from_unnormalized(vec![1.0, 0.0]);
        let y = EmbeddingVector::from_unnormalized(vec![0.0, 1.0]);
        for k in [1usize, 7] {
            let loss = nce_loss(
                std::slice::from_ref(&z),
                &[vec![y.clone()]],
                &[vec![y.clone(); k]],
                0.5,
            )
            .unwrap();
            assert!(
                (loss - ((k + 1) as f64).ln()).abs() < 1e-12,
                "K = {k}: {loss}"
            );
        }
    }

    #[test]
    fn nce_separation_limit_is_near_zero() {
        let z = EmbeddingVector::from_unnormalized(vec![1.0, 0.0]);
        let pos = EmbeddingVector::from_unnormalized(vec![1.0, 0.0]);
        let neg = EmbeddingVector::from_unnormalized(vec![-1.0, 0.0]);
        let loss = nce_loss(&[z], &[vec![pos]], &[vec![neg; 5]], 0.1).unwrap();
        assert!(loss >= 0.0);
        assert!(loss < 1e-6, "loss {loss}");
    }

    #[test]
    fn nce_rejects_bad_temperature() {
        let z = EmbeddingVector::from_unnormalized(vec![1.0]);
        assert!(matches!(
            nce_loss(
                std::slice::from_ref(&z),
                &[vec![z.clone()]],
                &[vec![z.clone()]],
                0.0
            ),
            Err(TrainerError::Config(_))
        ));
    }

    #[test]
    fn nce_is_always_non_negative() {
        use rand::{RngExt, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let sample = |rng: &mut ChaCha8Rng| {
                EmbeddingVector::from_unnormalized(
                    (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
                )
            };
            let z = sample(&mut rng);
            let pos = vec![sample(&mut rng), sample(&mut rng)];
            let neg = vec![sample(&mut rng); 3];
            let loss = nce_loss(&[z], &[pos], &[neg], 0.2).unwrap();
            assert!(loss >= 0.0);
        }
    }

    #[test]
    fn tau_rescales_logits_without_changing_the_argmax() {
        use rand::{RngExt, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let z = EmbeddingVector::from_unnormalized(
                (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
            );
            let candidates: Vec<EmbeddingVector> = (0..5)
                .map(|_| {
                    EmbeddingVector::from_unnormalized(
                        (0..4).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    )
                })
                .collect();
            let argmax = |tau: f64| {
                let logits: Vec<f64> = candidates.iter().map(|y| z.dot(y) / tau).collect();
                logits
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0
            };
            assert_eq!(argmax(0.05), argmax(1.0));
        }
    }

    #[test]
    fn tape_nce_matches_plain_nce() {
        use rand::{RngExt, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let vec4 = |rng: &mut ChaCha8Rng| -> Vec<f64> {
                let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / n).collect()
            };
            let z = vec4(&mut rng);
            let pos: Vec<Vec<f64>> = (0..2).map(|_| vec4(&mut rng)).collect();
            let neg: Vec<Vec<f64>> = (0..4).map(|_| vec4(&mut rng)).collect();
            let tau = 0.1;

            let mut tape = Tape::new();
            let zv = tape.constant(Tensor2::row_vector(&z));
            let pos_refs: Vec<&[f64]> = pos.iter().map(|v| v.as_slice()).collect();
            let neg_refs: Vec<&[f64]> = neg.iter().map(|v| v.as_slice()).collect();
            let loss = nce_loss_on_tape(&mut tape, zv, &pos_refs, &neg_refs, tau);
            let taped = tape.value(loss).get(0, 0);

            let plain = nce_loss(
                &[EmbeddingVector::from_normalized(z.clone())],
                &[pos
                    .iter()
                    .cloned()
                    .map(EmbeddingVector::from_normalized)
                    .collect()],
                &[neg
                    .iter()
                    .cloned()
                    .map(EmbeddingVector::from_normalized)
                    .collect()],
                tau,
            )
            .unwrap();
            assert!((taped - plain).abs() < 1e-9, "{taped} vs {plain}");
        }
    }

    fn two_molecule_setup() -> (Vec<TrainItem>, TextEmbeddingIndex) {
        let items = vec![item("a", "CCCCCCCC"), item("b", "c1ccccc1O")];
        // orthogonal caption embeddings
        let index = TextEmbeddingIndex::build(
            4,
            "test",
            vec![
                ("a".into(), vec![1.0, 0.0, 0.0, 0.0]),
                ("b".into(), vec![0.0, 1.0, 0.0, 0.0]),
            ],
        )
        .unwrap();
        (items, index)
    }

    #[test]
    fn toy_training_aligns_graphs_with_their_captions() {
        let (items, index) = two_molecule_setup();
        let cfg = TrainConfig {
            epochs: 100,
            batch_size: 2,
            lr: 5e-3,
            temperature: 0.1,
            sampler: SamplerConfig {
                max_positives: 1,
                tau_pos: 1.01,
                tau_neg: 1.01,
                negatives: 1,
            },
            seed: 5,
            morgan_sampling: true,
        };
        let out = train(&items, &items, &index, &small_encoder(4), &cfg).unwrap();
        let last = out.curve.last().unwrap();
        assert!(last.train_loss < 0.1, "final loss {}", last.train_loss);
        for it in &items {
            let z = encoder::encode(&it.graph, &out.params, &small_encoder(4)).unwrap();
            let own: f64 = z
                .values()
                .iter()
                .zip(index.get(&it.id).unwrap())
                .map(|(a, b)| a * b)
                .sum();
            let other_id = if it.id == "a" { "b" } else { "a" };
            let other: f64 = z
                .values()
                .iter()
                .zip(index.get(other_id).unwrap())
                .map(|(a, b)| a * b)
                .sum();
            assert!(own > other, "{}: own {own} vs other {other}", it.id);
        }
    }

    #[test]
    fn loss_decreases_from_first_to_tenth_epoch() {
        let items: Vec<TrainItem> = [
            ("m0", "CCCCC"),
            ("m1", "CCCCCC"),
            ("m2", "CCCCO"),
            ("m3", "CCCCCO"),
            ("m4", "c1ccccc1"),
            ("m5", "c1ccccc1C"),
            ("m6", "CC(=O)O"),
            ("m7", "CCC(=O)O"),
            ("m8", "CCN"),
            ("m9", "CCCN"),
            ("m10", "CCS"),
            ("m11", "CCCS"),
        ]
        .iter()
        .map(|(id, s)| item(id, s))
        .collect();
        let entries: Vec<(String, Vec<f64>)> = items
            .iter()
            .enumerate()
            .map(|(i, it)| {
                let mut v = vec![0.05; 8];
                v[i % 8] = 1.0;
                (it.id.clone(), v)
            })
            .collect();
        let index = TextEmbeddingIndex::build(8, "test", entries).unwrap();
        let cfg = TrainConfig {
            epochs: 10,
            batch_size: 4,
            lr: 3e-3,
            temperature: 0.1,
            sampler: SamplerConfig {
                max_positives: 2,
                tau_pos: 0.6,
                tau_neg: 0.4,
                negatives: 4,
            },
            seed: 11,
            morgan_sampling: true,
        };
        let out = train(&items, &items, &index, &small_encoder(8), &cfg).unwrap();
        assert!(
            out.curve[9].train_loss < out.curve[0].train_loss,
            "epoch 10 {} vs epoch 1 {}",
            out.curve[9].train_loss,
            out.curve[0].train_loss
        );
    }

    #[test]
    fn same_seed_gives_identical_loss_curves() {
        let (items, index) = two_molecule_setup();
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 2,
            sampler: SamplerConfig {
                max_positives: 1,
                tau_pos: 1.01,
                tau_neg: 1.01,
                negatives: 1,
            },
            ..TrainConfig::default()
        };
        let a = train(&items, &items, &index, &small_encoder(4), &cfg).unwrap();
        let b = train(&items, &items, &index, &small_encoder(4), &cfg).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.best_epoch, b.best_epoch);
    }

    #[test]
    fn morgan_flag_off_equals_plain_contrastive_config() {
        // morgan_sampling = false must behave exactly like a sampler whose
        // positive threshold is unreachable and whose negatives are uniform
        let items: Vec<TrainItem> = [
            ("m0", "CCCCC"),
            ("m1", "CCCCCC"),
            ("m2", "CCCCO"),
            ("m3", "c1ccccc1"),
            ("m4", "CC(=O)O"),
            ("m5", "CCN"),
            ("m6", "CCS"),
            ("m7", "CCCS"),
        ]
        .iter()
        .map(|(id, s)| item(id, s))
        .collect();
        let entries: Vec<(String, Vec<f64>)> = items
            .iter()
            .enumerate()
            .map(|(i, it)| {
                let mut v = vec![0.1; 4];
                v[i % 4] = 1.0;
                (it.id.clone(), v)
            })
            .collect();
        let index = TextEmbeddingIndex::build(4, "test", entries).unwrap();

        let base = TrainConfig {
            epochs: 3,
            batch_size: 4,
            sampler: SamplerConfig {
                negatives: 3,
                ..SamplerConfig::default()
            },
            ..TrainConfig::default()
        };
        let flagged = TrainConfig {
            morgan_sampling: false,
            ..base.clone()
        };
        let explicit = TrainConfig {
            sampler: SamplerConfig::without_morgan(3),
            ..base
        };
        let a = train(&items, &[], &index, &small_encoder(4), &flagged).unwrap();
        let b = train(&items, &[], &index, &small_encoder(4), &explicit).unwrap();
        assert_eq!(a.curve, b.curve);
    }

    #[test]
    fn missing_embedding_ids_are_reported() {
        let (items, _) = two_molecule_setup();
        let index =
            TextEmbeddingIndex::build(4, "test", vec![("a".into(), vec![1.0, 0.0, 0.0, 0.0])])
                .unwrap();
        let err = train(
            &items,
            &[],
            &index,
            &small_encoder(4),
            &TrainConfig::default(),
        )
        .unwrap_err();
        match err {
            TrainerError::Data { missing_ids } => assert_eq!(missing_ids, vec!["b".to_string()]),
            other => panic!("expected Data error, got {other}"),
        }
    }

    #[test]
    fn gae_training_reduces_reconstruction_loss() {
        // 3-node path graph: loss after a couple hundred steps drops
        let items = vec![item("p", "CCO")];
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 1,
            lr: 5e-3,
            ..TrainConfig::default()
        };
        let out = train_gae(&items, &items, &small_encoder(4), &cfg).unwrap();
        assert!(
            out.curve.last().unwrap().train_loss < out.curve[0].train_loss,
            "{} vs {}",
            out.curve.last().unwrap().train_loss,
            out.curve[0].train_loss
        );
    }

    #[test]
    fn loss_curve_csv_shape() {
        let curve = vec![
            EpochStats {
                epoch: 1,
                train_loss: 0.5,
                val_separation: 0.1,
            },
            EpochStats {
                epoch: 2,
                train_loss: 0.4,
                val_separation: 0.2,
            },
        ];
        let csv = loss_curve_csv(&curve);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "epoch,train_loss,val_separation");
        assert_eq!(lines[1], "1,0.500000,0.100000");
        assert_eq!(lines.len(), 3);
    }
}
