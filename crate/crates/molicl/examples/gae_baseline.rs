//! The graph-autoencoder baseline: same GAT trunk, trained to reconstruct
//! adjacency matrices instead of aligning with captions.
//!
//! Run: `cargo run --example gae_baseline`

use molicl::encoder::{encode_gae, gae_decode, EncoderConfig};
use molicl::fingerprint::morgan_fingerprint;
use molicl::molgraph::parse_smiles;
use molicl::toy;
use molicl::trainer::{train_gae, TrainConfig, TrainItem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = toy::caption_dataset();
    let items: Vec<TrainItem> = records
        .iter()
        .take(60)
        .map(|r| {
            let graph = parse_smiles(&r.smiles).unwrap();
            let fingerprint = morgan_fingerprint(&graph, 2, 2048);
            TrainItem {
                id: r.id.clone(),
                graph,
                fingerprint,
            }
        })
        .collect();
    let (valid, train_items) = items.split_at(10);

    let encoder_cfg = EncoderConfig {
        hidden_dim: 16,
        heads_layer1: 2,
        out_dim: 16,
        attn_negative_slope: 0.2,
    };
    let cfg = TrainConfig {
        epochs: 20,
        batch_size: 8,
        lr: 3e-3,
        ..TrainConfig::default()
    };
    let out = train_gae(train_items, valid, &encoder_cfg, &cfg)?;
    println!(
        "reconstruction loss: epoch 1 {:.4} -> epoch {} {:.4}",
        out.curve[0].train_loss,
        out.curve.len(),
        out.curve.last().unwrap().train_loss,
    );

    // reconstructed adjacency for an asymmetric path (symmetric rings pool
    // to identical node embeddings and so to uniform scores)
    let graph = parse_smiles("CCO")?;
    let a_hat = gae_decode(&graph, &out.params, &encoder_cfg)?;
    println!("\nreconstructed adjacency for CCO:");
    for i in 0..graph.atom_count() {
        let row: Vec<String> = (0..graph.atom_count())
            .map(|j| format!("{:.2}", a_hat.get(i, j)))
            .collect();
        println!("  {}", row.join(" "));
    }

    let z = encode_gae(&graph, &out.params, &encoder_cfg)?;
    println!("\npooled embedding dim {} (unit norm)", z.dim());
    Ok(())
}
