//! Contrastive alignment training on the bundled toy captions: fingerprints
//! pick positive/negative caption pairs each epoch, the GAT encoder learns
//! to land molecules next to their captions.
//!
//! Run: `cargo run --example train_alignment`

use molicl::encoder::{encode, EncoderConfig};
use molicl::fingerprint::morgan_fingerprint;
use molicl::molgraph::parse_smiles;
use molicl::sampler::SamplerConfig;
use molicl::toy;
use molicl::trainer::{train, TrainConfig, TrainItem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let records = toy::caption_dataset();
    let captions: Vec<(String, String)> = records
        .iter()
        .map(|r| (r.id.clone(), r.caption.clone()))
        .collect();
    let index = toy::embedding_index(&captions, 64, "scibert")?;

    let items: Vec<TrainItem> = records
        .iter()
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
    let (valid, train_items) = items.split_at(20);

    let encoder_cfg = EncoderConfig {
        hidden_dim: 32,
        heads_layer1: 2,
        out_dim: 64,
        attn_negative_slope: 0.2,
    };
    let cfg = TrainConfig {
        epochs: 15,
        batch_size: 16,
        lr: 3e-3,
        temperature: 0.1,
        sampler: SamplerConfig::default(),
        seed: 7,
        morgan_sampling: true,
    };
    let out = train(train_items, valid, &index, &encoder_cfg, &cfg)?;
    for stats in &out.curve {
        println!(
            "epoch {:2}  loss {:.4}  val separation {:.4}",
            stats.epoch, stats.train_loss, stats.val_separation
        );
    }
    println!("best epoch: {}", out.best_epoch);

    // embeddings now cluster by family
    let z =
        |smiles: &str| encode(&parse_smiles(smiles).unwrap(), &out.params, &encoder_cfg).unwrap();
    let hexanol = z("CCCCCCO");
    println!(
        "\ncosine(hexanol, octanol)  = {:.3}",
        hexanol.cosine(&z("CCCCCCCCO"))
    );
    println!(
        "cosine(hexanol, benzene)  = {:.3}",
        hexanol.cosine(&z("c1ccccc1"))
    );
    Ok(())
}
