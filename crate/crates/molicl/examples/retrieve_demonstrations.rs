//! Demonstration selection strategies side by side: random, scaffold
//! (Tanimoto), embedding top-k, and MMR with different diversity weights.
//!
//! Run: `cargo run --example retrieve_demonstrations`

use molicl::encoder::EmbeddingVector;
use molicl::fingerprint::morgan_fingerprint;
use molicl::molgraph::parse_smiles;
use molicl::retrieval::{
    select_mmr, select_topk, DemonstrationPool, MmrConfig, Payload, PoolEntry, PoolQuery, Strategy,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a pool with near-duplicates of the query plus diverse members;
    // embeddings are hand-made so the geometry is easy to read
    let pool_spec: &[(&str, &str, [f64; 3])] = &[
        ("hexanol", "CCCCCCO", [0.99, 0.10, 0.00]),
        ("heptanol", "CCCCCCCO", [0.98, 0.17, 0.00]),
        ("octanol", "CCCCCCCCO", [0.96, 0.26, 0.00]),
        ("butanol", "CCCCO", [0.90, -0.43, 0.00]),
        ("hexane", "CCCCCC", [0.50, 0.00, 0.87]),
        ("phenol", "c1ccccc1O", [0.00, 0.95, 0.31]),
        ("hexylamine", "CCCCCCN", [0.40, -0.60, 0.69]),
    ];
    let entries: Vec<PoolEntry> = pool_spec
        .iter()
        .map(|(name, smiles, z)| PoolEntry {
            id: name.to_string(),
            smiles: smiles.to_string(),
            payload: Payload::Caption(format!("the {name} caption")),
            fingerprint: morgan_fingerprint(&parse_smiles(smiles).unwrap(), 2, 2048),
            embedding: Some(EmbeddingVector::from_unnormalized(z.to_vec())),
        })
        .collect();
    let pool = DemonstrationPool::from_entries(entries, 2, 2048)?;

    let query_graph = parse_smiles("CCCCCO")?; // pentanol
    let query = PoolQuery {
        fingerprint: Some(morgan_fingerprint(&query_graph, 2, 2048)),
        embedding: Some(EmbeddingVector::from_unnormalized(vec![1.0, 0.0, 0.0])),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let show = |label: &str, picked: &[usize]| {
        let names: Vec<&str> = picked.iter().map(|&i| pool.entry(i).id.as_str()).collect();
        println!("{label:24} {}", names.join(", "));
    };

    show(
        "random",
        &select_topk(&query, &pool, 3, Strategy::Random, &mut rng)?,
    );
    show(
        "scaffold (tanimoto)",
        &select_topk(&query, &pool, 3, Strategy::Scaffold, &mut rng)?,
    );
    show(
        "embedding top-k",
        &select_topk(&query, &pool, 3, Strategy::Embedding, &mut rng)?,
    );
    for lambda in [0.0, 0.3, 0.9] {
        let picked = select_mmr(
            query.embedding.as_ref().unwrap(),
            &pool,
            &MmrConfig::new(3, lambda),
        )?;
        show(&format!("mmr lambda={lambda}"), &picked);
    }
    Ok(())
}
