//! Regenerate the bundled toy datasets and embedding files under `data/`.
//!
//! Run: `cargo run --example make_toy_data`
//!
//! Writes `toy_captions.jsonl`, `toy_property.jsonl`, and the two synthetic
//! caption embedding files (`toy_scibert.gemb`, `toy_bert.gemb`) that stand
//! in for externally computed text encoders. Everything is deterministic,
//! so reruns are byte-identical.

use std::path::Path;

use molicl::toy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new("data");
    std::fs::create_dir_all(data)?;

    toy::write_caption_jsonl(&data.join("toy_captions.jsonl"))?;
    toy::write_property_jsonl(&data.join("toy_property.jsonl"))?;

    let captions: Vec<(String, String)> = toy::caption_dataset()
        .into_iter()
        .map(|r| (r.id, r.caption))
        .collect();
    for provenance in ["scibert", "bert"] {
        let index = toy::embedding_index(&captions, 64, provenance)?;
        let path = data.join(format!("toy_{provenance}.gemb"));
        index.save(&path)?;
        println!("wrote {} ({} vectors, dim 64)", path.display(), index.len());
    }
    println!("wrote data/toy_captions.jsonl (196 records)");
    println!("wrote data/toy_property.jsonl (120 records)");
    Ok(())
}
