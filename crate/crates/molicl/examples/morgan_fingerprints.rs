//! Morgan fingerprints, Tanimoto similarity, and the fingerprint cache file.
//!
//! Run: `cargo run --example morgan_fingerprints`

use molicl::fingerprint::{morgan_fingerprint, read_cache, tanimoto, write_cache};
use molicl::molgraph::parse_smiles;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let molecules = [
        ("ethanol", "CCO"),
        ("propanol", "CCCO"),
        ("hexane", "CCCCCC"),
        ("benzene", "c1ccccc1"),
        ("phenol", "c1ccccc1O"),
    ];
    let fps: Vec<_> = molecules
        .iter()
        .map(|(name, smiles)| {
            let fp = morgan_fingerprint(&parse_smiles(smiles).unwrap(), 2, 2048);
            println!("{name:8} {} bits set", fp.popcount());
            (name.to_string(), fp)
        })
        .collect();

    println!("\npairwise Tanimoto:");
    for (name_a, fp_a) in &fps {
        let row: Vec<String> = fps
            .iter()
            .map(|(_, fp_b)| format!("{:.2}", tanimoto(fp_a, fp_b).unwrap()))
            .collect();
        println!("  {name_a:8} {}", row.join(" "));
    }

    // fingerprints round-trip through the versioned cache file
    let dir = std::env::temp_dir().join("molicl_fp_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("example.gfpr");
    write_cache(&path, &fps)?;
    let back = read_cache(&path)?;
    println!(
        "\ncache round-trip: {} records at {}",
        back.len(),
        path.display()
    );
    Ok(())
}
