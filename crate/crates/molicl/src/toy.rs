//! Bundled deterministic toy datasets and a synthetic caption embedder.
//!
//! The caption set covers fourteen structural families (alkanes, alcohols,
//! diols, amines, acids, esters, ethers, alkylbenzenes, azines, thiols,
//! nitriles, chloroalkanes, ketones, cycloalkanes) with captions derived
//! from structural facts, fourteen members each. The classification set
//! pairs each test molecule with three identical wrong-label near-duplicates
//! ("clustered duplicates") and six correctly labeled family members, so
//! redundancy-blind retrieval walks into the duplicates while diverse
//! retrieval can escape them.
//!
//! The synthetic embedder hashes caption unigrams and bigrams into a
//! fixed-size vector. It stands in for an external text encoder: similar
//! captions get similar vectors, different provenance labels ("scibert",
//! "bert") seed structurally different spaces.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::fingerprint::fnv1a;
use crate::textemb::{TextEmbError, TextEmbeddingIndex};

/// One caption-task record.
#[derive(Debug, Clone, Serialize)]
pub struct CaptionRecord {
    pub id: String,
    pub smiles: String,
    pub caption: String,
}

/// One classification record with a fixed split tag.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyRecord {
    pub id: String,
    pub smiles: String,
    pub label: String,
    pub split: String,
}

fn chain(n: usize) -> String {
    "C".repeat(n)
}

/// The bundled molecule/caption corpus: 196 records across 14 families.
pub fn caption_dataset() -> Vec<CaptionRecord> {
    let mut records = Vec::new();
    let mut push = |family: &str, idx: usize, smiles: String, caption: String| {
        records.push(CaptionRecord {
            id: format!("{family}{idx:02}"),
            smiles,
            caption,
        });
    };

    for n in 1..=14 {
        push(
            "alk",
            n,
            chain(n),
            format!("An acyclic alkane built from {n} carbon atoms joined only by single bonds."),
        );
    }
    for n in 1..=14 {
        push(
            "alc",
            n,
            format!("{}O", chain(n)),
            format!("A primary alcohol bearing a hydroxyl group on a chain of {n} carbons."),
        );
    }
    for n in 2..=15 {
        push(
            "dio",
            n,
            format!("O{}O", chain(n)),
            format!("A diol whose two hydroxyl groups cap a backbone of {n} carbons."),
        );
    }
    for n in 1..=14 {
        push(
            "ami",
            n,
            format!("{}N", chain(n)),
            format!("A primary amine with an amino group terminating an alkyl run of {n} carbons."),
        );
    }
    for n in 1..=14 {
        push(
            "aci",
            n,
            format!("{}C(=O)O", chain(n)),
            format!(
                "A carboxylic acid presenting an acidic carboxyl head on {} total carbons.",
                n + 1
            ),
        );
    }
    for n in 1..=14 {
        push(
            "est",
            n,
            format!("{}C(=O)OC", chain(n)),
            format!(
                "A methyl ester linking an acyl fragment and a methoxy unit across {} carbons.",
                n + 2
            ),
        );
    }
    for n in 1..=14 {
        push(
            "eth",
            n,
            format!("{}OCC", chain(n)),
            format!(
                "A dialkyl ether whose bridging oxygen connects chains holding {} carbons.",
                n + 2
            ),
        );
    }
    for n in 1..=14 {
        push(
            "ben",
            n,
            format!("c1ccccc1{}", chain(n)),
            format!(
                "An aromatic hydrocarbon combining one benzene ring with an alkyl substituent of {n} carbons."
            ),
        );
    }
    for n in 1..=14 {
        push(
            "azi",
            n,
            format!("c1ccncc1{}", chain(n)),
            format!(
                "An aromatic azine placing one nitrogen inside the six membered ring, decorated with {n} side carbons."
            ),
        );
    }
    for n in 1..=14 {
        push(
            "thi",
            n,
            format!("{}S", chain(n)),
            format!("A thiol exposing a sulfanyl group at the end of {n} carbons."),
        );
    }
    for n in 1..=14 {
        push(
            "nit",
            n,
            format!("{}C#N", chain(n)),
            format!(
                "A nitrile terminating in a cyano group after {} carbons.",
                n + 1
            ),
        );
    }
    for n in 1..=14 {
        push(
            "chl",
            n,
            format!("{}Cl", chain(n)),
            format!("A chloroalkane halogenated by one chlorine on {n} carbons."),
        );
    }
    for n in 1..=14 {
        push(
            "ket",
            n,
            format!("{}C(=O)C", chain(n)),
            format!(
                "A methyl ketone embedding a carbonyl between alkyl arms over {} carbons.",
                n + 2
            ),
        );
    }
    for n in 3..=16 {
        push(
            "cyc",
            n,
            format!("C1{}1", chain(n - 1)),
            format!("A saturated carbocycle closing a ring of {n} carbons."),
        );
    }
    records
}

/// The bundled classification corpus with explicit split tags. Each of the
/// twelve test molecules heads its own structural family with a fixed binary
/// label; its training-pool neighborhood holds three identical mislabeled
/// near-duplicates (one carbon longer) plus six correctly labeled relatives:
/// four other chain lengths and two methyl-branched variants.
pub fn property_dataset() -> Vec<PropertyRecord> {
    // (family tag, chain prefix?, tail suffix, label)
    let families: [(&str, &str, &str, bool); 12] = [
        ("ami", "", "N", true),
        ("alc", "", "O", false),
        ("thi", "", "S", true),
        ("chl", "", "Cl", false),
        ("nit", "", "C#N", true),
        ("aci", "", "C(=O)O", false),
        ("est", "", "C(=O)OC", true),
        ("ket", "", "C(=O)C", false),
        ("eth", "", "OCC", true),
        ("dio", "O", "O", false),
        ("ben", "c1ccccc1", "", true),
        ("azi", "c1ccncc1", "", false),
    ];
    let linear = |prefix: &str, tail: &str, n: usize| format!("{prefix}{}{tail}", chain(n));
    // methyl branch after carbon `pos` of an n-carbon chain
    let branched = |prefix: &str, tail: &str, n: usize, pos: usize| {
        format!("{prefix}{}C(C){}{tail}", chain(pos), chain(n - pos - 1))
    };

    let mut records = Vec::new();
    let mut push = |id: String, smiles: String, label: bool, split: &str| {
        records.push(PropertyRecord {
            id,
            smiles,
            label: if label { "1" } else { "0" }.to_string(),
            split: split.to_string(),
        });
    };

    let n = 8;
    for (tag, prefix, tail, label) in families {
        push(format!("{tag}_t"), linear(prefix, tail, n), label, "test");
        for copy in 0..3 {
            // the mislabeled duplicate cluster, one carbon longer
            push(
                format!("{tag}_d{copy}"),
                linear(prefix, tail, n + 1),
                !label,
                "train",
            );
        }
        for (s, m) in [5usize, 6, 7, 10].into_iter().enumerate() {
            push(
                format!("{tag}_s{s}"),
                linear(prefix, tail, m),
                label,
                "train",
            );
        }
        for (b, pos) in [2usize, 4].into_iter().enumerate() {
            push(
                format!("{tag}_b{b}"),
                branched(prefix, tail, n, pos),
                label,
                "train",
            );
        }
    }
    records
}

/// Deterministic pseudo text embedding: unigram and bigram feature hashing
/// with signs, L2-normalized.
pub fn embed_text(text: &str, dim: usize, provenance_seed: u64) -> Vec<f64> {
    assert!(dim > 0);
    let tokens = crate::metrics::tokenize(text);
    let mut v = vec![0.0f64; dim];
    let mut add = |payload: &[u64]| {
        let h = fnv1a(payload);
        let idx = (h % dim as u64) as usize;
        let sign = if (h >> 63) & 1 == 1 { -1.0 } else { 1.0 };
        v[idx] += sign;
    };
    for token in &tokens {
        let mut payload = vec![provenance_seed, 1];
        payload.extend(token.bytes().map(|b| b as u64));
        add(&payload);
    }
    for pair in tokens.windows(2) {
        let mut payload = vec![provenance_seed, 2];
        payload.extend(pair[0].bytes().map(|b| b as u64));
        payload.push(0xff);
        payload.extend(pair[1].bytes().map(|b| b as u64));
        add(&payload);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        // degenerate caption; point at a fixed direction
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Seed for a provenance label; "scibert" and "bert" give different spaces.
pub fn provenance_seed(provenance: &str) -> u64 {
    fnv1a(&provenance.bytes().map(|b| b as u64).collect::<Vec<_>>())
}

/// Build an embedding index for `(id, caption)` pairs under a provenance.
pub fn embedding_index(
    captions: &[(String, String)],
    dim: usize,
    provenance: &str,
) -> Result<TextEmbeddingIndex, TextEmbError> {
    let seed = provenance_seed(provenance);
    let entries: Vec<(String, Vec<f64>)> = captions
        .iter()
        .map(|(id, caption)| (id.clone(), embed_text(caption, dim, seed)))
        .collect();
    let mut index = TextEmbeddingIndex::build(dim, provenance, entries)?;
    index.set_provenance(provenance);
    Ok(index)
}

fn write_jsonl<T: Serialize>(records: &[T], path: &Path) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for record in records {
        writeln!(w, "{}", serde_json::to_string(record)?)?;
    }
    w.flush()
}

/// Write the caption corpus as one JSON object per line.
pub fn write_caption_jsonl(path: &Path) -> std::io::Result<()> {
    write_jsonl(&caption_dataset(), path)
}

/// Write the classification corpus as one JSON object per line.
pub fn write_property_jsonl(path: &Path) -> std::io::Result<()> {
    write_jsonl(&property_dataset(), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    #[test]
    fn caption_corpus_has_about_two_hundred_parseable_records() {
        let records = caption_dataset();
        assert_eq!(records.len(), 196);
        let mut ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), records.len(), "duplicate ids");
        for r in &records {
            parse_smiles(&r.smiles).unwrap_or_else(|e| panic!("{}: {e}", r.id));
            assert!(!r.caption.contains('\n'));
        }
    }

    #[test]
    fn property_corpus_is_tagged_and_parseable() {
        let records = property_dataset();
        assert_eq!(records.len(), 12 * 10);
        let tests: Vec<&PropertyRecord> = records.iter().filter(|r| r.split == "test").collect();
        assert_eq!(tests.len(), 12);
        for r in &records {
            parse_smiles(&r.smiles).unwrap_or_else(|e| panic!("{}: {e}", r.id));
            assert!(r.label == "1" || r.label == "0");
        }
        // every test molecule has three identical duplicates carrying the
        // opposite label, and six relatives carrying its own label
        for t in tests {
            let tag = t.id.strip_suffix("_t").unwrap();
            let decoys: Vec<&PropertyRecord> = records
                .iter()
                .filter(|r| r.id.starts_with(&format!("{tag}_d")))
                .collect();
            assert_eq!(decoys.len(), 3);
            assert!(decoys.iter().all(|r| r.smiles == decoys[0].smiles));
            assert!(decoys.iter().all(|r| r.label != t.label));
            let relatives = records
                .iter()
                .filter(|r| {
                    (r.id.starts_with(&format!("{tag}_s")) || r.id.starts_with(&format!("{tag}_b")))
                        && r.label == t.label
                })
                .count();
            assert_eq!(relatives, 6);
        }
    }

    #[test]
    fn embeddings_cluster_by_family() {
        let records = caption_dataset();
        let seed = provenance_seed("scibert");
        let emb = |caption: &str| embed_text(caption, 64, seed);
        let cos = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

        let alc_a = emb(&records.iter().find(|r| r.id == "alc03").unwrap().caption);
        let alc_b = emb(&records.iter().find(|r| r.id == "alc07").unwrap().caption);
        let ben = emb(&records.iter().find(|r| r.id == "ben05").unwrap().caption);
        let within = cos(&alc_a, &alc_b);
        let across = cos(&alc_a, &ben);
        assert!(
            within > across + 0.2,
            "within {within} should beat across {across}"
        );
    }

    #[test]
    fn provenance_changes_the_space_but_not_the_structure() {
        let a = embed_text("a molecule with a ring", 32, provenance_seed("scibert"));
        let b = embed_text("a molecule with a ring", 32, provenance_seed("bert"));
        assert_ne!(a, b);
        let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((na - 1.0).abs() < 1e-9 && (nb - 1.0).abs() < 1e-9);
    }

    #[test]
    fn embedder_is_deterministic() {
        let a = embed_text("some caption text", 64, 5);
        let b = embed_text("some caption text", 64, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn jsonl_writers_produce_one_object_per_line() {
        let dir = tempfile::tempdir().unwrap();
        let cap = dir.path().join("cap.jsonl");
        let prop = dir.path().join("prop.jsonl");
        write_caption_jsonl(&cap).unwrap();
        write_property_jsonl(&prop).unwrap();
        let text = std::fs::read_to_string(&cap).unwrap();
        assert_eq!(text.lines().count(), 196);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["id"], "alk01");
        assert!(first["caption"].as_str().unwrap().contains("alkane"));
        let text = std::fs::read_to_string(&prop).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["split"], "test");
    }
}
