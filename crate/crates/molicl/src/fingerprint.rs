//! Morgan/ECFP circular fingerprints and Tanimoto similarity.
//!
//! The fingerprint procedure, fixed so results are reproducible across
//! platforms and runs:
//!
//! 1. Every atom gets an initial 64-bit identifier: the FNV-1a hash (offset
//!    `0xcbf29ce484222325`, prime `0x100000001b3`, fed 8 little-endian bytes
//!    per value) of the sequence `[element index, degree, implicit hydrogen
//!    count, formal charge as two's-complement u64, aromatic flag, ring
//!    flag]`. All initial identifiers set a bit.
//! 2. For each round `r = 1..=radius`, an atom with at least one neighbor
//!    hashes `[r, own previous id]` followed by `(bond order code, neighbor
//!    previous id)` pairs sorted ascending. The round-`r` environment of an
//!    atom is the set of bonds within `r` steps; an atom whose environment
//!    did not grow since round `r-1` stops contributing.
//! 3. Candidates from rounds >= 1 are deduplicated by environment bond set:
//!    for each distinct bond set, the candidate from the earliest round wins,
//!    with the lowest identifier breaking ties inside a round. (Earliest
//!    round takes precedence so that the bit set at radius `r` always
//!    contains the bit set at radius `r-1`.)
//! 4. Every surviving identifier sets bit `id mod nbits`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::binio;
use crate::molgraph::{atom_in_ring, MolecularGraph};

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

pub(crate) fn fnv1a(values: &[u64]) -> u64 {
    let mut hash = FNV_OFFSET;
    for v in values {
        for b in v.to_le_bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(FNV_PRIME);
        }
    }
    hash
}

/// A fixed-width Morgan fingerprint. The width and radius are carried along
/// so vectors from different configurations are never compared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FingerprintVector {
    words: Vec<u64>,
    nbits: usize,
    radius: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FingerprintError {
    #[error(
        "fingerprint configs differ: {nbits_a} bits radius {radius_a} vs {nbits_b} bits radius {radius_b}"
    )]
    ConfigMismatch {
        nbits_a: usize,
        radius_a: usize,
        nbits_b: usize,
        radius_b: usize,
    },
    #[error("bad magic or version in fingerprint cache")]
    BadMagic,
    #[error("io error: {0}")]
    Io(String),
}

impl From<io::Error> for FingerprintError {
    fn from(e: io::Error) -> Self {
        FingerprintError::Io(e.to_string())
    }
}

impl FingerprintVector {
    fn new(nbits: usize, radius: usize) -> FingerprintVector {
        FingerprintVector {
            words: vec![0u64; nbits / 64],
            nbits,
            radius,
        }
    }

    /// Reassemble a vector from stored words, e.g. when reading an index.
    pub fn from_parts(words: Vec<u64>, nbits: usize, radius: usize) -> FingerprintVector {
        assert_eq!(words.len(), nbits / 64, "word count must match nbits");
        FingerprintVector {
            words,
            nbits,
            radius,
        }
    }

    fn set_bit(&mut self, pos: usize) {
        let pos = pos % self.nbits;
        self.words[pos / 64] |= 1u64 << (pos % 64);
    }

    pub fn get_bit(&self, pos: usize) -> bool {
        let pos = pos % self.nbits;
        (self.words[pos / 64] >> (pos % 64)) & 1 == 1
    }

    pub fn popcount(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Indices of set bits, ascending.
    pub fn on_bits(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (wi, word) in self.words.iter().enumerate() {
            let mut w = *word;
            while w != 0 {
                let bit = w.trailing_zeros() as usize;
                out.push(wi * 64 + bit);
                w &= w - 1;
            }
        }
        out
    }
}

/// Compute the Morgan fingerprint of a featurized graph.
///
/// `nbits` must be a power of two in `512..=4096`; the defaults used across
/// the toolkit are radius 2 and 2048 bits.
pub fn morgan_fingerprint(
    graph: &MolecularGraph,
    radius: usize,
    nbits: usize,
) -> FingerprintVector {
    assert!(
        nbits.is_power_of_two() && (512..=4096).contains(&nbits),
        "nbits must be a power of two in 512..=4096, got {nbits}"
    );
    let n = graph.atom_count();
    let mut fp = FingerprintVector::new(nbits, radius);
    if n == 0 {
        return fp;
    }

    let neighbors: Vec<Vec<(usize, usize)>> = (0..n).map(|i| graph.neighbors(i)).collect();

    let mut ids: Vec<u64> = (0..n).map(|i| initial_identifier(graph, i)).collect();
    for &id in &ids {
        fp.set_bit((id % nbits as u64) as usize);
    }

    // Bond sets within the previous radius, one per atom.
    let mut envs: Vec<Vec<usize>> = vec![Vec::new(); n];
    // env bond set -> (round, identifier): earliest round wins, then lowest id.
    let mut candidates: BTreeMap<Vec<usize>, (usize, u64)> = BTreeMap::new();

    for round in 1..=radius {
        let mut next_ids = ids.clone();
        let mut next_envs = envs.clone();
        for i in 0..n {
            if neighbors[i].is_empty() {
                continue;
            }
            let mut pairs: Vec<(u8, u64)> = neighbors[i]
                .iter()
                .map(|&(j, bi)| (graph.bonds[bi].order.code(), ids[j]))
                .collect();
            pairs.sort_unstable();
            let mut payload = vec![round as u64, ids[i]];
            for (code, id) in &pairs {
                payload.push(*code as u64);
                payload.push(*id);
            }
            let id = fnv1a(&payload);
            let env = environment_bonds(graph, i, round);
            next_ids[i] = id;
            if env == envs[i] {
                // environment stopped growing; nothing new to contribute
                next_envs[i] = env;
                continue;
            }
            next_envs[i] = env.clone();
            candidates
                .entry(env)
                .and_modify(|entry| {
                    if (round, id) < *entry {
                        *entry = (round, id);
                    }
                })
                .or_insert((round, id));
        }
        ids = next_ids;
        envs = next_envs;
    }

    for (_, (_, id)) in candidates {
        fp.set_bit((id % nbits as u64) as usize);
    }
    fp
}

fn initial_identifier(graph: &MolecularGraph, i: usize) -> u64 {
    let atom = &graph.atoms[i];
    fnv1a(&[
        atom.element.feature_index() as u64,
        atom.degree as u64,
        atom.implicit_h as u64,
        atom.formal_charge as i64 as u64,
        atom.aromatic as u64,
        atom_in_ring(graph, i) as u64,
    ])
}

/// Sorted indices of bonds within `radius` steps of atom `i`.
fn environment_bonds(graph: &MolecularGraph, i: usize, radius: usize) -> Vec<usize> {
    let n = graph.atom_count();
    let mut dist = vec![usize::MAX; n];
    dist[i] = 0;
    let mut queue = std::collections::VecDeque::from([i]);
    while let Some(v) = queue.pop_front() {
        if dist[v] >= radius {
            continue;
        }
        for (to, _) in graph.neighbors(v) {
            if dist[to] == usize::MAX {
                dist[to] = dist[v] + 1;
                queue.push_back(to);
            }
        }
    }
    let mut bonds: Vec<usize> = graph
        .bonds
        .iter()
        .enumerate()
        .filter(|(_, b)| {
            let da = dist[b.endpoints.0];
            let db = dist[b.endpoints.1];
            da.min(db) < radius
        })
        .map(|(bi, _)| bi)
        .collect();
    bonds.sort_unstable();
    bonds
}

/// Tanimoto similarity `|a AND b| / |a OR b|`, defined as 1.0 when both
/// vectors are all-zero.
pub fn tanimoto(a: &FingerprintVector, b: &FingerprintVector) -> Result<f64, FingerprintError> {
    if a.nbits != b.nbits || a.radius != b.radius {
        return Err(FingerprintError::ConfigMismatch {
            nbits_a: a.nbits,
            radius_a: a.radius,
            nbits_b: b.nbits,
            radius_b: b.radius,
        });
    }
    let mut and = 0u32;
    let mut or = 0u32;
    for (wa, wb) in a.words.iter().zip(&b.words) {
        and += (wa & wb).count_ones();
        or += (wa | wb).count_ones();
    }
    if or == 0 {
        return Ok(1.0);
    }
    Ok(and as f64 / or as f64)
}

const CACHE_MAGIC: &[u8] = b"GFPR\x01";

/// Write a fingerprint cache file: the `GFPR\x01` magic, a u32 record count,
/// then per record a length-prefixed id, u32 radius, u32 nbits, u32 word
/// count, and the raw little-endian bit words.
pub fn write_cache(
    path: &Path,
    entries: &[(String, FingerprintVector)],
) -> Result<(), FingerprintError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    binio::write_u32(&mut w, entries.len() as u32)?;
    for (id, fp) in entries {
        binio::write_str(&mut w, id)?;
        binio::write_u32(&mut w, fp.radius as u32)?;
        binio::write_u32(&mut w, fp.nbits as u32)?;
        binio::write_u32(&mut w, fp.words.len() as u32)?;
        for word in &fp.words {
            binio::write_u64(&mut w, *word)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a fingerprint cache written by [`write_cache`].
pub fn read_cache(path: &Path) -> Result<Vec<(String, FingerprintVector)>, FingerprintError> {
    let mut r = BufReader::new(File::open(path)?);
    if !binio::expect_magic(&mut r, CACHE_MAGIC)? {
        return Err(FingerprintError::BadMagic);
    }
    let count = binio::read_u32(&mut r)? as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let id = binio::read_str(&mut r)?;
        let radius = binio::read_u32(&mut r)? as usize;
        let nbits = binio::read_u32(&mut r)? as usize;
        let nwords = binio::read_u32(&mut r)? as usize;
        let mut words = Vec::with_capacity(nwords);
        for _ in 0..nwords {
            words.push(binio::read_u64(&mut r)?);
        }
        out.push((
            id,
            FingerprintVector {
                words,
                nbits,
                radius,
            },
        ));
    }
    // trailing bytes mean a corrupt or mismatched file
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(FingerprintError::BadMagic);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn fp(smiles: &str) -> FingerprintVector {
        morgan_fingerprint(&parse_smiles(smiles).unwrap(), 2, 2048)
    }

    #[test]
    fn single_atom_sets_exactly_one_bit() {
        assert_eq!(fp("C").popcount(), 1);
        assert_eq!(fp("O").popcount(), 1);
    }

    #[test]
    fn fingerprints_are_deterministic() {
        let a = fp("CC(=O)Oc1ccccc1C(=O)O");
        let b = fp("CC(=O)Oc1ccccc1C(=O)O");
        assert_eq!(a, b);
    }

    #[test]
    fn benzene_symmetry_bounds_distinct_identifiers() {
        // all atoms are symmetric, so at most one distinct id per round
        let v = fp("c1ccccc1");
        assert!(v.popcount() <= 3, "popcount {}", v.popcount());
        assert!(v.popcount() >= 1);
    }

    #[test]
    fn radius_grows_bit_sets_monotonically() {
        for s in ["CCO", "c1ccccc1O", "CC(=O)OC1CCCC1", "NC(C)C(=O)O", "CCSCC"] {
            let g = parse_smiles(s).unwrap();
            let mut prev: Option<Vec<usize>> = None;
            for radius in 0..4 {
                let bits = morgan_fingerprint(&g, radius, 2048).on_bits();
                if let Some(p) = &prev {
                    assert!(
                        p.iter().all(|b| bits.contains(b)),
                        "radius {radius} of {s} lost bits"
                    );
                }
                prev = Some(bits);
            }
        }
    }

    #[test]
    fn tanimoto_basics() {
        let a = fp("CCO");
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);

        let b = fp("c1ccccc1");
        let t = tanimoto(&a, &b).unwrap();
        assert!((0.0..1.0).contains(&t));

        let sym = tanimoto(&b, &a).unwrap();
        assert_eq!(t, sym);
    }

    #[test]
    fn tanimoto_of_empty_vectors_is_one() {
        let a = FingerprintVector::new(512, 2);
        let b = FingerprintVector::new(512, 2);
        assert_eq!(tanimoto(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn tanimoto_counts_set_arithmetic() {
        let mut a = FingerprintVector::new(512, 2);
        let mut b = FingerprintVector::new(512, 2);
        a.set_bit(3);
        a.set_bit(70);
        a.set_bit(100);
        b.set_bit(3);
        b.set_bit(70);
        b.set_bit(400);
        // intersection 2, union 4
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn tanimoto_disjoint_is_zero() {
        let mut a = FingerprintVector::new(512, 2);
        let mut b = FingerprintVector::new(512, 2);
        a.set_bit(1);
        b.set_bit(2);
        assert_eq!(tanimoto(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn config_mismatch_is_rejected() {
        let a = FingerprintVector::new(512, 2);
        let b = FingerprintVector::new(1024, 2);
        assert!(matches!(
            tanimoto(&a, &b),
            Err(FingerprintError::ConfigMismatch { .. })
        ));
        let c = FingerprintVector::new(512, 3);
        assert!(matches!(
            tanimoto(&a, &c),
            Err(FingerprintError::ConfigMismatch { .. })
        ));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fps.gfpr");
        let entries = vec![
            ("mol-a".to_string(), fp("CCO")),
            ("mol-b".to_string(), fp("c1ccccc1")),
        ];
        write_cache(&path, &entries).unwrap();
        let back = read_cache(&path).unwrap();
        assert_eq!(entries, back);
    }

    #[test]
    fn cache_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.gfpr");
        std::fs::write(&path, b"NOPE\x01rest").unwrap();
        assert!(matches!(read_cache(&path), Err(FingerprintError::BadMagic)));
    }
}
