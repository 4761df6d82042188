//! Parse SMILES strings into attributed molecular graphs.
//!
//! Run: `cargo run --example parse_smiles`

use molicl::molgraph::{atom_in_ring, parse_smiles};

fn main() {
    for smiles in [
        "C",             // methane: four implicit hydrogens
        "CC(=O)O",       // acetic acid
        "c1ccccc1",      // benzene, aromatic ring
        "c1cc[nH]c1",    // pyrrole, bracket atom with explicit H
        "C[N+](=O)[O-]", // nitromethane, charges
        "F/C=C/F",       // stereo markers parsed and discarded
        "CC.OCC",        // dot disconnection
    ] {
        let graph = parse_smiles(smiles).unwrap();
        println!(
            "{smiles}: {} atoms, {} bonds",
            graph.atom_count(),
            graph.bond_count()
        );
        for (i, atom) in graph.atoms.iter().enumerate() {
            println!(
                "  {} {}{} degree={} H={} charge={}{}",
                i,
                atom.element,
                if atom.aromatic { "(ar)" } else { "" },
                atom.degree,
                atom.implicit_h,
                atom.formal_charge,
                if atom_in_ring(&graph, i) { " ring" } else { "" },
            );
        }
    }

    // parse errors carry positions
    for bad in ["C(", "CK", "C1CC", "C(C)(C)(C)(C)C"] {
        println!("{bad}: {}", parse_smiles(bad).unwrap_err());
    }
}
