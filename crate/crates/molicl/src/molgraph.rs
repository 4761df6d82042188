//! SMILES parsing into attributed molecular graphs.
//!
//! The supported grammar covers the organic subset (B, C, N, O, P, S, F, Cl,
//! Br, I) bare and lowercase-aromatic, bracket atoms with optional isotope
//! (ignored), chirality markers (ignored), explicit hydrogen counts, charges,
//! and atom maps (ignored), bond symbols `- = # :` plus the directional
//! `/ \` (treated as single), branches, ring closures `0`-`9` and `%nn`, and
//! dot disconnection. Aromaticity is trusted from lowercase notation; no
//! kekulization or perception is attempted.
//!
//! Implicit hydrogen counts come from a default-valence table (B 3, C 4, N 3,
//! O 2, P 3/5, S 2/4/6 choosing the smallest valence that covers the bond
//! sum, halogens 1). Aromatic bonds count 1.5 toward the bond sum, which is
//! rounded down. Bracket atoms carry their declared hydrogen count instead.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Chemical elements accepted by the parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    B,
    C,
    N,
    O,
    P,
    S,
    F,
    Cl,
    Br,
    I,
}

impl Element {
    /// All supported elements, in the order used for one-hot featurization.
    pub const ALL: [Element; 10] = [
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::P,
        Element::S,
        Element::F,
        Element::Cl,
        Element::Br,
        Element::I,
    ];

    pub fn symbol(&self) -> &'static str {
        match self {
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::P => "P",
            Element::S => "S",
            Element::F => "F",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    fn from_symbol(symbol: &str) -> Option<Element> {
        match symbol {
            "B" => Some(Element::B),
            "C" => Some(Element::C),
            "N" => Some(Element::N),
            "O" => Some(Element::O),
            "P" => Some(Element::P),
            "S" => Some(Element::S),
            "F" => Some(Element::F),
            "Cl" => Some(Element::Cl),
            "Br" => Some(Element::Br),
            "I" => Some(Element::I),
            _ => None,
        }
    }

    /// Default valences, smallest first for multivalent elements.
    fn valences(&self) -> &'static [u32] {
        match self {
            Element::B => &[3],
            Element::C => &[4],
            Element::N => &[3],
            Element::O => &[2],
            Element::P => &[3, 5],
            Element::S => &[2, 4, 6],
            Element::F | Element::Cl | Element::Br | Element::I => &[1],
        }
    }

    fn max_valence(&self) -> u32 {
        *self.valences().last().unwrap()
    }

    /// Index into the element one-hot block of the node feature vector.
    pub fn feature_index(&self) -> usize {
        Element::ALL.iter().position(|e| e == self).unwrap()
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Bond orders distinguished by the graph and featurization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the valence bond sum, with aromatic bonds at 1.5.
    fn valence_weight(&self) -> f64 {
        match self {
            BondOrder::Single => 1.0,
            BondOrder::Double => 2.0,
            BondOrder::Triple => 3.0,
            BondOrder::Aromatic => 1.5,
        }
    }

    /// Stable small integer used in fingerprint hashing and featurization.
    pub fn code(&self) -> u8 {
        match self {
            BondOrder::Single => 0,
            BondOrder::Double => 1,
            BondOrder::Triple => 2,
            BondOrder::Aromatic => 3,
        }
    }
}

/// An atom node of the molecular graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub formal_charge: i32,
    /// Hydrogen count declared inside brackets; `None` for bare atoms.
    pub explicit_h: Option<u32>,
    /// Number of incident bonds (derived).
    pub degree: u32,
    /// Hydrogens not present as graph nodes (derived; equals the declared
    /// count for bracket atoms).
    pub implicit_h: u32,
}

/// A bond edge of the molecular graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    /// Ordered pair of atom indices as encountered in the input.
    pub endpoints: (usize, usize),
    pub order: BondOrder,
    /// True when the bond lies on a cycle (derived; non-bridge edges).
    pub in_ring: bool,
}

/// Attributed molecular graph with featurization applied.
#[derive(Debug, Clone, PartialEq)]
pub struct MolecularGraph {
    pub atoms: Vec<Atom>,
    pub bonds: Vec<Bond>,
    /// Per-atom feature vectors, all of width [`MolecularGraph::node_feature_width`].
    pub node_features: Vec<Vec<f64>>,
    /// Row-major N x N binary adjacency, symmetric with zero diagonal.
    pub adjacency: Vec<u8>,
    /// Per-bond feature vectors of width [`MolecularGraph::edge_feature_width`].
    pub edge_features: Vec<Vec<f64>>,
}

/// Width of the node feature vector: element one-hot over the supported set
/// plus "other" (11), degree one-hot 0-6 (7), formal charge (1), aromatic
/// flag (1), implicit hydrogen one-hot 0-4 (5).
pub const NODE_FEATURE_WIDTH: usize = 11 + 7 + 1 + 1 + 5;

/// Width of the edge feature vector: bond order one-hot (4) plus ring flag.
pub const EDGE_FEATURE_WIDTH: usize = 4 + 1;

impl MolecularGraph {
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub const fn node_feature_width() -> usize {
        NODE_FEATURE_WIDTH
    }

    pub const fn edge_feature_width() -> usize {
        EDGE_FEATURE_WIDTH
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.atoms.len() + j] != 0
    }

    /// Indices of atoms bonded to atom `i`, with the connecting bond index.
    pub fn neighbors(&self, i: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (bi, bond) in self.bonds.iter().enumerate() {
            if bond.endpoints.0 == i {
                out.push((bond.endpoints.1, bi));
            } else if bond.endpoints.1 == i {
                out.push((bond.endpoints.0, bi));
            }
        }
        out
    }

    /// Relabel atoms so that new index `i` holds the atom previously at
    /// `perm[i]`. `perm` must be a permutation of `0..atom_count()`.
    pub fn permute_atoms(&self, perm: &[usize]) -> MolecularGraph {
        let n = self.atoms.len();
        assert_eq!(perm.len(), n, "permutation length");
        let mut inverse = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            assert!(old < n && inverse[old] == usize::MAX, "not a permutation");
            inverse[old] = new;
        }
        let atoms: Vec<Atom> = perm.iter().map(|&old| self.atoms[old].clone()).collect();
        let node_features: Vec<Vec<f64>> = perm
            .iter()
            .map(|&old| self.node_features[old].clone())
            .collect();
        let bonds: Vec<Bond> = self
            .bonds
            .iter()
            .map(|b| Bond {
                endpoints: (inverse[b.endpoints.0], inverse[b.endpoints.1]),
                order: b.order,
                in_ring: b.in_ring,
            })
            .collect();
        let mut adjacency = vec![0u8; n * n];
        for bond in &bonds {
            let (a, b) = bond.endpoints;
            adjacency[a * n + b] = 1;
            adjacency[b * n + a] = 1;
        }
        MolecularGraph {
            atoms,
            bonds,
            node_features,
            adjacency,
            edge_features: self.edge_features.clone(),
        }
    }
}

/// Errors raised while parsing a SMILES string. Positions are 1-based.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmilesError {
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("unsupported element '{symbol}' at position {position}")]
    UnsupportedElement { symbol: String, position: usize },
    #[error("ring closure {label} opened at position {position} was never closed")]
    RingClosure { label: u16, position: usize },
    #[error(
        "valence violation on atom {atom} ({element}): bond order sum {bond_sum} exceeds allowed valence {allowed}"
    )]
    Valence {
        atom: usize,
        element: String,
        bond_sum: u32,
        allowed: u32,
    },
}

impl SmilesError {
    fn parse(position: usize, message: impl Into<String>) -> SmilesError {
        SmilesError::Parse {
            position,
            message: message.into(),
        }
    }
}

struct PendingAtom {
    element: Element,
    aromatic: bool,
    formal_charge: i32,
    explicit_h: Option<u32>,
}

struct RingOpening {
    atom: usize,
    bond: Option<BondOrder>,
    position: usize,
}

struct Parser<'a> {
    chars: Vec<char>,
    text: &'a str,
    pos: usize,
    atoms: Vec<PendingAtom>,
    bonds: Vec<(usize, usize, BondOrder)>,
    prev: Option<usize>,
    pending_bond: Option<BondOrder>,
    pending_bond_pos: usize,
    branch_stack: Vec<(usize, usize)>,
    rings: BTreeMap<u16, RingOpening>,
}

/// Parse a SMILES string into a featurized [`MolecularGraph`].
///
/// Hydrogen counts are filled by valence rules, ring closures resolved,
/// lowercase aromatic atoms flagged, and node/edge features populated.
pub fn parse_smiles(smiles: &str) -> Result<MolecularGraph, SmilesError> {
    let mut parser = Parser {
        chars: smiles.chars().collect(),
        text: smiles,
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        pending_bond: None,
        pending_bond_pos: 0,
        branch_stack: Vec::new(),
        rings: BTreeMap::new(),
    };
    parser.run()?;
    let graph = parser.finish()?;
    Ok(featurize(graph))
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    /// 1-based position of the character at `self.pos`.
    fn here(&self) -> usize {
        self.pos + 1
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        if self.text.is_empty() {
            return Err(SmilesError::parse(1, "empty SMILES string"));
        }
        while let Some(c) = self.peek() {
            match c {
                'A'..='Z' => self.bare_atom()?,
                'b' | 'c' | 'n' | 'o' | 'p' | 's' => self.aromatic_atom()?,
                'a' | 'd'..='z' => {
                    let pos = self.here();
                    return Err(SmilesError::UnsupportedElement {
                        symbol: c.to_string(),
                        position: pos,
                    });
                }
                '[' => self.bracket_atom()?,
                '-' | '=' | '#' | ':' | '/' | '\\' => {
                    let pos = self.here();
                    if self.pending_bond.is_some() {
                        return Err(SmilesError::parse(pos, "two consecutive bond symbols"));
                    }
                    self.pending_bond = Some(match c {
                        '-' | '/' | '\\' => BondOrder::Single,
                        '=' => BondOrder::Double,
                        '#' => BondOrder::Triple,
                        _ => BondOrder::Aromatic,
                    });
                    self.pending_bond_pos = pos;
                    self.bump();
                }
                '(' => {
                    let pos = self.here();
                    match self.prev {
                        Some(a) => self.branch_stack.push((a, pos)),
                        None => {
                            return Err(SmilesError::parse(pos, "branch opened before any atom"))
                        }
                    }
                    if self.pending_bond.is_some() {
                        return Err(SmilesError::parse(pos, "bond symbol before branch open"));
                    }
                    self.bump();
                }
                ')' => {
                    let pos = self.here();
                    if self.pending_bond.is_some() {
                        return Err(SmilesError::parse(pos, "bond symbol before branch close"));
                    }
                    match self.branch_stack.pop() {
                        Some((a, _)) => self.prev = Some(a),
                        None => {
                            return Err(SmilesError::parse(pos, "unmatched closing parenthesis"))
                        }
                    }
                    self.bump();
                }
                '0'..='9' => {
                    let label = c.to_digit(10).unwrap() as u16;
                    let pos = self.here();
                    self.bump();
                    self.ring_bond(label, pos)?;
                }
                '%' => {
                    let pos = self.here();
                    self.bump();
                    let d1 = self.bump();
                    let d2 = self.bump();
                    match (d1, d2) {
                        (Some(a), Some(b)) if a.is_ascii_digit() && b.is_ascii_digit() => {
                            let label =
                                (a.to_digit(10).unwrap() * 10 + b.to_digit(10).unwrap()) as u16;
                            self.ring_bond(label, pos)?;
                        }
                        _ => {
                            return Err(SmilesError::parse(
                                pos,
                                "'%' must be followed by two digits",
                            ))
                        }
                    }
                }
                '.' => {
                    let pos = self.here();
                    if self.pending_bond.is_some() {
                        return Err(SmilesError::parse(pos, "bond symbol before dot"));
                    }
                    if self.prev.is_none() {
                        return Err(SmilesError::parse(pos, "dot before any atom"));
                    }
                    self.prev = None;
                    self.bump();
                }
                other => {
                    return Err(SmilesError::parse(
                        self.here(),
                        format!("unexpected character '{other}'"),
                    ))
                }
            }
        }
        if let Some(&(_, pos)) = self.branch_stack.first() {
            return Err(SmilesError::parse(pos, "unclosed parenthesis"));
        }
        if self.pending_bond.is_some() {
            return Err(SmilesError::parse(
                self.pending_bond_pos,
                "dangling bond symbol at end of input",
            ));
        }
        if let Some((label, opening)) = self.rings.iter().next() {
            return Err(SmilesError::RingClosure {
                label: *label,
                position: opening.position,
            });
        }
        Ok(())
    }

    fn bare_atom(&mut self) -> Result<(), SmilesError> {
        let pos = self.here();
        let first = self.bump().unwrap();
        // Two-character symbols take precedence over single letters.
        let mut symbol = first.to_string();
        if let Some(next) = self.peek() {
            if (first == 'C' && next == 'l') || (first == 'B' && next == 'r') {
                symbol.push(next);
                self.bump();
            }
        }
        let element = Element::from_symbol(&symbol).ok_or(SmilesError::UnsupportedElement {
            symbol: symbol.clone(),
            position: pos,
        })?;
        self.add_atom(
            PendingAtom {
                element,
                aromatic: false,
                formal_charge: 0,
                explicit_h: None,
            },
            pos,
        )
    }

    fn aromatic_atom(&mut self) -> Result<(), SmilesError> {
        let pos = self.here();
        let c = self.bump().unwrap();
        let element = Element::from_symbol(&c.to_ascii_uppercase().to_string()).unwrap();
        self.add_atom(
            PendingAtom {
                element,
                aromatic: true,
                formal_charge: 0,
                explicit_h: None,
            },
            pos,
        )
    }

    fn bracket_atom(&mut self) -> Result<(), SmilesError> {
        let open_pos = self.here();
        self.bump(); // '['

        // Isotope digits are parsed and discarded.
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }

        let sym_pos = self.here();
        let first = match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => c,
            Some(_) | None => {
                return Err(SmilesError::parse(open_pos, "unbalanced or empty bracket"))
            }
        };
        self.bump();
        let aromatic = first.is_ascii_lowercase();
        // A lowercase letter after the first always belongs to a two-letter
        // element symbol, e.g. [Cl-] or the unsupported [Na].
        let mut raw_symbol = first.to_string();
        if let Some(next) = self.peek() {
            if next.is_ascii_lowercase() && !aromatic {
                raw_symbol.push(next);
                self.bump();
            }
        }
        if aromatic && !matches!(first, 'b' | 'c' | 'n' | 'o' | 'p' | 's') {
            return Err(SmilesError::UnsupportedElement {
                symbol: raw_symbol,
                position: sym_pos,
            });
        }
        let mut symbol = raw_symbol.clone();
        symbol[..1].make_ascii_uppercase();
        let element = Element::from_symbol(&symbol).ok_or(SmilesError::UnsupportedElement {
            symbol: raw_symbol,
            position: sym_pos,
        })?;

        // Chirality markers are parsed and discarded.
        while self.peek() == Some('@') {
            self.bump();
        }

        let mut explicit_h = 0u32;
        if self.peek() == Some('H') {
            self.bump();
            explicit_h = 1;
            if let Some(d) = self.peek().filter(|c| c.is_ascii_digit()) {
                explicit_h = d.to_digit(10).unwrap();
                self.bump();
            }
        }

        let mut charge = 0i32;
        while let Some(sign @ ('+' | '-')) = self.peek() {
            let unit = if sign == '+' { 1 } else { -1 };
            self.bump();
            if let Some(d) = self.peek().filter(|c| c.is_ascii_digit()) {
                charge += unit * d.to_digit(10).unwrap() as i32;
                self.bump();
            } else {
                charge += unit;
            }
        }

        // Atom maps are parsed and discarded.
        if self.peek() == Some(':') {
            self.bump();
            if !self.peek().is_some_and(|c| c.is_ascii_digit()) {
                return Err(SmilesError::parse(self.here(), "atom map expects digits"));
            }
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }

        if self.peek() != Some(']') {
            return Err(SmilesError::parse(open_pos, "unbalanced bracket"));
        }
        self.bump();

        self.add_atom(
            PendingAtom {
                element,
                aromatic,
                formal_charge: charge,
                explicit_h: Some(explicit_h),
            },
            open_pos,
        )
    }

    fn add_atom(&mut self, atom: PendingAtom, _pos: usize) -> Result<(), SmilesError> {
        let idx = self.atoms.len();
        let aromatic = atom.aromatic;
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let order = match self.pending_bond.take() {
                Some(order) => order,
                None => {
                    if self.atoms[prev].aromatic && aromatic {
                        BondOrder::Aromatic
                    } else {
                        BondOrder::Single
                    }
                }
            };
            self.push_bond(prev, idx, order)?;
        } else {
            self.pending_bond = None;
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn ring_bond(&mut self, label: u16, pos: usize) -> Result<(), SmilesError> {
        let current = self
            .prev
            .ok_or_else(|| SmilesError::parse(pos, "ring closure before any atom"))?;
        let pending = self.pending_bond.take();
        match self.rings.remove(&label) {
            Some(opening) => {
                if opening.atom == current {
                    return Err(SmilesError::parse(pos, "ring closure bonds atom to itself"));
                }
                let order = match (opening.bond, pending) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(SmilesError::parse(
                            pos,
                            "conflicting bond orders on ring closure",
                        ))
                    }
                    (Some(a), _) => a,
                    (None, Some(b)) => b,
                    (None, None) => {
                        if self.atoms[opening.atom].aromatic && self.atoms[current].aromatic {
                            BondOrder::Aromatic
                        } else {
                            BondOrder::Single
                        }
                    }
                };
                self.push_bond(opening.atom, current, order)?;
            }
            None => {
                self.rings.insert(
                    label,
                    RingOpening {
                        atom: current,
                        bond: pending,
                        position: pos,
                    },
                );
            }
        }
        Ok(())
    }

    fn push_bond(&mut self, a: usize, b: usize, order: BondOrder) -> Result<(), SmilesError> {
        let duplicate = self
            .bonds
            .iter()
            .any(|&(x, y, _)| (x == a && y == b) || (x == b && y == a));
        if duplicate {
            return Err(SmilesError::parse(
                self.here(),
                format!("duplicate bond between atoms {a} and {b}"),
            ));
        }
        self.bonds.push((a, b, order));
        Ok(())
    }

    fn finish(self) -> Result<MolecularGraph, SmilesError> {
        let n = self.atoms.len();
        let mut bond_sum = vec![0.0f64; n];
        let mut sigma_count = vec![0u32; n];
        let mut degree = vec![0u32; n];
        for &(a, b, order) in &self.bonds {
            bond_sum[a] += order.valence_weight();
            bond_sum[b] += order.valence_weight();
            let sigma = if order == BondOrder::Aromatic {
                1
            } else {
                order.valence_weight() as u32
            };
            sigma_count[a] += sigma;
            sigma_count[b] += sigma;
            degree[a] += 1;
            degree[b] += 1;
        }

        let mut atoms = Vec::with_capacity(n);
        for (i, pending) in self.atoms.into_iter().enumerate() {
            let used = bond_sum[i].floor() as u32;
            let implicit_h = match pending.explicit_h {
                Some(h) => {
                    // Bracket atoms carry their hydrogens explicitly; the
                    // check counts sigma bonds only (aromatic as 1), so
                    // [nH] in pyrrole stays legal, and charge widens the
                    // allowance so [N+] with four bonds passes.
                    let allowed =
                        pending.element.max_valence() + pending.formal_charge.unsigned_abs();
                    if sigma_count[i] + h > allowed {
                        return Err(SmilesError::Valence {
                            atom: i,
                            element: pending.element.symbol().to_string(),
                            bond_sum: sigma_count[i] + h,
                            allowed,
                        });
                    }
                    h
                }
                None => {
                    let valence = pending
                        .element
                        .valences()
                        .iter()
                        .copied()
                        .find(|&v| v >= used);
                    match valence {
                        Some(v) => v - used,
                        None => {
                            return Err(SmilesError::Valence {
                                atom: i,
                                element: pending.element.symbol().to_string(),
                                bond_sum: used,
                                allowed: pending.element.max_valence(),
                            })
                        }
                    }
                }
            };
            atoms.push(Atom {
                element: pending.element,
                aromatic: pending.aromatic,
                formal_charge: pending.formal_charge,
                explicit_h: pending.explicit_h,
                degree: degree[i],
                implicit_h,
            });
        }

        let ring_bonds = ring_bond_flags(n, &self.bonds);
        let bonds: Vec<Bond> = self
            .bonds
            .iter()
            .enumerate()
            .map(|(bi, &(a, b, order))| Bond {
                endpoints: (a, b),
                order,
                in_ring: ring_bonds[bi],
            })
            .collect();

        let mut adjacency = vec![0u8; n * n];
        for bond in &bonds {
            let (a, b) = bond.endpoints;
            adjacency[a * n + b] = 1;
            adjacency[b * n + a] = 1;
        }

        Ok(MolecularGraph {
            atoms,
            bonds,
            node_features: Vec::new(),
            adjacency,
            edge_features: Vec::new(),
        })
    }
}

/// Marks bonds that lie on a cycle: every edge that is not a bridge.
fn ring_bond_flags(n: usize, bonds: &[(usize, usize, BondOrder)]) -> Vec<bool> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (bi, &(a, b, _)) in bonds.iter().enumerate() {
        adj[a].push((b, bi));
        adj[b].push((a, bi));
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; bonds.len()];
    let mut timer = 0usize;
    // Iterative DFS lowlink computation; recursion depth could otherwise
    // track the molecule size.
    for start in 0..n {
        if disc[start] != usize::MAX {
            continue;
        }
        let mut stack: Vec<(usize, usize, usize)> = vec![(start, usize::MAX, 0)];
        disc[start] = timer;
        low[start] = timer;
        timer += 1;
        while let Some(top) = stack.last_mut() {
            let (v, parent_edge) = (top.0, top.1);
            if top.2 < adj[v].len() {
                let (to, edge) = adj[v][top.2];
                top.2 += 1;
                if edge == parent_edge {
                    continue;
                }
                if disc[to] == usize::MAX {
                    disc[to] = timer;
                    low[to] = timer;
                    timer += 1;
                    stack.push((to, edge, 0));
                } else {
                    low[v] = low[v].min(disc[to]);
                }
            } else {
                stack.pop();
                if let Some(parent_top) = stack.last() {
                    let parent = parent_top.0;
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        is_bridge[parent_edge] = true;
                    }
                }
            }
        }
    }
    is_bridge.iter().map(|&b| !b).collect()
}

/// Populate node and edge feature vectors on a parsed graph.
///
/// Node features concatenate a one-hot element block (supported set plus
/// "other"), one-hot degree 0-6, the formal charge as a scalar, an aromatic
/// flag, and a one-hot implicit hydrogen count 0-4. Edge features are a
/// one-hot bond order plus a ring flag. The layout is fixed, so feature
/// width never varies across molecules.
pub fn featurize(mut graph: MolecularGraph) -> MolecularGraph {
    graph.node_features = graph
        .atoms
        .iter()
        .map(|atom| {
            let mut f = vec![0.0; NODE_FEATURE_WIDTH];
            f[atom.element.feature_index()] = 1.0;
            // slot 10 is the "other" element bucket, unreachable for parsed atoms
            let degree = (atom.degree as usize).min(6);
            f[11 + degree] = 1.0;
            f[18] = atom.formal_charge as f64;
            f[19] = if atom.aromatic { 1.0 } else { 0.0 };
            let h = (atom.implicit_h as usize).min(4);
            f[20 + h] = 1.0;
            f
        })
        .collect();

    graph.edge_features = graph
        .bonds
        .iter()
        .map(|bond| {
            let mut f = vec![0.0; EDGE_FEATURE_WIDTH];
            f[bond.order.code() as usize] = 1.0;
            f[4] = if bond.in_ring { 1.0 } else { 0.0 };
            f
        })
        .collect();

    graph
}

/// True when atom `i` participates in any ring bond.
pub fn atom_in_ring(graph: &MolecularGraph, i: usize) -> bool {
    graph
        .bonds
        .iter()
        .any(|b| b.in_ring && (b.endpoints.0 == i || b.endpoints.1 == i))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> MolecularGraph {
        parse_smiles(s).unwrap_or_else(|e| panic!("parse {s:?}: {e}"))
    }

    #[test]
    fn methane_has_four_implicit_hydrogens() {
        let g = parse("C");
        assert_eq!(g.atom_count(), 1);
        assert_eq!(g.bond_count(), 0);
        assert_eq!(g.atoms[0].implicit_h, 4);
        assert_eq!(g.atoms[0].degree, 0);
    }

    #[test]
    fn benzene_is_six_aromatic_ring_atoms() {
        let g = parse("c1ccccc1");
        assert_eq!(g.atom_count(), 6);
        assert_eq!(g.bond_count(), 6);
        for atom in &g.atoms {
            assert!(atom.aromatic);
            assert_eq!(atom.implicit_h, 1);
        }
        for bond in &g.bonds {
            assert_eq!(bond.order, BondOrder::Aromatic);
            assert!(bond.in_ring);
        }
        for i in 0..6 {
            assert!(atom_in_ring(&g, i));
        }
    }

    #[test]
    fn unbalanced_parenthesis_reports_position() {
        let err = parse_smiles("C(").unwrap_err();
        assert_eq!(
            err,
            SmilesError::Parse {
                position: 2,
                message: "unclosed parenthesis".into()
            }
        );
    }

    #[test]
    fn acetic_acid_shape() {
        let g = parse("CC(=O)O");
        assert_eq!(g.atom_count(), 4);
        assert_eq!(g.bond_count(), 3);
        let doubles = g
            .bonds
            .iter()
            .filter(|b| b.order == BondOrder::Double)
            .count();
        assert_eq!(doubles, 1);
    }

    #[test]
    fn empty_input_is_a_parse_error() {
        assert!(matches!(
            parse_smiles(""),
            Err(SmilesError::Parse { position: 1, .. })
        ));
    }

    #[test]
    fn unknown_element_is_rejected() {
        assert!(matches!(
            parse_smiles("CK"),
            Err(SmilesError::UnsupportedElement { position: 2, .. })
        ));
        assert!(matches!(
            parse_smiles("[Na]C"),
            Err(SmilesError::UnsupportedElement { .. })
        ));
    }

    #[test]
    fn dangling_ring_closure_is_reported() {
        let err = parse_smiles("C1CC").unwrap_err();
        assert_eq!(
            err,
            SmilesError::RingClosure {
                label: 1,
                position: 2
            }
        );
    }

    #[test]
    fn valence_violation_is_rejected() {
        // five explicit bonds on carbon
        assert!(matches!(
            parse_smiles("C(C)(C)(C)(C)C"),
            Err(SmilesError::Valence { .. })
        ));
        // [CH3] with three extra bonds exceeds 4
        assert!(matches!(
            parse_smiles("C(C)(C)[CH3](C)"),
            Err(SmilesError::Valence { .. })
        ));
    }

    #[test]
    fn bracket_atoms_carry_declared_hydrogens_and_charge() {
        let g = parse("[NH4+]");
        assert_eq!(g.atoms[0].element, Element::N);
        assert_eq!(g.atoms[0].implicit_h, 4);
        assert_eq!(g.atoms[0].explicit_h, Some(4));
        assert_eq!(g.atoms[0].formal_charge, 1);

        let g = parse("[O-]C");
        assert_eq!(g.atoms[0].formal_charge, -1);
        assert_eq!(g.atoms[0].implicit_h, 0);
    }

    #[test]
    fn nitro_group_parses_with_charges() {
        let g = parse("C[N+](=O)[O-]");
        assert_eq!(g.atom_count(), 4);
        assert_eq!(g.atoms[1].formal_charge, 1);
    }

    #[test]
    fn pyrrole_nh_is_aromatic_with_one_hydrogen() {
        let g = parse("c1cc[nH]c1");
        let n = g.atoms.iter().find(|a| a.element == Element::N).unwrap();
        assert!(n.aromatic);
        assert_eq!(n.implicit_h, 1);
    }

    #[test]
    fn stereo_markers_are_discarded() {
        let g = parse("F/C=C/F");
        assert_eq!(g.atom_count(), 4);
        assert_eq!(
            g.bonds
                .iter()
                .filter(|b| b.order == BondOrder::Double)
                .count(),
            1
        );
        let g = parse("N[C@@H](C)C(=O)O");
        assert_eq!(g.atom_count(), 6);
    }

    #[test]
    fn dot_disconnection_gives_two_components() {
        let g = parse("CC.OC");
        assert_eq!(g.atom_count(), 4);
        assert_eq!(g.bond_count(), 2);
        assert!(!g.adjacent(1, 2));
    }

    #[test]
    fn percent_ring_closure() {
        let g = parse("C%12CCCCC%12");
        assert_eq!(g.atom_count(), 6);
        assert_eq!(g.bond_count(), 6);
        assert!(g.bonds.iter().all(|b| b.in_ring));
    }

    #[test]
    fn sulfur_chooses_smallest_covering_valence() {
        assert_eq!(parse("S").atoms[0].implicit_h, 2);
        // sulfate-like S with four explicit bonds lands on valence 6
        let g = parse("O=S(=O)(O)O");
        let s = g.atoms.iter().find(|a| a.element == Element::S).unwrap();
        assert_eq!(s.implicit_h, 0);
        // two doubles + two singles = 6, exactly covered
        assert_eq!(s.degree, 4);
    }

    #[test]
    fn phosphorus_expands_to_valence_five() {
        let g = parse("OP(=O)(O)O");
        let p = g.atoms.iter().find(|a| a.element == Element::P).unwrap();
        assert_eq!(p.implicit_h, 0);
    }

    #[test]
    fn adjacency_row_sums_equal_degrees() {
        for s in ["CCO", "c1ccccc1", "CC(=O)OC1CCCC1", "C#N", "CC.CC"] {
            let g = parse(s);
            let n = g.atom_count();
            for i in 0..n {
                let row: u32 = (0..n).map(|j| g.adjacency[i * n + j] as u32).sum();
                assert_eq!(row, g.atoms[i].degree, "atom {i} of {s}");
            }
            for i in 0..n {
                assert_eq!(g.adjacency[i * n + i], 0);
                for j in 0..n {
                    assert_eq!(g.adjacency[i * n + j], g.adjacency[j * n + i]);
                }
            }
        }
    }

    #[test]
    fn equivalent_smiles_give_isomorphic_graphs() {
        let signature = |g: &MolecularGraph| {
            let mut atoms: Vec<_> = g
                .atoms
                .iter()
                .map(|a| (a.element, a.degree, a.implicit_h))
                .collect();
            atoms.sort();
            let mut orders: Vec<_> = g.bonds.iter().map(|b| b.order).collect();
            orders.sort();
            (atoms, orders)
        };
        for (a, b) in [
            ("CCO", "OCC"),
            ("CC(=O)O", "OC(C)=O"),
            ("c1ccccc1O", "Oc1ccccc1"),
            ("C(F)(F)F", "FC(F)F"),
        ] {
            assert_eq!(signature(&parse(a)), signature(&parse(b)), "{a} vs {b}");
        }
    }

    #[test]
    fn parsing_is_deterministic() {
        let a = parse("CC(=O)Oc1ccccc1C(=O)O");
        let b = parse("CC(=O)Oc1ccccc1C(=O)O");
        assert_eq!(a, b);
    }

    #[test]
    fn feature_vectors_have_fixed_widths() {
        for s in ["C", "c1ccccc1", "[NH4+]", "CC(=O)O"] {
            let g = parse(s);
            for f in &g.node_features {
                assert_eq!(f.len(), NODE_FEATURE_WIDTH);
            }
            for f in &g.edge_features {
                assert_eq!(f.len(), EDGE_FEATURE_WIDTH);
            }
        }
    }

    #[test]
    fn methane_feature_layout() {
        let g = parse("C");
        let f = &g.node_features[0];
        assert_eq!(f[Element::C.feature_index()], 1.0);
        assert_eq!(f[11], 1.0); // degree 0
        assert_eq!(f[18], 0.0); // charge
        assert_eq!(f[19], 0.0); // aromatic
        assert_eq!(f[20 + 4], 1.0); // four implicit hydrogens
        assert_eq!(f.iter().filter(|&&x| x != 0.0).count(), 3);
    }

    #[test]
    fn benzene_bond_features() {
        let g = parse("c1ccccc1");
        for f in &g.edge_features {
            assert_eq!(f[BondOrder::Aromatic.code() as usize], 1.0);
            assert_eq!(f[4], 1.0);
        }
    }

    #[test]
    fn ring_flags_distinguish_fused_and_chain_bonds() {
        let g = parse("C1CC1CC");
        let ring: Vec<bool> = g.bonds.iter().map(|b| b.in_ring).collect();
        assert_eq!(ring.iter().filter(|&&r| r).count(), 3);
        assert_eq!(ring.iter().filter(|&&r| !r).count(), 2);
    }
}
