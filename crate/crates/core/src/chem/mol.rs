use alloc::vec;
use alloc::vec::Vec;

use super::element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's valence; aromatic bonds count as one.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    /// Fixed injective integer code (single=1, double=2, triple=3, aromatic=4).
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub atomic_number: u8,
    pub aromatic: bool,
    pub formal_charge: i8,
    /// Hydrogen count written inside brackets; `None` for organic-subset atoms.
    pub explicit_h: Option<u8>,
    /// Hydrogens implied by valence rules; always zero for bracket atoms.
    pub implicit_h: u8,
    pub isotope: Option<u16>,
}

impl Atom {
    pub fn symbol(&self) -> &'static str {
        element::symbol(self.atomic_number)
    }

    /// Attached hydrogens that are not graph nodes.
    pub fn hydrogen_count(&self) -> u8 {
        self.explicit_h.unwrap_or(0) + self.implicit_h
    }

    pub fn is_bracket(&self) -> bool {
        self.explicit_h.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// A parsed molecular graph. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Per atom: `(neighbor, bond index)` in insertion order.
    adjacency: Vec<Vec<(usize, usize)>>,
    ring_bond: Vec<bool>,
    ring_atom: Vec<bool>,
    fragments: usize,
}

impl Molecule {
    /// Assemble a molecule from atoms whose hydrogen counts are already
    /// final. Bonds must reference valid, distinct atoms.
    pub(crate) fn from_parts(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Self {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, bond) in bonds.iter().enumerate() {
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }
        let ring_bond = find_ring_bonds(atoms.len(), &bonds, &adjacency);
        let mut ring_atom = vec![false; atoms.len()];
        for (bond, &in_ring) in bonds.iter().zip(&ring_bond) {
            if in_ring {
                ring_atom[bond.a] = true;
                ring_atom[bond.b] = true;
            }
        }
        let fragments = count_components(&adjacency);
        Molecule { atoms, bonds, adjacency, ring_bond, ring_atom, fragments }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// `(neighbor, bond index)` pairs of an atom.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    /// Neighbors that are not hydrogen nodes.
    pub fn heavy_degree(&self, atom: usize) -> usize {
        self.adjacency[atom]
            .iter()
            .filter(|&&(n, _)| self.atoms[n].atomic_number != 1)
            .count()
    }

    /// Attached hydrogens plus hydrogen-node neighbors.
    pub fn total_h(&self, atom: usize) -> usize {
        self.atoms[atom].hydrogen_count() as usize
            + self.adjacency[atom]
                .iter()
                .filter(|&&(n, _)| self.atoms[n].atomic_number == 1)
                .count()
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.ring_atom[atom]
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }

    pub fn fragment_count(&self) -> usize {
        self.fragments
    }

    /// Atom count including all attached hydrogens.
    pub fn total_atom_count(&self) -> usize {
        self.atoms.len() + self.atoms.iter().map(|a| a.hydrogen_count() as usize).sum::<usize>()
    }

    /// Sum of bond valences at an atom (aromatic bonds count one).
    pub fn bond_valence(&self, atom: usize) -> u32 {
        self.adjacency[atom]
            .iter()
            .map(|&(_, b)| self.bonds[b].order.valence() as u32)
            .sum()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a].iter().find(|&&(n, _)| n == b).map(|&(_, i)| &self.bonds[i])
    }
}

/// A bond is in a ring iff it is not a bridge.
fn find_ring_bonds(n: usize, bonds: &[Bond], adjacency: &[Vec<(usize, usize)>]) -> Vec<bool> {
    const UNSEEN: usize = usize::MAX;
    let mut order = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut is_bridge = vec![false; bonds.len()];
    let mut counter = 0;
    // (atom, bond used to enter, next adjacency slot)
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for root in 0..n {
        if order[root] != UNSEEN {
            continue;
        }
        order[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push((root, usize::MAX, 0));
        while let Some(top) = stack.last_mut() {
            let (v, via, slot) = *top;
            if let Some(&(w, bond)) = adjacency[v].get(slot) {
                top.2 += 1;
                if bond == via {
                    continue;
                }
                if order[w] == UNSEEN {
                    order[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push((w, bond, 0));
                } else {
                    low[v] = low[v].min(order[w]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > order[parent] {
                        is_bridge[via] = true;
                    }
                }
            }
        }
    }
    is_bridge.into_iter().map(|b| !b).collect()
}

fn count_components(adjacency: &[Vec<(usize, usize)>]) -> usize {
    let mut seen = vec![false; adjacency.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..adjacency.len() {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &(w, _) in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}
