//! SMILES output driven by an atom priority ordering.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use super::element;
use super::mol::{Atom, BondOrder, Molecule};
use super::parse::implied_hydrogens;

/// Write `mol` as SMILES. Each fragment starts from its lowest-priority atom
/// and neighbors are visited in ascending priority; fragments appear in order
/// of their starting atom's priority.
pub(crate) fn write_smiles(mol: &Molecule, priority: &[u32]) -> String {
    let n = mol.atom_count();
    debug_assert_eq!(priority.len(), n);
    let mut plan = Plan {
        children: vec![Vec::new(); n],
        ring_bonds: vec![Vec::new(); n],
        parent_bond: vec![usize::MAX; n],
        visited: vec![false; n],
        ring_bond: vec![false; mol.bonds().len()],
    };

    let mut starts: Vec<usize> = (0..n).collect();
    starts.sort_by_key(|&a| priority[a]);
    let mut roots = Vec::new();
    for &start in &starts {
        if !plan.visited[start] {
            roots.push(start);
            plan.explore(mol, priority, start);
        }
    }

    let mut out = String::new();
    let mut writer = Emitter {
        mol,
        plan: &plan,
        digit_of_bond: vec![0; mol.bonds().len()],
        free_digits: Vec::new(),
        next_digit: 1,
        written: vec![false; n],
    };
    for (i, &root) in roots.iter().enumerate() {
        if i > 0 {
            out.push('.');
        }
        writer.emit(root, &mut out);
    }
    out
}

struct Plan {
    children: Vec<Vec<(usize, usize)>>,
    ring_bonds: Vec<Vec<(usize, usize)>>,
    parent_bond: Vec<usize>,
    visited: Vec<bool>,
    ring_bond: Vec<bool>,
}

/// (atom, its neighbors as (atom, bond), cursor into that list)
type Frame = (usize, Vec<(usize, usize)>, usize);

impl Plan {
    /// Depth-first traversal that records tree children and ring-closure bonds.
    fn explore(&mut self, mol: &Molecule, priority: &[u32], root: usize) {
        self.visited[root] = true;
        let mut stack: Vec<Frame> = vec![(root, sorted_neighbors(mol, priority, root), 0)];
        while let Some(top) = stack.last_mut() {
            let atom = top.0;
            let Some(&(nbr, bond)) = top.1.get(top.2) else {
                stack.pop();
                continue;
            };
            top.2 += 1;
            if bond == self.parent_bond[atom] || self.ring_bond[bond] {
                continue;
            }
            if self.visited[nbr] {
                self.ring_bond[bond] = true;
                self.ring_bonds[atom].push((nbr, bond));
                self.ring_bonds[nbr].push((atom, bond));
            } else {
                self.visited[nbr] = true;
                self.parent_bond[nbr] = bond;
                self.children[atom].push((nbr, bond));
                stack.push((nbr, sorted_neighbors(mol, priority, nbr), 0));
            }
        }
        // Ring digits at an atom are emitted in priority order of the partner.
        for list in &mut self.ring_bonds {
            list.sort_by_key(|&(other, _)| priority[other]);
        }
    }
}

fn sorted_neighbors(mol: &Molecule, priority: &[u32], atom: usize) -> Vec<(usize, usize)> {
    let mut v = mol.neighbors(atom).to_vec();
    v.sort_by_key(|&(n, _)| priority[n]);
    v
}

struct Emitter<'a> {
    mol: &'a Molecule,
    plan: &'a Plan,
    digit_of_bond: Vec<u32>,
    free_digits: Vec<u32>,
    next_digit: u32,
    written: Vec<bool>,
}

impl Emitter<'_> {
    fn emit(&mut self, root: usize, out: &mut String) {
        enum Step {
            Atom(usize, usize),
            Open,
            Close,
        }
        let mut stack = vec![Step::Atom(root, usize::MAX)];
        while let Some(step) = stack.pop() {
            match step {
                Step::Open => out.push('('),
                Step::Close => out.push(')'),
                Step::Atom(atom, via) => {
                    if via != usize::MAX {
                        let bond = &self.mol.bonds()[via];
                        out.push_str(bond_symbol(self.mol, bond.a, bond.b, bond.order));
                    }
                    self.emit_atom(atom, out);
                    // Every child but the last is a parenthesized branch.
                    let children = &self.plan.children[atom];
                    for (i, &(child, bond)) in children.iter().enumerate().rev() {
                        if i + 1 == children.len() {
                            stack.push(Step::Atom(child, bond));
                        } else {
                            stack.push(Step::Close);
                            stack.push(Step::Atom(child, bond));
                            stack.push(Step::Open);
                        }
                    }
                }
            }
        }
    }

    fn emit_atom(&mut self, atom: usize, out: &mut String) {
        write_atom(self.mol, atom, out);
        self.written[atom] = true;
        let rings = &self.plan.ring_bonds[atom];
        let mut freed = Vec::new();
        for &(other, bond) in rings {
            if self.written[other] && self.digit_of_bond[bond] != 0 {
                let d = self.digit_of_bond[bond];
                push_digit(out, d);
                freed.push(d);
            }
        }
        for &(other, bond) in rings {
            if self.digit_of_bond[bond] == 0 {
                let d = self.take_digit();
                self.digit_of_bond[bond] = d;
                let b = &self.mol.bonds()[bond];
                out.push_str(bond_symbol(self.mol, atom, other, b.order));
                push_digit(out, d);
            }
        }
        // Freed only now so a digit is never closed and reopened on one atom.
        self.free_digits.extend(freed);
    }

    fn take_digit(&mut self) -> u32 {
        if self.free_digits.is_empty() {
            let d = self.next_digit;
            self.next_digit += 1;
            d
        } else {
            self.free_digits.sort_unstable();
            self.free_digits.remove(0)
        }
    }
}

fn push_digit(out: &mut String, d: u32) {
    if d < 10 {
        let _ = write!(out, "{d}");
    } else {
        let _ = write!(out, "%{d:02}");
    }
}

fn bond_symbol(mol: &Molecule, a: usize, b: usize, order: BondOrder) -> &'static str {
    let both_aromatic = mol.atoms()[a].aromatic && mol.atoms()[b].aromatic;
    match order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
}

fn write_atom(mol: &Molecule, idx: usize, out: &mut String) {
    let atom = &mol.atoms()[idx];
    let h = atom.hydrogen_count();
    if writes_bare(atom, mol.bond_valence(idx), h) {
        push_symbol(atom, out);
        return;
    }
    out.push('[');
    if let Some(iso) = atom.isotope {
        let _ = write!(out, "{iso}");
    }
    push_symbol(atom, out);
    match h {
        0 => {}
        1 => out.push('H'),
        n => {
            let _ = write!(out, "H{n}");
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => {
            let _ = write!(out, "+{c}");
        }
        c => {
            let _ = write!(out, "-{}", -c);
        }
    }
    out.push(']');
}

/// An atom can be written without brackets iff re-parsing the bare symbol
/// reproduces its element, charge, isotope and hydrogen count.
fn writes_bare(atom: &Atom, bond_valence: u32, h: u8) -> bool {
    if atom.formal_charge != 0 || atom.isotope.is_some() {
        return false;
    }
    if atom.aromatic && !element::organic_aromatic(atom.atomic_number) {
        return false;
    }
    if !matches!(atom.atomic_number, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53) {
        return false;
    }
    implied_hydrogens(atom.atomic_number, atom.aromatic, bond_valence) == Some(h)
}

fn push_symbol(atom: &Atom, out: &mut String) {
    let sym = element::symbol(atom.atomic_number);
    if atom.aromatic {
        for c in sym.chars() {
            out.push(c.to_ascii_lowercase());
        }
    } else {
        out.push_str(sym);
    }
}
