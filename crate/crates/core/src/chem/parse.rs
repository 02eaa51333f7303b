use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use super::element;
use super::mol::{Atom, Bond, BondOrder, Molecule};
use super::token::{tokenize, TokenKind, TokenizeError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmilesError {
    Tokenize(TokenizeError),
    /// `)` without a matching `(`, or `(` with no preceding atom.
    UnbalancedBranch { pos: usize },
    /// `(` that is never closed.
    UnterminatedBranch { pos: usize },
    EmptyBranch { pos: usize },
    MisplacedBond { pos: usize },
    MisplacedDot { pos: usize },
    MisplacedRingClosure { pos: usize },
    UnmatchedRingClosure { pos: usize },
    RingBondConflict { pos: usize },
    /// Ring closure onto the same atom or onto an already bonded neighbor.
    InvalidRingBond { pos: usize },
    ValenceViolation { atom: usize },
    UnsupportedFeature { pos: usize, feature: &'static str },
    InvalidBracketAtom { pos: usize },
    UnknownElement { pos: usize },
    AromaticOutsideRing { atom: usize },
}

impl SmilesError {
    /// Short stable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            SmilesError::Tokenize(TokenizeError::Empty) => "Empty",
            SmilesError::Tokenize(TokenizeError::UnknownCharacter { .. }) => "UnknownCharacter",
            SmilesError::Tokenize(TokenizeError::UnterminatedBracket { .. }) => "UnterminatedBracket",
            SmilesError::Tokenize(TokenizeError::BadRingLabel { .. }) => "BadRingLabel",
            SmilesError::UnbalancedBranch { .. } => "UnbalancedBranch",
            SmilesError::UnterminatedBranch { .. } => "UnterminatedBranch",
            SmilesError::EmptyBranch { .. } => "EmptyBranch",
            SmilesError::MisplacedBond { .. } => "MisplacedBond",
            SmilesError::MisplacedDot { .. } => "MisplacedDot",
            SmilesError::MisplacedRingClosure { .. } => "MisplacedRingClosure",
            SmilesError::UnmatchedRingClosure { .. } => "UnmatchedRingClosure",
            SmilesError::RingBondConflict { .. } => "RingBondConflict",
            SmilesError::InvalidRingBond { .. } => "InvalidRingBond",
            SmilesError::ValenceViolation { .. } => "ValenceViolation",
            SmilesError::UnsupportedFeature { .. } => "UnsupportedFeature",
            SmilesError::InvalidBracketAtom { .. } => "InvalidBracketAtom",
            SmilesError::UnknownElement { .. } => "UnknownElement",
            SmilesError::AromaticOutsideRing { .. } => "AromaticOutsideRing",
        }
    }
}

impl fmt::Display for SmilesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SmilesError::Tokenize(e) => e.fmt(f),
            SmilesError::ValenceViolation { atom } => write!(f, "valence violation at atom {atom}"),
            SmilesError::AromaticOutsideRing { atom } => {
                write!(f, "aromatic atom {atom} is not in a ring")
            }
            SmilesError::UnsupportedFeature { pos, feature } => {
                write!(f, "unsupported feature at {pos}: {feature}")
            }
            SmilesError::UnbalancedBranch { pos }
            | SmilesError::UnterminatedBranch { pos }
            | SmilesError::EmptyBranch { pos }
            | SmilesError::MisplacedBond { pos }
            | SmilesError::MisplacedDot { pos }
            | SmilesError::MisplacedRingClosure { pos }
            | SmilesError::UnmatchedRingClosure { pos }
            | SmilesError::RingBondConflict { pos }
            | SmilesError::InvalidRingBond { pos }
            | SmilesError::InvalidBracketAtom { pos }
            | SmilesError::UnknownElement { pos } => write!(f, "{} at {pos}", self.kind()),
        }
    }
}

impl core::error::Error for SmilesError {}

impl From<TokenizeError> for SmilesError {
    fn from(e: TokenizeError) -> Self {
        SmilesError::Tokenize(e)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Last {
    Start,
    Atom,
    Ring,
    Bond,
    Open,
    Close,
    Dot,
}

struct OpenRing {
    atom: usize,
    order: Option<BondOrder>,
}

/// Parse a SMILES string into a molecular graph with implicit hydrogens
/// assigned from organic-subset valence rules.
pub fn parse_smiles(text: &str) -> Result<Molecule, SmilesError> {
    let tokens = tokenize(text)?;
    let mut atoms: Vec<Atom> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    // Chain bonds whose aromatic order was inferred rather than written.
    let mut inferred: Vec<usize> = Vec::new();
    let mut prev: Option<usize> = None;
    let mut pending: Option<(BondOrder, usize)> = None;
    let mut last = Last::Start;
    let mut before_bond = Last::Start;
    let mut branches: Vec<(usize, usize)> = Vec::new();
    let mut rings: BTreeMap<u16, OpenRing> = BTreeMap::new();

    for tok in &tokens {
        let pos = tok.pos;
        match tok.kind {
            TokenKind::AtomOrganic | TokenKind::AtomBracket => {
                let atom = if tok.kind == TokenKind::AtomOrganic {
                    organic_atom(tok.text)
                } else {
                    bracket_atom(tok.text, pos)?
                };
                let idx = atoms.len();
                atoms.push(atom);
                match prev {
                    Some(p) => {
                        let order = match pending.take() {
                            Some((o, _)) => o,
                            None => {
                                let o = default_order(&atoms[p], &atoms[idx]);
                                if o == BondOrder::Aromatic {
                                    inferred.push(bonds.len());
                                }
                                o
                            }
                        };
                        bonds.push(Bond { a: p, b: idx, order });
                    }
                    None if pending.is_some() => return Err(SmilesError::MisplacedBond { pos }),
                    None => {}
                }
                prev = Some(idx);
                last = Last::Atom;
            }
            TokenKind::Bond => {
                let order = match tok.text {
                    "-" => BondOrder::Single,
                    "=" => BondOrder::Double,
                    "#" => BondOrder::Triple,
                    ":" => BondOrder::Aromatic,
                    "$" => return Err(SmilesError::UnsupportedFeature { pos, feature: "quadruple bond" }),
                    _ => {
                        return Err(SmilesError::UnsupportedFeature { pos, feature: "directional bond" })
                    }
                };
                if !matches!(last, Last::Atom | Last::Ring | Last::Open | Last::Close) {
                    return Err(SmilesError::MisplacedBond { pos });
                }
                before_bond = last;
                pending = Some((order, pos));
                last = Last::Bond;
            }
            TokenKind::BranchOpen => {
                let Some(p) = prev else {
                    return Err(SmilesError::UnbalancedBranch { pos });
                };
                if !matches!(last, Last::Atom | Last::Ring | Last::Close) {
                    return Err(SmilesError::UnbalancedBranch { pos });
                }
                branches.push((p, pos));
                last = Last::Open;
            }
            TokenKind::BranchClose => {
                if last == Last::Open {
                    return Err(SmilesError::EmptyBranch { pos });
                }
                if let Some((_, bpos)) = pending {
                    return Err(SmilesError::MisplacedBond { pos: bpos });
                }
                let Some((p, _)) = branches.pop() else {
                    return Err(SmilesError::UnbalancedBranch { pos });
                };
                prev = Some(p);
                last = Last::Close;
            }
            TokenKind::RingClosure => {
                let attach_ok = matches!(last, Last::Atom | Last::Ring)
                    || (last == Last::Bond && matches!(before_bond, Last::Atom | Last::Ring));
                let (Some(p), true) = (prev, attach_ok) else {
                    return Err(SmilesError::MisplacedRingClosure { pos });
                };
                let label = ring_label(tok.text);
                let order = pending.take().map(|(o, _)| o);
                match rings.remove(&label) {
                    Some(open) => {
                        if open.atom == p || bonds.iter().any(|b| {
                            (b.a == open.atom && b.b == p) || (b.a == p && b.b == open.atom)
                        }) {
                            return Err(SmilesError::InvalidRingBond { pos });
                        }
                        let order = match (open.order, order) {
                            (Some(a), Some(b)) if a != b => {
                                return Err(SmilesError::RingBondConflict { pos })
                            }
                            (Some(a), _) | (None, Some(a)) => a,
                            (None, None) => default_order(&atoms[open.atom], &atoms[p]),
                        };
                        bonds.push(Bond { a: open.atom, b: p, order });
                    }
                    None => {
                        rings.insert(label, OpenRing { atom: p, order });
                    }
                }
                last = Last::Ring;
            }
            TokenKind::Dot => {
                if !matches!(last, Last::Atom | Last::Ring | Last::Close) || !branches.is_empty() {
                    return Err(SmilesError::MisplacedDot { pos });
                }
                prev = None;
                last = Last::Dot;
            }
        }
    }

    if let Some((_, pos)) = pending {
        return Err(SmilesError::MisplacedBond { pos });
    }
    if let Some(&(_, pos)) = branches.first() {
        return Err(SmilesError::UnterminatedBranch { pos });
    }
    if last == Last::Dot {
        return Err(SmilesError::MisplacedDot { pos: text.len() - 1 });
    }
    if !rings.is_empty() {
        let pos = tokens
            .iter()
            .filter(|t| t.kind == TokenKind::RingClosure && rings.contains_key(&ring_label(t.text)))
            .map(|t| t.pos)
            .next_back()
            .unwrap_or(0);
        return Err(SmilesError::UnmatchedRingClosure { pos });
    }

    assign_hydrogens(&mut atoms, &bonds)?;
    let mut mol = Molecule::from_parts(atoms.clone(), bonds.clone());
    // An unwritten bond between aromatic atoms of different rings is single.
    let chain: Vec<usize> = inferred.into_iter().filter(|&b| !mol.is_ring_bond(b)).collect();
    if !chain.is_empty() {
        for b in chain {
            bonds[b].order = BondOrder::Single;
        }
        mol = Molecule::from_parts(atoms, bonds);
    }
    if let Some(atom) = (0..mol.atom_count()).find(|&i| mol.atoms()[i].aromatic && !mol.is_ring_atom(i)) {
        return Err(SmilesError::AromaticOutsideRing { atom });
    }
    Ok(mol)
}

fn ring_label(text: &str) -> u16 {
    text.trim_start_matches('%').parse().unwrap_or(0)
}

fn default_order(a: &Atom, b: &Atom) -> BondOrder {
    if a.aromatic && b.aromatic {
        BondOrder::Aromatic
    } else {
        BondOrder::Single
    }
}

fn organic_atom(text: &str) -> Atom {
    let aromatic = text.as_bytes()[0].is_ascii_lowercase();
    let atomic_number = match text {
        "B" | "b" => 5,
        "C" | "c" => 6,
        "N" | "n" => 7,
        "O" | "o" => 8,
        "P" | "p" => 15,
        "S" | "s" => 16,
        "F" => 9,
        "Cl" => 17,
        "Br" => 35,
        "I" => 53,
        _ => unreachable!("tokenizer only emits organic-subset symbols"),
    };
    Atom { atomic_number, aromatic, formal_charge: 0, explicit_h: None, implicit_h: 0, isotope: None }
}

fn bracket_atom(text: &str, pos: usize) -> Result<Atom, SmilesError> {
    let inner = &text.as_bytes()[1..text.len() - 1];
    let bad = SmilesError::InvalidBracketAtom { pos };
    let mut i = 0;

    let mut isotope = None;
    while i < inner.len() && inner[i].is_ascii_digit() {
        i += 1;
    }
    if i > 0 {
        let n: u16 = core::str::from_utf8(&inner[..i]).ok().and_then(|s| s.parse().ok()).ok_or(bad.clone())?;
        isotope = Some(n);
    }

    let rest = &inner[i..];
    let (atomic_number, aromatic, len) = match rest.first() {
        None => return Err(bad),
        Some(b'*') => return Err(SmilesError::UnsupportedFeature { pos, feature: "wildcard atom" }),
        Some(c) if c.is_ascii_uppercase() => {
            let two = rest
                .get(1)
                .filter(|b| b.is_ascii_lowercase())
                .and_then(|_| core::str::from_utf8(&rest[..2]).ok())
                .and_then(element::from_symbol);
            match two {
                Some(z) => (z, false, 2),
                None => {
                    let one = core::str::from_utf8(&rest[..1]).ok().and_then(element::from_symbol);
                    (one.ok_or(SmilesError::UnknownElement { pos })?, false, 1)
                }
            }
        }
        Some(c) if c.is_ascii_lowercase() => {
            let two = match rest.get(..2) {
                Some(b"se") => Some(34),
                Some(b"as") => Some(33),
                _ => None,
            };
            match two {
                Some(z) => (z, true, 2),
                None => {
                    let z = match c {
                        b'b' => 5,
                        b'c' => 6,
                        b'n' => 7,
                        b'o' => 8,
                        b'p' => 15,
                        b's' => 16,
                        _ => return Err(SmilesError::UnknownElement { pos }),
                    };
                    (z, true, 1)
                }
            }
        }
        Some(_) => return Err(bad),
    };
    debug_assert!(!aromatic || element::aromatic_capable(atomic_number));
    i += len;

    if inner.get(i) == Some(&b'@') {
        return Err(SmilesError::UnsupportedFeature { pos, feature: "chirality" });
    }

    let mut h = 0u8;
    if inner.get(i) == Some(&b'H') {
        i += 1;
        h = 1;
        if let Some(d) = inner.get(i).filter(|d| d.is_ascii_digit()) {
            h = d - b'0';
            i += 1;
        }
    }

    let mut charge: i32 = 0;
    if let Some(&sign) = inner.get(i).filter(|&&c| c == b'+' || c == b'-') {
        let s = if sign == b'+' { 1 } else { -1 };
        i += 1;
        if let Some(d) = inner.get(i).filter(|d| d.is_ascii_digit()) {
            charge = s * (d - b'0') as i32;
            i += 1;
        } else {
            charge = s;
            while inner.get(i) == Some(&sign) {
                charge += s;
                i += 1;
            }
        }
    }
    if !(-8..=8).contains(&charge) {
        return Err(bad);
    }

    if inner.get(i) == Some(&b':') {
        i += 1;
        let start = i;
        while i < inner.len() && inner[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return Err(bad);
        }
    }
    if i != inner.len() {
        return Err(bad);
    }

    Ok(Atom {
        atomic_number,
        aromatic,
        formal_charge: charge as i8,
        explicit_h: Some(h),
        implicit_h: 0,
        isotope,
    })
}

/// Hydrogens implied for an organic-subset atom with the given bond valence,
/// or `None` if no allowed valence accommodates the bonds.
///
/// Aromatic atoms reserve one extra valence unit for the aromatic system and
/// use only their lowest valence; when that is exceeded the atom gets no
/// hydrogens rather than jumping to a hypervalent state.
pub(crate) fn implied_hydrogens(atomic_number: u8, aromatic: bool, bond_valence: u32) -> Option<u8> {
    let valences = element::organic_valences(atomic_number)?;
    if aromatic {
        let lowest = valences[0] as u32;
        let max = *valences.last().unwrap() as u32;
        if bond_valence < lowest {
            Some((lowest - bond_valence - 1) as u8)
        } else if bond_valence <= max {
            Some(0)
        } else {
            None
        }
    } else {
        valences
            .iter()
            .map(|&v| v as u32)
            .find(|&v| v >= bond_valence)
            .map(|v| (v - bond_valence) as u8)
    }
}

fn assign_hydrogens(atoms: &mut [Atom], bonds: &[Bond]) -> Result<(), SmilesError> {
    let mut valence = alloc::vec![0u32; atoms.len()];
    for b in bonds {
        valence[b.a] += b.order.valence() as u32;
        valence[b.b] += b.order.valence() as u32;
    }
    for (i, atom) in atoms.iter_mut().enumerate() {
        if atom.explicit_h.is_some() {
            continue;
        }
        atom.implicit_h = implied_hydrogens(atom.atomic_number, atom.aromatic, valence[i])
            .ok_or(SmilesError::ValenceViolation { atom: i })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn methane_has_four_hydrogens() {
        let m = parse_smiles("C").unwrap();
        assert_eq!(m.atom_count(), 1);
        assert_eq!(m.atoms()[0].implicit_h, 4);
    }

    #[test]
    fn benzene_aromatic_carbons_have_one_hydrogen() {
        let m = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(m.atom_count(), 6);
        assert!(m.atoms().iter().all(|a| a.aromatic && a.implicit_h == 1));
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        assert_eq!(m.bonds().len(), 6);
    }

    #[test]
    fn pyridine_and_pyrrole_nitrogen() {
        let m = parse_smiles("c1ccncc1").unwrap();
        assert_eq!(m.atoms()[3].implicit_h, 0);
        let m = parse_smiles("c1cc[nH]c1").unwrap();
        assert_eq!(m.atoms()[3].explicit_h, Some(1));
        assert_eq!(m.atoms()[3].implicit_h, 0);
        let m = parse_smiles("Cn1cccc1").unwrap();
        assert_eq!(m.atoms()[1].implicit_h, 0);
    }

    #[test]
    fn valence_rules() {
        let h = |s: &str| parse_smiles(s).unwrap().atoms().iter().map(|a| a.implicit_h).collect::<Vec<_>>();
        assert_eq!(h("CC(=O)O"), [3, 0, 0, 1]);
        assert_eq!(h("CS(=O)(=O)C"), [3, 0, 0, 0, 3]);
        assert_eq!(h("OP(=O)(O)O"), [1, 0, 0, 1, 1]);
        assert_eq!(h("B"), [3]);
        assert_eq!(h("C#N"), [1, 0]);
        assert_eq!(h("c1ccc2ccccc2c1")[3], 0);
    }

    #[test]
    fn bracket_atoms() {
        let m = parse_smiles("[NH4+]").unwrap();
        let a = &m.atoms()[0];
        assert_eq!((a.atomic_number, a.formal_charge, a.explicit_h, a.implicit_h), (7, 1, Some(4), 0));
        let m = parse_smiles("[13CH3][O-]").unwrap();
        assert_eq!(m.atoms()[0].isotope, Some(13));
        assert_eq!(m.atoms()[1].formal_charge, -1);
        let m = parse_smiles("[Fe+++]").unwrap();
        assert_eq!(m.atoms()[0].formal_charge, 3);
        let m = parse_smiles("[Sc]").unwrap();
        assert_eq!(m.atoms()[0].atomic_number, 21);
        let m = parse_smiles("[se]1cccc1").unwrap();
        assert_eq!(m.atoms()[0].atomic_number, 34);
        let m = parse_smiles("[CH3:7]C").unwrap();
        assert_eq!(m.atoms()[0].explicit_h, Some(3));
    }

    #[test]
    fn ring_closure_bond_orders() {
        let m = parse_smiles("C=1CCCCC1").unwrap();
        assert!(m.bond_between(0, 5).is_some_and(|b| b.order == BondOrder::Double));
        let m = parse_smiles("C1CCCCC=1").unwrap();
        assert!(m.bond_between(0, 5).is_some_and(|b| b.order == BondOrder::Double));
        let m = parse_smiles("C%10CC%10").unwrap();
        assert_eq!(m.bonds().len(), 3);
        let m = parse_smiles("C1.C1").unwrap();
        assert_eq!(m.fragment_count(), 1);
    }

    #[test]
    fn fragments() {
        let m = parse_smiles("[Na+].[Cl-]").unwrap();
        assert_eq!(m.fragment_count(), 2);
        assert_eq!(m.bonds().len(), 0);
    }

    #[test]
    fn ring_membership() {
        let m = parse_smiles("CC1CC1").unwrap();
        assert!(!m.is_ring_atom(0));
        assert!((1..4).all(|i| m.is_ring_atom(i)));
        let m = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        let biaryl = m.bond_between(5, 6).unwrap();
        assert_eq!(biaryl.order, BondOrder::Single);
        let m = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        assert_eq!(m.bond_between(5, 6).unwrap().order, BondOrder::Single);
        assert_eq!(m.bond_between(0, 1).unwrap().order, BondOrder::Aromatic);
    }

    #[test]
    fn malformed_inputs_report_kinds() {
        let cases: &[(&str, &str)] = &[
            ("", "Empty"),
            ("C1CC", "UnmatchedRingClosure"),
            ("C(=O", "UnterminatedBranch"),
            ("CC)C", "UnbalancedBranch"),
            ("(C)C", "UnbalancedBranch"),
            ("C()C", "EmptyBranch"),
            ("C==C", "MisplacedBond"),
            ("=CC", "MisplacedBond"),
            ("CC=", "MisplacedBond"),
            ("C(C=)C", "MisplacedBond"),
            ("C.", "MisplacedDot"),
            (".C", "MisplacedDot"),
            ("C..C", "MisplacedDot"),
            ("1CC1", "MisplacedRingClosure"),
            ("C=1CCC-1", "RingBondConflict"),
            ("C11", "InvalidRingBond"),
            ("C1C1", "InvalidRingBond"),
            ("C(C)(C)(C)(C)C", "ValenceViolation"),
            ("O=O=O", "ValenceViolation"),
            ("F/C=C/F", "UnsupportedFeature"),
            ("C[C@H](N)O", "UnsupportedFeature"),
            ("[*]C", "UnsupportedFeature"),
            ("C$C", "UnsupportedFeature"),
            ("[Xx]", "UnknownElement"),
            ("[C+x]", "InvalidBracketAtom"),
            ("cc", "AromaticOutsideRing"),
            ("C*", "UnknownCharacter"),
            ("C[N", "UnterminatedBracket"),
        ];
        for (s, kind) in cases {
            let err = parse_smiles(s).expect_err(s);
            assert_eq!(err.kind(), *kind, "{s}: {err:?}");
        }
    }
}
