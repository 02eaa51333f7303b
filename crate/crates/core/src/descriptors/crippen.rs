//! Wildman–Crippen atom typing as an ordered list of local predicates.
//!
//! Types are tried in table order and the first match wins. A neighbor
//! written without a bond symbol in the published patterns matches single or
//! aromatic bonds; "aliphatic heavy" means a non-aromatic, non-hydrogen atom.

use alloc::vec::Vec;

use crate::chem::{BondOrder, Molecule};

macro_rules! crippen_types {
    ($($name:ident = $value:expr),+ $(,)?) => {
        /// Atom type of the Wildman–Crippen scheme. `Wild` covers elements the
        /// published table does not type.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum CrippenType {
            $($name),+
        }

        impl CrippenType {
            pub const ALL: &'static [CrippenType] = &[$(CrippenType::$name),+];
            pub const COUNT: usize = Self::ALL.len();

            pub fn contribution(self) -> f64 {
                match self {
                    $(CrippenType::$name => $value),+
                }
            }

            pub fn label(self) -> &'static str {
                match self {
                    $(CrippenType::$name => stringify!($name)),+
                }
            }
        }
    };
}

crippen_types! {
    C1 = 0.1441, C2 = 0.0, C3 = -0.2035, C4 = -0.2051, C5 = -0.2783, C6 = 0.1551,
    C7 = 0.0017, C8 = 0.08452, C9 = -0.1444, C10 = -0.0516, C11 = 0.1193, C12 = -0.0967,
    C13 = -0.5443, C14 = 0.0, C15 = 0.245, C16 = 0.198, C17 = 0.0, C18 = 0.1581,
    C19 = 0.2955, C20 = 0.2713, C21 = 0.136, C22 = 0.4619, C23 = 0.5437, C24 = 0.1893,
    C25 = -0.8186, C26 = 0.264, C27 = 0.2148, CS = 0.08129,
    H1 = 0.123, H2 = -0.2677, H3 = 0.2142, H4 = 0.298, HS = 0.1125,
    N1 = -1.019, N2 = -0.7096, N3 = -1.027, N4 = -0.5188, N5 = 0.08387, N6 = 0.1836,
    N7 = -0.3187, N8 = -0.4458, N9 = 0.01508, N10 = -1.950, N11 = -0.3239, N12 = -1.119,
    N13 = -0.3396, N14 = 0.2887, NS = -0.4806,
    O1 = 0.1552, O2 = -0.2893, O3 = -0.0684, O4 = -0.4195, O5 = 0.0335, O6 = -0.3339,
    O7 = -1.189, O8 = 0.1788, O9 = -0.1526, O10 = 0.1129, O11 = 0.4833, O12 = -1.326,
    OS = -0.1188,
    F = 0.4202, Cl = 0.6895, Br = 0.8456, I = 0.8857, Hal = -2.996,
    P = 0.8612, S1 = 0.6482, S2 = -0.0024, S3 = 0.6237,
    Me1 = -0.3808, Wild = -0.0025,
}

/// Per graph atom: its own type, the type of its attached hydrogens (if any)
/// and how many there are.
pub fn atom_types(mol: &Molecule) -> Vec<(CrippenType, Option<CrippenType>, u8)> {
    (0..mol.atom_count())
        .map(|i| {
            let env = Env { mol, i };
            let own = if env.z(i) == 1 { env.hydrogen_on_neighbor() } else { env.heavy_type() };
            let n_h = mol.atoms()[i].hydrogen_count();
            let h = (n_h > 0).then(|| env.attached_hydrogen_type());
            (own, h, n_h)
        })
        .collect()
}

const ALKALI: [u8; 5] = [3, 11, 19, 37, 55];

struct Env<'a> {
    mol: &'a Molecule,
    i: usize,
}

impl Env<'_> {
    fn z(&self, j: usize) -> u8 {
        self.mol.atoms()[j].atomic_number
    }

    fn arom(&self, j: usize) -> bool {
        self.mol.atoms()[j].aromatic
    }

    fn charge(&self) -> i8 {
        self.mol.atoms()[self.i].formal_charge
    }

    fn h(&self) -> usize {
        self.mol.total_h(self.i)
    }

    /// Total connections including hydrogens.
    fn x(&self) -> usize {
        self.mol.degree(self.i) + self.mol.atoms()[self.i].hydrogen_count() as usize
    }

    fn heavy_of(&self, atom: usize) -> impl Iterator<Item = (usize, BondOrder)> + '_ {
        self.mol
            .neighbors(atom)
            .iter()
            .filter(|&&(n, _)| self.z(n) != 1)
            .map(|&(n, b)| (n, self.mol.bonds()[b].order))
    }

    fn heavy(&self) -> impl Iterator<Item = (usize, BondOrder)> + '_ {
        self.heavy_of(self.i)
    }

    /// Heavy neighbors over single or aromatic bonds matching `pred`.
    fn plain(&self, pred: impl Fn(usize) -> bool) -> usize {
        self.heavy().filter(|&(n, o)| matches!(o, BondOrder::Single | BondOrder::Aromatic) && pred(n)).count()
    }

    fn bonded(&self, order: BondOrder, pred: impl Fn(usize) -> bool) -> usize {
        self.heavy().filter(|&(n, o)| o == order && pred(n)).count()
    }

    fn aliphatic(&self, j: usize) -> bool {
        !self.arom(j) && self.z(j) != 1
    }

    fn aliphatic_c(&self, j: usize) -> bool {
        self.z(j) == 6 && !self.arom(j)
    }

    /// Aliphatic N, O, P, S or a halogen.
    fn hetero(&self, j: usize) -> bool {
        !self.arom(j) && matches!(self.z(j), 7 | 8 | 15 | 16 | 9 | 17 | 35 | 53)
    }

    fn heavy_type(&self) -> CrippenType {
        let z = self.z(self.i);
        match z {
            6 if self.arom(self.i) => self.aromatic_carbon(),
            6 => self.aliphatic_carbon(),
            7 => self.nitrogen(),
            8 => self.oxygen(),
            9 | 17 | 35 | 53 if self.charge() < 0 || (z == 53 && self.charge() > 0) => CrippenType::Hal,
            9 => CrippenType::F,
            17 => CrippenType::Cl,
            35 => CrippenType::Br,
            53 => CrippenType::I,
            15 => CrippenType::P,
            16 if self.arom(self.i) => CrippenType::S3,
            16 if self.charge() == 0 => CrippenType::S1,
            16 => CrippenType::S2,
            _ if ALKALI.contains(&z) && self.charge() > 0 => CrippenType::Hal,
            _ if ALKALI.contains(&z) => CrippenType::Me1,
            _ => CrippenType::Wild,
        }
    }

    fn aliphatic_carbon(&self) -> CrippenType {
        use CrippenType::*;
        let h = self.h();
        let x = self.x();
        let c_nbrs = self.plain(|n| self.aliphatic_c(n));
        let het = self.plain(|n| self.hetero(n));
        let aliph = self.plain(|n| self.aliphatic(n));
        let arom = self.plain(|n| self.arom(n));
        let double_c = self.bonded(BondOrder::Double, |n| self.aliphatic_c(n));
        let aliph_any = self.heavy().filter(|&(n, _)| self.aliphatic(n)).count();

        if h == 4 || (h == 3 && c_nbrs >= 1) || (h == 2 && c_nbrs >= 2) {
            return C1;
        }
        if (h == 1 && c_nbrs >= 3) || c_nbrs >= 4 {
            return C2;
        }
        if (h == 3 && het >= 1) || (h == 2 && x == 4 && het >= 1 && aliph >= 2) {
            return C3;
        }
        if x == 4 && het >= 1 && ((h == 1 && aliph >= 3) || (h == 0 && aliph >= 4)) {
            return C4;
        }
        if self.bonded(BondOrder::Double, |n| self.aliphatic(n) && self.z(n) != 6) > 0 {
            return C5;
        }
        if double_c >= 1 && ((h == 2) || (h == 1 && aliph_any >= 2) || (h == 0 && aliph_any >= 3) || double_c >= 2)
        {
            return C6;
        }
        if x == 2 && self.bonded(BondOrder::Triple, |n| self.aliphatic(n)) > 0 {
            return C7;
        }
        if h == 3 && self.plain(|n| self.arom(n) && self.z(n) == 6) > 0 {
            return C8;
        }
        if h == 3 && arom > 0 {
            return C9;
        }
        if x == 4 && arom > 0 {
            return match h {
                2 => C10,
                1 => C11,
                0 => C12,
                _ => CS,
            };
        }
        let arom_c = self.plain(|n| self.arom(n) && self.z(n) == 6);
        let double_arom_c = self.bonded(BondOrder::Double, |n| self.arom(n) && self.z(n) == 6);
        if (double_c >= 1 && arom >= 1 && aliph_any >= 2)
            || (double_c >= 1 && arom_c >= 1 && arom >= 2)
            || (h == 1 && double_c >= 1 && arom >= 1)
            || double_arom_c >= 1
        {
            return C26;
        }
        let unusual = |n: usize| self.aliphatic(n) && !matches!(self.z(n), 6 | 7 | 8 | 15 | 16 | 9 | 17 | 35 | 53);
        if x == 4 && self.heavy().any(|(n, _)| unusual(n)) {
            return C27;
        }
        CS
    }

    fn aromatic_carbon(&self) -> CrippenType {
        use CrippenType::*;
        let h = self.h();
        let unusual = |n: usize| self.aliphatic(n) && !matches!(self.z(n), 6 | 7 | 8 | 16 | 9 | 17 | 35 | 53);
        if h == 0 && self.bonded(BondOrder::Single, unusual) > 0 {
            return C13;
        }
        for (z, t) in [(9, C14), (17, C15), (35, C16), (53, C17)] {
            if self.heavy().any(|(n, _)| self.z(n) == z) {
                return t;
            }
        }
        if h == 1 {
            return C18;
        }
        let ring = self.bonded(BondOrder::Aromatic, |n| self.arom(n));
        if ring >= 3 {
            return C19;
        }
        if ring >= 2 {
            let single = |pred: &dyn Fn(usize) -> bool| self.bonded(BondOrder::Single, pred) > 0;
            if single(&|n| self.arom(n)) {
                return C20;
            }
            for (z, t) in [(6, C21), (7, C22), (8, C23), (16, C24)] {
                if single(&|n| self.aliphatic(n) && self.z(n) == z) {
                    return t;
                }
            }
            if self.bonded(BondOrder::Double, |n| self.aliphatic(n) && matches!(self.z(n), 6..=8)) > 0 {
                return C25;
            }
        }
        CS
    }

    fn nitrogen(&self) -> CrippenType {
        use CrippenType::*;
        let q = self.charge();
        if self.arom(self.i) {
            return match q {
                0 => N11,
                q if q > 0 => N12,
                _ => NS,
            };
        }
        let h = self.h();
        let aliph = self.plain(|n| self.aliphatic(n));
        let arom = self.plain(|n| self.arom(n));
        let heavy = self.heavy().count();
        let double_any = self.bonded(BondOrder::Double, |_| true);
        if q == 0 {
            if h == 2 && aliph >= 1 {
                return N1;
            }
            if h == 1 && aliph >= 2 {
                return N2;
            }
            if h == 2 && arom >= 1 {
                return N3;
            }
            if h == 1 && arom >= 1 && aliph + arom >= 2 {
                return N4;
            }
            if h == 1 && double_any >= 1 {
                return N5;
            }
            if double_any >= 1 && self.plain(|_| true) >= 1 {
                return N6;
            }
            if aliph >= 3 {
                return N7;
            }
            if (arom >= 1 && aliph >= 1 && arom + aliph >= 3) || arom >= 3 {
                return N8;
            }
            if self.bonded(BondOrder::Triple, |n| self.aliphatic(n)) >= 1 {
                return N9;
            }
            return NS;
        }
        if q > 0 && (1..=3).contains(&h) {
            return N10;
        }
        if q > 0 && h == 0 {
            let double_aliph = self.bonded(BondOrder::Double, |n| self.aliphatic(n));
            let all_aliph = self.heavy().filter(|&(n, _)| self.aliphatic(n)).count();
            if aliph >= 4
                || (double_aliph >= 1 && all_aliph >= 2 && heavy >= 3)
                || (self.bonded(BondOrder::Double, |n| self.z(n) == 6) >= 1
                    && self.bonded(BondOrder::Double, |n| self.z(n) == 7) >= 1)
            {
                return N13;
            }
        }
        if q < 0 || (q > 0 && self.bonded(BondOrder::Triple, |n| self.aliphatic(n)) >= 1) {
            return N14;
        }
        NS
    }

    fn oxygen(&self) -> CrippenType {
        use CrippenType::*;
        if self.arom(self.i) {
            return O1;
        }
        let h = self.h();
        let q = self.charge();
        if h == 1 || h == 2 {
            return O2;
        }
        let aliph = self.plain(|n| self.aliphatic(n));
        let arom = self.plain(|n| self.arom(n));
        if aliph >= 2 {
            return O3;
        }
        if arom >= 1 && aliph + arom >= 2 {
            return O4;
        }
        let lone = self.x() == 1;
        let single_to = |z: u8| self.bonded(BondOrder::Single, |n| self.z(n) == z) > 0;
        if self.bonded(BondOrder::Double, |n| matches!(self.z(n), 7 | 8)) > 0 || (q < 0 && lone && single_to(7)) {
            return O5;
        }
        if q < 0 && lone && single_to(16) {
            return O6;
        }
        if q == -1 {
            let carboxylate = self.heavy().any(|(c, o)| {
                o == BondOrder::Single
                    && self.aliphatic_c(c)
                    && self.heavy_of(c).any(|(m, mo)| mo == BondOrder::Double && self.z(m) == 8)
            });
            if carboxylate {
                return O12;
            }
        }
        if q < 0 && lone {
            return O7;
        }
        if self.bonded(BondOrder::Double, |n| self.arom(n) && self.z(n) == 6) > 0 {
            return O8;
        }
        let Some(c) = self.heavy().find(|&(n, o)| o == BondOrder::Double && self.aliphatic_c(n)).map(|(n, _)| n)
        else {
            return OS;
        };
        self.carbonyl(c)
    }

    /// Carbonyl oxygen types, keyed on the carbon's other substituents.
    fn carbonyl(&self, c: usize) -> CrippenType {
        use CrippenType::*;
        let others: Vec<(usize, BondOrder)> = self.heavy_of(c).filter(|&(n, _)| n != self.i).collect();
        let ch = self.mol.total_h(c);
        let cx = self.mol.degree(c) + self.mol.atoms()[c].hydrogen_count() as usize;
        let plain = |pred: &dyn Fn(usize) -> bool| {
            others
                .iter()
                .filter(|&&(n, o)| matches!(o, BondOrder::Single | BondOrder::Aromatic) && pred(n))
                .count()
        };
        let aliph_c = plain(&|n| self.aliphatic_c(n));
        let aliph = plain(&|n| self.aliphatic(n));
        let arom = plain(&|n| self.arom(n));
        let arom_c = plain(&|n| self.arom(n) && self.z(n) == 6);
        if (ch == 1 && aliph_c >= 1)
            || aliph_c >= 2
            || (aliph_c >= 1 && aliph >= 2)
            || (ch == 1 && plain(&|n| self.aliphatic(n) && matches!(self.z(n), 7 | 8)) >= 1)
            || ch == 2
            || (cx == 2 && others.iter().any(|&(n, o)| o == BondOrder::Double && self.z(n) == 8))
        {
            return O9;
        }
        if (ch == 1 && arom_c >= 1) || (aliph_c >= 1 && arom >= 1) || (arom_c >= 1 && (arom >= 2 || aliph >= 1)) {
            return O10;
        }
        if plain(&|n| self.z(n) != 6) >= 2 {
            return O11;
        }
        OS
    }

    /// Type of an explicit hydrogen node, from the atom it is bonded to.
    fn hydrogen_on_neighbor(&self) -> CrippenType {
        match self.mol.neighbors(self.i).first() {
            Some(&(n, _)) if self.z(n) == 1 => CrippenType::H1,
            Some(&(n, _)) => hydrogen_type(self.mol, n, Some(self.i)),
            None if self.mol.atoms()[self.i].hydrogen_count() > 0 => CrippenType::H1,
            None => CrippenType::HS,
        }
    }

    fn attached_hydrogen_type(&self) -> CrippenType {
        if self.z(self.i) == 1 {
            return CrippenType::H1;
        }
        hydrogen_type(self.mol, self.i, None)
    }
}

/// Type of a hydrogen bonded to `host`. `node` is the hydrogen's own graph
/// index when it is an explicit atom, so it is not mistaken for a substituent.
fn hydrogen_type(mol: &Molecule, host: usize, node: Option<usize>) -> CrippenType {
    use CrippenType::*;
    let z = |j: usize| mol.atoms()[j].atomic_number;
    match z(host) {
        6 => H1,
        7 => H3,
        8 => {
            let env = Env { mol, i: host };
            // Other substituents of the oxygen, hydrogens included.
            let others: Vec<usize> = mol.neighbors(host).iter().map(|&(n, _)| n).filter(|&n| Some(n) != node).collect();
            let extra_h = mol.atoms()[host].hydrogen_count() as usize - usize::from(node.is_none());
            if extra_h > 0 || others.iter().any(|&n| z(n) == 1) {
                return H2;
            }
            let sp3 = |c: usize| z(c) == 6 && !env.arom(c) && mol.degree(c) + mol.atoms()[c].hydrogen_count() as usize == 4;
            if others.iter().any(|&n| sp3(n) || (z(n) == 6 && env.arom(n)) || !matches!(z(n), 6 | 7 | 8 | 16)) {
                return H2;
            }
            if others.iter().any(|&n| z(n) == 7) {
                return H3;
            }
            let acid = others.iter().any(|&n| {
                matches!(z(n), 8 | 16)
                    || (z(n) == 6
                        && !env.arom(n)
                        && env.heavy_of(n).any(|(m, o)| {
                            m != host && o == BondOrder::Double && matches!(z(m), 6 | 7 | 8 | 16)
                        }))
            });
            if acid {
                H4
            } else {
                HS
            }
        }
        _ => H2,
    }
}
