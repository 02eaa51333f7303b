//! Periodic table data: symbols and standard atomic weights.

/// Element symbols indexed by atomic number (index 0 is unused).
const SYMBOLS: [&str; 119] = [
    "", "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S",
    "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge",
    "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd",
    "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd",
    "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg",
    "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm",
    "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn",
    "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
];

/// IUPAC 2021 standard (abridged) atomic weights. Elements without a standard
/// weight (no stable isotope with a characteristic terrestrial composition)
/// are `None`.
const WEIGHTS: [Option<f64>; 119] = {
    let mut w = [None; 119];
    w[1] = Some(1.008);
    w[2] = Some(4.0026);
    w[3] = Some(6.94);
    w[4] = Some(9.0122);
    w[5] = Some(10.81);
    w[6] = Some(12.011);
    w[7] = Some(14.007);
    w[8] = Some(15.999);
    w[9] = Some(18.998);
    w[10] = Some(20.180);
    w[11] = Some(22.990);
    w[12] = Some(24.305);
    w[13] = Some(26.982);
    w[14] = Some(28.085);
    w[15] = Some(30.974);
    w[16] = Some(32.06);
    w[17] = Some(35.45);
    w[18] = Some(39.95);
    w[19] = Some(39.098);
    w[20] = Some(40.078);
    w[21] = Some(44.956);
    w[22] = Some(47.867);
    w[23] = Some(50.942);
    w[24] = Some(51.996);
    w[25] = Some(54.938);
    w[26] = Some(55.845);
    w[27] = Some(58.933);
    w[28] = Some(58.693);
    w[29] = Some(63.546);
    w[30] = Some(65.38);
    w[31] = Some(69.723);
    w[32] = Some(72.630);
    w[33] = Some(74.922);
    w[34] = Some(78.971);
    w[35] = Some(79.904);
    w[36] = Some(83.798);
    w[37] = Some(85.468);
    w[38] = Some(87.62);
    w[39] = Some(88.906);
    w[40] = Some(91.224);
    w[41] = Some(92.906);
    w[42] = Some(95.95);
    w[44] = Some(101.07);
    w[45] = Some(102.91);
    w[46] = Some(106.42);
    w[47] = Some(107.87);
    w[48] = Some(112.41);
    w[49] = Some(114.82);
    w[50] = Some(118.71);
    w[51] = Some(121.76);
    w[52] = Some(127.60);
    w[53] = Some(126.90);
    w[54] = Some(131.29);
    w[55] = Some(132.91);
    w[56] = Some(137.33);
    w[57] = Some(138.91);
    w[58] = Some(140.12);
    w[59] = Some(140.91);
    w[60] = Some(144.24);
    w[62] = Some(150.36);
    w[63] = Some(151.96);
    w[64] = Some(157.25);
    w[65] = Some(158.93);
    w[66] = Some(162.50);
    w[67] = Some(164.93);
    w[68] = Some(167.26);
    w[69] = Some(168.93);
    w[70] = Some(173.05);
    w[71] = Some(174.97);
    w[72] = Some(178.49);
    w[73] = Some(180.95);
    w[74] = Some(183.84);
    w[75] = Some(186.21);
    w[76] = Some(190.23);
    w[77] = Some(192.22);
    w[78] = Some(195.08);
    w[79] = Some(196.97);
    w[80] = Some(200.59);
    w[81] = Some(204.38);
    w[82] = Some(207.2);
    w[83] = Some(208.98);
    w[90] = Some(232.04);
    w[91] = Some(231.04);
    w[92] = Some(238.03);
    w
};

/// Highest supported atomic number.
pub const MAX_ATOMIC_NUMBER: u8 = 118;

/// Symbol for an atomic number, e.g. `6 -> "C"`.
pub fn symbol(atomic_number: u8) -> &'static str {
    SYMBOLS.get(atomic_number as usize).copied().unwrap_or("")
}

/// Atomic number for a capitalized element symbol.
pub fn from_symbol(symbol: &str) -> Option<u8> {
    if symbol.is_empty() {
        return None;
    }
    SYMBOLS
        .iter()
        .position(|&s| s == symbol)
        .filter(|&z| z > 0)
        .map(|z| z as u8)
}

/// Standard atomic weight in unified atomic mass units.
pub fn standard_weight(atomic_number: u8) -> Option<f64> {
    WEIGHTS.get(atomic_number as usize).copied().flatten()
}

/// Default valences of the organic subset, smallest first.
pub(crate) fn organic_valences(atomic_number: u8) -> Option<&'static [u8]> {
    match atomic_number {
        5 => Some(&[3]),
        6 => Some(&[4]),
        7 => Some(&[3]),
        8 => Some(&[2]),
        15 => Some(&[3, 5]),
        16 => Some(&[2, 4, 6]),
        9 | 17 | 35 | 53 => Some(&[1]),
        _ => None,
    }
}

/// Elements that may be written as lowercase aromatic symbols.
pub(crate) fn aromatic_capable(atomic_number: u8) -> bool {
    matches!(atomic_number, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34)
}

/// Elements that may appear outside brackets and may be written lowercase
/// outside brackets (b, c, n, o, p, s).
pub(crate) fn organic_aromatic(atomic_number: u8) -> bool {
    matches!(atomic_number, 5 | 6 | 7 | 8 | 15 | 16)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_round_trip() {
        for z in 1..=MAX_ATOMIC_NUMBER {
            assert_eq!(from_symbol(symbol(z)), Some(z));
        }
        assert_eq!(from_symbol("Xx"), None);
        assert_eq!(from_symbol(""), None);
    }

    #[test]
    fn common_weights() {
        assert_eq!(standard_weight(6), Some(12.011));
        assert_eq!(standard_weight(1), Some(1.008));
        assert_eq!(standard_weight(43), None);
        assert_eq!(standard_weight(0), None);
    }
}
