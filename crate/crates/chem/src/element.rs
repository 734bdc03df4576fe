//! Periodic table data: symbols, average atomic weights, admissible valences
//! and isotope masses.

use std::collections::HashMap;
use std::sync::OnceLock;

pub(crate) struct ElementData {
    pub symbol: &'static str,
    pub weight: f64,
    /// Admissible valences in ascending order; `-1` means unchecked (metals).
    pub valences: &'static [i8],
}

static ELEMENTS: [ElementData; 118] = [
    ElementData { symbol: "H", weight: 1.008, valences: &[1] },
    ElementData { symbol: "He", weight: 4.003, valences: &[0] },
    ElementData { symbol: "Li", weight: 6.941, valences: &[1, -1] },
    ElementData { symbol: "Be", weight: 9.012, valences: &[2] },
    ElementData { symbol: "B", weight: 10.812, valences: &[3] },
    ElementData { symbol: "C", weight: 12.011, valences: &[4] },
    ElementData { symbol: "N", weight: 14.007, valences: &[3] },
    ElementData { symbol: "O", weight: 15.999, valences: &[2] },
    ElementData { symbol: "F", weight: 18.998, valences: &[1] },
    ElementData { symbol: "Ne", weight: 20.18, valences: &[0] },
    ElementData { symbol: "Na", weight: 22.99, valences: &[1, -1] },
    ElementData { symbol: "Mg", weight: 24.305, valences: &[2, -1] },
    ElementData { symbol: "Al", weight: 26.982, valences: &[3] },
    ElementData { symbol: "Si", weight: 28.086, valences: &[4] },
    ElementData { symbol: "P", weight: 30.974, valences: &[3, 5] },
    ElementData { symbol: "S", weight: 32.067, valences: &[2, 4, 6] },
    ElementData { symbol: "Cl", weight: 35.453, valences: &[1] },
    ElementData { symbol: "Ar", weight: 39.948, valences: &[0] },
    ElementData { symbol: "K", weight: 39.098, valences: &[1, -1] },
    ElementData { symbol: "Ca", weight: 40.078, valences: &[2, -1] },
    ElementData { symbol: "Sc", weight: 44.956, valences: &[-1] },
    ElementData { symbol: "Ti", weight: 47.867, valences: &[-1] },
    ElementData { symbol: "V", weight: 50.944, valences: &[-1] },
    ElementData { symbol: "Cr", weight: 51.996, valences: &[-1] },
    ElementData { symbol: "Mn", weight: 54.938, valences: &[-1] },
    ElementData { symbol: "Fe", weight: 55.845, valences: &[-1] },
    ElementData { symbol: "Co", weight: 58.933, valences: &[-1] },
    ElementData { symbol: "Ni", weight: 58.693, valences: &[-1] },
    ElementData { symbol: "Cu", weight: 63.546, valences: &[-1] },
    ElementData { symbol: "Zn", weight: 65.39, valences: &[-1] },
    ElementData { symbol: "Ga", weight: 69.723, valences: &[3] },
    ElementData { symbol: "Ge", weight: 72.61, valences: &[4] },
    ElementData { symbol: "As", weight: 74.922, valences: &[3, 5] },
    ElementData { symbol: "Se", weight: 78.96, valences: &[2, 4, 6] },
    ElementData { symbol: "Br", weight: 79.904, valences: &[1] },
    ElementData { symbol: "Kr", weight: 83.8, valences: &[0] },
    ElementData { symbol: "Rb", weight: 85.468, valences: &[1, -1] },
    ElementData { symbol: "Sr", weight: 87.62, valences: &[2, -1] },
    ElementData { symbol: "Y", weight: 88.906, valences: &[-1] },
    ElementData { symbol: "Zr", weight: 91.224, valences: &[-1] },
    ElementData { symbol: "Nb", weight: 92.906, valences: &[-1] },
    ElementData { symbol: "Mo", weight: 95.94, valences: &[-1] },
    ElementData { symbol: "Tc", weight: 98.0, valences: &[-1] },
    ElementData { symbol: "Ru", weight: 101.07, valences: &[-1] },
    ElementData { symbol: "Rh", weight: 102.906, valences: &[-1] },
    ElementData { symbol: "Pd", weight: 106.42, valences: &[-1] },
    ElementData { symbol: "Ag", weight: 107.868, valences: &[-1] },
    ElementData { symbol: "Cd", weight: 112.412, valences: &[-1] },
    ElementData { symbol: "In", weight: 114.818, valences: &[3] },
    ElementData { symbol: "Sn", weight: 118.711, valences: &[2, 4] },
    ElementData { symbol: "Sb", weight: 121.76, valences: &[3, 5] },
    ElementData { symbol: "Te", weight: 127.6, valences: &[2, 4, 6] },
    ElementData { symbol: "I", weight: 126.904, valences: &[1, 3, 5] },
    ElementData { symbol: "Xe", weight: 131.29, valences: &[0, 2, 4, 6] },
    ElementData { symbol: "Cs", weight: 132.905, valences: &[1] },
    ElementData { symbol: "Ba", weight: 137.328, valences: &[2, -1] },
    ElementData { symbol: "La", weight: 138.906, valences: &[-1] },
    ElementData { symbol: "Ce", weight: 140.116, valences: &[-1] },
    ElementData { symbol: "Pr", weight: 140.908, valences: &[-1] },
    ElementData { symbol: "Nd", weight: 144.24, valences: &[-1] },
    ElementData { symbol: "Pm", weight: 145.0, valences: &[-1] },
    ElementData { symbol: "Sm", weight: 150.36, valences: &[-1] },
    ElementData { symbol: "Eu", weight: 151.964, valences: &[-1] },
    ElementData { symbol: "Gd", weight: 157.25, valences: &[-1] },
    ElementData { symbol: "Tb", weight: 158.925, valences: &[-1] },
    ElementData { symbol: "Dy", weight: 162.5, valences: &[-1] },
    ElementData { symbol: "Ho", weight: 164.93, valences: &[-1] },
    ElementData { symbol: "Er", weight: 167.26, valences: &[-1] },
    ElementData { symbol: "Tm", weight: 168.934, valences: &[-1] },
    ElementData { symbol: "Yb", weight: 173.04, valences: &[-1] },
    ElementData { symbol: "Lu", weight: 174.967, valences: &[-1] },
    ElementData { symbol: "Hf", weight: 178.49, valences: &[-1] },
    ElementData { symbol: "Ta", weight: 180.948, valences: &[-1] },
    ElementData { symbol: "W", weight: 183.84, valences: &[-1] },
    ElementData { symbol: "Re", weight: 186.207, valences: &[-1] },
    ElementData { symbol: "Os", weight: 190.23, valences: &[-1] },
    ElementData { symbol: "Ir", weight: 192.217, valences: &[-1] },
    ElementData { symbol: "Pt", weight: 195.078, valences: &[-1] },
    ElementData { symbol: "Au", weight: 196.967, valences: &[-1] },
    ElementData { symbol: "Hg", weight: 200.59, valences: &[-1] },
    ElementData { symbol: "Tl", weight: 204.383, valences: &[-1] },
    ElementData { symbol: "Pb", weight: 207.2, valences: &[2, 4] },
    ElementData { symbol: "Bi", weight: 208.98, valences: &[3, 5] },
    ElementData { symbol: "Po", weight: 209.0, valences: &[2, 4, 6] },
    ElementData { symbol: "At", weight: 210.0, valences: &[1, 3, 5] },
    ElementData { symbol: "Rn", weight: 222.0, valences: &[0] },
    ElementData { symbol: "Fr", weight: 223.0, valences: &[1] },
    ElementData { symbol: "Ra", weight: 226.0, valences: &[2, -1] },
    ElementData { symbol: "Ac", weight: 227.0, valences: &[-1] },
    ElementData { symbol: "Th", weight: 232.038, valences: &[-1] },
    ElementData { symbol: "Pa", weight: 231.036, valences: &[-1] },
    ElementData { symbol: "U", weight: 238.029, valences: &[-1] },
    ElementData { symbol: "Np", weight: 237.0, valences: &[-1] },
    ElementData { symbol: "Pu", weight: 244.0, valences: &[-1] },
    ElementData { symbol: "Am", weight: 243.0, valences: &[-1] },
    ElementData { symbol: "Cm", weight: 247.0, valences: &[-1] },
    ElementData { symbol: "Bk", weight: 247.0, valences: &[-1] },
    ElementData { symbol: "Cf", weight: 251.0, valences: &[-1] },
    ElementData { symbol: "Es", weight: 252.0, valences: &[-1] },
    ElementData { symbol: "Fm", weight: 257.0, valences: &[-1] },
    ElementData { symbol: "Md", weight: 258.0, valences: &[-1] },
    ElementData { symbol: "No", weight: 259.0, valences: &[-1] },
    ElementData { symbol: "Lr", weight: 262.0, valences: &[-1] },
    ElementData { symbol: "Rf", weight: 267.0, valences: &[-1] },
    ElementData { symbol: "Db", weight: 268.0, valences: &[-1] },
    ElementData { symbol: "Sg", weight: 269.0, valences: &[-1] },
    ElementData { symbol: "Bh", weight: 270.0, valences: &[-1] },
    ElementData { symbol: "Hs", weight: 269.0, valences: &[-1] },
    ElementData { symbol: "Mt", weight: 278.0, valences: &[-1] },
    ElementData { symbol: "Ds", weight: 281.0, valences: &[-1] },
    ElementData { symbol: "Rg", weight: 281.0, valences: &[-1] },
    ElementData { symbol: "Cn", weight: 285.0, valences: &[-1] },
    ElementData { symbol: "Nh", weight: 284.0, valences: &[-1] },
    ElementData { symbol: "Fl", weight: 289.0, valences: &[-1] },
    ElementData { symbol: "Mc", weight: 288.0, valences: &[-1] },
    ElementData { symbol: "Lv", weight: 293.0, valences: &[-1] },
    ElementData { symbol: "Ts", weight: 292.0, valences: &[-1] },
    ElementData { symbol: "Og", weight: 294.0, valences: &[-1] },
];

static ISOTOPES: &str = include_str!("../data/isotopes.tsv");

/// Atomic number of a (case-sensitive) element symbol, e.g. `"Cl"` -> 17.
pub fn atomic_number(symbol: &str) -> Option<u8> {
    ELEMENTS
        .iter()
        .position(|e| e.symbol == symbol)
        .map(|i| (i + 1) as u8)
}

pub fn symbol(atomic_number: u8) -> &'static str {
    data(atomic_number).map_or("*", |e| e.symbol)
}

/// Average atomic weight in g/mol.
pub fn average_weight(atomic_number: u8) -> f64 {
    data(atomic_number).map_or(0.0, |e| e.weight)
}

/// Exact mass of a specific isotope; falls back to the mass number when the
/// isotope is not tabulated.
pub fn isotope_mass(atomic_number: u8, mass_number: u16) -> f64 {
    static TABLE: OnceLock<HashMap<(u8, u16), f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        ISOTOPES
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .filter_map(|l| {
                let mut it = l.split('\t');
                let z = it.next()?.parse().ok()?;
                let a = it.next()?.parse().ok()?;
                let m = it.next()?.parse().ok()?;
                Some(((z, a), m))
            })
            .collect()
    });
    table
        .get(&(atomic_number, mass_number))
        .copied()
        .unwrap_or(f64::from(mass_number))
}

/// Valence list for an element, shifted for formal charge by treating the
/// ion as its isoelectronic neighbour (N+ behaves like C, O- like F, ...).
/// Returns `None` when the valence is unchecked.
pub(crate) fn allowed_valences(atomic_number: u8, charge: i8) -> Option<&'static [i8]> {
    let own = data(atomic_number)?.valences;
    if own.contains(&-1) {
        return None;
    }
    if charge == 0 {
        return Some(own);
    }
    let effective = i16::from(atomic_number) - i16::from(charge);
    if effective < 1 {
        return Some(&[0]);
    }
    // Stay inside the same period so that e.g. F- maps onto Ne, not Na.
    if period(atomic_number) != period(effective as u8) && effective as u8 != next_noble(atomic_number) {
        return Some(&[0]);
    }
    match data(effective as u8) {
        Some(e) if e.valences.contains(&-1) => None,
        Some(e) => Some(e.valences),
        None => Some(&[0]),
    }
}

/// Smallest admissible valence that is `>= used`, if any.
pub(crate) fn target_valence(atomic_number: u8, charge: i8, used: i32) -> Option<i32> {
    allowed_valences(atomic_number, charge)?
        .iter()
        .map(|&v| i32::from(v))
        .find(|&v| v >= used)
}

/// First entry of the valence list, or -1 when unchecked.
pub(crate) fn default_valence(atomic_number: u8) -> i32 {
    match data(atomic_number) {
        Some(e) if !e.valences.contains(&-1) => i32::from(e.valences[0]),
        _ => -1,
    }
}

/// Valence-shell electron count of main-group elements.
pub(crate) fn outer_electrons(z: u8) -> i32 {
    let z = i32::from(z);
    let noble = [0, 2, 10, 18, 36, 54, 86, 118];
    let p = noble.iter().rposition(|&n| n < z).unwrap_or(0);
    let offset = z - noble[p];
    match p {
        0 => z,
        1 | 2 => offset,
        3 | 4 if offset > 12 => offset - 10,
        5 | 6 if offset > 26 => offset - 24,
        _ => offset,
    }
}

fn period(z: u8) -> u8 {
    match z {
        1..=2 => 1,
        3..=10 => 2,
        11..=18 => 3,
        19..=36 => 4,
        37..=54 => 5,
        55..=86 => 6,
        _ => 7,
    }
}

fn next_noble(z: u8) -> u8 {
    match z {
        1..=2 => 2,
        3..=10 => 10,
        11..=18 => 18,
        19..=36 => 36,
        37..=54 => 54,
        55..=86 => 86,
        _ => 118,
    }
}

fn data(atomic_number: u8) -> Option<&'static ElementData> {
    ELEMENTS.get(usize::from(atomic_number).checked_sub(1)?)
}

/// Elements that may appear outside brackets.
pub(crate) fn is_organic_subset(atomic_number: u8) -> bool {
    matches!(atomic_number, 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
}
