//! Molecular graph types.

use serde::{Deserialize, Serialize};

use crate::element;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chirality {
    None,
    /// `@@`
    Clockwise,
    /// `@`
    CounterClockwise,
}

impl Chirality {
    pub(crate) fn inverted(self) -> Self {
        match self {
            Chirality::None => Chirality::None,
            Chirality::Clockwise => Chirality::CounterClockwise,
            Chirality::CounterClockwise => Chirality::Clockwise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Integer bond order; aromatic bonds report their Kekulé value elsewhere.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

/// Relative placement of the two reference neighbours of a stereo double bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CisTrans {
    None,
    SameSide,
    OppositeSide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub index: usize,
    /// Atomic number.
    pub element: u8,
    pub formal_charge: i8,
    pub isotope: Option<u16>,
    pub explicit_h: u8,
    pub implicit_h: u8,
    pub aromatic: bool,
    pub chirality: Chirality,
    pub(crate) bracket: bool,
    pub(crate) radicals: u8,
    /// Neighbour order the chirality tag refers to. `None` marks the
    /// hydrogen (or lone pair) slot.
    pub(crate) stereo_refs: Vec<Option<usize>>,
}

impl Atom {
    pub fn symbol(&self) -> &'static str {
        element::symbol(self.element)
    }

    pub fn total_h(&self) -> u8 {
        self.explicit_h + self.implicit_h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub begin: usize,
    pub end: usize,
    pub order: BondOrder,
    pub cis_trans: CisTrans,
    pub ring_member: bool,
    /// Single/double/triple assignment used for valence bookkeeping.
    pub(crate) kekule: BondOrder,
    /// Reference neighbours (of `begin`, of `end`) for `cis_trans`.
    pub(crate) stereo_refs: Option<(usize, usize)>,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.begin == atom {
            self.end
        } else {
            self.begin
        }
    }

    pub fn kekule_order(&self) -> BondOrder {
        self.kekule
    }

    /// Reference neighbours for the cis/trans flag, if any.
    pub fn stereo_atoms(&self) -> Option<(usize, usize)> {
        self.stereo_refs
    }
}

/// A parsed, validated molecule. Immutable once built.
#[derive(Debug, Clone)]
pub struct Molecule {
    pub(crate) atoms: Vec<Atom>,
    pub(crate) bonds: Vec<Bond>,
    pub(crate) rings: Vec<Vec<usize>>,
    pub(crate) source_text: String,
    pub(crate) adjacency: Vec<Vec<(usize, usize)>>,
}

impl Molecule {
    pub(crate) fn new(atoms: Vec<Atom>, bonds: Vec<Bond>, source_text: String) -> Self {
        let mut mol = Molecule {
            atoms,
            bonds,
            rings: Vec::new(),
            source_text,
            adjacency: Vec::new(),
        };
        mol.rebuild_adjacency();
        mol
    }

    pub(crate) fn rebuild_adjacency(&mut self) {
        let mut adjacency = vec![Vec::new(); self.atoms.len()];
        for (i, b) in self.bonds.iter().enumerate() {
            adjacency[b.begin].push((b.end, i));
            adjacency[b.end].push((b.begin, i));
        }
        self.adjacency = adjacency;
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn bond(&self, i: usize) -> &Bond {
        &self.bonds[i]
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Smallest set of smallest rings, ordered by (size, smallest member).
    pub fn rings(&self) -> &[Vec<usize>] {
        &self.rings
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    /// `(neighbour, bond index)` pairs.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    /// Connections including hydrogens.
    pub fn total_degree(&self, atom: usize) -> usize {
        self.degree(atom) + usize::from(self.atoms[atom].total_h())
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, bi)| bi)
    }

    /// Sum of Kekulé bond orders plus hydrogens.
    pub fn valence(&self, atom: usize) -> u32 {
        let bonds: u32 = self.adjacency[atom]
            .iter()
            .map(|&(_, bi)| u32::from(self.bonds[bi].kekule.valence()))
            .sum();
        bonds + u32::from(self.atoms[atom].total_h())
    }

    pub fn is_ring_atom(&self, atom: usize) -> bool {
        self.adjacency[atom]
            .iter()
            .any(|&(_, bi)| self.bonds[bi].ring_member)
    }

    /// Number of SSSR rings containing the atom.
    pub fn ring_count(&self, atom: usize) -> usize {
        self.rings.iter().filter(|r| r.contains(&atom)).count()
    }

    pub fn in_ring_of_size(&self, atom: usize, size: usize) -> bool {
        self.rings
            .iter()
            .any(|r| r.len() == size && r.contains(&atom))
    }

    pub fn smallest_ring_size(&self, atom: usize) -> Option<usize> {
        self.rings
            .iter()
            .filter(|r| r.contains(&atom))
            .map(Vec::len)
            .min()
    }

    pub fn bond_in_ring_of_size(&self, bond: usize, size: usize) -> bool {
        let b = &self.bonds[bond];
        self.rings.iter().any(|r| {
            r.len() == size && ring_contains_edge(r, b.begin, b.end)
        })
    }

    /// Connected components as sorted atom index lists, ordered by first atom.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                let a = comp[i];
                for &(nb, _) in &self.adjacency[a] {
                    if !seen[nb] {
                        seen[nb] = true;
                        comp.push(nb);
                    }
                }
                i += 1;
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Copy with every implicit or bracket hydrogen promoted to an atom.
    pub fn with_explicit_hydrogens(&self) -> Molecule {
        let mut atoms = self.atoms.clone();
        let mut bonds = self.bonds.clone();
        for parent in 0..self.atoms.len() {
            let n = self.atoms[parent].total_h();
            atoms[parent].explicit_h = 0;
            atoms[parent].implicit_h = 0;
            for _ in 0..n {
                let index = atoms.len();
                atoms.push(Atom {
                    index,
                    element: 1,
                    formal_charge: 0,
                    isotope: None,
                    explicit_h: 0,
                    implicit_h: 0,
                    aromatic: false,
                    chirality: Chirality::None,
                    bracket: false,
                    radicals: 0,
                    stereo_refs: Vec::new(),
                });
                bonds.push(Bond {
                    begin: parent,
                    end: index,
                    order: BondOrder::Single,
                    cis_trans: CisTrans::None,
                    ring_member: false,
                    kekule: BondOrder::Single,
                    stereo_refs: None,
                });
            }
        }
        let mut mol = Molecule::new(atoms, bonds, self.source_text.clone());
        mol.rings = self.rings.clone();
        mol
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.element != 1).count()
    }
}

pub(crate) fn ring_contains_edge(ring: &[usize], a: usize, b: usize) -> bool {
    let n = ring.len();
    (0..n).any(|i| {
        let x = ring[i];
        let y = ring[(i + 1) % n];
        (x == a && y == b) || (x == b && y == a)
    })
}
