//! Canonical atom ranking and canonical SMILES.

use crate::mol::{BondOrder, Chirality, CisTrans, Molecule};
use crate::smiles::parse_smiles;
use crate::writer::{self, StereoMask};

const SEARCH_LEAVES: usize = 512;

fn bond_code(order: BondOrder) -> u8 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

fn dense_ranks<K: Ord>(keys: &[K]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut ranks = vec![0; keys.len()];
    let mut r = 0;
    for w in 0..idx.len() {
        if w > 0 && keys[idx[w]] != keys[idx[w - 1]] {
            r += 1;
        }
        ranks[idx[w]] = r;
    }
    ranks
}

fn class_count(ranks: &[usize]) -> usize {
    ranks.iter().max().map_or(0, |m| m + 1)
}

fn initial_ranks(mol: &Molecule) -> Vec<usize> {
    let keys: Vec<_> = mol
        .atoms
        .iter()
        .enumerate()
        .map(|(i, a)| {
            (
                mol.degree(i),
                a.element,
                a.isotope.unwrap_or(0),
                a.formal_charge,
                a.total_h(),
                a.aromatic,
                mol.is_ring_atom(i),
                a.radicals,
            )
        })
        .collect();
    dense_ranks(&keys)
}

/// Tetrahedral label from neighbour ranks; 0 when neighbours tie.
fn chiral_label(mol: &Molecule, a: usize, ranks: &[usize]) -> u8 {
    let atom = &mol.atoms[a];
    let vals: Vec<i64> = atom
        .stereo_refs
        .iter()
        .map(|r| r.map_or(-1, |x| ranks[x] as i64))
        .collect();
    let mut sorted = vals.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != vals.len() {
        return 0;
    }
    let mut inversions = 0;
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            if vals[i] > vals[j] {
                inversions += 1;
            }
        }
    }
    let tag = u8::from(atom.chirality == Chirality::Clockwise);
    1 + (tag + inversions) % 2
}

/// Highest-ranked substituent at `x` away from `other`, or `None` if the
/// two substituents tie.
fn top_substituent(mol: &Molecule, x: usize, other: usize, ranks: &[usize]) -> Option<usize> {
    let subs: Vec<usize> = mol.adjacency[x]
        .iter()
        .map(|&(nb, _)| nb)
        .filter(|&nb| nb != other)
        .collect();
    match subs[..] {
        [s] => Some(s),
        [s, t] if ranks[s] != ranks[t] => Some(if ranks[s] > ranks[t] { s } else { t }),
        _ => None,
    }
}

fn bond_label(mol: &Molecule, bi: usize, ranks: &[usize]) -> u8 {
    let b = &mol.bonds[bi];
    let Some((ra, rb)) = b.stereo_refs else {
        return 0;
    };
    let (Some(ha), Some(hb)) = (
        top_substituent(mol, b.begin, b.end, ranks),
        top_substituent(mol, b.end, b.begin, ranks),
    ) else {
        return 0;
    };
    let mut same = b.cis_trans == CisTrans::SameSide;
    if ha != ra {
        same = !same;
    }
    if hb != rb {
        same = !same;
    }
    1 + u8::from(same)
}

struct Ranker<'a> {
    mol: &'a Molecule,
    mask: StereoMask,
}

impl Ranker<'_> {
    /// Iterative neighbourhood refinement, stereo labels included.
    fn refine(&self, mut ranks: Vec<usize>) -> Vec<usize> {
        let mol = self.mol;
        loop {
            let before = class_count(&ranks);
            let bond_labels: Vec<u8> = (0..mol.bonds.len())
                .map(|bi| if self.mask.bonds[bi] { bond_label(mol, bi, &ranks) } else { 0 })
                .collect();
            let keys: Vec<(usize, u8, Vec<(usize, u8, u8)>)> = (0..mol.atoms.len())
                .map(|a| {
                    let label = if self.mask.atoms[a] {
                        chiral_label(mol, a, &ranks)
                    } else {
                        0
                    };
                    let mut nb: Vec<(usize, u8, u8)> = mol.adjacency[a]
                        .iter()
                        .map(|&(n, bi)| (ranks[n], bond_code(mol.bonds[bi].order), bond_labels[bi]))
                        .collect();
                    nb.sort_unstable();
                    (ranks[a], label, nb)
                })
                .collect();
            ranks = dense_ranks(&keys);
            if class_count(&ranks) == before {
                return ranks;
            }
        }
    }

    fn unresolved_stereo(&self, ranks: &[usize]) -> Vec<bool> {
        let mol = self.mol;
        let mut flag = vec![false; mol.atoms.len()];
        for a in 0..mol.atoms.len() {
            if self.mask.atoms[a] && chiral_label(mol, a, ranks) == 0 {
                flag[a] = true;
                for &(n, _) in &mol.adjacency[a] {
                    flag[n] = true;
                }
            }
        }
        for (bi, b) in mol.bonds.iter().enumerate() {
            if self.mask.bonds[bi] && bond_label(mol, bi, ranks) == 0 {
                for x in [b.begin, b.end] {
                    flag[x] = true;
                    for &(n, _) in &mol.adjacency[x] {
                        flag[n] = true;
                    }
                }
            }
        }
        flag
    }

    fn individualize(ranks: &[usize], atom: usize) -> Vec<usize> {
        // Shift everything at or above the atom's class up by one, keeping
        // the chosen atom in place so it sorts first within its class.
        let r = ranks[atom];
        ranks
            .iter()
            .enumerate()
            .map(|(i, &x)| if x > r || (x == r && i != atom) { x + 1 } else { x })
            .collect()
    }

    fn tied_class(ranks: &[usize]) -> Option<Vec<usize>> {
        let mut counts = vec![0usize; ranks.len()];
        for &r in ranks {
            counts[r] += 1;
        }
        let r = counts.iter().position(|&c| c > 1)?;
        Some((0..ranks.len()).filter(|&i| ranks[i] == r).collect())
    }

    /// Smallest SMILES over the explored tie-breaking choices.
    fn search(&self, ranks: Vec<usize>, budget: &mut usize) -> (String, Vec<usize>) {
        let ranks = self.refine(ranks);
        let Some(class) = Self::tied_class(&ranks) else {
            return (writer::write(self.mol, &ranks, &self.mask), ranks);
        };
        let flags = self.unresolved_stereo(&ranks);
        let branch = *budget > 1 && class.iter().any(|&a| flags[a]);
        if !branch {
            return self.search(Self::individualize(&ranks, class[0]), budget);
        }
        let mut best: Option<(String, Vec<usize>)> = None;
        for &a in &class {
            if *budget == 0 && best.is_some() {
                break;
            }
            *budget = budget.saturating_sub(1);
            let cand = self.search(Self::individualize(&ranks, a), budget);
            if best.as_ref().is_none_or(|b| cand.0 < b.0) {
                best = Some(cand);
            }
        }
        best.expect("class is non-empty")
    }
}

/// Which stereo tags survive symmetry analysis.
fn meaningful_stereo(mol: &Molecule) -> StereoMask {
    let mut mask = StereoMask::all(mol);
    // A bond end needs a substituent to orient; ring-internal tags on
    // otherwise symmetric ring atoms may still be relative configuration.
    loop {
        let ranker = Ranker {
            mol,
            mask: StereoMask {
                atoms: mask.atoms.clone(),
                bonds: mask.bonds.clone(),
            },
        };
        let ranks = ranker.refine(initial_ranks(mol));
        let mut changed = false;
        for a in 0..mol.atoms.len() {
            if mask.atoms[a] && chiral_label(mol, a, &ranks) == 0 && !ring_stereo(mol, a, &ranks, &mask) {
                mask.atoms[a] = false;
                changed = true;
            }
        }
        for bi in 0..mol.bonds.len() {
            if mask.bonds[bi] && bond_label(mol, bi, &ranks) == 0 {
                mask.bonds[bi] = false;
                changed = true;
            }
        }
        if !changed {
            return mask;
        }
    }
}

/// Tied ring neighbours with another stereocentre in the same ring system
/// (e.g. cis/trans 1,4-disubstituted rings).
fn ring_stereo(mol: &Molecule, a: usize, ranks: &[usize], mask: &StereoMask) -> bool {
    let refs = &mol.atoms[a].stereo_refs;
    let tied: Vec<usize> = refs
        .iter()
        .flatten()
        .copied()
        .filter(|&x| refs.iter().flatten().filter(|&&y| ranks[y] == ranks[x]).count() > 1)
        .collect();
    if tied.len() != 2 {
        return false;
    }
    let ring_bond = |x: usize| mol.bond_between(a, x).is_some_and(|b| mol.bonds[b].ring_member);
    if !tied.iter().all(|&x| ring_bond(x)) {
        return false;
    }
    mol.rings.iter().filter(|r| r.contains(&a)).any(|r| {
        r.iter().any(|&o| {
            o != a && (mask.atoms[o] || mol.adjacency[o].iter().any(|&(_, bi)| mask.bonds[bi]))
        })
    })
}

/// Unique SMILES for the molecule, independent of input atom order.
pub fn canonical_smiles(mol: &Molecule) -> String {
    if mol.atoms.is_empty() {
        return String::new();
    }
    let mask = meaningful_stereo(mol);
    let ranker = Ranker { mol, mask };
    let mut budget = SEARCH_LEAVES;
    ranker.search(initial_ranks(mol), &mut budget).0
}

/// Write the molecule visiting atoms in the given priority order, keeping
/// every stereo tag. Useful for producing alternative writings.
pub fn smiles_with_order(mol: &Molecule, priority: &[usize]) -> String {
    writer::write(mol, priority, &StereoMask::all(mol))
}

/// Both strings parse and have the same canonical form.
pub fn same_molecule(a: &str, b: &str) -> bool {
    match (parse_smiles(a), parse_smiles(b)) {
        (Ok(x), Ok(y)) => canonical_smiles(&x) == canonical_smiles(&y),
        _ => false,
    }
}
