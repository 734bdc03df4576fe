//! SMILES reading: parse, validate, perceive.

mod parser;

use crate::aromaticity;
use crate::element;
use crate::error::ChemError;
use crate::kekulize;
use crate::mol::{BondOrder, Chirality, CisTrans, Molecule};
use crate::rings;

/// Parse and sanitize a SMILES string.
pub fn parse_smiles(text: &str) -> Result<Molecule, ChemError> {
    let raw = parser::parse_raw(text)?;
    let (mut mol, mut directions) = parser::into_graph(raw, text);
    remove_plain_hydrogens(&mut mol, &mut directions);
    rings::mark_ring_bonds(&mut mol);
    for (i, atom) in mol.atoms.iter().enumerate() {
        if atom.aromatic && !mol.is_ring_atom(i) {
            return Err(ChemError::Aromaticity(format!(
                "non-ring atom {i} marked aromatic"
            )));
        }
    }
    for b in &mut mol.bonds {
        if b.order == BondOrder::Aromatic && !b.ring_member {
            b.order = BondOrder::Single;
        }
    }
    cleanup_hypervalent(&mut mol);
    kekulize::kekulize(&mut mol)?;
    assign_hydrogens(&mut mol)?;
    mol.rings = rings::sssr(&mol);
    aromaticity::perceive(&mut mol);
    clean_chirality(&mut mol);
    assign_cis_trans(&mut mol, &directions);
    Ok(mol)
}

/// Drop `[H]` atoms attached to a single heavy atom, folding them into the
/// neighbour's hydrogen count.
fn remove_plain_hydrogens(mol: &mut Molecule, directions: &mut Vec<Option<(bool, usize)>>) {
    let n = mol.atoms.len();
    let mut remove = vec![false; n];
    for i in 0..n {
        let a = &mol.atoms[i];
        if a.element != 1 || a.isotope.is_some() || a.formal_charge != 0 || a.explicit_h != 0 {
            continue;
        }
        let [(nb, bi)] = mol.adjacency[i][..] else {
            continue;
        };
        if mol.atoms[nb].element == 1 || mol.bonds[bi].order != BondOrder::Single {
            continue;
        }
        remove[i] = true;
    }
    if !remove.iter().any(|&r| r) {
        return;
    }
    for i in (0..n).filter(|&i| remove[i]) {
        let (nb, _) = mol.adjacency[i][0];
        let host = &mut mol.atoms[nb];
        host.explicit_h += 1;
        for r in &mut host.stereo_refs {
            if *r == Some(i) {
                *r = None;
            }
        }
    }
    let mut map = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        if !remove[i] {
            map[i] = next;
            next += 1;
        }
    }
    let mut keep_bond = Vec::with_capacity(mol.bonds.len());
    for b in &mol.bonds {
        keep_bond.push(!remove[b.begin] && !remove[b.end]);
    }
    let mut atoms = std::mem::take(&mut mol.atoms);
    atoms.retain(|a| !remove[a.index]);
    for a in &mut atoms {
        a.index = map[a.index];
        for r in a.stereo_refs.iter_mut().flatten() {
            *r = map[*r];
        }
    }
    let mut bonds = Vec::new();
    let mut dirs = Vec::new();
    for (k, b) in std::mem::take(&mut mol.bonds).into_iter().enumerate() {
        if keep_bond[k] {
            let mut b = b;
            b.begin = map[b.begin];
            b.end = map[b.end];
            bonds.push(b);
            dirs.push(directions[k].map(|(up, left)| (up, map[left])));
        }
    }
    mol.atoms = atoms;
    mol.bonds = bonds;
    *directions = dirs;
    mol.rebuild_adjacency();
}

/// Twice the bond-order sum (aromatic counts 3) plus hydrogens.
fn half_valence(mol: &Molecule, i: usize) -> i32 {
    let bonds: i32 = mol.adjacency[i]
        .iter()
        .map(|&(_, bi)| match mol.bonds[bi].order {
            BondOrder::Aromatic => 3,
            o => 2 * i32::from(o.valence()),
        })
        .sum();
    bonds + 2 * i32::from(mol.atoms[i].explicit_h)
}

/// Charge-separate pentavalent nitro groups and halogen oxides.
fn cleanup_hypervalent(mol: &mut Molecule) {
    for i in 0..mol.atoms.len() {
        let atom = &mol.atoms[i];
        if atom.formal_charge != 0 {
            continue;
        }
        match atom.element {
            7 if half_valence(mol, i) == 10 => {
                let oxo: Vec<(usize, usize)> = mol.adjacency[i]
                    .iter()
                    .copied()
                    .filter(|&(nb, bi)| {
                        mol.atoms[nb].element == 8
                            && mol.atoms[nb].formal_charge == 0
                            && mol.bonds[bi].order == BondOrder::Double
                    })
                    .collect();
                if let Some(&(o, bi)) = oxo.last() {
                    mol.bonds[bi].order = BondOrder::Single;
                    mol.bonds[bi].kekule = BondOrder::Single;
                    mol.atoms[o].formal_charge = -1;
                    mol.atoms[i].formal_charge = 1;
                }
            }
            17 | 35 | 53 if half_valence(mol, i) == 14 => {
                let all_oxygen = mol.adjacency[i]
                    .iter()
                    .all(|&(nb, _)| mol.atoms[nb].element == 8);
                if !all_oxygen {
                    continue;
                }
                let mut changed = 0;
                for k in 0..mol.adjacency[i].len() {
                    let (nb, bi) = mol.adjacency[i][k];
                    if mol.bonds[bi].order == BondOrder::Double {
                        mol.bonds[bi].order = BondOrder::Single;
                        mol.bonds[bi].kekule = BondOrder::Single;
                        mol.atoms[nb].formal_charge = -1;
                        changed += 1;
                    }
                }
                mol.atoms[i].formal_charge = changed;
            }
            _ => {}
        }
    }
}

fn assign_hydrogens(mol: &mut Molecule) -> Result<(), ChemError> {
    for i in 0..mol.atoms.len() {
        let used: i32 = mol.adjacency[i]
            .iter()
            .map(|&(_, bi)| i32::from(mol.bonds[bi].kekule.valence()))
            .sum::<i32>()
            + i32::from(mol.atoms[i].explicit_h);
        let atom = &mol.atoms[i];
        let Some(allowed) = element::allowed_valences(atom.element, atom.formal_charge) else {
            continue;
        };
        let max = allowed.iter().map(|&v| i32::from(v)).max().unwrap_or(0);
        let mut used = used;
        if used > max {
            // Bonds to metals count as dative when the ligand is saturated.
            let metal_bonds: i32 = mol.adjacency[i]
                .iter()
                .filter(|&&(nb, _)| element::default_valence(mol.atoms[nb].element) < 0)
                .map(|&(_, bi)| i32::from(mol.bonds[bi].kekule.valence()))
                .sum();
            used -= metal_bonds.min(used - max);
        }
        if used > max {
            return Err(ChemError::Valence {
                atom: i,
                message: format!(
                    "{} with valence {used} exceeds the maximum of {max}",
                    atom.symbol()
                ),
            });
        }
        let target = element::target_valence(atom.element, atom.formal_charge, used).unwrap_or(used);
        let missing = u8::try_from(target - used).unwrap_or(0);
        let atom = &mut mol.atoms[i];
        if atom.bracket {
            atom.radicals = missing;
        } else {
            atom.implicit_h = missing;
        }
    }
    Ok(())
}

/// Drop tetrahedral tags that cannot describe a stereocentre.
fn clean_chirality(mol: &mut Molecule) {
    for i in 0..mol.atoms.len() {
        let atom = &mol.atoms[i];
        if atom.chirality == Chirality::None {
            continue;
        }
        let slots = mol.degree(i) + usize::from(atom.total_h());
        let ok = atom.total_h() <= 1
            && (slots == 4 || (slots == 3 && atom.total_h() == 0))
            && atom.stereo_refs.len() == 4;
        if !ok {
            let atom = &mut mol.atoms[i];
            atom.chirality = Chirality::None;
            atom.stereo_refs.clear();
        }
    }
}

/// Orientation of neighbour `n` relative to `a` across a directional bond.
fn side(directions: &[Option<(bool, usize)>], bond: usize, a: usize) -> Option<bool> {
    directions[bond].map(|(up, left)| if left == a { up } else { !up })
}

fn assign_cis_trans(mol: &mut Molecule, directions: &[Option<(bool, usize)>]) {
    if directions.iter().all(Option::is_none) {
        return;
    }
    for bi in 0..mol.bonds.len() {
        let b = &mol.bonds[bi];
        if b.order != BondOrder::Double {
            continue;
        }
        if b.ring_member && (1..8).any(|s| mol.bond_in_ring_of_size(bi, s)) {
            continue;
        }
        let (a, z) = (b.begin, b.end);
        let pick = |x: usize, other: usize| {
            mol.adjacency[x]
                .iter()
                .filter(|&&(nb, _)| nb != other)
                .find_map(|&(nb, nbi)| side(directions, nbi, x).map(|s| (nb, s)))
        };
        let (Some((ra, sa)), Some((rz, sz))) = (pick(a, z), pick(z, a)) else {
            continue;
        };
        let bond = &mut mol.bonds[bi];
        bond.cis_trans = if sa == sz {
            CisTrans::SameSide
        } else {
            CisTrans::OppositeSide
        };
        bond.stereo_refs = Some((ra, rz));
    }
}
