//! Aromaticity perception on a kekulized graph (Hückel 4n+2 over rings and
//! fused ring combinations).

use crate::element;
use crate::mol::{BondOrder, Molecule};

const MAX_FUSED_COMBINATIONS: usize = 50_000;

fn more_electronegative(a: u8, b: u8) -> bool {
    let (ea, eb) = (element::outer_electrons(a), element::outer_electrons(b));
    ea > eb || (ea == eb && a < b)
}

/// Pi electrons an atom can put into a ring, or `None` if it cannot take
/// part in an aromatic ring at all.
fn donated_electrons(mol: &Molecule, i: usize) -> Option<u32> {
    let atom = &mol.atoms[i];
    if !mol.is_ring_atom(i) {
        return None;
    }
    let dv = element::default_valence(atom.element);
    if dv <= 1 {
        return None;
    }
    let total_degree = mol.total_degree(i) as i32;
    if total_degree > 3 {
        return None;
    }
    let total_valence = mol.valence(i) as i32;
    let iso = i16::from(atom.element) - i16::from(atom.formal_charge);
    if (1..=118).contains(&iso) {
        let dv_iso = element::default_valence(iso as u8);
        if dv_iso > 0 && total_valence > dv_iso {
            return None;
        }
    }
    let bond_sum: i32 = mol.adjacency[i]
        .iter()
        .map(|&(_, bi)| i32::from(mol.bonds[bi].kekule.valence()))
        .sum();
    let unsaturations = bond_sum + i32::from(atom.explicit_h) - mol.degree(i) as i32;
    let multiple: Vec<(usize, usize)> = mol.adjacency[i]
        .iter()
        .copied()
        .filter(|&(_, bi)| matches!(mol.bonds[bi].kekule, BondOrder::Double | BondOrder::Triple))
        .collect();
    if unsaturations > 1 && multiple.len() > 1 {
        return None;
    }

    let lone = (element::outer_electrons(atom.element) - dv - i32::from(atom.formal_charge)).max(0);
    let mut nelec = (dv - total_degree) + lone - i32::from(atom.radicals);
    if nelec > 1 && unsaturations > 1 {
        nelec = 1;
    }
    let exocyclic = multiple
        .iter()
        .find(|&&(_, bi)| !mol.bonds[bi].ring_member)
        .map(|&(n, _)| n);
    let cyclic = multiple.iter().any(|&(_, bi)| mol.bonds[bi].ring_member);
    match nelec {
        n if n < 0 => None,
        0 => {
            if exocyclic.is_some() {
                Some(0)
            } else if cyclic {
                Some(1)
            } else {
                None
            }
        }
        1 => {
            if let Some(other) = exocyclic {
                if more_electronegative(mol.atoms[other].element, atom.element) {
                    Some(0)
                } else {
                    Some(1)
                }
            } else if !multiple.is_empty() {
                Some(1)
            } else if atom.formal_charge == 1 {
                Some(0)
            } else {
                None
            }
        }
        _ => Some(if multiple.is_empty() { 2 } else { 1 }),
    }
}

fn ring_bonds(mol: &Molecule, ring: &[usize]) -> Vec<usize> {
    (0..ring.len())
        .filter_map(|k| mol.bond_between(ring[k], ring[(k + 1) % ring.len()]))
        .collect()
}

/// Recompute aromatic flags and bond orders from the Kekulé structure.
pub(crate) fn perceive(mol: &mut Molecule) {
    let n = mol.atoms.len();
    let electrons: Vec<Option<u32>> = (0..n).map(|i| donated_electrons(mol, i)).collect();
    let rings: Vec<Vec<usize>> = mol
        .rings
        .iter()
        .filter(|r| r.iter().all(|&a| electrons[a].is_some()))
        .cloned()
        .collect();
    let bonds: Vec<Vec<usize>> = rings.iter().map(|r| ring_bonds(mol, r)).collect();
    let count = |atoms: &mut dyn Iterator<Item = usize>| -> u32 {
        atoms.map(|a| electrons[a].unwrap_or(0)).sum()
    };

    let mut aromatic_atom = vec![false; n];
    let mut aromatic_bond = vec![false; mol.bonds.len()];
    for (ring, rb) in rings.iter().zip(&bonds) {
        if count(&mut ring.iter().copied()) % 4 == 2 {
            ring.iter().for_each(|&a| aromatic_atom[a] = true);
            rb.iter().for_each(|&b| aromatic_bond[b] = true);
        }
    }

    // Fused systems: rings sharing a bond.
    let shares = |a: usize, b: usize| bonds[a].iter().any(|x| bonds[b].contains(x));
    let mut system = vec![usize::MAX; rings.len()];
    let mut systems: Vec<Vec<usize>> = Vec::new();
    for start in 0..rings.len() {
        if system[start] != usize::MAX {
            continue;
        }
        let id = systems.len();
        let mut members = vec![start];
        system[start] = id;
        let mut k = 0;
        while k < members.len() {
            let r = members[k];
            k += 1;
            for o in 0..rings.len() {
                if system[o] == usize::MAX && shares(r, o) {
                    system[o] = id;
                    members.push(o);
                }
            }
        }
        systems.push(members);
    }

    let mut budget = MAX_FUSED_COMBINATIONS;
    for members in systems.iter().filter(|m| m.len() > 1) {
        for size in 2..=members.len() {
            let mut combo: Vec<usize> = (0..size).collect();
            loop {
                if budget == 0 {
                    break;
                }
                budget -= 1;
                let chosen: Vec<usize> = combo.iter().map(|&c| members[c]).collect();
                if connected(&chosen, &shares) {
                    let mut atoms: Vec<usize> =
                        chosen.iter().flat_map(|&r| rings[r].iter().copied()).collect();
                    atoms.sort_unstable();
                    atoms.dedup();
                    if count(&mut atoms.iter().copied()) % 4 == 2 {
                        atoms.iter().for_each(|&a| aromatic_atom[a] = true);
                        for &r in &chosen {
                            for &b in &bonds[r] {
                                let uses = chosen.iter().filter(|&&o| bonds[o].contains(&b)).count();
                                if uses == 1 {
                                    aromatic_bond[b] = true;
                                }
                            }
                        }
                    }
                }
                if !next_combination(&mut combo, members.len()) {
                    break;
                }
            }
        }
    }

    for (i, atom) in mol.atoms.iter_mut().enumerate() {
        atom.aromatic = aromatic_atom[i];
    }
    for (i, bond) in mol.bonds.iter_mut().enumerate() {
        bond.order = if aromatic_bond[i] {
            BondOrder::Aromatic
        } else {
            bond.kekule
        };
    }
}

fn connected(chosen: &[usize], shares: &dyn Fn(usize, usize) -> bool) -> bool {
    let mut reached = vec![false; chosen.len()];
    reached[0] = true;
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        for j in 0..chosen.len() {
            if !reached[j] && shares(chosen[i], chosen[j]) {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    reached.into_iter().all(|r| r)
}

fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
