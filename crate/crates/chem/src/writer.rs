//! SMILES writer driven by an atom priority order.

use crate::element;
use crate::mol::{BondOrder, Chirality, CisTrans, Molecule};

/// Stereo elements that should be written.
pub(crate) struct StereoMask {
    pub atoms: Vec<bool>,
    pub bonds: Vec<bool>,
}

impl StereoMask {
    pub(crate) fn all(mol: &Molecule) -> Self {
        StereoMask {
            atoms: mol
                .atoms
                .iter()
                .map(|a| a.chirality != Chirality::None)
                .collect(),
            bonds: mol
                .bonds
                .iter()
                .map(|b| b.cis_trans != CisTrans::None)
                .collect(),
        }
    }
}

struct Plan {
    /// Preorder position of each atom.
    pos: Vec<usize>,
    parent: Vec<Option<(usize, usize)>>,
    children: Vec<Vec<(usize, usize)>>,
    /// Ring bonds per atom in the order their digits are written.
    ring_bonds: Vec<Vec<usize>>,
    roots: Vec<usize>,
}

fn plan(mol: &Molecule, rank: &[usize]) -> Plan {
    let n = mol.atoms.len();
    let mut p = Plan {
        pos: vec![usize::MAX; n],
        parent: vec![None; n],
        children: vec![Vec::new(); n],
        ring_bonds: vec![Vec::new(); n],
        roots: Vec::new(),
    };
    let mut closure = vec![false; mol.bonds.len()];
    let mut openings: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut closings: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut counter = 0;
    let mut comps = mol.components();
    for c in &mut comps {
        c.sort_by_key(|&a| rank[a]);
    }
    comps.sort_by_key(|c| rank[c[0]]);
    for comp in comps {
        let root = comp[0];
        p.roots.push(root);
        p.pos[root] = counter;
        counter += 1;
        // (atom, sorted neighbours, cursor)
        let mut stack = vec![(root, sorted_neighbors(mol, rank, root), 0usize)];
        while let Some((a, nbrs, cursor)) = stack.last_mut() {
            let a = *a;
            let Some(&(nb, bi)) = nbrs.get(*cursor) else {
                stack.pop();
                continue;
            };
            *cursor += 1;
            if p.parent[a].is_some_and(|(_, pb)| pb == bi) || closure[bi] {
                continue;
            }
            if p.pos[nb] != usize::MAX {
                closure[bi] = true;
                openings[nb].push(bi);
                closings[a].push(bi);
                continue;
            }
            p.pos[nb] = counter;
            counter += 1;
            p.parent[nb] = Some((a, bi));
            p.children[a].push((nb, bi));
            stack.push((nb, sorted_neighbors(mol, rank, nb), 0));
        }
    }
    for a in 0..n {
        let mut rb = std::mem::take(&mut closings[a]);
        rb.append(&mut openings[a]);
        p.ring_bonds[a] = rb;
    }
    p
}

fn sorted_neighbors(mol: &Molecule, rank: &[usize], a: usize) -> Vec<(usize, usize)> {
    let mut v = mol.adjacency[a].clone();
    v.sort_by_key(|&(nb, _)| rank[nb]);
    v
}

/// Smallest valence admitted for `used` and whether an unbracketed atom
/// would be a double-bond candidate during kekulization.
fn unbracketed_hydrogens(mol: &Molecule, a: usize) -> Option<u8> {
    let atom = &mol.atoms[a];
    let mut used: i32 = 0;
    let mut aromatic_double = false;
    let mut has_aromatic = false;
    for &(_, bi) in &mol.adjacency[a] {
        let b = &mol.bonds[bi];
        if b.order == BondOrder::Aromatic {
            has_aromatic = true;
            used += 1;
            aromatic_double |= b.kekule == BondOrder::Double;
        } else {
            used += i32::from(b.kekule.valence());
        }
    }
    let target = element::target_valence(atom.element, 0, used)?;
    if atom.aromatic && has_aromatic {
        let candidate = target - used >= 1;
        if candidate != aromatic_double {
            return None;
        }
        if candidate {
            used += 1;
        }
    } else if aromatic_double {
        return None;
    }
    let target = element::target_valence(atom.element, 0, used)?;
    u8::try_from(target - used).ok()
}

fn needs_bracket(mol: &Molecule, a: usize) -> bool {
    let atom = &mol.atoms[a];
    let organic = if atom.aromatic {
        matches!(atom.element, 5 | 6 | 7 | 8 | 15 | 16)
    } else {
        element::is_organic_subset(atom.element)
    };
    if !organic || atom.formal_charge != 0 || atom.isotope.is_some() || atom.radicals != 0 {
        return true;
    }
    unbracketed_hydrogens(mol, a) != Some(atom.total_h())
}

fn atom_text(mol: &Molecule, a: usize, chirality: Chirality, out: &mut String) {
    let atom = &mol.atoms[a];
    let symbol = atom.symbol();
    let symbol = if atom.aromatic {
        symbol.to_ascii_lowercase()
    } else {
        symbol.to_string()
    };
    if chirality == Chirality::None && !needs_bracket(mol, a) {
        out.push_str(&symbol);
        return;
    }
    out.push('[');
    if let Some(iso) = atom.isotope {
        out.push_str(&iso.to_string());
    }
    out.push_str(&symbol);
    match chirality {
        Chirality::CounterClockwise => out.push('@'),
        Chirality::Clockwise => out.push_str("@@"),
        Chirality::None => {}
    }
    match atom.total_h() {
        0 => {}
        1 => out.push('H'),
        h => {
            out.push('H');
            out.push_str(&h.to_string());
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 0 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("-{}", -c)),
    }
    out.push(']');
}

fn permutation_is_odd(stored: &[Option<usize>], written: &[Option<usize>]) -> Option<bool> {
    if stored.len() != written.len() {
        return None;
    }
    let idx: Option<Vec<usize>> = written
        .iter()
        .map(|w| stored.iter().position(|s| s == w))
        .collect();
    let idx = idx?;
    let mut inversions = 0;
    for i in 0..idx.len() {
        for j in i + 1..idx.len() {
            if idx[i] > idx[j] {
                inversions += 1;
            }
        }
    }
    Some(inversions % 2 == 1)
}

/// Assign `/` `\` marks: `Some(true)` means '/' read from the earlier
/// written atom to the later one.
fn direction_marks(mol: &Molecule, p: &Plan, mask: &StereoMask) -> Vec<Option<bool>> {
    let mut marks: Vec<Option<bool>> = vec![None; mol.bonds.len()];
    let stereo_end: Vec<bool> = {
        let mut v = vec![false; mol.atoms.len()];
        for (bi, b) in mol.bonds.iter().enumerate() {
            if mask.bonds[bi] {
                v[b.begin] = true;
                v[b.end] = true;
            }
        }
        v
    };
    let mut doubles: Vec<usize> = (0..mol.bonds.len()).filter(|&b| mask.bonds[b]).collect();
    doubles.sort_by_key(|&bi| {
        let b = &mol.bonds[bi];
        (p.pos[b.begin].min(p.pos[b.end]), p.pos[b.begin].max(p.pos[b.end]))
    });
    for bi in doubles {
        let b = &mol.bonds[bi];
        let Some((ref_a, ref_b)) = b.stereo_refs else {
            continue;
        };
        let choose = |x: usize, other: usize, marks: &[Option<bool>]| {
            let mut opts: Vec<(usize, usize)> = mol.adjacency[x]
                .iter()
                .copied()
                .filter(|&(nb, nbi)| {
                    nb != other
                        && matches!(mol.bonds[nbi].order, BondOrder::Single | BondOrder::Aromatic)
                })
                .collect();
            opts.sort_by_key(|&(nb, nbi)| {
                (marks[nbi].is_none(), !stereo_end[nb], p.pos[nb])
            });
            opts.first().copied()
        };
        let (Some((nx, bx)), Some((ny, by))) = (choose(b.begin, b.end, &marks), choose(b.end, b.begin, &marks)) else {
            continue;
        };
        let mut same = b.cis_trans == CisTrans::SameSide;
        if nx != ref_a {
            same = !same;
        }
        if ny != ref_b {
            same = !same;
        }
        // side(A, N) is `up` when A is written first, inverted otherwise.
        let side = |_bond: usize, a: usize, nb: usize, up: bool| {
            if p.pos[a] < p.pos[nb] { up } else { !up }
        };
        let up_for = |a: usize, nb: usize, s: bool| if p.pos[a] < p.pos[nb] { s } else { !s };
        match (marks[bx], marks[by]) {
            (Some(ux), None) => {
                let sx = side(bx, b.begin, nx, ux);
                marks[by] = Some(up_for(b.end, ny, if same { sx } else { !sx }));
            }
            (None, Some(uy)) => {
                let sy = side(by, b.end, ny, uy);
                marks[bx] = Some(up_for(b.begin, nx, if same { sy } else { !sy }));
            }
            (None, None) => {
                let first_x = p.pos[b.begin].min(p.pos[nx]) <= p.pos[b.end].min(p.pos[ny]);
                if first_x {
                    marks[bx] = Some(true);
                    let sx = side(bx, b.begin, nx, true);
                    marks[by] = Some(up_for(b.end, ny, if same { sx } else { !sx }));
                } else {
                    marks[by] = Some(true);
                    let sy = side(by, b.end, ny, true);
                    marks[bx] = Some(up_for(b.begin, nx, if same { sy } else { !sy }));
                }
            }
            (Some(_), Some(_)) => {}
        }
    }
    marks
}

/// Write `mol` visiting atoms by ascending `rank` (ties broken by index).
pub(crate) fn write(mol: &Molecule, rank: &[usize], mask: &StereoMask) -> String {
    let p = plan(mol, rank);
    let marks = direction_marks(mol, &p, mask);
    let n = mol.atoms.len();

    // Ring digits: freed digits are not reused on the atom that freed them.
    let mut digit_of = vec![0u32; mol.bonds.len()];
    let mut in_use: Vec<bool> = vec![false; 100];
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&a| p.pos[a]);
    let mut digits_at: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut opened = vec![false; mol.bonds.len()];
    for &a in &order {
        let mut freed = Vec::new();
        for &bi in &p.ring_bonds[a] {
            if opened[bi] {
                let d = digit_of[bi];
                in_use[d as usize] = false;
                freed.push(d);
                digits_at[a].push(d);
            }
        }
        for &bi in &p.ring_bonds[a] {
            if !opened[bi] {
                let d = (1..100u32)
                    .find(|&d| !in_use[d as usize] && !freed.contains(&d))
                    .unwrap_or(99);
                in_use[d as usize] = true;
                digit_of[bi] = d;
                opened[bi] = true;
                digits_at[a].push(d);
            }
        }
    }

    let mut out = String::new();
    for (ci, &root) in p.roots.iter().enumerate() {
        if ci > 0 {
            out.push('.');
        }
        // Iterative preorder writer: Open(atom) / Close paren markers.
        enum Step {
            Atom(usize),
            Text(&'static str),
        }
        let mut stack = vec![Step::Atom(root)];
        while let Some(step) = stack.pop() {
            let a = match step {
                Step::Text(t) => {
                    out.push_str(t);
                    continue;
                }
                Step::Atom(a) => a,
            };
            if let Some((par, bi)) = p.parent[a] {
                bond_text(mol, bi, par, a, &marks, &p, &mut out);
            }
            let chirality = if mask.atoms[a] {
                let mut written: Vec<Option<usize>> = Vec::new();
                if let Some((par, _)) = p.parent[a] {
                    written.push(Some(par));
                }
                let lone_pair = mol.atoms[a].total_h() == 0;
                if !lone_pair && mol.atoms[a].stereo_refs.contains(&None) {
                    written.push(None);
                }
                for &bi in &p.ring_bonds[a] {
                    written.push(Some(mol.bonds[bi].other(a)));
                }
                for &(c, _) in &p.children[a] {
                    written.push(Some(c));
                }
                if lone_pair && mol.atoms[a].stereo_refs.contains(&None) {
                    written.push(None);
                }
                match permutation_is_odd(&mol.atoms[a].stereo_refs, &written) {
                    Some(true) => mol.atoms[a].chirality.inverted(),
                    Some(false) => mol.atoms[a].chirality,
                    None => Chirality::None,
                }
            } else {
                Chirality::None
            };
            atom_text(mol, a, chirality, &mut out);
            for (k, &bi) in p.ring_bonds[a].iter().enumerate() {
                let other = mol.bonds[bi].other(a);
                if p.pos[other] > p.pos[a] {
                    bond_text(mol, bi, a, other, &marks, &p, &mut out);
                }
                let d = digits_at[a][k];
                if d < 10 {
                    out.push(char::from(b'0' + d as u8));
                } else {
                    out.push_str(&format!("%{d:02}"));
                }
            }
            let kids = &p.children[a];
            for (k, &(c, _)) in kids.iter().enumerate().rev() {
                if k + 1 == kids.len() {
                    stack.push(Step::Atom(c));
                } else {
                    stack.push(Step::Text(")"));
                    stack.push(Step::Atom(c));
                    stack.push(Step::Text("("));
                }
            }
        }
    }
    out
}

fn bond_text(
    mol: &Molecule,
    bi: usize,
    left: usize,
    right: usize,
    marks: &[Option<bool>],
    p: &Plan,
    out: &mut String,
) {
    let b = &mol.bonds[bi];
    if let Some(up) = marks[bi] {
        // Marks are stored relative to the earlier written atom.
        let up = if p.pos[left] < p.pos[right] { up } else { !up };
        out.push(if up { '/' } else { '\\' });
        return;
    }
    match b.order {
        BondOrder::Aromatic => {}
        BondOrder::Single => {
            if mol.atoms[left].aromatic && mol.atoms[right].aromatic {
                out.push('-');
            }
        }
        BondOrder::Double => out.push('='),
        BondOrder::Triple => out.push('#'),
    }
}
