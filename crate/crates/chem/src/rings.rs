//! Ring bond detection and smallest set of smallest rings.

use crate::mol::Molecule;

/// Flag every bond that is not a bridge as a ring bond.
pub(crate) fn mark_ring_bonds(mol: &mut Molecule) {
    let n = mol.atoms.len();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut bridge = vec![false; mol.bonds.len()];
    let mut time = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // (atom, bond used to enter, next neighbour cursor)
        let mut stack = vec![(root, usize::MAX, 0usize)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(&mut (v, via, ref mut cursor)) = stack.last_mut() {
            if let Some(&(w, bi)) = mol.adjacency[v].get(*cursor) {
                *cursor += 1;
                if bi == via {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, bi, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[v]);
                    if low[v] > disc[parent] {
                        bridge[via] = true;
                    }
                }
            }
        }
    }
    for (b, is_bridge) in mol.bonds.iter_mut().zip(bridge) {
        b.ring_member = !is_bridge;
    }
}

struct Candidate {
    atoms: Vec<usize>,
    edges: Vec<u64>,
}

/// Minimum cycle basis via Horton candidates and GF(2) elimination.
/// Each ring is returned in traversal order.
pub(crate) fn sssr(mol: &Molecule) -> Vec<Vec<usize>> {
    let n = mol.atoms.len();
    let nb = mol.bonds.len();
    let ring_bonds: Vec<usize> = (0..nb).filter(|&b| mol.bonds[b].ring_member).collect();
    if ring_bonds.is_empty() {
        return Vec::new();
    }
    let mut ring_atom = vec![false; n];
    for &b in &ring_bonds {
        ring_atom[mol.bonds[b].begin] = true;
        ring_atom[mol.bonds[b].end] = true;
    }
    let ring_nbrs: Vec<Vec<(usize, usize)>> = (0..n)
        .map(|a| {
            mol.adjacency[a]
                .iter()
                .copied()
                .filter(|&(_, bi)| mol.bonds[bi].ring_member)
                .collect()
        })
        .collect();
    let n_ring_atoms = ring_atom.iter().filter(|&&r| r).count();
    let components = {
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if !ring_atom[s] || seen[s] {
                continue;
            }
            count += 1;
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(v) = stack.pop() {
                for &(w, _) in &ring_nbrs[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    };
    let needed = ring_bonds.len() + components - n_ring_atoms;
    let words = nb.div_ceil(64);

    let mut candidates = Vec::new();
    for root in (0..n).filter(|&a| ring_atom[a]) {
        let mut dist = vec![usize::MAX; n];
        let mut parent = vec![(usize::MAX, usize::MAX); n];
        let mut order = vec![root];
        dist[root] = 0;
        let mut i = 0;
        while i < order.len() {
            let v = order[i];
            i += 1;
            for &(w, bi) in &ring_nbrs[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    parent[w] = (v, bi);
                    order.push(w);
                }
            }
        }
        let path = |mut v: usize| {
            let mut atoms = vec![v];
            let mut bonds = Vec::new();
            while v != root {
                let (p, bi) = parent[v];
                bonds.push(bi);
                atoms.push(p);
                v = p;
            }
            (atoms, bonds)
        };
        for &bi in &ring_bonds {
            let (x, y) = (mol.bonds[bi].begin, mol.bonds[bi].end);
            if dist[x] == usize::MAX || dist[y] == usize::MAX {
                continue;
            }
            if parent[x].1 == bi || parent[y].1 == bi {
                continue;
            }
            let (px, bx) = path(x);
            let (py, by) = path(y);
            // Paths must only share the root.
            if px[..px.len() - 1].iter().any(|a| py.contains(a)) {
                continue;
            }
            let mut atoms = px;
            atoms.reverse();
            atoms.extend_from_slice(&py[..py.len() - 1]);
            let mut edges = vec![0u64; words];
            for b in bx.iter().chain(by.iter()).chain(std::iter::once(&bi)) {
                edges[b / 64] |= 1 << (b % 64);
            }
            candidates.push(Candidate { atoms, edges });
        }
    }
    candidates.sort_by(|a, b| {
        a.atoms.len().cmp(&b.atoms.len()).then_with(|| {
            let mut x = a.atoms.clone();
            let mut y = b.atoms.clone();
            x.sort_unstable();
            y.sort_unstable();
            x.cmp(&y)
        })
    });

    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut rings = Vec::new();
    for c in candidates {
        if rings.len() == needed {
            break;
        }
        let mut v = c.edges.clone();
        loop {
            let Some(pivot) = lowest_bit(&v) else { break };
            match basis.iter().find(|(p, _)| *p == pivot) {
                Some((_, row)) => {
                    for (a, b) in v.iter_mut().zip(row) {
                        *a ^= b;
                    }
                }
                None => {
                    basis.push((pivot, v));
                    rings.push(c.atoms);
                    break;
                }
            }
        }
    }
    rings.sort_by(|a, b| {
        a.len()
            .cmp(&b.len())
            .then_with(|| a.iter().min().cmp(&b.iter().min()))
    });
    rings
}

fn lowest_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}
