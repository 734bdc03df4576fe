//! Assign alternating single/double bonds to aromatic input.

use std::collections::VecDeque;

use crate::element;
use crate::error::ChemError;
use crate::mol::{BondOrder, Molecule};

/// Pick Kekulé orders for every aromatic bond. Aromatic atoms that still
/// have a free valence must each receive exactly one double bond.
pub(crate) fn kekulize(mol: &mut Molecule) -> Result<(), ChemError> {
    let n = mol.atoms.len();
    let mut candidate = vec![false; n];
    for (i, atom) in mol.atoms.iter().enumerate() {
        let has_aromatic_bond = mol.adjacency[i]
            .iter()
            .any(|&(_, bi)| mol.bonds[bi].order == BondOrder::Aromatic);
        if !atom.aromatic || !has_aromatic_bond {
            continue;
        }
        let used: i32 = mol.adjacency[i]
            .iter()
            .map(|&(_, bi)| i32::from(mol.bonds[bi].order.valence()))
            .sum::<i32>()
            + i32::from(atom.explicit_h);
        if let Some(target) = element::target_valence(atom.element, atom.formal_charge, used) {
            candidate[i] = target - used >= 1;
        }
    }
    let mut graph = vec![Vec::new(); n];
    for b in &mol.bonds {
        if b.order == BondOrder::Aromatic && candidate[b.begin] && candidate[b.end] {
            graph[b.begin].push(b.end);
            graph[b.end].push(b.begin);
        }
    }
    let mate = max_matching(&graph);
    if let Some(bad) = (0..n).find(|&i| candidate[i] && mate[i].is_none()) {
        return Err(ChemError::Aromaticity(format!(
            "cannot kekulize: atom {bad} has no double-bond partner"
        )));
    }
    for b in &mut mol.bonds {
        if b.order == BondOrder::Aromatic {
            b.kekule = if mate[b.begin] == Some(b.end) {
                BondOrder::Double
            } else {
                BondOrder::Single
            };
        } else {
            b.kekule = b.order;
        }
    }
    Ok(())
}

/// Edmonds' blossom algorithm; returns the partner of every vertex.
pub(crate) fn max_matching(graph: &[Vec<usize>]) -> Vec<Option<usize>> {
    let n = graph.len();
    let mut mate: Vec<Option<usize>> = vec![None; n];
    // Greedy start keeps the augmenting phase short.
    for v in 0..n {
        if mate[v].is_none() {
            if let Some(&w) = graph[v].iter().find(|&&w| mate[w].is_none()) {
                mate[v] = Some(w);
                mate[w] = Some(v);
            }
        }
    }
    for root in 0..n {
        if mate[root].is_none() && !graph[root].is_empty() {
            if let Some(end) = find_path(graph, &mate, root) {
                augment(&mut mate, end.0, &end.1);
            }
        }
    }
    mate
}

fn augment(mate: &mut [Option<usize>], mut v: usize, parent: &[Option<usize>]) {
    while let Some(pv) = parent[v] {
        let next = mate[pv];
        mate[v] = Some(pv);
        mate[pv] = Some(v);
        match next {
            Some(nv) => v = nv,
            None => break,
        }
    }
}

fn find_path(
    graph: &[Vec<usize>],
    mate: &[Option<usize>],
    root: usize,
) -> Option<(usize, Vec<Option<usize>>)> {
    let n = graph.len();
    let mut used = vec![false; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut base: Vec<usize> = (0..n).collect();
    used[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &to in &graph[v] {
            if base[v] == base[to] || mate[v] == Some(to) {
                continue;
            }
            if to == root || mate[to].is_some_and(|m| parent[m].is_some()) {
                let cur = lca(mate, &base, &parent, v, to);
                let mut blossom = vec![false; n];
                mark_path(mate, &base, &mut parent, &mut blossom, v, cur, to);
                mark_path(mate, &base, &mut parent, &mut blossom, to, cur, v);
                for i in 0..n {
                    if blossom[base[i]] {
                        base[i] = cur;
                        if !used[i] {
                            used[i] = true;
                            queue.push_back(i);
                        }
                    }
                }
            } else if parent[to].is_none() {
                parent[to] = Some(v);
                match mate[to] {
                    None => return Some((to, parent)),
                    Some(m) => {
                        used[m] = true;
                        queue.push_back(m);
                    }
                }
            }
        }
    }
    None
}

fn lca(
    mate: &[Option<usize>],
    base: &[usize],
    parent: &[Option<usize>],
    mut a: usize,
    mut b: usize,
) -> usize {
    let mut seen = vec![false; mate.len()];
    loop {
        a = base[a];
        seen[a] = true;
        match mate[a].and_then(|m| parent[m]) {
            Some(p) => a = p,
            None => break,
        }
    }
    loop {
        b = base[b];
        if seen[b] {
            return b;
        }
        // Every vertex on b's path is matched until the root is reached.
        b = parent[mate[b].expect("matched vertex on alternating path")]
            .expect("alternating path reaches the root");
    }
}

fn mark_path(
    mate: &[Option<usize>],
    base: &[usize],
    parent: &mut [Option<usize>],
    blossom: &mut [bool],
    mut v: usize,
    b: usize,
    mut child: usize,
) {
    while base[v] != b {
        let m = mate[v].expect("blossom vertex is matched");
        blossom[base[v]] = true;
        blossom[base[m]] = true;
        parent[v] = Some(child);
        child = m;
        v = parent[m].expect("blossom path continues");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut g = vec![Vec::new(); n];
        for &(a, b) in edges {
            g[a].push(b);
            g[b].push(a);
        }
        g
    }

    #[test]
    fn perfect_matching_on_hexagon() {
        let g = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let m = max_matching(&g);
        assert!(m.iter().all(Option::is_some));
    }

    #[test]
    fn blossom_is_contracted() {
        // Triangle with a tail on each side; greedy start matches badly.
        let g = graph(6, &[(0, 1), (1, 2), (2, 0), (0, 3), (1, 4), (2, 5)]);
        let m = max_matching(&g);
        assert_eq!(m.iter().filter(|x| x.is_some()).count(), 6);
    }

    #[test]
    fn odd_cycle_leaves_one_vertex() {
        let g = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let m = max_matching(&g);
        assert_eq!(m.iter().filter(|x| x.is_some()).count(), 4);
    }
}
