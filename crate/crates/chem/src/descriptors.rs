//! Physicochemical descriptors: weight, Crippen logP/MR, TPSA, counts, QED.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::element;
use crate::mol::{BondOrder, Molecule};
use crate::smarts::{parse_smarts, Catalog, MatchContext, Pattern};

/// Descriptor keys in report order.
pub const DESCRIPTOR_KEYS: [&str; 10] = [
    "mw", "logp", "tpsa", "hbd", "hba", "rotb", "aro_rings", "fsp3", "qed", "mr",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorProfile {
    pub mw: f64,
    pub logp: f64,
    pub tpsa: f64,
    pub hbd: u32,
    pub hba: u32,
    pub rotb: u32,
    pub aro_rings: u32,
    pub fsp3: f64,
    pub qed: f64,
    pub mr: f64,
}

impl DescriptorProfile {
    pub fn get(&self, key: &str) -> Option<f64> {
        Some(match key {
            "mw" => self.mw,
            "logp" => self.logp,
            "tpsa" => self.tpsa,
            "hbd" => f64::from(self.hbd),
            "hba" => f64::from(self.hba),
            "rotb" => f64::from(self.rotb),
            "aro_rings" => f64::from(self.aro_rings),
            "fsp3" => self.fsp3,
            "qed" => self.qed,
            "mr" => self.mr,
            _ => return None,
        })
    }

    /// Flat key to value pairs in report order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        DESCRIPTOR_KEYS
            .iter()
            .map(|&k| (k, self.get(k).unwrap_or(f64::NAN)))
            .collect()
    }
}

struct CrippenType {
    logp: f64,
    mr: f64,
    pattern: Pattern,
}

struct TpsaRow {
    element: u8,
    nbrs: u32,
    h: u32,
    charge: i32,
    counts: [u32; 4],
    ring3: Option<bool>,
    value: f64,
}

struct QedParam {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    f: f64,
    dmax: f64,
    weight: f64,
}

impl QedParam {
    fn desirability(&self, x: f64) -> f64 {
        let e1 = 1.0 + (-(x - self.c + self.d / 2.0) / self.e).exp();
        let e2 = 1.0 + (-(x - self.c - self.d / 2.0) / self.f).exp();
        (self.a + self.b / e1 * (1.0 - 1.0 / e2)) / self.dmax
    }
}

struct Tables {
    crippen: Vec<CrippenType>,
    tpsa: Vec<TpsaRow>,
    qed: Vec<QedParam>,
    alerts: Catalog,
    rotatable: Pattern,
    donor: Pattern,
    acceptors: Vec<Pattern>,
    aliphatic_ring: Pattern,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| load_tables().expect("bundled descriptor tables are valid"))
}

fn data_lines(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').collect())
}

fn load_tables() -> Result<Tables, String> {
    let num = |s: &str| -> Result<f64, String> {
        if s.trim().is_empty() {
            Ok(0.0)
        } else {
            s.trim().parse().map_err(|e| format!("bad number {s:?}: {e}"))
        }
    };
    let int = |s: &str| -> Result<i64, String> { s.parse().map_err(|e| format!("{s:?}: {e}")) };

    let mut crippen = Vec::new();
    for f in data_lines(include_str!("../data/crippen.txt")) {
        let pattern = parse_smarts(f[1]).map_err(|e| format!("{}: {e}", f[1]))?;
        crippen.push(CrippenType {
            logp: num(f[2])?,
            mr: num(f.get(3).copied().unwrap_or(""))?,
            pattern,
        });
    }

    let mut tpsa = Vec::new();
    for f in data_lines(include_str!("../data/tpsa.tsv")) {
        tpsa.push(TpsaRow {
            element: element::atomic_number(f[0]).ok_or(format!("element {}", f[0]))?,
            nbrs: int(f[1])? as u32,
            h: int(f[2])? as u32,
            charge: int(f[3])? as i32,
            counts: [
                int(f[4])? as u32,
                int(f[5])? as u32,
                int(f[6])? as u32,
                int(f[7])? as u32,
            ],
            ring3: match f[8] {
                "*" => None,
                v => Some(v == "1"),
            },
            value: num(f[9])?,
        });
    }

    let mut qed = Vec::new();
    for f in data_lines(include_str!("../data/qed_params.tsv")) {
        let v: Vec<f64> = f[1..].iter().map(|s| num(s)).collect::<Result<_, _>>()?;
        qed.push(QedParam {
            a: v[0],
            b: v[1],
            c: v[2],
            d: v[3],
            e: v[4],
            f: v[5],
            dmax: v[6],
            weight: v[7],
        });
    }

    let alerts = Catalog::parse(include_str!("../data/qed_alerts.tsv")).map_err(|e| e.to_string())?;
    let named = Catalog::parse(include_str!("../data/patterns.tsv")).map_err(|e| e.to_string())?;
    let find = |name: &str| -> Vec<Pattern> {
        named
            .entries
            .iter()
            .filter(|(n, _)| n == name)
            .map(|(_, p)| p.clone())
            .collect()
    };
    let one = |name: &str| find(name).pop().ok_or(format!("missing pattern {name}"));
    Ok(Tables {
        crippen,
        tpsa,
        qed,
        alerts,
        rotatable: one("rotatable_strict")?,
        donor: one("qed_donor")?,
        acceptors: find("qed_acceptor"),
        aliphatic_ring: one("qed_aliphatic_ring")?,
    })
}

/// Average molecular weight, hydrogens included.
pub fn molecular_weight(mol: &Molecule) -> f64 {
    let h = element::average_weight(1);
    mol.atoms()
        .iter()
        .map(|a| {
            let own = match a.isotope {
                Some(iso) => element::isotope_mass(a.element, iso),
                None => element::average_weight(a.element),
            };
            own + f64::from(a.total_h()) * h
        })
        .sum()
}

/// Wildman-Crippen (logP, MR).
pub fn crippen(mol: &Molecule) -> (f64, f64) {
    let t = tables();
    let full = mol.with_explicit_hydrogens();
    let ctx = MatchContext::new(&full);
    let mut logp = 0.0;
    let mut mr = 0.0;
    for atom in 0..full.atom_count() {
        if let Some(ty) = t.crippen.iter().find(|ty| ctx.matches_at(&ty.pattern, atom)) {
            logp += ty.logp;
            mr += ty.mr;
        }
    }
    (logp, mr)
}

/// Topological polar surface area over N and O, optionally S and P.
pub fn tpsa(mol: &Molecule, include_s_and_p: bool) -> f64 {
    let t = tables();
    let mut total = 0.0;
    for (i, atom) in mol.atoms().iter().enumerate() {
        let z = atom.element;
        let sp = z == 15 || z == 16;
        if z != 7 && z != 8 && !(include_s_and_p && sp) {
            continue;
        }
        let mut h = u32::from(atom.total_h());
        let mut nbrs = 0;
        let mut counts = [0u32; 4];
        for &(n, bi) in mol.neighbors(i) {
            if mol.atom(n).element == 1 {
                h += 1;
                continue;
            }
            nbrs += 1;
            let slot = match mol.bond(bi).order {
                BondOrder::Single => 0,
                BondOrder::Double => 1,
                BondOrder::Triple => 2,
                BondOrder::Aromatic => 3,
            };
            counts[slot] += 1;
        }
        let charge = i32::from(atom.formal_charge);
        let ring3 = mol.in_ring_of_size(i, 3);
        let hit = t.tpsa.iter().find(|r| {
            r.element == z
                && r.nbrs == nbrs
                && r.h == h
                && r.charge == charge
                && r.counts == counts
                && r.ring3.is_none_or(|want| want == ring3)
        });
        total += match hit {
            Some(r) => r.value,
            None => match z {
                7 => (30.5 - f64::from(nbrs) * 8.2 + f64::from(h) * 1.5).max(0.0),
                8 => (28.5 - f64::from(nbrs) * 8.6 + f64::from(h) * 1.5).max(0.0),
                _ => 0.0,
            },
        };
    }
    total
}

/// N or O atoms carrying at least one hydrogen.
pub fn hbd(mol: &Molecule) -> u32 {
    mol.atoms()
        .iter()
        .filter(|a| matches!(a.element, 7 | 8) && a.total_h() > 0)
        .count() as u32
}

/// N and O atoms.
pub fn hba(mol: &Molecule) -> u32 {
    mol.atoms()
        .iter()
        .filter(|a| matches!(a.element, 7 | 8))
        .count() as u32
}

/// Rotatable bonds, strict variant: amide C-N and bonds to CX3 end groups are excluded.
pub fn rotatable_bonds(mol: &Molecule) -> u32 {
    MatchContext::new(mol).count_matches(&tables().rotatable) as u32
}

/// SSSR rings whose bonds are all aromatic.
pub fn aromatic_rings(mol: &Molecule) -> u32 {
    mol.rings()
        .iter()
        .filter(|ring| {
            (0..ring.len()).all(|k| {
                let a = ring[k];
                let b = ring[(k + 1) % ring.len()];
                mol.bond_between(a, b)
                    .is_some_and(|bi| mol.bond(bi).order == BondOrder::Aromatic)
            })
        })
        .count() as u32
}

/// Fraction of carbons with four single connections (hydrogens included).
pub fn fraction_sp3(mol: &Molecule) -> f64 {
    let mut carbons = 0;
    let mut sp3 = 0;
    for (i, a) in mol.atoms().iter().enumerate() {
        if a.element != 6 {
            continue;
        }
        carbons += 1;
        let all_single = mol
            .neighbors(i)
            .iter()
            .all(|&(_, bi)| mol.bond(bi).order == BondOrder::Single);
        if all_single && mol.total_degree(i) == 4 {
            sp3 += 1;
        }
    }
    if carbons == 0 {
        0.0
    } else {
        f64::from(sp3) / f64::from(carbons)
    }
}

/// The eight raw QED properties in table order.
fn qed_properties(mol: &Molecule, mw: f64, logp: f64) -> [f64; 8] {
    let t = tables();
    let ctx = MatchContext::new(mol);
    let hba: usize = t.acceptors.iter().map(|p| ctx.count_matches(p)).sum();
    let hbd = ctx.count_matches(&t.donor);
    let psa = tpsa(mol, false);
    let rotb = ctx.count_matches(&t.rotatable);
    let alerts = t.alerts.entries.iter().filter(|(_, p)| ctx.has_match(p)).count();

    // Rings left after deleting aliphatic ring atoms bonded to a non-aromatic atom.
    let removed: Vec<bool> = (0..mol.atom_count())
        .map(|a| ctx.matches_at(&t.aliphatic_ring, a))
        .collect();
    let kept = removed.iter().filter(|r| !**r).count();
    let edges = mol
        .bonds()
        .iter()
        .filter(|b| !removed[b.begin] && !removed[b.end])
        .count();
    let arom = edges + kept_components(mol, &removed) - kept;

    [
        mw,
        logp,
        hba as f64,
        hbd as f64,
        psa,
        rotb as f64,
        arom as f64,
        alerts as f64,
    ]
}

fn kept_components(mol: &Molecule, removed: &[bool]) -> usize {
    let mut seen = removed.to_vec();
    let mut count = 0;
    for s in 0..mol.atom_count() {
        if seen[s] {
            continue;
        }
        count += 1;
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &(w, _) in mol.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

fn qed_from(props: [f64; 8]) -> f64 {
    let params = &tables().qed;
    let total_w: f64 = params.iter().map(|p| p.weight).sum();
    let t: f64 = params
        .iter()
        .zip(props)
        .map(|(p, x)| p.weight * p.desirability(x).ln())
        .sum();
    (t / total_w).exp()
}

/// Quantitative estimate of drug-likeness with mean weights.
pub fn qed(mol: &Molecule) -> f64 {
    let (logp, _) = crippen(mol);
    qed_from(qed_properties(mol, molecular_weight(mol), logp))
}

pub fn compute_profile(mol: &Molecule) -> DescriptorProfile {
    let mw = molecular_weight(mol);
    let (logp, mr) = crippen(mol);
    DescriptorProfile {
        mw,
        logp,
        tpsa: tpsa(mol, true),
        hbd: hbd(mol),
        hba: hba(mol),
        rotb: rotatable_bonds(mol),
        aro_rings: aromatic_rings(mol),
        fsp3: fraction_sp3(mol),
        qed: qed_from(qed_properties(mol, mw, logp)).clamp(0.0, 1.0),
        mr,
    }
}
