//! Descriptor parity against reference-toolkit values on a 200-molecule sample.

use moldebate_chem::{compute_profile, parse_smiles, DESCRIPTOR_KEYS};

const FIXTURE: &str = include_str!("fixtures/descriptors.tsv");

fn tolerance(key: &str) -> f64 {
    match key {
        "mw" | "tpsa" | "fsp3" => 0.01,
        "logp" | "qed" => 0.05,
        "mr" => 0.5,
        _ => 0.0,
    }
}

#[test]
fn descriptors_match_reference_values() {
    let mut misses = Vec::new();
    let mut rows = 0;
    for line in FIXTURE.lines().filter(|l| !l.starts_with('#')) {
        let cols: Vec<&str> = line.split('\t').collect();
        let mol = parse_smiles(cols[0]).unwrap_or_else(|e| panic!("{}: {e}", cols[0]));
        let profile = compute_profile(&mol);
        for (k, key) in DESCRIPTOR_KEYS.iter().enumerate() {
            let want: f64 = cols[k + 1].parse().unwrap();
            let got = profile.get(key).unwrap();
            if (got - want).abs() > tolerance(key) + 1e-9 {
                misses.push(format!("{key} {} got {got} want {want}", cols[0]));
            }
        }
        rows += 1;
    }
    assert_eq!(rows, 200);
    assert!(misses.is_empty(), "{} misses:\n{}", misses.len(), misses.join("\n"));
}
