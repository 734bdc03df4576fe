//! Deterministic validity and descriptor reports for candidate pools.

use std::collections::BTreeSet;

use moldebate_chem::{compute_profile, parse_smiles, DescriptorProfile, DESCRIPTOR_KEYS};
use serde::{Deserialize, Serialize};

use crate::agents::Candidate;

/// Sentence label for each descriptor key, in report order.
pub const DESCRIPTOR_LABELS: [(&str, &str); 10] = [
    ("mw", "The average molecular weight of the molecule"),
    (
        "logp",
        "The logarithm of the octanol-water partition coefficient (LogP) value of the molecule",
    ),
    ("tpsa", "The topological polar surface area (TPSA) of the molecule"),
    ("hbd", "The number of hydrogen bond donors in the molecule"),
    ("hba", "The number of hydrogen bond acceptors in the molecule"),
    ("rotb", "The number of rotatable bonds in the molecule"),
    ("aro_rings", "The number of aromatic rings for a molecule"),
    ("fsp3", "The fraction of C atoms that are SP3 hybridized in the molecule"),
    ("qed", "The quantitative estimation of drug-likeness of the molecule"),
    ("mr", "The molecular refractivity (MR) of the molecule"),
];

pub type Mask = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExamReport {
    /// 1-based position in the pool.
    pub candidate_index: usize,
    pub smiles: String,
    pub valid: bool,
    pub parse_error: Option<String>,
    pub profile: Option<DescriptorProfile>,
    pub masked: Mask,
    pub rendered_text: String,
}

/// Names accepted in a mask.
pub fn is_descriptor(name: &str) -> bool {
    DESCRIPTOR_KEYS.contains(&name)
}

pub fn examine(candidate_index: usize, smiles: &str, mask: &Mask) -> ExamReport {
    let (profile, parse_error) = match parse_smiles(smiles) {
        Ok(mol) => (Some(compute_profile(&mol)), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut report = ExamReport {
        candidate_index,
        smiles: smiles.to_string(),
        valid: profile.is_some(),
        parse_error,
        profile,
        masked: mask.clone(),
        rendered_text: String::new(),
    };
    report.rendered_text = render_report(&report);
    report
}

/// One report per candidate, in pool order. Candidates are examined in parallel.
pub fn examine_pool(pool: &[Candidate], mask: &Mask) -> Vec<ExamReport> {
    std::thread::scope(|s| {
        let handles: Vec<_> = pool
            .iter()
            .enumerate()
            .map(|(i, c)| s.spawn(move || examine(i + 1, &c.smiles, mask)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("examiner thread panicked"))
            .collect()
    })
}

/// Header line, then one line per unmasked descriptor.
pub fn render_report(report: &ExamReport) -> String {
    let Some(profile) = &report.profile else {
        let diag = report.parse_error.as_deref().unwrap_or("unparseable");
        return format!("The SMILES {} is invalid: {}.", report.smiles, diag.trim_end_matches('.'));
    };
    let mut lines = vec![format!(
        "The SMILES {} is valid with the following properties:",
        report.smiles
    )];
    for (key, label) in DESCRIPTOR_LABELS {
        if report.masked.contains(key) {
            continue;
        }
        let value = profile.get(key).unwrap_or(f64::NAN);
        lines.push(format!("{label}: {value:.2}."));
    }
    lines.join("\n")
}
