use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use moldebate_core::eval::{corpus_bleu, levenshtein, tanimoto, validity_rate};
use moldebate_core::orchestrator::{consensus, judge};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Selections as bitmasks over a pool of at most 12.
fn random_tuple(rng: &mut ChaCha8Rng) -> (Vec<u16>, usize) {
    let k = rng.random_range(1..=5);
    let pool = rng.random_range(1..=12);
    let masks = (0..k).map(|_| rng.random_range(0..(1u16 << pool))).collect();
    (masks, pool)
}

fn to_set(mask: u16) -> BTreeSet<usize> {
    (0..16).filter(|b| mask >> b & 1 == 1).map(|b| b + 1).collect()
}

fn jaccard_mean(masks: &[u16]) -> f64 {
    if masks.len() < 2 {
        return 1.0;
    }
    let mut values = Vec::new();
    for i in 0..masks.len() {
        for j in 0..masks.len() {
            if i < j {
                let u = (masks[i] | masks[j]).count_ones();
                let n = (masks[i] & masks[j]).count_ones();
                values.push(if u == 0 { 1.0 } else { n as f64 / u as f64 });
            }
        }
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn judge_mask(masks: &[u16]) -> u16 {
    let inter = masks.iter().fold(u16::MAX, |a, &m| a & m);
    if inter != 0 {
        inter
    } else {
        masks.iter().fold(0, |a, &m| a | m)
    }
}

#[test]
fn consensus_and_judge_match_set_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut fallbacks = 0;
    for _ in 0..1000 {
        let (masks, _) = random_tuple(&mut rng);
        let sets: Vec<BTreeSet<usize>> = masks.iter().map(|&m| to_set(m)).collect();
        assert!((consensus(&sets) - jaccard_mean(&masks)).abs() <= 1e-12, "{masks:?}");
        assert_eq!(judge(&sets), to_set(judge_mask(&masks)), "{masks:?}");
        fallbacks += (masks.iter().fold(u16::MAX, |a, &m| a & m) == 0) as usize;
    }
    assert!(fallbacks > 100, "union branch exercised only {fallbacks} times");
}

fn dp_levenshtein(a: &[u8], b: &[u8]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            cur[j] = (prev[j - 1] + (a[i - 1] != b[j - 1]) as usize)
                .min(prev[j] + 1)
                .min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

#[test]
fn levenshtein_matches_dynamic_programming() {
    let alphabet = b"CNOcn()=#123[]@+-";
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let word = |rng: &mut ChaCha8Rng| -> Vec<u8> {
        let n = rng.random_range(0..24);
        (0..n).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
    };
    for _ in 0..1000 {
        let (a, b) = (word(&mut rng), word(&mut rng));
        let (sa, sb) = (String::from_utf8(a.clone()).unwrap(), String::from_utf8(b.clone()).unwrap());
        assert_eq!(levenshtein(&sa, &sb), dp_levenshtein(&a, &b), "{sa:?} {sb:?}");
    }
}

#[test]
fn bleu_of_identical_corpora_is_one() {
    let corpus: Vec<(String, String)> = ["CCO", "c1ccccc1", "CC(=O)Nc1ccc(O)cc1", "N"]
        .iter()
        .map(|s| (s.to_string(), s.to_string()))
        .collect();
    assert_eq!(corpus_bleu(&corpus), 1.0);
}

#[test]
fn tanimoto_hand_cases() {
    let bits = |on: &[usize]| {
        let mut b = FixedBitSet::with_capacity(32);
        on.iter().for_each(|&i| b.insert(i));
        b
    };
    assert_eq!(tanimoto(&bits(&[0, 5, 9]), &bits(&[0, 5, 9])).unwrap(), 1.0);
    assert_eq!(tanimoto(&bits(&[0, 5, 9]), &bits(&[1, 6])).unwrap(), 0.0);
    assert_eq!(tanimoto(&bits(&[0, 5, 9]), &bits(&[5, 9, 20])).unwrap(), 0.5);
}

#[test]
fn validity_rate_matches_hand_counts() {
    let preds = ["CCO", "C1CC", "c1ccccc1", "C(C", "N#N", "Cl", "[Xx]", "O=C=O"];
    assert_eq!(validity_rate(&preds), 5.0 / 8.0);
}
