//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use moldebate_chem::{canonical_smiles, parse_smiles, smiles_with_order, Molecule};
use moldebate_cli::commands::{read_trace, ResultLine};
use moldebate_cli::config::RunConfig;
use moldebate_core::eval::{corpus_bleu, levenshtein, tanimoto, validity_rate};
use moldebate_core::orchestrator::{consensus, judge, replay, EventKind, RunRecord};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const STEROID: &str = "COC(=O)/C=C/[C@H]1CC[C@H]2[C@@H]3CCC4=CC(=O)CC[C@]4(C)[C@H]3C(=O)C[C@]12C";
const CORPUS: &str = include_str!("../../chem/tests/fixtures/canon_corpus.smi");
const SMALL: &str = include_str!("../../chem/tests/fixtures/canon_small.smi");
const VALIDITY: &str = include_str!("../../chem/tests/fixtures/validity.tsv");

enum Status {
    Pass,
    Fail,
    Documented,
}

type Outcome = (Status, String);

fn pass(detail: String) -> Outcome {
    (Status::Pass, detail)
}

fn fail(detail: String) -> Outcome {
    (Status::Fail, detail)
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn moldebate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moldebate"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn examiner_golden() -> Outcome {
    let start = Instant::now();
    let out = moldebate(&["examine", STEROID, "--json"]);
    let elapsed = start.elapsed();
    if !out.status.success() {
        return fail(format!("examine exited with {}", out.status));
    }
    let report: Value = serde_json::from_slice(&out.stdout).expect("report is JSON");
    let p = &report["profile"];
    let expected: [(&str, f64, f64); 10] = [
        ("mw", 370.49, 0.01),
        ("logp", 4.04, 0.05),
        ("tpsa", 60.44, 0.01),
        ("hbd", 0.0, 0.0),
        ("hba", 4.0, 0.0),
        ("rotb", 2.0, 0.0),
        ("aro_rings", 0.0, 0.0),
        ("fsp3", 0.70, 0.01),
        ("qed", 0.54, 0.05),
        ("mr", 101.75, 0.5),
    ];
    let mut misses = Vec::new();
    let mut shown = Vec::new();
    for (key, want, tol) in expected {
        let got = p[key].as_f64().unwrap_or(f64::NAN);
        shown.push(format!("{key}={got:.2}"));
        if !((got - want).abs() <= tol + 1e-9) {
            misses.push(format!("{key} {got:.4} vs {want}±{tol}"));
        }
    }
    let fast = elapsed < Duration::from_secs(1);
    let detail = format!("{} in {:.0} ms", shown.join(" "), elapsed.as_secs_f64() * 1e3);
    if misses.is_empty() && fast {
        pass(detail)
    } else {
        fail(format!("{detail}; misses: {}", misses.join(", ")))
    }
}

fn same_atom(a: &Molecule, i: usize, b: &Molecule, j: usize) -> bool {
    let (x, y) = (a.atom(i), b.atom(j));
    x.element == y.element
        && x.formal_charge == y.formal_charge
        && x.isotope == y.isotope
        && x.total_h() == y.total_h()
        && x.aromatic == y.aromatic
        && a.degree(i) == b.degree(j)
}

fn isomorphic(a: &Molecule, b: &Molecule) -> bool {
    if a.atom_count() != b.atom_count() || a.bonds().len() != b.bonds().len() {
        return false;
    }
    fn extend(a: &Molecule, b: &Molecule, map: &mut Vec<usize>, used: &mut Vec<bool>) -> bool {
        let i = map.len();
        if i == a.atom_count() {
            return true;
        }
        for j in 0..b.atom_count() {
            if used[j] || !same_atom(a, i, b, j) {
                continue;
            }
            let consistent = (0..i).all(|k| {
                a.bond_between(i, k).map(|x| a.bond(x).order)
                    == b.bond_between(j, map[k]).map(|x| b.bond(x).order)
            });
            if consistent {
                map.push(j);
                used[j] = true;
                if extend(a, b, map, used) {
                    return true;
                }
                map.pop();
                used[j] = false;
            }
        }
        false
    }
    extend(a, b, &mut Vec::new(), &mut vec![false; b.atom_count()])
}

fn canonicalization() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut molecules = 0;
    for line in CORPUS.lines().filter(|l| !l.is_empty()).take(100) {
        let Ok(mol) = parse_smiles(line) else {
            return fail(format!("corpus molecule {line} does not parse"));
        };
        let reference = canonical_smiles(&mol);
        for _ in 0..100 {
            let mut order: Vec<usize> = (0..mol.atom_count()).collect();
            order.shuffle(&mut rng);
            let text = smiles_with_order(&mol, &order);
            match parse_smiles(&text) {
                Ok(m) if canonical_smiles(&m) == reference => {}
                _ => return fail(format!("{line} rewritten as {text} changed its canonical form")),
            }
        }
        molecules += 1;
    }
    let mut small = 0;
    for line in SMALL.lines().chain(CORPUS.lines()).filter(|l| !l.is_empty()) {
        let mol = parse_smiles(line).expect("fixture parses");
        if mol.heavy_atom_count() > 12 {
            continue;
        }
        let canon = canonical_smiles(&mol);
        match parse_smiles(&canon) {
            Ok(back) if isomorphic(&mol, &back) => small += 1,
            _ => return fail(format!("{line} -> {canon} is not isomorphic")),
        }
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "{molecules}x100 renumberings identical, {small} small round trips isomorphic, {:.1} s",
        elapsed.as_secs_f64()
    );
    if molecules == 100 && elapsed < Duration::from_secs(60) {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn smiles_list(v: &Value) -> String {
    v.as_array()
        .map(|a| {
            a.iter()
                .map(|c| c.get("smiles").unwrap_or(c).as_str().unwrap_or("?").to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .unwrap_or_default()
}

fn indices(v: &Value) -> String {
    let xs: Vec<String> = v.as_array().into_iter().flatten().map(|x| x.to_string()).collect();
    format!("[{}]", xs.join(","))
}

fn summarize(record: &RunRecord) -> Vec<String> {
    record
        .events
        .iter()
        .map(|e| {
            let (r, p) = (e.round, &e.payload);
            let who = e.agent.as_deref().unwrap_or("");
            match e.kind {
                EventKind::Config => "config".to_string(),
                EventKind::Developer => format!("developer {r} {who} {}", p["smiles"].as_str().unwrap_or("-")),
                EventKind::Pool => format!("pool {r} {}", smiles_list(&p["candidates"])),
                EventKind::Report => format!("report {r}"),
                EventKind::Debater => format!("debater {r} {who} {}", indices(&p["selection"])),
                EventKind::Judge => format!("judge {r} {}", indices(&p["judged"])),
                EventKind::Consensus => format!("consensus {r} {:.4}", p["value"].as_f64().unwrap_or(f64::NAN)),
                EventKind::Refiner => format!("refiner {r} {who}"),
                EventKind::Stop => format!("stop {r} {} {}", p["stop"], smiles_list(&p["next_pool"])),
                EventKind::Final => format!("final {r} {}", p["candidate"]["smiles"].as_str().unwrap_or("?")),
                EventKind::Failure => format!("failure {r}"),
            }
        })
        .collect()
}

fn debate_round(r: usize, pool: &str, picks: [&str; 2], judged: &str, consensus: &str) -> Vec<String> {
    vec![
        format!("pool {r} {pool}"),
        format!("report {r}"),
        format!("debater {r} judge-a {}", picks[0]),
        format!("debater {r} judge-b {}", picks[1]),
        format!("judge {r} {judged}"),
        format!("consensus {r} {consensus}"),
    ]
}

fn scenario(script: &str, expected: Vec<String>) -> Result<usize, String> {
    let dir = tempfile::tempdir().expect("temp dir");
    let trace = dir.path().join("trace.jsonl");
    let out = moldebate(&["mock-run", fixture(script).to_str().unwrap(), "--out", trace.to_str().unwrap()]);
    if !out.status.success() {
        return Err(format!("{script}: exit {}", out.status));
    }
    let record = RunRecord::from_jsonl(&std::fs::read_to_string(&trace).unwrap()).map_err(|e| e.to_string())?;
    let got = summarize(&record);
    if got != expected {
        let first = got.iter().zip(&expected).position(|(a, b)| a != b).unwrap_or(got.len().min(expected.len()));
        return Err(format!(
            "{script}: trace differs at event {first}: got {:?}, expected {:?}",
            got.get(first),
            expected.get(first)
        ));
    }
    Ok(record.rounds())
}

fn trace_equivalence() -> Outcome {
    let mut a = vec!["config", "developer 0 dev CCO", "developer 0 dev CCN"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    a.extend([
        "pool 1 CCO,CCN".to_string(),
        "report 1".into(),
        "debater 1 judge-1 [1]".into(),
        "debater 1 judge-2 [1]".into(),
        "judge 1 [1]".into(),
        "consensus 1 1.0000".into(),
        "stop 1 true CCO".into(),
        "final 1 CCO".into(),
    ]);

    let mut b: Vec<String> = vec!["config".into(), "developer 0 dev CCO".into(), "developer 0 dev CCN".into()];
    b.extend(debate_round(1, "CCO,CCN", ["[1,2]", "[2]"], "[2]", "0.5000"));
    b.extend([
        "refiner 1 refiner".to_string(),
        "developer 1 dev CCC".into(),
        "developer 1 dev NCC".into(),
        "stop 1 false CCN,CCC".into(),
    ]);
    b.extend(debate_round(2, "CCN,CCC", ["[2]", "[2]"], "[2]", "1.0000"));
    b.extend(["stop 2 true CCC".to_string(), "final 2 CCC".into()]);

    let chain = |n: usize| "C".repeat(n);
    let mut c: Vec<String> = vec!["config".into(), "developer 0 dev C".into(), "developer 0 dev CC".into()];
    let mut pool = vec![chain(1), chain(2)];
    for r in 1..=4 {
        c.extend(debate_round(r, &pool.join(","), ["[1]", "[2]"], "[1,2]", "0.0000"));
        c.push(format!("refiner {r} refiner"));
        let fresh = [chain(2 * r + 1), chain(2 * r + 2)];
        for f in &fresh {
            c.push(format!("developer {r} dev {f}"));
        }
        pool = vec![chain(1), chain(2), fresh[0].clone(), fresh[1].clone()];
        c.push(format!("stop {r} {} {}", r == 4, pool.join(",")));
    }
    c.push("final 4 C".into());

    let results = [
        ("immediate", scenario("immediate_consensus.toml", a), 1),
        ("refine-once", scenario("low_consensus.toml", b), 2),
        ("r_max", scenario("persistent_disagreement.toml", c), 4),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, result, rounds) in results {
        match result {
            Ok(n) if n == rounds => notes.push(format!("{name}: {n} round(s)")),
            Ok(n) => {
                ok = false;
                notes.push(format!("{name}: {n} rounds, expected {rounds}"));
            }
            Err(e) => {
                ok = false;
                notes.push(e);
            }
        }
    }
    let detail = notes.join("; ");
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn consensus_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    let mut fallbacks = 0;
    for _ in 0..1000 {
        let k = rng.random_range(1..=5);
        let n = rng.random_range(1..=12);
        let masks: Vec<u16> = (0..k).map(|_| rng.random_range(0..(1u16 << n))).collect();
        let sets: Vec<BTreeSet<usize>> = masks
            .iter()
            .map(|m| (0..n).filter(|b| m >> b & 1 == 1).map(|b| b + 1).collect())
            .collect();
        let mut pairs = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                let u = (masks[i] | masks[j]).count_ones();
                pairs.push(if u == 0 { 1.0 } else { (masks[i] & masks[j]).count_ones() as f64 / u as f64 });
            }
        }
        let oracle = if pairs.is_empty() { 1.0 } else { pairs.iter().sum::<f64>() / pairs.len() as f64 };
        worst = worst.max((consensus(&sets) - oracle).abs());

        let inter = masks.iter().fold(u16::MAX, |a, &m| a & m);
        let expect = if inter != 0 {
            inter
        } else {
            fallbacks += 1;
            masks.iter().fold(0, |a, &m| a | m)
        };
        let expect: BTreeSet<usize> = (0..16).filter(|b| expect >> b & 1 == 1).map(|b| b + 1).collect();
        if judge(&sets) != expect {
            return fail(format!("judge mismatch on {sets:?}"));
        }
    }
    let detail = format!("1000 tuples, max |error| {worst:.1e}, {fallbacks} union fallbacks");
    if worst <= 1e-12 && fallbacks > 0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn dp_levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for i in 1..=a.len() {
        let mut cur = vec![i; b.len() + 1];
        for j in 1..=b.len() {
            cur[j] = (prev[j - 1] + (a[i - 1] != b[j - 1]) as usize).min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

fn metric_oracles() -> Outcome {
    let alphabet: Vec<char> = "CNOSclno()[]=#@+-123".chars().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let mut word = || -> Vec<char> {
            let n = rng.random_range(0..30);
            (0..n).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
        };
        let (a, b) = (word(), word());
        let (sa, sb): (String, String) = (a.iter().collect(), b.iter().collect());
        if levenshtein(&sa, &sb) != dp_levenshtein(&a, &b) {
            return fail(format!("levenshtein({sa:?}, {sb:?})"));
        }
    }
    let corpus: Vec<(String, String)> = ["CCO", "c1ccccc1", "CC(=O)Oc1ccccc1C(=O)O"]
        .iter()
        .map(|s| (s.to_string(), s.to_string()))
        .collect();
    let bleu = corpus_bleu(&corpus);
    let bits = |on: &[usize]| {
        let mut b = FixedBitSet::with_capacity(2048);
        on.iter().for_each(|&i| b.insert(i));
        b
    };
    let t = [
        tanimoto(&bits(&[3, 70, 900]), &bits(&[3, 70, 900])).unwrap(),
        tanimoto(&bits(&[3, 70, 900]), &bits(&[4, 71])).unwrap(),
        tanimoto(&bits(&[3, 70, 900]), &bits(&[70, 900, 2000])).unwrap(),
    ];
    let v = validity_rate(&["CCO", "C1CC", "c1ccccc1", "C(", "[Na+].[Cl-]", "CC(C)(C)(C)C"]);
    let ok = bleu == 1.0 && t == [1.0, 0.0, 0.5] && v == 3.0 / 6.0;
    let detail = format!("levenshtein 1000/1000, BLEU {bleu}, tanimoto {t:?}, validity {v:.4} (hand 0.5000)");
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn validity_parity() -> Outcome {
    let mut total = 0;
    let mut misses = Vec::new();
    for line in VALIDITY.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
        let (smiles, expected) = line.rsplit_once('\t').expect("two columns");
        total += 1;
        let got = parse_smiles(smiles);
        if got.is_ok() != (expected == "1") {
            misses.push((smiles.to_string(), got.err().map(|e| e.to_string())));
        }
    }
    let agreement = 1.0 - misses.len() as f64 / total as f64;
    let unexplained: Vec<&String> = misses
        .iter()
        .filter(|(_, e)| !e.as_deref().is_some_and(|e| e.contains("unsupported feature")))
        .map(|(s, _)| s)
        .collect();
    let listed: Vec<String> = misses
        .iter()
        .map(|(s, e)| format!("{s} ({})", e.as_deref().unwrap_or("accepted")))
        .collect();
    let detail = format!(
        "agreement {:.2}% over {total}; disagreements: {}",
        agreement * 100.0,
        if listed.is_empty() { "none".into() } else { listed.join(", ") }
    );
    if agreement >= 0.99 && unexplained.is_empty() {
        pass(detail)
    } else {
        fail(detail)
    }
}

/// Optional live run: set MOLDEBATE_SMOKE_CONFIG and MOLDEBATE_SMOKE_DATASET.
fn desk_scale() -> Outcome {
    let scope = "headline benchmark scores need hosted frontier models over tens of thousands of queries; \
                 covered here by criteria 1-6";
    let (Ok(config), Ok(dataset)) = (std::env::var("MOLDEBATE_SMOKE_CONFIG"), std::env::var("MOLDEBATE_SMOKE_DATASET"))
    else {
        return (Status::Documented, format!("{scope}; live smoke skipped"));
    };
    let r_max = match RunConfig::load(Path::new(&config)) {
        Ok(c) => c.debate.r_max,
        Err(e) => return fail(format!("smoke config: {e:#}")),
    };
    let dir = tempfile::tempdir().expect("temp dir");
    let out = dir.path().join("smoke.jsonl");
    let run = moldebate(&["--config", &config, "--limit", "10", "--out", out.to_str().unwrap(), "run", &dataset]);
    let Ok(text) = std::fs::read_to_string(&out) else {
        return fail(format!("smoke run wrote no results (exit {})", run.status));
    };
    let lines: Vec<ResultLine> = text.lines().filter_map(|l| serde_json::from_str(l).ok()).collect();
    let done: Vec<&ResultLine> = lines.iter().filter(|l| l.smiles.is_some()).collect();
    let within = lines.iter().all(|l| l.rounds <= r_max);
    let smiles: Vec<&str> = done.iter().filter_map(|l| l.smiles.as_deref()).collect();
    let validity = if smiles.is_empty() { 0.0 } else { validity_rate(&smiles) };
    let trace = std::fs::read_to_string(out.with_extension("trace.jsonl")).unwrap_or_default();
    let replayable = read_trace(&trace).is_ok_and(|recs| {
        recs.iter()
            .zip(&lines)
            .filter(|(_, l)| l.smiles.is_some())
            .all(|((_, rec), l)| replay(rec).is_ok_and(|(c, _)| Some(c.smiles) == l.smiles))
    });
    let detail = format!(
        "{scope}; live smoke: {}/{} completed, rounds<=r_max {within}, validity {validity:.2}, replayable {replayable}",
        done.len(),
        lines.len()
    );
    if !done.is_empty() && within && validity == 1.0 && replayable {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("examiner golden report", examiner_golden),
        ("canonicalization suite", canonicalization),
        ("debate trace equivalence", trace_equivalence),
        ("consensus and judge oracle", consensus_oracle),
        ("metric oracles", metric_oracles),
        ("validity parity", validity_parity),
        ("desk-scale reproduction", desk_scale),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (status, detail) = check();
        let tag = match status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Documented => "DOCUMENTED",
        };
        println!("criterion {} [{tag}] {name}: {detail}", i + 1);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
