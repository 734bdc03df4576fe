//! Evaluation metrics, dataset loading and task-success checkers.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use fixedbitset::FixedBitSet;
use moldebate_chem::{
    compute_profile, parse_smarts, parse_smiles, same_molecule, BondOrder, Catalog, Molecule,
    DESCRIPTOR_KEYS,
};
use moldebate_chem::element::atomic_number;
use moldebate_chem::smarts::has_match;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    FormatError { line: usize, message: String },
    #[error("no checker for task: {0}")]
    UnknownChecker(String),
    #[error("bitsets differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Caption2mol,
    Custom,
    Edit,
    Opt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub instruction: String,
    pub reference_smiles: Option<String>,
    pub prediction_smiles: Option<String>,
    pub task_kind: TaskKind,
    pub task_params: BTreeMap<String, Value>,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    Chebi20Tsv,
    OpenGenJsonl,
}

impl std::str::FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "chebi20-tsv" => Ok(DatasetFormat::Chebi20Tsv),
            "open-gen-jsonl" => Ok(DatasetFormat::OpenGenJsonl),
            _ => Err(format!("unknown dataset format {s:?}")),
        }
    }
}

impl DatasetFormat {
    /// Guess from the file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "tsv" | "txt" => Some(DatasetFormat::Chebi20Tsv),
            "jsonl" | "json" => Some(DatasetFormat::OpenGenJsonl),
            _ => None,
        }
    }
}

pub fn exact_match(pred: &str, reference: &str) -> bool {
    same_molecule(pred, reference)
}

pub fn levenshtein(a: &str, b: &str) -> usize {
    strsim::levenshtein(a, b)
}

fn ngrams(chars: &[char], n: usize) -> HashMap<&[char], usize> {
    let mut counts = HashMap::new();
    if chars.len() >= n {
        for w in chars.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// Corpus BLEU-4 over characters. Zero match counts are smoothed by adding one
/// to numerator and denominator.
pub fn corpus_bleu(pairs: &[(String, String)]) -> f64 {
    let mut matches = [0usize; 4];
    let mut totals = [0usize; 4];
    let (mut c_len, mut r_len) = (0usize, 0usize);
    for (pred, reference) in pairs {
        let p: Vec<char> = pred.chars().collect();
        let r: Vec<char> = reference.chars().collect();
        c_len += p.len();
        r_len += r.len();
        for n in 1..=4 {
            let pc = ngrams(&p, n);
            let rc = ngrams(&r, n);
            matches[n - 1] += pc
                .iter()
                .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
                .sum::<usize>();
            totals[n - 1] += p.len().saturating_sub(n - 1);
        }
    }
    if c_len == 0 {
        return 0.0;
    }
    let log_p: f64 = (0..4)
        .map(|i| {
            let (m, t) = if matches[i] == 0 {
                (1.0, totals[i] as f64 + 1.0)
            } else {
                (matches[i] as f64, totals[i] as f64)
            };
            (m / t).ln()
        })
        .sum::<f64>()
        / 4.0;
    let bp = if c_len > r_len {
        1.0
    } else {
        (1.0 - r_len as f64 / c_len as f64).exp()
    };
    bp * log_p.exp()
}

/// splitmix64 finaliser, used as the fingerprint hash mix.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn combine(seed: u64, value: u64) -> u64 {
    mix(seed ^ value.wrapping_add(0x9e37_79b9_7f4a_7c15))
}

fn bond_code(order: BondOrder) -> u64 {
    match order {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

/// Circular fingerprint. Each heavy atom starts from a hash of
/// (element, heavy degree, total H, charge, isotope, ring membership); each
/// iteration rehashes the previous id with the sorted (bond code, neighbour id)
/// list. Every id at every radius sets bit `id % nbits`.
pub fn morgan_fingerprint(mol: &Molecule, radius: usize, nbits: usize) -> FixedBitSet {
    let mut bits = FixedBitSet::with_capacity(nbits);
    let heavy: Vec<usize> = (0..mol.atom_count())
        .filter(|&i| mol.atom(i).element != 1 || mol.degree(i) == 0)
        .collect();
    let mut ids: HashMap<usize, u64> = heavy
        .iter()
        .map(|&i| {
            let a = mol.atom(i);
            let heavy_degree = mol
                .neighbors(i)
                .iter()
                .filter(|&&(n, _)| mol.atom(n).element != 1)
                .count();
            let explicit_h = mol.degree(i) - heavy_degree;
            let fields = [
                a.element as u64,
                heavy_degree as u64,
                (a.total_h() as usize + explicit_h) as u64,
                a.formal_charge as i64 as u64,
                a.isotope.unwrap_or(0) as u64,
                mol.is_ring_atom(i) as u64,
            ];
            (i, fields.iter().fold(0u64, |h, &f| combine(h, f)))
        })
        .collect();
    let set = |bits: &mut FixedBitSet, id: u64| {
        if nbits > 0 {
            bits.insert((id % nbits as u64) as usize);
        }
    };
    for &id in ids.values() {
        set(&mut bits, id);
    }
    for round in 1..=radius {
        let mut next = HashMap::with_capacity(ids.len());
        for &i in &heavy {
            let mut env: Vec<(u64, u64)> = mol
                .neighbors(i)
                .iter()
                .filter_map(|&(n, b)| ids.get(&n).map(|&id| (bond_code(mol.bond(b).order), id)))
                .collect();
            env.sort_unstable();
            let id = env.iter().fold(combine(round as u64, ids[&i]), |h, &(b, n)| {
                combine(combine(h, b), n)
            });
            next.insert(i, id);
        }
        ids = next;
        for &id in ids.values() {
            set(&mut bits, id);
        }
    }
    bits
}

pub fn tanimoto(a: &FixedBitSet, b: &FixedBitSet) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    let union = a.union_count(b);
    if union == 0 {
        return Ok(1.0);
    }
    Ok(a.intersection_count(b) as f64 / union as f64)
}

pub fn validity_rate<S: AsRef<str>>(preds: &[S]) -> f64 {
    if preds.is_empty() {
        return 0.0;
    }
    let ok = preds.iter().filter(|p| parse_smiles(p.as_ref()).is_ok()).count();
    ok as f64 / preds.len() as f64
}

fn functional_groups() -> &'static Catalog {
    static CATALOG: OnceLock<Catalog> = OnceLock::new();
    CATALOG.get_or_init(|| {
        Catalog::parse(include_str!("../data/functional_groups.tsv")).expect("bundled catalog parses")
    })
}

fn param<'a>(record: &'a EvalRecord, key: &str) -> Result<&'a Value, EvalError> {
    record
        .task_params
        .get(key)
        .ok_or_else(|| EvalError::UnknownChecker(format!("{}: missing parameter {key:?}", record.id)))
}

fn param_str<'a>(record: &'a EvalRecord, key: &str) -> Result<&'a str, EvalError> {
    param(record, key)?
        .as_str()
        .ok_or_else(|| EvalError::UnknownChecker(format!("{}: {key:?} must be a string", record.id)))
}

fn param_f64(record: &EvalRecord, key: &str) -> Option<f64> {
    record.task_params.get(key).and_then(Value::as_f64)
}

fn descriptor_key<'a>(record: &'a EvalRecord) -> Result<&'a str, EvalError> {
    let key = param_str(record, "descriptor")?;
    if DESCRIPTOR_KEYS.contains(&key) {
        Ok(key)
    } else {
        Err(EvalError::UnknownChecker(format!("{}: unknown descriptor {key:?}", record.id)))
    }
}

/// Decide whether `prediction` satisfies the record's task. The checker is
/// named by `task_params.checker`; caption records default to exact match.
pub fn check_task(record: &EvalRecord, prediction: &str) -> Result<(bool, f64), EvalError> {
    let checker = match record.task_params.get("checker").and_then(Value::as_str) {
        Some(c) => c,
        None if record.task_kind == TaskKind::Caption2mol => "exact_match",
        None => return Err(EvalError::UnknownChecker(format!("{}: no checker named", record.id))),
    };
    let weight = record.weight;
    let mol = parse_smiles(prediction).ok();
    let success = match checker {
        "exact_match" => {
            let reference = record.reference_smiles.as_deref().ok_or_else(|| {
                EvalError::UnknownChecker(format!("{}: exact_match needs a reference", record.id))
            })?;
            mol.is_some() && exact_match(prediction, reference)
        }
        "descriptor_direction" => {
            let key = descriptor_key(record)?;
            let increase = match param_str(record, "direction")? {
                "increase" => true,
                "decrease" => false,
                d => return Err(EvalError::UnknownChecker(format!("{}: direction {d:?}", record.id))),
            };
            let source = param_str(record, "source")?;
            let source = parse_smiles(source).map_err(|e| {
                EvalError::UnknownChecker(format!("{}: source does not parse: {e}", record.id))
            })?;
            let before = compute_profile(&source).get(key).unwrap_or(f64::NAN);
            mol.is_some_and(|m| {
                let after = compute_profile(&m).get(key).unwrap_or(f64::NAN);
                if increase {
                    after > before
                } else {
                    after < before
                }
            })
        }
        "descriptor_range" => {
            let key = descriptor_key(record)?;
            let lo = param_f64(record, "min").unwrap_or(f64::NEG_INFINITY);
            let hi = param_f64(record, "max").unwrap_or(f64::INFINITY);
            mol.is_some_and(|m| {
                let v = compute_profile(&m).get(key).unwrap_or(f64::NAN);
                v >= lo && v <= hi
            })
        }
        "substructure" => {
            let pattern = match (record.task_params.get("smarts"), record.task_params.get("pattern")) {
                (Some(Value::String(s)), _) => parse_smarts(s).map_err(|e| {
                    EvalError::UnknownChecker(format!("{}: bad smarts: {e}", record.id))
                })?,
                (_, Some(Value::String(name))) => functional_groups()
                    .entries
                    .iter()
                    .find(|(n, _)| n == name)
                    .map(|(_, p)| p.clone())
                    .ok_or_else(|| {
                        EvalError::UnknownChecker(format!("{}: unknown pattern {name:?}", record.id))
                    })?,
                _ => {
                    return Err(EvalError::UnknownChecker(format!(
                        "{}: substructure needs smarts or pattern",
                        record.id
                    )))
                }
            };
            let present = record
                .task_params
                .get("present")
                .and_then(Value::as_bool)
                .unwrap_or(true);
            mol.is_some_and(|m| has_match(&m, &pattern) == present)
        }
        "atom_count" => {
            let element = match record.task_params.get("element").and_then(Value::as_str) {
                Some(sym) => Some(atomic_number(sym).ok_or_else(|| {
                    EvalError::UnknownChecker(format!("{}: unknown element {sym:?}", record.id))
                })?),
                None => None,
            };
            let lo = param_f64(record, "min").unwrap_or(0.0);
            let hi = param_f64(record, "max").unwrap_or(f64::INFINITY);
            mol.is_some_and(|m| {
                let n = match element {
                    Some(1) => m.atoms().iter().map(|a| a.total_h() as usize).sum::<usize>()
                        + m.atoms().iter().filter(|a| a.element == 1).count(),
                    Some(z) => m.atoms().iter().filter(|a| a.element == z).count(),
                    None => m.heavy_atom_count(),
                } as f64;
                n >= lo && n <= hi
            })
        }
        other => return Err(EvalError::UnknownChecker(format!("{}: {other:?}", record.id))),
    };
    Ok((success, weight))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub em: Option<f64>,
    pub bleu: Option<f64>,
    pub levenshtein_mean: Option<f64>,
    pub morgan_tanimoto_mean: Option<f64>,
    pub validity: Option<f64>,
    pub sr: Option<f64>,
    pub wsr: Option<f64>,
}

impl MetricReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-order two-column table; absent metrics print as `-`.
    pub fn to_table(&self) -> String {
        let rows = [
            ("EM", self.em),
            ("BLEU", self.bleu),
            ("Levenshtein", self.levenshtein_mean),
            ("MO.F", self.morgan_tanimoto_mean),
            ("Validity", self.validity),
            ("SR", self.sr),
            ("WSR", self.wsr),
        ];
        let mut out = String::new();
        for (name, v) in rows {
            match v {
                Some(v) => writeln!(out, "{name:<12} {v:.4}"),
                None => writeln!(out, "{name:<12} -"),
            }
            .expect("write to string");
        }
        out
    }
}

struct Row {
    caption: bool,
    pred: String,
    reference: String,
    valid: bool,
    em: bool,
    lev: usize,
    tanimoto: Option<f64>,
    task: Option<(bool, f64)>,
}

fn score_record(record: &EvalRecord) -> Result<Row, EvalError> {
    let pred = record.prediction_smiles.clone().unwrap_or_default();
    let mol = parse_smiles(&pred).ok();
    if record.task_kind == TaskKind::Caption2mol {
        let reference = record.reference_smiles.clone().ok_or_else(|| {
            EvalError::UnknownChecker(format!("{}: caption record without reference", record.id))
        })?;
        let tanimoto = match (&mol, parse_smiles(&reference)) {
            (Some(p), Ok(r)) => Some(tanimoto(
                &morgan_fingerprint(p, 2, 2048),
                &morgan_fingerprint(&r, 2, 2048),
            )?),
            _ => None,
        };
        Ok(Row {
            caption: true,
            em: mol.is_some() && exact_match(&pred, &reference),
            lev: levenshtein(&pred, &reference),
            valid: mol.is_some(),
            tanimoto,
            pred,
            reference,
            task: None,
        })
    } else {
        Ok(Row {
            caption: false,
            valid: mol.is_some(),
            task: Some(check_task(record, &pred)?),
            em: false,
            lev: 0,
            tanimoto: None,
            reference: String::new(),
            pred,
        })
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Score records (with predictions filled in) across `workers` threads.
/// Caption records feed EM/BLEU/Levenshtein/MO.F; the rest feed SR/WSR.
/// Validity covers every record.
pub fn evaluate(records: &[EvalRecord], workers: usize) -> Result<MetricReport, EvalError> {
    let workers = workers.max(1);
    let chunk = records.len().div_ceil(workers).max(1);
    let rows: Vec<Row> = std::thread::scope(|s| {
        let handles: Vec<_> = records
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(score_record).collect::<Result<Vec<_>, _>>()))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evaluation thread panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let caption: Vec<&Row> = rows.iter().filter(|r| r.caption).collect();
    let tasks: Vec<(bool, f64)> = rows.iter().filter_map(|r| r.task).collect();
    let mut report = MetricReport {
        validity: mean(rows.iter().map(|r| r.valid as u8 as f64)),
        ..Default::default()
    };
    if !caption.is_empty() {
        report.em = mean(caption.iter().map(|r| r.em as u8 as f64));
        let pairs: Vec<(String, String)> = caption
            .iter()
            .map(|r| (r.pred.clone(), r.reference.clone()))
            .collect();
        report.bleu = Some(corpus_bleu(&pairs));
        report.levenshtein_mean = mean(caption.iter().map(|r| r.lev as f64));
        report.morgan_tanimoto_mean = mean(caption.iter().filter_map(|r| r.tanimoto));
    }
    if !tasks.is_empty() {
        report.sr = mean(tasks.iter().map(|&(ok, _)| ok as u8 as f64));
        let total: f64 = tasks.iter().map(|&(_, w)| w).sum();
        report.wsr = (total > 0.0)
            .then(|| tasks.iter().filter(|t| t.0).map(|&(_, w)| w).sum::<f64>() / total);
    }
    Ok(report)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpenGenLine {
    id: Value,
    instruction: String,
    task_kind: TaskKind,
    #[serde(default)]
    task_params: BTreeMap<String, Value>,
    weight: Option<f64>,
    reference: Option<String>,
}

fn id_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn parse_dataset(text: &str, format: DatasetFormat) -> Result<Vec<EvalRecord>, EvalError> {
    let err = |line: usize, message: String| EvalError::FormatError { line, message };
    let mut records = Vec::new();
    match format {
        DatasetFormat::Chebi20Tsv => {
            let mut lines = text.lines().enumerate();
            let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
            let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
            let col = |name: &str| {
                cols.iter()
                    .position(|c| *c == name)
                    .ok_or_else(|| err(1, format!("missing column {name}")))
            };
            let (ci, si, di) = (col("CID")?, col("SMILES")?, col("description")?);
            for (i, line) in lines {
                if line.trim().is_empty() {
                    continue;
                }
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != cols.len() {
                    return Err(err(
                        i + 1,
                        format!("expected {} columns, found {}", cols.len(), fields.len()),
                    ));
                }
                records.push(EvalRecord {
                    id: fields[ci].trim().to_string(),
                    instruction: fields[di].trim().to_string(),
                    reference_smiles: Some(fields[si].trim().to_string()),
                    prediction_smiles: None,
                    task_kind: TaskKind::Caption2mol,
                    task_params: BTreeMap::new(),
                    weight: 1.0,
                });
            }
        }
        DatasetFormat::OpenGenJsonl => {
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let row: OpenGenLine =
                    serde_json::from_str(line).map_err(|e| err(i + 1, e.to_string()))?;
                if row.task_kind == TaskKind::Caption2mol && row.reference.is_none() {
                    return Err(err(i + 1, "caption2mol record without reference".into()));
                }
                let weight = row.weight.unwrap_or(1.0);
                if !(weight.is_finite() && weight >= 0.0) {
                    return Err(err(i + 1, format!("weight {weight} must be non-negative")));
                }
                records.push(EvalRecord {
                    id: id_text(&row.id),
                    instruction: row.instruction,
                    reference_smiles: row.reference,
                    prediction_smiles: None,
                    task_kind: row.task_kind,
                    task_params: row.task_params,
                    weight,
                });
            }
        }
    }
    Ok(records)
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<Vec<EvalRecord>, EvalError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    parse_dataset(&text, format)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde_json::json;

    fn fp(s: &str, r: usize) -> FixedBitSet {
        morgan_fingerprint(&parse_smiles(s).unwrap(), r, 2048)
    }

    fn bits(n: usize, on: &[usize]) -> FixedBitSet {
        let mut b = FixedBitSet::with_capacity(n);
        for &i in on {
            b.insert(i);
        }
        b
    }

    fn task(kind: TaskKind, params: Value, weight: f64) -> EvalRecord {
        EvalRecord {
            id: "t".into(),
            instruction: String::new(),
            reference_smiles: None,
            prediction_smiles: None,
            task_kind: kind,
            task_params: serde_json::from_value(params).unwrap(),
            weight,
        }
    }

    #[test]
    fn exact_match_cases() {
        assert!(exact_match("OCC", "CCO"));
        assert!(!exact_match("CCO", "CCN"));
        assert!(!exact_match("C1CC", "C1CC"));
    }

    #[test]
    fn levenshtein_cases() {
        assert_eq!(levenshtein("CCO", "CCO"), 0);
        assert_eq!(levenshtein("CCO", ""), 3);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }

    #[test]
    fn bleu_cases() {
        let same = vec![("CCO".to_string(), "CCO".to_string()), ("c1ccccc1".into(), "c1ccccc1".into())];
        assert!((corpus_bleu(&same) - 1.0).abs() < 1e-12);
        assert_eq!(corpus_bleu(&[(String::new(), "CCO".into())]), 0.0);
        let a = corpus_bleu(&[("CC".into(), "CC".into())]);
        let b = corpus_bleu(&[("CC".into(), "CO".into())]);
        assert!(a > b);
    }

    #[test]
    fn fingerprint_cases() {
        assert_eq!(fp("C", 0).count_ones(..), 1);
        assert_eq!(fp("CCO", 2), fp("OCC", 2));
        assert_ne!(fp("CCO", 2), fp("CCN", 2));
        assert_eq!(fp("c1ccccc1O", 2), fp("Oc1ccccc1", 2));
    }

    #[test]
    fn tanimoto_cases() {
        let a = bits(16, &[1, 2, 3]);
        assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        assert_eq!(tanimoto(&a, &bits(16, &[4, 5])).unwrap(), 0.0);
        assert_eq!(tanimoto(&a, &bits(16, &[2, 3, 4])).unwrap(), 0.5);
        assert_eq!(tanimoto(&bits(16, &[]), &bits(16, &[])).unwrap(), 1.0);
        assert_eq!(tanimoto(&a, &bits(8, &[])), Err(EvalError::LengthMismatch(16, 8)));
    }

    #[test]
    fn validity_cases() {
        assert_eq!(validity_rate(&["CCO", "c1ccccc1"]), 1.0);
        assert_eq!(validity_rate(&["CCO", "C1CC"]), 0.5);
        assert_eq!(validity_rate(&["C1CC", "(("]), 0.0);
    }

    #[test]
    fn checkers() {
        let up = task(
            TaskKind::Opt,
            json!({"checker": "descriptor_direction", "descriptor": "logp", "direction": "increase", "source": "CCO"}),
            1.0,
        );
        assert_eq!(check_task(&up, "CCCCO").unwrap(), (true, 1.0));
        assert_eq!(check_task(&up, "OCCO").unwrap(), (false, 1.0));
        assert_eq!(check_task(&up, "C1CC").unwrap().0, false);

        let range = task(TaskKind::Custom, json!({"checker": "descriptor_range", "descriptor": "mw", "min": 40, "max": 50}), 1.0);
        assert!(check_task(&range, "CCO").unwrap().0);
        assert!(!check_task(&range, "CCCCCC").unwrap().0);

        let group = task(TaskKind::Edit, json!({"checker": "substructure", "pattern": "hydroxyl"}), 1.0);
        assert!(check_task(&group, "CCO").unwrap().0);
        assert!(!check_task(&group, "CCN").unwrap().0);
        let absent = task(TaskKind::Edit, json!({"checker": "substructure", "smarts": "[N]", "present": false}), 1.0);
        assert!(check_task(&absent, "CCO").unwrap().0);
        assert!(!check_task(&absent, "C1CC").unwrap().0);

        let count = task(TaskKind::Custom, json!({"checker": "atom_count", "element": "C", "min": 6, "max": 6}), 1.0);
        assert!(check_task(&count, "c1ccccc1").unwrap().0);
        assert!(!check_task(&count, "CCO").unwrap().0);

        let unknown = task(TaskKind::Custom, json!({"checker": "vibes"}), 1.0);
        assert!(matches!(check_task(&unknown, "CCO"), Err(EvalError::UnknownChecker(_))));
        let missing = task(TaskKind::Custom, json!({}), 1.0);
        assert!(matches!(check_task(&missing, "CCO"), Err(EvalError::UnknownChecker(_))));
    }

    #[test]
    fn sr_and_wsr() {
        let rec = |pred: &str, w: f64| {
            let mut r = task(TaskKind::Edit, json!({"checker": "substructure", "pattern": "hydroxyl"}), w);
            r.prediction_smiles = Some(pred.into());
            r
        };
        let ones = vec![rec("CCO", 1.0), rec("CCN", 1.0), rec("OCCO", 1.0), rec("C1CC", 1.0)];
        let report = evaluate(&ones, 3).unwrap();
        assert_eq!(report.sr, Some(0.5));
        assert_eq!(report.wsr, report.sr);
        assert_eq!(report.validity, Some(0.75));
        let weighted = vec![rec("CCO", 3.0), rec("CCN", 1.0)];
        assert_eq!(evaluate(&weighted, 1).unwrap().wsr, Some(0.75));
    }

    #[test]
    fn caption_metrics() {
        let recs: Vec<EvalRecord> = ["CCO", "c1ccccc1", "CC(=O)O"]
            .iter()
            .map(|s| EvalRecord {
                id: s.to_string(),
                instruction: String::new(),
                reference_smiles: Some(s.to_string()),
                prediction_smiles: Some(s.to_string()),
                task_kind: TaskKind::Caption2mol,
                task_params: BTreeMap::new(),
                weight: 1.0,
            })
            .collect();
        let r = evaluate(&recs, 2).unwrap();
        assert_eq!(r.em, Some(1.0));
        assert_eq!(r.validity, Some(1.0));
        assert_eq!(r.levenshtein_mean, Some(0.0));
        assert_eq!(r.morgan_tanimoto_mean, Some(1.0));
        assert!((r.bleu.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.sr, None);
        let table = r.to_table();
        let names: Vec<&str> = table.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
        assert_eq!(names, ["EM", "BLEU", "Levenshtein", "MO.F", "Validity", "SR", "WSR"]);
    }

    #[test]
    fn datasets() {
        let tsv = "CID\tSMILES\tdescription\n1\tCCO\tethanol\n2\tCCN\tethylamine\n3\tC\tmethane\n";
        let recs = parse_dataset(tsv, DatasetFormat::Chebi20Tsv).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[1].reference_smiles.as_deref(), Some("CCN"));
        assert!(matches!(
            parse_dataset("CID\tSMILES\n1\tC\n", DatasetFormat::Chebi20Tsv),
            Err(EvalError::FormatError { line: 1, .. })
        ));
        assert!(matches!(
            parse_dataset("CID\tSMILES\tdescription\n1\tC\n", DatasetFormat::Chebi20Tsv),
            Err(EvalError::FormatError { line: 2, .. })
        ));
        let jsonl = r#"{"id": 7, "instruction": "raise logp", "task_kind": "opt", "task_params": {"checker": "atom_count"}, "weight": 0.7}"#;
        let recs = parse_dataset(jsonl, DatasetFormat::OpenGenJsonl).unwrap();
        assert_eq!(recs[0].weight, 0.7);
        assert_eq!(recs[0].id, "7");
        let bad = format!("{jsonl}\n{{\"id\": 1}}");
        assert!(matches!(
            parse_dataset(&bad, DatasetFormat::OpenGenJsonl),
            Err(EvalError::FormatError { line: 2, .. })
        ));
    }

    fn dp_levenshtein(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=b.len() {
            d[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = d[i - 1][j - 1] + (a[i - 1] != b[j - 1]) as usize;
                d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
            }
        }
        d[a.len()][b.len()]
    }

    proptest! {
        #[test]
        fn levenshtein_is_a_metric(a in "[CNO()=#1-3]{0,12}", b in "[CNO()=#1-3]{0,12}", c in "[CNO()=#1-3]{0,12}") {
            prop_assert_eq!(levenshtein(&a, &b), dp_levenshtein(&a, &b));
            prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
            prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
            prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
        }

        #[test]
        fn tanimoto_is_symmetric(xs in proptest::collection::vec(0usize..64, 1..20), ys in proptest::collection::vec(0usize..64, 0..20)) {
            let (a, b) = (bits(64, &xs), bits(64, &ys));
            prop_assert_eq!(tanimoto(&a, &b).unwrap(), tanimoto(&b, &a).unwrap());
            prop_assert_eq!(tanimoto(&a, &a).unwrap(), 1.0);
        }
    }
}
