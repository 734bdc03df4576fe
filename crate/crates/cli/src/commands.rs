//! Command implementations. Machine output goes to the supplied writer,
//! diagnostics go through `tracing` to stderr.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use moldebate_chem::{canonical_smiles, parse_smiles};
use moldebate_core::eval::{evaluate, load_dataset, DatasetFormat, EvalRecord};
use moldebate_core::examiner::{examine, Mask};
use moldebate_core::gateway::{Client, TraceLog};
use moldebate_core::orchestrator::{run_pipeline, Event, EventKind, RunRecord};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultLine {
    pub id: String,
    pub smiles: Option<String>,
    pub rounds: usize,
    pub consensus_history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Serialize)]
struct TraceLine<'a> {
    id: &'a str,
    #[serde(flatten)]
    event: &'a Event,
}

pub struct RunOptions {
    pub config: PathBuf,
    pub dataset: PathBuf,
    pub format: Option<DatasetFormat>,
    pub limit: Option<usize>,
    pub workers: usize,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

fn dataset_format(path: &Path, format: Option<DatasetFormat>) -> Result<DatasetFormat> {
    format
        .or_else(|| DatasetFormat::from_path(path))
        .with_context(|| format!("cannot tell the format of {}; pass --format", path.display()))
}

/// Run the pipeline over every record with a bounded worker pool. Returns
/// whether every record finished.
pub fn cmd_run(opts: &RunOptions, stdout: &mut dyn Write) -> Result<bool> {
    let mut cfg = RunConfig::load(&opts.config)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let format = dataset_format(&opts.dataset, opts.format)?;
    let mut records = load_dataset(&opts.dataset, format)
        .with_context(|| format!("loading {}", opts.dataset.display()))?;
    if let Some(limit) = opts.limit {
        records.truncate(limit);
    }
    let workers = opts.workers.max(1);
    let calls = TraceLog::default();
    let client = Client::new(calls.clone()).with_max_in_flight(workers * 4);
    let debate = cfg.debate_config();
    tracing::info!(records = records.len(), workers, "starting run");

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<(ResultLine, RunRecord)>>> =
        records.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers.min(records.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(record) = records.get(i) else { break };
                let agents = cfg.agents(&client);
                let outcome = match run_pipeline(&record.instruction, &agents, &debate) {
                    Ok((chosen, trace)) => (
                        ResultLine {
                            id: record.id.clone(),
                            smiles: Some(chosen.smiles),
                            rounds: trace.rounds(),
                            consensus_history: trace.consensus_history(),
                            error: None,
                        },
                        trace,
                    ),
                    Err(failure) => {
                        tracing::warn!(id = %record.id, error = %failure.error, "record aborted");
                        (
                            ResultLine {
                                id: record.id.clone(),
                                smiles: None,
                                rounds: failure.record.rounds(),
                                consensus_history: failure.record.consensus_history(),
                                error: Some(format!("{:?}", failure.error)),
                            },
                            failure.record,
                        )
                    }
                };
                *slots[i].lock().expect("slot poisoned") = Some(outcome);
            });
        }
    });

    let outcomes: Vec<(ResultLine, RunRecord)> = slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot poisoned").expect("every record ran"))
        .collect();

    let mut results = String::new();
    let mut trace = String::new();
    for (line, record) in &outcomes {
        results.push_str(&serde_json::to_string(line)?);
        results.push('\n');
        for event in &record.events {
            trace.push_str(&serde_json::to_string(&TraceLine { id: &line.id, event })?);
            trace.push('\n');
        }
    }
    let trace_path = match (&opts.trace, &opts.out) {
        (Some(t), _) => t.clone(),
        (None, Some(out)) => out.with_extension("trace.jsonl"),
        (None, None) => PathBuf::from("moldebate.trace.jsonl"),
    };
    match &opts.out {
        Some(out) => std::fs::write(out, &results).with_context(|| format!("writing {}", out.display()))?,
        None => stdout.write_all(results.as_bytes())?,
    }
    std::fs::write(&trace_path, &trace).with_context(|| format!("writing {}", trace_path.display()))?;
    if !calls.is_empty() {
        let path = trace_path.with_extension("calls.jsonl");
        let text: String = calls
            .records()
            .iter()
            .map(|r| serde_json::to_string(r).expect("call record serializes") + "\n")
            .collect();
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    let aborted = outcomes.iter().filter(|(l, _)| l.error.is_some()).count();
    tracing::info!(aborted, trace = %trace_path.display(), "run finished");
    Ok(aborted == 0)
}

/// Split a run trace file back into per-record run records.
pub fn read_trace(text: &str) -> Result<Vec<(String, RunRecord)>> {
    let mut out: Vec<(String, RunRecord)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut v: Value = serde_json::from_str(line).with_context(|| format!("trace line {}", n + 1))?;
        let id = v
            .as_object_mut()
            .and_then(|o| o.remove("id"))
            .and_then(|id| id.as_str().map(str::to_string))
            .with_context(|| format!("trace line {} has no id", n + 1))?;
        let event: Event = serde_json::from_value(v).with_context(|| format!("trace line {}", n + 1))?;
        match out.last_mut() {
            Some((last, rec)) if *last == id && event.kind != EventKind::Config => rec.events.push(event),
            _ => out.push((id, RunRecord { events: vec![event] })),
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct Prediction {
    id: Value,
    smiles: Option<String>,
}

fn id_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn load_predictions(path: &Path) -> Result<HashMap<String, Option<String>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut preds = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let p: Prediction = serde_json::from_str(line)
            .with_context(|| format!("{} line {}", path.display(), n + 1))?;
        preds.insert(id_text(&p.id), p.smiles);
    }
    if preds.is_empty() {
        bail!("prediction file {} is empty", path.display());
    }
    Ok(preds)
}

pub struct EvalOptions {
    pub predictions: PathBuf,
    pub dataset: PathBuf,
    pub format: Option<DatasetFormat>,
    pub limit: Option<usize>,
    pub workers: usize,
    pub table: bool,
    pub out: Option<PathBuf>,
}

pub fn cmd_eval(opts: &EvalOptions, stdout: &mut dyn Write) -> Result<()> {
    let preds = load_predictions(&opts.predictions)?;
    let format = dataset_format(&opts.dataset, opts.format)?;
    let mut records: Vec<EvalRecord> = load_dataset(&opts.dataset, format)
        .with_context(|| format!("loading {}", opts.dataset.display()))?;
    if let Some(limit) = opts.limit {
        records.truncate(limit);
    }
    let mut missing = 0;
    for r in &mut records {
        match preds.get(&r.id) {
            Some(p) => r.prediction_smiles = p.clone(),
            None => missing += 1,
        }
    }
    if missing > 0 {
        tracing::warn!(missing, "records without a prediction count as invalid");
    }
    let report = evaluate(&records, opts.workers)?;
    if let Some(out) = &opts.out {
        std::fs::write(out, report.to_json()).with_context(|| format!("writing {}", out.display()))?;
    }
    let text = if opts.table {
        report.to_table()
    } else {
        report.to_json() + "\n"
    };
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

pub fn cmd_examine(smiles: &str, mask: &Mask, json: bool, stdout: &mut dyn Write) -> Result<()> {
    let report = examine(1, smiles, mask);
    if let Some(err) = &report.parse_error {
        bail!("{err}");
    }
    if json {
        writeln!(stdout, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        writeln!(stdout, "{}", report.rendered_text)?;
    }
    Ok(())
}

pub fn cmd_canon(smiles: &str, stdout: &mut dyn Write) -> Result<()> {
    let mol = parse_smiles(smiles).map_err(|e| anyhow::anyhow!("{e}"))?;
    writeln!(stdout, "{}", canonical_smiles(&mol))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct MockOutcome {
    smiles: String,
    rounds: usize,
    consensus_history: Vec<f64>,
}

/// Run one instruction against scripted agents.
pub fn cmd_mock_run(script: &Path, seed: Option<u64>, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg = RunConfig::load(script)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if cfg.uses_endpoints() {
        bail!("mock-run only accepts scripted agents");
    }
    let instruction = cfg
        .instruction
        .clone()
        .context("mock-run scripts need an `instruction`")?;
    let agents = cfg.agents(&Client::new(TraceLog::default()));
    let result = run_pipeline(&instruction, &agents, &cfg.debate_config());
    let record = match &result {
        Ok((_, r)) => r,
        Err(f) => &f.record,
    };
    if let Some(out) = out {
        std::fs::write(out, record.to_jsonl()).with_context(|| format!("writing {}", out.display()))?;
    }
    match result {
        Ok((chosen, record)) => {
            let outcome = MockOutcome {
                smiles: chosen.smiles,
                rounds: record.rounds(),
                consensus_history: record.consensus_history(),
            };
            writeln!(stdout, "{}", serde_json::to_string(&outcome)?)?;
            Ok(())
        }
        Err(f) => bail!("pipeline aborted: {:?}: {}", f.error, f.error),
    }
}
