//! The generate, examine, debate, judge and refine loop.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::agents::{
    extract_smiles, parse_answer, parse_index_selection, render_debater_prompt,
    render_developer_prompt, render_refiner_prompt, Agent, AgentError, Candidate, Selection,
};
use crate::examiner::{examine_pool, ExamReport, Mask};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum OrchestratorError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("script for {0} is exhausted")]
    ScriptExhausted(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// A failed run together with everything recorded up to the failure.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{error}")]
pub struct PipelineFailure {
    pub error: OrchestratorError,
    pub record: RunRecord,
}

/// Ordered candidates, unique by canonical form (raw text for invalid ones).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    candidates: Vec<Candidate>,
}

impl Pool {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(c: &Candidate) -> &str {
        if c.is_valid() {
            &c.canonical
        } else {
            &c.smiles
        }
    }

    /// Appends unless an equivalent candidate is already present.
    pub fn push(&mut self, c: Candidate) -> bool {
        let key = Self::key(&c);
        if self.candidates.iter().any(|x| Self::key(x) == key) {
            return false;
        }
        self.candidates.push(c);
        true
    }

    /// Keeps existing indices and appends new candidates.
    pub fn union(&mut self, other: Pool) {
        for c in other.candidates {
            self.push(c);
        }
    }

    /// Candidates at the given 1-based indices, in pool order.
    pub fn subset(&self, indices: &BTreeSet<usize>) -> Pool {
        Pool {
            candidates: indices
                .iter()
                .filter_map(|&i| self.candidates.get(i.wrapping_sub(1)).cloned())
                .collect(),
        }
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn smiles(&self) -> Vec<String> {
        self.candidates.iter().map(|c| c.smiles.clone()).collect()
    }
}

impl FromIterator<Candidate> for Pool {
    fn from_iter<I: IntoIterator<Item = Candidate>>(iter: I) -> Self {
        let mut pool = Pool::new();
        for c in iter {
            pool.push(c);
        }
        pool
    }
}

#[derive(Clone)]
pub struct DeveloperSlot {
    pub agent: Arc<dyn Agent>,
    pub samples: usize,
}

#[derive(Clone)]
pub struct AgentSet {
    pub developers: Vec<DeveloperSlot>,
    pub debaters: Vec<Arc<dyn Agent>>,
    pub refiner: Arc<dyn Agent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebateConfig {
    pub theta: f64,
    pub r_max: usize,
    pub seed: u64,
    pub mask: Mask,
}

impl Default for DebateConfig {
    fn default() -> Self {
        DebateConfig {
            theta: 0.6,
            r_max: 4,
            seed: 42,
            mask: Mask::new(),
        }
    }
}

impl DebateConfig {
    pub fn validate(&self, agents: &AgentSet) -> Result<(), OrchestratorError> {
        let bad = |m: &str| Err(OrchestratorError::InvalidConfig(m.to_string()));
        if !(0.0..=1.0).contains(&self.theta) {
            return bad("theta must be in [0, 1]");
        }
        if self.r_max < 1 {
            return bad("r_max must be >= 1");
        }
        if agents.debaters.is_empty() {
            return bad("at least one debater is required");
        }
        if agents.developers.is_empty() || agents.developers.iter().any(|d| d.samples == 0) {
            return bad("every developer needs samples >= 1");
        }
        let mut ids = BTreeSet::new();
        let all = agents
            .developers
            .iter()
            .map(|d| &d.agent)
            .chain(&agents.debaters)
            .chain(std::iter::once(&agents.refiner));
        for a in all {
            if !ids.insert(a.identity().to_string()) {
                return bad(&format!("duplicate agent identity {}", a.identity()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Config,
    Developer,
    Pool,
    Report,
    Debater,
    Judge,
    Consensus,
    Refiner,
    Stop,
    Final,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub round: usize,
    pub agent: Option<String>,
    pub payload: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub events: Vec<Event>,
}

impl RunRecord {
    fn push(&mut self, kind: EventKind, round: usize, agent: Option<&str>, payload: Value) {
        self.events.push(Event {
            kind,
            round,
            agent: agent.map(str::to_string),
            payload,
        });
    }

    pub fn to_jsonl(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("event serializes") + "\n")
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(RunRecord { events })
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }

    /// Number of debate rounds that ran.
    pub fn rounds(&self) -> usize {
        self.of_kind(EventKind::Stop).count()
    }

    pub fn consensus_history(&self) -> Vec<f64> {
        self.of_kind(EventKind::Consensus)
            .filter_map(|e| e.payload["value"].as_f64())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebateState {
    /// Completed debate rounds.
    pub round: usize,
    pub instruction: String,
    pub pool: Pool,
    pub selections: Vec<Selection>,
    pub judged: BTreeSet<usize>,
    pub consensus: f64,
    pub stop: bool,
}

impl DebateState {
    pub fn new(instruction: &str, pool: Pool) -> Self {
        DebateState {
            round: 0,
            instruction: instruction.to_string(),
            pool,
            selections: Vec::new(),
            judged: BTreeSet::new(),
            consensus: 0.0,
            stop: false,
        }
    }
}

/// Intersection of all selections when non-empty, else their union.
pub fn judge(selections: &[BTreeSet<usize>]) -> BTreeSet<usize> {
    let Some(first) = selections.first() else {
        return BTreeSet::new();
    };
    let inter: BTreeSet<usize> = selections[1..]
        .iter()
        .fold(first.clone(), |acc, s| acc.intersection(s).copied().collect());
    if !inter.is_empty() {
        return inter;
    }
    selections.iter().flatten().copied().collect()
}

/// Mean pairwise Jaccard similarity. One selection scores 1; two empty sets score 1.
pub fn consensus(selections: &[BTreeSet<usize>]) -> f64 {
    let k = selections.len();
    if k < 2 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..k {
        for j in i + 1..k {
            let inter = selections[i].intersection(&selections[j]).count();
            let union = selections[i].union(&selections[j]).count();
            total += if union == 0 {
                1.0
            } else {
                inter as f64 / union as f64
            };
            pairs += 1;
        }
    }
    total / pairs as f64
}

/// `round` counts completed rounds.
pub fn should_stop(consensus: f64, judged: &BTreeSet<usize>, round: usize, theta: f64, r_max: usize) -> bool {
    (consensus >= theta && judged.len() == 1) || round >= r_max
}

pub fn select_one(pool: &Pool, seed: u64) -> Result<Candidate, OrchestratorError> {
    if pool.is_empty() {
        return Err(OrchestratorError::EmptyPool);
    }
    let i = ChaCha8Rng::seed_from_u64(seed).random_range(0..pool.len());
    Ok(pool.candidates()[i].clone())
}

struct Call {
    prompt: String,
    result: Result<String, AgentError>,
}

fn call_payload(call: &Call) -> Value {
    match &call.result {
        Ok(reply) => json!({"prompt": call.prompt, "reply": reply}),
        Err(e) => json!({
            "prompt": call.prompt,
            "error": e.to_string(),
            "fatal": matches!(e, AgentError::ScriptExhausted(_)),
        }),
    }
}

fn fatal(call: &Call) -> Option<OrchestratorError> {
    match &call.result {
        Err(AgentError::ScriptExhausted(who)) => Some(OrchestratorError::ScriptExhausted(who.clone())),
        _ => None,
    }
}

/// Fan out developer calls (agents in parallel, samples in order) and pool the answers.
pub fn run_developers(
    instruction: &str,
    developers: &[DeveloperSlot],
    round: usize,
    record: &mut RunRecord,
) -> Result<Pool, OrchestratorError> {
    let prompt = render_developer_prompt(instruction);
    let calls: Vec<Vec<Call>> = std::thread::scope(|s| {
        let handles: Vec<_> = developers
            .iter()
            .map(|slot| {
                let prompt = &prompt;
                s.spawn(move || {
                    (0..slot.samples)
                        .map(|_| Call {
                            prompt: prompt.clone(),
                            result: slot.agent.complete(prompt),
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("developer thread panicked"))
            .collect()
    });

    let mut pool = Pool::new();
    let mut abort = None;
    for (slot, calls) in developers.iter().zip(&calls) {
        let id = slot.agent.identity();
        for call in calls {
            let mut payload = call_payload(call);
            abort = abort.or_else(|| fatal(call));
            if let Ok(raw) = &call.result {
                match parse_answer(raw) {
                    Ok(reply) => {
                        let smiles = extract_smiles(&reply.answer);
                        let rationale = reply.think.unwrap_or_default();
                        payload["smiles"] = json!(smiles);
                        let c = Candidate::new(&smiles, &rationale, id, round);
                        payload["added"] = json!(pool.push(c));
                    }
                    Err(e) => payload["discarded"] = json!(e.to_string()),
                }
            }
            record.push(EventKind::Developer, round, Some(id), payload);
        }
    }
    if let Some(e) = abort {
        return Err(e);
    }
    if pool.is_empty() {
        return Err(OrchestratorError::EmptyPool);
    }
    Ok(pool)
}

fn run_debaters(
    state: &DebateState,
    debaters: &[Arc<dyn Agent>],
    reports: &[ExamReport],
    round: usize,
    record: &mut RunRecord,
) -> Result<Vec<Selection>, OrchestratorError> {
    let prompt = render_debater_prompt(&state.instruction, state.pool.candidates(), reports);
    let calls: Vec<Call> = std::thread::scope(|s| {
        let handles: Vec<_> = debaters
            .iter()
            .map(|agent| {
                let prompt = &prompt;
                s.spawn(move || Call {
                    prompt: prompt.clone(),
                    result: agent.complete(prompt),
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("debater thread panicked"))
            .collect()
    });

    let mut selections = Vec::new();
    let mut abort = None;
    for (agent, call) in debaters.iter().zip(&calls) {
        let id = agent.identity();
        let mut payload = call_payload(&call);
        abort = abort.or_else(|| fatal(&call));
        let (indices, argument) = match &call.result {
            Ok(raw) => match parse_answer(raw) {
                Ok(reply) => {
                    let indices = parse_index_selection(&reply.answer, state.pool.len())
                        .unwrap_or_else(|e| {
                            payload["degraded"] = json!(e.to_string());
                            BTreeSet::new()
                        });
                    (indices, reply.think.unwrap_or_default())
                }
                Err(e) => {
                    payload["degraded"] = json!(e.to_string());
                    (BTreeSet::new(), String::new())
                }
            },
            Err(_) => (BTreeSet::new(), String::new()),
        };
        payload["selection"] = json!(indices);
        record.push(EventKind::Debater, round, Some(id), payload);
        selections.push(Selection {
            agent: id.to_string(),
            indices,
            argument,
        });
    }
    match abort {
        Some(e) => Err(e),
        None => Ok(selections),
    }
}

/// One debate round: examine, debate, judge, score, then either narrow the
/// pool or refine the instruction and widen it.
pub fn run_round(
    state: &DebateState,
    agents: &AgentSet,
    cfg: &DebateConfig,
    record: &mut RunRecord,
) -> Result<DebateState, OrchestratorError> {
    if state.pool.is_empty() {
        return Err(OrchestratorError::EmptyPool);
    }
    let round = state.round + 1;
    record.push(
        EventKind::Pool,
        round,
        None,
        json!({"instruction": state.instruction, "candidates": state.pool.candidates()}),
    );
    let reports = examine_pool(state.pool.candidates(), &cfg.mask);
    record.push(EventKind::Report, round, None, json!({"reports": reports}));

    let selections = run_debaters(state, &agents.debaters, &reports, round, record)?;
    let sets: Vec<BTreeSet<usize>> = selections.iter().map(|s| s.indices.clone()).collect();
    let judged = judge(&sets);
    let score = consensus(&sets);
    record.push(EventKind::Judge, round, None, json!({"judged": judged}));
    record.push(EventKind::Consensus, round, None, json!({"value": score}));

    let mut next = if judged.is_empty() {
        state.pool.clone()
    } else {
        state.pool.subset(&judged)
    };
    let mut instruction = state.instruction.clone();
    if score < cfg.theta || judged.is_empty() {
        let prompt = render_refiner_prompt(&state.instruction, state.pool.candidates(), &selections, &reports);
        let call = Call {
            result: agents.refiner.complete(&prompt),
            prompt,
        };
        let mut payload = call_payload(&call);
        if let Ok(raw) = &call.result {
            match parse_answer(raw) {
                Ok(reply) if !reply.answer.is_empty() => instruction = reply.answer,
                Ok(_) => payload["kept_instruction"] = json!("empty answer"),
                Err(e) => payload["kept_instruction"] = json!(e.to_string()),
            }
        }
        payload["instruction"] = json!(instruction);
        record.push(EventKind::Refiner, round, Some(agents.refiner.identity()), payload);
        if let Some(e) = fatal(&call) {
            return Err(e);
        }
        match run_developers(&instruction, &agents.developers, round, record) {
            Ok(fresh) => next.union(fresh),
            Err(OrchestratorError::EmptyPool) => {}
            Err(e) => return Err(e),
        }
    }
    let stop = should_stop(score, &judged, round, cfg.theta, cfg.r_max);
    record.push(
        EventKind::Stop,
        round,
        None,
        json!({"stop": stop, "next_pool": next.smiles()}),
    );
    Ok(DebateState {
        round,
        instruction,
        pool: next,
        selections,
        judged,
        consensus: score,
        stop,
    })
}

fn config_event(instruction: &str, agents: &AgentSet, cfg: &DebateConfig) -> Value {
    json!({
        "instruction": instruction,
        "theta": cfg.theta,
        "r_max": cfg.r_max,
        "seed": cfg.seed,
        "mask": cfg.mask,
        "developers": agents.developers.iter()
            .map(|d| json!({"identity": d.agent.identity(), "samples": d.samples}))
            .collect::<Vec<_>>(),
        "debaters": agents.debaters.iter().map(|a| a.identity()).collect::<Vec<_>>(),
        "refiner": agents.refiner.identity(),
    })
}

/// Run the full loop and pick one candidate from the final pool.
pub fn run_pipeline(
    instruction: &str,
    agents: &AgentSet,
    cfg: &DebateConfig,
) -> Result<(Candidate, RunRecord), PipelineFailure> {
    let mut record = RunRecord::default();
    record.push(EventKind::Config, 0, None, config_event(instruction, agents, cfg));
    let result = (|| {
        cfg.validate(agents)?;
        let pool = run_developers(instruction, &agents.developers, 0, &mut record)?;
        let mut state = DebateState::new(instruction, pool);
        while !state.stop {
            state = run_round(&state, agents, cfg, &mut record)?;
        }
        select_one(&state.pool, cfg.seed).map(|c| (c, state.round))
    })();
    match result {
        Ok((candidate, rounds)) => {
            record.push(
                EventKind::Final,
                rounds,
                None,
                json!({"candidate": candidate, "rounds": rounds}),
            );
            Ok((candidate, record))
        }
        Err(error) => {
            let round = record.events.last().map_or(0, |e| e.round);
            record.push(EventKind::Failure, round, None, json!({"error": error.to_string()}));
            Err(PipelineFailure { error, record })
        }
    }
}

/// Serves the replies recorded for one identity, in order.
struct PlaybackAgent {
    identity: String,
    replies: Mutex<VecDeque<Result<String, AgentError>>>,
}

impl Agent for PlaybackAgent {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn complete(&self, _prompt: &str) -> Result<String, AgentError> {
        self.replies
            .lock()
            .expect("playback poisoned")
            .pop_front()
            .unwrap_or_else(|| Err(AgentError::ScriptExhausted(self.identity.clone())))
    }
}

/// Rebuild the agents and configuration of a recorded run so it can be re-run
/// without any model access.
pub fn playback(record: &RunRecord) -> Result<(String, AgentSet, DebateConfig), OrchestratorError> {
    let bad = |m: &str| OrchestratorError::InvalidConfig(m.to_string());
    let cfg_event = record
        .of_kind(EventKind::Config)
        .next()
        .ok_or_else(|| bad("record has no config event"))?;
    let p = &cfg_event.payload;
    let mut replies: HashMap<String, VecDeque<Result<String, AgentError>>> = HashMap::new();
    for e in &record.events {
        if !matches!(e.kind, EventKind::Developer | EventKind::Debater | EventKind::Refiner) {
            continue;
        }
        let Some(id) = &e.agent else { continue };
        let reply = match e.payload.get("reply").and_then(Value::as_str) {
            Some(r) => Ok(r.to_string()),
            None if e.payload["fatal"].as_bool() == Some(true) => {
                Err(AgentError::ScriptExhausted(id.clone()))
            }
            None => Err(AgentError::Recorded(
                e.payload["error"].as_str().unwrap_or("").to_string(),
            )),
        };
        replies.entry(id.clone()).or_default().push_back(reply);
    }
    let mut agent = |id: &str| -> Arc<dyn Agent> {
        Arc::new(PlaybackAgent {
            identity: id.to_string(),
            replies: Mutex::new(replies.remove(id).unwrap_or_default()),
        })
    };
    let developers = p["developers"]
        .as_array()
        .ok_or_else(|| bad("developers"))?
        .iter()
        .map(|d| DeveloperSlot {
            agent: agent(d["identity"].as_str().unwrap_or("")),
            samples: d["samples"].as_u64().unwrap_or(1) as usize,
        })
        .collect();
    let debaters = p["debaters"]
        .as_array()
        .ok_or_else(|| bad("debaters"))?
        .iter()
        .map(|d| agent(d.as_str().unwrap_or("")))
        .collect();
    let refiner = agent(p["refiner"].as_str().ok_or_else(|| bad("refiner"))?);
    let cfg = DebateConfig {
        theta: p["theta"].as_f64().ok_or_else(|| bad("theta"))?,
        r_max: p["r_max"].as_u64().ok_or_else(|| bad("r_max"))? as usize,
        seed: p["seed"].as_u64().ok_or_else(|| bad("seed"))?,
        mask: serde_json::from_value(p["mask"].clone()).map_err(|e| bad(&e.to_string()))?,
    };
    let instruction = p["instruction"].as_str().ok_or_else(|| bad("instruction"))?;
    Ok((
        instruction.to_string(),
        AgentSet {
            developers,
            debaters,
            refiner,
        },
        cfg,
    ))
}

/// Re-run a recorded pipeline against its own replies.
pub fn replay(record: &RunRecord) -> Result<(Candidate, RunRecord), PipelineFailure> {
    let (instruction, agents, cfg) = playback(record).map_err(|error| PipelineFailure {
        error,
        record: RunRecord::default(),
    })?;
    run_pipeline(&instruction, &agents, &cfg)
}
