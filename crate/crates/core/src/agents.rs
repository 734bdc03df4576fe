//! Agent roles, prompt rendering, reply parsing and scripted agents.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Mutex;

use moldebate_chem::{canonical_smiles, parse_smiles};
use serde::{Deserialize, Serialize};

use crate::examiner::ExamReport;
use crate::gateway::{Client, EndpointConfig, GatewayError};

const DEVELOPER_TEMPLATE: &str = include_str!("../prompts/developer.txt");
const DEBATER_TEMPLATE: &str = include_str!("../prompts/debater.txt");
const REFINER_TEMPLATE: &str = include_str!("../prompts/refiner.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Developer,
    Debater,
    Refiner,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRole {
    pub kind: AgentKind,
    pub identity: String,
}

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("reply has no <answer> span")]
    MissingAnswer,
    #[error("no index found in answer {0:?}")]
    ParseFailure(String),
    #[error("script for {0} is exhausted")]
    ScriptExhausted(String),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    /// A failure replayed from a recorded trace.
    #[error("recorded failure: {0}")]
    Recorded(String),
}

/// Anything that turns a prompt into a completion.
pub trait Agent: Send + Sync {
    fn identity(&self) -> &str;
    fn complete(&self, prompt: &str) -> Result<String, AgentError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub smiles: String,
    /// Empty when `smiles` does not parse.
    pub canonical: String,
    pub rationale: String,
    pub origin: String,
    pub born_round: usize,
}

impl Candidate {
    pub fn new(smiles: &str, rationale: &str, origin: &str, born_round: usize) -> Self {
        let canonical = parse_smiles(smiles)
            .map(|m| canonical_smiles(&m))
            .unwrap_or_default();
        Candidate {
            smiles: smiles.to_string(),
            canonical,
            rationale: rationale.to_string(),
            origin: origin.to_string(),
            born_round,
        }
    }

    pub fn is_valid(&self) -> bool {
        !self.canonical.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReply {
    pub raw_text: String,
    pub think: Option<String>,
    pub answer: String,
}

/// One debater's pick for a round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub agent: String,
    pub indices: BTreeSet<usize>,
    pub argument: String,
}

fn last_span<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let mut best = None;
    let mut from = 0;
    while let Some(o) = text[from..].find(open) {
        let start = from + o + open.len();
        match text[start..].find(close) {
            Some(c) => {
                best = Some(&text[start..start + c]);
                from = start + c + close.len();
            }
            None => break,
        }
    }
    best
}

/// Pull the think and answer spans out of a completion. The last answer span wins.
pub fn parse_answer(raw: &str) -> Result<AgentReply, AgentError> {
    let answer = last_span(raw, "<answer>", "</answer>").ok_or(AgentError::MissingAnswer)?;
    Ok(AgentReply {
        raw_text: raw.to_string(),
        think: last_span(raw, "<think>", "</think>").map(|t| t.trim().to_string()),
        answer: answer.trim().to_string(),
    })
}

/// Comma-separated 1-based indices; out-of-range and repeated entries are dropped.
pub fn parse_index_selection(answer: &str, pool_size: usize) -> Result<BTreeSet<usize>, AgentError> {
    let numbers: Vec<usize> = answer
        .split(|c: char| !c.is_ascii_digit())
        .filter(|t| !t.is_empty())
        .filter_map(|t| t.parse().ok())
        .collect();
    if numbers.is_empty() {
        return Err(AgentError::ParseFailure(answer.to_string()));
    }
    Ok(numbers
        .into_iter()
        .filter(|&i| i >= 1 && i <= pool_size)
        .collect())
}

pub fn format_indices(indices: &BTreeSet<usize>) -> String {
    indices
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// The SMILES in a developer answer. Falls back to the longest parseable token
/// when the answer carries prose, and to the raw answer when nothing parses.
pub fn extract_smiles(answer: &str) -> String {
    let trimmed = answer.trim();
    if parse_smiles(trimmed).is_ok() {
        return trimmed.to_string();
    }
    let strip: &[char] = &['`', '"', '\'', ',', ';', ':', '.', '*'];
    trimmed
        .split_whitespace()
        .map(|t| t.trim_matches(strip))
        .filter(|t| !t.is_empty() && parse_smiles(t).is_ok())
        .max_by_key(|t| t.len())
        .unwrap_or(trimmed)
        .to_string()
}

pub fn render_developer_prompt(instruction: &str) -> String {
    DEVELOPER_TEMPLATE.replace("{query}", instruction)
}

fn molecules_block(pool: &[Candidate], reports: &[ExamReport]) -> String {
    let mut out = String::new();
    for (i, c) in pool.iter().enumerate() {
        let report = reports
            .iter()
            .find(|r| r.candidate_index == i + 1)
            .map(|r| r.rendered_text.replace('\n', " "))
            .unwrap_or_default();
        let rationale = c.rationale.replace('\n', " ");
        out.push_str(&format!("\n{}. {} — {} — {}", i + 1, c.smiles, rationale, report));
    }
    out
}

fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    // Single pass so substituted text is never re-scanned for placeholders.
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    'outer: while !rest.is_empty() {
        for (key, value) in pairs {
            if let Some(tail) = rest.strip_prefix(key) {
                out.push_str(value);
                rest = tail;
                continue 'outer;
            }
        }
        let ch = rest.chars().next().expect("non-empty");
        out.push(ch);
        rest = &rest[ch.len_utf8()..];
    }
    out
}

pub fn render_debater_prompt(instruction: &str, pool: &[Candidate], reports: &[ExamReport]) -> String {
    let molecules = molecules_block(pool, reports);
    fill(
        DEBATER_TEMPLATE,
        &[("{query}", instruction), ("{molecules}", &molecules)],
    )
}

pub fn render_refiner_prompt(
    instruction: &str,
    pool: &[Candidate],
    selections: &[Selection],
    reports: &[ExamReport],
) -> String {
    let molecules = molecules_block(pool, reports);
    let mut debate = String::new();
    for s in selections {
        debate.push_str(&format!(
            "\n{} selected [{}]: {}",
            s.agent,
            format_indices(&s.indices),
            s.argument.replace('\n', " ")
        ));
    }
    fill(
        REFINER_TEMPLATE,
        &[
            ("{query}", instruction),
            ("{molecules}", &molecules),
            ("{debate selections}", &debate),
        ],
    )
}

/// Replays a fixed list of replies and records every prompt it receives.
pub struct ScriptedAgent {
    identity: String,
    script: Mutex<VecDeque<String>>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedAgent {
    pub fn new(identity: impl Into<String>, script: Vec<String>) -> Self {
        ScriptedAgent {
            identity: identity.into(),
            script: Mutex::new(script.into()),
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt log poisoned").clone()
    }

    pub fn remaining(&self) -> usize {
        self.script.lock().expect("script poisoned").len()
    }
}

impl Agent for ScriptedAgent {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn complete(&self, prompt: &str) -> Result<String, AgentError> {
        self.prompts
            .lock()
            .expect("prompt log poisoned")
            .push(prompt.to_string());
        self.script
            .lock()
            .expect("script poisoned")
            .pop_front()
            .ok_or_else(|| AgentError::ScriptExhausted(self.identity.clone()))
    }
}

pub fn scripted_agent(identity: &str, script: &[&str]) -> ScriptedAgent {
    ScriptedAgent::new(identity, script.iter().map(|s| s.to_string()).collect())
}

/// An agent backed by a chat-completions endpoint.
pub struct LlmAgent {
    identity: String,
    config: EndpointConfig,
    client: Client,
}

impl LlmAgent {
    pub fn new(identity: impl Into<String>, config: EndpointConfig, client: Client) -> Self {
        LlmAgent {
            identity: identity.into(),
            config,
            client,
        }
    }
}

impl Agent for LlmAgent {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn complete(&self, prompt: &str) -> Result<String, AgentError> {
        Ok(self.client.complete(&self.config, prompt)?)
    }
}
