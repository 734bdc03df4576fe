use std::sync::Arc;

use moldebate_core::agents::{scripted_agent, Agent, ScriptedAgent};
use moldebate_core::orchestrator::{
    replay, run_pipeline, AgentSet, DebateConfig, DeveloperSlot, EventKind, OrchestratorError,
    RunRecord,
};
use serde_json::Value;

fn ans(s: &str) -> String {
    format!("<think>reason for {s}</think><answer>{s}</answer>")
}

fn agent(id: &str, replies: &[&str]) -> Arc<ScriptedAgent> {
    let script: Vec<String> = replies.iter().map(|r| ans(r)).collect();
    Arc::new(ScriptedAgent::new(id, script))
}

struct Roster {
    devs: Vec<(Arc<ScriptedAgent>, usize)>,
    debaters: Vec<Arc<ScriptedAgent>>,
    refiner: Arc<ScriptedAgent>,
}

impl Roster {
    fn agents(&self) -> AgentSet {
        AgentSet {
            developers: self
                .devs
                .iter()
                .map(|(a, n)| DeveloperSlot {
                    agent: a.clone() as Arc<dyn Agent>,
                    samples: *n,
                })
                .collect(),
            debaters: self.debaters.iter().map(|a| a.clone() as Arc<dyn Agent>).collect(),
            refiner: self.refiner.clone(),
        }
    }
}

fn smiles_list(v: &Value) -> String {
    v.as_array()
        .unwrap()
        .iter()
        .map(|c| c.get("smiles").unwrap_or(c).as_str().unwrap().to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn indices(v: &Value) -> String {
    let xs: Vec<String> = v.as_array().unwrap().iter().map(|x| x.to_string()).collect();
    format!("[{}]", xs.join(","))
}

/// One line per event with the fields that define the control flow.
fn summarize(record: &RunRecord) -> Vec<String> {
    record
        .events
        .iter()
        .map(|e| {
            let r = e.round;
            let who = e.agent.as_deref().unwrap_or("");
            let p = &e.payload;
            match e.kind {
                EventKind::Config => "config".to_string(),
                EventKind::Developer => format!("developer {r} {who} {}", p["smiles"].as_str().unwrap_or("-")),
                EventKind::Pool => format!("pool {r} {}", smiles_list(&p["candidates"])),
                EventKind::Report => format!("report {r} {}", p["reports"].as_array().unwrap().len()),
                EventKind::Debater => format!("debater {r} {who} {}", indices(&p["selection"])),
                EventKind::Judge => format!("judge {r} {}", indices(&p["judged"])),
                EventKind::Consensus => format!("consensus {r} {:.4}", p["value"].as_f64().unwrap()),
                EventKind::Refiner => format!("refiner {r} {who} {}", p["instruction"].as_str().unwrap()),
                EventKind::Stop => format!("stop {r} {} {}", p["stop"], smiles_list(&p["next_pool"])),
                EventKind::Final => format!("final {r} {}", p["candidate"]["smiles"].as_str().unwrap()),
                EventKind::Failure => format!("failure {r} {}", p["error"].as_str().unwrap()),
            }
        })
        .collect()
}

fn assert_trace(record: &RunRecord, expected: &[&str]) {
    let got = summarize(record);
    assert_eq!(got, expected, "\nactual trace:\n{}", got.join("\n"));
}

#[test]
fn immediate_consensus_takes_one_round() {
    let roster = Roster {
        devs: vec![(agent("dev", &["CCO", "CCN"]), 2)],
        debaters: vec![agent("deb1", &["1"]), agent("deb2", &["1"])],
        refiner: agent("ref", &[]),
    };
    let (chosen, record) = run_pipeline("ethanol", &roster.agents(), &DebateConfig::default()).unwrap();
    assert_eq!(chosen.smiles, "CCO");
    assert_trace(
        &record,
        &[
            "config",
            "developer 0 dev CCO",
            "developer 0 dev CCN",
            "pool 1 CCO,CCN",
            "report 1 2",
            "debater 1 deb1 [1]",
            "debater 1 deb2 [1]",
            "judge 1 [1]",
            "consensus 1 1.0000",
            "stop 1 true CCO",
            "final 1 CCO",
        ],
    );
    assert_eq!(roster.refiner.prompts().len(), 0);
    assert_eq!(record.rounds(), 1);
}

#[test]
fn low_consensus_refines_once_and_unions_the_pool() {
    let roster = Roster {
        devs: vec![(agent("dev", &["CCO", "CCN", "CCC", "NCC"]), 2)],
        debaters: vec![agent("deb1", &["1,2", "2"]), agent("deb2", &["2", "2"])],
        refiner: agent("ref", &["an amine or alkane"]),
    };
    let (chosen, record) = run_pipeline("small molecule", &roster.agents(), &DebateConfig::default()).unwrap();
    assert_eq!(chosen.smiles, "CCC");
    assert_trace(
        &record,
        &[
            "config",
            "developer 0 dev CCO",
            "developer 0 dev CCN",
            "pool 1 CCO,CCN",
            "report 1 2",
            "debater 1 deb1 [1,2]",
            "debater 1 deb2 [2]",
            "judge 1 [2]",
            "consensus 1 0.5000",
            "refiner 1 ref an amine or alkane",
            "developer 1 dev CCC",
            "developer 1 dev NCC",
            "stop 1 false CCN,CCC",
            "pool 2 CCN,CCC",
            "report 2 2",
            "debater 2 deb1 [2]",
            "debater 2 deb2 [2]",
            "judge 2 [2]",
            "consensus 2 1.0000",
            "stop 2 true CCC",
            "final 2 CCC",
        ],
    );
    assert_eq!(roster.refiner.prompts().len(), 1);
    let dev_prompts = roster.devs[0].0.prompts();
    assert!(dev_prompts[0].ends_with("small molecule"));
    assert!(dev_prompts[2].ends_with("an amine or alkane"));
    let refiner_prompt = &roster.refiner.prompts()[0];
    assert!(refiner_prompt.contains("deb1 selected [1,2]: reason for 1,2"));
    assert!(refiner_prompt.contains("\n2. CCN — reason for CCN — The SMILES CCN is valid"));
}

#[test]
fn persistent_disagreement_stops_at_r_max() {
    let roster = Roster {
        devs: vec![(
            agent("dev", &["C", "CC", "CCC", "CCCC", "CCCCC", "CCCCCC", "CCCCCCC", "CCCCCCCC", "CCCCCCCCC", "CCCCCCCCCC"]),
            2,
        )],
        debaters: vec![agent("deb1", &["1", "1", "1", "1"]), agent("deb2", &["2", "2", "2", "2"])],
        refiner: agent("ref", &["try 1", "try 2", "try 3", "try 4"]),
    };
    let cfg = DebateConfig::default();
    assert_eq!((roster.debaters.len(), cfg.theta, cfg.r_max), (2, 0.6, 4));
    let (chosen, record) = run_pipeline("alkane", &roster.agents(), &cfg).unwrap();
    assert_trace(
        &record,
        &[
            "config",
            "developer 0 dev C",
            "developer 0 dev CC",
            "pool 1 C,CC",
            "report 1 2",
            "debater 1 deb1 [1]",
            "debater 1 deb2 [2]",
            "judge 1 [1,2]",
            "consensus 1 0.0000",
            "refiner 1 ref try 1",
            "developer 1 dev CCC",
            "developer 1 dev CCCC",
            "stop 1 false C,CC,CCC,CCCC",
            "pool 2 C,CC,CCC,CCCC",
            "report 2 4",
            "debater 2 deb1 [1]",
            "debater 2 deb2 [2]",
            "judge 2 [1,2]",
            "consensus 2 0.0000",
            "refiner 2 ref try 2",
            "developer 2 dev CCCCC",
            "developer 2 dev CCCCCC",
            "stop 2 false C,CC,CCCCC,CCCCCC",
            "pool 3 C,CC,CCCCC,CCCCCC",
            "report 3 4",
            "debater 3 deb1 [1]",
            "debater 3 deb2 [2]",
            "judge 3 [1,2]",
            "consensus 3 0.0000",
            "refiner 3 ref try 3",
            "developer 3 dev CCCCCCC",
            "developer 3 dev CCCCCCCC",
            "stop 3 false C,CC,CCCCCCC,CCCCCCCC",
            "pool 4 C,CC,CCCCCCC,CCCCCCCC",
            "report 4 4",
            "debater 4 deb1 [1]",
            "debater 4 deb2 [2]",
            "judge 4 [1,2]",
            "consensus 4 0.0000",
            "refiner 4 ref try 4",
            "developer 4 dev CCCCCCCCC",
            "developer 4 dev CCCCCCCCCC",
            "stop 4 true C,CC,CCCCCCCCC,CCCCCCCCCC",
            &format!("final 4 {}", chosen.smiles),
        ],
    );
    assert!(["C", "CC", "CCCCCCCCC", "CCCCCCCCCC"].contains(&chosen.smiles.as_str()));
    assert_eq!(record.rounds(), 4);
    assert_eq!(roster.refiner.prompts().len(), 4);
}

#[test]
fn refine_then_converge() {
    // Six candidates, most excluded, a refinement, an expanded pool, then agreement.
    let roster = Roster {
        devs: vec![
            (agent("dev1", &["CCO", "CCCO", "CCCCO", "Nc1ccccc1O", "CCO", "CCO"]), 3),
            (agent("dev2", &["c1ccccc1O", "Cc1ccccc1O", "Oc1ccccc1O", "c1ccccc1O", "CCO", "CCO"]), 3),
        ],
        debaters: vec![agent("deb1", &["4,5", "1,2", "2"]), agent("deb2", &["4,6", "1,2", "2"])],
        refiner: agent("ref", &["a phenol bearing an amino group"]),
    };
    let (chosen, record) = run_pipeline("an aminophenol", &roster.agents(), &DebateConfig::default()).unwrap();
    assert_trace(
        &record,
        &[
            "config",
            "developer 0 dev1 CCO",
            "developer 0 dev1 CCCO",
            "developer 0 dev1 CCCCO",
            "developer 0 dev2 c1ccccc1O",
            "developer 0 dev2 Cc1ccccc1O",
            "developer 0 dev2 Oc1ccccc1O",
            "pool 1 CCO,CCCO,CCCCO,c1ccccc1O,Cc1ccccc1O,Oc1ccccc1O",
            "report 1 6",
            "debater 1 deb1 [4,5]",
            "debater 1 deb2 [4,6]",
            "judge 1 [4]",
            "consensus 1 0.3333",
            "refiner 1 ref a phenol bearing an amino group",
            "developer 1 dev1 Nc1ccccc1O",
            "developer 1 dev1 CCO",
            "developer 1 dev1 CCO",
            "developer 1 dev2 c1ccccc1O",
            "developer 1 dev2 CCO",
            "developer 1 dev2 CCO",
            "stop 1 false c1ccccc1O,Nc1ccccc1O,CCO",
            "pool 2 c1ccccc1O,Nc1ccccc1O,CCO",
            "report 2 3",
            "debater 2 deb1 [1,2]",
            "debater 2 deb2 [1,2]",
            "judge 2 [1,2]",
            "consensus 2 1.0000",
            "stop 2 false c1ccccc1O,Nc1ccccc1O",
            "pool 3 c1ccccc1O,Nc1ccccc1O",
            "report 3 2",
            "debater 3 deb1 [2]",
            "debater 3 deb2 [2]",
            "judge 3 [2]",
            "consensus 3 1.0000",
            "stop 3 true Nc1ccccc1O",
            "final 3 Nc1ccccc1O",
        ],
    );
    assert_eq!(chosen.smiles, "Nc1ccccc1O");
    assert_eq!(record.rounds(), 3);
}

#[test]
fn exhausted_script_aborts_with_the_trace() {
    let roster = Roster {
        devs: vec![(agent("dev", &["CCO", "CCN"]), 2)],
        debaters: vec![agent("deb1", &["1"]), agent("deb2", &[])],
        refiner: agent("ref", &[]),
    };
    let failure = run_pipeline("x", &roster.agents(), &DebateConfig::default()).unwrap_err();
    assert_eq!(failure.error, OrchestratorError::ScriptExhausted("deb2".into()));
    let last = failure.record.events.last().unwrap();
    assert_eq!(last.kind, EventKind::Failure);
    assert!(failure.record.of_kind(EventKind::Debater).count() == 2);
}

#[test]
fn all_developers_failing_is_an_empty_pool() {
    let devs: Arc<dyn Agent> = Arc::new(scripted_agent("dev", &["no tags here"]));
    let agents = AgentSet {
        developers: vec![DeveloperSlot { agent: devs, samples: 1 }],
        debaters: vec![agent("deb1", &["1"])],
        refiner: agent("ref", &[]),
    };
    let failure = run_pipeline("x", &agents, &DebateConfig::default()).unwrap_err();
    assert_eq!(failure.error, OrchestratorError::EmptyPool);
}

#[test]
fn recorded_runs_replay_to_the_same_answer() {
    let roster = Roster {
        devs: vec![(agent("dev", &["CCO", "CCN", "CCC", "CCO"]), 2)],
        debaters: vec![agent("deb1", &["1,2", "2"]), agent("deb2", &["2", "2"])],
        refiner: agent("ref", &["an amine or alkane"]),
    };
    let (chosen, record) = run_pipeline("small molecule", &roster.agents(), &DebateConfig::default()).unwrap();
    let reloaded = RunRecord::from_jsonl(&record.to_jsonl()).unwrap();
    let (again, rerecorded) = replay(&reloaded).unwrap();
    assert_eq!(again, chosen);
    assert_eq!(rerecorded.to_jsonl(), record.to_jsonl());
}

#[test]
fn k_equal_one_is_trivially_in_consensus() {
    let roster = Roster {
        devs: vec![(agent("dev", &["CCO", "CCN"]), 2)],
        debaters: vec![agent("deb1", &["1,2", "2"])],
        refiner: agent("ref", &[]),
    };
    let (chosen, record) = run_pipeline("x", &roster.agents(), &DebateConfig::default()).unwrap();
    assert_eq!(chosen.smiles, "CCN");
    assert_eq!(record.consensus_history(), vec![1.0, 1.0]);
}
