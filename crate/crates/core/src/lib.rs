//! Generate-debate-refine orchestration: examiner, agents, model gateway,
//! the debate loop and the evaluation harness.

pub mod agents;
pub mod eval;
pub mod examiner;
pub mod gateway;
pub mod orchestrator;

pub use agents::{Agent, AgentError, Candidate, LlmAgent, ScriptedAgent, Selection};
pub use examiner::{examine, examine_pool, render_report, ExamReport, Mask};
pub use gateway::{Client, EndpointConfig, GatewayError, TraceLog};
pub use orchestrator::{
    consensus, judge, replay, run_pipeline, run_round, select_one, should_stop, AgentSet,
    DebateConfig, DebateState, DeveloperSlot, EventKind, PipelineFailure, Pool, RunRecord,
};
