//! Run configuration: which agents take which role and how the debate is tuned.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use moldebate_core::agents::{Agent, LlmAgent, ScriptedAgent};
use moldebate_core::examiner::{is_descriptor, Mask};
use moldebate_core::gateway::{Client, EndpointConfig};
use moldebate_core::orchestrator::{AgentSet, DebateConfig, DeveloperSlot};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DebateSection {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_r_max")]
    pub r_max: usize,
}

fn default_k() -> usize {
    2
}
fn default_theta() -> f64 {
    0.6
}
fn default_r_max() -> usize {
    4
}
fn default_seed() -> u64 {
    42
}

impl Default for DebateSection {
    fn default() -> Self {
        DebateSection {
            k: default_k(),
            theta: default_theta(),
            r_max: default_r_max(),
        }
    }
}

/// One agent. Exactly one of `endpoint` or `script` must be set; a script is
/// a list of raw replies served in order.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub identity: String,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub endpoint: Option<EndpointConfig>,
    #[serde(default)]
    pub script: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Only read by `mock-run`.
    #[serde(default)]
    pub instruction: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub mask: Vec<String>,
    #[serde(default)]
    pub debate: DebateSection,
    pub developers: Vec<AgentSpec>,
    /// A single entry is replicated `k` times.
    pub debaters: Vec<AgentSpec>,
    pub refiner: AgentSpec,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    fn validate(&self) -> Result<()> {
        let d = &self.debate;
        if d.k < 1 {
            bail!("debate.k must be >= 1");
        }
        if !(0.0..=1.0).contains(&d.theta) {
            bail!("debate.theta must be in [0, 1]");
        }
        if d.r_max < 1 {
            bail!("debate.r_max must be >= 1");
        }
        if self.developers.is_empty() {
            bail!("developers: at least one developer is required");
        }
        if self.debaters.len() != 1 && self.debaters.len() != d.k {
            bail!(
                "debaters: expected 1 or k={} entries, found {}",
                d.k,
                self.debaters.len()
            );
        }
        for key in &self.mask {
            if !is_descriptor(key) {
                bail!("mask: unknown descriptor {key:?}");
            }
        }
        let roles = self
            .developers
            .iter()
            .map(|a| ("developers", a))
            .chain(self.debaters.iter().map(|a| ("debaters", a)))
            .chain(std::iter::once(("refiner", &self.refiner)));
        for (role, a) in roles {
            match (&a.endpoint, &a.script) {
                (Some(e), None) => e
                    .validate()
                    .map_err(|m| anyhow::anyhow!("{role}.{}.endpoint: {m}", a.identity))?,
                (None, Some(_)) => {}
                _ => bail!("{role}.{}: set exactly one of endpoint or script", a.identity),
            }
            if role == "developers" && a.samples == Some(0) {
                bail!("developers.{}.samples must be >= 1", a.identity);
            }
            if role != "developers" && a.samples.is_some() {
                bail!("{role}.{}.samples: only developers take samples", a.identity);
            }
        }
        Ok(())
    }

    pub fn debate_config(&self) -> DebateConfig {
        DebateConfig {
            theta: self.debate.theta,
            r_max: self.debate.r_max,
            seed: self.seed,
            mask: self.mask.iter().cloned().collect::<Mask>(),
        }
    }

    pub fn uses_endpoints(&self) -> bool {
        self.developers
            .iter()
            .chain(&self.debaters)
            .chain(std::iter::once(&self.refiner))
            .any(|a| a.endpoint.is_some())
    }

    fn build(spec: &AgentSpec, identity: String, client: &Client) -> Arc<dyn Agent> {
        match (&spec.endpoint, &spec.script) {
            (Some(e), _) => Arc::new(LlmAgent::new(identity, e.clone(), client.clone())),
            (None, Some(s)) => Arc::new(ScriptedAgent::new(identity, s.clone())),
            (None, None) => unreachable!("validated"),
        }
    }

    /// Fresh agents; scripted agents restart their scripts on every call.
    pub fn agents(&self, client: &Client) -> AgentSet {
        let developers = self
            .developers
            .iter()
            .map(|s| DeveloperSlot {
                agent: Self::build(s, s.identity.clone(), client),
                samples: s.samples.unwrap_or(1),
            })
            .collect();
        let debaters = if self.debaters.len() == 1 && self.debate.k > 1 {
            let s = &self.debaters[0];
            (1..=self.debate.k)
                .map(|i| Self::build(s, format!("{}-{i}", s.identity), client))
                .collect()
        } else {
            self.debaters
                .iter()
                .map(|s| Self::build(s, s.identity.clone(), client))
                .collect()
        };
        AgentSet {
            developers,
            debaters,
            refiner: Self::build(&self.refiner, self.refiner.identity.clone(), client),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[developers]]
identity = "dev"
samples = 2
script = ["<answer>CCO</answer>", "<answer>CCN</answer>"]

[[debaters]]
identity = "judge"
script = ["<answer>1</answer>"]

[refiner]
identity = "ref"
script = []
"#;

    #[test]
    fn defaults_and_replication() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!((cfg.debate.k, cfg.debate.theta, cfg.debate.r_max, cfg.seed), (2, 0.6, 4, 42));
        let agents = cfg.agents(&Client::new(Default::default()));
        let ids: Vec<&str> = agents.debaters.iter().map(|a| a.identity()).collect();
        assert_eq!(ids, ["judge-1", "judge-2"]);
        assert_eq!(agents.developers[0].samples, 2);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::parse(&format!("{MINIMAL}\n[debate]\ntheta_max = 3\n")).unwrap_err();
        assert!(err.to_string().contains("theta_max"), "{err}");
        let err = RunConfig::parse(&MINIMAL.replace("samples = 2", "sample = 2")).unwrap_err();
        assert!(err.to_string().contains("sample"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad_theta = format!("{MINIMAL}\n[debate]\ntheta = 1.5\n");
        assert!(RunConfig::parse(&bad_theta).unwrap_err().to_string().contains("theta"));
        let bad_mask = format!("mask = [\"colour\"]\n{MINIMAL}");
        assert!(RunConfig::parse(&bad_mask).unwrap_err().to_string().contains("colour"));
        let both = MINIMAL.replace(
            "identity = \"ref\"",
            "identity = \"ref\"\nendpoint = { base_url = \"http://x\", model_name = \"m\" }",
        );
        assert!(RunConfig::parse(&both).unwrap_err().to_string().contains("exactly one"));
    }
}
