use super::RewardError;
use crate::state::State;
use serde::{Deserialize, Serialize};
use std::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JudgeMode {
    Score,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RequestMeta {
    pub t: f64,
    pub step: usize,
}

/// Body of every request sent to a reward endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub mode: JudgeMode,
    pub states: Vec<Vec<f64>>,
    #[serde(default)]
    pub meta: RequestMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<f64>,
}

/// `preferred` is the index (0 or 1) of the preferred state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareResponse {
    pub preferred: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExternalReply {
    Scores(Vec<f64>),
    Preferred(usize),
}

fn default_timeout() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalEndpoint {
    pub url: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

impl ExternalEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        ExternalEndpoint { url: url.into(), timeout_secs: default_timeout() }
    }

    fn post(&self, req: &JudgeRequest) -> Result<String, RewardError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(self.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let body = serde_json::to_string(req).map_err(|e| RewardError::Malformed(e.to_string()))?;
        let mut resp = agent.post(&self.url).header("content-type", "application/json").send(body.as_str()).map_err(
            |e| match e {
                ureq::Error::Timeout(_) => RewardError::Timeout(self.url.clone()),
                other => RewardError::Transport(other.to_string()),
            },
        )?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(RewardError::HttpStatus { status });
        }
        resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) => RewardError::Timeout(self.url.clone()),
            other => RewardError::Transport(other.to_string()),
        })
    }

    /// Scores a batch of clean states; one finite score per state.
    pub fn score(&self, states: &[State], meta: RequestMeta) -> Result<Vec<f64>, RewardError> {
        match external_reward(self, states, JudgeMode::Score, meta)? {
            ExternalReply::Scores(s) => Ok(s),
            ExternalReply::Preferred(_) => unreachable!(),
        }
    }

    /// Index (0 or 1) of the preferred state.
    pub fn compare(&self, a: &State, b: &State, meta: RequestMeta) -> Result<usize, RewardError> {
        match external_reward(self, &[a.clone(), b.clone()], JudgeMode::Compare, meta)? {
            ExternalReply::Preferred(p) => Ok(p),
            ExternalReply::Scores(_) => unreachable!(),
        }
    }
}

/// Sends one request to `endpoint` and validates the reply.
pub fn external_reward(
    endpoint: &ExternalEndpoint,
    states: &[State],
    mode: JudgeMode,
    meta: RequestMeta,
) -> Result<ExternalReply, RewardError> {
    if mode == JudgeMode::Compare && states.len() != 2 {
        return Err(RewardError::InvalidSpec(format!(
            "compare requests carry exactly two states, got {}",
            states.len()
        )));
    }
    if states.is_empty() {
        return Err(RewardError::InvalidSpec("empty score batch".into()));
    }
    let req = JudgeRequest { mode, states: states.iter().map(|s| s.0.clone()).collect(), meta };
    let text = endpoint.post(&req)?;
    match mode {
        JudgeMode::Score => {
            let r: ScoreResponse = serde_json::from_str(&text).map_err(|e| RewardError::Malformed(e.to_string()))?;
            if r.scores.len() != states.len() {
                return Err(RewardError::Malformed(format!(
                    "expected {} scores, got {}",
                    states.len(),
                    r.scores.len()
                )));
            }
            if r.scores.iter().any(|s| !s.is_finite()) {
                return Err(RewardError::Malformed("non-finite score".into()));
            }
            Ok(ExternalReply::Scores(r.scores))
        }
        JudgeMode::Compare => {
            let r: CompareResponse = serde_json::from_str(&text).map_err(|e| RewardError::Malformed(e.to_string()))?;
            if r.preferred > 1 {
                return Err(RewardError::Malformed(format!("preferred index {} out of range", r.preferred)));
            }
            Ok(ExternalReply::Preferred(r.preferred))
        }
    }
}
