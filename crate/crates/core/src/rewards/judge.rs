use super::external::{CompareResponse, JudgeMode, JudgeRequest, ScoreResponse};
use super::{RewardError, RewardSpec};
use crate::rng::SeedPath;
use axum::extract::State as AxState;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::{Arc, Mutex};

/// A judge holding a hidden reward; comparisons are flipped with
/// probability `flip_prob`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedJudge {
    pub hidden: RewardSpec,
    #[serde(default)]
    pub flip_prob: f64,
}

impl SimulatedJudge {
    pub fn new(hidden: RewardSpec, flip_prob: f64) -> Result<Self, RewardError> {
        if !(0.0..=1.0).contains(&flip_prob) {
            return Err(RewardError::InvalidSpec(format!("flip probability {flip_prob} outside [0, 1]")));
        }
        Ok(SimulatedJudge { hidden, flip_prob })
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, RewardError> {
        self.hidden.eval(x)
    }

    /// `true` when `a` is reported as preferred over `b`.
    pub fn prefers<R: Rng + ?Sized>(&self, a: &[f64], b: &[f64], rng: &mut R) -> Result<bool, RewardError> {
        let truth = self.hidden.eval(a)? > self.hidden.eval(b)?;
        let flip = self.flip_prob > 0.0 && rng.random::<f64>() < self.flip_prob;
        Ok(truth != flip)
    }
}

struct JudgeState {
    judge: SimulatedJudge,
    rng: Mutex<ChaCha8Rng>,
}

/// HTTP front end for a [`SimulatedJudge`]: `POST /` with a judge request.
pub fn judge_router(judge: SimulatedJudge, seed: u64) -> Router {
    let state = Arc::new(JudgeState { judge, rng: Mutex::new(SeedPath::new(seed).rng()) });
    Router::new().route("/", post(handle)).with_state(state)
}

fn bad_request(msg: String) -> Response {
    (StatusCode::BAD_REQUEST, Json(serde_json::json!({ "error": msg }))).into_response()
}

async fn handle(AxState(st): AxState<Arc<JudgeState>>, Json(req): Json<JudgeRequest>) -> Response {
    match req.mode {
        JudgeMode::Score => {
            let scores: Result<Vec<f64>, _> = req.states.iter().map(|s| st.judge.score(s)).collect();
            match scores {
                Ok(scores) => Json(ScoreResponse { scores }).into_response(),
                Err(e) => bad_request(e.to_string()),
            }
        }
        JudgeMode::Compare => {
            if req.states.len() != 2 {
                return bad_request(format!("compare needs two states, got {}", req.states.len()));
            }
            let mut rng = st.rng.lock().expect("judge rng poisoned");
            match st.judge.prefers(&req.states[0], &req.states[1], &mut *rng) {
                Ok(first) => Json(CompareResponse { preferred: if first { 0 } else { 1 } }).into_response(),
                Err(e) => bad_request(e.to_string()),
            }
        }
    }
}
