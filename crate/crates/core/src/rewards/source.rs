use super::external::{ExternalEndpoint, RequestMeta};
use super::judge::SimulatedJudge;
use super::partition::{partition_top, ComparisonRecord};
use super::{RewardError, RewardSpec};
use crate::rng::SeedPath;
use crate::state::State;
use serde::{Deserialize, Serialize};

/// Where pairwise preferences come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ComparatorSource {
    Judge { judge: SimulatedJudge },
    External { endpoint: ExternalEndpoint },
}

/// Where a run gets its rewards from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSource {
    ClosedForm {
        spec: RewardSpec,
    },
    Comparison {
        comparator: ComparatorSource,
    },
    External {
        endpoint: ExternalEndpoint,
    },
    /// A human picks among previews; only the steering service drives this.
    Interactive,
}

/// Per-candidate estimates for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub estimates: Vec<f64>,
    /// Reward evaluations or comparisons spent.
    pub queries: usize,
    pub comparisons: Option<Vec<ComparisonRecord>>,
}

impl RewardSource {
    pub fn closed_form(spec: RewardSpec) -> Self {
        RewardSource::ClosedForm { spec }
    }

    pub fn validate(&self, dim: usize) -> Result<(), RewardError> {
        match self {
            RewardSource::ClosedForm { spec } => spec.validate(dim),
            RewardSource::Comparison { comparator: ComparatorSource::Judge { judge } } => {
                judge.hidden.validate(dim)?;
                SimulatedJudge::new(judge.hidden.clone(), judge.flip_prob).map(|_| ())
            }
            RewardSource::Comparison { comparator: ComparatorSource::External { endpoint } }
            | RewardSource::External { endpoint } => {
                if endpoint.url.is_empty() {
                    return Err(RewardError::InvalidSpec("endpoint url is empty".into()));
                }
                if endpoint.timeout_secs.is_nan() || endpoint.timeout_secs <= 0.0 {
                    return Err(RewardError::InvalidSpec("endpoint timeout must be positive".into()));
                }
                Ok(())
            }
            RewardSource::Interactive => Ok(()),
        }
    }

    pub fn is_comparison(&self) -> bool {
        matches!(self, RewardSource::Comparison { .. })
    }

    /// Scores the clean previews of one step's candidates. Comparison sources
    /// return `+1/-1` labels; `stream` seeds pivots and judge noise.
    pub fn score_previews(
        &self,
        previews: &[State],
        meta: RequestMeta,
        stream: SeedPath,
    ) -> Result<Scored, RewardError> {
        match self {
            RewardSource::ClosedForm { spec } => {
                let estimates = previews.iter().map(|p| spec.eval(p)).collect::<Result<Vec<_>, _>>()?;
                Ok(Scored { queries: estimates.len(), estimates, comparisons: None })
            }
            RewardSource::External { endpoint } => {
                let estimates = endpoint.score(previews, meta)?;
                Ok(Scored { queries: estimates.len(), estimates, comparisons: None })
            }
            RewardSource::Comparison { comparator } => {
                let mut pivots = stream.child(0).rng();
                let mut noise = stream.child(1).rng();
                let outcome = match comparator {
                    ComparatorSource::Judge { judge } => {
                        let mut cmp = |a: usize, b: usize| judge.prefers(&previews[a], &previews[b], &mut noise);
                        partition_top(previews.len(), &mut cmp, &mut pivots)?
                    }
                    ComparatorSource::External { endpoint } => {
                        let mut cmp =
                            |a: usize, b: usize| endpoint.compare(&previews[a], &previews[b], meta).map(|p| p == 0);
                        partition_top(previews.len(), &mut cmp, &mut pivots)?
                    }
                };
                Ok(Scored {
                    estimates: outcome.labels(previews.len()),
                    queries: outcome.comparisons.len(),
                    comparisons: Some(outcome.comparisons),
                })
            }
            RewardSource::Interactive => Err(RewardError::Unsupported(
                "interactive rewards are only available through the steering service".into(),
            )),
        }
    }

    /// Reward of a finished sample, when the source yields scalars.
    pub fn final_reward(&self, x: &State, meta: RequestMeta) -> Result<Option<f64>, RewardError> {
        match self {
            RewardSource::ClosedForm { spec } => spec.eval(x).map(Some),
            RewardSource::External { endpoint } => Ok(endpoint.score(std::slice::from_ref(x), meta)?.first().copied()),
            RewardSource::Comparison { .. } | RewardSource::Interactive => Ok(None),
        }
    }
}
