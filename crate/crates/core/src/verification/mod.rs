//! Monte-Carlo ground truth for the reward estimate and numerical checks of
//! the method's analytical claims.

mod curves;
mod equivalence;
mod judged;
mod lemma1;
mod lemma3;
mod lemma4;
mod martingale;
mod mc;
mod mechanism;
mod report;
mod sphere;
mod spread;
mod suites;

pub use curves::{improvement_curves, planned_score_evals, steps_within, CurvePoint, CurveResults, CurveSettings};
pub use equivalence::{distribution_equivalence, energy_permutation_test, kolmogorov_tail, ks_two_sample};
pub use judged::{comparison_pipeline_check, partition_check, welch_one_sided, JudgedSettings};
pub use lemma1::{lemma1_residual, Lemma1Settings};
pub use lemma3::{lemma3_check, Lemma3Settings};
pub use lemma4::{lemma4_check, Lemma4Settings};
pub use martingale::{martingale_check, NestedSettings};
pub use mc::{mc_on_grid, mc_reward_estimate, path_grid, sde_endpoint, sde_path, McEstimate, McSettings};
pub use mechanism::tanh_mechanism_check;
pub use report::{reports_to_csv, LemmaReport, Relation};
pub use sphere::{default_band, sphere_concentration};
pub use spread::{estimator_spread_table, spread_report, SpreadRow, SpreadSettings};
pub use suites::{
    curves_suite, lemma1_suite, lemma4_suite, lemma5_suite, nested_suite, run_suite, spread_suite, Suite, SuiteOptions,
    SuiteOutput,
};
