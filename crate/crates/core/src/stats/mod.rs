//! Statistics over classified faces: per-member demographic aggregation,
//! geography joins, least squares (pooled and within-group), rank tests,
//! confidence intervals, box-plot summaries, and the experiment tables.

mod demographics;
mod experiment;
mod interval;
mod regress;
mod ranktest;

pub use demographics::{
    aggregate_demographics, join_acs, AnalysisRow, DistrictDemographics,
    MemberPhotoDemographics,
};
pub use experiment::{experiment_table, ExperimentResponse, GroupComparison, OutcomeTable, ARMS};
pub use interval::{boxplot_stats, mean_ci, proportion_ci, BoxplotSummary};
pub use regress::{ols, ols_fixed_effects, Column, RegressionResult};
pub use ranktest::wilcoxon_rank_sum;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("{0}")]
    Validation(String),
    #[error("column `{column}` is collinear with the preceding regressors")]
    Collinear { column: String },
    #[error("{0}")]
    Unidentified(String),
    #[error("{0}")]
    InsufficientData(String),
    #[error("classified face references unknown member `{member_id}`")]
    UnknownMember { member_id: String },
    #[error("no district demographics for: {}", members.join(", "))]
    MissingGeography { members: Vec<String> },
    #[error("unknown treatment arm `{arm}`")]
    UnknownArm { arm: String },
}
