//! Treatment-arm summary tables for the image experiment.

use super::{mean_ci, proportion_ci, wilcoxon_rank_sum, StatsError};
use crate::corpus::TableRow;

/// The recognized treatment arms, in presentation order: the politician
/// alone, then posing with one person of each race and gender combination.
pub const ARMS: [&str; 7] = [
    "control",
    "white_man",
    "white_woman",
    "black_man",
    "black_woman",
    "hispanic_man",
    "hispanic_woman",
];

/// Outcomes summarized per arm, in output order. `party_guess` is a 0/1
/// indicator (guessed Democrat); the rest are agreement ratings.
const OUTCOMES: [&str; 5] = [
    "party_guess",
    "shares_values",
    "trustworthy",
    "strong_leader",
    "knowledgeable",
];

/// One survey response.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResponse {
    pub respondent_id: String,
    pub arm: String,
    /// 1 when the respondent guessed the politician is a Democrat.
    pub party_guess: u8,
    pub shares_values: f64,
    pub trustworthy: f64,
    pub strong_leader: f64,
    pub knowledgeable: f64,
    pub respondent_race: String,
}

impl TableRow for ExperimentResponse {
    const COLUMNS: &'static [&'static str] = &[
        "respondent_id",
        "arm",
        "party_guess",
        "shares_values",
        "trustworthy",
        "strong_leader",
        "knowledgeable",
        "respondent_race",
    ];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.respondent_id.clone(),
            self.arm.clone(),
            self.party_guess.to_string(),
            self.shares_values.to_string(),
            self.trustworthy.to_string(),
            self.strong_leader.to_string(),
            self.knowledgeable.to_string(),
            self.respondent_race.clone(),
        ]
    }

    fn from_fields(fields: &[String]) -> Result<Self, String> {
        fn num<T: std::str::FromStr>(name: &str, raw: &str) -> Result<T, String> {
            raw.parse()
                .map_err(|_| format!("bad value `{raw}` for column `{name}`"))
        }
        let party_guess: u8 = num("party_guess", &fields[2])?;
        if party_guess > 1 {
            return Err(format!(
                "column `party_guess` must be 0 or 1, got {party_guess}"
            ));
        }
        Ok(ExperimentResponse {
            respondent_id: fields[0].clone(),
            arm: fields[1].clone(),
            party_guess,
            shares_values: num("shares_values", &fields[3])?,
            trustworthy: num("trustworthy", &fields[4])?,
            strong_leader: num("strong_leader", &fields[5])?,
            knowledgeable: num("knowledgeable", &fields[6])?,
            respondent_race: fields[7].clone(),
        })
    }
}

/// One arm's summary for one outcome. `mean` is a proportion for the
/// party-guess outcome and a rating average otherwise; `wilcoxon_p` is the
/// rank-sum p against the control arm, absent for the control row itself,
/// for proportion outcomes, and when no control responses exist.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupComparison {
    pub group: String,
    pub n: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub wilcoxon_p: Option<f64>,
}

/// All arm summaries for one outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeTable {
    pub outcome: String,
    pub groups: Vec<GroupComparison>,
}

/// Summarizes every outcome per treatment arm: n, point estimate, 95%
/// interval, and for the rating outcomes a rank-sum p-value against
/// control. Arms appear in [`ARMS`] order; arms with no responses are
/// omitted. An arm label outside [`ARMS`] is an error.
pub fn experiment_table(rows: &[ExperimentResponse]) -> Result<Vec<OutcomeTable>, StatsError> {
    if rows.is_empty() {
        return Err(StatsError::Validation("no responses".into()));
    }
    for row in rows {
        if !ARMS.contains(&row.arm.as_str()) {
            return Err(StatsError::UnknownArm {
                arm: row.arm.clone(),
            });
        }
    }
    let by_arm: Vec<(&str, Vec<&ExperimentResponse>)> = ARMS
        .iter()
        .map(|&arm| (arm, rows.iter().filter(|r| r.arm == arm).collect::<Vec<_>>()))
        .filter(|(_, group)| !group.is_empty())
        .collect();

    OUTCOMES
        .iter()
        .map(|&outcome| {
            let groups = by_arm
                .iter()
                .map(|(arm, responses)| {
                    summarize(outcome, arm, responses, &by_arm)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(OutcomeTable {
                outcome: outcome.to_string(),
                groups,
            })
        })
        .collect()
}

fn summarize(
    outcome: &str,
    arm: &str,
    responses: &[&ExperimentResponse],
    by_arm: &[(&str, Vec<&ExperimentResponse>)],
) -> Result<GroupComparison, StatsError> {
    let n = responses.len();
    if outcome == "party_guess" {
        let k = responses.iter().filter(|r| r.party_guess == 1).count();
        let (mean, ci_low, ci_high) = proportion_ci(k, n, 0.95)?;
        return Ok(GroupComparison {
            group: arm.to_string(),
            n,
            mean,
            ci_low,
            ci_high,
            wilcoxon_p: None,
        });
    }
    let rating = |r: &ExperimentResponse| match outcome {
        "shares_values" => r.shares_values,
        "trustworthy" => r.trustworthy,
        "strong_leader" => r.strong_leader,
        "knowledgeable" => r.knowledgeable,
        other => unreachable!("outcome {other}"),
    };
    let values: Vec<f64> = responses.iter().map(|r| rating(r)).collect();
    let (mean, ci_low, ci_high) = mean_ci(&values, 0.95)?;
    let wilcoxon_p = if arm == "control" {
        None
    } else {
        by_arm
            .iter()
            .find(|(a, _)| *a == "control")
            .map(|(_, control)| {
                let control_values: Vec<f64> = control.iter().map(|r| rating(r)).collect();
                wilcoxon_rank_sum(&control_values, &values).map(|(_, p)| p)
            })
            .transpose()?
    };
    Ok(GroupComparison {
        group: arm.to_string(),
        n,
        mean,
        ci_low,
        ci_high,
        wilcoxon_p,
    })
}
