//! Success metrics over episode records.

use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::planner::EpisodeRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Episodes counted in the rates (infrastructure failures excluded).
    pub evaluated: usize,
    pub infra_failures: usize,
    pub successes: usize,
    pub task_success_rate: f64,
    pub avg_subgoal_success_rate: f64,
    pub avg_steps: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no evaluated episodes ({infra_failures} infrastructure failures)")]
    NoEvaluatedEpisodes { infra_failures: usize },
}

pub fn compute_metrics<'a, I>(episodes: I) -> Result<Metrics, MetricsError>
where
    I: IntoIterator<Item = &'a EpisodeRecord>,
{
    let (mut n, mut infra, mut succ, mut subgoal, mut steps) =
        (0usize, 0usize, 0usize, 0.0f64, 0usize);
    for e in episodes {
        if e.is_infra_failure() {
            infra += 1;
            continue;
        }
        n += 1;
        succ += usize::from(e.goal_report.success);
        subgoal += e.goal_report.subgoal_rate();
        steps += e.steps();
    }
    if n == 0 {
        return Err(MetricsError::NoEvaluatedEpisodes {
            infra_failures: infra,
        });
    }
    Ok(Metrics {
        evaluated: n,
        infra_failures: infra,
        successes: succ,
        task_success_rate: succ as f64 / n as f64,
        avg_subgoal_success_rate: subgoal / n as f64,
        avg_steps: steps as f64 / n as f64,
    })
}

/// Metrics grouped by a key such as the task type. Groups with only infrastructure
/// failures are omitted.
pub fn metrics_by<'a, I, F>(episodes: I, key: F) -> BTreeMap<String, Metrics>
where
    I: IntoIterator<Item = &'a EpisodeRecord>,
    F: Fn(&EpisodeRecord) -> String,
{
    let mut groups: BTreeMap<String, alloc::vec::Vec<&EpisodeRecord>> = BTreeMap::new();
    for e in episodes {
        groups.entry(key(e)).or_default().push(e);
    }
    groups
        .into_iter()
        .filter_map(|(k, v)| compute_metrics(v).ok().map(|m| (k, m)))
        .collect()
}
