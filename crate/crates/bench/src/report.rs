//! Benchmark reports: JSON, CSV, markdown and step traces.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use lota_core::metrics::{compute_metrics, metrics_by, Metrics, MetricsError};
use lota_core::planner::EpisodeRecord;
use lota_core::scorer::CallStats;
use lota_core::task::TaskType;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::runner::{RunConfig, RunError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub task_type: TaskType,
    #[serde(flatten)]
    pub record: EpisodeRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config_fingerprint: String,
    pub config: RunConfig,
    pub metrics: Metrics,
    pub by_task_type: BTreeMap<String, Metrics>,
    pub call_stats: CallStats,
    pub episodes: Vec<EpisodeRow>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// SHA-256 over the serialized config and the digests of every input file.
pub fn fingerprint(config: &RunConfig, digests: &[String]) -> String {
    let mut text = serde_json::to_string(config).expect("config serializes");
    for d in digests {
        text.push('\n');
        text.push_str(d);
    }
    sha256_hex(text.as_bytes())
}

impl BenchmarkReport {
    pub fn assemble(
        config: &RunConfig,
        config_fingerprint: String,
        episodes: Vec<EpisodeRow>,
    ) -> Result<Self, RunError> {
        let metrics = compute_metrics(episodes.iter().map(|e| &e.record)).map_err(
            |MetricsError::NoEvaluatedEpisodes { infra_failures }| {
                RunError::AllInfra(infra_failures)
            },
        )?;
        let types: BTreeMap<&str, TaskType> = episodes
            .iter()
            .map(|e| (e.record.task_id.as_str(), e.task_type))
            .collect();
        let by_task_type = metrics_by(episodes.iter().map(|e| &e.record), |r| {
            types[r.task_id.as_str()].name().to_string()
        });
        let call_stats = episodes.iter().fold(CallStats::default(), |mut acc, e| {
            acc.add(&e.record.call_stats);
            acc
        });
        Ok(BenchmarkReport {
            config_fingerprint,
            config: config.clone(),
            metrics,
            by_task_type,
            call_stats,
            episodes,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# config_fingerprint={}\n", self.config_fingerprint);
        s.push_str("task_id,task_type,success,subgoal_rate,steps,termination\n");
        for e in &self.episodes {
            let r = &e.record;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                csv_field(&r.task_id),
                csv_field(e.task_type.name()),
                r.goal_report.success,
                r.goal_report.subgoal_rate(),
                r.steps(),
                r.termination.name()
            );
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let m = &self.metrics;
        let mut s = String::from("# Benchmark report\n\n");
        let _ = writeln!(s, "Config fingerprint: `{}`\n", self.config_fingerprint);
        let _ = writeln!(
            s,
            "Mode `{}`, scorer `{}`, strategy `{}` with {} examples, seed {}, replanning {}.\n",
            self.config.mode.name(),
            self.config.scorer,
            self.config.strategy.name(),
            self.config.n_examples,
            self.config.seed,
            if self.config.replanning { "on" } else { "off" }
        );
        s.push_str(
            "| Task type | Episodes | Successes | Success rate | Avg subgoal rate | Avg steps |\n",
        );
        s.push_str("|---|---:|---:|---:|---:|---:|\n");
        let row = |s: &mut String, name: &str, m: &Metrics| {
            let _ = writeln!(
                s,
                "| {name} | {} | {} | {:.3} | {:.3} | {:.2} |",
                m.evaluated,
                m.successes,
                m.task_success_rate,
                m.avg_subgoal_success_rate,
                m.avg_steps
            );
        };
        for (name, tm) in &self.by_task_type {
            row(&mut s, name, tm);
        }
        row(&mut s, "**All**", m);
        let c = &self.call_stats;
        let _ = writeln!(
            s,
            "\nInfrastructure failures: {}. Scorer calls: {} logprob ({} tokens scored), {} skill scorings, {} generate.",
            m.infra_failures, c.n_logprob_calls, c.n_tokens_scored, c.n_skill_scorings, c.n_generate_calls
        );
        s
    }

    /// One JSON object per executed step.
    pub fn to_trace_jsonl(&self) -> String {
        let mut s = String::new();
        for e in &self.episodes {
            for t in &e.record.trace {
                let line = serde_json::json!({ "task_id": e.record.task_id, "trace": t });
                s.push_str(&line.to_string());
                s.push('\n');
            }
        }
        s
    }

    /// Writes `report.json`, `episodes.csv`, `report.md` and optionally `trace.jsonl`.
    pub fn write_to(&self, dir: &Path, trace: bool) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut files = vec![
            (dir.join("report.json"), self.to_json()),
            (dir.join("episodes.csv"), self.to_csv()),
            (dir.join("report.md"), self.to_markdown()),
        ];
        if trace {
            files.push((dir.join("trace.jsonl"), self.to_trace_jsonl()));
        }
        for (p, body) in &files {
            fs::write(p, body)?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
