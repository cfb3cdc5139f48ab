//! Client-side conformance checks for a scorer service.

use std::fmt;

use lota_core::scorer::{log_sum_exp, Scorer, ScorerError};
use reqwest::StatusCode;

use crate::remote::RemoteScorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub outcome: Outcome,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skip => "SKIP",
        };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

fn check(name: &'static str, r: Result<String, String>) -> Check {
    match r {
        Ok(detail) => Check {
            name,
            outcome: Outcome::Pass,
            detail,
        },
        Err(detail) => Check {
            name,
            outcome: Outcome::Fail,
            detail,
        },
    }
}

const ROUND_TRIP: [&str; 5] = [
    "",
    "Robot: 1. find an apple, 2.",
    "Human: Put a spoon in the sink.\nRobot:",
    "  two  spaces\tand tab",
    "héllo wörld ☕ 家",
];

/// Runs every check against `url`. Connection failure yields a single failed check.
pub fn run_suite(url: &str, token: Option<String>) -> Vec<Check> {
    let s = match RemoteScorer::connect(url, token) {
        Ok(s) => s,
        Err(e) => return vec![check("connect+info", Err(e.to_string()))],
    };
    let mut out = Vec::new();

    out.push(check(
        "info schema",
        s.info().map_err(|e| e.to_string()).map(|i| {
            format!(
                "model {:?}, vocab {}, context {}",
                i.model, i.vocab_size, i.max_context
            )
        }),
    ));

    out.push(check(
        "healthz",
        match s.health() {
            Ok((StatusCode::OK, body)) if body.trim() == "ok" => Ok("200 ok".into()),
            Ok((st, body)) => Err(format!("{st} {body:?}")),
            Err(e) => Err(e.to_string()),
        },
    ));

    out.push(check(
        "tokenize round-trip",
        (|| {
            for text in ROUND_TRIP {
                let t = s.tokenize(text).map_err(|e| e.to_string())?;
                if t.text() != text {
                    return Err(format!("{text:?} came back as {:?}", t.text()));
                }
                if text.is_empty() && !t.is_empty() {
                    return Err("empty text produced tokens".into());
                }
            }
            Ok(format!("{} texts", ROUND_TRIP.len()))
        })(),
    ));

    let prompt = s
        .tokenize("Human: Put a spoon in the sink.\nRobot: 1.")
        .map(|t| t.ids)
        .unwrap_or_default();
    out.push(check(
        "full-vocab logsumexp",
        (|| {
            let all = s
                .next_token_logprobs(&prompt, None)
                .map_err(|e| e.to_string())?;
            let vocab = s.info().map_err(|e| e.to_string())?.vocab_size;
            if all.len() != vocab {
                return Err(format!("{} entries for vocab {vocab}", all.len()));
            }
            let lse = log_sum_exp(all.values().copied());
            if lse.abs() > 1e-3 {
                return Err(format!("logsumexp = {lse}"));
            }
            Ok(format!("logsumexp = {lse:.2e}"))
        })(),
    ));

    out.push(check(
        "allowed_ids key-exactness",
        (|| {
            let vocab = s.info().map_err(|e| e.to_string())?.vocab_size as u32;
            let ids = [0, vocab / 3, vocab / 2, vocab - 1];
            let some = s
                .next_token_logprobs(&prompt, Some(&ids))
                .map_err(|e| e.to_string())?;
            let all = s
                .next_token_logprobs(&prompt, None)
                .map_err(|e| e.to_string())?;
            for id in ids {
                let (a, b) = (some[&id], all[&id]);
                if (a - b).abs() > 1e-6 {
                    return Err(format!("id {id}: restricted {a} vs full {b}"));
                }
            }
            Ok(format!("{} ids, unrenormalized", some.len()))
        })(),
    ));

    out.push(
        match s.generate(
            "Human: Put a spoon in the sink.\nRobot:",
            &["\n".into()],
            32,
        ) {
            Err(ScorerError::Unavailable {
                status: Some(501), ..
            })
            | Err(ScorerError::Unsupported(_)) => Check {
                name: "generate determinism",
                outcome: Outcome::Skip,
                detail: "generate not supported".into(),
            },
            first => check(
                "generate determinism",
                (|| {
                    let a = first.map_err(|e| e.to_string())?;
                    let b = s
                        .generate(
                            "Human: Put a spoon in the sink.\nRobot:",
                            &["\n".into()],
                            32,
                        )
                        .map_err(|e| e.to_string())?;
                    if a != b {
                        return Err(format!("{a:?} != {b:?}"));
                    }
                    Ok(format!("{a:?}"))
                })(),
            ),
        },
    );

    out.push(check(
        "embed unit norm",
        (|| {
            let texts = vec!["put the apple in the fridge".to_string(), String::new()];
            let v = s.embed(&texts).map_err(|e| e.to_string())?;
            for (t, e) in texts.iter().zip(&v) {
                let n: f64 = e.iter().map(|x| x * x).sum::<f64>().sqrt();
                if (n - 1.0).abs() > 1e-6 {
                    return Err(format!("{t:?}: norm {n}"));
                }
            }
            Ok(format!("dim {}", v[0].len()))
        })(),
    ));

    out.push(check(
        "malformed body",
        (|| {
            let (status, body) = s
                .raw_post("/v1/logprobs", "{\"prompt\": ")
                .map_err(|e| e.to_string())?;
            if status != StatusCode::BAD_REQUEST
                || body.get("error").and_then(|e| e.as_str()).is_none()
            {
                return Err(format!("{status} {body}"));
            }
            Ok("400 with error".into())
        })(),
    ));

    out
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.outcome != Outcome::Fail)
}
