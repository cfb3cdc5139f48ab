use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};

use lota_bench::cli::{bundled_resources, mock_corpus};
use lota_bench::dataset::{desk_dataset, golden_script};
use lota_bench::report::{fingerprint, sha256_hex};
use lota_bench::runner::{run_benchmark, sample_tasks, CachedEmbedder, RunConfig};
use lota_bench::BenchmarkReport;
use lota_core::scorer::{
    Embedder, LogProbs, MockScorer, Scorer, ScorerError, ScorerInfo, TokenSequence,
};
use lota_core::TokenId;
use proptest::prelude::*;

fn golden_report(cfg: &RunConfig) -> BenchmarkReport {
    let tasks = desk_dataset();
    let resources = bundled_resources(None);
    let mock = MockScorer::new(
        golden_script(&tasks).unwrap(),
        &mock_corpus(&tasks, &resources),
    )
    .unwrap();
    run_benchmark(&tasks, &resources, &mock, cfg).unwrap()
}

#[test]
fn sha256_reference_vector() {
    assert_eq!(
        sha256_hex(b"abc"),
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    );
}

#[test]
fn fingerprint_ignores_execution_settings() {
    let base = RunConfig::new("bundled:desk", "mock:uniform");
    let digests = vec![sha256_hex(b"data")];
    let fp = fingerprint(&base, &digests);
    let mut other = base.clone();
    other.parallelism = 8;
    other.trace = true;
    other.out = Some("elsewhere".into());
    assert_eq!(fingerprint(&other, &digests), fp);

    let mut seeded = base.clone();
    seeded.seed = 1;
    assert_ne!(fingerprint(&seeded, &digests), fp);
    assert_ne!(fingerprint(&base, &[sha256_hex(b"other data")]), fp);
}

#[test]
fn report_round_trips_and_renders() {
    let mut cfg = RunConfig::new("bundled:desk", "mock:golden");
    cfg.sample_fraction = 0.5;
    let report = golden_report(&cfg);
    assert_eq!(report.episodes.len(), 11);
    let back: BenchmarkReport = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back.to_json(), report.to_json());

    let csv = report.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        format!("# config_fingerprint={}", report.config_fingerprint)
    );
    assert_eq!(
        lines[1],
        "task_id,task_type,success,subgoal_rate,steps,termination"
    );
    assert_eq!(lines.len(), 13);
    assert!(lines[2..]
        .iter()
        .all(|l| l.ends_with(",done_token") && l.contains(",true,1,")));

    let md = report.to_markdown();
    assert!(md.starts_with("# Benchmark report"));
    assert!(md.contains("**All**"));
    let steps: usize = report.episodes.iter().map(|e| e.record.steps()).sum();
    assert_eq!(report.to_trace_jsonl().lines().count(), steps);
}

#[test]
fn csv_quotes_fields_with_separators() {
    let mut report = golden_report(&RunConfig {
        sample_fraction: 0.1,
        ..RunConfig::new("bundled:desk", "mock")
    });
    report.episodes[0].record.task_id = "odd,\"id\"".into();
    assert!(report
        .to_csv()
        .lines()
        .nth(2)
        .unwrap()
        .starts_with("\"odd,\"\"id\"\"\","));
}

#[test]
fn write_to_creates_every_format() {
    let dir = tempfile::tempdir().unwrap();
    let report = golden_report(&RunConfig {
        sample_fraction: 0.1,
        ..RunConfig::new("bundled:desk", "mock")
    });
    let written = report.write_to(dir.path(), true).unwrap();
    let names: BTreeSet<String> = written
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    for f in ["report.json", "episodes.csv", "report.md", "trace.jsonl"] {
        assert!(names.contains(f), "{f}");
    }
    assert_eq!(report.write_to(dir.path(), false).unwrap().len(), 3);
}

struct Counting {
    inner: MockScorer,
    texts: AtomicUsize,
}

impl Scorer for Counting {
    fn info(&self) -> Result<ScorerInfo, ScorerError> {
        self.inner.info()
    }
    fn tokenize(&self, text: &str) -> Result<TokenSequence, ScorerError> {
        self.inner.tokenize(text)
    }
    fn next_token_logprobs(
        &self,
        ids: &[TokenId],
        allowed: Option<&[TokenId]>,
    ) -> Result<LogProbs, ScorerError> {
        self.inner.next_token_logprobs(ids, allowed)
    }
    fn generate(
        &self,
        prompt: &str,
        stop: &[String],
        max_tokens: usize,
    ) -> Result<String, ScorerError> {
        self.inner.generate(prompt, stop, max_tokens)
    }
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ScorerError> {
        self.texts.fetch_add(texts.len(), Ordering::SeqCst);
        self.inner.embed(texts)
    }
}

#[test]
fn cached_embedder_embeds_each_text_once() {
    let scorer = Counting {
        inner: MockScorer::uniform(&["a b c"]),
        texts: AtomicUsize::new(0),
    };
    let cache = CachedEmbedder::new(&scorer);
    let texts: Vec<String> = ["a", "b", "a"].iter().map(|s| s.to_string()).collect();
    let first = cache.embed(&texts).unwrap();
    assert_eq!(scorer.texts.load(Ordering::SeqCst), 2);
    assert_eq!(first[0], first[2]);
    let again = cache.embed(&["b".into(), "c".into()]).unwrap();
    assert_eq!(scorer.texts.load(Ordering::SeqCst), 3);
    assert_eq!(again[0], first[1]);
}

proptest! {
    #[test]
    fn sampling_is_a_sorted_seeded_subset(n in 0usize..200, fraction in 0.001f64..=1.0, seed in any::<u64>()) {
        let s = sample_tasks(n, fraction, seed);
        prop_assert_eq!(&s, &sample_tasks(n, fraction, seed));
        let expected = if n == 0 { 0 } else { ((fraction * n as f64).ceil() as usize).clamp(1, n) };
        prop_assert_eq!(s.len(), expected);
        prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.iter().all(|&i| i < n));
    }
}
