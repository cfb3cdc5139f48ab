//! The `lota` command line.

use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use lota_core::examples::Strategy;
use lota_core::planner::{Mode, DEFAULT_MAX_STEPS, DEFAULT_PREFIX, REPLAN_PREFIX, SKILL_LIST_LEAD};
use lota_core::scorer::{MockScorer, MockScript, Scorer};
use lota_core::task::{finetune_records, TaskSpec, FINETUNE_PREFIX};
use lota_core::ProfileKind;
use serde::Deserialize;

use crate::dataset::{self, DatasetError};
use crate::remote::{RemoteScorer, ENV_TOKEN, ENV_URL};
use crate::report::sha256_hex;
use crate::runner::{run_benchmark, Resources, RunConfig, RunError, ScorerSpec};
use crate::{conformance, server};

#[derive(Debug, Parser)]
#[command(
    name = "lota",
    version,
    about = "Benchmark language-model task planners on symbolic household tasks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan and execute every task, then write reports.
    Run(RunArgs),
    /// Validate a dataset, golden plans included.
    Lint(DataArgs),
    /// Write golden plans as instruction-following training records.
    ExportFinetune {
        #[command(flatten)]
        data: DataArgs,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the skill surfaces of one task.
    Skills {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        task: String,
    },
    /// Write a mock script that replays the golden plans.
    MakeScript {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve a mock scorer over HTTP.
    ServeMock {
        /// Script file, or `uniform`.
        #[arg(long, default_value = "uniform")]
        script: String,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "127.0.0.1:8377")]
        addr: SocketAddr,
    },
    /// Check a scorer service against the wire protocol.
    Conformance {
        #[arg(long, env = ENV_URL)]
        url: String,
        #[arg(long, env = ENV_TOKEN, hide_env_values = true)]
        token: Option<String>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Dataset file; the bundled desk set when omitted.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Skill allow-list restricting ALFRED-profile skill sets.
    #[arg(long)]
    pub allow_list: Option<PathBuf>,
}

/// Run options. Every flag can also be set in a TOML file under the same name.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunArgs {
    /// TOML file with run options; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub allow_list: Option<PathBuf>,
    /// Only run tasks of this profile.
    #[arg(long)]
    pub profile: Option<ProfileKind>,
    /// greedy, full or generative.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// mock:uniform, mock:<script.json> or remote:<url>; defaults to remote at $LOTA_SCORER_URL.
    #[arg(long)]
    pub scorer: Option<String>,
    /// random, task_specific or semantic.
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub n_examples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Feed step failures back into the prompt and show replanning examples.
    #[arg(long)]
    pub replanning: bool,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub sample_fraction: Option<f64>,
    #[arg(long)]
    pub instruction_index: Option<usize>,
    #[arg(long)]
    pub alfred_pool: Option<PathBuf>,
    #[arg(long)]
    pub wah_pool: Option<PathBuf>,
    #[arg(long)]
    pub replanning_examples: Option<PathBuf>,
    /// Output directory for the reports.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a per-step trace.
    #[arg(long)]
    pub trace: bool,
}

impl RunArgs {
    /// Fills options missing from the command line with those of `file`.
    pub fn merge(self, file: RunArgs) -> RunArgs {
        RunArgs {
            config: self.config,
            dataset: self.dataset.or(file.dataset),
            allow_list: self.allow_list.or(file.allow_list),
            profile: self.profile.or(file.profile),
            mode: self.mode.or(file.mode),
            scorer: self.scorer.or(file.scorer),
            strategy: self.strategy.or(file.strategy),
            n_examples: self.n_examples.or(file.n_examples),
            seed: self.seed.or(file.seed),
            replanning: self.replanning || file.replanning,
            max_steps: self.max_steps.or(file.max_steps),
            parallelism: self.parallelism.or(file.parallelism),
            sample_fraction: self.sample_fraction.or(file.sample_fraction),
            instruction_index: self.instruction_index.or(file.instruction_index),
            alfred_pool: self.alfred_pool.or(file.alfred_pool),
            wah_pool: self.wah_pool.or(file.wah_pool),
            replanning_examples: self.replanning_examples.or(file.replanning_examples),
            out: self.out.or(file.out),
            trace: self.trace || file.trace,
        }
    }
}

pub fn default_examples(strategy: Strategy) -> usize {
    match strategy {
        Strategy::Random => 1,
        Strategy::TaskSpecific => 2,
        Strategy::Semantic => 5,
    }
}

fn path_name(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

/// Dataset text and its origin name.
fn dataset_text(path: Option<&Path>) -> Result<(String, String), DatasetError> {
    match path {
        Some(p) => Ok((dataset::read(p)?, p.display().to_string())),
        None => Ok((dataset::DESK_DATASET.to_string(), "bundled:desk".into())),
    }
}

type AllowList = Vec<(usize, String)>;

fn load_tasks(data: &DataArgs) -> Result<(Vec<TaskSpec>, Option<AllowList>), DatasetError> {
    let allow = data
        .allow_list
        .as_deref()
        .map(dataset::load_allow_list)
        .transpose()?;
    let (text, origin) = dataset_text(data.dataset.as_deref())?;
    let tasks = dataset::parse_dataset(&text, &origin, allow.as_deref())?;
    Ok((tasks, allow))
}

/// Bundled pools and replanning examples.
pub fn bundled_resources(allow_list: Option<Vec<(usize, String)>>) -> Resources {
    Resources {
        pools: [ProfileKind::Alfred, ProfileKind::Wah]
            .into_iter()
            .map(|k| (k, dataset::bundled_pool(k)))
            .collect(),
        replanning_examples: dataset::bundled_replan_examples(),
        allow_list,
        digests: Vec::new(),
    }
}

/// Every text the planner may show a mock, so its vocabulary covers whole words.
pub fn mock_corpus(tasks: &[TaskSpec], resources: &Resources) -> Vec<String> {
    let mut corpus = vec![
        DEFAULT_PREFIX.to_string(),
        REPLAN_PREFIX.to_string(),
        SKILL_LIST_LEAD.to_string(),
    ];
    for t in tasks {
        corpus.extend(t.instructions.iter().cloned());
        if let Ok(skills) = t.skill_set(resources.allow_list.as_deref()) {
            corpus.extend(skills.surfaces().iter().cloned());
        }
    }
    for pool in resources.pools.values() {
        for e in &pool.entries {
            corpus.push(e.instruction.clone());
            corpus.extend(e.plan.iter().cloned());
        }
    }
    for r in &resources.replanning_examples {
        corpus.push(r.instruction.clone());
        corpus.push(r.robot.clone());
    }
    corpus
}

fn build_scorer(
    spec: &ScorerSpec,
    corpus: &[String],
    digests: &mut Vec<String>,
) -> Result<Box<dyn Scorer + Send + Sync>, RunError> {
    Ok(match spec {
        ScorerSpec::MockUniform => Box::new(MockScorer::uniform(corpus)),
        ScorerSpec::Mock(path) => {
            digests.push(sha256_hex(dataset::read(path)?.as_bytes()));
            let script = dataset::load_script(path)?;
            Box::new(MockScorer::new(script, corpus).map_err(|e| RunError::Config(e.to_string()))?)
        }
        ScorerSpec::Remote(url) => {
            let token = std::env::var(ENV_TOKEN).ok();
            Box::new(
                RemoteScorer::connect(url, token).map_err(|e| RunError::Config(e.to_string()))?,
            )
        }
    })
}

/// Resolves flags, config file and defaults, then runs the benchmark and writes reports.
pub fn run(args: RunArgs) -> Result<crate::BenchmarkReport, RunError> {
    let args = match &args.config {
        Some(path) => {
            let text = dataset::read(path)?;
            let file: RunArgs = toml::from_str(&text)
                .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
            args.merge(file)
        }
        None => args,
    };
    let scorer_text = match (&args.scorer, std::env::var(ENV_URL)) {
        (Some(s), _) => s.clone(),
        (None, Ok(url)) => format!("remote:{url}"),
        (None, Err(_)) => {
            return Err(RunError::Config(format!(
                "no scorer given and ${ENV_URL} is unset"
            )))
        }
    };
    let spec: ScorerSpec = scorer_text.parse().map_err(RunError::Config)?;
    let strategy = args.strategy.unwrap_or(Strategy::Random);
    let (dataset_text, dataset_origin) = dataset_text(args.dataset.as_deref())?;
    let mut config = RunConfig::new(&dataset_origin, &spec.to_string());
    config.profile = args.profile;
    config.mode = args.mode.unwrap_or(Mode::Greedy);
    config.strategy = strategy;
    config.n_examples = args
        .n_examples
        .unwrap_or_else(|| default_examples(strategy));
    config.seed = args.seed.unwrap_or(0);
    config.replanning = args.replanning;
    config.max_steps = args.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
    config.sample_fraction = args.sample_fraction.unwrap_or(1.0);
    config.instruction_index = args.instruction_index.unwrap_or(0);
    config.alfred_pool = path_name(&args.alfred_pool);
    config.wah_pool = path_name(&args.wah_pool);
    config.replanning_examples = path_name(&args.replanning_examples);
    config.allow_list = path_name(&args.allow_list);
    config.parallelism = args.parallelism.unwrap_or(1);
    config.out = args.out.clone();
    config.trace = args.trace;

    let mut resources = Resources::default();
    let mut digests = vec![sha256_hex(dataset_text.as_bytes())];
    if let Some(p) = &args.allow_list {
        digests.push(sha256_hex(dataset::read(p)?.as_bytes()));
        resources.allow_list = Some(dataset::load_allow_list(p)?);
    }
    let tasks = dataset::parse_dataset(
        &dataset_text,
        &dataset_origin,
        resources.allow_list.as_deref(),
    )?;
    for (kind, path) in [
        (ProfileKind::Alfred, &args.alfred_pool),
        (ProfileKind::Wah, &args.wah_pool),
    ] {
        let pool = match path {
            Some(p) => {
                digests.push(sha256_hex(dataset::read(p)?.as_bytes()));
                dataset::load_pool(p, kind)?
            }
            None => dataset::bundled_pool(kind),
        };
        resources.pools.insert(kind, pool);
    }
    resources.replanning_examples = match &args.replanning_examples {
        Some(p) => {
            let text = dataset::read(p)?;
            digests.push(sha256_hex(text.as_bytes()));
            dataset::parse_replan_examples(&text, &p.display().to_string())?
        }
        None => dataset::bundled_replan_examples(),
    };
    let corpus = mock_corpus(&tasks, &resources);
    let scorer = build_scorer(&spec, &corpus, &mut digests)?;
    resources.digests = digests;
    let report = run_benchmark(&tasks, &resources, scorer.as_ref(), &config)?;
    if let Some(dir) = &config.out {
        report
            .write_to(dir, config.trace)
            .map_err(|e| RunError::Config(format!("{}: {e}", dir.display())))?;
    }
    Ok(report)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), RunError> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| RunError::Config(e.to_string())),
    }
}

/// Serializes with a four-space indent.
pub fn to_json_4<T: serde::Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let fmt = serde_json::ser::PrettyFormatter::with_indent(b"    ");
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser).expect("value serializes");
    let mut s = String::from_utf8(buf).expect("json is utf-8");
    s.push('\n');
    s
}

pub fn execute(command: Command) -> Result<(), RunError> {
    match command {
        Command::Run(args) => {
            let report = run(args)?;
            print!("{}", report.to_markdown());
        }
        Command::Lint(data) => {
            let (tasks, _) = load_tasks(&data)?;
            let golden = tasks.iter().filter(|t| t.golden_plan.is_some()).count();
            println!("{} tasks ok ({golden} with golden plans)", tasks.len());
        }
        Command::ExportFinetune { data, out } => {
            let (tasks, _) = load_tasks(&data)?;
            let records = finetune_records(&tasks, FINETUNE_PREFIX).map_err(DatasetError::from)?;
            write_output(out.as_deref(), &to_json_4(&records))?;
        }
        Command::Skills { data, task } => {
            let (tasks, allow) = load_tasks(&data)?;
            let t = tasks
                .iter()
                .find(|t| t.task_id == task)
                .ok_or_else(|| RunError::Config(format!("no task with id {task:?}")))?;
            for s in t
                .skill_set(allow.as_deref())
                .map_err(DatasetError::from)?
                .surfaces()
            {
                println!("{s}");
            }
        }
        Command::MakeScript { data, out } => {
            let (tasks, _) = load_tasks(&data)?;
            let script = dataset::golden_script(&tasks)?;
            let mut text = serde_json::to_string_pretty(&script).expect("script serializes");
            text.push('\n');
            write_output(out.as_deref(), &text)?;
        }
        Command::ServeMock { script, data, addr } => {
            let (tasks, allow) = load_tasks(&data)?;
            let resources = bundled_resources(allow);
            let corpus = mock_corpus(&tasks, &resources);
            let script = if script == "uniform" {
                MockScript::default()
            } else {
                dataset::load_script(Path::new(&script))?
            };
            let mock =
                MockScorer::new(script, &corpus).map_err(|e| RunError::Config(e.to_string()))?;
            eprintln!("serving mock scorer on http://{addr}");
            server::serve_blocking(Arc::new(mock), addr)
                .map_err(|e| RunError::Config(e.to_string()))?;
        }
        Command::Conformance { url, token } => {
            let checks = conformance::run_suite(&url, token);
            for c in &checks {
                println!("{c}");
            }
            if !conformance::all_passed(&checks) {
                return Err(RunError::Config("conformance checks failed".into()));
            }
        }
    }
    Ok(())
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
