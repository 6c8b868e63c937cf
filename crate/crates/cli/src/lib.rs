//! Pipeline orchestration: configuration loading, run planning, and the
//! profile, generate, evaluate, and all subcommand implementations.
//! Each (backend, tier) pair becomes one isolated run with its own
//! artifact directory; failures in one run never abort the others.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use syntab_core::fidelity::{
    checks_from_json_str, evaluate_fidelity, ConsistencyCheck, HistogramSpec,
};
use syntab_core::generate::{
    generate, representative_record_chars, token_budget, GenerationConfig, MockBackend,
    RecordBackend, RemoteBackend,
};
use syntab_core::privacy::{evaluate_privacy, PrivacyConfig};
use syntab_core::profile::{build_profile, DataProfile, ProfileConfig};
use syntab_core::prompt::{build_prompt, sample_seeds, TemplateTier};
use syntab_core::record::{self, gate_records, records_to_csv, records_to_ndjson};
use syntab_core::rules::RuleSet;
use syntab_core::score::{emit_report, score_pool, RunRecord, Thresholds};
use syntab_core::stats::{derive_seed, round_tenth};
use syntab_core::table::{load_csv, DatasetTable, TableSchema};
use syntab_core::utility::{tstr_trts, UtilityError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_EVAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("evaluation failed: {0}")]
    Evaluation(String),
}

impl CliError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

/// A value that is either a path to a JSON file or the JSON itself.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SourceOrInline<T> {
    Path(String),
    Inline(T),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Mock,
    Remote { endpoint: String, model: String },
}

impl BackendSpec {
    pub fn name(&self) -> String {
        match self {
            BackendSpec::Mock => "mock".into(),
            BackendSpec::Remote { model, .. } => sanitize(model),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct GenerationSection {
    #[serde(flatten)]
    pub config: GenerationConfig,
    /// Whether the mock backend repairs rule violations by resampling.
    pub mock_repair: bool,
    /// Seed rows per prompt, capped at five by the prompt builder.
    pub seed_count: usize,
    /// Per-tier overrides of whether seed rows are embedded.
    pub seed_inclusion: BTreeMap<String, bool>,
}

impl Default for GenerationSection {
    fn default() -> Self {
        GenerationSection {
            config: GenerationConfig::default(),
            mock_repair: true,
            seed_count: 5,
            seed_inclusion: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ProfileSection {
    pub merge_threshold: usize,
    pub correlation_cutoff: f64,
    pub expert_pairs: Vec<(String, String)>,
}

impl Default for ProfileSection {
    fn default() -> Self {
        let base = ProfileConfig::default();
        ProfileSection {
            merge_threshold: base.merge_threshold,
            correlation_cutoff: base.correlation_cutoff,
            expert_pairs: base.expert_pairs,
        }
    }
}

impl ProfileSection {
    fn to_config(&self) -> ProfileConfig {
        ProfileConfig {
            merge_threshold: self.merge_threshold,
            correlation_cutoff: self.correlation_cutoff,
            expert_pairs: self.expert_pairs.clone(),
        }
    }
}

fn default_tiers() -> Vec<String> {
    TemplateTier::ALL.iter().map(|t| t.to_string()).collect()
}

fn default_backends() -> Vec<BackendSpec> {
    vec![BackendSpec::Mock]
}

fn default_k() -> usize {
    100
}

fn default_out() -> String {
    "out".into()
}

fn default_bins() -> usize {
    20
}

fn default_jobs() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
pub struct RunConfig {
    pub dataset: String,
    pub schema: SourceOrInline<TableSchema>,
    #[serde(default)]
    pub rules: Option<SourceOrInline<serde_json::Value>>,
    #[serde(default)]
    pub checks: Option<SourceOrInline<serde_json::Value>>,
    #[serde(default = "default_tiers")]
    pub tiers: Vec<String>,
    #[serde(default = "default_backends")]
    pub backends: Vec<BackendSpec>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: String,
    #[serde(default)]
    pub generation: GenerationSection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default)]
    pub privacy: PrivacyConfig,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    /// Directory the config file lives in; relative paths resolve here.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub k: Option<usize>,
    /// Restrict to these backend names (as printed in run ids).
    pub backends: Vec<String>,
    /// Restrict to these tier names.
    pub tiers: Vec<String>,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let raw = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg: RunConfig = serde_json::from_str(&raw)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    cfg.base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    if let Some(jobs) = overrides.jobs {
        cfg.jobs = jobs;
    }
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &overrides.out {
        cfg.out_dir = out.clone();
    }
    if let Some(k) = overrides.k {
        cfg.k = k;
    }
    if !overrides.tiers.is_empty() {
        cfg.tiers.retain(|t| overrides.tiers.contains(t));
        for want in &overrides.tiers {
            if !cfg.tiers.contains(want) {
                return Err(CliError::Config(format!(
                    "tier '{want}' is not in the configured tier list"
                )));
            }
        }
    }
    if !overrides.backends.is_empty() {
        cfg.backends.retain(|b| overrides.backends.contains(&b.name()));
        for want in &overrides.backends {
            if !cfg.backends.iter().any(|b| &b.name() == want) {
                return Err(CliError::Config(format!(
                    "backend '{want}' is not in the configured backend list"
                )));
            }
        }
    }

    validate_config(&cfg)?;
    Ok(cfg)
}

fn validate_config(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.k == 0 {
        return Err(CliError::Config("k must be at least 1".into()));
    }
    if cfg.tiers.is_empty() {
        return Err(CliError::Config("at least one tier is required".into()));
    }
    if cfg.backends.is_empty() {
        return Err(CliError::Config("at least one backend is required".into()));
    }
    if cfg.jobs == 0 {
        return Err(CliError::Config("jobs must be at least 1".into()));
    }
    for tier in &cfg.tiers {
        tier.parse::<TemplateTier>()
            .map_err(|e| CliError::Config(format!("tier '{tier}': {e}")))?;
    }
    cfg.generation
        .config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    cfg.privacy
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(())
}

impl RunConfig {
    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }

    pub fn out_path(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    fn dataset_stem(&self) -> String {
        let path = PathBuf::from(&self.dataset);
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        sanitize(&stem)
    }

    pub fn load_schema(&self) -> Result<TableSchema, CliError> {
        let schema = match &self.schema {
            SourceOrInline::Path(p) => {
                let path = self.resolve(p);
                TableSchema::from_json_file(&path)
                    .map_err(|e| CliError::Config(format!("schema {}: {e}", path.display())))?
            }
            SourceOrInline::Inline(s) => s.clone(),
        };
        schema
            .validate()
            .map_err(|e| CliError::Config(format!("schema: {e}")))?;
        Ok(schema)
    }

    pub fn load_rules(&self, schema: &TableSchema) -> Result<RuleSet, CliError> {
        let raw = match &self.rules {
            None => return Ok(RuleSet::default()),
            Some(SourceOrInline::Path(p)) => {
                let path = self.resolve(p);
                std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?
            }
            Some(SourceOrInline::Inline(v)) => v.to_string(),
        };
        let rules =
            RuleSet::from_json_str(&raw).map_err(|e| CliError::Config(format!("rules: {e}")))?;
        rules
            .validate(schema)
            .map_err(|e| CliError::Config(format!("rules: {e}")))?;
        Ok(rules)
    }

    pub fn load_checks(&self) -> Result<Vec<ConsistencyCheck>, CliError> {
        let raw = match &self.checks {
            None => return Ok(Vec::new()),
            Some(SourceOrInline::Path(p)) => {
                let path = self.resolve(p);
                std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?
            }
            Some(SourceOrInline::Inline(v)) => v.to_string(),
        };
        checks_from_json_str(&raw).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load_table(&self, schema: &TableSchema) -> Result<DatasetTable, CliError> {
        let path = self.resolve(&self.dataset);
        let (table, _) = load_csv(&path, schema)
            .map_err(|e| CliError::Config(format!("dataset {}: {e}", path.display())))?;
        Ok(table)
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// One planned (backend, tier) execution.
#[derive(Debug, Clone)]
pub struct PlannedRun {
    pub ordinal: usize,
    pub run_id: String,
    pub backend: BackendSpec,
    pub tier: TemplateTier,
}

pub fn planned_runs(cfg: &RunConfig) -> Result<Vec<PlannedRun>, CliError> {
    let stem = cfg.dataset_stem();
    let mut runs = Vec::new();
    for backend in &cfg.backends {
        for tier_name in &cfg.tiers {
            let tier: TemplateTier = tier_name
                .parse()
                .map_err(|e| CliError::Config(format!("tier '{tier_name}': {e}")))?;
            let run_id = format!("{stem}-{}-{}-{}", backend.name(), tier, cfg.seed);
            runs.push(PlannedRun {
                ordinal: runs.len(),
                run_id,
                backend: backend.clone(),
                tier,
            });
        }
    }
    Ok(runs)
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| CliError::io(path, e))
}

/// Per-run facts persisted by the generate stage and read back by the
/// evaluate stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub run_id: String,
    pub backend: String,
    pub tier: String,
    pub seed: u64,
    pub generation_seed: u64,
    pub requested: usize,
    pub raw_lines: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Generation wall time, quantized to tenths of a second.
    pub duration_seconds: f64,
    pub mcs: f64,
    pub mcs_hard: f64,
}

pub fn cmd_profile(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let schema = cfg.load_schema()?;
    cfg.load_rules(&schema)?;
    let table = cfg.load_table(&schema)?;
    let profile = build_profile(&table, &cfg.profile.to_config())
        .map_err(|e| CliError::Config(e.to_string()))?;

    let out = cfg.out_path();
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let path = out.join("profile.json");
    let json = profile
        .to_json()
        .map_err(|e| CliError::Config(e.to_string()))?;
    write_file(&path, &format!("{json}\n"))?;
    Ok(path)
}

#[derive(Debug, Default)]
pub struct GenerateOutcome {
    pub completed: Vec<String>,
    pub failed: Vec<(String, String)>,
}

impl GenerateOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failed.is_empty() {
            EXIT_OK
        } else {
            EXIT_PARTIAL
        }
    }
}

pub fn cmd_generate(cfg: &RunConfig) -> Result<GenerateOutcome, CliError> {
    let out = cfg.out_path();
    let profile_path = out.join("profile.json");
    let profile_raw = std::fs::read_to_string(&profile_path).map_err(|_| {
        CliError::Config(format!(
            "{} not found; run the profile stage first",
            profile_path.display()
        ))
    })?;
    let profile =
        DataProfile::from_json(&profile_raw).map_err(|e| CliError::Config(e.to_string()))?;
    let rules = cfg.load_rules(&profile.schema)?;
    let table = cfg.load_table(&profile.schema)?;
    let plan = planned_runs(cfg)?;

    let queue: Mutex<Vec<PlannedRun>> = Mutex::new(plan.into_iter().rev().collect());
    let results: Mutex<Vec<(String, Result<(), String>)>> = Mutex::new(Vec::new());
    let workers = cfg.jobs.min(cfg.backends.len() * cfg.tiers.len()).max(1);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let run = match queue.lock().unwrap().pop() {
                    Some(run) => run,
                    None => break,
                };
                let outcome = run_generation(cfg, &profile, &rules, &table, &run, &out);
                if let Err(reason) = &outcome {
                    write_failure_artifact(&out, &run.run_id, reason);
                }
                results.lock().unwrap().push((run.run_id.clone(), outcome));
            });
        }
    });

    let mut outcome = GenerateOutcome::default();
    let mut collected = results.into_inner().unwrap();
    collected.sort_by(|a, b| a.0.cmp(&b.0));
    for (run_id, result) in collected {
        match result {
            Ok(()) => outcome.completed.push(run_id),
            Err(reason) => {
                log::warn!("run {run_id} failed: {reason}");
                outcome.failed.push((run_id, reason));
            }
        }
    }
    Ok(outcome)
}

/// Record why a run failed next to whatever artifacts it managed to stage.
fn write_failure_artifact(out: &Path, run_id: &str, reason: &str) {
    let run_dir = out.join("runs").join(run_id);
    if std::fs::create_dir_all(&run_dir).is_err() {
        return;
    }
    let failure = serde_json::json!({ "run_id": run_id, "error": reason });
    let _ = std::fs::write(
        run_dir.join("failure.json"),
        format!("{}\n", serde_json::to_string_pretty(&failure).unwrap()),
    );
}

fn include_seeds(cfg: &RunConfig, tier: TemplateTier) -> bool {
    cfg.generation
        .seed_inclusion
        .get(&tier.to_string())
        .copied()
        .unwrap_or_else(|| tier.seeds_by_default())
}

fn run_generation(
    cfg: &RunConfig,
    profile: &DataProfile,
    rules: &RuleSet,
    table: &DatasetTable,
    run: &PlannedRun,
    out: &Path,
) -> Result<(), String> {
    let run_dir = out.join("runs").join(&run.run_id);
    std::fs::create_dir_all(&run_dir).map_err(|e| e.to_string())?;

    let generation_seed = derive_seed(cfg.seed, run.ordinal as u64);
    let seeds = if include_seeds(cfg, run.tier) {
        let seed_draw = derive_seed(cfg.seed, 500 + run.ordinal as u64);
        sample_seeds(table, cfg.generation.seed_count.min(5), seed_draw)
            .map_err(|e| e.to_string())?
    } else {
        Vec::new()
    };

    let prompt =
        build_prompt(run.tier, profile, rules, cfg.k, &seeds).map_err(|e| e.to_string())?;
    std::fs::write(run_dir.join("prompt.txt"), prompt.to_text()).map_err(|e| e.to_string())?;

    let mut gen_cfg = cfg.generation.config.clone();
    gen_cfg.seed = generation_seed;
    if gen_cfg.max_tokens.is_none() {
        let largest_batch = gen_cfg.batch_size.min(cfg.k);
        gen_cfg.max_tokens = Some(token_budget(
            largest_batch,
            representative_record_chars(profile),
        ));
    }

    let backend: Box<dyn RecordBackend> = match &run.backend {
        BackendSpec::Mock => Box::new(MockBackend {
            profile: profile.clone(),
            rules: rules.clone(),
            repair: cfg.generation.mock_repair,
        }),
        BackendSpec::Remote { endpoint, model } => Box::new(
            RemoteBackend::from_env(endpoint, model).map_err(|e| e.to_string())?,
        ),
    };

    let (lines, log) = match generate(&prompt, &gen_cfg, backend.as_ref()) {
        Ok(pair) => pair,
        Err(e) => {
            if let syntab_core::generate::GenerateError::Backend { log, .. }
            | syntab_core::generate::GenerateError::Empty { log } = &e
            {
                let _ = std::fs::write(run_dir.join("log.jsonl"), log.to_jsonl());
            }
            return Err(e.to_string());
        }
    };

    std::fs::write(run_dir.join("raw.ndjson"), format!("{}\n", lines.join("\n")))
        .map_err(|e| e.to_string())?;
    std::fs::write(run_dir.join("log.jsonl"), log.to_jsonl()).map_err(|e| e.to_string())?;

    let (kept, report) = gate_records(&lines, &profile.schema, rules);
    let header: Vec<&str> = profile
        .schema
        .columns
        .iter()
        .map(|c| c.name.as_str())
        .collect();
    let mut csv_doc = header.join(",");
    csv_doc.push('\n');
    for line in records_to_csv(&kept) {
        csv_doc.push_str(&line);
        csv_doc.push('\n');
    }
    std::fs::write(run_dir.join("accepted.csv"), csv_doc).map_err(|e| e.to_string())?;

    let ndjson: String = records_to_ndjson(&kept, &profile.schema)
        .into_iter()
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(run_dir.join("accepted.ndjson"), ndjson).map_err(|e| e.to_string())?;

    std::fs::write(
        run_dir.join("rejections.json"),
        format!("{}\n", serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?),
    )
    .map_err(|e| e.to_string())?;

    let hard_rules = rules.hard_only();
    let (mcs, mcs_hard) = if kept.is_empty() {
        (0.0, 0.0)
    } else {
        (
            record::mcs(&kept, rules, &profile.schema).unwrap_or(0.0),
            record::mcs(&kept, &hard_rules, &profile.schema).unwrap_or(0.0),
        )
    };

    let meta = RunMeta {
        run_id: run.run_id.clone(),
        backend: run.backend.name(),
        tier: run.tier.to_string(),
        seed: cfg.seed,
        generation_seed,
        requested: cfg.k,
        raw_lines: lines.len(),
        accepted: kept.len(),
        rejected: report.lines - report.accepted,
        duration_seconds: round_tenth(log.duration_seconds),
        mcs,
        mcs_hard,
    };
    std::fs::write(
        run_dir.join("meta.json"),
        format!("{}\n", serde_json::to_string_pretty(&meta).map_err(|e| e.to_string())?),
    )
    .map_err(|e| e.to_string())?;
    Ok(())
}

#[derive(Debug)]
pub struct EvaluateOutcome {
    pub report_path: PathBuf,
    pub evaluated: usize,
    pub skipped: Vec<(String, String)>,
}

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvaluateOutcome, CliError> {
    let out = cfg.out_path();
    let profile_path = out.join("profile.json");
    let profile_raw = std::fs::read_to_string(&profile_path).map_err(|_| {
        CliError::Config(format!(
            "{} not found; run the profile stage first",
            profile_path.display()
        ))
    })?;
    let profile =
        DataProfile::from_json(&profile_raw).map_err(|e| CliError::Config(e.to_string()))?;
    let real = cfg.load_table(&profile.schema)?;
    let checks = cfg.load_checks()?;
    let retained = profile.correlations.retained_pairs();
    let hist = HistogramSpec { bin_count: cfg.histogram_bins };

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for run in planned_runs(cfg)? {
        let run_dir = out.join("runs").join(&run.run_id);
        let meta_raw = match std::fs::read_to_string(run_dir.join("meta.json")) {
            Ok(raw) => raw,
            Err(_) => {
                skipped.push((run.run_id.clone(), "no generation artifacts".into()));
                continue;
            }
        };
        let meta: RunMeta = match serde_json::from_str(&meta_raw) {
            Ok(meta) => meta,
            Err(e) => {
                skipped.push((run.run_id.clone(), format!("unreadable meta.json: {e}")));
                continue;
            }
        };
        if meta.accepted == 0 {
            skipped.push((run.run_id.clone(), "no accepted records".into()));
            continue;
        }
        let accepted_path = run_dir.join("accepted.csv");
        let syn = match load_csv(&accepted_path, &profile.schema) {
            Ok((table, _)) => table,
            Err(e) => {
                skipped.push((run.run_id.clone(), format!("unreadable accepted.csv: {e}")));
                continue;
            }
        };

        let mut metrics =
            match evaluate_fidelity(&real, &syn, &retained, &checks, hist) {
                Ok(set) => set,
                Err(e) => {
                    skipped.push((run.run_id.clone(), format!("fidelity: {e}")));
                    continue;
                }
            };
        match evaluate_privacy(&real, &syn, &cfg.privacy) {
            Ok(privacy_set) => {
                for (_, value) in privacy_set.entries {
                    metrics.insert(value);
                }
                metrics.summaries.extend(privacy_set.summaries);
                metrics.warnings.extend(privacy_set.warnings);
            }
            Err(e) => {
                skipped.push((run.run_id.clone(), format!("privacy: {e}")));
                continue;
            }
        }

        let utility_seed = derive_seed(cfg.seed, 10_000 + run.ordinal as u64);
        let utility = match tstr_trts(&real, &syn, utility_seed) {
            Ok(report) => Some(report),
            Err(UtilityError::MissingLabel) => {
                metrics
                    .warnings
                    .push("utility skipped: schema has no label column".into());
                None
            }
            Err(e) => {
                metrics.warnings.push(format!("utility skipped: {e}"));
                None
            }
        };

        records.push(RunRecord {
            run_id: meta.run_id,
            backend: meta.backend,
            tier: meta.tier,
            seed: meta.seed,
            duration_seconds: meta.duration_seconds,
            requested: meta.requested,
            accepted: meta.accepted,
            rejected: meta.rejected,
            mcs: meta.mcs,
            mcs_hard: meta.mcs_hard,
            metrics,
            utility,
            artifacts_dir: Some(format!("runs/{}", run.run_id)),
        });
    }

    if records.is_empty() {
        return Err(CliError::Evaluation(format!(
            "no evaluable runs ({} skipped)",
            skipped.len()
        )));
    }
    let evaluated = records.len();
    let pool = score_pool(records, &cfg.thresholds)
        .map_err(|e| CliError::Evaluation(e.to_string()))?;
    emit_report(&pool, &out).map_err(|e| CliError::Evaluation(e.to_string()))?;
    Ok(EvaluateOutcome { report_path: out.join("report.json"), evaluated, skipped })
}

#[derive(Debug)]
pub struct AllOutcome {
    pub generate: GenerateOutcome,
    pub evaluate: EvaluateOutcome,
}

impl AllOutcome {
    pub fn exit_code(&self) -> i32 {
        self.generate.exit_code()
    }
}

pub fn cmd_all(cfg: &RunConfig) -> Result<AllOutcome, CliError> {
    cmd_profile(cfg)?;
    let generate = cmd_generate(cfg)?;
    let evaluate = cmd_evaluate(cfg)?;
    Ok(AllOutcome { generate, evaluate })
}
