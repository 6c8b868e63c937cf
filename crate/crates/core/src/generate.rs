//! Drive a record-generation backend in batches and collect raw lines
//! plus a structured run log. Two backends ship here: an HTTP client for
//! chat-completion endpoints and a statistical mock that samples
//! independent marginals from a data profile. The mock doubles as a null
//! model for the evaluation suite and as an offline test stand-in.

use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::DataProfile;
use crate::prompt::PromptSpec;
use crate::rules::RuleSet;
use crate::stats::derive_seed;
use crate::table::{render_row_csv, Cell, ColumnKind, ColumnSchema};

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("invalid generation config: {0}")]
    Config(String),
    #[error("backend request failed: {message}")]
    Backend {
        backend: String,
        status: Option<u16>,
        message: String,
        log: Box<GenerationLog>,
    },
    #[error("backend returned zero usable lines")]
    Empty { log: Box<GenerationLog> },
    #[error("rule repair dropped {dropped} of {requested} rows; rules look infeasible")]
    InfeasibleRules { dropped: usize, requested: usize },
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
}

/// Sampling and batching parameters shared by all backends.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub temperature: f64,
    pub top_p: f64,
    pub batch_size: usize,
    pub max_tokens: Option<usize>,
    pub seed: u64,
    pub retries: usize,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            temperature: 0.7,
            top_p: 0.9,
            batch_size: 20,
            max_tokens: None,
            seed: 0,
            retries: 3,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GenerateError::Config(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(GenerateError::Config(format!(
                "top_p {} outside (0, 1]",
                self.top_p
            )));
        }
        if self.batch_size == 0 {
            return Err(GenerateError::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Completion-token budget for a request of `k` records. Uses a four
/// characters per token estimate plus a two-token line overhead, scaled by
/// a 1.25 safety factor in integer arithmetic, with a floor of 64.
pub fn token_budget(k: usize, record_chars: usize) -> usize {
    let est = record_chars.div_ceil(4) + 2;
    (k * est * 5 / 4).max(64)
}

/// Character length of a representative rendered record, built from
/// profile aggregates (numeric means at one decimal, the longest token per
/// categorical column).
pub fn representative_record_chars(profile: &DataProfile) -> usize {
    let tokens: Vec<String> = profile
        .schema
        .columns
        .iter()
        .map(|col| {
            if let Some(num) = profile.numeric.get(&col.name) {
                format!("{:.1}", num.mean)
            } else if let Some(cat) = profile.categorical.get(&col.name) {
                cat.pmf
                    .keys()
                    .max_by_key(|k| k.len())
                    .cloned()
                    .unwrap_or_default()
            } else {
                String::new()
            }
        })
        .collect();
    tokens.join(",").chars().count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchLog {
    pub index: usize,
    pub requested: usize,
    pub received: usize,
    pub attempts: usize,
    pub seconds: f64,
    pub status: BatchStatus,
}

/// Wall-clock and failure accounting for one generation job.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationLog {
    pub backend: String,
    pub records_requested: usize,
    pub raw_lines_received: usize,
    pub batches: Vec<BatchLog>,
    pub failure_modes: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub duration_seconds: f64,
}

impl GenerationLog {
    fn start(backend: String, records_requested: usize) -> Self {
        GenerationLog {
            backend,
            records_requested,
            raw_lines_received: 0,
            batches: Vec::new(),
            failure_modes: Vec::new(),
            started_unix: unix_now(),
            finished_unix: 0,
            duration_seconds: 0.0,
        }
    }

    fn finish(&mut self, lines: usize, elapsed: Duration) {
        self.raw_lines_received = lines;
        self.finished_unix = unix_now();
        self.duration_seconds = elapsed.as_secs_f64();
    }

    /// One JSON line per batch, then a summary line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for batch in &self.batches {
            let mut value = serde_json::to_value(batch).expect("batch log serializes");
            value["entry"] = serde_json::Value::from("batch");
            out.push_str(&value.to_string());
            out.push('\n');
        }
        let summary = serde_json::json!({
            "entry": "summary",
            "backend": self.backend,
            "records_requested": self.records_requested,
            "raw_lines_received": self.raw_lines_received,
            "failure_modes": self.failure_modes,
            "started_unix": self.started_unix,
            "finished_unix": self.finished_unix,
            "duration_seconds": self.duration_seconds,
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// A single failed batch request, split by whether retrying can help.
#[derive(Debug, Error)]
pub enum BackendFailure {
    #[error("transient failure: {message}")]
    Transient { status: Option<u16>, message: String },
    #[error("permanent failure: {message}")]
    Permanent { status: Option<u16>, message: String },
}

pub trait RecordBackend {
    fn name(&self) -> String;

    /// Request `n` records using the given rendered messages. Returns raw
    /// candidate lines; parsing happens downstream.
    fn request_batch(
        &self,
        system: &str,
        user: &str,
        n: usize,
        cfg: &GenerationConfig,
        batch_index: usize,
    ) -> Result<Vec<String>, BackendFailure>;
}

/// Per-batch requested counts: full batches then the remainder.
pub fn batch_sizes(k: usize, batch_size: usize) -> Vec<usize> {
    let mut sizes = vec![batch_size; k / batch_size];
    if k % batch_size > 0 {
        sizes.push(k % batch_size);
    }
    sizes
}

fn backoff_delay(attempt: usize) -> Duration {
    let ms = 250u64.saturating_mul(1 << (attempt.min(5) - 1));
    Duration::from_millis(ms.min(4000))
}

/// Run the full batched generation loop. Transient failures retry with
/// exponential backoff and, once retries are exhausted, are logged while
/// the remaining batches continue. Permanent failures abort immediately.
pub fn generate(
    prompt: &PromptSpec,
    cfg: &GenerationConfig,
    backend: &dyn RecordBackend,
) -> Result<(Vec<String>, GenerationLog), GenerateError> {
    cfg.validate()?;
    let mut log = GenerationLog::start(backend.name(), prompt.k);
    let job_timer = Instant::now();
    let mut lines: Vec<String> = Vec::with_capacity(prompt.k);

    for (index, requested) in batch_sizes(prompt.k, cfg.batch_size).into_iter().enumerate() {
        let (system, user) = prompt.messages_for_count(requested);
        let batch_timer = Instant::now();
        let mut attempts = 0usize;
        let outcome = loop {
            attempts += 1;
            match backend.request_batch(&system, &user, requested, cfg, index) {
                Ok(batch_lines) => break Ok(batch_lines),
                Err(BackendFailure::Permanent { status, message }) => {
                    break Err((status, message, true));
                }
                Err(BackendFailure::Transient { status, message }) => {
                    if attempts > cfg.retries {
                        break Err((status, message, false));
                    }
                    std::thread::sleep(backoff_delay(attempts));
                }
            }
        };
        let seconds = batch_timer.elapsed().as_secs_f64();
        match outcome {
            Ok(batch_lines) => {
                log.batches.push(BatchLog {
                    index,
                    requested,
                    received: batch_lines.len(),
                    attempts,
                    seconds,
                    status: BatchStatus::Ok,
                });
                lines.extend(batch_lines);
            }
            Err((status, message, permanent)) => {
                log.batches.push(BatchLog {
                    index,
                    requested,
                    received: 0,
                    attempts,
                    seconds,
                    status: BatchStatus::Failed,
                });
                log.failure_modes.push(format!("batch {index}: {message}"));
                if permanent {
                    log.finish(lines.len(), job_timer.elapsed());
                    return Err(GenerateError::Backend {
                        backend: log.backend.clone(),
                        status,
                        message,
                        log: Box::new(log),
                    });
                }
            }
        }
    }

    log.finish(lines.len(), job_timer.elapsed());
    if lines.is_empty() {
        return Err(GenerateError::Empty { log: Box::new(log) });
    }
    Ok((lines, log))
}

/// Backend that samples records from the profile's own marginals. Column
/// draws are independent, so cross-column structure is absent unless rule
/// repair reintroduces it.
pub struct MockBackend {
    pub profile: DataProfile,
    pub rules: RuleSet,
    pub repair: bool,
}

impl RecordBackend for MockBackend {
    fn name(&self) -> String {
        "mock".into()
    }

    fn request_batch(
        &self,
        _system: &str,
        _user: &str,
        n: usize,
        cfg: &GenerationConfig,
        batch_index: usize,
    ) -> Result<Vec<String>, BackendFailure> {
        let seed = derive_seed(cfg.seed, batch_index as u64);
        mock_generate(&self.profile, &self.rules, n, seed, self.repair).map_err(|e| {
            BackendFailure::Permanent {
                status: None,
                message: e.to_string(),
            }
        })
    }
}

fn sample_cell(profile: &DataProfile, col: &ColumnSchema, rng: &mut ChaCha8Rng) -> Cell {
    if let Some(num) = profile.numeric.get(&col.name) {
        let z: f64 = rng.sample(StandardNormal);
        let raw = num.mean + num.stdev * z;
        let clamped = raw.clamp(num.min, num.max);
        let rounded = (clamped * 1e6).round() / 1e6;
        return Cell::Number(rounded.clamp(num.min, num.max));
    }
    if let Some(cat) = profile.categorical.get(&col.name) {
        let u: f64 = rng.gen();
        let mut cum = 0.0;
        let mut chosen = cat.pmf.keys().next_back();
        for (token, p) in &cat.pmf {
            cum += p;
            if u < cum {
                chosen = Some(token);
                break;
            }
        }
        let token = chosen.cloned().unwrap_or_default();
        return match col.kind {
            ColumnKind::Binary => Cell::Number(if token == "1" { 1.0 } else { 0.0 }),
            _ => Cell::Text(token),
        };
    }
    Cell::Missing
}

fn sample_row(profile: &DataProfile, rng: &mut ChaCha8Rng) -> Vec<Cell> {
    profile
        .schema
        .columns
        .iter()
        .map(|col| sample_cell(profile, col, rng))
        .collect()
}

const REPAIR_ATTEMPT_CAP: usize = 100;

/// Sample `k` CSV record lines from the profile marginals. With repair on,
/// rows violating any rule get their consequent fields resampled until
/// compliant; rows still violating after the attempt cap are dropped, and
/// dropping more than half the rows is an error.
pub fn mock_generate(
    profile: &DataProfile,
    rules: &RuleSet,
    k: usize,
    seed: u64,
    repair: bool,
) -> Result<Vec<String>, GenerateError> {
    let schema = &profile.schema;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::with_capacity(k);
    let mut dropped = 0usize;

    for _ in 0..k {
        let mut cells = sample_row(profile, &mut rng);
        if repair && !rules.is_empty() {
            let mut attempts = 0usize;
            let mut keep = true;
            loop {
                let violated = rules.violated_by(&cells, schema);
                if violated.is_empty() {
                    break;
                }
                if attempts >= REPAIR_ATTEMPT_CAP {
                    keep = false;
                    break;
                }
                attempts += 1;
                for rule in violated {
                    for field in rule.consequent_fields() {
                        if let Some((idx, col)) = schema.column(field) {
                            cells[idx] = sample_cell(profile, col, &mut rng);
                        }
                    }
                }
            }
            if !keep {
                dropped += 1;
                continue;
            }
        }
        lines.push(render_row_csv(&cells));
    }

    if repair && dropped * 2 > k {
        return Err(GenerateError::InfeasibleRules { dropped, requested: k });
    }
    Ok(lines)
}

/// HTTP client for chat-completion endpoints. The bearer token is read
/// from the SYNTH_API_KEY environment variable.
pub struct RemoteBackend {
    pub endpoint: String,
    pub model: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .finish_non_exhaustive()
    }
}

impl RemoteBackend {
    pub const API_KEY_VAR: &'static str = "SYNTH_API_KEY";

    pub fn from_env(endpoint: &str, model: &str) -> Result<Self, GenerateError> {
        let api_key = std::env::var(Self::API_KEY_VAR)
            .ok()
            .filter(|key| !key.trim().is_empty())
            .ok_or_else(|| GenerateError::MissingApiKey(Self::API_KEY_VAR.into()))?;
        Ok(Self::with_key(endpoint, model, &api_key))
    }

    pub fn with_key(endpoint: &str, model: &str, api_key: &str) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .expect("http client builds");
        RemoteBackend {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key: api_key.to_string(),
            client,
        }
    }
}

impl RecordBackend for RemoteBackend {
    fn name(&self) -> String {
        format!("remote:{}", self.model)
    }

    fn request_batch(
        &self,
        system: &str,
        user: &str,
        _n: usize,
        cfg: &GenerationConfig,
        _batch_index: usize,
    ) -> Result<Vec<String>, BackendFailure> {
        let url = format!("{}/v1/chat/completions", self.endpoint);
        let mut body = serde_json::json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
            "temperature": cfg.temperature,
            "top_p": cfg.top_p,
            "seed": cfg.seed,
        });
        if let Some(max_tokens) = cfg.max_tokens {
            body["max_tokens"] = serde_json::Value::from(max_tokens);
        }

        let response = self
            .client
            .post(&url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendFailure::Transient {
                status: None,
                message: format!("network error: {e}"),
            })?;

        let status = response.status().as_u16();
        let text = response.text().unwrap_or_default();
        if !(200..300).contains(&status) {
            let snippet: String = text.chars().take(200).collect();
            let message = format!("HTTP {status}: {snippet}");
            if status == 429 || status >= 500 {
                return Err(BackendFailure::Transient { status: Some(status), message });
            }
            return Err(BackendFailure::Permanent { status: Some(status), message });
        }

        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| BackendFailure::Permanent {
                status: Some(status),
                message: format!("unparseable response body: {e}"),
            })?;
        let content = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| BackendFailure::Permanent {
                status: Some(status),
                message: "response body missing choices[0].message.content".into(),
            })?;
        Ok(content
            .trim()
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect())
    }
}
