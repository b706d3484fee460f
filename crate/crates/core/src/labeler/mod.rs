//! Bootstrap labeling: a chat-completion model picks and labels a small
//! training set from an unlabeled pool.
//!
//! The live path sends the bundled system prompt, the selection query and the
//! pool (as JSON lines of `{id, text}`) to a chat endpoint, parses inline
//! `id,label` lines from the reply, and retries with a corrective message
//! when the reply is unusable. [`mock_bootstrap`] is a deterministic offline
//! replacement driven by a sentiment lexicon.

mod chat;
mod lexicon;
mod mock;
mod parse;

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledReview, Source, UnlabeledReview};

pub use chat::{resolve_api_key, ChatMessage, ChatReply, ChatRequest, ChatTransport, HttpChatTransport, Usage};
pub use lexicon::Lexicon;
pub use mock::mock_bootstrap;
pub use parse::{parse_response, InsufficientItems, ParseCounts, ParsedResponse};

const SYSTEM_PROMPT: &str = include_str!("../../resources/system_prompt.txt");
const QUERY_TEMPLATE: &str = include_str!("../../resources/query_template.txt");

#[derive(Debug, thiserror::Error)]
pub enum LabelerError {
    #[error("API key environment variable {var} is not set")]
    MissingApiKey { var: String },
    #[error("invalid labeler configuration: {0}")]
    InvalidConfig(String),
    #[error("pool has {pool} reviews but {needed} are required")]
    InsufficientPool { pool: usize, needed: usize },
    #[error("duplicate review id {0:?} in pool")]
    DuplicateId(String),
    #[error("chat endpoint timed out")]
    Timeout,
    #[error("chat endpoint unreachable: {0}")]
    Unreachable(String),
    #[error("chat endpoint rejected credentials (status {status})")]
    Auth { status: u16 },
    #[error("chat endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed chat response: {0}")]
    BadResponse(String),
    #[error("no usable response after {attempts} attempts: {last}")]
    Exhausted { attempts: usize, last: String },
}

impl LabelerError {
    fn is_retryable(&self) -> bool {
        matches!(
            self,
            LabelerError::Timeout
                | LabelerError::Unreachable(_)
                | LabelerError::Status { .. }
                | LabelerError::BadResponse(_)
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LabelerConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    /// Overrides the bundled system prompt.
    pub system_prompt: Option<String>,
    pub bootstrap_size: usize,
    pub temperature: f64,
    pub max_retries: usize,
    pub balance_tolerance: f64,
    pub timeout_s: u64,
    /// Attachment size above which the pool is split into chunks.
    pub max_attachment_chars: usize,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        LabelerConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            system_prompt: None,
            bootstrap_size: 100,
            temperature: 0.0,
            max_retries: 3,
            balance_tolerance: 0.2,
            timeout_s: 300,
            max_attachment_chars: 400_000,
        }
    }
}

impl LabelerConfig {
    pub fn validate(&self) -> Result<(), LabelerError> {
        let bad = |m: String| Err(LabelerError::InvalidConfig(m));
        if self.bootstrap_size < 2 {
            return bad(format!("bootstrap_size must be >= 2, got {}", self.bootstrap_size));
        }
        if !(0.0..=0.5).contains(&self.balance_tolerance) {
            return bad(format!("balance_tolerance must be in [0, 0.5], got {}", self.balance_tolerance));
        }
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.endpoint.trim().is_empty() || self.model.trim().is_empty() || self.api_key_env.trim().is_empty() {
            return bad("endpoint, model and api_key_env must be non-empty".into());
        }
        if self.max_attachment_chars == 0 {
            return bad("max_attachment_chars must be > 0".into());
        }
        Ok(())
    }

    pub fn system_prompt(&self) -> &str {
        self.system_prompt.as_deref().unwrap_or(default_system_prompt())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_s)
    }
}

/// One request/response exchange, recorded verbatim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    /// Unix milliseconds; absent for mock runs so their output is reproducible.
    pub timestamp_ms: Option<u64>,
    pub chunk: usize,
    pub attempt: usize,
    /// `live` or `mock`.
    pub mode: String,
    pub request_messages: Vec<ChatMessage>,
    pub raw_response: Option<String>,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub usage: Option<Usage>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelerTranscript {
    pub entries: Vec<TranscriptEntry>,
}

impl LabelerTranscript {
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for entry in &self.entries {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// The labeled training set produced by a labeler.
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapSet {
    pub items: Vec<LabeledReview>,
    pub transcript: LabelerTranscript,
    /// The class balance requirement could not be met.
    pub imbalanced: bool,
}

impl BootstrapSet {
    pub fn positives(&self) -> usize {
        self.items.iter().filter(|r| r.polarity.is_positive()).count()
    }
}

pub fn default_system_prompt() -> &'static str {
    SYSTEM_PROMPT.trim_end()
}

/// The selection query for `n` reviews followed by the inline output format.
pub fn build_query(n: usize) -> Result<String, LabelerError> {
    if n == 0 {
        return Err(LabelerError::InvalidConfig("query size must be >= 1".into()));
    }
    Ok(format!("{}\n\n{}", QUERY_TEMPLATE.trim_end().replace("{n}", &n.to_string()), format_instruction(n)))
}

fn format_instruction(n: usize) -> String {
    format!(
        "Instead of download links, return the selection inline: exactly {n} lines, each of the form \
         <id>,<label> where <id> is the review's id from the attached file and <label> is 1 for positive \
         or 0 for negative. Do not put anything else on those lines."
    )
}

fn format_correction(n: usize, problem: &str) -> String {
    format!(
        "Your previous reply could not be used ({problem}). Reply again with exactly {n} lines of the form \
         <id>,<label>, using only ids from the attached file and labels 0 or 1."
    )
}

fn balance_correction(n: usize, positives: usize, negatives: usize) -> String {
    format!(
        "Your selection has {positives} positive and {negatives} negative reviews. Please rebalance it so \
         both categories are close to equal in size, and reply again with exactly {n} lines of the form \
         <id>,<label>."
    )
}

/// The pool serialized as JSON lines of `{id, text}`.
pub fn attachment(pool: &[UnlabeledReview]) -> String {
    pool.iter().map(attachment_line).collect()
}

fn attachment_line(r: &UnlabeledReview) -> String {
    let mut line = serde_json::to_string(r).expect("review serializes");
    line.push('\n');
    line
}

/// Splits the pool into contiguous chunks whose attachments fit `max_chars`.
/// A single oversized review still gets a chunk of its own.
pub fn chunk_pool(pool: &[UnlabeledReview], max_chars: usize) -> Vec<std::ops::Range<usize>> {
    let mut chunks = Vec::new();
    let mut start = 0;
    let mut size = 0;
    for (i, r) in pool.iter().enumerate() {
        let len = attachment_line(r).chars().count();
        if i > start && size + len > max_chars {
            chunks.push(start..i);
            start = i;
            size = 0;
        }
        size += len;
    }
    if start < pool.len() {
        chunks.push(start..pool.len());
    }
    chunks
}

/// Largest-remainder apportionment of `n` over chunk sizes; ties go to the
/// earlier chunk.
pub fn chunk_quotas(sizes: &[usize], n: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = sizes.iter().map(|&s| n * s / total).collect();
    let mut remainders: Vec<(usize, usize)> = sizes.iter().enumerate().map(|(i, &s)| (n * s % total, i)).collect();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = n - quotas.iter().sum::<usize>();
    for &(_, i) in remainders.iter().take(short) {
        quotas[i] += 1;
    }
    quotas
}

fn now_ms() -> Option<u64> {
    SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_millis() as u64)
}

/// Runs the live labeling protocol and returns the bootstrap set.
pub fn request_bootstrap(
    pool: &[UnlabeledReview],
    config: &LabelerConfig,
    transport: &dyn ChatTransport,
) -> Result<BootstrapSet, LabelerError> {
    let mut transcript = LabelerTranscript::default();
    let (items, imbalanced) = request_bootstrap_recorded(pool, config, transport, &mut transcript)?;
    Ok(BootstrapSet { items, transcript, imbalanced })
}

/// Like [`request_bootstrap`], but appends to a caller-owned transcript so
/// that failed runs keep their provenance.
pub fn request_bootstrap_recorded(
    pool: &[UnlabeledReview],
    config: &LabelerConfig,
    transport: &dyn ChatTransport,
    transcript: &mut LabelerTranscript,
) -> Result<(Vec<LabeledReview>, bool), LabelerError> {
    config.validate()?;
    let n = config.bootstrap_size;
    if pool.len() < n {
        return Err(LabelerError::InsufficientPool { pool: pool.len(), needed: n });
    }
    let mut by_id: HashMap<&str, &UnlabeledReview> = HashMap::with_capacity(pool.len());
    for r in pool {
        if by_id.insert(r.id.as_str(), r).is_some() {
            return Err(LabelerError::DuplicateId(r.id.clone()));
        }
    }

    let chunks = chunk_pool(pool, config.max_attachment_chars);
    let quotas = chunk_quotas(&chunks.iter().map(|c| c.len()).collect::<Vec<_>>(), n);
    let mut selected: Vec<(String, crate::corpus::Polarity)> = Vec::with_capacity(n);
    let mut imbalanced = false;
    for (chunk_idx, (range, quota)) in chunks.into_iter().zip(quotas).enumerate() {
        if quota == 0 {
            continue;
        }
        let part = &pool[range];
        let (items, flagged) = label_chunk(part, quota, chunk_idx, config, transport, transcript)?;
        imbalanced |= flagged;
        selected.extend(items);
    }

    let positives = selected.iter().filter(|(_, p)| p.is_positive()).count();
    if !balanced(positives, n - positives, n, config.balance_tolerance) {
        imbalanced = true;
    }
    let items = selected
        .into_iter()
        .map(|(id, polarity)| {
            let r = by_id[id.as_str()];
            LabeledReview { id, text: r.text.clone(), polarity, source: Source::default() }
        })
        .collect();
    Ok((items, imbalanced))
}

fn balanced(positives: usize, negatives: usize, n: usize, tolerance: f64) -> bool {
    positives.abs_diff(negatives) as f64 <= tolerance * n as f64
}

fn label_chunk(
    part: &[UnlabeledReview],
    quota: usize,
    chunk: usize,
    config: &LabelerConfig,
    transport: &dyn ChatTransport,
    transcript: &mut LabelerTranscript,
) -> Result<(Vec<(String, crate::corpus::Polarity)>, bool), LabelerError> {
    let ids: HashSet<&str> = part.iter().map(|r| r.id.as_str()).collect();
    let user = format!("{}\n\nAttached file (reviews.jsonl):\n{}", build_query(quota)?, attachment(part));
    let mut messages = vec![ChatMessage::system(config.system_prompt()), ChatMessage::user(user)];
    let mut balance_retry_used = false;
    let mut last = String::new();
    let attempts = config.max_retries + 1;

    for attempt in 0..attempts {
        let request =
            ChatRequest { model: config.model.clone(), messages: messages.clone(), temperature: config.temperature };
        let mut entry = TranscriptEntry {
            timestamp_ms: now_ms(),
            chunk,
            attempt,
            mode: "live".into(),
            request_messages: request.messages.clone(),
            raw_response: None,
            error: None,
            warnings: Vec::new(),
            usage: None,
        };
        let reply = match transport.complete(&request) {
            Ok(reply) => reply,
            Err(e) => {
                entry.error = Some(e.to_string());
                transcript.entries.push(entry);
                if !e.is_retryable() {
                    return Err(e);
                }
                log::warn!("labeler chunk {chunk} attempt {attempt}: {e}");
                last = e.to_string();
                continue;
            }
        };
        entry.raw_response = Some(reply.content.clone());
        entry.usage = reply.usage.clone();

        match parse_response(&reply.content, &ids, quota) {
            Ok(parsed) => {
                entry.warnings = parsed.warnings.clone();
                let positives = parsed.items.iter().filter(|(_, p)| p.is_positive()).count();
                let negatives = quota - positives;
                let ok = balanced(positives, negatives, quota, config.balance_tolerance);
                if !ok && !balance_retry_used && attempt + 1 < attempts {
                    balance_retry_used = true;
                    entry.warnings.push(format!("imbalanced selection: {positives} positive / {negatives} negative"));
                    transcript.entries.push(entry);
                    messages.push(ChatMessage::assistant(reply.content));
                    messages.push(ChatMessage::user(balance_correction(quota, positives, negatives)));
                    continue;
                }
                if !ok {
                    entry
                        .warnings
                        .push(format!("accepted imbalanced selection: {positives} positive / {negatives} negative"));
                }
                transcript.entries.push(entry);
                return Ok((parsed.items, !ok));
            }
            Err(e) => {
                entry.warnings = e.warnings.clone();
                entry.error = Some(e.to_string());
                transcript.entries.push(entry);
                log::warn!("labeler chunk {chunk} attempt {attempt}: {e}");
                last = e.to_string();
                messages.push(ChatMessage::assistant(reply.content));
                messages.push(ChatMessage::user(format_correction(quota, &e.to_string())));
            }
        }
    }
    Err(LabelerError::Exhausted { attempts, last })
}
