//! Machine pseudo-rater client. Sends each item's text to a chat-style
//! HTTP endpoint under a fixed prompt and strictly parses the one-token
//! reply into the binary label space; anything but an exact "True" or
//! "False" leaves the item unannotated and is reported, never guessed.

use std::collections::HashSet;
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};
use url::Url;

use crate::error::{Error, Result};
use crate::ingest::AnnotationRecord;
use crate::util::parallel_map;

pub const SYSTEM_PROMPT: &str = "You are a content moderation system. Your task is to detect hate speech in a social media messages.";

pub const BASE_INSTRUCTION: &str = "Respond only with 'True' if the message contains hate speech, or 'False' if it does not. Do not explain, justify, or add anything else. Respond with exactly one word: True or False.";

/// Inserted between the instruction and the item text in the user turn;
/// recorded in every run manifest.
pub const PROMPT_SEPARATOR: &str = "\n\n";

/// Decoding settings sent with every request. The defaults are the only
/// supported protocol; overrides are possible but end up recorded in the
/// run manifest, so a deviation is always visible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecodingParams {
    pub max_tokens: u32,
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
    pub sampling_enabled: bool,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self {
            max_tokens: 1,
            temperature: 0.01,
            top_p: 0.1,
            top_k: 5,
            sampling_enabled: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnnotatorEndpointConfig {
    pub base_url: Url,
    pub model_name: String,
    pub api_key_env: Option<String>,
    pub max_parallel: usize,
    pub timeout: Duration,
    pub retries: u32,
    /// JSON pointer to the reply text inside the response body, for
    /// endpoints that do not use the standard chat completion shape.
    pub response_content_pointer: String,
}

impl AnnotatorEndpointConfig {
    pub fn new(base_url: Url, model_name: impl Into<String>) -> Self {
        Self {
            base_url,
            model_name: model_name.into(),
            api_key_env: None,
            max_parallel: 4,
            timeout: Duration::from_secs(30),
            retries: 3,
            response_content_pointer: "/choices/0/message/content".to_string(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_parallel < 1 {
            return Err(Error::InvalidInput("max_parallel must be >= 1".into()));
        }
        Ok(())
    }
}

/// The chat completion payload for one item. The system message and the
/// instruction prefix of the user message are fixed byte-for-byte.
pub fn build_request(item_text: &str, model: &str, params: &DecodingParams) -> Result<Value> {
    if item_text.is_empty() {
        return Err(Error::InvalidInput("item text is empty".into()));
    }
    Ok(json!({
        "model": model,
        "messages": [
            { "role": "system", "content": SYSTEM_PROMPT },
            { "role": "user", "content": format!("{BASE_INSTRUCTION}{PROMPT_SEPARATOR}{item_text}") },
        ],
        "max_tokens": params.max_tokens,
        "temperature": params.temperature,
        "top_p": params.top_p,
        "top_k": params.top_k,
        "stream": false,
    }))
}

/// The same payload without the sampling fields, for endpoints that
/// reject the temperature/top_p/top_k combination.
fn greedy_request(payload: &Value) -> Value {
    let mut stripped = payload.clone();
    if let Some(map) = stripped.as_object_mut() {
        map.remove("temperature");
        map.remove("top_p");
        map.remove("top_k");
    }
    stripped
}

/// Strict reply parsing: exactly "True" or "False" after whitespace
/// trimming, case-sensitive. Returns the canonical label name.
pub fn parse_response(raw: &str) -> Result<&'static str> {
    match raw.trim() {
        "True" => Ok("hate"),
        "False" => Ok("no-hate"),
        _ => Err(Error::InvalidModelOutput(raw.to_string())),
    }
}

#[derive(Debug, Clone)]
pub struct CorpusItem {
    pub item_id: String,
    pub text: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestFailure {
    pub item_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestCounts {
    pub requested: usize,
    pub skipped_existing: usize,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub endpoint: String,
    pub model: String,
    pub api_key_env: Option<String>,
    pub max_parallel: usize,
    pub timeout_ms: u64,
    pub retries: u32,
    pub response_content_pointer: String,
    pub decoding: DecodingParams,
    pub prompt_separator: String,
    pub started_at: String,
    pub finished_at: String,
    pub counts: ManifestCounts,
    pub failures: Vec<ManifestFailure>,
    pub notes: Vec<String>,
    pub complete: bool,
}

#[derive(Debug)]
pub struct AnnotateOutcome {
    /// Records for newly annotated items, in corpus item order.
    pub new_records: Vec<AnnotationRecord>,
    pub manifest: RunManifest,
}

struct ItemOutcome {
    label: std::result::Result<&'static str, String>,
    greedy_fallback: bool,
}

/// Annotates every item not already covered by `existing` records for
/// this model. Items that fail (transport errors after retries, invalid
/// model output) are listed in the manifest; the run is marked complete
/// only when nothing failed. The API key, when configured, is read from
/// the environment and never appears in any output.
pub fn annotate_corpus(
    items: &[CorpusItem],
    config: &AnnotatorEndpointConfig,
    params: &DecodingParams,
    existing: &[AnnotationRecord],
) -> Result<AnnotateOutcome> {
    if items.is_empty() {
        return Err(Error::InvalidInput("no items to annotate".into()));
    }
    config.validate()?;
    let api_key = match &config.api_key_env {
        Some(var) => Some(std::env::var(var).map_err(|_| Error::MissingApiKey(var.clone()))?),
        None => None,
    };

    let covered: HashSet<&str> = existing
        .iter()
        .filter(|r| r.rater_id == config.model_name)
        .map(|r| r.item_id.as_str())
        .collect();
    let todo: Vec<&CorpusItem> = items
        .iter()
        .filter(|i| !covered.contains(i.item_id.as_str()))
        .collect();

    let started_at = now_rfc3339();
    let client = reqwest::blocking::Client::builder()
        .timeout(config.timeout)
        .build()
        .map_err(|e| Error::Http(e.to_string()))?;

    let outcomes: Vec<ItemOutcome> = parallel_map(&todo, config.max_parallel, |item| {
        annotate_one(&client, config, params, api_key.as_deref(), item)
    });
    let finished_at = now_rfc3339();

    let mut new_records = Vec::new();
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for (item, outcome) in todo.iter().zip(&outcomes) {
        if outcome.greedy_fallback {
            notes.push(format!(
                "item {}: endpoint rejected sampling parameters; resent greedy",
                item.item_id
            ));
        }
        match &outcome.label {
            Ok(label) => new_records.push(AnnotationRecord {
                item_id: item.item_id.clone(),
                rater_id: config.model_name.clone(),
                label: (*label).to_string(),
            }),
            Err(reason) => failures.push(ManifestFailure {
                item_id: item.item_id.clone(),
                reason: reason.clone(),
            }),
        }
    }

    let counts = ManifestCounts {
        requested: items.len(),
        skipped_existing: items.len() - todo.len(),
        succeeded: new_records.len(),
        failed: failures.len(),
    };
    let complete = failures.is_empty();
    Ok(AnnotateOutcome {
        new_records,
        manifest: RunManifest {
            endpoint: config.base_url.to_string(),
            model: config.model_name.clone(),
            api_key_env: config.api_key_env.clone(),
            max_parallel: config.max_parallel,
            timeout_ms: config.timeout.as_millis() as u64,
            retries: config.retries,
            response_content_pointer: config.response_content_pointer.clone(),
            decoding: *params,
            prompt_separator: PROMPT_SEPARATOR.to_string(),
            started_at,
            finished_at,
            counts,
            failures,
            notes,
            complete,
        },
    })
}

fn annotate_one(
    client: &reqwest::blocking::Client,
    config: &AnnotatorEndpointConfig,
    params: &DecodingParams,
    api_key: Option<&str>,
    item: &CorpusItem,
) -> ItemOutcome {
    let payload = match build_request(&item.text, &config.model_name, params) {
        Ok(p) => p,
        Err(e) => {
            return ItemOutcome {
                label: Err(e.to_string()),
                greedy_fallback: false,
            }
        }
    };

    let mut fell_back = false;
    let mut attempt: u32 = 0;
    let fail = |reason: String, fell_back: bool| ItemOutcome {
        label: Err(reason),
        greedy_fallback: fell_back,
    };

    loop {
        let body = if fell_back {
            greedy_request(&payload)
        } else {
            payload.clone()
        };
        let mut request = client.post(config.base_url.clone()).json(&body);
        if let Some(key) = api_key {
            request = request.header("Authorization", format!("Bearer {key}"));
        }

        match request.send() {
            Err(e) => {
                if attempt < config.retries {
                    std::thread::sleep(backoff(attempt));
                    attempt += 1;
                } else {
                    return fail(
                        format!("request failed after {} attempts: {e}", attempt + 1),
                        fell_back,
                    );
                }
            }
            Ok(response) => {
                let status = response.status();
                if status.is_success() {
                    let value: Value = match response.json() {
                        Ok(v) => v,
                        Err(e) => return fail(format!("unreadable response body: {e}"), fell_back),
                    };
                    let content = match value
                        .pointer(&config.response_content_pointer)
                        .and_then(Value::as_str)
                    {
                        Some(s) => s,
                        None => {
                            return fail(
                                format!(
                                    "unexpected response shape: no string at {}",
                                    config.response_content_pointer
                                ),
                                fell_back,
                            )
                        }
                    };
                    return match parse_response(content) {
                        Ok(label) => ItemOutcome {
                            label: Ok(label),
                            greedy_fallback: fell_back,
                        },
                        Err(e) => fail(e.to_string(), fell_back),
                    };
                } else if status.as_u16() == 400 && !fell_back {
                    // Some endpoints refuse max_tokens=1 alongside the
                    // sampling knobs; retry once greedy, as documented
                    // in the manifest note.
                    fell_back = true;
                } else if status.as_u16() == 429 || status.is_server_error() {
                    if attempt < config.retries {
                        std::thread::sleep(backoff(attempt));
                        attempt += 1;
                    } else {
                        return fail(
                            format!("HTTP {status} after {} attempts", attempt + 1),
                            fell_back,
                        );
                    }
                } else {
                    return fail(format!("HTTP {status}"), fell_back);
                }
            }
        }
    }
}

fn backoff(attempt: u32) -> Duration {
    Duration::from_millis(100u64.saturating_mul(1 << attempt.min(6)))
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}
