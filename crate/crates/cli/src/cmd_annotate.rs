//! `annotate`: label a corpus through a chat-style HTTP endpoint, one
//! machine rater per model name. Reruns resume: items already covered by
//! this model in the output file are not requested again.

use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use ratereval::annotator::{annotate_corpus, AnnotatorEndpointConfig, CorpusItem, DecodingParams};
use ratereval::ingest::{read_annotations, read_items, AnnotationFormat, AnnotationRecord};
use serde_json::Value;
use url::Url;

use crate::outputs::{envelope, json_doc, to_value, OutputSet};

#[derive(Args, Debug)]
pub struct AnnotateArgs {
    /// Corpus JSONL: one object per line with item_id and text
    #[arg(long)]
    pub items: PathBuf,

    /// Output directory for annotations.jsonl and manifest.json
    #[arg(long)]
    pub out: PathBuf,

    /// Existing annotations to resume from (default: OUT/annotations.jsonl
    /// when present)
    #[arg(long)]
    pub annotations: Option<PathBuf>,

    /// Chat-completions style endpoint URL
    #[arg(long)]
    pub endpoint: Url,

    /// Model name, sent in every request and used as the rater id
    #[arg(long)]
    pub model: String,

    /// Environment variable holding the API key; the key itself never
    /// reaches any output file
    #[arg(long = "api-key-env", value_name = "VAR")]
    pub api_key_env: Option<String>,

    /// Concurrent requests in flight
    #[arg(long = "max-parallel", default_value_t = 4)]
    pub max_parallel: usize,

    /// Per-request timeout in seconds
    #[arg(long = "timeout-secs", default_value_t = 30)]
    pub timeout_secs: u64,

    /// Retry budget per item for transient failures
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
}

pub fn run(args: &AnnotateArgs) -> Result<()> {
    let corpus = load_corpus(&args.items)?;
    let existing = load_existing(args)?;

    let mut config = AnnotatorEndpointConfig::new(args.endpoint.clone(), args.model.clone());
    config.api_key_env = args.api_key_env.clone();
    config.max_parallel = args.max_parallel;
    config.timeout = Duration::from_secs(args.timeout_secs);
    config.retries = args.retries;

    let outcome = annotate_corpus(&corpus, &config, &DecodingParams::default(), &existing)?;

    let mut merged: Vec<AnnotationRecord> = existing;
    merged.extend(outcome.new_records.iter().cloned());
    let position: std::collections::HashMap<&str, usize> = corpus
        .iter()
        .enumerate()
        .map(|(i, item)| (item.item_id.as_str(), i))
        .collect();
    merged.sort_by_key(|r| {
        position
            .get(r.item_id.as_str())
            .copied()
            .unwrap_or(usize::MAX)
    });

    let mut jsonl = String::new();
    for record in &merged {
        jsonl.push_str(&serde_json::to_string(record)?);
        jsonl.push('\n');
    }

    let cli_config = annotate_config(args);
    let manifest_doc = envelope(&cli_config, &[("manifest", to_value(&outcome.manifest)?)]);

    let mut set = OutputSet::new(&args.out);
    set.add("annotations.jsonl", jsonl);
    set.add("manifest.json", json_doc(&manifest_doc)?);
    for path in set.commit()? {
        println!("wrote {}", path.display());
    }

    let counts = &outcome.manifest.counts;
    println!(
        "annotated {} of {} items ({} already covered, {} failed)",
        counts.succeeded, counts.requested, counts.skipped_existing, counts.failed,
    );
    if !outcome.manifest.complete {
        eprintln!(
            "warning: run incomplete, {} item(s) failed; see manifest.json",
            counts.failed,
        );
    }
    Ok(())
}

fn load_corpus(path: &PathBuf) -> Result<Vec<CorpusItem>> {
    let items = read_items(path).with_context(|| format!("reading corpus {}", path.display()))?;
    let mut corpus = Vec::with_capacity(items.len());
    for (item_id, info) in items {
        let Some(text) = info.text else {
            bail!("corpus item {item_id} has no text field");
        };
        corpus.push(CorpusItem { item_id, text });
    }
    Ok(corpus)
}

/// The resume source: an explicit --annotations path must exist; the
/// default OUT/annotations.jsonl is optional.
fn load_existing(args: &AnnotateArgs) -> Result<Vec<AnnotationRecord>> {
    let (path, required) = match &args.annotations {
        Some(p) => (p.clone(), true),
        None => (args.out.join("annotations.jsonl"), false),
    };
    if !path.exists() {
        if required {
            bail!("annotations file {} does not exist", path.display());
        }
        return Ok(Vec::new());
    }
    read_annotations(&path, AnnotationFormat::Jsonl)
        .with_context(|| format!("reading existing annotations {}", path.display()))
}

fn annotate_config(args: &AnnotateArgs) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("command".into(), Value::String("annotate".into()));
    map.insert(
        "items".into(),
        Value::String(args.items.display().to_string()),
    );
    map.insert("out".into(), Value::String(args.out.display().to_string()));
    if let Some(p) = &args.annotations {
        map.insert("annotations".into(), Value::String(p.display().to_string()));
    }
    map.insert("endpoint".into(), Value::String(args.endpoint.to_string()));
    map.insert("model".into(), Value::String(args.model.clone()));
    if let Some(var) = &args.api_key_env {
        map.insert("api_key_env".into(), Value::String(var.clone()));
    }
    map.insert(
        "max_parallel".into(),
        Value::Number(args.max_parallel.into()),
    );
    map.insert(
        "timeout_secs".into(),
        Value::Number(args.timeout_secs.into()),
    );
    map.insert("retries".into(), Value::Number(args.retries.into()));
    Value::Object(map)
}
