//! Report emission: in-memory accumulation with all-or-nothing commit, a
//! shared 3-decimal formatter for the human-readable families, and small
//! Markdown/CSV builders.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

pub use ratereval::util::fmt3;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Collects every output file in memory; nothing touches the disk until
/// `commit`, and a failed commit removes whatever it had written, so a
/// failing run never leaves a torn report behind.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, content: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), content.into()));
    }

    pub fn commit(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating {}", self.dir.display()))?;
        let mut written = Vec::new();
        for (name, content) in &self.files {
            let path = self.dir.join(name);
            if let Err(e) = fs::write(&path, content) {
                for done in &written {
                    let _ = fs::remove_file(done);
                }
                return Err(e).with_context(|| format!("writing {}", path.display()));
            }
            written.push(path);
        }
        Ok(written)
    }
}

/// Canonical JSON document: sorted keys, two-space indent, trailing
/// newline. Full precision; the 3-decimal formatter is for md/csv only.
pub fn json_doc(value: &Value) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Standard report envelope: version, echoed config, then the payload
/// sections in the order given.
pub fn envelope(config: &Value, sections: &[(&str, Value)]) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("version".into(), Value::String(VERSION.to_string()));
    map.insert("config".into(), config.clone());
    for (key, value) in sections {
        map.insert((*key).to_string(), value.clone());
    }
    Value::Object(map)
}

pub fn to_value(value: &impl Serialize) -> Result<Value> {
    Ok(serde_json::to_value(value)?)
}

/// Markdown header shared by every .md report: title, version line, and
/// the echoed config in a fenced block.
pub fn md_preamble(title: &str, config: &Value) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("# {title}\n\n"));
    out.push_str(&format!(
        "Written by ratereval {VERSION}. Values are rounded to 3 decimals; \"—\" marks a comparison that could not be scored (see notes).\n\n"
    ));
    out.push_str("## Config\n\n```json\n");
    out.push_str(&serde_json::to_string_pretty(config)?);
    out.push_str("\n```\n");
    Ok(out)
}

pub fn md_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push('|');
    for h in headers {
        out.push(' ');
        out.push_str(h);
        out.push_str(" |");
    }
    out.push('\n');
    out.push('|');
    for _ in headers {
        out.push_str("---|");
    }
    out.push('\n');
    for row in rows {
        out.push('|');
        for cell in row {
            out.push(' ');
            out.push_str(cell);
            out.push_str(" |");
        }
        out.push('\n');
    }
    out
}

/// One Markdown table cell per value; `None` renders as a dash placeholder.
pub fn md_cell(value: Option<f64>) -> String {
    match value {
        Some(v) => fmt3(v),
        None => "—".to_string(),
    }
}

/// CSV cell for an optional statistic; unscorable values print as NA.
pub fn csv_cell(value: Option<f64>) -> String {
    match value {
        Some(v) => fmt3(v),
        None => "NA".to_string(),
    }
}

/// Minimal CSV quoting: wrap and double-quote only when needed.
pub fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

/// The config object echoed into every report: subcommand, input paths,
/// harmonization rules, output settings, and seed. Threads are execution
/// plumbing, not part of the experiment, and are deliberately left out so
/// reruns at any width stay byte-identical.
pub fn run_config(command: &str, data: &crate::DataArgs, out: &crate::OutArgs) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("command".into(), Value::String(command.to_string()));
    map.insert(
        "annotations".into(),
        Value::String(data.annotations.display().to_string()),
    );
    if let Some(fmt) = data.annotations_format {
        map.insert(
            "annotations_format".into(),
            Value::String(format!("{fmt:?}").to_lowercase()),
        );
    }
    if let Some(items) = &data.items {
        map.insert("items".into(), Value::String(items.display().to_string()));
    }
    map.insert(
        "groups".into(),
        Value::String(data.groups.display().to_string()),
    );
    map.insert("categories".into(), Value::String(data.categories.clone()));
    if let Some(pos) = &data.positive {
        map.insert("positive".into(), Value::String(pos.clone()));
    }
    if !data.map.is_empty() {
        map.insert(
            "map".into(),
            Value::Array(data.map.iter().cloned().map(Value::String).collect()),
        );
    }
    if !data.drop_label.is_empty() {
        map.insert(
            "drop_label".into(),
            Value::Array(data.drop_label.iter().cloned().map(Value::String).collect()),
        );
    }
    if let Some(n) = data.require_raters {
        map.insert("require_raters".into(), Value::Number(n.into()));
    }
    map.insert("out".into(), Value::String(out.out.display().to_string()));
    map.insert(
        "format".into(),
        Value::Array(
            out.format
                .iter()
                .map(|f| Value::String(f.as_str().to_string()))
                .collect(),
        ),
    );
    map.insert("seed".into(), Value::Number(out.seed.into()));
    Value::Object(map)
}
