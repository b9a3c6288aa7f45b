//! `rankcorr`: does an alternative label source preserve the ranking that
//! the gold labels induce over a family of synthetic classifiers? One row
//! per evaluation source, plus the per-trial scores for plotting.

use anyhow::{bail, Context, Result};
use clap::Args;
use ratereval::aggregation::{majority_vote, Coverage};
use ratereval::ranking::{ranking_correlation, DegradationSchedule, RankingCorrelation};
use serde_json::{json, Value};

use crate::inputs::{self, SourceSpec};
use crate::outputs::{
    envelope, fmt3, json_doc, md_preamble, md_table, run_config, to_value, OutputSet,
};
use crate::{DataArgs, FormatFamily, OutArgs};

#[derive(Args, Debug)]
pub struct RankcorrArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutArgs,

    /// Group whose majority vote is the gold standard
    #[arg(long = "gold-group", value_name = "NAME")]
    pub gold_group: String,

    /// Evaluation label source, repeatable: majority:GROUP, consensus:GROUP,
    /// or rater:ID. Defaults to every non-gold group's consensus, majority,
    /// and members, then each gold-group member
    #[arg(long = "eval-source", value_name = "KIND:NAME")]
    pub eval_source: Vec<String>,

    /// Degradation levels as START:STOP:STEP (inclusive) or a comma list
    #[arg(long, default_value = "0:50:5")]
    pub levels: String,

    /// Degradation trials per level
    #[arg(long, default_value_t = 10)]
    pub trials: usize,

    /// Add the mean absolute F1 difference column to the Markdown table
    #[arg(long)]
    pub abs: bool,
}

/// One scored evaluation source.
struct SourceRow {
    label: String,
    n_items: usize,
    result: RankingCorrelation,
}

pub fn run(args: &RankcorrArgs) -> Result<()> {
    let loaded = inputs::load(&args.data)?;
    let gold_group = inputs::find_group(&loaded.groups, &args.gold_group)?;

    let levels = parse_levels(&args.levels)?;
    let schedule = DegradationSchedule::new(levels.clone(), args.trials, args.out.seed)?;

    let agg = majority_vote(&loaded.matrix, gold_group, Coverage::Complete)?;
    let (gold, gold_ties) = agg.majority_labels();
    if gold.is_empty() {
        bail!(
            "group {} yields no gold labels (no item has complete coverage and a clear majority)",
            gold_group.name()
        );
    }

    let specs = if args.eval_source.is_empty() {
        default_sources(&loaded.groups, gold_group.name())
    } else {
        args.eval_source
            .iter()
            .map(|raw| SourceSpec::parse(raw))
            .collect::<Result<Vec<_>>>()?
    };

    let mut rows = Vec::new();
    for spec in &specs {
        let label = spec.label();
        let source = spec
            .resolve(&loaded.matrix, &loaded.groups)
            .with_context(|| format!("resolving evaluation source {label}"))?;
        let (h, l) = inputs::align(&gold, &source)
            .with_context(|| format!("aligning {label} with the gold standard"))?;
        let result = ranking_correlation(&h, &l, &schedule, args.out.threads)
            .with_context(|| format!("ranking correlation for {label}"))?;
        rows.push(SourceRow {
            label,
            n_items: h.len(),
            result,
        });
    }

    let mut config = run_config("rankcorr", &args.data, &args.out);
    if let Value::Object(map) = &mut config {
        map.insert(
            "gold_group".into(),
            Value::String(gold_group.name().to_string()),
        );
        map.insert("levels".into(), json!(levels));
        map.insert("trials".into(), Value::Number(args.trials.into()));
        map.insert(
            "eval_sources".into(),
            Value::Array(
                specs
                    .iter()
                    .map(|s| Value::String(s.label()))
                    .collect(),
            ),
        );
    }

    let mut set = OutputSet::new(&args.out.out);
    if args.out.wants(FormatFamily::Json) {
        let sources: Vec<Value> = rows
            .iter()
            .map(|row| -> Result<Value> {
                Ok(json!({
                    "source": row.label,
                    "n_items": row.n_items,
                    "tau": row.result.tau,
                    "mean_f1_diff": row.result.mean_f1_diff,
                    "mean_abs_f1_diff": row.result.mean_abs_f1_diff,
                    "levels": to_value(&row.result.levels)?,
                }))
            })
            .collect::<Result<_>>()?;
        let doc = envelope(
            &config,
            &[
                ("harmonization", to_value(&loaded.harmonization)?),
                ("gold_items", Value::Number(gold.len().into())),
                ("gold_majority_ties", Value::Number(gold_ties.into())),
                ("sources", Value::Array(sources)),
            ],
        );
        set.add("report.json", json_doc(&doc)?);
    }
    if args.out.wants(FormatFamily::Md) {
        let mut md = md_preamble("Ranking correlation", &config)?;
        md.push_str(&format!(
            "\nGold standard: majority vote of {} over {} items ({} ties dropped).\n\n",
            gold_group.name(),
            gold.len(),
            gold_ties,
        ));
        let mut headers = vec!["source", "items", "tau", "mean F1 diff"];
        if args.abs {
            headers.push("mean |F1 diff|");
        }
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|row| {
                let mut cells = vec![
                    row.label.clone(),
                    row.n_items.to_string(),
                    fmt3(row.result.tau),
                    fmt3(row.result.mean_f1_diff),
                ];
                if args.abs {
                    cells.push(fmt3(row.result.mean_abs_f1_diff));
                }
                cells
            })
            .collect();
        md.push_str(&md_table(&headers, &table));
        set.add("rankcorr.md", md);
    }
    if args.out.wants(FormatFamily::Csv) {
        let mut csv = String::from("source,p,trial,f1_h,f1_l\n");
        for row in &rows {
            for point in &row.result.points {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    crate::outputs::csv_field(&row.label),
                    fmt3(point.p),
                    point.trial,
                    fmt3(point.f1_h),
                    fmt3(point.f1_l),
                ));
            }
        }
        set.add("points.csv", csv);
    }

    for path in set.commit()? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Without explicit sources: each non-gold group contributes its consensus,
/// its majority, and every member; the gold group contributes its members,
/// so every individual rater gets a row.
fn default_sources(groups: &[ratereval::model::RaterGroup], gold: &str) -> Vec<SourceSpec> {
    let mut specs = Vec::new();
    for g in groups.iter().filter(|g| g.name() != gold) {
        specs.push(SourceSpec::Consensus(g.name().to_string()));
        specs.push(SourceSpec::Majority(g.name().to_string()));
        for m in g.members() {
            specs.push(SourceSpec::Rater(m.clone()));
        }
    }
    if let Some(g) = groups.iter().find(|g| g.name() == gold) {
        for m in g.members() {
            specs.push(SourceSpec::Rater(m.clone()));
        }
    }
    specs
}

/// Levels come either as an inclusive START:STOP:STEP sweep or as an
/// explicit comma list.
pub fn parse_levels(raw: &str) -> Result<Vec<f64>> {
    let parse_one = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .with_context(|| format!("level {s:?} is not a number"))
    };
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            bail!("level sweep must be START:STOP:STEP, got {raw:?}");
        }
        let start = parse_one(parts[0])?;
        let stop = parse_one(parts[1])?;
        let step = parse_one(parts[2])?;
        if !(step > 0.0) {
            bail!("level sweep step must be positive, got {step}");
        }
        if stop < start {
            bail!("level sweep stop {stop} is below start {start}");
        }
        let mut levels = Vec::new();
        let mut k = 0u32;
        loop {
            let v = start + f64::from(k) * step;
            if v > stop + step * 1e-9 {
                break;
            }
            levels.push(v);
            k += 1;
        }
        Ok(levels)
    } else {
        raw.split(',').map(parse_one).collect()
    }
}
