//! `errors`: confusion counts for a prediction source against a gold
//! source, and per-target miss rates when item metadata is available.

use anyhow::{bail, Context, Result};
use clap::Args;
use ratereval::aggregation::targets_by_item;
use ratereval::error_analysis::{
    confusion_counts, per_target_false_positive_rates, per_target_miss_rates,
};
use serde_json::{json, Value};

use crate::inputs::{self, SourceSpec};
use crate::outputs::{
    csv_field, envelope, json_doc, md_cell, md_preamble, md_table, run_config, to_value, OutputSet,
};
use crate::{DataArgs, FormatFamily, OutArgs};

#[derive(Args, Debug)]
pub struct ErrorsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutArgs,

    /// Gold label source: majority:GROUP, consensus:GROUP, or rater:ID
    #[arg(long, value_name = "KIND:NAME")]
    pub gold: String,

    /// Prediction source to score, same spec forms as --gold
    #[arg(long, value_name = "KIND:NAME")]
    pub pred: String,

    /// Also emit the per-target false-positive-rate view
    #[arg(long = "fp-rates")]
    pub fp_rates: bool,
}

pub fn run(args: &ErrorsArgs) -> Result<()> {
    let loaded = inputs::load(&args.data)?;
    let gold_spec = SourceSpec::parse(&args.gold)?;
    let pred_spec = SourceSpec::parse(&args.pred)?;

    let gold = gold_spec
        .resolve(&loaded.matrix, &loaded.groups)
        .with_context(|| format!("resolving gold source {}", gold_spec.label()))?;
    let pred = pred_spec
        .resolve(&loaded.matrix, &loaded.groups)
        .with_context(|| format!("resolving prediction source {}", pred_spec.label()))?;
    let (gold, pred) = inputs::align(&gold, &pred)?;

    let confusion = confusion_counts(&gold, &pred)?;
    let f1 = confusion.f1().ok();

    let targets = match &loaded.items {
        Some(items) => {
            let map = targets_by_item(items);
            if map.is_empty() {
                None
            } else {
                Some(map)
            }
        }
        None => None,
    };
    if args.fp_rates && targets.is_none() {
        bail!("--fp-rates needs --items metadata with per-item targets");
    }
    let miss_rows = match &targets {
        Some(map) => Some(per_target_miss_rates(&gold, &pred, map)?),
        None => None,
    };
    let fp_rows = match (&targets, args.fp_rates) {
        (Some(map), true) => Some(per_target_false_positive_rates(&gold, &pred, map)?),
        _ => None,
    };

    let mut config = run_config("errors", &args.data, &args.out);
    if let Value::Object(map) = &mut config {
        map.insert("gold".into(), Value::String(gold_spec.label()));
        map.insert("pred".into(), Value::String(pred_spec.label()));
        map.insert("fp_rates".into(), Value::Bool(args.fp_rates));
    }

    let mut set = OutputSet::new(&args.out.out);
    if args.out.wants(FormatFamily::Json) {
        let mut sections = vec![
            ("harmonization", to_value(&loaded.harmonization)?),
            ("n_items", Value::Number(gold.len().into())),
            ("confusion", to_value(&confusion)?),
            ("f1", json!(f1)),
        ];
        if let Some(rows) = &miss_rows {
            sections.push(("miss_rates", to_value(rows)?));
        }
        if let Some(rows) = &fp_rows {
            sections.push(("false_positive_rates", to_value(rows)?));
        }
        let doc = envelope(&config, &sections);
        set.add("errors.json", json_doc(&doc)?);
    }
    if args.out.wants(FormatFamily::Md) {
        let mut md = md_preamble("Error analysis", &config)?;
        md.push_str(&format!(
            "\nScoring {} against {} over {} shared items.\n\n## Confusion\n\n",
            pred_spec.label(),
            gold_spec.label(),
            gold.len(),
        ));
        md.push_str(&md_table(
            &["tp", "fp", "fn", "tn", "F1"],
            &[vec![
                confusion.true_pos.to_string(),
                confusion.false_pos.to_string(),
                confusion.false_neg.to_string(),
                confusion.true_neg.to_string(),
                md_cell(f1),
            ]],
        ));
        if let Some(rows) = &miss_rows {
            md.push_str("\n## Missed positives per target\n\n");
            md.push_str(&md_table(
                &["target", "gold positives", "missed", "missed %"],
                &rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.target.clone(),
                            r.n_gold_hate.to_string(),
                            r.n_missed.to_string(),
                            format!("{:.1}", r.missed_pct),
                        ]
                    })
                    .collect::<Vec<_>>(),
            ));
        } else {
            md.push_str("\nNo per-target table: item metadata with targets was not provided.\n");
        }
        if let Some(rows) = &fp_rows {
            md.push_str("\n## False positives per target\n\n");
            md.push_str(&md_table(
                &["target", "gold negatives", "false positives", "false positive %"],
                &rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.target.clone(),
                            r.n_gold_nohate.to_string(),
                            r.n_false_pos.to_string(),
                            format!("{:.1}", r.false_pos_pct),
                        ]
                    })
                    .collect::<Vec<_>>(),
            ));
        }
        set.add("errors.md", md);
    }
    if args.out.wants(FormatFamily::Csv) {
        if let Some(rows) = &miss_rows {
            let mut csv = String::from("target,n_gold_hate,n_missed,missed_pct\n");
            for r in rows {
                csv.push_str(&format!(
                    "{},{},{},{:.1}\n",
                    csv_field(&r.target),
                    r.n_gold_hate,
                    r.n_missed,
                    r.missed_pct,
                ));
            }
            set.add("targets.csv", csv);
        } else {
            eprintln!("note: no per-target CSV, item metadata with targets was not provided");
        }
        if let Some(rows) = &fp_rows {
            let mut csv = String::from("target,n_gold_nohate,n_false_pos,false_pos_pct\n");
            for r in rows {
                csv.push_str(&format!(
                    "{},{},{},{:.1}\n",
                    csv_field(&r.target),
                    r.n_gold_nohate,
                    r.n_false_pos,
                    r.false_pos_pct,
                ));
            }
            set.add("targets_fp.csv", csv);
        }
    }

    for path in set.commit()? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
