//! `agree`: the full agreement report over one annotation matrix and its
//! rater groups. Emits report.json (full precision), tables.md (sectioned
//! 3-decimal tables), and heatmap.csv (the pairwise matrix).

use anyhow::Result;
use clap::Args;
use ratereval::agreement::{build_agreement_report, AgreementReport};

use crate::inputs::{self, LoadedData};
use crate::outputs::{
    csv_cell, csv_field, envelope, fmt3, json_doc, md_cell, md_preamble, md_table, run_config,
    to_value, OutputSet,
};
use crate::{DataArgs, FormatFamily, OutArgs};

#[derive(Args, Debug)]
pub struct AgreeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

pub fn run(args: &AgreeArgs) -> Result<()> {
    let loaded = inputs::load(&args.data)?;
    let report = build_agreement_report(&loaded.matrix, &loaded.groups, args.out.threads)?;
    let config = run_config("agree", &args.data, &args.out);

    let mut set = OutputSet::new(&args.out.out);
    if args.out.wants(FormatFamily::Json) {
        let doc = envelope(
            &config,
            &[
                ("harmonization", to_value(&loaded.harmonization)?),
                ("report", to_value(&report)?),
            ],
        );
        set.add("report.json", json_doc(&doc)?);
    }
    if args.out.wants(FormatFamily::Md) {
        set.add("tables.md", render_markdown(&config, &loaded, &report)?);
    }
    if args.out.wants(FormatFamily::Csv) {
        set.add("heatmap.csv", render_heatmap(&report));
    }

    for path in set.commit()? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn render_markdown(
    config: &serde_json::Value,
    loaded: &LoadedData,
    report: &AgreementReport,
) -> Result<String> {
    let mut md = md_preamble("Agreement report", config)?;
    let mut notes: Vec<String> = Vec::new();

    md.push_str(&format!(
        "\nMatrix: {} items x {} raters, {} judgements. Harmonization kept {} of {} items.\n",
        loaded.matrix.n_items(),
        loaded.matrix.n_raters(),
        loaded.harmonization.output_records,
        loaded.harmonization.output_items,
        loaded.harmonization.input_items,
    ));

    md.push_str("\n## Pairwise\n\nCohen's kappa per rater pair, each pair on its shared items.\n\n");
    let raters = &report.pairwise.raters;
    let headers: Vec<&str> = std::iter::once("rater")
        .chain(raters.iter().map(String::as_str))
        .collect();
    let rows: Vec<Vec<String>> = raters
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![r.clone()];
            for j in 0..raters.len() {
                row.push(if i == j {
                    String::new()
                } else {
                    md_cell(report.pairwise.values[i][j])
                });
            }
            row
        })
        .collect();
    md.push_str(&md_table(&headers, &rows));

    md.push_str("\n## Group statistics\n\n");
    let rows: Vec<Vec<String>> = report
        .groups
        .iter()
        .map(|g| {
            if let Some(n) = &g.fleiss_note {
                notes.push(format!("{} Fleiss kappa: {n}", g.group));
            }
            if let Some(n) = &g.krippendorff_note {
                notes.push(format!("{} Krippendorff alpha: {n}", g.group));
            }
            if let Some(n) = &g.mean_pairwise_note {
                notes.push(format!("{} mean pairwise kappa: {n}", g.group));
            }
            vec![
                g.group.clone(),
                g.members.len().to_string(),
                md_cell(g.fleiss.map(|f| f.value)),
                md_cell(g.krippendorff.map(|a| a.value)),
                md_cell(g.mean_pairwise.map(|m| m.value)),
                g.majority_ties.to_string(),
                g.consensus_items.to_string(),
            ]
        })
        .collect();
    md.push_str(&md_table(
        &[
            "group",
            "raters",
            "Fleiss kappa",
            "Krippendorff alpha",
            "mean pairwise kappa",
            "majority ties",
            "consensus items",
        ],
        &rows,
    ));

    md.push_str("\n## Leave-one-out\n\nEach rater against the unanimous labels of the rest of their group.\n\n");
    let mut rows = Vec::new();
    for g in &report.groups {
        if let Some(n) = &g.loo_note {
            notes.push(format!("{} leave-one-out: {n}", g.group));
        }
        for entry in &g.loo {
            if let Some(n) = &entry.note {
                notes.push(format!("{} vs rest of {}: {n}", entry.rater, g.group));
            }
            rows.push(vec![
                g.group.clone(),
                entry.rater.clone(),
                md_cell(entry.kappa),
                entry.n_items.to_string(),
            ]);
        }
    }
    md.push_str(&md_table(&["group", "rater", "kappa", "items"], &rows));
    let loo_means: Vec<String> = report
        .groups
        .iter()
        .map(|g| {
            let defined: Vec<f64> = g.loo.iter().filter_map(|e| e.kappa).collect();
            let mean = if defined.is_empty() {
                "—".to_string()
            } else {
                fmt3(defined.iter().sum::<f64>() / defined.len() as f64)
            };
            format!("{} = {mean}", g.group)
        })
        .collect();
    md.push_str(&format!(
        "\nMean leave-one-out kappa per group: {}.\n",
        loo_means.join(", ")
    ));

    md.push_str("\n## Cross-group\n\nEach rater against the other group's majority labels.\n\n");
    let rows: Vec<Vec<String>> = report
        .cross_group
        .iter()
        .map(|e| {
            if let Some(n) = &e.note {
                notes.push(format!("{} vs {}: {n}", e.source, e.reference));
            }
            vec![
                e.source.clone(),
                e.reference.clone(),
                md_cell(e.kappa),
                e.n_items.to_string(),
            ]
        })
        .collect();
    md.push_str(&md_table(&["rater", "reference", "kappa", "items"], &rows));

    md.push_str("\n## Group level\n\nMajority-vs-majority and consensus-vs-consensus per group pair.\n\n");
    let rows: Vec<Vec<String>> = report
        .group_level
        .iter()
        .map(|e| {
            if let Some(n) = &e.majority_note {
                notes.push(format!("{} vs {} majority: {n}", e.group_a, e.group_b));
            }
            if let Some(n) = &e.consensus_note {
                notes.push(format!("{} vs {} consensus: {n}", e.group_a, e.group_b));
            }
            vec![
                format!("{} vs {}", e.group_a, e.group_b),
                md_cell(e.majority_kappa),
                e.majority_n_items.to_string(),
                md_cell(e.consensus_kappa),
                e.consensus_n_items.to_string(),
            ]
        })
        .collect();
    md.push_str(&md_table(
        &[
            "groups",
            "majority kappa",
            "items",
            "consensus kappa",
            "items",
        ],
        &rows,
    ));

    md.push_str("\n## Cross-replication\n\n");
    let rows: Vec<Vec<String>> = report
        .xrr
        .iter()
        .map(|e| {
            if let Some(n) = &e.note {
                notes.push(format!("{} vs {} cross-replication: {n}", e.group_a, e.group_b));
            }
            match &e.result {
                Some(r) => {
                    let mut normalized = md_cell(Some(r.normalized_kappa_x));
                    if r.out_of_range {
                        normalized.push_str(" (out of range)");
                    }
                    vec![
                        format!("{} vs {}", e.group_a, e.group_b),
                        md_cell(Some(r.kappa_x)),
                        md_cell(Some(r.kappa_within_a)),
                        md_cell(Some(r.kappa_within_b)),
                        normalized,
                        r.n_items.to_string(),
                    ]
                }
                None => vec![
                    format!("{} vs {}", e.group_a, e.group_b),
                    md_cell(None),
                    md_cell(None),
                    md_cell(None),
                    md_cell(None),
                    "0".to_string(),
                ],
            }
        })
        .collect();
    md.push_str(&md_table(
        &[
            "groups",
            "kappa_x",
            "within A",
            "within B",
            "normalized kappa_x",
            "items",
        ],
        &rows,
    ));

    for note in &report.pairwise.notes {
        notes.push(format!(
            "pairwise {} vs {}: {}",
            note.rater_a, note.rater_b, note.reason
        ));
    }

    if !notes.is_empty() {
        md.push_str("\n## Notes\n\n");
        for note in &notes {
            md.push_str(&format!("- {note}\n"));
        }
    }
    Ok(md)
}

/// The symmetric pairwise matrix: empty diagonal, NA for pairs that could
/// not be scored, 3 decimals elsewhere.
fn render_heatmap(report: &AgreementReport) -> String {
    let raters = &report.pairwise.raters;
    let mut csv = String::from("rater");
    for r in raters {
        csv.push(',');
        csv.push_str(&csv_field(r));
    }
    csv.push('\n');
    for (i, r) in raters.iter().enumerate() {
        csv.push_str(&csv_field(r));
        for j in 0..raters.len() {
            csv.push(',');
            if i != j {
                csv.push_str(&csv_cell(report.pairwise.values[i][j]));
            }
        }
        csv.push('\n');
    }
    csv
}
