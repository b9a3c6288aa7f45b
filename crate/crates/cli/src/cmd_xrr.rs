//! `xrr`: cross-replication reliability between two rater groups, with the
//! normalization by within-group reliability.

use anyhow::{bail, Context, Result};
use clap::Args;
use ratereval::xrr::normalized_cross_kappa;
use serde_json::Value;

use crate::inputs;
use crate::outputs::{
    csv_field, envelope, fmt3, json_doc, md_preamble, md_table, run_config, to_value, OutputSet,
};
use crate::{DataArgs, FormatFamily, OutArgs};

#[derive(Args, Debug)]
pub struct XrrArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutArgs,

    /// First rater group (defaults to the first group in --groups)
    #[arg(long = "group-a", value_name = "NAME")]
    pub group_a: Option<String>,

    /// Second rater group (defaults to the second group in --groups)
    #[arg(long = "group-b", value_name = "NAME")]
    pub group_b: Option<String>,
}

pub fn run(args: &XrrArgs) -> Result<()> {
    let loaded = inputs::load(&args.data)?;
    if loaded.groups.len() < 2 {
        bail!("cross-replication needs two rater groups; the groups file defines {}", loaded.groups.len());
    }
    let group_a = match &args.group_a {
        Some(name) => inputs::find_group(&loaded.groups, name)?,
        None => &loaded.groups[0],
    };
    let group_b = match &args.group_b {
        Some(name) => inputs::find_group(&loaded.groups, name)?,
        None => &loaded.groups[1],
    };
    if group_a.name() == group_b.name() {
        bail!("cross-replication needs two distinct groups, got {} twice", group_a.name());
    }

    let result = normalized_cross_kappa(&loaded.matrix, group_a, group_b).with_context(|| {
        format!(
            "cross-replication between {} and {}",
            group_a.name(),
            group_b.name()
        )
    })?;

    let mut config = run_config("xrr", &args.data, &args.out);
    if let Value::Object(map) = &mut config {
        map.insert("group_a".into(), Value::String(group_a.name().to_string()));
        map.insert("group_b".into(), Value::String(group_b.name().to_string()));
    }

    let mut set = OutputSet::new(&args.out.out);
    if args.out.wants(FormatFamily::Json) {
        let doc = envelope(
            &config,
            &[
                ("harmonization", to_value(&loaded.harmonization)?),
                ("xrr", to_value(&result)?),
            ],
        );
        set.add("report.json", json_doc(&doc)?);
    }
    if args.out.wants(FormatFamily::Md) {
        let mut md = md_preamble("Cross-replication reliability", &config)?;
        md.push('\n');
        md.push_str(&md_table(
            &[
                "groups",
                "kappa_x",
                "within A",
                "within B",
                "normalized kappa_x",
                "items",
            ],
            &[vec![
                format!("{} vs {}", result.group_a, result.group_b),
                fmt3(result.kappa_x),
                fmt3(result.kappa_within_a),
                fmt3(result.kappa_within_b),
                fmt3(result.normalized_kappa_x),
                result.n_items.to_string(),
            ]],
        ));
        if result.out_of_range {
            md.push_str("\nNote: the normalized value falls outside [-1, 1]; it is reported unclipped.\n");
        }
        set.add("xrr.md", md);
    }
    if args.out.wants(FormatFamily::Csv) {
        let mut csv = String::from(
            "group_a,group_b,kappa_x,kappa_within_a,kappa_within_b,normalized_kappa_x,n_items,out_of_range\n",
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_field(&result.group_a),
            csv_field(&result.group_b),
            fmt3(result.kappa_x),
            fmt3(result.kappa_within_a),
            fmt3(result.kappa_within_b),
            fmt3(result.normalized_kappa_x),
            result.n_items,
            result.out_of_range,
        ));
        set.add("xrr.csv", csv);
    }

    for path in set.commit()? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
