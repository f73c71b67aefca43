use anyhow::Result;
use serde_json::json;

use pedattr_core::io::{read_dataset, read_split};
use pedattr_core::split::{verify_split, SplitMethod, Thresholds};

use crate::args::VerifyArgs;
use crate::envelope::{Payload, ReportEnvelope};
use crate::settings::resolve_opt;
use crate::Ctx;

use super::print_criteria_table;

pub fn run(args: VerifyArgs, ctx: &Ctx) -> Result<u8> {
    let dataset = read_dataset(&args.dataset)?;
    let split = read_split(&args.split, &dataset)?;

    // Unspecified thresholds fall back to those the split was searched
    // with, then to the defaults.
    let stored = match split.method() {
        SplitMethod::Search { thresholds, .. } => Some(*thresholds),
        SplitMethod::Random { .. } => None,
    };
    let defaults = Thresholds::default();
    let pick = |flag: Option<u64>, key, from_stored: fn(&Thresholds) -> u64, dflt| {
        resolve_opt(flag, key, None)
            .map(|v| v.or_else(|| stored.as_ref().map(from_stored)).unwrap_or(dflt))
    };
    let thresholds = Thresholds {
        t_id: pick(args.t_id, "T_ID", |t| t.t_id, defaults.t_id)?,
        t_img: pick(args.t_img, "T_IMG", |t| t.t_img, defaults.t_img)?,
        t_attr: resolve_opt(args.t_attr, "T_ATTR", None)?
            .or_else(|| stored.as_ref().map(|t| t.t_attr))
            .unwrap_or(defaults.t_attr),
        max_trials: stored.map_or(defaults.max_trials, |t| t.max_trials),
    };

    let run_config = json!({
        "command": "verify",
        "dataset": args.dataset,
        "split": args.split,
        "report": ctx.report_path,
        "config": ctx.config_path,
        "threads": ctx.threads,
        "t_id": thresholds.t_id,
        "t_img": thresholds.t_img,
        "t_attr": thresholds.t_attr,
        "strict": args.strict,
    });
    log::info!("resolved run config: {run_config}");

    let report = verify_split(&dataset, &split, &thresholds);
    print_criteria_table(&report);

    let exit = u8::from(args.strict && !report.pass);
    let payload = Payload::Criteria {
        strict: args.strict,
        report,
    };
    ReportEnvelope::new(
        "verify",
        run_config,
        &[&args.dataset, &args.split],
        payload,
    )?
    .write(&ctx.report_path)?;
    Ok(exit)
}
