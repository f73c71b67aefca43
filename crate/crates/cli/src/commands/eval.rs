use anyhow::Result;
use serde_json::json;

use pedattr_core::io::{read_dataset, read_predictions, read_split};
use pedattr_core::metrics::{
    evaluate, stratified_eval, threshold_predictions, LabelMatrix,
};

use crate::args::EvalArgs;
use crate::envelope::{Payload, ReportEnvelope};
use crate::settings::{resolve, resolve_policy};
use crate::Ctx;

use super::{print_metrics_header, print_metrics_row};

pub fn run(args: EvalArgs, ctx: &Ctx) -> Result<u8> {
    let threshold = resolve(args.threshold, "THRESHOLD", ctx.file.eval.threshold, 0.5)?;
    let policy = resolve_policy(args.zero_division, ctx.file.eval.zero_division.as_deref())?;
    let stratify = args.stratify || ctx.file.eval.stratify.unwrap_or(false);
    let skip_degenerate =
        args.skip_degenerate || ctx.file.eval.skip_degenerate.unwrap_or(false);

    let run_config = json!({
        "command": "eval",
        "dataset": args.dataset,
        "split": args.split,
        "preds": args.preds,
        "report": ctx.report_path,
        "config": ctx.config_path,
        "threads": ctx.threads,
        "threshold": threshold,
        "zero_division": policy,
        "stratify": stratify,
        "skip_degenerate": skip_degenerate,
        "allow_checksum_mismatch": args.allow_checksum_mismatch,
    });
    log::info!("resolved run config: {run_config}");

    let dataset = read_dataset(&args.dataset)?;
    let split = read_split(&args.split, &dataset)?;
    let (preds, coverage) =
        read_predictions(&args.preds, &dataset, args.allow_checksum_mismatch)?;
    if coverage.missing > 0 {
        log::info!(
            "predictions cover {} of {} dataset samples",
            coverage.covered,
            dataset.len()
        );
    }

    print_metrics_header();
    let payload = if stratify {
        let reports = stratified_eval(
            &preds,
            &dataset,
            &split,
            threshold,
            policy,
            skip_degenerate,
        )?;
        print_metrics_row(&reports.all);
        if let Some(common) = &reports.common {
            print_metrics_row(common);
        }
        if let Some(unique) = &reports.unique {
            print_metrics_row(unique);
        }
        Payload::StratifiedMetrics {
            covered: coverage.covered,
            missing: coverage.missing,
            reports,
        }
    } else {
        let test_preds = preds.select(split.test())?;
        let binary = threshold_predictions(&test_preds, threshold)?;
        let labels = LabelMatrix::from_dataset(&dataset, split.test());
        let report = evaluate(
            &binary,
            &labels,
            dataset.schema().names(),
            policy,
            skip_degenerate,
            "test",
        )?;
        print_metrics_row(&report);
        Payload::Metrics {
            covered: coverage.covered,
            missing: coverage.missing,
            report,
        }
    };
    ReportEnvelope::new(
        "eval",
        run_config,
        &[&args.dataset, &args.split, &args.preds],
        payload,
    )?
    .write(&ctx.report_path)?;
    Ok(0)
}
