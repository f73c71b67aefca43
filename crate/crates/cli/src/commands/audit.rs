use anyhow::Result;
use serde_json::json;

use pedattr_core::io::{read_dataset, read_split};
use pedattr_core::metrics::audit_leakage;

use crate::args::AuditArgs;
use crate::envelope::{Payload, ReportEnvelope};
use crate::Ctx;

use super::pct;

pub fn run(args: AuditArgs, ctx: &Ctx) -> Result<u8> {
    let run_config = json!({
        "command": "audit",
        "dataset": args.dataset,
        "split": args.split,
        "report": ctx.report_path,
        "config": ctx.config_path,
        "threads": ctx.threads,
    });
    log::info!("resolved run config: {run_config}");

    let dataset = read_dataset(&args.dataset)?;
    let split = read_split(&args.split, &dataset)?;
    let audit = audit_leakage(&dataset, &split);

    println!(
        "test images: {} ({} common-identity, {} unique-identity, {} unidentified)",
        audit.test_size, audit.common_images, audit.unique_images, audit.unidentified_images
    );
    println!(
        "identities shared between train and test: {}",
        audit.n_common_identities
    );
    if audit.unidentified_images == 0 {
        println!(
            "common-identity share of test images: {}%",
            pct(audit.common_fraction)
        );
    } else {
        println!(
            "common-identity share of test images: at least {}% (up to {}% if every unidentified image leaked)",
            pct(audit.common_fraction),
            pct(audit.common_fraction_upper)
        );
    }

    let payload = Payload::Audit { report: audit };
    ReportEnvelope::new(
        "audit",
        run_config,
        &[&args.dataset, &args.split],
        payload,
    )?
    .write(&ctx.report_path)?;
    Ok(0)
}
