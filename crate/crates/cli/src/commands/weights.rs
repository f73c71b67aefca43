use anyhow::Result;
use serde_json::json;

use pedattr_core::dataset::positive_ratio;
use pedattr_core::io::{read_dataset, read_split, write_weights};
use pedattr_core::weights::{compute_weights, WeightFunction};

use crate::args::{WeightFunctionArg, WeightsArgs};
use crate::envelope::{Payload, ReportEnvelope};
use crate::settings::resolve;
use crate::Ctx;

pub fn run(args: WeightsArgs, ctx: &Ctx) -> Result<u8> {
    let function = match args.wf {
        WeightFunctionArg::Wf1 => WeightFunction::Wf1,
        WeightFunctionArg::Wf2 => WeightFunction::Wf2,
        WeightFunctionArg::Wf3 => WeightFunction::Wf3 {
            alpha: resolve(args.alpha, "ALPHA", None, 1.0)?,
        },
    };
    let run_config = json!({
        "command": "weights",
        "dataset": args.dataset,
        "split": args.split,
        "out": args.out,
        "report": ctx.report_path,
        "config": ctx.config_path,
        "threads": ctx.threads,
        "wf": function,
    });
    log::info!("resolved run config: {run_config}");

    let dataset = read_dataset(&args.dataset)?;
    let split = read_split(&args.split, &dataset)?;
    // Ratios come from the training part only.
    let ratios = positive_ratio(&dataset, split.train())?;
    let table = compute_weights(&ratios, function)?;
    write_weights(&table, &args.out)?;

    println!(
        "{} weight pairs ({}) written to {}",
        table.n_attrs(),
        table.function().name(),
        args.out.display()
    );
    for (name, pair) in dataset.schema().names().iter().zip(table.pairs()) {
        println!("  {name:<24} pos {:>10.6}  neg {:>10.6}", pair.pos, pair.neg);
    }

    let payload = Payload::Weights {
        attributes: dataset.schema().names().to_vec(),
        table,
        out: args.out.clone(),
    };
    ReportEnvelope::new(
        "weights",
        run_config,
        &[&args.dataset, &args.split],
        payload,
    )?
    .write(&ctx.report_path)?;
    Ok(0)
}
