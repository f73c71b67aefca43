use anyhow::{Context, Result};
use serde_json::json;

use pedattr_core::io::{read_dataset, write_split};
use pedattr_core::seed::derive_seed;
use pedattr_core::split::{search_split, SplitError, SplitMethod, Thresholds};

use crate::args::SplitArgs;
use crate::envelope::{Payload, ReportEnvelope, SearchFailure, SplitVersionSummary};
use crate::settings::resolve;
use crate::Ctx;

use super::print_criteria_table;

pub fn run(args: SplitArgs, ctx: &Ctx) -> Result<u8> {
    let seed = resolve(args.seed, "SEED", ctx.file.seed, 0)?;
    let defaults = Thresholds::default();
    let thresholds = Thresholds {
        t_id: resolve(args.t_id, "T_ID", ctx.file.split.t_id, defaults.t_id)?,
        t_img: resolve(args.t_img, "T_IMG", ctx.file.split.t_img, defaults.t_img)?,
        t_attr: resolve(args.t_attr, "T_ATTR", ctx.file.split.t_attr, defaults.t_attr)?,
        max_trials: resolve(
            args.max_trials,
            "MAX_TRIALS",
            ctx.file.split.max_trials,
            defaults.max_trials,
        )?,
    };
    let versions = resolve(args.versions, "VERSIONS", ctx.file.split.versions, 1)?;

    let run_config = json!({
        "command": "split",
        "dataset": args.dataset,
        "out": args.out,
        "report": ctx.report_path,
        "config": ctx.config_path,
        "threads": ctx.threads,
        "seed": seed,
        "t_id": thresholds.t_id,
        "t_img": thresholds.t_img,
        "t_attr": thresholds.t_attr,
        "max_trials": thresholds.max_trials,
        "versions": versions,
    });
    log::info!("resolved run config: {run_config}");

    let dataset = read_dataset(&args.dataset)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;

    let mut summaries = Vec::new();
    let mut exhausted = None;
    for v in 0..versions {
        let version_seed = derive_seed(seed, v as u64);
        match search_split(&dataset, &thresholds, version_seed) {
            Ok(split) => {
                let path = args.out.join(format!("split_v{}.jsonl", v + 1));
                write_split(&dataset, &split, &path)?;
                let criteria = split.criteria().expect("search stores its report").clone();
                let trial_index = match split.method() {
                    SplitMethod::Search { trial_index, .. } => *trial_index,
                    SplitMethod::Random { .. } => unreachable!("search produces search splits"),
                };
                println!(
                    "version {}: seed {} accepted trial {} -> {}",
                    v + 1,
                    version_seed,
                    trial_index,
                    path.display()
                );
                print_criteria_table(&criteria);
                summaries.push(SplitVersionSummary {
                    version: v + 1,
                    seed: version_seed,
                    trial_index,
                    counts: criteria.counts,
                    criteria,
                    path,
                });
            }
            Err(SplitError::SearchExhausted { trials, best }) => {
                println!(
                    "version {}: seed {} exhausted after {} trials; best rejected trial:",
                    v + 1,
                    version_seed,
                    trials
                );
                print_criteria_table(&best);
                exhausted = Some(SearchFailure {
                    version: v + 1,
                    seed: version_seed,
                    trials,
                    thresholds,
                    best: *best,
                });
                break;
            }
            Err(other) => return Err(other.into()),
        }
    }

    let exit = u8::from(exhausted.is_some());
    let payload = Payload::Split {
        versions: summaries,
        exhausted,
    };
    ReportEnvelope::new("split", run_config, &[&args.dataset], payload)?
        .write(&ctx.report_path)?;
    Ok(exit)
}
