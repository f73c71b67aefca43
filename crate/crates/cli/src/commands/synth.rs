use anyhow::{bail, Context, Result};
use serde_json::json;

use pedattr_core::io::{dataset_checksum, write_dataset, write_features};
use pedattr_core::split::Thresholds;
use pedattr_core::synth::{demo_leakage, generate};

use crate::args::{SynthAction, SynthArgs};
use crate::envelope::{Payload, ReportEnvelope};
use crate::settings::resolve_opt;
use crate::Ctx;

use super::pct;

pub fn run(args: SynthArgs, ctx: &Ctx) -> Result<u8> {
    let mut config = ctx.file.synth.clone().unwrap_or_default();
    if let Some(seed) = resolve_opt(args.seed, "SEED", None)? {
        config.seed = seed;
    }
    let inputs: Vec<&std::path::Path> = ctx.config_path.iter().map(|p| p.as_path()).collect();

    match args.action {
        None => {
            let Some(out) = args.out else {
                bail!("synth requires --out <dir> (or use `synth demo-leakage`)");
            };
            let run_config = json!({
                "command": "synth",
                "out": out,
                "report": ctx.report_path,
                "config": ctx.config_path,
                "threads": ctx.threads,
                "synth": config,
            });
            log::info!("resolved run config: {run_config}");

            let synth = generate(&config)?;
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating output directory {}", out.display()))?;
            let dataset_path = out.join("dataset.jsonl");
            let features_path = out.join("features.jsonl");
            write_dataset(&synth.dataset, &dataset_path)?;
            write_features(&synth, &features_path)?;
            println!(
                "generated {} samples over {} identities -> {}, {}",
                synth.dataset.len(),
                config.n_identities,
                dataset_path.display(),
                features_path.display()
            );
            let payload = Payload::Synth {
                n_samples: synth.dataset.len(),
                n_identities: config.n_identities,
                dataset_sha256: dataset_checksum(&synth.dataset),
                config,
                dataset_path,
                features_path,
            };
            ReportEnvelope::new("synth", run_config, &inputs, payload)?
                .write(&ctx.report_path)?;
            Ok(0)
        }
        Some(SynthAction::DemoLeakage { pairs }) => {
            let pairs = resolve_opt(pairs, "PAIRS", ctx.file.demo.pairs)?.unwrap_or(5);
            let thresholds = Thresholds::default();
            let run_config = json!({
                "command": "synth demo-leakage",
                "report": ctx.report_path,
                "config": ctx.config_path,
                "threads": ctx.threads,
                "pairs": pairs,
                "thresholds": thresholds,
                "synth": config,
            });
            log::info!("resolved run config: {run_config}");

            let demo = demo_leakage(&config, pairs, &thresholds)?;
            println!(
                "{:>4} {:>12} {:>15} {:>8} {:>18} {:>18}",
                "pair", "random F1", "zero-shot F1", "gap", "random common F1", "random unique F1"
            );
            for pair in &demo.pairs {
                let common = pair.random.reports.common.as_ref().map(|r| r.f1);
                let unique = pair.random.reports.unique.as_ref().map(|r| r.f1);
                let opt = |v: Option<f64>| v.map_or("n/a".to_owned(), pct);
                println!(
                    "{:>4} {:>12} {:>15} {:>8} {:>18} {:>18}",
                    pair.pair_index,
                    pct(pair.random.reports.all.f1),
                    pct(pair.zero_shot.reports.all.f1),
                    pct(pair.f1_gap),
                    opt(common),
                    opt(unique),
                );
            }

            let payload = Payload::LeakageDemo { demo };
            ReportEnvelope::new("synth demo-leakage", run_config, &inputs, payload)?
                .write(&ctx.report_path)?;
            Ok(0)
        }
    }
}
