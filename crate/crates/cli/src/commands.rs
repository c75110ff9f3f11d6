use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use bitext_core::ingest::CorpusFormat;
use bitext_core::metrics::{evaluate_with, EvalOptions, EvalSet, Smoothing};
use bitext_core::pipeline::{
    dedup_file, filter_file, read_config_file, report, run_pipeline, score_file, PipelineConfig,
    ProviderConfig, Scorer,
};
use bitext_core::similarity::{EmbeddingProvider, ScoreCache};
use bitext_core::CorpusStats;
use bitext_curation::{CurationService, ServiceOptions};
use log::info;
use serde::Serialize;

use crate::args::*;
use crate::UsageError;

const PROVIDER_ENV: &str = "BITEXT_PROVIDER_URL";

fn env_url() -> Option<String> {
    std::env::var(PROVIDER_ENV).ok().filter(|s| !s.is_empty())
}

fn build_provider(args: &ProviderArgs) -> Result<Box<dyn EmbeddingProvider>> {
    let mut map = BTreeMap::new();
    args.insert_into(&mut map);
    let cfg = ProviderConfig::from_map(&map, env_url().as_deref())?;
    Ok(cfg.build()?)
}

fn input_format(path: &Path, given: Option<CorpusFormat>) -> Result<CorpusFormat> {
    given
        .or_else(|| CorpusFormat::from_path(path))
        .ok_or_else(|| {
            UsageError(format!(
                "cannot infer the format of {}; pass --format tsv|jsonl",
                path.display()
            ))
            .into()
        })
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn dedup(a: DedupArgs) -> Result<()> {
    let in_fmt = input_format(&a.input, a.format)?;
    let out_fmt = a
        .out_format
        .or_else(|| CorpusFormat::from_path(&a.out))
        .unwrap_or(in_fmt);
    let summary = dedup_file(&a.input, in_fmt, &a.out, out_fmt)?;
    info!(
        "{} read, {} duplicates removed, {} written",
        summary.total_read, summary.duplicates_removed, summary.written
    );
    print_json(&summary)
}

pub fn score(a: ScoreArgs) -> Result<()> {
    let fmt = input_format(&a.input, a.format)?;
    let provider = build_provider(&a.provider)?;
    let cache = a
        .cache
        .as_deref()
        .map(|p| ScoreCache::open(p, provider.provider_id()))
        .transpose()?;
    let scorer = Scorer::new(provider.as_ref(), cache.as_ref(), a.jobs)?;
    let summary = score_file(&a.input, fmt, &a.out, a.unscored.as_deref(), &scorer)?;
    if let Some(c) = &cache {
        c.flush()?;
    }
    info!("{} scored, {} unscored", summary.scored, summary.unscored);
    print_json(&summary)
}

pub fn filter(a: FilterArgs) -> Result<()> {
    let stats = filter_file(&a.input, a.tau, &a.kept, &a.rejected)?;
    if let Some(p) = &a.stats {
        write_json(p, &stats)?;
    }
    info!(
        "{} kept, {} rejected at tau {}",
        stats.retained, stats.rejected, a.tau
    );
    print_json(&stats)
}

/// Config-file keys, then flags on top.
pub fn run_config(a: &RunArgs) -> Result<PipelineConfig> {
    let mut map = match &a.config {
        Some(p) => read_config_file(p)?,
        None => BTreeMap::new(),
    };
    let flags = [
        ("input", &a.input),
        ("format", &a.format),
        ("kept", &a.kept),
        ("rejected", &a.rejected),
        ("unscored", &a.unscored),
        ("stats", &a.stats),
        ("manifest", &a.manifest),
        ("tau", &a.tau),
        ("cache", &a.cache),
        ("jobs", &a.jobs),
        ("queue", &a.queue),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            map.insert(k.to_string(), v.clone());
        }
    }
    a.provider.insert_into(&mut map);
    Ok(PipelineConfig::from_map(&map, env_url().as_deref())?)
}

pub fn run(a: RunArgs) -> Result<()> {
    let cfg = run_config(&a)?;
    let stats = run_pipeline(&cfg)?;
    eprint!("{}", report(&stats).text);
    Ok(())
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let hyps = a
        .hyp
        .as_deref()
        .map(|p| -> Result<Vec<String>> {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(text.lines().map(str::to_string).collect())
        })
        .transpose()?;
    let set = EvalSet::from_jsonl(&a.set, hyps)?;
    let provider = build_provider(&a.provider)?;
    let opts = EvalOptions {
        smoothing: match a.smoothing {
            SmoothingArg::Epsilon => Smoothing::default(),
            SmoothingArg::None => Smoothing::None,
        },
        ..Default::default()
    };
    print_json(&evaluate_with(&set, provider.as_ref(), opts)?)
}

pub fn sample(a: SampleArgs) -> Result<()> {
    let fmt = input_format(&a.input, a.format)?;
    let items = bitext_curation::sample_candidates(&a.input, fmt, a.n, a.seed, &a.queue)?;
    info!("queued {} pairs in {}", items.len(), a.queue.display());
    print_json(&serde_json::json!({ "queued": items.len(), "seed": a.seed }))
}

pub fn serve(a: ServeArgs) -> Result<()> {
    let opts = ServiceOptions {
        lease_window: chrono::Duration::seconds(a.lease_secs.into()),
        ..Default::default()
    };
    let svc = Arc::new(CurationService::open(&a.queue, &a.log, opts)?);
    let rt = tokio::runtime::Runtime::new().context("starting async runtime")?;
    rt.block_on(bitext_curation::http::serve(
        svc,
        a.addr,
        a.ui_dir,
        |addr| {
            info!("listening on http://{addr}");
        },
    ))
    .with_context(|| format!("serving on {}", a.addr))?;
    Ok(())
}

pub fn export_gold(a: ExportGoldArgs) -> Result<()> {
    let n = bitext_curation::export_gold(&a.queue, &a.log, a.order, a.limit, &a.out)?;
    info!("exported {n} accepted pairs to {}", a.out.display());
    print_json(&serde_json::json!({ "exported": n }))
}

pub fn report_cmd(a: ReportArgs) -> Result<()> {
    if let Some(p) = &a.stats {
        let text =
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let stats: CorpusStats = serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("{}: not a stats file: {e}", p.display())))?;
        let r = report(&stats);
        if a.json {
            print_json(&r.json)
        } else {
            print!("{}", r.text);
            Ok(())
        }
    } else {
        let p = a.log.as_deref().expect("clap enforces one source");
        let stats = bitext_curation::record_assessment_stats(p)?;
        if a.json {
            return print_json(&stats);
        }
        println!("decisions     {}", stats.total);
        for (label, n) in &stats.per_label {
            println!("  {label:<30} {n}");
        }
        println!(
            "defect rate   {:.1}% ({} of {})",
            stats.defect_rate * 100.0,
            stats.defects,
            stats.total
        );
        Ok(())
    }
}
