//! `dal`: dynamic anchor learning diagnostics from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{ArgAction, Args, Parser, Subcommand};
use dal_core::assignment::{match_matrix, select};
use dal_core::harness::experiment::{scene_seed, strategy_metric, synthesize_predictions};
use dal_core::harness::oracle::Sampling;
use dal_core::harness::report::{to_json_string, write_output};
use dal_core::harness::{
    emit_report, generate_corpus, parse_annotations, run_benchmark, run_iou_oracle, run_strategies,
    HarnessConfig, ParseIssue, ParseOptions, ReportFormat, Scene, Strategy,
};
use dal_core::{generate_grid, rotated_nms, Error, OrientedBox};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "dal",
    version,
    about = "Rotated-box label assignment diagnostics"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Each one overrides the same key in `--config`.
#[derive(Args, Debug, Default)]
struct Common {
    /// TOML file whose keys mirror the command-line flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// input-iou, output-iou or matching-degree.
    #[arg(long, global = true)]
    strategy: Option<Strategy>,
    #[arg(long, global = true)]
    alpha0: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Positive threshold on the assignment metric.
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// json or csv (csv is available for `experiment` only).
    #[arg(long, global = true)]
    format: Option<ReportFormat>,
    /// Output file (json) or directory (csv). Defaults to stdout for json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long, global = true, action = ArgAction::SetTrue)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assign anchors for each scene and list the positives.
    Assign(SceneArgs),
    /// Label-quality statistics for one assignment strategy.
    Experiment(SceneArgs),
    /// Time rotated IoU and assignment on seeded workloads.
    Bench(BenchArgs),
    /// Check exact rotated IoU against the Monte-Carlo oracle.
    Oracle(OracleArgs),
    /// Rotated non-maximum suppression over `x y w h theta score` lines.
    Nms(NmsArgs),
}

#[derive(Args, Debug, Default)]
struct SceneArgs {
    /// DOTA-style annotation file or directory. Without it a synthetic corpus is used.
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// Fail on the first malformed annotation line (exit code 2).
    #[arg(long, action = ArgAction::SetTrue)]
    strict: bool,
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<String>>,
    /// Synthetic corpus size.
    #[arg(long)]
    scenes: Option<usize>,
    #[arg(long)]
    image_width: Option<f64>,
    #[arg(long)]
    image_height: Option<f64>,
    #[arg(long)]
    objects_min: Option<usize>,
    #[arg(long)]
    objects_max: Option<usize>,
    /// Training progress in [0, 1] for the alpha schedule.
    #[arg(long)]
    progress: Option<f64>,
    #[arg(long)]
    penalty_during_warmup: Option<bool>,
    #[arg(long, value_delimiter = ',')]
    strides: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    base_scales: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    ratios: Option<Vec<f64>>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pull_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pull_max: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    reach: Option<f64>,
    #[arg(long)]
    score_noise: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct BenchArgs {
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    assign_scenes: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct OracleArgs {
    #[arg(long)]
    pairs: Option<usize>,
    /// Monte-Carlo samples per pair (at least 10000).
    #[arg(long)]
    samples: Option<usize>,
    /// iid or stratified.
    #[arg(long)]
    sampling: Option<Sampling>,
    /// Tolerance in standard errors.
    #[arg(long)]
    sigmas: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct NmsArgs {
    /// Box file; one `x y w h theta score` per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    iou_threshold: Option<f64>,
}

impl Cli {
    /// Flags as a config layer, to be laid over the `--config` file.
    fn flag_layer(&self) -> HarnessConfig {
        let c = &self.common;
        let mut h = HarnessConfig {
            seed: c.seed,
            strategy: c.strategy,
            alpha0: c.alpha0,
            gamma: c.gamma,
            threshold: c.threshold,
            format: c.format,
            out: c.out.clone(),
            sequential: c.sequential.then_some(true),
            ..Default::default()
        };
        match &self.command {
            Command::Assign(s) | Command::Experiment(s) => {
                h.annotations = s.annotations.clone();
                h.strict = s.strict.then_some(true);
                h.classes = s.classes.clone();
                h.scenes = s.scenes;
                h.image_width = s.image_width;
                h.image_height = s.image_height;
                h.objects_min = s.objects_min;
                h.objects_max = s.objects_max;
                h.progress = s.progress;
                h.penalty_during_warmup = s.penalty_during_warmup;
                h.strides = s.strides.clone();
                h.base_scales = s.base_scales.clone();
                h.ratios = s.ratios.clone();
                h.bins = s.bins;
                h.pull_min = s.pull_min;
                h.pull_max = s.pull_max;
                h.noise = s.noise;
                h.reach = s.reach;
                h.score_noise = s.score_noise;
            }
            Command::Bench(b) => {
                h.pairs = b.pairs;
                h.batch_size = b.batch_size;
                h.assign_scenes = b.assign_scenes;
            }
            Command::Oracle(o) => {
                h.pairs = o.pairs;
                h.samples = o.samples;
                h.sampling = o.sampling;
                h.sigmas = o.sigmas;
            }
            Command::Nms(n) => h.iou_threshold = n.iou_threshold,
        }
        h
    }
}

fn load_scenes(cfg: &HarnessConfig) -> anyhow::Result<(Vec<Scene>, Vec<ParseIssue>)> {
    match &cfg.annotations {
        Some(path) => {
            let opts = ParseOptions {
                strict: cfg.strict.unwrap_or(false),
                image_size: cfg.image_size(),
                classes: cfg.classes.clone(),
            };
            let out = parse_annotations(path, &opts)?;
            for issue in &out.issues {
                eprintln!(
                    "warning: {}:{}: {}",
                    issue.path.display(),
                    issue.line,
                    issue.message
                );
            }
            Ok((out.scenes, out.issues))
        }
        None => Ok((
            generate_corpus(&cfg.corpus()?, cfg.seed(), cfg.exec())?,
            Vec::new(),
        )),
    }
}

fn json_only(cfg: &HarnessConfig, what: &str) -> anyhow::Result<()> {
    if cfg.format == Some(ReportFormat::Csv) {
        bail!("{what} writes json only");
    }
    Ok(())
}

fn cmd_assign(cfg: &HarnessConfig) -> anyhow::Result<()> {
    json_only(cfg, "assign")?;
    let exp = cfg.experiment()?;
    let strategy = cfg.strategy.unwrap_or(Strategy::MatchingDegree);
    let (scenes, issues) = load_scenes(cfg)?;
    let mut out = Vec::with_capacity(scenes.len());
    for (i, scene) in scenes.iter().enumerate() {
        let grid = generate_grid(scene.width, scene.height, &exp.levels, &exp.ratios)?;
        let gts = scene.gt_boxes();
        let preds = synthesize_predictions(
            &grid.anchors,
            &gts,
            &exp.regressor,
            scene_seed(cfg.seed(), i),
        );
        let m = match_matrix(
            &grid.anchors,
            &preds,
            &gts,
            &exp.matching,
            exp.progress,
            exp.exec,
        )?;
        let metric = strategy_metric(strategy, &m, &exp);
        let a = select(&metric, m.n_anchors, m.n_gts, exp.matching.pos_threshold)?;
        let positives: Vec<_> = a
            .positive_indices()
            .map(|k| {
                let g = a.matched_gt[k].expect("positive has a match");
                let s = m.scores(k, g);
                json!({
                    "anchor": k,
                    "gt": g,
                    "sa": s.sa,
                    "fa": s.fa,
                    "md": s.md,
                    "metric": a.md[k],
                    "weight": a.weights[k],
                })
            })
            .collect();
        out.push(json!({
            "scene": i,
            "width": scene.width,
            "height": scene.height,
            "anchors": m.n_anchors,
            "ground_truths": m.n_gts,
            "positives": a.num_positives(),
            "per_gt": a.per_gt,
            "positive_anchors": positives,
        }));
    }
    let doc = json!({
        "schema_version": 1,
        "strategy": strategy.as_str(),
        "seed": cfg.seed(),
        "progress": exp.progress,
        "alpha": exp.matching.alpha_at(exp.progress),
        "matching": exp.matching,
        "scenes": out,
        "parse_issues": issues,
    });
    write_output(&to_json_string(&doc)?, cfg.out.as_deref())?;
    Ok(())
}

fn cmd_experiment(cfg: &HarnessConfig) -> anyhow::Result<()> {
    let exp = cfg.experiment()?;
    let strategy = cfg.strategy.unwrap_or(Strategy::MatchingDegree);
    let (scenes, _) = load_scenes(cfg)?;
    let report = run_strategies(&scenes, &exp, &[strategy], cfg.seed())?.remove(0);
    match (cfg.format.unwrap_or_default(), cfg.out.as_deref()) {
        (ReportFormat::Json, None) => write_output(&to_json_string(&report)?, None)?,
        (format, Some(path)) => {
            for f in emit_report(&report, format, path)? {
                eprintln!("wrote {}", f.display());
            }
        }
        (ReportFormat::Csv, None) => bail!("csv output needs --out <dir>"),
    }
    Ok(())
}

fn cmd_bench(cfg: &HarnessConfig) -> anyhow::Result<()> {
    json_only(cfg, "bench")?;
    let report = run_benchmark(&cfg.bench())?;
    write_output(&to_json_string(&report)?, cfg.out.as_deref())?;
    Ok(())
}

fn cmd_oracle(cfg: &HarnessConfig) -> anyhow::Result<bool> {
    json_only(cfg, "oracle")?;
    let report = run_iou_oracle(&cfg.oracle());
    write_output(&to_json_string(&report)?, cfg.out.as_deref())?;
    eprintln!(
        "{} pairs, {} outside {} standard errors (max z {:.3})",
        report.pairs_checked, report.failures, report.config.sigmas, report.max_z
    );
    Ok(report.failures == 0)
}

fn parse_box_file(path: &Path) -> dal_core::Result<(Vec<OrientedBox>, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    let mut boxes = Vec::new();
    let mut scores = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Format {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        let v: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?;
        if v.len() != 6 {
            return Err(bad(format!("expected 6 numbers, found {}", v.len())));
        }
        boxes.push(OrientedBox::new(v[0], v[1], v[2], v[3], v[4]).map_err(|e| bad(e.to_string()))?);
        scores.push(v[5]);
    }
    Ok((boxes, scores))
}

fn cmd_nms(cfg: &HarnessConfig, input: &Path) -> anyhow::Result<()> {
    json_only(cfg, "nms")?;
    let (boxes, scores) = parse_box_file(input)?;
    let thr = cfg.iou_threshold.unwrap_or(0.5);
    let keep = rotated_nms(&boxes, &scores, thr)?;
    let kept: Vec<_> = keep
        .iter()
        .map(|&i| json!({"index": i, "score": scores[i], "box": boxes[i]}))
        .collect();
    let doc = json!({
        "schema_version": 1,
        "iou_threshold": thr,
        "input": boxes.len(),
        "keep": keep,
        "kept": kept,
    });
    write_output(&to_json_string(&doc)?, cfg.out.as_deref())?;
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let file = match &cli.common.config {
        Some(p) => {
            HarnessConfig::load(p).with_context(|| format!("reading config {}", p.display()))?
        }
        None => HarnessConfig::default(),
    };
    let cfg = file.overlay(cli.flag_layer());
    match &cli.command {
        Command::Assign(_) => cmd_assign(&cfg)?,
        Command::Experiment(_) => cmd_experiment(&cfg)?,
        Command::Bench(_) => cmd_bench(&cfg)?,
        Command::Oracle(_) => return cmd_oracle(&cfg),
        Command::Nms(n) => cmd_nms(&cfg, &n.input)?,
    }
    Ok(true)
}

/// Input that could not be parsed maps to exit code 2, like a usage error.
fn is_parse_error(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        matches!(
            e.downcast_ref::<Error>(),
            Some(Error::Format { .. } | Error::Toml(_) | Error::Json(_))
        )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_parse_error(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
