//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use depthseg_core::evaluation::{evaluate, EvalImage, EvalResult};
use depthseg_core::synth::{generate, perturb};
use depthseg_core::{Category, DepthBins, SceneSpec, Scheme};
use rayon::prelude::*;

use crate::bench::{bench, format_report, BenchParams};
use crate::config::{ConfigLayer, RunConfig};
use crate::formats::{
    read_depth_map, read_detections, read_masks, stems, write_color_dump, write_depth_map,
    write_detections, write_masks, FormatError,
};
use crate::parallel::{assemble_parallel, with_jobs};
use crate::sweep::{format_table, sweep_k, SweepParams, DEFAULT_KS, NOISE_SALT};

#[derive(Debug, Parser)]
#[command(name = "depthseg", version, about = "Instance masks from depth-class maps")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Number of depth classes.
    #[arg(long, global = true)]
    pub k: Option<u32>,
    /// Nearest depth in meters.
    #[arg(long, global = true)]
    pub dmin: Option<f64>,
    /// Farthest depth in meters.
    #[arg(long, global = true)]
    pub dmax: Option<f64>,
    /// `linear` or `exponential`.
    #[arg(long, global = true)]
    pub scheme: Option<String>,
    /// Image pixels per depth-map pixel.
    #[arg(long, global = true)]
    pub scale: Option<f64>,
    /// Comma-separated IoU thresholds for AP.
    #[arg(long, global = true, value_delimiter = ',')]
    pub ap_thresholds: Option<Vec<f64>>,
    /// Extra tolerance added to each matching threshold, in classes.
    #[arg(long, global = true)]
    pub slack: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML config file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

impl GlobalArgs {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            k: self.k,
            d_min: self.dmin,
            d_max: self.dmax,
            scheme: self.scheme.clone(),
            scale: self.scale,
            ap_thresholds: self.ap_thresholds.clone(),
            quantization_slack: self.slack,
        }
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        RunConfig::from_sources(self.layer(), self.config.as_deref())
    }

    fn out_dir(&self) -> Result<&Path> {
        self.out.as_deref().ok_or_else(|| anyhow!("--out is required"))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print class depths for both discretization schemes.
    Discretize,
    /// Assemble instance masks from depth-class maps and detections.
    Assemble {
        #[arg(long, requires = "detections", conflicts_with_all = ["depth_dir", "dets_dir"])]
        depth_map: Option<PathBuf>,
        #[arg(long, requires = "depth_map")]
        detections: Option<PathBuf>,
        #[arg(long, requires = "dets_dir")]
        depth_dir: Option<PathBuf>,
        #[arg(long, requires = "depth_dir")]
        dets_dir: Option<PathBuf>,
        /// Also write a colorized `.ppm` of each id map.
        #[arg(long)]
        color: bool,
    },
    /// Score predicted masks against ground truth, matched by file stem.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Write synthetic scenes: depth/, dets/ and gt/ under --out.
    Synth {
        #[arg(long, default_value_t = 1)]
        scenes: usize,
        #[arg(long, default_value_t = 6)]
        instances: usize,
        /// Per-pixel class noise standard deviation.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Box-edge jitter bound in pixels.
        #[arg(long, default_value_t = 0.0)]
        bbox_noise: f64,
        /// Reject placements whose depth intervals could be confused.
        #[arg(long)]
        separated: bool,
        #[arg(long, default_value_t = 1248)]
        width: usize,
        #[arg(long, default_value_t = 384)]
        height: usize,
    },
    /// AP as a function of K under fixed class-space noise.
    SweepK {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_KS)]
        ks: Vec<u32>,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.0)]
        bbox_noise: f64,
        #[arg(long, default_value_t = 30)]
        scenes: usize,
        #[arg(long, default_value_t = 8)]
        instances: usize,
    },
    /// Time assembly on a full-size synthetic map.
    Bench {
        #[arg(long, default_value_t = 30)]
        instances: usize,
        #[arg(long, default_value_t = 50)]
        repeats: usize,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
    },
}

/// Runs a parsed command and returns what it prints on success.
pub fn run(cli: &Cli) -> Result<String> {
    let g = &cli.global;
    let cfg = g.run_config()?;
    with_jobs(g.jobs, || match &cli.command {
        Command::Discretize => discretize(&cfg.bins),
        Command::Assemble {
            depth_map,
            detections,
            depth_dir,
            dets_dir,
            color,
        } => {
            let out = g.out_dir()?;
            let jobs: Vec<(String, PathBuf, PathBuf)> = match (depth_map, detections, depth_dir, dets_dir) {
                (Some(map), Some(dets), None, None) => vec![(stem_of(map)?, map.clone(), dets.clone())],
                (None, None, Some(md), Some(dd)) => stems(md, "pgm")?
                    .into_iter()
                    .map(|s| {
                        let map = md.join(format!("{s}.pgm"));
                        let dets = dd.join(format!("{s}.txt"));
                        (s, map, dets)
                    })
                    .collect(),
                _ => bail!("give --depth-map with --detections, or --depth-dir with --dets-dir"),
            };
            assemble_files(&cfg, &jobs, out, *color)
        }
        Command::Eval { pred, gt } => eval_dirs(&cfg, pred, gt),
        Command::Synth {
            scenes,
            instances,
            noise,
            bbox_noise,
            separated,
            width,
            height,
        } => {
            let spec = SceneSpec {
                n_instances: *instances,
                image_width: *width,
                image_height: *height,
                scale: cfg.scale,
                bins: cfg.bins,
                enforce_separation: *separated,
                assembly: cfg.assembly,
                ..SceneSpec::default()
            };
            synth(&spec, g.seed, *scenes, *noise, *bbox_noise, g.out_dir()?)
        }
        Command::SweepK {
            ks,
            noise,
            bbox_noise,
            scenes,
            instances,
        } => {
            let params = SweepParams {
                ks: ks.clone(),
                sigma: *noise,
                bbox_noise: *bbox_noise,
                scenes: *scenes,
                seed: g.seed,
                base: SceneSpec {
                    n_instances: *instances,
                    scale: cfg.scale,
                    bins: cfg.bins,
                    assembly: cfg.assembly,
                    ..SceneSpec::default()
                },
                eval: cfg.eval.clone(),
            };
            Ok(format_table(&sweep_k(&params)?))
        }
        Command::Bench {
            instances,
            repeats,
            noise,
        } => {
            let defaults = BenchParams::default();
            let params = BenchParams {
                instances: *instances,
                repeats: *repeats,
                seed: g.seed,
                sigma: *noise,
                base: SceneSpec {
                    scale: cfg.scale,
                    bins: cfg.bins,
                    assembly: cfg.assembly,
                    ..defaults.base
                },
            };
            Ok(format_report(&bench(&params)?))
        }
    })?
}

fn stem_of(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| anyhow!("{}: no file name", path.display()))
}

pub fn discretize(bins: &DepthBins) -> Result<String> {
    let lin = DepthBins::new(bins.k(), bins.d_min(), bins.d_max(), Scheme::Linear)?;
    let exp = DepthBins::new(bins.k(), bins.d_min(), bins.d_max(), Scheme::Exponential)?;
    let mut s = String::from("class\tlinear\texponential\n");
    for i in 1..=bins.k() {
        writeln!(s, "{i}\t{:?}\t{:?}", lin.depth_of_class(i)?, exp.depth_of_class(i)?)?;
    }
    Ok(s)
}

fn assemble_files(cfg: &RunConfig, jobs: &[(String, PathBuf, PathBuf)], out: &Path, color: bool) -> Result<String> {
    let lines: Vec<Result<String>> = jobs
        .par_iter()
        .map(|(stem, map_path, dets_path)| {
            let map = read_depth_map(map_path, cfg.scale)?;
            let dets = read_detections(dets_path)?;
            let masks = assemble_parallel(&map, &dets, &cfg.bins, &cfg.assembly)
                .map_err(|e| FormatError::at(map_path, e))?;
            let (w, h) = (map.width(), map.height());
            write_masks(&out.join(format!("{stem}.pgm")), w, h, &masks)?;
            if color {
                write_color_dump(&out.join(format!("{stem}.ppm")), w, h, &masks)?;
            }
            let assigned: usize = masks.iter().map(|m| m.bitmap.count()).sum();
            Ok(format!("{stem}: {} instances, {assigned} pixels assigned", masks.len()))
        })
        .collect();
    let mut s = String::new();
    for l in lines {
        s += &l?;
        s.push('\n');
    }
    Ok(s)
}

fn eval_dirs(cfg: &RunConfig, pred: &Path, gt: &Path) -> Result<String> {
    let names = stems(gt, "pgm")?;
    let images: Vec<Result<EvalImage>> = names
        .par_iter()
        .map(|s| {
            let gt_path = gt.join(format!("{s}.pgm"));
            let pred_path = pred.join(format!("{s}.pgm"));
            if !pred_path.exists() {
                bail!("{}: missing prediction for {s}", pred_path.display());
            }
            Ok(EvalImage {
                predictions: read_masks(&pred_path)?,
                ground_truth: read_masks(&gt_path)?,
            })
        })
        .collect();
    let images = images.into_iter().collect::<Result<Vec<_>>>()?;
    let r = evaluate(&images, &Category::ALL, &cfg.eval).context("evaluation")?;
    Ok(format_eval(&r))
}

pub fn format_eval(r: &EvalResult) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    let mut s = format!("{:<12}{:>8}{:>8}{:>6}{:>6}\n", "category", "AP", "AP50", "gt", "pred");
    for c in &r.per_category {
        s += &format!(
            "{:<12}{:>8}{:>8}{:>6}{:>6}\n",
            c.category.name(),
            cell(c.ap),
            cell(c.ap50),
            c.num_gt,
            c.num_pred
        );
    }
    s += &format!("{:<12}{:>8.4}{:>8.4}\n", "mean", r.mean_ap, r.mean_ap50);
    s
}

fn synth(spec: &SceneSpec, seed: u64, scenes: usize, noise: f64, bbox_noise: f64, out: &Path) -> Result<String> {
    let lines: Vec<Result<String>> = (0..scenes)
        .into_par_iter()
        .map(|i| {
            let scene_seed = seed.wrapping_add(i as u64);
            let scene = generate(&SceneSpec {
                seed: scene_seed,
                ..spec.clone()
            })?;
            let noisy = perturb(&scene, noise, bbox_noise, scene_seed ^ NOISE_SALT)?;
            let name = format!("scene_{i:04}");
            write_depth_map(&out.join("depth").join(format!("{name}.pgm")), &noisy.map)?;
            write_detections(&out.join("dets").join(format!("{name}.txt")), &noisy.detections)?;
            write_masks(
                &out.join("gt").join(format!("{name}.pgm")),
                scene.map.width(),
                scene.map.height(),
                &scene.masks,
            )?;
            Ok(format!("{name}: seed {scene_seed}, {} instances", scene.detections.len()))
        })
        .collect();
    let mut s = String::new();
    for l in lines {
        s += &l?;
        s.push('\n');
    }
    Ok(s)
}
