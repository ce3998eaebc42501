//! AP as a function of the number of depth classes.
//!
//! Every K sees the same scene geometry (scene `i` uses seed `seed + i`).
//! Only the quantization changes. Class-space noise of fixed standard
//! deviation is then added with seed `(seed + i) ^ NOISE_SALT`, the masks are
//! assembled and the batch is scored.

use std::time::Instant;

use depthseg_core::evaluation::{evaluate, EvalImage};
use depthseg_core::mask_assembly::assemble;
use depthseg_core::synth::{generate, perturb};
use depthseg_core::{Category, EvalParams, Result, SceneSpec};
use rayon::prelude::*;

pub const NOISE_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

pub const DEFAULT_KS: [u32; 6] = [2, 8, 32, 64, 96, 256];

#[derive(Debug, Clone)]
pub struct SweepParams {
    pub ks: Vec<u32>,
    /// Standard deviation of the per-pixel noise, in classes.
    pub sigma: f64,
    /// Box-edge jitter bound in image pixels.
    pub bbox_noise: f64,
    pub scenes: usize,
    pub seed: u64,
    /// Template for every scene; its `seed` and the K of its bins are replaced.
    pub base: SceneSpec,
    pub eval: EvalParams,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            ks: DEFAULT_KS.to_vec(),
            sigma: 1.0,
            bbox_noise: 0.0,
            scenes: 30,
            seed: 0,
            base: SceneSpec {
                n_instances: 8,
                ..SceneSpec::default()
            },
            eval: EvalParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: u32,
    pub ap: f64,
    pub ap50: f64,
    /// Wall time spent assembling all scenes, in milliseconds.
    pub assemble_ms: f64,
}

fn noisy_batch(params: &SweepParams, k: u32) -> Result<(Vec<EvalImage>, f64)> {
    let bins = params.base.bins.with_k(k)?;
    let runs: Vec<Result<(EvalImage, f64)>> = (0..params.scenes)
        .into_par_iter()
        .map(|i| {
            let seed = params.seed.wrapping_add(i as u64);
            let spec = SceneSpec {
                seed,
                bins,
                ..params.base.clone()
            };
            let scene = generate(&spec)?;
            let noisy = perturb(&scene, params.sigma, params.bbox_noise, seed ^ NOISE_SALT)?;
            let t = Instant::now();
            let predictions = assemble(&noisy.map, &noisy.detections, &bins, &spec.assembly)?;
            let ms = t.elapsed().as_secs_f64() * 1e3;
            Ok((
                EvalImage {
                    predictions,
                    ground_truth: scene.masks,
                },
                ms,
            ))
        })
        .collect();
    let mut images = Vec::with_capacity(runs.len());
    let mut total = 0.0;
    for r in runs {
        let (img, ms) = r?;
        images.push(img);
        total += ms;
    }
    Ok((images, total))
}

pub fn sweep_k(params: &SweepParams) -> Result<Vec<SweepRow>> {
    params
        .ks
        .iter()
        .map(|&k| {
            let (images, assemble_ms) = noisy_batch(params, k)?;
            let r = evaluate(&images, &Category::ALL, &params.eval)?;
            Ok(SweepRow {
                k,
                ap: r.mean_ap,
                ap50: r.mean_ap50,
                assemble_ms,
            })
        })
        .collect()
}

/// Index of the best AP; the first one wins ties.
pub fn peak(rows: &[SweepRow]) -> Option<usize> {
    (0..rows.len()).reduce(|best, i| if rows[i].ap > rows[best].ap { i } else { best })
}

/// True unless AP keeps rising strictly after its peak. Holds trivially when
/// the peak is the last K in the sweep.
pub fn not_increasing_after_peak(rows: &[SweepRow]) -> bool {
    match peak(rows) {
        Some(p) => rows[p..].windows(2).any(|w| w[1].ap <= w[0].ap) || p + 1 == rows.len(),
        None => true,
    }
}

pub fn format_table(rows: &[SweepRow]) -> String {
    let mut s = String::from("K\tAP\tAP50\tassemble_ms\n");
    for r in rows {
        s += &format!("{}\t{:.4}\t{:.4}\t{:.3}\n", r.k, r.ap, r.ap50, r.assemble_ms);
    }
    s
}
