//! Assembly timing on a synthetic scene.

use std::time::Instant;

use depthseg_core::mask_assembly::assemble;
use depthseg_core::synth::{generate, perturb};
use depthseg_core::{Result, SceneSpec};

use crate::parallel::assemble_parallel;

#[derive(Debug, Clone)]
pub struct BenchParams {
    pub instances: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Class-space noise so the matcher sees realistic conflicts.
    pub sigma: f64,
    pub base: SceneSpec,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            instances: 30,
            repeats: 50,
            seed: 0,
            sigma: 1.0,
            base: SceneSpec {
                min_visible_pixels: 1,
                max_attempts: 256,
                ..SceneSpec::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub instances: usize,
    pub map_width: usize,
    pub map_height: usize,
    pub serial_median_ms: f64,
    pub serial_min_ms: f64,
    pub parallel_median_ms: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Times serial and parallel assembly over `repeats` runs each.
pub fn bench(params: &BenchParams) -> Result<BenchReport> {
    let spec = SceneSpec {
        seed: params.seed,
        n_instances: params.instances,
        ..params.base.clone()
    };
    let scene = generate(&spec)?;
    let noisy = perturb(&scene, params.sigma, 0.0, params.seed)?;
    let repeats = params.repeats.max(1);
    let mut serial = Vec::with_capacity(repeats);
    let mut parallel = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        let masks = assemble(&noisy.map, &noisy.detections, &spec.bins, &spec.assembly)?;
        serial.push(t.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(masks);
        let t = Instant::now();
        let masks = assemble_parallel(&noisy.map, &noisy.detections, &spec.bins, &spec.assembly)?;
        parallel.push(t.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(masks);
    }
    Ok(BenchReport {
        instances: noisy.detections.len(),
        map_width: noisy.map.width(),
        map_height: noisy.map.height(),
        serial_min_ms: serial.iter().copied().fold(f64::INFINITY, f64::min),
        serial_median_ms: median(serial),
        parallel_median_ms: median(parallel),
    })
}

pub fn format_report(r: &BenchReport) -> String {
    format!(
        "map {}x{}, {} instances\nserial median {:.3} ms (min {:.3} ms)\nparallel median {:.3} ms\n",
        r.map_width, r.map_height, r.instances, r.serial_median_ms, r.serial_min_ms, r.parallel_median_ms
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn places_every_instance_on_the_default_map() {
        let r = bench(&BenchParams { repeats: 2, ..BenchParams::default() }).unwrap();
        assert_eq!((r.map_width, r.map_height, r.instances), (312, 96, 30));
        assert!(r.serial_min_ms <= r.serial_median_ms);
    }

    #[test]
    fn empty_scene() {
        let r = bench(&BenchParams { instances: 0, repeats: 3, ..BenchParams::default() }).unwrap();
        assert_eq!(r.instances, 0);
        assert!(r.serial_median_ms < 5.0);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
