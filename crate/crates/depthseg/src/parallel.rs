//! Multi-threaded assembly.

use depthseg_core::mask_assembly::{match_prepared, prepare_targets, resolve_conflicts};
use depthseg_core::{AssemblyParams, DepthBins, InstanceDetection, InstanceMask, PixelDepthMap, Result};
use rayon::prelude::*;

/// Same result as [`depthseg_core::mask_assembly::assemble`], with the
/// per-instance matching spread over the current rayon pool.
pub fn assemble_parallel(
    map: &PixelDepthMap,
    dets: &[InstanceDetection],
    bins: &DepthBins,
    params: &AssemblyParams,
) -> Result<Vec<InstanceMask>> {
    let targets = prepare_targets(map, dets, bins)?;
    let mut masks: Vec<InstanceMask> = targets
        .par_iter()
        .zip(dets.par_iter())
        .map(|(t, d)| match_prepared(map, t, d, params))
        .collect();
    resolve_conflicts(map, &targets, &mut masks);
    Ok(masks)
}

/// Runs `f` on a pool of `jobs` threads; `0` keeps rayon's default.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> anyhow::Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use depthseg_core::mask_assembly::assemble;
    use depthseg_core::synth::{generate, perturb, SceneSpec};

    #[test]
    fn matches_serial_assembly() {
        for seed in 0..8 {
            let spec = SceneSpec {
                seed,
                n_instances: 12,
                ..SceneSpec::default()
            };
            let scene = generate(&spec).unwrap();
            let noisy = perturb(&scene, 1.5, 3.0, seed).unwrap();
            let serial = assemble(&noisy.map, &noisy.detections, &spec.bins, &spec.assembly).unwrap();
            let par = with_jobs(3, || {
                assemble_parallel(&noisy.map, &noisy.detections, &spec.bins, &spec.assembly)
            })
            .unwrap()
            .unwrap();
            assert_eq!(serial, par);
        }
    }
}
