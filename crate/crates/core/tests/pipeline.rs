//! End-to-end checks against the synthetic-scene oracle.

use depthseg_core::evaluation::{evaluate, EvalImage, EvalParams};
use depthseg_core::mask_assembly::{assemble, AssemblyParams, Category, InstanceTarget};
use depthseg_core::synth::{generate, perturb, separation_holds, SceneSpec};

fn separated(seed: u64, n: usize) -> SceneSpec {
    SceneSpec {
        seed,
        n_instances: n,
        enforce_separation: true,
        ..SceneSpec::default()
    }
}

#[test]
fn assembly_reproduces_ground_truth_on_separated_scenes() {
    for seed in 0..20 {
        let spec = separated(seed, 10);
        let scene = generate(&spec).unwrap();
        assert!(separation_holds(&scene.detections, &scene.map, &spec.bins, &spec.assembly).unwrap());
        let masks = assemble(&scene.map, &scene.detections, &spec.bins, &spec.assembly).unwrap();
        assert_eq!(masks, scene.masks, "seed {seed}");
    }
}

#[test]
fn every_mask_pixel_satisfies_its_own_match_condition() {
    let params = AssemblyParams::default();
    for seed in 100..110 {
        let spec = SceneSpec { seed, n_instances: 10, ..SceneSpec::default() };
        let scene = generate(&spec).unwrap();
        for (det, mask) in scene.detections.iter().zip(&scene.masks) {
            let t = InstanceTarget::new(det, &spec.bins, &scene.map).unwrap();
            for (c, r) in mask.bitmap.iter_set() {
                let x = f64::from(scene.map.get(c, r));
                assert!((x - t.index).abs() < t.delta + params.quantization_slack);
                assert!(t.rect.contains(c, r));
            }
        }
    }
}

#[test]
fn bare_match_condition_drops_quantized_edge_pixels() {
    // Without the half-class allowance some near-face pixels fall outside.
    let bare = AssemblyParams { quantization_slack: 0.0 };
    let mut lost = 0;
    for seed in 0..10 {
        let spec = separated(seed, 8);
        let scene = generate(&spec).unwrap();
        let masks = assemble(&scene.map, &scene.detections, &spec.bins, &bare).unwrap();
        for (m, g) in masks.iter().zip(&scene.masks) {
            assert!(m.bitmap.count() <= g.bitmap.count());
            lost += g.bitmap.count() - m.bitmap.count();
        }
    }
    assert!(lost > 0);
}

#[test]
fn noiseless_scenes_score_perfectly() {
    let images: Vec<EvalImage> = (0..10)
        .map(|seed| {
            let spec = separated(seed, 8);
            let scene = generate(&spec).unwrap();
            let predictions = assemble(&scene.map, &scene.detections, &spec.bins, &spec.assembly).unwrap();
            EvalImage { predictions, ground_truth: scene.masks }
        })
        .collect();
    let r = evaluate(&images, &Category::ALL, &EvalParams::default()).unwrap();
    assert_eq!(r.mean_ap, 1.0);
    assert_eq!(r.mean_ap50, 1.0);
}

#[test]
fn heavy_noise_lowers_ap() {
    let mut clean = Vec::new();
    let mut noisy = Vec::new();
    for seed in 0..10 {
        let spec = SceneSpec { seed, n_instances: 8, ..SceneSpec::default() };
        let scene = generate(&spec).unwrap();
        let p = assemble(&scene.map, &scene.detections, &spec.bins, &spec.assembly).unwrap();
        clean.push(EvalImage { predictions: p, ground_truth: scene.masks.clone() });
        let n = perturb(&scene, 3.0, 4.0, seed).unwrap();
        let p = assemble(&n.map, &n.detections, &spec.bins, &spec.assembly).unwrap();
        noisy.push(EvalImage { predictions: p, ground_truth: scene.masks });
    }
    let params = EvalParams::default();
    let a = evaluate(&clean, &Category::ALL, &params).unwrap();
    let b = evaluate(&noisy, &Category::ALL, &params).unwrap();
    assert!(b.mean_ap < a.mean_ap, "{} vs {}", b.mean_ap, a.mean_ap);
}
