use std::path::{Path, PathBuf};

use depthseg::formats::{read_kitti_calib, read_kitti_labels};
use depthseg::FormatError;
use depthseg_core::kitti::{filter_categories, parse_kitti_labels, write_kitti_labels};
use depthseg_core::{CameraIntrinsics, Category};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/kitti").join(name)
}

#[test]
fn frame_000000_fields() {
    let objs = read_kitti_labels(&data("label_000000.txt")).unwrap();
    assert_eq!(objs.len(), 1);
    let p = &objs[0];
    assert_eq!(p.kind, "Pedestrian");
    assert_eq!((p.truncated, p.occluded, p.alpha), (0.0, 0, -0.20));
    assert_eq!(
        (p.bbox.left, p.bbox.top, p.bbox.right, p.bbox.bottom),
        (712.40, 143.00, 810.73, 307.92)
    );
    assert_eq!((p.h, p.w, p.l), (1.89, 0.48, 1.20));
    assert_eq!((p.location.x, p.location.y, p.location.z), (1.84, 1.47, 8.41));
    assert_eq!(p.rotation_y, 0.01);

    let cam = read_kitti_calib(&data("calib_000000.txt")).unwrap();
    assert_eq!(cam, CameraIntrinsics { fx: 707.0493, fy: 707.0493, cx: 604.0814, cy: 180.5066 });
}

#[test]
fn frame_000001_filtering() {
    let objs = read_kitti_labels(&data("label_000001.txt")).unwrap();
    assert_eq!(objs.len(), 7);
    assert_eq!(objs.iter().filter(|o| o.is_dont_care()).count(), 4);
    let kept = filter_categories(&objs);
    let cats: Vec<Option<Category>> = kept.iter().map(|o| o.category()).collect();
    assert_eq!(cats, [Some(Category::Car), Some(Category::Cyclist)]);
    let car = kept[0].to_detection(1).unwrap();
    assert_eq!(car.center_depth, 58.49);
    assert_eq!(car.theta, 1.57);

    let cam = read_kitti_calib(&data("calib_000001.txt")).unwrap();
    assert_eq!(cam, CameraIntrinsics { fx: 721.5377, fy: 721.5377, cx: 609.5593, cy: 172.854 });
}

#[test]
fn round_trip_preserves_every_number() {
    for name in ["label_000000.txt", "label_000001.txt"] {
        let objs = read_kitti_labels(&data(name)).unwrap();
        assert_eq!(parse_kitti_labels(&write_kitti_labels(&objs)).unwrap(), objs);
    }
}

#[test]
fn malformed_file_errors_name_path_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    let good = std::fs::read_to_string(data("label_000001.txt")).unwrap();
    let mut lines: Vec<&str> = good.lines().collect();
    lines[2] = "Cyclist 0.00 3 -1.65 676.60 163.95 688.98 193.93 1.86 0.60 2.02 4.59 1.32 45.84";
    std::fs::write(&path, lines.join("\n")).unwrap();
    match read_kitti_labels(&path) {
        Err(e @ FormatError::Line { line: 3, .. }) => {
            assert!(e.to_string().starts_with(&format!("{}:3:", path.display())));
        }
        other => panic!("{other:?}"),
    }
    let calib = dir.path().join("calib.txt");
    std::fs::write(&calib, "P0: 1 0 0 0 0 1 0 0 0 0 1 0\nP2: 1 0 0 0 0 1 0 0 0 0 1\n").unwrap();
    assert!(matches!(read_kitti_calib(&calib), Err(FormatError::Line { line: 2, .. })));
    assert!(read_kitti_calib(&dir.path().join("missing.txt")).is_err());
}
