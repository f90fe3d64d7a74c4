use std::fs;
use std::path::Path;
use std::sync::Arc;

use gigareg::geometry::AffineTransform;
use gigareg::imaging::pyramid::{downsample_half, write_pyramid, LevelStorage, PyramidLevel, MANIFEST_NAME};
use gigareg::imaging::{PyramidImage, RgbImage};
use gigareg::nonrigid::{DisplacementField, FIELD_MAGIC};
use gigareg::pipeline::{full_res_warp, load_and_preprocess_pair, warp_monolithic, WarpPlan};
use gigareg::{Error, PipelineConfig};

fn golden() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/field_3x2.bin"))
}

fn golden_field() -> DisplacementField {
    DisplacementField::new(
        3,
        2,
        vec![0.5, -1.25, 2.0, 0.0, 3.75, -0.125],
        vec![1.0, 1.5, -2.5, 0.25, 0.0, -8.0],
    )
    .unwrap()
}

#[test]
fn field_binary_matches_golden_bytes() {
    let bytes = fs::read(golden()).unwrap();
    assert_eq!(&bytes[..16], FIELD_MAGIC);
    assert_eq!(golden_field().to_bytes(), bytes);
    assert_eq!(DisplacementField::read(golden()).unwrap(), golden_field());
}

#[test]
fn truncated_field_is_unreadable() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("f.bin");
    let bytes = fs::read(golden()).unwrap();
    fs::write(&p, &bytes[..bytes.len() - 4]).unwrap();
    assert!(matches!(DisplacementField::read(&p), Err(Error::UnreadableInput { .. })));
}

fn rgb(w: usize, h: usize) -> RgbImage {
    let data = (0..w * h)
        .flat_map(|i| {
            let (x, y) = ((i % w) as f64, (i / w) as f64);
            let v = |f: f64, g: f64| (127.5 + 120.0 * (x * f).sin() * (y * g).cos()).round() as u8;
            [v(0.05, 0.07), v(0.11, 0.03), v(0.021, 0.09)]
        })
        .collect();
    RgbImage::new(w, h, data).unwrap()
}

fn in_memory_levels(img: &RgbImage, count: usize) -> PyramidImage {
    let mut levels = Vec::new();
    let mut cur = img.clone();
    for _ in 0..count {
        levels.push(PyramidLevel::new(cur.width(), cur.height(), LevelStorage::Memory(Arc::new(cur.clone()))));
        cur = downsample_half(&cur);
    }
    PyramidImage::new(levels, None).unwrap()
}

#[test]
fn tiled_preprocessing_equals_monolithic() {
    let dir = tempfile::tempdir().unwrap();
    let src = rgb(700, 460);
    let tgt = rgb(520, 610);
    let m = write_pyramid(&dir.path().join("s"), &src, 96, 200, None).unwrap();
    write_pyramid(&dir.path().join("t"), &tgt, 80, 200, None).unwrap();
    let tiled_s = PyramidImage::open(&dir.path().join("s")).unwrap();
    let tiled_t = PyramidImage::open(&dir.path().join("t").join(MANIFEST_NAME)).unwrap();
    let mono_s = in_memory_levels(&src, m.levels.len());
    let mono_t = in_memory_levels(&tgt, tiled_t.levels().len());
    let cfg = PipelineConfig { desired_registration_side: 300, ..Default::default() };
    let a = load_and_preprocess_pair(&tiled_s, &tiled_t, &cfg).unwrap();
    let b = load_and_preprocess_pair(&mono_s, &mono_t, &cfg).unwrap();
    assert_eq!(a.frames, b.frames);
    for (p, q) in [(&a.source, &b.source), (&a.target, &b.target)] {
        let d = p.data().iter().zip(q.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d <= 1e-6, "max difference {d}");
    }
}

#[test]
fn missing_tile_is_corrupt_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write_pyramid(dir.path(), &rgb(300, 200), 64, 1000, None).unwrap();
    fs::remove_file(dir.path().join("L0_x2_y1.png")).unwrap();
    let pyr = PyramidImage::open(dir.path()).unwrap();
    let other = PyramidImage::from_rgb(rgb(300, 200));
    let cfg = PipelineConfig { desired_registration_side: 256, ..Default::default() };
    let err = load_and_preprocess_pair(&pyr, &other, &cfg).unwrap_err();
    assert!(matches!(err, Error::CorruptPyramidManifest { .. }), "{err}");
}

#[test]
fn translation_warp_shifts_input() {
    let img = rgb(257, 190);
    let src = PyramidImage::from_rgb(img.clone());
    let (dx, dy) = (7.0, -4.0);
    let field = DisplacementField::zeros(257, 190);
    let affine = AffineTransform::translation(dx, dy);
    let dir = tempfile::tempdir().unwrap();
    full_res_warp(&src, &field, &affine, 257, dir.path()).unwrap();
    let out = PyramidImage::open(dir.path()).unwrap().read_level(0).unwrap();
    let plan = WarpPlan::new(&src, &field, &affine, 257).unwrap();
    let mono = warp_monolithic(&plan, &src).unwrap();
    for y in 4..180 {
        for x in 0..250 {
            for c in 0..3 {
                let want = img.data()[3 * ((y - 4) * 257 + x + 7) + c];
                assert_eq!(out.data()[3 * (y * 257 + x) + c], want, "({x},{y}) channel {c}");
                assert!((mono[c].get(x, y) - want as f64 / 255.0).abs() < 1e-9);
            }
        }
    }
}
