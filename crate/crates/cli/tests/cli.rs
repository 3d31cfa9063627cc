use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/portraits").join(name)
}

fn facetone(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facetone")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_lists_subcommands() {
    let out = facetone(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["correct", "yearbook", "semiauto", "extract-mask", "grade", "matte"] {
        assert!(text.contains(cmd), "missing {cmd}");
    }
}

#[test]
fn missing_candidates_is_invalid_input_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let output = dir.path().join("out.png");
    let out = facetone(&[
        "correct",
        "--input", s(&corpus("blue_tint.png")),
        "--target", s(&corpus("neutral.png")),
        "--candidates", s(&dir.path().join("nope.json")),
        "--target-candidates", s(&corpus("neutral.json")),
        "--output", s(&output),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"code\":\"io\""), "{err}");
    assert!(!output.exists());
}

#[test]
fn bad_flag_is_usage_error() {
    let out = facetone(&["correct", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn overlapping_masks_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("m.png");
    let white = image::GrayImage::from_pixel(320, 320, image::Luma([255]));
    white.save(&mask).unwrap();
    let out = facetone(&[
        "semiauto",
        "--input", s(&corpus("blue_tint.png")),
        "--target", s(&corpus("neutral.png")),
        "--skin-mask", s(&mask),
        "--background-mask", s(&mask),
        "--target-mask", s(&mask),
        "--output", s(&dir.path().join("o.png")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn skin_not_found_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("m.png");
    let empty = dir.path().join("e.png");
    image::GrayImage::from_pixel(320, 320, image::Luma([0])).save(&empty).unwrap();
    image::GrayImage::from_fn(320, 320, |x, y| image::Luma([if x < 10 && y < 10 { 255 } else { 0 }]))
        .save(&mask)
        .unwrap();
    let out = facetone(&[
        "semiauto",
        "--input", s(&corpus("blue_tint.png")),
        "--target", s(&corpus("neutral.png")),
        "--skin-mask", s(&mask),
        "--background-mask", s(&empty),
        "--target-mask", s(&empty),
        "--output", s(&dir.path().join("o.png")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("skin_region_not_found"));
}

#[test]
fn extract_mask_and_grade() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("skin.png");
    let out = facetone(&[
        "extract-mask",
        "--input", s(&corpus("warm_tint.png")),
        "--candidates", s(&corpus("warm_tint.json")),
        "--mask-out", s(&mask),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = image::open(&mask).unwrap().to_luma8();
    assert_eq!(m.dimensions(), (320, 320));
    assert_eq!(m.get_pixel(160, 160).0[0], 255);
    assert_eq!(m.get_pixel(0, 0).0[0], 0);

    let guide = dir.path().join("guide.png");
    let out = facetone(&[
        "grade",
        "--input", s(&corpus("warm_tint.png")),
        "--target", s(&corpus("neutral.png")),
        "--candidates", s(&corpus("warm_tint.json")),
        "--target-candidates", s(&corpus("neutral.json")),
        "--output", s(&guide),
        "--idt-iters", "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g = image::open(&guide).unwrap().to_rgb8();
    let input = image::open(corpus("warm_tint.png")).unwrap().to_rgb8();
    assert_eq!(g.get_pixel(0, 0), input.get_pixel(0, 0));
    assert_ne!(g.get_pixel(160, 160), input.get_pixel(160, 160));
}

#[test]
fn correct_writes_report_mask_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let (output, report, mask, diag) = (
        dir.path().join("out.png"),
        dir.path().join("report.json"),
        dir.path().join("mask.png"),
        dir.path().join("diag.csv"),
    );
    let out = facetone(&[
        "correct",
        "--input", s(&corpus("blue_tint.png")),
        "--target", s(&corpus("neutral.png")),
        "--candidates", s(&corpus("blue_tint.json")),
        "--target-candidates", s(&corpus("neutral.json")),
        "--output", s(&output),
        "--report", s(&report),
        "--mask-out", s(&mask),
        "--diagnostics", s(&diag),
        "--max-iters", "5",
        "--window", "7",
        "--seed", "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(image::open(&output).unwrap().to_rgb8().dimensions(), (320, 320));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["solver_iterations"], 5);
    assert!(rep["skin_pixels"].as_u64().unwrap() > 1000);
    let csv = std::fs::read_to_string(&diag).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(mask.exists());
}

#[test]
fn matte_subcommand_composites() {
    let dir = tempfile::tempdir().unwrap();
    let (alpha, output) = (dir.path().join("a.png"), dir.path().join("o.png"));
    let out = facetone(&[
        "matte",
        "--input", s(&corpus("neutral.png")),
        "--candidates", s(&corpus("neutral.json")),
        "--alpha-out", s(&alpha),
        "--background", "#4a6fb3",
        "--output", s(&output),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let o = image::open(&output).unwrap().to_rgb8();
    let corner = o.get_pixel(0, 0).0;
    for (k, want) in [0x4a, 0x6f, 0xb3].into_iter().enumerate() {
        assert!((corner[k] as i32 - want).abs() <= 1);
    }
    let a = image::open(&alpha).unwrap().to_luma8();
    assert!(a.get_pixel(160, 160).0[0] > 250);
}
