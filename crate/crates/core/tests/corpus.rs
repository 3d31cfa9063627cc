use std::path::PathBuf;

use facetone::faceprep::load_candidates;
use facetone::imgcore::io::{load_rgb, to_rgb8};
use facetone::synthetic::corpus;

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/portraits")
}

#[test]
fn bundled_files_match_generator() {
    for (name, spec) in corpus() {
        let portrait = spec.render();
        let png = image::open(corpus_dir().join(format!("{name}.png"))).unwrap().to_rgb8();
        assert_eq!(png, to_rgb8(&portrait.image), "{name}.png is out of date; rerun the make_corpus example");
        let cands = load_candidates(corpus_dir().join(format!("{name}.json"))).unwrap();
        assert_eq!(cands, portrait.candidates, "{name}.json is out of date");
    }
}

#[test]
fn bundled_images_load_as_unit_range() {
    let img = load_rgb::<f64>(corpus_dir().join("neutral.png")).unwrap();
    assert_eq!(img.dims(), (320, 320));
    assert!(img.pixels().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
}
