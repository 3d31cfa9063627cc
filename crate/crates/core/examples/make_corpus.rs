//! Writes the bundled synthetic portraits (PNG plus face candidates JSON).
//!
//! Usage: cargo run -p facetone --example make_corpus [-- <output dir>]

use std::path::PathBuf;

use facetone::imgcore::io::save_rgb;
use facetone::synthetic::corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/portraits"));
    std::fs::create_dir_all(&dir)?;
    for (name, spec) in corpus() {
        let portrait = spec.render();
        save_rgb(dir.join(format!("{name}.png")), &portrait.image)?;
        let json = serde_json::to_string_pretty(&portrait.candidates)?;
        std::fs::write(dir.join(format!("{name}.json")), json + "\n")?;
        println!("wrote {name}");
    }
    Ok(())
}
