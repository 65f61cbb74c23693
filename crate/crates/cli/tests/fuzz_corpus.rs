//! Runs the checked-in fuzz seeds, and cheap mutations of them, through the
//! parser entry points on stable.

use deadleaves::grains::{GrainLaw1D, GrainLaw2D};
use deadleaves::io::read_cell_table;
use std::fs;
use std::path::Path;

fn seeds(target: &str) -> Vec<Vec<u8>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(target);
    let mut out: Vec<Vec<u8>> = fs::read_dir(dir)
        .unwrap()
        .map(|e| fs::read(e.unwrap().path()).unwrap())
        .collect();
    assert!(!out.is_empty());
    out.sort();
    out
}

/// Every prefix and every single-byte flip of each seed.
fn mutations(seed: &[u8]) -> impl Iterator<Item = Vec<u8>> + '_ {
    let prefixes = (0..=seed.len()).map(|k| seed[..k].to_vec());
    let flips = (0..seed.len()).flat_map(move |i| {
        [b'0', b'-', b'"', b'}', b'e', 0xff]
            .into_iter()
            .map(move |b| {
                let mut v = seed.to_vec();
                v[i] = b;
                v
            })
    });
    prefixes.chain(flips)
}

#[test]
fn config_json_seeds() {
    let all = seeds("config_json");
    for s in &all {
        deadleaves_cli::parse_config(std::str::from_utf8(s).unwrap())
            .expect("seed is a valid config");
        for m in mutations(s) {
            if let Ok(text) = std::str::from_utf8(&m) {
                if let Err(e) = deadleaves_cli::parse_config(text) {
                    assert!(matches!(e.exit_code(), 2 | 3));
                }
            }
        }
    }
}

#[test]
fn grain_law_json_seeds() {
    for s in &seeds("grain_law_json") {
        let ok1 = serde_json::from_slice::<GrainLaw1D>(s).is_ok_and(|l| l.validate().is_ok());
        let ok2 = serde_json::from_slice::<GrainLaw2D>(s).is_ok_and(|l| l.build().is_ok());
        assert!(ok1 || ok2);
        for m in mutations(s) {
            if let Ok(l) = serde_json::from_slice::<GrainLaw1D>(&m) {
                if l.validate().is_ok() {
                    assert!(l.lambda() > 0.0);
                }
            }
            if let Ok(l) = serde_json::from_slice::<GrainLaw2D>(&m) {
                if let Ok(b) = l.build() {
                    assert!(b.lambda() > 0.0);
                }
            }
        }
    }
}

#[test]
fn cell_table_csv_seeds() {
    for s in &seeds("cell_table_csv") {
        let t = read_cell_table(s.as_slice()).expect("seed is a valid table");
        assert!(t.length > 0.0);
        for m in mutations(s) {
            if let Ok(t) = read_cell_table(m.as_slice()) {
                assert!(t.length > 0.0);
                assert!(t.eta.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }
}
