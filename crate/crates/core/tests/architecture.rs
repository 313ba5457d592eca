//! The engine sees only events and verdicts: no connector, adapter, corpus
//! or clock type may appear in its sources.

use std::path::Path;

const FORBIDDEN: [&str; 9] = [
    "crate::adapter",
    "crate::io",
    "crate::corpus",
    "super::super",
    "std::net",
    "std::fs",
    "std::thread",
    "Instant",
    "SystemTime",
];

#[test]
fn engine_depends_only_on_analysis_and_values() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("src/engine");
    let mut checked = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        for (n, line) in text.lines().enumerate() {
            let code = line.split("//").next().unwrap();
            for f in FORBIDDEN {
                assert!(!code.contains(f), "{}:{}: engine references `{f}`", path.display(), n + 1);
            }
        }
        checked += 1;
    }
    assert!(checked >= 3);
}

#[test]
fn analysis_and_language_do_not_reach_outward() {
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("src");
    for module in ["lang", "analysis"] {
        for entry in std::fs::read_dir(src.join(module)).unwrap() {
            let path = entry.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            for f in ["crate::engine", "crate::adapter", "crate::io", "crate::corpus"] {
                assert!(!text.contains(f), "{} references `{f}`", path.display());
            }
        }
    }
}
