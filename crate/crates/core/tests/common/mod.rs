#![allow(dead_code)]

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;

/// Set to rewrite snapshot files instead of comparing against them.
pub const UPDATE_ENV: &str = "SHOCKSPEC_UPDATE_SNAPSHOTS";

pub fn snapshot_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/snapshots")
        .join(name)
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn updating() -> bool {
    std::env::var_os(UPDATE_ENV).is_some()
}

/// Compare text against a stored snapshot, or store it when updating.
pub fn assert_text_snapshot(name: &str, actual: &str) {
    let path = snapshot_path(name);
    if updating() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|_| {
        panic!(
            "missing snapshot {}; rerun with {UPDATE_ENV}=1",
            path.display()
        )
    });
    assert_eq!(actual, expected, "snapshot {name} differs");
}

/// Compare JSON structurally; numbers must agree to `rel_tol`.
pub fn assert_json_close(actual: &Value, expected: &Value, rel_tol: f64, at: &str) {
    match (actual, expected) {
        (Value::Number(a), Value::Number(e)) => {
            let (a, e) = (a.as_f64().unwrap(), e.as_f64().unwrap());
            assert!(
                (a - e).abs() <= rel_tol * e.abs().max(1e-300),
                "{at}: {a} vs {e}"
            );
        }
        (Value::Array(a), Value::Array(e)) => {
            assert_eq!(a.len(), e.len(), "{at}: length");
            for (i, (x, y)) in a.iter().zip(e).enumerate() {
                assert_json_close(x, y, rel_tol, &format!("{at}[{i}]"));
            }
        }
        (Value::Object(a), Value::Object(e)) => {
            let ka: Vec<_> = a.keys().collect();
            let ke: Vec<_> = e.keys().collect();
            assert_eq!(ka, ke, "{at}: keys");
            for (k, v) in a {
                assert_json_close(v, &e[k], rel_tol, &format!("{at}.{k}"));
            }
        }
        _ => assert_eq!(actual, expected, "{at}"),
    }
}

pub fn json_snapshot(name: &str, actual: &Value, rel_tol: f64) {
    let path = snapshot_path(name);
    if updating() {
        std::fs::write(&path, serde_json::to_string_pretty(actual).unwrap() + "\n").unwrap();
        return;
    }
    let text = std::fs::read_to_string(&path).unwrap_or_else(|_| {
        panic!(
            "missing snapshot {}; rerun with {UPDATE_ENV}=1",
            path.display()
        )
    });
    let expected: Value = serde_json::from_str(&text).unwrap();
    assert_json_close(actual, &expected, rel_tol, name);
}

pub fn white_noise(seed: u64, len: usize, std: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            std * z
        })
        .collect()
}
