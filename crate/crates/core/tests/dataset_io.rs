use std::fs;
use std::sync::Arc;

use sha2::{Digest, Sha256};
use shockspec::dataset::{read_dataset, DatasetReader, GridSpec};
use shockspec::srs::srs_filterbank;
use shockspec::synth::{generate_dataset, GenParams, GenerateOptions};
use shockspec::Error;

fn digest(path: &std::path::Path) -> Vec<u8> {
    Sha256::digest(fs::read(path).unwrap()).to_vec()
}

fn small_params(seed: u64) -> GenParams {
    GenParams {
        n_samples: 2048,
        ..GenParams::default().with_seed(seed)
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.shds");
    let b = dir.path().join("b.shds");
    let c = dir.path().join("c.shds");
    let opts = GenerateOptions::default();
    generate_dataset(&small_params(9), 10, &GridSpec::standard(), &opts, &a).unwrap();
    generate_dataset(&small_params(9), 10, &GridSpec::standard(), &opts, &b).unwrap();
    generate_dataset(&small_params(10), 10, &GridSpec::standard(), &opts, &c).unwrap();
    assert_eq!(digest(&a), digest(&b));
    assert_ne!(digest(&a), digest(&c));
}

#[test]
fn stream_offset_reproduces_a_slice() {
    let dir = tempfile::tempdir().unwrap();
    let full = dir.path().join("full.shds");
    let tail = dir.path().join("tail.shds");
    let params = small_params(3);
    generate_dataset(
        &params,
        8,
        &GridSpec::standard(),
        &GenerateOptions::default(),
        &full,
    )
    .unwrap();
    let opts = GenerateOptions {
        first_stream: 5,
        ..Default::default()
    };
    generate_dataset(&params, 3, &GridSpec::standard(), &opts, &tail).unwrap();
    let full = read_dataset(&full).unwrap();
    let tail = read_dataset(&tail).unwrap();
    assert_eq!(full.records[5..], tail.records[..]);
}

#[test]
fn truncated_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.shds");
    generate_dataset(
        &small_params(1),
        4,
        &GridSpec::standard(),
        &GenerateOptions::default(),
        &path,
    )
    .unwrap();
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    assert!(matches!(DatasetReader::open(&path), Err(Error::Corrupt(_))));
    fs::write(&path, &bytes[..10]).unwrap();
    assert!(DatasetReader::open(&path).is_err());
}

#[test]
fn default_corpus_spectra_are_positive() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.shds");
    let params = GenParams::default().with_seed(0);
    generate_dataset(
        &params,
        1000,
        &GridSpec::standard(),
        &GenerateOptions::default(),
        &path,
    )
    .unwrap();
    let ds = read_dataset(&path).unwrap();
    assert_eq!(ds.len(), 1000);
    let min = ds
        .records
        .iter()
        .flat_map(|r| r.spectrum.iter())
        .fold(f32::INFINITY, |m, &v| m.min(v));
    println!("minimum stored spectrum value over 1000 records: {min:e}");
    assert!(min > 0.0);
}

#[test]
fn stored_spectra_are_the_srs_of_stored_signals() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.shds");
    generate_dataset(
        &small_params(12),
        20,
        &GridSpec::standard(),
        &GenerateOptions::default(),
        &path,
    )
    .unwrap();
    let ds = read_dataset(&path).unwrap();
    let grid = ds.manifest.frequency_grid().unwrap();
    for j in 0..ds.len() {
        let recomputed =
            srs_filterbank(&ds.signal(j).unwrap(), &grid, ds.manifest.pad_scale).unwrap();
        let stored = ds.spectrum(j, &grid).unwrap();
        for (a, b) in recomputed.values().iter().zip(stored.values()) {
            assert!((a - b).abs() <= 1e-5 * a, "record {j}: {a} vs {b}");
        }
    }
}

#[test]
fn normalized_records_have_unit_spectrum_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n.shds");
    let opts = GenerateOptions {
        normalize: true,
        ..Default::default()
    };
    let manifest =
        generate_dataset(&small_params(13), 25, &GridSpec::standard(), &opts, &path).unwrap();
    let scales = &manifest.normalization.as_ref().unwrap().scales;
    assert_eq!(scales.len(), 25);
    assert!(scales.iter().all(|&s| s > 0.0));
    let ds = read_dataset(&path).unwrap();
    for r in &ds.records {
        let max = r.spectrum.iter().cloned().fold(0.0f32, f32::max);
        assert!((max - 1.0).abs() <= 1e-6, "{max}");
    }

    let raw = dir.path().join("r.shds");
    generate_dataset(
        &small_params(13),
        25,
        &GridSpec::standard(),
        &GenerateOptions::default(),
        &raw,
    )
    .unwrap();
    let raw = read_dataset(&raw).unwrap();
    for (j, (n, r)) in ds.records.iter().zip(&raw.records).enumerate() {
        let raw_max = r.spectrum.iter().cloned().fold(0.0f32, f32::max) as f64;
        assert!((raw_max - scales[j]).abs() <= 1e-5 * raw_max);
        for (a, b) in n.signal.iter().zip(&r.signal) {
            assert!((*a as f64 * scales[j] - *b as f64).abs() <= 1e-5 * (1.0 + b.abs() as f64));
        }
    }
}

#[test]
fn concurrent_readers_see_the_same_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = Arc::new(dir.path().join("c.shds"));
    generate_dataset(
        &small_params(14),
        16,
        &GridSpec::standard(),
        &GenerateOptions::default(),
        &*path,
    )
    .unwrap();
    let reference = read_dataset(&*path).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|t| {
            let path = Arc::clone(&path);
            std::thread::spawn(move || {
                let mut reader = DatasetReader::open(&*path).unwrap();
                (0..16u64)
                    .rev()
                    .map(|i| ((i + t) % 16, reader.read_record((i + t) % 16).unwrap()))
                    .collect::<Vec<_>>()
            })
        })
        .collect();
    for h in handles {
        for (i, rec) in h.join().unwrap() {
            assert_eq!(rec, reference.records[i as usize]);
        }
    }
}

#[test]
fn manifest_describes_the_payload() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.shds");
    let params = small_params(15);
    let written = generate_dataset(
        &params,
        6,
        &GridSpec::standard(),
        &GenerateOptions::default(),
        &path,
    )
    .unwrap();
    let reader = DatasetReader::open(&path).unwrap();
    let m = reader.manifest();
    assert_eq!(m, &written);
    assert_eq!(m.count, 6);
    assert_eq!(m.n_samples, 2048);
    assert_eq!(m.grid, GridSpec::standard());
    assert_eq!(m.seed, Some(15));
    assert_eq!(m.generator_params.as_ref(), Some(&params));
    assert!(m.spectra_paired);
    assert!(!m.experimental_bases);
    let nv = m.noise_var.unwrap();
    assert!((0.005..=0.05).contains(&nv));
    assert!(reader.len() == 6 && !reader.is_empty());
}
