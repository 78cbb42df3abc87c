//! On-disk shock dataset format, max-norm normalization, and the SRS
//! conditioning encoding.
//!
//! A dataset is a single file:
//!
//! ```text
//! magic        8 bytes   "SHOCKDS\0"
//! manifest_len u64 LE
//! manifest     manifest_len bytes of UTF-8 JSON
//! payload      count records of (n_samples + F) little-endian f32 values,
//!              signal first, then spectrum
//! ```
//!
//! Writers stream the payload to a sibling temporary file and assemble the
//! final file on [`DatasetWriter::finish`], then rename it into place.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::srs::{srs_filterbank, FrequencyGrid, Signal, Spectrum};
use crate::synth::GenParams;
use crate::LOG_FLOOR;

pub const FORMAT_VERSION: u32 = 1;
pub const MAGIC: [u8; 8] = *b"SHOCKDS\0";
const HEADER_LEN: u64 = 16;

/// Log-spaced grid description stored in the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub f_min: f64,
    pub f_max: f64,
    pub count: usize,
    pub damping_ratio: f64,
}

impl GridSpec {
    pub fn standard() -> Self {
        Self {
            f_min: crate::srs::DEFAULT_F_MIN_HZ,
            f_max: crate::srs::DEFAULT_F_MAX_HZ,
            count: crate::srs::DEFAULT_GRID_POINTS,
            damping_ratio: crate::srs::DEFAULT_DAMPING_RATIO,
        }
    }

    pub fn to_grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::log_spaced(self.f_min, self.f_max, self.count, self.damping_ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub scheme: String,
    /// Per-record factors: stored values are the originals divided by these.
    pub scales: Vec<f64>,
}

impl Normalization {
    pub fn srs_max(scales: Vec<f64>) -> Self {
        Self {
            scheme: "srs_max".to_string(),
            scales,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub endianness: String,
    pub count: u64,
    pub n_samples: usize,
    pub sample_rate_hz: f64,
    pub grid: GridSpec,
    pub pad_scale: f64,
    /// Stored spectra are the SRS of the stored signals.
    pub spectra_paired: bool,
    pub source: String,
    pub noise_var: Option<f64>,
    pub seed: Option<u64>,
    pub first_stream: Option<u64>,
    pub experimental_bases: bool,
    pub generator_params: Option<GenParams>,
    pub normalization: Option<Normalization>,
}

impl DatasetManifest {
    pub fn new(n_samples: usize, sample_rate_hz: f64, grid: GridSpec, pad_scale: f64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            endianness: "little".to_string(),
            count: 0,
            n_samples,
            sample_rate_hz,
            grid,
            pad_scale,
            spectra_paired: true,
            source: String::new(),
            noise_var: None,
            seed: None,
            first_stream: None,
            experimental_bases: false,
            generator_params: None,
            normalization: None,
        }
    }

    pub fn record_len(&self) -> usize {
        self.n_samples + self.grid.count
    }

    pub fn payload_bytes(&self) -> u64 {
        self.count * self.record_len() as u64 * 4
    }

    pub fn frequency_grid(&self) -> Result<Arc<FrequencyGrid>> {
        Ok(Arc::new(self.grid.to_grid()?))
    }
}

/// One stored signal/spectrum pair in storage precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub signal: Vec<f32>,
    pub spectrum: Vec<f32>,
}

impl Record {
    /// Round the signal to storage precision, compute its SRS from the rounded
    /// samples, and optionally max-normalize the pair. Returns the record and
    /// the normalization factor (1 when not normalizing).
    pub fn from_signal(
        signal: &Signal,
        grid: &Arc<FrequencyGrid>,
        pad_scale: f64,
        normalize: bool,
    ) -> Result<(Record, f64)> {
        let stored = Signal::new(round_f32(signal.samples()), signal.sample_rate_hz())?;
        let spectrum = srs_filterbank(&stored, grid, pad_scale)?;
        if normalize {
            let (signal, spectrum, scale) = normalize_pair(&stored, &spectrum)?;
            Ok((Record::from_parts(&signal, &spectrum), scale))
        } else {
            Ok((Record::from_parts(&stored, &spectrum), 1.0))
        }
    }

    pub fn from_parts(signal: &Signal, spectrum: &Spectrum) -> Record {
        Record {
            signal: signal.samples().iter().map(|&v| v as f32).collect(),
            spectrum: spectrum.values().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn to_signal(&self, sample_rate_hz: f64) -> Result<Signal> {
        Signal::from_f32(&self.signal, sample_rate_hz)
    }

    pub fn to_spectrum(&self, grid: &Arc<FrequencyGrid>) -> Result<Spectrum> {
        Spectrum::new(
            self.spectrum.iter().map(|&v| f64::from(v)).collect(),
            Arc::clone(grid),
        )
    }
}

fn round_f32(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| f64::from(v as f32)).collect()
}

/// Streaming dataset writer.
pub struct DatasetWriter {
    path: PathBuf,
    payload_path: PathBuf,
    payload: BufWriter<File>,
    n_samples: usize,
    n_freqs: usize,
    count: u64,
}

impl DatasetWriter {
    pub fn create(path: &Path, n_samples: usize, n_freqs: usize) -> Result<Self> {
        let payload_path = sibling(path, "payload.tmp");
        let payload = BufWriter::new(File::create(&payload_path)?);
        Ok(Self {
            path: path.to_path_buf(),
            payload_path,
            payload,
            n_samples,
            n_freqs,
            count: 0,
        })
    }

    pub fn write_record(&mut self, record: &Record) -> Result<()> {
        if record.signal.len() != self.n_samples {
            return Err(Error::LengthMismatch {
                expected: self.n_samples,
                found: record.signal.len(),
            });
        }
        if record.spectrum.len() != self.n_freqs {
            return Err(Error::LengthMismatch {
                expected: self.n_freqs,
                found: record.spectrum.len(),
            });
        }
        let mut buf = Vec::with_capacity((self.n_samples + self.n_freqs) * 4);
        for v in record.signal.iter().chain(&record.spectrum) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.payload.write_all(&buf)?;
        self.count += 1;
        Ok(())
    }

    /// Write header and manifest, append the payload, and move the file into place.
    /// The manifest's `count` is set from the records written.
    pub fn finish(self, mut manifest: DatasetManifest) -> Result<DatasetManifest> {
        let DatasetWriter {
            path,
            payload_path,
            payload,
            n_samples,
            n_freqs,
            count,
        } = self;
        payload
            .into_inner()
            .map_err(|e| e.into_error())?
            .sync_all()?;
        if manifest.n_samples != n_samples || manifest.grid.count != n_freqs {
            return Err(Error::invalid(
                "manifest shape does not match written records",
            ));
        }
        if let Some(norm) = &manifest.normalization {
            if norm.scales.len() as u64 != count {
                return Err(Error::CountMismatch(format!(
                    "{} normalization scales for {count} records",
                    norm.scales.len()
                )));
            }
        }
        manifest.count = count;
        manifest.format_version = FORMAT_VERSION;
        manifest.endianness = "little".to_string();

        let json = serde_json::to_vec(&manifest)?;
        let tmp_path = sibling(&path, "tmp");
        {
            let mut out = BufWriter::new(File::create(&tmp_path)?);
            out.write_all(&MAGIC)?;
            out.write_all(&(json.len() as u64).to_le_bytes())?;
            out.write_all(&json)?;
            let mut payload = File::open(&payload_path)?;
            io::copy(&mut payload, &mut out)?;
            out.flush()?;
        }
        fs::remove_file(&payload_path)?;
        fs::rename(&tmp_path, &path)?;
        Ok(manifest)
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

/// Write an in-memory collection of records.
pub fn write_dataset(
    records: &[Record],
    manifest: &DatasetManifest,
    path: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    let mut writer = DatasetWriter::create(path.as_ref(), manifest.n_samples, manifest.grid.count)?;
    for r in records {
        writer.write_record(r)?;
    }
    writer.finish(manifest.clone())
}

/// Streaming reader; yields records in index order.
pub struct DatasetReader {
    file: BufReader<File>,
    manifest: DatasetManifest,
    payload_offset: u64,
    next: u64,
}

impl DatasetReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path.as_ref())?;
        let file_len = file.metadata()?.len();
        let mut file = BufReader::new(file);

        let mut header = [0u8; HEADER_LEN as usize];
        file.read_exact(&mut header)
            .map_err(|_| Error::Corrupt("file shorter than the dataset header".into()))?;
        if header[..8] != MAGIC {
            return Err(Error::Corrupt("bad magic bytes".into()));
        }
        let manifest_len = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes"));
        if HEADER_LEN + manifest_len > file_len {
            return Err(Error::Corrupt("manifest extends past end of file".into()));
        }
        let mut json = vec![0u8; manifest_len as usize];
        file.read_exact(&mut json)?;

        let version: serde_json::Value = serde_json::from_slice(&json)?;
        let found = version
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Corrupt("manifest lacks format_version".into()))?
            as u32;
        if found != FORMAT_VERSION {
            return Err(Error::Version {
                expected: FORMAT_VERSION,
                found,
            });
        }
        let manifest: DatasetManifest = serde_json::from_value(version)?;
        if manifest.endianness != "little" {
            return Err(Error::Corrupt(format!(
                "unsupported endianness {}",
                manifest.endianness
            )));
        }

        let payload_offset = HEADER_LEN + manifest_len;
        let expected = manifest.payload_bytes();
        let actual = file_len - payload_offset;
        if actual != expected {
            return Err(Error::Corrupt(format!(
                "payload is {actual} bytes, manifest implies {expected}"
            )));
        }
        Ok(Self {
            file,
            manifest,
            payload_offset,
            next: 0,
        })
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn len(&self) -> u64 {
        self.manifest.count
    }

    pub fn is_empty(&self) -> bool {
        self.manifest.count == 0
    }

    /// Random access to record `index`; subsequent iteration continues after it.
    pub fn read_record(&mut self, index: u64) -> Result<Record> {
        if index >= self.manifest.count {
            return Err(Error::invalid(format!(
                "record {index} out of range (count {})",
                self.manifest.count
            )));
        }
        let offset = self.payload_offset + index * self.manifest.record_len() as u64 * 4;
        self.file.seek(SeekFrom::Start(offset))?;
        self.next = index;
        self.read_next()
    }

    fn read_next(&mut self) -> Result<Record> {
        let n = self.manifest.n_samples;
        let f = self.manifest.grid.count;
        let mut bytes = vec![0u8; (n + f) * 4];
        self.file
            .read_exact(&mut bytes)
            .map_err(|e| match e.kind() {
                io::ErrorKind::UnexpectedEof => Error::Corrupt("truncated payload".into()),
                _ => Error::Io(e),
            })?;
        let values: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        self.next += 1;
        Ok(Record {
            signal: values[..n].to_vec(),
            spectrum: values[n..].to_vec(),
        })
    }
}

impl Iterator for DatasetReader {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.manifest.count {
            return None;
        }
        Some(self.read_next())
    }
}

/// Fully materialized dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockDataset {
    pub manifest: DatasetManifest,
    pub records: Vec<Record>,
}

impl ShockDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn signal(&self, index: usize) -> Result<Signal> {
        self.records[index].to_signal(self.manifest.sample_rate_hz)
    }

    pub fn spectrum(&self, index: usize, grid: &Arc<FrequencyGrid>) -> Result<Spectrum> {
        self.records[index].to_spectrum(grid)
    }

    /// Factor that restores record `index` to its original scale (1 when not normalized).
    pub fn scale(&self, index: usize) -> f64 {
        self.manifest
            .normalization
            .as_ref()
            .map_or(1.0, |n| n.scales[index])
    }
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<ShockDataset> {
    let reader = DatasetReader::open(path)?;
    let manifest = reader.manifest().clone();
    let records = reader.collect::<Result<Vec<_>>>()?;
    Ok(ShockDataset { manifest, records })
}

/// Divide a signal/spectrum pair by the spectrum maximum.
pub fn normalize_pair(signal: &Signal, spectrum: &Spectrum) -> Result<(Signal, Spectrum, f64)> {
    let scale = spectrum.max_value();
    if !(scale > 0.0) {
        return Err(Error::Domain(
            "cannot normalize an all-zero spectrum".into(),
        ));
    }
    let signal = Signal::new(
        signal.samples().iter().map(|v| v / scale).collect(),
        signal.sample_rate_hz(),
    )?;
    let spectrum = Spectrum::new(
        spectrum.values().iter().map(|v| v / scale).collect(),
        Arc::clone(spectrum.grid()),
    )?;
    Ok((signal, spectrum, scale))
}

/// Undo [`normalize_pair`] on a signal.
pub fn denormalize_signal(signal: &Signal, scale: f64) -> Result<Signal> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!(
            "scale must be positive, got {scale}"
        )));
    }
    Ok(signal.scaled(scale))
}

/// Frequency-weighted log encoding of a spectrum used to condition generators.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedCondition {
    pub values: Vec<f64>,
}

/// `log10(max(value * freq, 1e-12))` per grid point.
pub fn encode_condition(spectrum: &Spectrum) -> EncodedCondition {
    let values = spectrum
        .values()
        .iter()
        .zip(spectrum.freqs_hz())
        .map(|(v, f)| (v * f).max(LOG_FLOOR).log10())
        .collect();
    EncodedCondition { values }
}
