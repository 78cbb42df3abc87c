//! Reproducible synthetic shock generator.
//!
//! Each shock is a sum of randomly parameterized basis atoms (decayed sines and
//! exponential Morlet-like pulses by default), each switched on at a random
//! offset, plus stationary Gaussian background noise whose variance is drawn
//! once per dataset. Randomness comes from a ChaCha stream keyed by
//! `(seed, stream_index)`, so any shock can be regenerated on its own and
//! generation order does not matter.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetManifest, DatasetWriter, GridSpec, Record};
use crate::error::{Error, Result};
use crate::par;
use crate::srs::{srs_filterbank, FrequencyGrid, Signal};

/// Stream reserved for dataset-level draws (the noise variance).
const DATASET_STREAM: u64 = u64::MAX;
const GENERATION_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformRange {
    pub lo: f64,
    pub hi: f64,
}

impl UniformRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn fixed(value: f64) -> Self {
        Self {
            lo: value,
            hi: value,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        self.lo + (self.hi - self.lo) * u
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::invalid(format!(
                "{name}: expected finite lo <= hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub lo: u32,
    pub hi: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    DecayedSine,
    MorletPulse,
    /// Gaussian-windowed cosine; not part of the default mix.
    Rbf,
    /// Exponentially decaying sawtooth; not part of the default mix.
    Sawtooth,
}

impl BasisKind {
    pub fn is_experimental(self) -> bool {
        matches!(self, BasisKind::Rbf | BasisKind::Sawtooth)
    }
}

/// Sampling distributions for the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub n_basis_range: CountRange,
    pub amplitude_range: UniformRange,
    pub phase_range: UniformRange,
    pub freq_range_hz: UniformRange,
    /// Decay constant range expressed as multiples of the atom frequency in Hz.
    pub decay_factor_range: UniformRange,
    pub wavelet_eta_range: UniformRange,
    pub offset_fraction_range: UniformRange,
    /// Probability that an atom reuses the previous atom's offset.
    pub adoption_prob: f64,
    pub noise_var_range: UniformRange,
    pub basis_kinds: Vec<BasisKind>,
    pub n_samples: usize,
    pub sample_rate_hz: f64,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            n_basis_range: CountRange { lo: 1, hi: 10 },
            amplitude_range: UniformRange::new(0.25, 10.0),
            phase_range: UniformRange::new(0.0, 2.0 * PI),
            freq_range_hz: UniformRange::new(10.0, 4096.0),
            decay_factor_range: UniformRange::new(0.004 * PI, 0.2 * PI),
            wavelet_eta_range: UniformRange::new(0.01, 10.0),
            offset_fraction_range: UniformRange::new(0.0, 0.75),
            adoption_prob: 0.5,
            noise_var_range: UniformRange::new(0.005, 0.05),
            basis_kinds: vec![BasisKind::DecayedSine, BasisKind::MorletPulse],
            n_samples: 9000,
            sample_rate_hz: 32768.0,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_basis_range.lo < 1 || self.n_basis_range.lo > self.n_basis_range.hi {
            return Err(Error::invalid("n_basis_range must satisfy 1 <= lo <= hi"));
        }
        self.amplitude_range.validate("amplitude_range")?;
        self.phase_range.validate("phase_range")?;
        self.freq_range_hz.validate("freq_range_hz")?;
        self.decay_factor_range.validate("decay_factor_range")?;
        self.wavelet_eta_range.validate("wavelet_eta_range")?;
        self.offset_fraction_range
            .validate("offset_fraction_range")?;
        self.noise_var_range.validate("noise_var_range")?;
        if self.freq_range_hz.lo <= 0.0 {
            return Err(Error::invalid("freq_range_hz must be positive"));
        }
        if self.decay_factor_range.lo < 0.0
            || self.wavelet_eta_range.lo < 0.0
            || self.noise_var_range.lo < 0.0
        {
            return Err(Error::invalid(
                "decay, eta and noise variance ranges must be non-negative",
            ));
        }
        if self.offset_fraction_range.lo < 0.0 || self.offset_fraction_range.hi >= 1.0 {
            return Err(Error::invalid(
                "offset_fraction_range must lie within [0, 1)",
            ));
        }
        if !(0.0..=1.0).contains(&self.adoption_prob) {
            return Err(Error::invalid("adoption_prob must lie in [0, 1]"));
        }
        if self.basis_kinds.is_empty() {
            return Err(Error::invalid("basis_kinds must not be empty"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be positive"));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::invalid("sample_rate_hz must be positive"));
        }
        Ok(())
    }

    pub fn uses_experimental_bases(&self) -> bool {
        self.basis_kinds.iter().any(|k| k.is_experimental())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    /// Noise variance shared by every shock generated from these parameters.
    pub fn dataset_noise_var(&self) -> f64 {
        self.noise_var_range.sample(&mut self.rng(DATASET_STREAM))
    }
}

/// One placed basis function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisAtom {
    pub kind: BasisKind,
    pub amplitude: f64,
    pub freq_hz: f64,
    pub phase: f64,
    /// Decay constant (1/s) for sines and sawtooths, shape factor for Morlet pulses, unused for RBFs.
    pub decay: f64,
    pub offset_fraction: f64,
    pub offset_index: usize,
}

impl BasisAtom {
    /// Value at local time `t` seconds after the atom's onset.
    fn eval(&self, t: f64) -> f64 {
        let omega = 2.0 * PI * self.freq_hz;
        match self.kind {
            BasisKind::DecayedSine => {
                self.amplitude * (-self.decay * t).exp() * (omega * t + self.phase).sin()
            }
            BasisKind::MorletPulse => {
                self.amplitude
                    * (self.decay * omega * ((1.0 + t).ln() - t)).exp()
                    * (omega * t + self.phase).cos()
            }
            BasisKind::Rbf => {
                let u = t * self.freq_hz;
                self.amplitude * (-0.5 * u * u).exp() * (omega * t + self.phase).cos()
            }
            BasisKind::Sawtooth => {
                let u = self.freq_hz * t + self.phase / (2.0 * PI);
                let saw = 2.0 * (u - (u + 0.5).floor());
                self.amplitude * (-self.decay * t).exp() * saw
            }
        }
    }

    fn accumulate(&self, out: &mut [f64], sample_rate_hz: f64) {
        let dt = 1.0 / sample_rate_hz;
        if self.offset_index >= out.len() {
            return;
        }
        for (local, v) in out[self.offset_index..].iter_mut().enumerate() {
            *v += self.eval(local as f64 * dt);
        }
    }
}

/// Render a single atom: zero before its onset, the basis function afterwards.
pub fn render_atom(atom: &BasisAtom, n_samples: usize, sample_rate_hz: f64) -> Result<Signal> {
    let mut out = vec![0.0; n_samples];
    atom.accumulate(&mut out, sample_rate_hz);
    Signal::new(out, sample_rate_hz)
}

/// Everything drawn while generating one shock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockProvenance {
    pub seed: u64,
    pub stream_index: u64,
    pub noise_var: f64,
    pub atoms: Vec<BasisAtom>,
}

fn offset_index(fraction: f64, n_samples: usize) -> usize {
    ((fraction * n_samples as f64).ceil() as usize).min(n_samples - 1)
}

fn draw_atoms(params: &GenParams, rng: &mut ChaCha8Rng) -> Vec<BasisAtom> {
    let n_basis = rng.gen_range(params.n_basis_range.lo..=params.n_basis_range.hi) as usize;
    let mut atoms: Vec<BasisAtom> = Vec::with_capacity(n_basis);
    for i in 0..n_basis {
        let kind = params.basis_kinds[rng.gen_range(0..params.basis_kinds.len())];
        let amplitude = params.amplitude_range.sample(rng);
        let phase = params.phase_range.sample(rng);
        let freq_hz = params.freq_range_hz.sample(rng);
        // Both shape draws happen for every atom so the stream layout is kind-independent.
        let decay_factor = params.decay_factor_range.sample(rng);
        let eta = params.wavelet_eta_range.sample(rng);
        let fresh_offset = params.offset_fraction_range.sample(rng);
        let adopt = rng.gen_bool(params.adoption_prob);

        let decay = match kind {
            BasisKind::DecayedSine | BasisKind::Sawtooth => decay_factor * freq_hz,
            BasisKind::MorletPulse => eta,
            BasisKind::Rbf => 0.0,
        };
        let offset_fraction = match atoms.last() {
            Some(prev) if i > 0 && adopt => prev.offset_fraction,
            _ => fresh_offset,
        };
        atoms.push(BasisAtom {
            kind,
            amplitude,
            freq_hz,
            phase,
            decay,
            offset_fraction,
            offset_index: offset_index(offset_fraction, params.n_samples),
        });
    }
    atoms
}

/// Generate shock number `stream_index` of the dataset described by `params`.
pub fn generate_shock(params: &GenParams, stream_index: u64) -> Result<(Signal, ShockProvenance)> {
    params.validate()?;
    let noise_var = params.dataset_noise_var();
    generate_with_noise(params, stream_index, noise_var)
}

fn generate_with_noise(
    params: &GenParams,
    stream_index: u64,
    noise_var: f64,
) -> Result<(Signal, ShockProvenance)> {
    if stream_index == DATASET_STREAM {
        return Err(Error::invalid("stream index u64::MAX is reserved"));
    }
    let mut rng = params.rng(stream_index);
    let atoms = draw_atoms(params, &mut rng);

    let mut samples = vec![0.0; params.n_samples];
    for atom in &atoms {
        atom.accumulate(&mut samples, params.sample_rate_hz);
    }
    if noise_var > 0.0 {
        let normal =
            Normal::new(0.0, noise_var.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
        for v in samples.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    let provenance = ShockProvenance {
        seed: params.seed,
        stream_index,
        noise_var,
        atoms,
    };
    Ok((Signal::new(samples, params.sample_rate_hz)?, provenance))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    pub pad_scale: f64,
    /// Divide each pair by its spectrum maximum and record the factor.
    pub normalize: bool,
    /// First stream index; record `i` uses stream `first_stream + i`.
    pub first_stream: u64,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            pad_scale: crate::srs::DEFAULT_PAD_SCALE,
            normalize: false,
            first_stream: 0,
        }
    }
}

/// Generate `count` shocks with their spectra and write them to `path`.
pub fn generate_dataset(
    params: &GenParams,
    count: usize,
    grid: &GridSpec,
    options: &GenerateOptions,
    path: impl AsRef<Path>,
) -> Result<DatasetManifest> {
    params.validate()?;
    if count < 1 {
        return Err(Error::invalid("count must be at least 1"));
    }
    let freq_grid = Arc::new(grid.to_grid()?);
    freq_grid.check_nyquist(params.sample_rate_hz)?;
    let noise_var = params.dataset_noise_var();

    let mut writer = DatasetWriter::create(path.as_ref(), params.n_samples, freq_grid.len())?;
    let mut scales = Vec::new();
    let mut start = 0usize;
    while start < count {
        let end = (start + GENERATION_CHUNK).min(count);
        let chunk: Vec<Result<(Record, f64)>> = par::map_range(end - start, |offset| {
            let stream = options.first_stream + (start + offset) as u64;
            let (signal, _) = generate_with_noise(params, stream, noise_var)?;
            Record::from_signal(&signal, &freq_grid, options.pad_scale, options.normalize)
        });
        for item in chunk {
            let (record, scale) = item?;
            writer.write_record(&record)?;
            scales.push(scale);
        }
        start = end;
    }

    let mut manifest = DatasetManifest::new(
        params.n_samples,
        params.sample_rate_hz,
        *grid,
        options.pad_scale,
    );
    manifest.source = "synthetic".to_string();
    manifest.noise_var = Some(noise_var);
    manifest.seed = Some(params.seed);
    manifest.first_stream = Some(options.first_stream);
    manifest.experimental_bases = params.uses_experimental_bases();
    manifest.generator_params = Some(params.clone());
    if options.normalize {
        manifest.normalization = Some(crate::dataset::Normalization::srs_max(scales));
    }
    writer.finish(manifest)
}

/// Convenience: a shock together with its spectrum on `grid`.
pub fn generate_pair(
    params: &GenParams,
    stream_index: u64,
    grid: &Arc<FrequencyGrid>,
    pad_scale: f64,
) -> Result<(Signal, crate::srs::Spectrum)> {
    let (signal, _) = generate_shock(params, stream_index)?;
    let spectrum = srs_filterbank(&signal, grid, pad_scale)?;
    Ok((signal, spectrum))
}
