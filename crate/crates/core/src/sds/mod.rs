//! Sum-of-decayed-sinusoids (SDS) inverse solver.
//!
//! A model `x[n] = sum_i A_i exp(-lambda_i n T) sin(2 pi f_i n T + phi_i)` is fitted
//! to a target SRS by multi-start Nelder–Mead in a transformed parameter
//! space (`ln A`, `ln lambda`, `ln f`, wrapped `phi`), optionally followed by a
//! genetic-algorithm refinement.
//!
//! The objective profiles out a common amplitude factor: for a candidate
//! spectrum `c`, the RMSLE against `10^d c` is minimized over `d` in closed form,
//! and the optimal factor is folded into the amplitudes of the returned model.

mod ga;
pub mod nelder_mead;

use std::f64::consts::TAU;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use ga::GaConfig;
use nelder_mead::{minimize, NelderMeadOptions};

use crate::error::{Error, Result};
use crate::par;
use crate::srs::filter::{peak_values, RampInvariantSdof};
use crate::srs::{padding_length, srs_filterbank, FrequencyGrid, Signal, Spectrum};
use crate::LOG_FLOOR;

const PARAMS_PER_ATOM: usize = 4;
/// Samples between exact re-evaluations of the rendering recurrence.
const RENDER_BLOCK: usize = 256;
const GA_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdsAtom {
    pub amplitude: f64,
    /// Exponential decay rate in 1/s.
    pub decay: f64,
    pub freq_hz: f64,
    pub phase: f64,
}

impl SdsAtom {
    pub fn value_at(&self, t: f64) -> f64 {
        self.amplitude * (-self.decay * t).exp() * (TAU * self.freq_hz * t + self.phase).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdsModel {
    pub atoms: Vec<SdsAtom>,
    pub n_samples: usize,
    pub sample_rate_hz: f64,
}

impl SdsModel {
    pub fn new(atoms: Vec<SdsAtom>, n_samples: usize, sample_rate_hz: f64) -> Result<Self> {
        let model = Self {
            atoms,
            n_samples,
            sample_rate_hz,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::invalid("an SDS model needs at least one atom"));
        }
        if self.n_samples == 0 || !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::invalid(
                "n_samples and sample_rate_hz must be positive",
            ));
        }
        let nyquist = self.sample_rate_hz / 2.0;
        for (i, a) in self.atoms.iter().enumerate() {
            if !(a.freq_hz > 0.0 && a.freq_hz < nyquist) {
                return Err(Error::invalid(format!(
                    "atom {i}: frequency {} Hz outside (0, {nyquist})",
                    a.freq_hz
                )));
            }
            if !(a.decay >= 0.0 && a.decay.is_finite()) {
                return Err(Error::invalid(format!(
                    "atom {i}: decay must be finite and >= 0"
                )));
            }
            if !(a.amplitude.is_finite() && a.phase.is_finite()) {
                return Err(Error::invalid(format!(
                    "atom {i}: amplitude and phase must be finite"
                )));
            }
        }
        Ok(())
    }

    pub fn render(&self) -> Result<Signal> {
        render_sds(self)
    }
}

/// Evaluate the model on `n = 0..n_samples`.
pub fn render_sds(model: &SdsModel) -> Result<Signal> {
    model.validate()?;
    let mut out = vec![0.0; model.n_samples];
    render_into(&model.atoms, model.sample_rate_hz, &mut out);
    Signal::new(out, model.sample_rate_hz)
}

/// Accumulate atoms into `out` using a complex rotation per sample,
/// re-anchored to the closed form every [`RENDER_BLOCK`] samples.
fn render_into(atoms: &[SdsAtom], sample_rate_hz: f64, out: &mut [f64]) {
    let dt = 1.0 / sample_rate_hz;
    for atom in atoms {
        let omega = TAU * atom.freq_hz;
        let damp = (-atom.decay * dt).exp();
        let (rot_im, rot_re) = (omega * dt).sin_cos();
        let (step_re, step_im) = (damp * rot_re, damp * rot_im);
        for (block, chunk) in out.chunks_mut(RENDER_BLOCK).enumerate() {
            let t0 = (block * RENDER_BLOCK) as f64 * dt;
            let env = atom.amplitude * (-atom.decay * t0).exp();
            if env == 0.0 {
                break;
            }
            let (im, re) = (omega * t0 + atom.phase).sin_cos();
            let (mut re, mut im) = (env * re, env * im);
            for v in chunk.iter_mut() {
                *v += im;
                let next_re = re * step_re - im * step_im;
                im = re * step_im + im * step_re;
                re = next_re;
            }
        }
    }
}

/// Base-10 root-mean-square log ratio between two spectra on one grid,
/// with values floored at `1e-12`.
pub fn rmsle_loss(target: &Spectrum, candidate: &Spectrum) -> Result<f64> {
    target.ensure_same_grid(candidate)?;
    let sum: f64 = target
        .values()
        .iter()
        .zip(candidate.values())
        .map(|(t, c)| {
            let d = t.max(LOG_FLOOR).log10() - c.max(LOG_FLOOR).log10();
            d * d
        })
        .sum();
    Ok((sum / target.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub m_atoms: usize,
    /// Nelder–Mead iteration cap per restart.
    pub max_iters: usize,
    /// Objective evaluations per restart.
    pub max_evals: usize,
    pub restarts: usize,
    /// Wall-clock cap for the whole fit. Runs that hit it are not reproducible.
    pub time_budget_s: Option<f64>,
    pub ga: Option<GaConfig>,
    pub seed: u64,
    pub n_samples: usize,
    pub sample_rate_hz: f64,
    pub pad_scale: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            m_atoms: 12,
            max_iters: 100_000,
            max_evals: 1_000,
            restarts: 8,
            time_budget_s: None,
            ga: None,
            seed: 0,
            n_samples: 9000,
            sample_rate_hz: crate::srs::DEFAULT_SAMPLE_RATE_HZ,
            pad_scale: crate::srs::DEFAULT_PAD_SCALE,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_atoms < 1
            || self.max_iters < 1
            || self.max_evals < 1
            || self.restarts < 1
            || self.n_samples < 1
        {
            return Err(Error::invalid(
                "m_atoms, max_iters, max_evals, restarts and n_samples must be >= 1",
            ));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::invalid("sample_rate_hz must be positive"));
        }
        if let Some(t) = self.time_budget_s {
            if !(t >= 0.0) {
                return Err(Error::invalid("time_budget_s must be >= 0"));
            }
        }
        if let Some(ga) = &self.ga {
            ga.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: SdsModel,
    /// RMSLE between the target and the SRS of the rendered model.
    pub loss: f64,
    /// Best-so-far loss per optimizer iteration (restarts in order, then GA generations).
    pub trace: Vec<f64>,
    pub restart_losses: Vec<f64>,
    pub ga_loss: Option<f64>,
    pub evaluations: usize,
    /// True when the time budget cut the search short.
    pub budget_hit: bool,
}

struct Objective {
    target_log: Vec<f64>,
    filters: Vec<RampInvariantSdof>,
    pad: usize,
    n_samples: usize,
    fs: f64,
    deadline: Option<Instant>,
}

impl Objective {
    fn decode(&self, theta: &[f64]) -> Vec<SdsAtom> {
        let f_hi = (0.49 * self.fs).ln();
        theta
            .chunks_exact(PARAMS_PER_ATOM)
            .map(|p| SdsAtom {
                amplitude: p[0].clamp(-60.0, 60.0).exp(),
                decay: p[1].clamp(-30.0, (10.0 * self.fs).ln()).exp(),
                freq_hz: p[2].clamp(0.0, f_hi).exp(),
                phase: p[3].rem_euclid(TAU),
            })
            .collect()
    }

    /// Profiled loss and the optimal log10 amplitude offset.
    fn loss(&self, theta: &[f64]) -> (f64, f64) {
        let mut x = vec![0.0; self.n_samples];
        render_into(&self.decode(theta), self.fs, &mut x);
        let peaks = peak_values(&self.filters, &x, self.pad);
        let resid: Vec<f64> = self
            .target_log
            .iter()
            .zip(&peaks)
            .map(|(t, c)| t - c.max(LOG_FLOOR).log10())
            .collect();
        let f = resid.len() as f64;
        let offset = resid.iter().sum::<f64>() / f;
        let loss = (resid
            .iter()
            .map(|r| (r - offset) * (r - offset))
            .sum::<f64>()
            / f)
            .sqrt();
        (loss, offset)
    }

    fn expired(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn budgeted(&self, theta: &[f64]) -> Option<f64> {
        if self.expired() {
            None
        } else {
            Some(self.loss(theta).0)
        }
    }
}

/// Initial atom frequencies and amplitudes from the target spectrum.
fn seed_atoms(target: &[f64], freqs: &[f64], zeta: f64, m: usize) -> Vec<(f64, f64)> {
    let n = target.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || target[i] > target[i - 1];
            let right = i + 1 == n || target[i] >= target[i + 1];
            left && right && n > 1
        })
        .collect();
    peaks.sort_by(|&a, &b| target[b].total_cmp(&target[a]).then(a.cmp(&b)));
    peaks.truncate(m);
    let mut chosen: Vec<(f64, f64)> = peaks.iter().map(|&i| (freqs[i], target[i])).collect();

    let (lo, hi) = (freqs[0].ln(), freqs[n - 1].ln());
    let mut k = 0;
    while chosen.len() < m {
        let f = (lo + (hi - lo) * (k as f64 + 0.5) / m as f64).exp();
        let nearest = (0..n)
            .min_by(|&a, &b| {
                (freqs[a].ln() - f.ln())
                    .abs()
                    .total_cmp(&(freqs[b].ln() - f.ln()).abs())
            })
            .expect("non-empty grid");
        chosen.push((f, target[nearest]));
        k += 1;
    }
    chosen
        .into_iter()
        .map(|(f, s)| (f, (s * 2.0 * zeta).max(LOG_FLOOR)))
        .collect()
}

const STEP: [f64; PARAMS_PER_ATOM] = [0.5, 0.7, 0.03, 1.0];
const GA_SIGMA: [f64; PARAMS_PER_ATOM] = [0.3, 0.3, 0.02, 0.5];

struct RestartOutcome {
    theta: Vec<f64>,
    loss: f64,
    trace: Vec<f64>,
    evals: usize,
}

/// Fit an SDS model to `target`.
///
/// Deterministic for a given target and configuration unless the time budget
/// interrupts the search.
pub fn fit_sds(target: &Spectrum, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    let grid: &Arc<FrequencyGrid> = target.grid();
    let fs = config.sample_rate_hz;
    grid.check_nyquist(fs)?;
    let scale = target.max_value();
    if !(scale > 0.0) {
        return Err(Error::Domain("target spectrum is identically zero".into()));
    }
    let zeta = grid.damping_ratio();
    let normalized: Vec<f64> = target.values().iter().map(|v| v / scale).collect();
    let objective = Objective {
        target_log: normalized
            .iter()
            .map(|v| v.max(LOG_FLOOR).log10())
            .collect(),
        filters: grid
            .freqs_hz()
            .iter()
            .map(|&f| RampInvariantSdof::new(f, zeta, fs))
            .collect(),
        pad: padding_length(fs, grid.f_min(), zeta, config.pad_scale)?,
        n_samples: config.n_samples,
        fs,
        deadline: config
            .time_budget_s
            .map(|s| Instant::now() + Duration::from_secs_f64(s.min(1e9))),
    };

    let seeds = seed_atoms(&normalized, grid.freqs_hz(), zeta, config.m_atoms);
    let steps: Vec<f64> = (0..config.m_atoms).flat_map(|_| STEP).collect();
    let nm = NelderMeadOptions {
        max_evals: config.max_evals,
        max_iters: config.max_iters,
        ..Default::default()
    };

    let outcomes: Vec<Option<RestartOutcome>> = par::map_range(config.restarts, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(r as u64);
        let x0: Vec<f64> = seeds
            .iter()
            .flat_map(|&(f, a)| {
                [
                    a.ln(),
                    (0.05 * TAU * f).ln(),
                    f.ln(),
                    rng.gen_range(0.0..TAU),
                ]
            })
            .collect();
        minimize(|x| objective.budgeted(x), &x0, &steps, &nm).map(|o| RestartOutcome {
            theta: o.x,
            loss: o.f,
            trace: o.trace,
            evals: o.evals,
        })
    });

    let mut evaluations = 0;
    let mut trace: Vec<f64> = Vec::new();
    let mut restart_losses = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for o in outcomes.into_iter().flatten() {
        evaluations += o.evals;
        for v in o.trace {
            let prev = trace.last().copied().unwrap_or(f64::INFINITY);
            trace.push(prev.min(v));
        }
        restart_losses.push(o.loss);
        if best.as_ref().is_none_or(|(_, l)| o.loss < *l) {
            best = Some((o.theta, o.loss));
        }
    }
    let Some((mut theta, mut loss)) = best else {
        return Err(Error::BudgetExhausted(
            "no objective evaluation completed".into(),
        ));
    };

    let mut ga_loss = None;
    if let Some(ga_cfg) = &config.ga {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(GA_STREAM);
        let out = ga::refine(
            ga_cfg,
            &theta,
            loss,
            PARAMS_PER_ATOM,
            &GA_SIGMA,
            &mut rng,
            |g| objective.budgeted(g),
        );
        evaluations += out.evals;
        for v in out.trace {
            let prev = trace.last().copied().unwrap_or(f64::INFINITY);
            trace.push(prev.min(v));
        }
        if out.fitness < loss {
            theta = out.genome;
            loss = out.fitness;
        }
        ga_loss = Some(loss);
    }

    let (_, offset) = objective.loss(&theta);
    let gain = scale * 10f64.powf(offset);
    let atoms = objective
        .decode(&theta)
        .into_iter()
        .map(|a| SdsAtom {
            amplitude: a.amplitude * gain,
            ..a
        })
        .collect();
    let model = SdsModel::new(atoms, config.n_samples, fs)?;
    let fitted = srs_filterbank(&render_sds(&model)?, grid, config.pad_scale)?;
    let loss = rmsle_loss(target, &fitted)?;
    Ok(FitResult {
        model,
        loss,
        trace,
        restart_losses,
        ga_loss,
        evaluations,
        budget_hit: objective.expired(),
    })
}

/// SRS of a rendered model on `grid`.
pub fn model_spectrum(
    model: &SdsModel,
    grid: &Arc<FrequencyGrid>,
    pad_scale: f64,
) -> Result<Spectrum> {
    srs_filterbank(&render_sds(model)?, grid, pad_scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(atoms: Vec<SdsAtom>, n: usize, fs: f64) -> SdsModel {
        SdsModel::new(atoms, n, fs).unwrap()
    }

    fn atom(amplitude: f64, decay: f64, freq_hz: f64, phase: f64) -> SdsAtom {
        SdsAtom {
            amplitude,
            decay,
            freq_hz,
            phase,
        }
    }

    #[test]
    fn quarter_rate_sine_cycles() {
        let s = render_sds(&model(vec![atom(1.0, 0.0, 1000.0, 0.0)], 12, 4000.0)).unwrap();
        let expected = [0.0, 1.0, 0.0, -1.0];
        for (n, v) in s.samples().iter().enumerate() {
            assert!((v - expected[n % 4]).abs() < 1e-12, "n={n}: {v}");
        }
    }

    #[test]
    fn rendering_is_linear() {
        let a = atom(1.3, 0.0, 120.0, 0.4);
        let b = atom(-0.7, 0.0, 333.0, 2.0);
        let both = render_sds(&model(vec![a, b], 2000, 8192.0)).unwrap();
        let ra = render_sds(&model(vec![a], 2000, 8192.0)).unwrap();
        let rb = render_sds(&model(vec![b], 2000, 8192.0)).unwrap();
        for ((s, x), y) in both.samples().iter().zip(ra.samples()).zip(rb.samples()) {
            assert!((s - (x + y)).abs() < 1e-12);
        }
    }

    #[test]
    fn recurrence_matches_closed_form() {
        let atoms = vec![atom(2.0, 35.0, 2711.3, 1.1), atom(0.5, 400.0, 77.7, 5.9)];
        let fs = 32768.0;
        let s = render_sds(&model(atoms.clone(), 9000, fs)).unwrap();
        for (n, v) in s.samples().iter().enumerate() {
            let t = n as f64 / fs;
            let exact: f64 = atoms.iter().map(|a| a.value_at(t)).sum();
            assert!((v - exact).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn half_life_envelope() {
        let (n, fs) = (4096usize, 8192.0);
        let decay = std::f64::consts::LN_2 * fs / n as f64;
        let f = 512.0;
        let s = render_sds(&model(vec![atom(2.0, decay, f, 0.0)], n, fs)).unwrap();
        let period = (fs / f) as usize;
        let tail = s.samples()[n - period..]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((tail - 1.0).abs() < 0.01, "{tail}");
    }

    #[test]
    fn model_validation() {
        assert!(SdsModel::new(vec![], 10, 100.0).is_err());
        assert!(SdsModel::new(vec![atom(1.0, 0.0, 50.0, 0.0)], 10, 100.0).is_err());
        assert!(SdsModel::new(vec![atom(1.0, -1.0, 10.0, 0.0)], 10, 100.0).is_err());
        assert!(SdsModel::new(vec![atom(1.0, 0.0, 10.0, 0.0)], 10, 100.0).is_ok());
    }

    fn spec(values: Vec<f64>) -> Spectrum {
        let n = values.len();
        let grid = Arc::new(FrequencyGrid::log_spaced(10.0, 1000.0, n, 0.03).unwrap());
        Spectrum::new(values, grid).unwrap()
    }

    #[test]
    fn rmsle_examples() {
        let t = spec(vec![1.0, 100.0]);
        assert_eq!(rmsle_loss(&t, &t).unwrap(), 0.0);
        assert!((rmsle_loss(&t, &t.scaled(10.0)).unwrap() - 1.0).abs() < 1e-12);
        let c = Spectrum::new(vec![10.0, 100.0], t.grid().clone()).unwrap();
        assert!((rmsle_loss(&t, &c).unwrap() - 0.5f64.sqrt()).abs() < 1e-9);
        assert!(rmsle_loss(&t, &spec(vec![1.0, 100.0])).is_ok());
        let other = Spectrum::new(
            vec![1.0, 2.0],
            Arc::new(FrequencyGrid::new(vec![5.0, 6.0], 0.03).unwrap()),
        )
        .unwrap();
        assert!(matches!(rmsle_loss(&t, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn seeding_prefers_largest_local_maxima() {
        let freqs = [10.0, 20.0, 40.0, 80.0, 160.0, 320.0];
        let target = [1.0, 3.0, 2.0, 2.5, 5.0, 4.0];
        let seeds = seed_atoms(&target, &freqs, 0.03, 2);
        assert_eq!(seeds[0].0, 160.0);
        assert_eq!(seeds[1].0, 20.0);
        assert!((seeds[0].1 - 5.0 * 0.06).abs() < 1e-15);
        let padded = seed_atoms(&target, &freqs, 0.03, 5);
        assert_eq!(padded.len(), 5);
    }

    fn small_config() -> FitConfig {
        FitConfig {
            m_atoms: 1,
            restarts: 2,
            max_evals: 400,
            n_samples: 1024,
            sample_rate_hz: 8192.0,
            ..Default::default()
        }
    }

    fn small_target() -> Spectrum {
        let grid = Arc::new(FrequencyGrid::log_spaced(20.0, 1000.0, 24, 0.03).unwrap());
        let m = model(vec![atom(1.0, 60.0, 210.0, 0.3)], 1024, 8192.0);
        model_spectrum(&m, &grid, 3.0).unwrap()
    }

    #[test]
    fn fit_trace_is_monotone_and_loss_is_honest() {
        let target = small_target();
        let res = fit_sds(&target, &small_config()).unwrap();
        assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
        let direct = rmsle_loss(
            &target,
            &model_spectrum(&res.model, target.grid(), 3.0).unwrap(),
        )
        .unwrap();
        assert_eq!(res.loss, direct);
        assert!((res.loss - res.trace.last().unwrap()).abs() < 1e-9);
        assert_eq!(res.restart_losses.len(), 2);
    }

    #[test]
    fn zero_budget_fails_explicitly() {
        let cfg = FitConfig {
            time_budget_s: Some(0.0),
            ..small_config()
        };
        assert!(matches!(
            fit_sds(&small_target(), &cfg),
            Err(Error::BudgetExhausted(_))
        ));
    }

    #[test]
    fn ga_never_worsens_the_fit() {
        let target = small_target();
        let base = fit_sds(&target, &small_config()).unwrap();
        let cfg = FitConfig {
            ga: Some(GaConfig {
                population: 8,
                generations: 5,
                ..Default::default()
            }),
            ..small_config()
        };
        let refined = fit_sds(&target, &cfg).unwrap();
        assert!(
            refined.ga_loss.unwrap()
                <= base
                    .restart_losses
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min)
        );
        assert!(refined.loss <= base.loss + 1e-12);
    }

    #[test]
    fn zero_target_is_rejected() {
        let t = spec(vec![0.0; 4]);
        assert!(fit_sds(&t, &small_config()).is_err());
    }
}
