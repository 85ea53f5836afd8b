//! Deterministic synthetic test signals: a speech-like tone complex and several noise
//! colours. All generators are seeded so every run produces identical samples.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::audio::Waveform;
use crate::error::{Error, Result};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn samples_for(duration_secs: f64, sample_rate_hz: u32) -> Result<usize> {
    let n = (duration_secs * sample_rate_hz as f64).round();
    if !(n >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "duration {duration_secs} s is empty"
        )));
    }
    Ok(n as usize)
}

/// Gaussian white noise with standard deviation `std_dev`.
pub fn white_noise(len: usize, std_dev: f64, sample_rate_hz: u32, seed: u64) -> Result<Waveform> {
    if !(std_dev >= 0.0 && std_dev.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise std dev {std_dev}")));
    }
    let normal = Normal::new(0.0, std_dev)
        .map_err(|e| Error::InvalidParameter(format!("noise std dev {std_dev}: {e}")))?;
    let mut r = rng(seed);
    Waveform::new(
        (0..len).map(|_| normal.sample(&mut r)).collect(),
        sample_rate_hz,
    )
}

/// Voiced-speech stand-in: harmonic tone complexes with syllable-rate amplitude modulation,
/// separated by silent pauses.
///
/// Each "word" lasts 0.3–0.6 s with a fundamental between 100 and 220 Hz and a slowly
/// varying envelope; pauses last 0.15–0.4 s. The signal starts with a 0.25 s pause so
/// trackers that initialize on the leading frames see silence (plus whatever noise is
/// added later).
pub fn speech_like(duration_secs: f64, sample_rate_hz: u32, seed: u64) -> Result<Waveform> {
    let len = samples_for(duration_secs, sample_rate_hz)?;
    let fs = sample_rate_hz as f64;
    let nyquist = fs / 2.0;
    let mut r = rng(seed);
    let mut out = vec![0.0; len];
    let mut pos = (0.25 * fs) as usize;
    while pos < len {
        let word = ((r.random_range(0.3..0.6)) * fs) as usize;
        let end = (pos + word).min(len);
        let f0 = r.random_range(100.0..220.0);
        let glide = r.random_range(-0.25..0.25);
        let syllable_hz = r.random_range(3.0..6.0);
        // Formant-like spectral tilt: louder low harmonics with a bump near 500-900 Hz.
        let formant = r.random_range(500.0..900.0);
        let harmonics: Vec<(f64, f64, f64)> = (1..=12)
            .map(|h| {
                let f = f0 * h as f64;
                let bump = (-((f - formant) / 300.0).powi(2)).exp();
                let amp = (0.6 / h as f64 + 0.5 * bump) * r.random_range(0.7..1.0);
                (h as f64, amp, r.random_range(0.0..2.0 * PI))
            })
            .collect();
        let span = (end - pos) as f64;
        let mut phase = 0.0;
        for (i, slot) in out[pos..end].iter_mut().enumerate() {
            let t = i as f64 / fs;
            let f_inst = f0 * (1.0 + glide * i as f64 / span);
            phase += 2.0 * PI * f_inst / fs;
            // Raised-cosine word envelope times a syllabic modulation.
            let w = (PI * i as f64 / span).sin().powi(2);
            let am = 0.55 + 0.45 * (2.0 * PI * syllable_hz * t).cos();
            let v: f64 = harmonics
                .iter()
                .filter(|(h, _, _)| h * f_inst < nyquist * 0.95)
                .map(|(h, a, p)| a * (h * phase + p).sin())
                .sum();
            *slot = 0.12 * w * am * v;
        }
        pos = end + (r.random_range(0.15..0.4) * fs) as usize;
    }
    Waveform::new(out, sample_rate_hz)
}

/// Kinds of synthetic background noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    White,
    /// Low-pass rumble, strongest below a few hundred hertz.
    Car,
    /// Babble-like mixture of many random, independently modulated tones over a noise bed.
    Airport,
    /// Periodic clatter (wheel impacts) over band-limited rumble.
    Train,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [
        NoiseKind::White,
        NoiseKind::Car,
        NoiseKind::Airport,
        NoiseKind::Train,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::White => "WHITE",
            NoiseKind::Car => "CAR",
            NoiseKind::Airport => "AIRPORT",
            NoiseKind::Train => "TRAIN",
        }
    }
}

impl std::str::FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown noise kind `{s}`")))
    }
}

/// Synthetic noise of the given kind, normalized to RMS 0.1.
pub fn noise(
    kind: NoiseKind,
    duration_secs: f64,
    sample_rate_hz: u32,
    seed: u64,
) -> Result<Waveform> {
    let len = samples_for(duration_secs, sample_rate_hz)?;
    let fs = sample_rate_hz as f64;
    let base = white_noise(len, 1.0, sample_rate_hz, seed)?.into_samples();
    let mut r = rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let samples = match kind {
        NoiseKind::White => base,
        NoiseKind::Car => one_pole(&one_pole(&base, 0.97), 0.9),
        NoiseKind::Airport => {
            let mut out = one_pole(&base, 0.5);
            for _ in 0..24 {
                let f = r.random_range(150.0..2500.0);
                let rate = r.random_range(0.5..4.0);
                let amp = r.random_range(0.5..2.0);
                let p0 = r.random_range(0.0..2.0 * PI);
                for (n, v) in out.iter_mut().enumerate() {
                    let t = n as f64 / fs;
                    let env = (0.5 + 0.5 * (2.0 * PI * rate * t + p0).sin()).powi(2);
                    *v += amp * env * (2.0 * PI * f * t + p0).sin();
                }
            }
            out
        }
        NoiseKind::Train => {
            let mut out = one_pole(&base, 0.9);
            let period = (r.random_range(0.18..0.3) * fs) as usize;
            let decay = (-1.0 / (0.02 * fs)).exp();
            let mut env = 0.0;
            for (n, v) in out.iter_mut().enumerate() {
                if n % period == 0 || n % period == period / 5 {
                    env = 6.0;
                }
                *v += env * base[(n * 7 + 3) % len];
                env *= decay;
            }
            out
        }
    };
    let rms = (samples.iter().map(|v| v * v).sum::<f64>() / len as f64).sqrt();
    let scale = if rms > 0.0 { 0.1 / rms } else { 0.0 };
    Waveform::new(
        samples.into_iter().map(|v| v * scale).collect(),
        sample_rate_hz,
    )
}

fn one_pole(x: &[f64], pole: f64) -> Vec<f64> {
    let mut y = 0.0;
    x.iter()
        .map(|&v| {
            y = pole * y + (1.0 - pole) * v;
            y
        })
        .collect()
}

/// Tone at `freq_hz` with peak amplitude `amp`.
pub fn tone(freq_hz: f64, amp: f64, duration_secs: f64, sample_rate_hz: u32) -> Result<Waveform> {
    let len = samples_for(duration_secs, sample_rate_hz)?;
    let fs = sample_rate_hz as f64;
    Waveform::new(
        (0..len)
            .map(|n| amp * (2.0 * PI * freq_hz * n as f64 / fs).sin())
            .collect(),
        sample_rate_hz,
    )
}
