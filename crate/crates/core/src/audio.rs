//! Waveform container, 16-bit PCM WAV I/O and controlled-SNR mixing.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 8000;

const PCM_SCALE: f64 = 32768.0;

/// Mono sample sequence with its sample rate. Samples are nominally in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidParameter(
                "sample rate must be positive".into(),
            ));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn energy(&self) -> f64 {
        energy(&self.samples)
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            (self.energy() / self.samples.len() as f64).sqrt()
        }
    }

    /// Copy truncated or zero-padded to exactly `len` samples.
    pub fn fit_to_len(&self, len: usize) -> Waveform {
        let mut samples = self.samples.clone();
        samples.resize(len, 0.0);
        Waveform {
            samples,
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Reads a 16-bit PCM WAV file, averaging channels down to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(e, path))?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedFormat(format!(
            "{:?} {}-bit, only 16-bit integer PCM is supported",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::CorruptHeader("zero channels".into()));
    }
    let raw = reader
        .into_samples::<i16>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| map_hound(e, path))?;
    if raw.len() % channels != 0 {
        return Err(Error::CorruptHeader(format!(
            "{} samples is not a multiple of {channels} channels",
            raw.len()
        )));
    }
    let samples = raw
        .chunks_exact(channels)
        .map(|frame| frame.iter().map(|&s| s as f64 / PCM_SCALE).sum::<f64>() / channels as f64)
        .collect();
    Waveform::new(samples, spec.sample_rate)
}

fn map_hound(err: hound::Error, path: &Path) -> Error {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Error::NotFound(path.to_path_buf())
        }
        // hound reports short reads as `Other`.
        hound::Error::IoError(e)
            if matches!(
                e.kind(),
                std::io::ErrorKind::UnexpectedEof | std::io::ErrorKind::Other
            ) =>
        {
            Error::CorruptHeader(e.to_string())
        }
        hound::Error::IoError(e) => Error::Io(e),
        hound::Error::FormatError(msg) => Error::CorruptHeader(msg.to_string()),
        hound::Error::Unsupported => Error::UnsupportedFormat("non-PCM encoding".into()),
        other => Error::UnsupportedFormat(other.to_string()),
    }
}

/// Quantizes one sample to 16-bit PCM, clipping outside [-1, 1).
pub fn quantize(sample: f64) -> i16 {
    (sample * PCM_SCALE)
        .round()
        .clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

/// Writes a mono 16-bit PCM WAV file.
pub fn write_wav(wave: &Waveform, path: impl AsRef<Path>) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let path = path.as_ref();
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(e, path))?;
    for &s in &wave.samples {
        writer
            .write_sample(quantize(s))
            .map_err(|e| map_hound(e, path))?;
    }
    writer.finalize().map_err(|e| map_hound(e, path))?;
    Ok(())
}

/// Result of an additive mix: the noisy signal together with the noise as actually added.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub noisy: Waveform,
    pub scaled_noise: Waveform,
    pub gain: f64,
}

/// Adds `noise` (truncated from its start) to `clean` at a global SNR of `target_snr_db`.
pub fn mix_at_snr(clean: &Waveform, noise: &Waveform, target_snr_db: f64) -> Result<Waveform> {
    mix(clean, noise, target_snr_db, 0).map(|m| m.noisy)
}

/// Like [`mix_at_snr`] but reads the noise starting at `offset` and returns every component.
pub fn mix(
    clean: &Waveform,
    noise: &Waveform,
    target_snr_db: f64,
    offset: usize,
) -> Result<Mixture> {
    if clean.sample_rate_hz != noise.sample_rate_hz {
        return Err(Error::SampleRateMismatch {
            left: clean.sample_rate_hz,
            right: noise.sample_rate_hz,
        });
    }
    if !target_snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "target SNR {target_snr_db} dB"
        )));
    }
    let n = clean.len();
    if noise.len() < offset + n {
        return Err(Error::NoiseTooShort {
            clean: n,
            noise: noise.len().saturating_sub(offset),
        });
    }
    let segment = &noise.samples[offset..offset + n];
    let clean_energy = clean.energy();
    let noise_energy = energy(segment);
    if clean_energy == 0.0 || noise_energy == 0.0 {
        return Err(Error::SilentInput);
    }
    let gain = (clean_energy / (noise_energy * 10f64.powf(target_snr_db / 10.0))).sqrt();
    let scaled: Vec<f64> = segment.iter().map(|q| gain * q).collect();
    let noisy = clean
        .samples
        .iter()
        .zip(&scaled)
        .map(|(p, q)| p + q)
        .collect();
    Ok(Mixture {
        noisy: Waveform::new(noisy, clean.sample_rate_hz)?,
        scaled_noise: Waveform::new(scaled, clean.sample_rate_hz)?,
        gain,
    })
}

/// Deterministic noise start offset in `[0, noise_len - clean_len]` for a seed.
pub fn seeded_offset(noise_len: usize, clean_len: usize, seed: u64) -> usize {
    let slack = noise_len.saturating_sub(clean_len);
    if slack == 0 {
        return 0;
    }
    ChaCha8Rng::seed_from_u64(seed).random_range(0..=slack)
}

/// 10·log10 of the energy ratio between `clean` and `other`.
pub fn measure_global_snr(clean: &Waveform, other: &Waveform) -> Result<f64> {
    if clean.sample_rate_hz != other.sample_rate_hz {
        return Err(Error::SampleRateMismatch {
            left: clean.sample_rate_hz,
            right: other.sample_rate_hz,
        });
    }
    if clean.len() != other.len() {
        return Err(Error::LengthMismatch {
            left: clean.len(),
            right: other.len(),
        });
    }
    let (ec, eo) = (clean.energy(), other.energy());
    if ec == 0.0 || eo == 0.0 {
        return Err(Error::SilentInput);
    }
    Ok(10.0 * (ec / eo).log10())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(samples: &[f64]) -> Waveform {
        Waveform::new(samples.to_vec(), DEFAULT_SAMPLE_RATE).unwrap()
    }

    fn write_raw(path: &Path, channels: u16, bits: u16, data: &[i32]) {
        let spec = hound::WavSpec {
            channels,
            sample_rate: 8000,
            bits_per_sample: bits,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for &d in data {
            w.write_sample(d).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn rejects_bad_waveforms() {
        assert!(Waveform::new(vec![0.0], 0).is_err());
        assert!(Waveform::new(vec![f64::NAN], 8000).is_err());
    }

    #[test]
    fn reads_scaled_samples() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        write_raw(&p, 1, 16, &[16384]);
        assert_eq!(read_wav(&p).unwrap().samples(), &[0.5]);

        write_raw(&p, 1, 16, &[0, 0, 0]);
        assert_eq!(read_wav(&p).unwrap().samples(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn stereo_is_averaged() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let l = (0.2 * PCM_SCALE) as i32;
        let r = (0.4 * PCM_SCALE) as i32;
        write_raw(&p, 2, 16, &[l, r]);
        let w = read_wav(&p).unwrap();
        assert_eq!(w.len(), 1);
        assert!((w.samples()[0] - 0.3).abs() <= 1.0 / PCM_SCALE);
    }

    #[test]
    fn read_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_wav(dir.path().join("missing.wav")),
            Err(Error::NotFound(_))
        ));

        let p = dir.path().join("24.wav");
        write_raw(&p, 1, 24, &[1, 2, 3]);
        assert!(matches!(read_wav(&p), Err(Error::UnsupportedFormat(_))));

        let junk = dir.path().join("junk.wav");
        std::fs::write(&junk, b"RIFF\x10\x00\x00\x00WAVEfmt ").unwrap();
        assert!(matches!(read_wav(&junk), Err(Error::CorruptHeader(_))));

        let not_riff = dir.path().join("text.wav");
        std::fs::write(&not_riff, b"hello world, not audio at all").unwrap();
        assert!(matches!(read_wav(&not_riff), Err(Error::CorruptHeader(_))));
    }

    #[test]
    fn write_quantizes_and_clips() {
        assert_eq!(quantize(0.5), 16384);
        assert_eq!(quantize(1.5), 32767);
        assert_eq!(quantize(-1.0), -32768);
        assert_eq!(quantize(-3.0), -32768);

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("o.wav");
        write_wav(&wave(&[0.5, 1.5]), &p).unwrap();
        let raw: Vec<i16> = hound::WavReader::open(&p)
            .unwrap()
            .into_samples::<i16>()
            .map(|s| s.unwrap())
            .collect();
        assert_eq!(raw, vec![16384, 32767]);
    }

    #[test]
    fn tone_round_trip_within_one_step() {
        let samples: Vec<f64> = (0..8000)
            .map(|n| 0.8 * (2.0 * std::f64::consts::PI * 440.0 * n as f64 / 8000.0).sin())
            .collect();
        let w = wave(&samples);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tone.wav");
        write_wav(&w, &p).unwrap();
        let back = read_wav(&p).unwrap();
        assert_eq!(back.sample_rate_hz(), 8000);
        let max_err = back
            .samples()
            .iter()
            .zip(w.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max_err <= 1.0 / PCM_SCALE, "{max_err}");
    }

    fn rms_signal(rms: f64, len: usize, phase: f64) -> Waveform {
        // Square wave of amplitude `rms` has exactly that RMS.
        wave(
            &(0..len)
                .map(|n| {
                    if ((n as f64 + phase) as usize / 3).is_multiple_of(2) {
                        rms
                    } else {
                        -rms
                    }
                })
                .collect::<Vec<_>>(),
        )
    }

    #[test]
    fn mix_gain_examples() {
        let clean = rms_signal(0.1, 400, 0.0);
        let noise = rms_signal(0.1, 400, 1.0);
        let m = mix(&clean, &noise, 0.0, 0).unwrap();
        assert!((m.gain - 1.0).abs() < 1e-12);
        let m = mix(&clean, &noise, 20.0, 0).unwrap();
        assert!((m.gain - 0.1).abs() < 1e-12);
    }

    #[test]
    fn mix_errors() {
        let clean = wave(&[0.1, 0.2, 0.3]);
        let other_rate = Waveform::new(vec![0.1, 0.2, 0.3], 16000).unwrap();
        assert!(matches!(
            mix_at_snr(&clean, &other_rate, 0.0),
            Err(Error::SampleRateMismatch { .. })
        ));
        assert!(matches!(
            mix_at_snr(&clean, &wave(&[0.1, 0.2]), 0.0),
            Err(Error::NoiseTooShort { .. })
        ));
        assert!(matches!(
            mix_at_snr(&wave(&[0.0; 3]), &clean, 0.0),
            Err(Error::SilentInput)
        ));
        assert!(matches!(
            mix_at_snr(&clean, &wave(&[0.0; 3]), 0.0),
            Err(Error::SilentInput)
        ));
    }

    #[test]
    fn noise_is_truncated_from_start() {
        let clean = wave(&[0.1, 0.1]);
        let noise = wave(&[1.0, -1.0, 5.0, 5.0]);
        let m = mix(&clean, &noise, 0.0, 0).unwrap();
        assert_eq!(m.scaled_noise.len(), 2);
        assert!(m.scaled_noise.samples()[0] > 0.0 && m.scaled_noise.samples()[1] < 0.0);
    }

    #[test]
    fn seeded_offset_is_deterministic_and_in_range() {
        let a = seeded_offset(1000, 100, 7);
        assert_eq!(a, seeded_offset(1000, 100, 7));
        assert!(a <= 900);
        assert_eq!(seeded_offset(100, 100, 7), 0);
    }

    #[test]
    fn global_snr_examples() {
        let c = rms_signal(0.1, 300, 0.0);
        assert!(measure_global_snr(&c, &c).unwrap().abs() < 1e-12);
        let half = wave(&c.samples().iter().map(|s| 0.5 * s).collect::<Vec<_>>());
        assert!((measure_global_snr(&c, &half).unwrap() - 6.020599913279624).abs() < 1e-9);
        assert!(matches!(
            measure_global_snr(&c, &wave(&[0.0; 300])),
            Err(Error::SilentInput)
        ));
        assert!(matches!(
            measure_global_snr(&c, &wave(&[0.1; 3])),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
