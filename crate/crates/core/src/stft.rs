//! Hamming-windowed short-time Fourier analysis and weighted overlap-add synthesis.
//!
//! Frame `m` covers samples `[m * hop, m * hop + frame_len)`. Only complete frames are
//! analysed, so fewer than `hop` trailing samples are dropped. Each frame is windowed,
//! zero-padded to `fft_size` and stored as its non-negative-frequency half
//! (`fft_size / 2 + 1` bins).

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio::Waveform;
use crate::error::{Error, Result};

/// Constant term of the generalized Hamming window.
pub const HAMMING_C0: f64 = 0.54;

/// Synthesis normalizer values below this are treated as a gap in overlap-add coverage.
pub const COLA_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftParams {
    pub frame_len: usize,
    pub hop: usize,
    /// Cosine coefficient of the window, `w[n] = 0.54 - window_coeff * cos(..)`.
    pub window_coeff: f64,
    pub fft_size: usize,
}

impl Default for StftParams {
    fn default() -> Self {
        Self {
            frame_len: 256,
            hop: 128,
            window_coeff: 0.46,
            fft_size: 256,
        }
    }
}

impl StftParams {
    /// Defaults scaled to a sample rate: 32 ms frames, 50% overlap.
    pub fn for_sample_rate(sample_rate_hz: u32) -> Self {
        let frame_len = ((0.032 * sample_rate_hz as f64).round() as usize).max(2);
        Self {
            frame_len,
            hop: (frame_len / 2).max(1),
            window_coeff: 0.46,
            fft_size: frame_len.next_power_of_two(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_len < 2 {
            return Err(Error::InvalidLength(self.frame_len));
        }
        if self.hop == 0 || self.hop > self.frame_len {
            return Err(Error::InvalidParameter(format!(
                "hop {} must be in 1..={}",
                self.hop, self.frame_len
            )));
        }
        if !(self.window_coeff > 0.0 && self.window_coeff < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "window coefficient {} must be in (0, 1)",
                self.window_coeff
            )));
        }
        if !self.fft_size.is_power_of_two() || self.fft_size < self.frame_len {
            return Err(Error::InvalidParameter(format!(
                "fft size {} must be a power of two >= frame length {}",
                self.fft_size, self.frame_len
            )));
        }
        Ok(())
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Number of complete frames in a signal of `len` samples.
    pub fn num_frames(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }

    /// Length of the overlap-add output for `frames` frames.
    pub fn synthesis_len(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            frames * self.hop + (self.frame_len - self.hop)
        }
    }
}

/// Symmetric generalized Hamming window of `params.frame_len` points.
pub fn hamming_window(params: &StftParams) -> Result<Vec<f64>> {
    let n_w = params.frame_len;
    if n_w < 2 {
        return Err(Error::InvalidLength(n_w));
    }
    let denom = (n_w - 1) as f64;
    Ok((0..n_w)
        .map(|n| {
            // Evaluate on the mirrored index for the upper half so w[n] == w[N-1-n] bitwise.
            let k = n.min(n_w - 1 - n) as f64;
            HAMMING_C0 - params.window_coeff * (2.0 * PI * k / denom).cos()
        })
        .collect())
}

/// One-sided complex spectra of consecutive frames.
#[derive(Debug, Clone, PartialEq)]
pub struct StftMatrix {
    frames: Vec<Vec<Complex64>>,
    params: StftParams,
    sample_rate_hz: u32,
}

impl StftMatrix {
    /// Builds a matrix from precomputed frames, checking shape and finiteness.
    pub fn from_frames(
        frames: Vec<Vec<Complex64>>,
        params: StftParams,
        sample_rate_hz: u32,
    ) -> Result<Self> {
        params.validate()?;
        let bins = params.num_bins();
        for frame in &frames {
            if frame.len() != bins {
                return Err(Error::BinCountMismatch {
                    left: frame.len(),
                    right: bins,
                });
            }
            if frame.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                return Err(Error::InvalidParameter(
                    "non-finite STFT coefficient".into(),
                ));
            }
        }
        Ok(Self {
            frames,
            params,
            sample_rate_hz,
        })
    }

    pub fn frames(&self) -> &[Vec<Complex64>] {
        &self.frames
    }

    pub fn frame(&self, m: usize) -> Result<&[Complex64]> {
        self.frames
            .get(m)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange {
                index: m,
                len: self.frames.len(),
            })
    }

    pub fn params(&self) -> &StftParams {
        &self.params
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_bins(&self) -> usize {
        self.params.num_bins()
    }

    /// |X(m, k)|² for every bin of frame `m`.
    pub fn power_spectrum(&self, m: usize) -> Result<Vec<f64>> {
        Ok(self.frame(m)?.iter().map(|c| c.norm_sqr()).collect())
    }

    /// Same shape, every coefficient multiplied by the matching real gain.
    pub fn apply_gains(&self, gains: &[Vec<f64>]) -> Result<StftMatrix> {
        if gains.len() != self.frames.len() {
            return Err(Error::LengthMismatch {
                left: gains.len(),
                right: self.frames.len(),
            });
        }
        let frames = self
            .frames
            .iter()
            .zip(gains)
            .map(|(frame, g)| {
                if g.len() != frame.len() {
                    return Err(Error::BinCountMismatch {
                        left: g.len(),
                        right: frame.len(),
                    });
                }
                Ok(frame.iter().zip(g).map(|(c, &gain)| c * gain).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        StftMatrix::from_frames(frames, self.params, self.sample_rate_hz)
    }
}

/// Short-time Fourier transform of `wave`.
pub fn stft(wave: &Waveform, params: &StftParams) -> Result<StftMatrix> {
    params.validate()?;
    let x = wave.samples();
    if x.len() < params.frame_len {
        return Err(Error::SignalTooShort {
            len: x.len(),
            needed: params.frame_len,
        });
    }
    let window = hamming_window(params)?;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(params.fft_size);
    let bins = params.num_bins();
    let mut buf = vec![Complex64::new(0.0, 0.0); params.fft_size];
    let frames = (0..params.num_frames(x.len()))
        .map(|m| {
            let start = m * params.hop;
            buf.fill(Complex64::new(0.0, 0.0));
            for (slot, (s, w)) in buf
                .iter_mut()
                .zip(x[start..start + params.frame_len].iter().zip(&window))
            {
                slot.re = s * w;
            }
            fft.process(&mut buf);
            buf[..bins].to_vec()
        })
        .collect();
    StftMatrix::from_frames(frames, *params, wave.sample_rate_hz())
}

/// Weighted overlap-add resynthesis.
///
/// Each inverse frame is multiplied by the analysis window again and the sum is divided by
/// the summed squared window, which gives exact reconstruction wherever that normalizer is
/// nonzero. Output length is `frames * hop + (frame_len - hop)`.
pub fn istft_overlap_add(mat: &StftMatrix) -> Result<Waveform> {
    let params = mat.params();
    let window = hamming_window(params)?;
    let out_len = params.synthesis_len(mat.num_frames());
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(params.fft_size);
    let n_fft = params.fft_size;
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    let scale = 1.0 / n_fft as f64;

    for (m, frame) in mat.frames().iter().enumerate() {
        buf[..frame.len()].copy_from_slice(frame);
        for k in 1..n_fft / 2 {
            buf[n_fft - k] = frame[k].conj();
        }
        // DC and Nyquist of a real signal are real.
        buf[0].im = 0.0;
        buf[n_fft / 2].im = 0.0;
        ifft.process(&mut buf);
        let start = m * params.hop;
        for (n, w) in window.iter().enumerate() {
            out[start + n] += w * buf[n].re * scale;
            norm[start + n] += w * w;
        }
    }

    let interior = (params.frame_len - params.hop)..(out_len - (params.frame_len - params.hop));
    for (n, (y, &z)) in out.iter_mut().zip(&norm).enumerate() {
        if z < COLA_FLOOR {
            if interior.contains(&n) {
                return Err(Error::ColaViolation {
                    sample: n,
                    value: z,
                });
            }
            *y = 0.0;
        } else {
            *y /= z;
        }
    }
    Waveform::new(out, mat.sample_rate_hz())
}
