//! Signal-to-residual ratio, distortion regions and three-way frame classification.
//!
//! The frame label is driven by a blind SNR proxy: the per-bin posterior ratio
//! `|X|² / σ_N²` averaged over the frame, minus one, floored at zero. Frames whose proxy
//! reaches one third (the lowest SNR at which an unprocessed spectrum stays inside the
//! 6.02 dB amplification bound) are treated as containing speech.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_SR_EPS: f64 = 1e-12;

/// Where an estimated magnitude falls relative to the clean one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistortionRegion {
    /// Estimate at or below the clean magnitude.
    AttenuationOnly,
    /// Estimate above the clean magnitude by at most a factor of two (6.02 dB).
    AmplificationUnder6dB,
    /// Estimate more than twice the clean magnitude.
    AmplificationOver6dB,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameClass {
    NonSpeech,
    QuasiSpeech,
    PureSpeech,
}

impl FrameClass {
    pub fn as_str(self) -> &'static str {
        match self {
            FrameClass::NonSpeech => "non_speech",
            FrameClass::QuasiSpeech => "quasi_speech",
            FrameClass::PureSpeech => "pure_speech",
        }
    }
}

impl fmt::Display for FrameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FrameClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "non_speech" => Ok(FrameClass::NonSpeech),
            "quasi_speech" => Ok(FrameClass::QuasiSpeech),
            "pure_speech" => Ok(FrameClass::PureSpeech),
            other => Err(Error::InvalidParameter(format!(
                "unknown frame class `{other}`"
            ))),
        }
    }
}

/// SNR-proxy bounds separating the three frame classes (power ratios, not dB).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierThresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self {
            low: 1.0 / 3.0,
            high: 3.0,
        }
    }
}

impl ClassifierThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.low > 0.0 && self.low < self.high && self.high.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "classifier thresholds need 0 < low < high, got {} and {}",
                self.low, self.high
            )));
        }
        Ok(())
    }

    /// Label for an SNR proxy value.
    pub fn label(&self, snr: f64) -> FrameClass {
        if snr < self.low {
            FrameClass::NonSpeech
        } else if snr < self.high {
            FrameClass::QuasiSpeech
        } else {
            FrameClass::PureSpeech
        }
    }
}

fn check_magnitude(m: f64) -> Result<f64> {
    if m < 0.0 || m.is_nan() {
        Err(Error::NegativeMagnitude(m))
    } else {
        Ok(m)
    }
}

/// Per-bin `S² / max((S - Ŝ)², eps)`.
pub fn compute_sr(clean_mag: &[f64], est_mag: &[f64], eps: f64) -> Result<Vec<f64>> {
    if clean_mag.len() != est_mag.len() {
        return Err(Error::BinCountMismatch {
            left: clean_mag.len(),
            right: est_mag.len(),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    clean_mag
        .iter()
        .zip(est_mag)
        .map(|(&s, &e)| {
            let (s, e) = (check_magnitude(s)?, check_magnitude(e)?);
            let residual = (s - e) * (s - e);
            Ok(s * s / residual.max(eps))
        })
        .collect()
}

/// Region of a single (clean, estimate) magnitude pair; boundaries belong to the lower region.
pub fn classify_region_oracle(clean_mag: f64, est_mag: f64) -> Result<DistortionRegion> {
    let (s, e) = (check_magnitude(clean_mag)?, check_magnitude(est_mag)?);
    Ok(if e <= s {
        DistortionRegion::AttenuationOnly
    } else if e <= 2.0 * s {
        DistortionRegion::AmplificationUnder6dB
    } else {
        DistortionRegion::AmplificationOver6dB
    })
}

/// Per-bin posterior excess `max(|X|² / σ_N² - 1, 0)`.
pub fn bin_snr(frame_power: &[f64], noise_psd: &[f64]) -> Result<Vec<f64>> {
    check_bins(frame_power, noise_psd)?;
    Ok(frame_power
        .iter()
        .zip(noise_psd)
        .map(|(p, n)| (p / n - 1.0).max(0.0))
        .collect())
}

/// Frame SNR proxy `max(mean_k(|X|² / σ_N²) - 1, 0)`.
pub fn frame_snr(frame_power: &[f64], noise_psd: &[f64]) -> Result<f64> {
    check_bins(frame_power, noise_psd)?;
    let mean = frame_power
        .iter()
        .zip(noise_psd)
        .map(|(p, n)| p / n)
        .sum::<f64>()
        / frame_power.len() as f64;
    Ok((mean - 1.0).max(0.0))
}

fn check_bins(frame_power: &[f64], noise_psd: &[f64]) -> Result<()> {
    if frame_power.len() != noise_psd.len() {
        return Err(Error::BinCountMismatch {
            left: frame_power.len(),
            right: noise_psd.len(),
        });
    }
    if frame_power.is_empty() {
        return Err(Error::BinCountMismatch { left: 0, right: 0 });
    }
    if let Some(k) = noise_psd.iter().position(|&n| !(n > 0.0)) {
        return Err(Error::ZeroNoiseEstimate(k));
    }
    Ok(())
}

pub fn classify_frame(
    frame_power: &[f64],
    noise_psd: &[f64],
    th: &ClassifierThresholds,
) -> Result<FrameClass> {
    Ok(th.label(frame_snr(frame_power, noise_psd)?))
}

/// Per-bin variant of [`classify_frame`].
pub fn classify_bins(
    frame_power: &[f64],
    noise_psd: &[f64],
    th: &ClassifierThresholds,
) -> Result<Vec<FrameClass>> {
    Ok(bin_snr(frame_power, noise_psd)?
        .into_iter()
        .map(|snr| th.label(snr))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use DistortionRegion::*;
    use FrameClass::*;

    #[test]
    fn sr_examples() {
        assert_eq!(compute_sr(&[2.0], &[1.0], 1e-12).unwrap(), vec![4.0]);
        assert_eq!(compute_sr(&[1.0], &[1.0], 1e-12).unwrap(), vec![1e12]);
        assert_eq!(compute_sr(&[1.0], &[0.0], 1e-12).unwrap(), vec![1.0]);
        assert!(matches!(
            compute_sr(&[-1.0], &[0.0], 1e-12),
            Err(Error::NegativeMagnitude(_))
        ));
        assert!(compute_sr(&[1.0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn region_examples() {
        assert_eq!(classify_region_oracle(1.0, 0.5).unwrap(), AttenuationOnly);
        assert_eq!(
            classify_region_oracle(1.0, 1.5).unwrap(),
            AmplificationUnder6dB
        );
        assert_eq!(
            classify_region_oracle(1.0, 2.5).unwrap(),
            AmplificationOver6dB
        );
        // The factor-two boundary is 6.02 dB in magnitude terms.
        assert!((20.0 * 2f64.log10() - 6.02).abs() < 0.001);
        assert!(classify_region_oracle(-0.1, 1.0).is_err());
    }

    #[test]
    fn region_boundaries_go_low() {
        assert_eq!(classify_region_oracle(1.0, 1.0).unwrap(), AttenuationOnly);
        assert_eq!(
            classify_region_oracle(1.0, 2.0).unwrap(),
            AmplificationUnder6dB
        );
        assert_eq!(classify_region_oracle(0.0, 0.0).unwrap(), AttenuationOnly);
        assert_eq!(
            classify_region_oracle(0.0, 1e-300).unwrap(),
            AmplificationOver6dB
        );
    }

    #[test]
    fn frame_examples() {
        let th = ClassifierThresholds::default();
        let noise = [0.5, 1.0, 2.0];
        let scaled = |c: f64| noise.iter().map(|n| c * n).collect::<Vec<_>>();
        assert_eq!(
            classify_frame(&scaled(1.0), &noise, &th).unwrap(),
            NonSpeech
        );
        assert_eq!(
            classify_frame(&scaled(2.0), &noise, &th).unwrap(),
            QuasiSpeech
        );
        assert_eq!(
            classify_frame(&scaled(8.0), &noise, &th).unwrap(),
            PureSpeech
        );
    }

    #[test]
    fn threshold_boundary_is_exact() {
        let th = ClassifierThresholds::default();
        assert_eq!(th.label(1.0 / 3.0), QuasiSpeech);
        assert_eq!(th.label(1.0 / 3.0 - 1e-9), NonSpeech);
        assert_eq!(th.label(3.0), PureSpeech);
        assert_eq!(th.label(0.0), NonSpeech);
    }

    #[test]
    fn frame_errors() {
        let th = ClassifierThresholds::default();
        assert!(matches!(
            classify_frame(&[1.0, 1.0], &[1.0, 0.0], &th),
            Err(Error::ZeroNoiseEstimate(1))
        ));
        assert!(matches!(
            classify_frame(&[1.0], &[1.0, 1.0], &th),
            Err(Error::BinCountMismatch { .. })
        ));
    }

    #[test]
    fn per_bin_labels() {
        let th = ClassifierThresholds::default();
        let labels = classify_bins(&[1.0, 2.0, 8.0], &[1.0, 1.0, 1.0], &th).unwrap();
        assert_eq!(labels, vec![NonSpeech, QuasiSpeech, PureSpeech]);
    }

    #[test]
    fn threshold_validation() {
        assert!(ClassifierThresholds::default().validate().is_ok());
        assert!(ClassifierThresholds {
            low: 0.0,
            high: 1.0
        }
        .validate()
        .is_err());
        assert!(ClassifierThresholds {
            low: 2.0,
            high: 1.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn class_names_round_trip() {
        for c in [NonSpeech, QuasiSpeech, PureSpeech] {
            assert_eq!(c.as_str().parse::<FrameClass>().unwrap(), c);
        }
        assert!("speech".parse::<FrameClass>().is_err());
    }
}
