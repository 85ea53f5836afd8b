//! Single-channel speech enhancement built around a signal-to-residual frame classifier.
//!
//! The pipeline is: Hamming-window STFT ([`stft`]), per-frame SNR classification into
//! non-speech / quasi-speech / pure-speech ([`classifier`]), recursive per-bin noise PSD
//! tracking ([`tracker`]), Wiener gains with a decision-directed a priori SNR and
//! overlap-add resynthesis ([`enhance`]). [`metrics`] scores the result with segmental SNR
//! and LPC log-likelihood ratio, and [`viz`] renders spectrograms.
//!
//! ```no_run
//! use sr_enhance::{audio, enhance::{enhance, EnhanceConfig}};
//!
//! let noisy = audio::read_wav("noisy.wav")?;
//! let out = enhance(&noisy, &EnhanceConfig::default())?;
//! audio::write_wav(&out.wave, "enhanced.wav")?;
//! # Ok::<(), sr_enhance::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod classifier;
pub mod enhance;
pub mod error;
pub mod metrics;
pub mod stft;
pub mod synth;
pub mod tracker;
pub mod viz;

pub use audio::Waveform;
pub use classifier::{ClassifierThresholds, FrameClass};
pub use enhance::{EnhanceConfig, Method};
pub use error::{Error, Result};
pub use metrics::{MetricParams, MetricsReport};
pub use stft::{StftMatrix, StftParams};
pub use tracker::{TrackerParams, TrackerState};
