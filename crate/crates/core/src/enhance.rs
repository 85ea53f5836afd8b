//! Wiener-gain enhancement driven by either noise tracker.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::audio::Waveform;
use crate::classifier::{classify_frame, ClassifierThresholds, FrameClass};
use crate::error::{Error, Result};
use crate::stft::{istft_overlap_add, stft, StftMatrix, StftParams};
use crate::tracker::{TrackerParams, TrackerState};

/// Noise-estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Weighted average technique: presence-weighted update on every frame.
    #[serde(rename = "WAT")]
    Wat,
    /// Classified update driven by the frame SNR proxy.
    #[serde(rename = "SR")]
    Sr,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Wat => "WAT",
            Method::Sr => "SR",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sr" => Ok(Method::Sr),
            "wat" => Ok(Method::Wat),
            _ => Err(Error::InvalidParameter(format!(
                "unknown method `{s}`, expected sr or wat"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhanceConfig {
    pub method: Method,
    /// Weight of the previous frame in the decision-directed a priori SNR.
    pub dd_alpha: f64,
    pub gain_floor: f64,
    /// Leading frames averaged to initialize the tracker.
    pub init_frames: usize,
    pub tracker: TrackerParams,
    pub stft: StftParams,
    pub thresholds: ClassifierThresholds,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        Self {
            method: Method::Sr,
            dd_alpha: 0.98,
            gain_floor: 0.1,
            init_frames: 6,
            tracker: TrackerParams::default(),
            stft: StftParams::default(),
            thresholds: ClassifierThresholds::default(),
        }
    }
}

impl EnhanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.dd_alpha) {
            return Err(Error::InvalidParameter(format!(
                "dd_alpha = {} must be in [0, 1)",
                self.dd_alpha
            )));
        }
        if !(self.gain_floor > 0.0 && self.gain_floor < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gain_floor = {} must be in (0, 1)",
                self.gain_floor
            )));
        }
        if self.init_frames == 0 {
            return Err(Error::InvalidParameter(
                "init_frames must be at least 1".into(),
            ));
        }
        self.tracker.validate()?;
        self.stft.validate()?;
        self.thresholds.validate()
    }
}

/// Decision-directed a priori SNR:
/// `dd_alpha·G(m-1)²·γ(m-1) + (1-dd_alpha)·max(γ(m) - 1, 0)`.
pub fn prior_snr_dd(prev_gain: &[f64], prev_post: &[f64], post: &[f64], dd_alpha: f64) -> Vec<f64> {
    prev_gain
        .iter()
        .zip(prev_post)
        .zip(post)
        .map(|((g, gp), gc)| dd_alpha * g * g * gp + (1.0 - dd_alpha) * (gc - 1.0).max(0.0))
        .collect()
}

/// Wiener gain `ξ / (1 + ξ)`, never below `floor`.
pub fn wiener_gain(prior: &[f64], floor: f64) -> Vec<f64> {
    prior
        .iter()
        .map(|&x| {
            let h = if x.is_infinite() { 1.0 } else { x / (1.0 + x) };
            h.max(floor).min(1.0)
        })
        .collect()
}

/// Per-frame noise PSD trajectory plus what the tracker reported along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseTrack {
    pub noise: Vec<Vec<f64>>,
    /// Frame labels from the classifier; `None` for initialization frames and for WAT.
    pub classes: Vec<Option<FrameClass>>,
    pub mean_presence: Vec<f64>,
}

fn min_frames(params: &StftParams) -> usize {
    params.frame_len + params.hop
}

/// Runs the configured tracker over every frame of `mat`.
///
/// The first `init_frames` frames (or all of them, if fewer) seed the tracker and keep the
/// seeded estimate. Each later frame is classified against the previous frame's estimate.
pub fn estimate_noise(mat: &StftMatrix, cfg: &EnhanceConfig) -> Result<NoiseTrack> {
    cfg.validate()?;
    let frames = mat.num_frames();
    let powers = (0..frames)
        .map(|m| mat.power_spectrum(m))
        .collect::<Result<Vec<_>>>()?;
    let n_init = cfg.init_frames.min(frames);
    let mut state = TrackerState::new(cfg.tracker, &powers[..n_init])?;

    let mut track = NoiseTrack {
        noise: Vec::with_capacity(frames),
        classes: Vec::with_capacity(frames),
        mean_presence: Vec::with_capacity(frames),
    };
    for _ in 0..n_init {
        track.noise.push(state.noise_psd.clone());
        track.classes.push(None);
        track.mean_presence.push(state.mean_presence_prob());
    }
    for power in &powers[n_init..] {
        let class = match cfg.method {
            Method::Sr => {
                let class = classify_frame(power, &state.noise_psd, &cfg.thresholds)?;
                state.step_sr(power, class)?;
                Some(class)
            }
            Method::Wat => {
                state.step_wat(power)?;
                None
            }
        };
        track.noise.push(state.noise_psd.clone());
        track.classes.push(class);
        track.mean_presence.push(state.mean_presence_prob());
    }
    Ok(track)
}

/// Wiener gains for every frame given a noise trajectory. Shared by both methods.
pub fn spectral_gains(
    mat: &StftMatrix,
    noise: &[Vec<f64>],
    cfg: &EnhanceConfig,
) -> Result<Vec<Vec<f64>>> {
    if noise.len() != mat.num_frames() {
        return Err(Error::LengthMismatch {
            left: noise.len(),
            right: mat.num_frames(),
        });
    }
    let bins = mat.num_bins();
    let floor = cfg.tracker.floor;
    let mut prev_gain = vec![0.0; bins];
    let mut prev_post = vec![0.0; bins];
    let mut gains = Vec::with_capacity(noise.len());
    for (m, sigma) in noise.iter().enumerate() {
        if sigma.len() != bins {
            return Err(Error::BinCountMismatch {
                left: sigma.len(),
                right: bins,
            });
        }
        let post: Vec<f64> = mat
            .power_spectrum(m)?
            .iter()
            .zip(sigma)
            .map(|(p, n)| p / n.max(floor))
            .collect();
        let prior = prior_snr_dd(&prev_gain, &prev_post, &post, cfg.dd_alpha);
        let gain = wiener_gain(&prior, cfg.gain_floor);
        prev_post = post;
        prev_gain.clone_from(&gain);
        gains.push(gain);
    }
    Ok(gains)
}

/// Applies gains derived from `noise` to `mat` and resynthesizes.
pub fn enhance_with_noise(
    mat: &StftMatrix,
    noise: &[Vec<f64>],
    cfg: &EnhanceConfig,
) -> Result<(Waveform, Vec<Vec<f64>>)> {
    let gains = spectral_gains(mat, noise, cfg)?;
    let wave = istft_overlap_add(&mat.apply_gains(&gains)?)?;
    Ok((wave, gains))
}

/// One row of the per-frame processing trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTrace {
    pub frame: usize,
    pub class: Option<FrameClass>,
    pub mean_noise_psd: f64,
    pub mean_presence_prob: f64,
    pub mean_gain: f64,
}

#[derive(Debug, Clone)]
pub struct Enhanced {
    pub wave: Waveform,
    pub method: Method,
    pub trace: Vec<FrameTrace>,
}

impl Enhanced {
    /// Trace as CSV. SR traces carry a class column; WAT traces have none.
    pub fn trace_csv(&self) -> String {
        let mut out = String::new();
        let with_class = self.method == Method::Sr;
        if with_class {
            out.push_str("frame,class,mean_noise_psd,mean_presence_prob,mean_gain\n");
        } else {
            out.push_str("frame,mean_noise_psd,mean_presence_prob,mean_gain\n");
        }
        for t in &self.trace {
            out.push_str(&t.frame.to_string());
            if with_class {
                out.push(',');
                out.push_str(t.class.map_or("init", FrameClass::as_str));
            }
            out.push_str(&format!(
                ",{:.9e},{:.6},{:.6}\n",
                t.mean_noise_psd, t.mean_presence_prob, t.mean_gain
            ));
        }
        out
    }
}

/// Full pipeline: analysis, noise tracking, Wiener gains, overlap-add.
///
/// Output length is `frames * hop + (frame_len - hop)`: trailing samples that do not fill
/// a hop are dropped.
pub fn enhance(noisy: &Waveform, cfg: &EnhanceConfig) -> Result<Enhanced> {
    cfg.validate()?;
    let needed = min_frames(&cfg.stft);
    if noisy.len() < needed {
        return Err(Error::SignalTooShort {
            len: noisy.len(),
            needed,
        });
    }
    let mat = stft(noisy, &cfg.stft)?;
    let track = estimate_noise(&mat, cfg)?;
    let (wave, gains) = enhance_with_noise(&mat, &track.noise, cfg)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let trace = (0..mat.num_frames())
        .map(|m| FrameTrace {
            frame: m,
            class: track.classes[m],
            mean_noise_psd: mean(&track.noise[m]),
            mean_presence_prob: track.mean_presence[m],
            mean_gain: mean(&gains[m]),
        })
        .collect();
    Ok(Enhanced {
        wave,
        method: cfg.method,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd_examples() {
        let p = prior_snr_dd(&[0.0], &[0.0], &[5.0], 0.98);
        assert!((p[0] - 0.08).abs() < 1e-12);
        assert_eq!(prior_snr_dd(&[0.0], &[0.0], &[0.7], 0.98), vec![0.0]);
        assert_eq!(prior_snr_dd(&[0.0], &[0.0], &[1.0], 0.98), vec![0.0]);
    }

    #[test]
    fn dd_fixed_point_matches_bisection() {
        let (g_post, a) = (4.0, 0.98);
        // Independent solve of x = a·(x/(1+x))²·G + (1-a)(G-1) by bisection.
        // Iterating from zero converges to the smallest root, so bracket the first sign change.
        let f = |x: f64| a * (x / (1.0 + x)).powi(2) * g_post + (1.0 - a) * (g_post - 1.0) - x;
        let step = 1e-3;
        let mut lo = 0.0;
        while f(lo + step) > 0.0 {
            lo += step;
        }
        let mut hi = lo + step;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let fixed = 0.5 * (lo + hi);

        let (mut gain, mut post) = (vec![0.0], vec![0.0]);
        let mut prior = vec![0.0];
        for _ in 0..500 {
            prior = prior_snr_dd(&gain, &post, &[g_post], a);
            gain = wiener_gain(&prior, 1e-6);
            post = vec![g_post];
        }
        assert!((prior[0] - fixed).abs() < 1e-9, "{} vs {fixed}", prior[0]);
    }

    #[test]
    fn wiener_examples() {
        assert_eq!(wiener_gain(&[1.0], 0.1), vec![0.5]);
        assert_eq!(wiener_gain(&[0.0], 0.1), vec![0.1]);
        assert_eq!(wiener_gain(&[f64::INFINITY], 0.1), vec![1.0]);
        assert!((wiener_gain(&[1e12], 0.1)[0] - 1.0).abs() < 1e-11);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("SR".parse::<Method>().unwrap(), Method::Sr);
        assert_eq!("wat".parse::<Method>().unwrap(), Method::Wat);
        assert!("mmse".parse::<Method>().is_err());
    }

    #[test]
    fn config_validation() {
        let d = EnhanceConfig::default();
        assert!(d.validate().is_ok());
        assert!(EnhanceConfig { dd_alpha: 1.0, ..d }.validate().is_err());
        assert!(EnhanceConfig {
            gain_floor: 0.0,
            ..d
        }
        .validate()
        .is_err());
        assert!(EnhanceConfig {
            init_frames: 0,
            ..d
        }
        .validate()
        .is_err());
    }

    #[test]
    fn too_short_input() {
        let w = Waveform::new(vec![0.1; 300], 8000).unwrap();
        assert!(matches!(
            enhance(&w, &EnhanceConfig::default()),
            Err(Error::SignalTooShort { .. })
        ));
    }

    #[test]
    fn output_length_geometry() {
        let w = Waveform::new(
            (0..1000).map(|n| (n as f64 * 0.37).sin() * 0.1).collect(),
            8000,
        )
        .unwrap();
        let out = enhance(&w, &EnhanceConfig::default()).unwrap();
        let frames = StftParams::default().num_frames(1000);
        assert_eq!(out.trace.len(), frames);
        assert_eq!(out.wave.len(), frames * 128 + (256 - 128));
    }

    #[test]
    fn trace_columns_depend_on_method() {
        let w = Waveform::new(
            (0..2000).map(|n| (n as f64 * 0.37).sin() * 0.1).collect(),
            8000,
        )
        .unwrap();
        let sr = enhance(&w, &EnhanceConfig::default()).unwrap().trace_csv();
        let wat = enhance(
            &w,
            &EnhanceConfig {
                method: Method::Wat,
                ..EnhanceConfig::default()
            },
        )
        .unwrap()
        .trace_csv();
        assert!(sr.starts_with("frame,class,"));
        assert!(sr.lines().nth(1).unwrap().starts_with("0,init,"));
        assert!(wat.starts_with("frame,mean_noise_psd,"));
    }
}
