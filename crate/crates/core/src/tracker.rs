//! Recursive per-bin noise PSD tracking.
//!
//! Every frame runs the same front end: smoothed noisy power, running minimum of that
//! smoothed power, the ratio of raw power to the minimum, and a recursively smoothed
//! speech-presence probability. The two estimators differ only in how the noise PSD is
//! updated afterwards:
//!
//! * [`TrackerState::step_sr`] takes a frame label from the classifier. Non-speech frames
//!   use fixed exponential smoothing, quasi-speech frames use the presence-dependent
//!   smoothing factor, and pure-speech frames hold the previous estimate. A bin whose
//!   running minimum has stayed above the held estimate for `max_hold_frames` frames is
//!   raised to that minimum, so a sustained rise in noise level is not mistaken for
//!   endless speech.
//! * [`TrackerState::step_wat`] applies the presence-dependent update to every frame.

use std::str::FromStr;

use crate::classifier::FrameClass;
use crate::error::{Error, Result};

/// Upper bound on the noisy-power smoothing factor; at 1 the recursion stops moving.
pub const XI_MAX: f64 = 0.98;

/// Which quantity feeds the presence-dependent smoothing factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PresenceSource {
    /// The recursively smoothed presence probability.
    #[default]
    Smoothed,
    /// The raw power-to-minimum ratio, clamped to [0, 1].
    RawRatio,
}

impl FromStr for PresenceSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoothed" => Ok(PresenceSource::Smoothed),
            "raw" => Ok(PresenceSource::RawRatio),
            other => Err(Error::InvalidParameter(format!(
                "presence source must be `smoothed` or `raw`, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerParams {
    /// Non-speech noise smoothing.
    pub alpha: f64,
    /// Floor of the presence-dependent smoothing factor.
    pub alpha_s: f64,
    /// Presence-probability smoothing.
    pub alpha_b: f64,
    /// Look-back weight of the minimum tracker.
    pub beta: f64,
    /// Decay of the minimum tracker.
    pub gamma: f64,
    /// Noisy-power smoothing, at most [`XI_MAX`].
    pub xi: f64,
    /// Power-to-minimum ratio above which a bin counts as speech.
    pub delta: f64,
    pub soft_presence: bool,
    pub logistic_slope: f64,
    pub presence_source: PresenceSource,
    /// Floor applied to every denominator and to the noise estimate.
    pub floor: f64,
    /// Consecutive frames the running minimum must exceed the estimate before a
    /// pure-speech frame stops holding it.
    pub max_hold_frames: u32,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            alpha: 0.98,
            alpha_s: 0.95,
            alpha_b: 0.7,
            beta: 0.96,
            gamma: 0.99,
            xi: 0.7,
            delta: 5.0,
            soft_presence: false,
            logistic_slope: 1.0,
            presence_source: PresenceSource::Smoothed,
            floor: 1e-12,
            max_hold_frames: 47,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<()> {
        let unit = [
            ("alpha", self.alpha),
            ("alpha_s", self.alpha_s),
            ("alpha_b", self.alpha_b),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("xi", self.xi),
        ];
        for (name, v) in unit {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} must be in (0, 1)"
                )));
            }
        }
        if self.xi > XI_MAX {
            return Err(Error::InvalidParameter(format!(
                "xi = {} exceeds the cap {XI_MAX}",
                self.xi
            )));
        }
        if !(self.gamma > self.beta) {
            return Err(Error::InvalidParameter(format!(
                "gamma ({}) must exceed beta ({})",
                self.gamma, self.beta
            )));
        }
        if !(self.delta > 1.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "delta = {} must exceed 1",
                self.delta
            )));
        }
        if !(self.logistic_slope > 0.0 && self.logistic_slope.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "logistic slope = {} must be positive",
                self.logistic_slope
            )));
        }
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "floor = {} must be positive",
                self.floor
            )));
        }
        Ok(())
    }
}

/// Logistic function `1 / (1 + exp(-slope * x))`.
pub fn sigmoid(x: f64, slope: f64) -> f64 {
    let z = slope * x;
    // Branch on the sign so exp never overflows.
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-bin recursive state of one noise tracker.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackerState {
    params: TrackerParams,
    /// Current noise PSD estimate.
    pub noise_psd: Vec<f64>,
    /// Smoothed noisy power of the current frame.
    pub smoothed_power: Vec<f64>,
    /// Smoothed noisy power of the previous frame.
    pub prev_smoothed_power: Vec<f64>,
    pub running_min: Vec<f64>,
    pub presence_prob: Vec<f64>,
    /// Raw frame power over the running minimum.
    pub presence_ratio: Vec<f64>,
    /// Smoothed noisy power of the previous frame over the noise estimate.
    pub posterior: Vec<f64>,
    /// Presence-dependent smoothing factor used by the last weighted update.
    pub smoothing_factor: Vec<f64>,
    /// Consecutive frames in which the running minimum exceeded the noise estimate.
    pub above_min_run: Vec<u32>,
    frame_index: usize,
}

/// Initializes a tracker from the first frames' power spectra, assumed noise-only.
pub fn init_tracker(params: TrackerParams, initial_frames: &[Vec<f64>]) -> Result<TrackerState> {
    TrackerState::new(params, initial_frames)
}

impl TrackerState {
    pub fn new(params: TrackerParams, initial_frames: &[Vec<f64>]) -> Result<Self> {
        params.validate()?;
        let first = initial_frames.first().ok_or(Error::EmptyInit)?;
        let bins = first.len();
        if bins == 0 {
            return Err(Error::EmptyInit);
        }
        let mut mean = vec![0.0; bins];
        for frame in initial_frames {
            check_power(frame, bins)?;
            for (acc, p) in mean.iter_mut().zip(frame) {
                *acc += p;
            }
        }
        let m = initial_frames.len() as f64;
        mean.iter_mut().for_each(|v| *v /= m);
        Ok(Self {
            params,
            noise_psd: mean.iter().map(|&v| v.max(params.floor)).collect(),
            smoothed_power: mean.clone(),
            prev_smoothed_power: mean.clone(),
            running_min: mean,
            presence_prob: vec![0.0; bins],
            presence_ratio: vec![0.0; bins],
            posterior: vec![0.0; bins],
            smoothing_factor: vec![params.alpha_s; bins],
            above_min_run: vec![0; bins],
            frame_index: initial_frames.len(),
        })
    }

    pub fn params(&self) -> &TrackerParams {
        &self.params
    }

    pub fn num_bins(&self) -> usize {
        self.noise_psd.len()
    }

    /// Index of the next frame to be processed.
    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn mean_noise_psd(&self) -> f64 {
        mean(&self.noise_psd)
    }

    pub fn mean_presence_prob(&self) -> f64 {
        mean(&self.presence_prob)
    }

    /// `B(m) = ξ·B(m-1) + (1-ξ)·|X(m)|²`.
    pub fn smooth_noisy_power(&mut self, frame_power: &[f64]) {
        let xi = self.params.xi;
        std::mem::swap(&mut self.prev_smoothed_power, &mut self.smoothed_power);
        for ((b, &prev), &p) in self
            .smoothed_power
            .iter_mut()
            .zip(&self.prev_smoothed_power)
            .zip(frame_power)
        {
            *b = xi * prev + (1.0 - xi) * p;
        }
    }

    /// Minimum tracking of the smoothed power.
    ///
    /// While the minimum is at or below the smoothed power it rises slowly through
    /// `γ·Bmin + (1-γ)/(1-β)·(B(m) - β·B(m-1))`; otherwise it snaps down to `B(m)`. The
    /// result is kept inside `[0, B(m)]`.
    pub fn track_minimum(&mut self) {
        let TrackerParams { gamma, beta, .. } = self.params;
        let lift = (1.0 - gamma) / (1.0 - beta);
        for ((min, &b), &b_prev) in self
            .running_min
            .iter_mut()
            .zip(&self.smoothed_power)
            .zip(&self.prev_smoothed_power)
        {
            *min = if *min <= b {
                (gamma * *min + lift * (b - beta * b_prev)).clamp(0.0, b)
            } else {
                b
            };
        }
    }

    /// `|X(m)|² / Bmin(m)` with the minimum floored.
    pub fn speech_presence_ratio(&mut self, frame_power: &[f64]) {
        let floor = self.params.floor;
        for ((r, &p), &min) in self
            .presence_ratio
            .iter_mut()
            .zip(frame_power)
            .zip(&self.running_min)
        {
            *r = p / min.max(floor);
        }
    }

    /// Smooths the speech indicator (hard threshold or logistic) into a probability.
    pub fn update_presence_prob(&mut self) {
        let p = self.params;
        for (prob, &ratio) in self.presence_prob.iter_mut().zip(&self.presence_ratio) {
            let indicator = if p.soft_presence {
                sigmoid(ratio - p.delta, p.logistic_slope)
            } else if ratio > p.delta {
                1.0
            } else {
                0.0
            };
            *prob = p.alpha_b * *prob + (1.0 - p.alpha_b) * indicator;
        }
    }

    /// Previous smoothed power over the current noise estimate.
    pub fn posterior_snr(&mut self) {
        let floor = self.params.floor;
        for ((r, &b_prev), &n) in self
            .posterior
            .iter_mut()
            .zip(&self.prev_smoothed_power)
            .zip(&self.noise_psd)
        {
            *r = b_prev / n.max(floor);
        }
    }

    fn front_end(&mut self, frame_power: &[f64]) -> Result<()> {
        check_power(frame_power, self.num_bins())?;
        self.smooth_noisy_power(frame_power);
        self.track_minimum();
        self.speech_presence_ratio(frame_power);
        self.update_presence_prob();
        self.posterior_snr();
        let p = self.params;
        for ((f, &prob), &ratio) in self
            .smoothing_factor
            .iter_mut()
            .zip(&self.presence_prob)
            .zip(&self.presence_ratio)
        {
            let presence = match p.presence_source {
                PresenceSource::Smoothed => prob,
                PresenceSource::RawRatio => ratio.clamp(0.0, 1.0),
            };
            // Written as 1 - (1-α_s)(1-b) so full presence gives exactly 1.
            *f = 1.0 - (1.0 - p.alpha_s) * (1.0 - presence);
        }
        for ((run, &min), &n) in self
            .above_min_run
            .iter_mut()
            .zip(&self.running_min)
            .zip(&self.noise_psd)
        {
            *run = if min > n { run.saturating_add(1) } else { 0 };
        }
        Ok(())
    }

    fn weighted_update(&mut self, frame_power: &[f64]) {
        let floor = self.params.floor;
        for ((n, &f), &p) in self
            .noise_psd
            .iter_mut()
            .zip(&self.smoothing_factor)
            .zip(frame_power)
        {
            *n = (f * *n + (1.0 - f) * p).max(floor);
        }
    }

    /// One frame of the classified update.
    pub fn step_sr(&mut self, frame_power: &[f64], class: FrameClass) -> Result<()> {
        self.front_end(frame_power)?;
        match class {
            FrameClass::NonSpeech => {
                let TrackerParams { alpha, floor, .. } = self.params;
                for (n, &p) in self.noise_psd.iter_mut().zip(frame_power) {
                    *n = (alpha * *n + (1.0 - alpha) * p).max(floor);
                }
            }
            FrameClass::QuasiSpeech => self.weighted_update(frame_power),
            FrameClass::PureSpeech => {
                let limit = self.params.max_hold_frames;
                for ((n, &min), &run) in self
                    .noise_psd
                    .iter_mut()
                    .zip(&self.running_min)
                    .zip(&self.above_min_run)
                {
                    if run >= limit {
                        *n = min;
                    }
                }
            }
        }
        self.frame_index += 1;
        Ok(())
    }

    /// One frame of the unclassified, presence-weighted update.
    pub fn step_wat(&mut self, frame_power: &[f64]) -> Result<()> {
        self.front_end(frame_power)?;
        self.weighted_update(frame_power);
        self.frame_index += 1;
        Ok(())
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn check_power(frame_power: &[f64], bins: usize) -> Result<()> {
    if frame_power.len() != bins {
        return Err(Error::BinCountMismatch {
            left: frame_power.len(),
            right: bins,
        });
    }
    if let Some(p) = frame_power.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "frame power {p} is not a finite non-negative value"
        )));
    }
    Ok(())
}
