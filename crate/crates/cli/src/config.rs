//! Flat `key = value` run configuration.
//!
//! One setting per line, `#` starts a comment, blank lines are ignored. Every key is
//! optional; anything not given keeps its default. Unknown keys, repeated keys and values
//! that fail validation are rejected before any processing starts.

use std::path::Path;

use sr_enhance::enhance::{EnhanceConfig, Method};
use sr_enhance::metrics::MetricParams;
use sr_enhance::tracker::PresenceSource;
use sr_enhance::viz::DEFAULT_DYN_RANGE_DB;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub enhance: EnhanceConfig,
    pub metrics: MetricParams,
    /// Noise offset seed for manifest rows that do not carry their own.
    pub seed: Option<u64>,
    pub dyn_range_db: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            enhance: EnhanceConfig::default(),
            metrics: MetricParams::default(),
            seed: None,
            dyn_range_db: DEFAULT_DYN_RANGE_DB,
        }
    }
}

pub const KEYS: &[&str] = &[
    "method",
    "dd_alpha",
    "gain_floor",
    "init_frames",
    "frame_len",
    "hop",
    "fft_size",
    "window_coeff",
    "theta_low",
    "theta_high",
    "alpha",
    "alpha_s",
    "alpha_b",
    "beta",
    "gamma",
    "xi",
    "delta",
    "soft_presence",
    "logistic_slope",
    "presence_source",
    "noise_floor",
    "max_hold_frames",
    "seg_frame_ms",
    "seg_overlap",
    "seg_min_db",
    "seg_max_db",
    "lpc_order",
    "llr_trim",
    "seed",
    "dyn_range_db",
];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{value}` is not a valid value for `{key}`"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |message: String| CliError::Config {
                path: None,
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key) {
                return Err(err(format!("`{key}` is set twice")));
            }
            cfg.set(key, value).map_err(err)?;
            seen.push(key);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        Self::parse(&text).map_err(|e| e.in_file(path))
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let e = &mut self.enhance;
        let t = &mut e.tracker;
        let m = &mut self.metrics;
        match key {
            "method" => {
                e.method = value
                    .parse()
                    .map_err(|_| format!("unknown method `{value}`"))?
            }
            "dd_alpha" => e.dd_alpha = parse_value(key, value)?,
            "gain_floor" => e.gain_floor = parse_value(key, value)?,
            "init_frames" => e.init_frames = parse_value(key, value)?,
            "frame_len" => e.stft.frame_len = parse_value(key, value)?,
            "hop" => e.stft.hop = parse_value(key, value)?,
            "fft_size" => e.stft.fft_size = parse_value(key, value)?,
            "window_coeff" => e.stft.window_coeff = parse_value(key, value)?,
            "theta_low" => e.thresholds.low = parse_value(key, value)?,
            "theta_high" => e.thresholds.high = parse_value(key, value)?,
            "alpha" => t.alpha = parse_value(key, value)?,
            "alpha_s" => t.alpha_s = parse_value(key, value)?,
            "alpha_b" => t.alpha_b = parse_value(key, value)?,
            "beta" => t.beta = parse_value(key, value)?,
            "gamma" => t.gamma = parse_value(key, value)?,
            "xi" => t.xi = parse_value(key, value)?,
            "delta" => t.delta = parse_value(key, value)?,
            "soft_presence" => t.soft_presence = parse_value(key, value)?,
            "logistic_slope" => t.logistic_slope = parse_value(key, value)?,
            "presence_source" => {
                t.presence_source = value.parse::<PresenceSource>().map_err(|e| e.to_string())?
            }
            "noise_floor" => t.floor = parse_value(key, value)?,
            "max_hold_frames" => t.max_hold_frames = parse_value(key, value)?,
            "seg_frame_ms" => m.seg_frame_ms = parse_value(key, value)?,
            "seg_overlap" => m.seg_overlap = parse_value(key, value)?,
            "seg_min_db" => m.seg_min_db = parse_value(key, value)?,
            "seg_max_db" => m.seg_max_db = parse_value(key, value)?,
            "lpc_order" => m.lpc_order = Some(parse_value(key, value)?),
            "llr_trim" => m.llr_trim = parse_value(key, value)?,
            "seed" => self.seed = Some(parse_value(key, value)?),
            "dyn_range_db" => self.dyn_range_db = parse_value(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.enhance.validate()?;
        self.metrics.validate()?;
        if !(self.dyn_range_db > 0.0 && self.dyn_range_db.is_finite()) {
            return Err(sr_enhance::Error::InvalidParameter(format!(
                "dyn_range_db = {} must be positive",
                self.dyn_range_db
            ))
            .into());
        }
        Ok(())
    }

    /// Text form that [`RunConfig::parse`] reads back to the same value.
    pub fn to_text(&self) -> String {
        let e = &self.enhance;
        let t = &e.tracker;
        let m = &self.metrics;
        let presence = match t.presence_source {
            PresenceSource::Smoothed => "smoothed",
            PresenceSource::RawRatio => "raw",
        };
        let mut lines = vec![
            "# enhancement".to_string(),
            format!("method = {}", method_key(e.method)),
            format!("dd_alpha = {:?}", e.dd_alpha),
            format!("gain_floor = {:?}", e.gain_floor),
            format!("init_frames = {}", e.init_frames),
            format!("frame_len = {}", e.stft.frame_len),
            format!("hop = {}", e.stft.hop),
            format!("fft_size = {}", e.stft.fft_size),
            format!("window_coeff = {:?}", e.stft.window_coeff),
            "# classifier".to_string(),
            format!("theta_low = {:?}", e.thresholds.low),
            format!("theta_high = {:?}", e.thresholds.high),
            "# noise tracker".to_string(),
            format!("alpha = {:?}", t.alpha),
            format!("alpha_s = {:?}", t.alpha_s),
            format!("alpha_b = {:?}", t.alpha_b),
            format!("beta = {:?}", t.beta),
            format!("gamma = {:?}", t.gamma),
            format!("xi = {:?}", t.xi),
            format!("delta = {:?}", t.delta),
            format!("soft_presence = {}", t.soft_presence),
            format!("logistic_slope = {:?}", t.logistic_slope),
            format!("presence_source = {presence}"),
            format!("noise_floor = {:?}", t.floor),
            format!("max_hold_frames = {}", t.max_hold_frames),
            "# metrics".to_string(),
            format!("seg_frame_ms = {:?}", m.seg_frame_ms),
            format!("seg_overlap = {:?}", m.seg_overlap),
            format!("seg_min_db = {:?}", m.seg_min_db),
            format!("seg_max_db = {:?}", m.seg_max_db),
        ];
        if let Some(order) = m.lpc_order {
            lines.push(format!("lpc_order = {order}"));
        }
        lines.push(format!("llr_trim = {:?}", m.llr_trim));
        lines.push("# misc".to_string());
        if let Some(seed) = self.seed {
            lines.push(format!("seed = {seed}"));
        }
        lines.push(format!("dyn_range_db = {:?}", self.dyn_range_db));
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}

fn method_key(m: Method) -> &'static str {
    match m {
        Method::Sr => "sr",
        Method::Wat => "wat",
    }
}
