//! Objective quality measures and the evaluation report.
//!
//! Segmental SNR is the time-domain variant with per-frame clamping. LLR compares the LPC
//! envelope of the enhanced signal against the clean one under the clean autocorrelation,
//! so a perfect estimate scores 0 and degradation scores higher.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::audio::{mix, read_wav, seeded_offset, Waveform};
use crate::enhance::{enhance, EnhanceConfig, Method};
use crate::error::{Error, Result};

/// Frames with less clean energy than this are left out of both measures.
pub const SILENT_FRAME_ENERGY: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    pub seg_frame_ms: f64,
    pub seg_overlap: f64,
    pub seg_min_db: f64,
    pub seg_max_db: f64,
    /// LPC order; `None` picks 10 at 8 kHz and `ceil(rate / 1000) + 2` otherwise.
    pub lpc_order: Option<usize>,
    /// Fraction of per-frame LLR values (lowest first) kept for the mean.
    pub llr_trim: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            seg_frame_ms: 30.0,
            seg_overlap: 0.75,
            seg_min_db: -10.0,
            seg_max_db: 35.0,
            lpc_order: None,
            llr_trim: 0.95,
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.seg_frame_ms > 0.0 && self.seg_frame_ms.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "seg_frame_ms = {}",
                self.seg_frame_ms
            )));
        }
        if !(self.seg_overlap > 0.0 && self.seg_overlap < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "seg_overlap = {} must be in (0, 1)",
                self.seg_overlap
            )));
        }
        if !(self.seg_min_db < self.seg_max_db) {
            return Err(Error::InvalidParameter(format!(
                "seg_min_db ({}) must be below seg_max_db ({})",
                self.seg_min_db, self.seg_max_db
            )));
        }
        if matches!(self.lpc_order, Some(o) if o < 2) {
            return Err(Error::InvalidParameter(
                "lpc_order must be at least 2".into(),
            ));
        }
        if !(self.llr_trim > 0.0 && self.llr_trim <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "llr_trim = {} must be in (0, 1]",
                self.llr_trim
            )));
        }
        Ok(())
    }

    pub fn lpc_order_for(&self, sample_rate_hz: u32) -> usize {
        self.lpc_order.unwrap_or(if sample_rate_hz == 8000 {
            10
        } else {
            (sample_rate_hz as f64 / 1000.0).ceil() as usize + 2
        })
    }

    /// (frame length, hop) in samples.
    pub fn framing(&self, sample_rate_hz: u32) -> (usize, usize) {
        let len = ((self.seg_frame_ms * sample_rate_hz as f64 / 1000.0).round() as usize).max(1);
        let hop = ((len as f64 * (1.0 - self.seg_overlap)).round() as usize).max(1);
        (len, hop)
    }
}

fn check_pair(clean: &Waveform, enhanced: &Waveform) -> Result<()> {
    if clean.sample_rate_hz() != enhanced.sample_rate_hz() {
        return Err(Error::SampleRateMismatch {
            left: clean.sample_rate_hz(),
            right: enhanced.sample_rate_hz(),
        });
    }
    if clean.len() != enhanced.len() {
        return Err(Error::LengthMismatch {
            left: clean.len(),
            right: enhanced.len(),
        });
    }
    Ok(())
}

fn frame_starts(len: usize, frame: usize, hop: usize) -> impl Iterator<Item = usize> {
    let count = if len < frame {
        0
    } else {
        (len - frame) / hop + 1
    };
    (0..count).map(move |i| i * hop)
}

/// Mean of clamped per-frame SNRs over frames with non-negligible clean energy.
pub fn segmental_snr(clean: &Waveform, enhanced: &Waveform, p: &MetricParams) -> Result<f64> {
    p.validate()?;
    check_pair(clean, enhanced)?;
    let (frame, hop) = p.framing(clean.sample_rate_hz());
    let (s, e) = (clean.samples(), enhanced.samples());
    let mut total = 0.0;
    let mut count = 0usize;
    for start in frame_starts(s.len(), frame, hop) {
        let range = start..start + frame;
        let signal: f64 = s[range.clone()].iter().map(|v| v * v).sum();
        if signal < SILENT_FRAME_ENERGY {
            continue;
        }
        let residual: f64 = s[range.clone()]
            .iter()
            .zip(&e[range])
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let snr = if residual > 0.0 {
            10.0 * (signal / residual).log10()
        } else {
            p.seg_max_db
        };
        total += snr.clamp(p.seg_min_db, p.seg_max_db);
        count += 1;
    }
    if count == 0 {
        return Err(Error::AllFramesSilent);
    }
    Ok(total / count as f64)
}

/// LPC polynomial (`a[0] == 1`) and the autocorrelation it was solved from.
#[derive(Debug, Clone, PartialEq)]
pub struct Lpc {
    pub a: Vec<f64>,
    pub autocorr: Vec<f64>,
    pub prediction_error: f64,
}

pub fn autocorrelation(frame: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|lag| {
            frame
                .iter()
                .zip(frame.iter().skip(lag))
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// Levinson–Durbin solution of the autocorrelation normal equations.
pub fn lpc_coefficients(frame: &[f64], order: usize) -> Result<Lpc> {
    if order == 0 || frame.len() <= order {
        return Err(Error::InvalidParameter(format!(
            "LPC order {order} needs a frame longer than the order (got {})",
            frame.len()
        )));
    }
    let r = autocorrelation(frame, order);
    if !(r[0] > 0.0) {
        return Err(Error::SingularAutocorrelation);
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    let mut prev = a.clone();
    for i in 1..=order {
        let acc: f64 = (1..i).map(|j| prev[j] * r[i - j]).sum::<f64>() + r[i];
        let k = -acc / err;
        if !k.is_finite() || k.abs() >= 1.0 {
            return Err(Error::SingularAutocorrelation);
        }
        a[i] = k;
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        err *= 1.0 - k * k;
        if !(err > 0.0) {
            return Err(Error::SingularAutocorrelation);
        }
        prev.copy_from_slice(&a);
    }
    Ok(Lpc {
        a,
        autocorr: r,
        prediction_error: err,
    })
}

/// `a · R · aᵀ` with `R` the symmetric Toeplitz matrix built from `r`.
pub fn toeplitz_form(a: &[f64], r: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (i, ai) in a.iter().enumerate() {
        for (j, aj) in a.iter().enumerate() {
            sum += ai * aj * r[i.abs_diff(j)];
        }
    }
    sum
}

/// Hanning window without zero end points, `0.5·(1 - cos(2πn/(N+1)))` for n = 1..=N.
pub fn hanning(len: usize) -> Vec<f64> {
    (1..=len)
        .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / (len + 1) as f64).cos()))
        .collect()
}

/// Per-frame log-likelihood ratios; frames where either LPC fit fails are skipped.
pub fn llr_frames(clean: &Waveform, enhanced: &Waveform, p: &MetricParams) -> Result<Vec<f64>> {
    p.validate()?;
    check_pair(clean, enhanced)?;
    let rate = clean.sample_rate_hz();
    let (frame, hop) = p.framing(rate);
    let order = p.lpc_order_for(rate);
    let window = hanning(frame);
    let (s, e) = (clean.samples(), enhanced.samples());
    let mut values = Vec::new();
    let mut cw = vec![0.0; frame];
    let mut ew = vec![0.0; frame];
    for start in frame_starts(s.len(), frame, hop) {
        let range = start..start + frame;
        if s[range.clone()].iter().map(|v| v * v).sum::<f64>() < SILENT_FRAME_ENERGY {
            continue;
        }
        for (i, w) in window.iter().enumerate() {
            cw[i] = s[start + i] * w;
            ew[i] = e[start + i] * w;
        }
        let (Ok(c), Ok(en)) = (lpc_coefficients(&cw, order), lpc_coefficients(&ew, order)) else {
            continue;
        };
        let num = toeplitz_form(&en.a, &c.autocorr);
        let den = toeplitz_form(&c.a, &c.autocorr);
        values.push((num / den).ln());
    }
    Ok(values)
}

/// Trimmed mean of per-frame LLR values (lowest `llr_trim` fraction).
pub fn llr(clean: &Waveform, enhanced: &Waveform, p: &MetricParams) -> Result<f64> {
    let mut values = llr_frames(clean, enhanced, p)?;
    if values.is_empty() {
        return Err(Error::AllFramesSilent);
    }
    values.sort_by(f64::total_cmp);
    let keep = ((values.len() as f64 * p.llr_trim).round() as usize).clamp(1, values.len());
    Ok(values[..keep].iter().sum::<f64>() / keep as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub noise_type: String,
    pub snr_db: f64,
    pub method: Method,
    pub llr: f64,
    pub seg_snr: f64,
}

/// Evaluation rows, one per (noise type, SNR, method).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<ReportRow>,
}

pub const CSV_HEADER: &str = "noise_type,snr_db,method,llr,seg_snr";

/// Table view: one line per (noise type, SNR) with both methods side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub noise_type: String,
    pub snr_db: f64,
    pub wat_llr: Option<f64>,
    pub sr_llr: Option<f64>,
    pub wat_seg_snr: Option<f64>,
    pub sr_seg_snr: Option<f64>,
}

impl MetricsReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER.split(','))?;
        for r in &self.rows {
            w.write_record([
                r.noise_type.clone(),
                format!("{:.6}", r.snr_db),
                r.method.to_string(),
                format!("{:.6}", r.llr),
                format!("{:.6}", r.seg_snr),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rows)?)
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers()?.iter().collect::<Vec<_>>().join(",");
        if headers != CSV_HEADER {
            return Err(Error::InvalidParameter(format!(
                "unexpected report header `{headers}`"
            )));
        }
        let rows = reader
            .deserialize()
            .collect::<std::result::Result<Vec<ReportRow>, _>>()?;
        Ok(Self { rows })
    }

    /// Rows grouped by (noise type, SNR) in first-appearance order.
    pub fn comparison(&self) -> Vec<ComparisonRow> {
        let mut out: Vec<ComparisonRow> = Vec::new();
        let mut index: HashMap<(String, u64), usize> = HashMap::new();
        for r in &self.rows {
            let key = (r.noise_type.clone(), r.snr_db.to_bits());
            let i = *index.entry(key).or_insert_with(|| {
                out.push(ComparisonRow {
                    noise_type: r.noise_type.clone(),
                    snr_db: r.snr_db,
                    wat_llr: None,
                    sr_llr: None,
                    wat_seg_snr: None,
                    sr_seg_snr: None,
                });
                out.len() - 1
            });
            let row = &mut out[i];
            match r.method {
                Method::Wat => {
                    row.wat_llr = Some(r.llr);
                    row.wat_seg_snr = Some(r.seg_snr);
                }
                Method::Sr => {
                    row.sr_llr = Some(r.llr);
                    row.sr_seg_snr = Some(r.seg_snr);
                }
            }
        }
        out
    }

    /// Fixed-width text table: noise, SNR, WAT-LLR, SR-LLR, WAT-segSNR, SR-segSNR.
    pub fn to_table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
        let mut out = format!(
            "{:<10} {:>7} {:>12} {:>12} {:>12} {:>12}\n",
            "noise", "snr_db", "WAT-LLR", "SR-LLR", "WAT-segSNR", "SR-segSNR"
        );
        for r in self.comparison() {
            out.push_str(&format!(
                "{:<10} {:>7} {:>12} {:>12} {:>12} {:>12}\n",
                r.noise_type,
                format!("{}", r.snr_db),
                cell(r.wat_llr),
                cell(r.sr_llr),
                cell(r.wat_seg_snr),
                cell(r.sr_seg_snr)
            ));
        }
        out
    }
}

/// Published LLR / segmental SNR figures for car, airport and train noise at 0–15 dB,
/// kept verbatim (including two entries with doubtful signs) for format regression.
pub const REFERENCE_TABLE_CSV: &str = include_str!("../data/reference_table.csv");

pub fn reference_table() -> Result<MetricsReport> {
    MetricsReport::from_csv(REFERENCE_TABLE_CSV)
}

/// One evaluation condition: a clean/noise pair mixed at a given SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub noise_type: String,
    pub snr_db: f64,
    pub clean: PathBuf,
    pub noise: PathBuf,
    /// Seed for a random noise start offset; `None` reads noise from its start.
    pub seed: Option<u64>,
}

impl Condition {
    pub fn label(&self) -> String {
        format!("{} @ {} dB", self.noise_type, self.snr_db)
    }
}

/// Mixes, enhances with every method and scores one clean/noise pair.
pub fn evaluate_pair(
    clean: &Waveform,
    noise: &Waveform,
    snr_db: f64,
    offset: usize,
    methods: &[Method],
    cfg: &EnhanceConfig,
    mp: &MetricParams,
) -> Result<Vec<(Method, f64, f64)>> {
    let mixture = mix(clean, noise, snr_db, offset)?;
    methods
        .iter()
        .map(|&method| {
            let cfg = EnhanceConfig { method, ..*cfg };
            let out = enhance(&mixture.noisy, &cfg)?.wave.fit_to_len(clean.len());
            Ok((
                method,
                llr(clean, &out, mp)?,
                segmental_snr(clean, &out, mp)?,
            ))
        })
        .collect()
}

fn evaluate_condition(
    c: &Condition,
    methods: &[Method],
    cfg: &EnhanceConfig,
    mp: &MetricParams,
) -> Result<Vec<ReportRow>> {
    let clean = read_wav(&c.clean)?;
    let noise = read_wav(&c.noise)?;
    let offset = c
        .seed
        .map_or(0, |seed| seeded_offset(noise.len(), clean.len(), seed));
    Ok(
        evaluate_pair(&clean, &noise, c.snr_db, offset, methods, cfg, mp)?
            .into_iter()
            .map(|(method, llr, seg_snr)| ReportRow {
                noise_type: c.noise_type.clone(),
                snr_db: c.snr_db,
                method,
                llr,
                seg_snr,
            })
            .collect(),
    )
}

/// Evaluates every condition with every method. Conditions run on worker threads; rows
/// come back in condition order, methods in the order given.
pub fn build_report(
    conditions: &[Condition],
    methods: &[Method],
    cfg: &EnhanceConfig,
    mp: &MetricParams,
) -> Result<MetricsReport> {
    cfg.validate()?;
    mp.validate()?;
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(conditions.len().max(1));
    let chunk = conditions.len().div_ceil(workers).max(1);
    let results: Vec<Result<Vec<ReportRow>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = conditions
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|c| {
                            evaluate_condition(c, methods, cfg, mp)
                                .map_err(|e| e.in_condition(c.label()))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("evaluation worker panicked"))
            .collect()
    });
    let mut rows = Vec::with_capacity(conditions.len() * methods.len());
    for r in results {
        rows.extend(r?);
    }
    Ok(MetricsReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(samples: Vec<f64>) -> Waveform {
        Waveform::new(samples, 8000).unwrap()
    }

    fn chirp(len: usize) -> Vec<f64> {
        (0..len)
            .map(|n| {
                let t = n as f64 / 8000.0;
                0.3 * (2.0 * PI * (200.0 + 300.0 * t) * t).sin()
                    + 0.1 * (2.0 * PI * 1300.0 * t).sin()
            })
            .collect()
    }

    #[test]
    fn seg_snr_identity_and_zero() {
        let p = MetricParams::default();
        let c = wave(chirp(4000));
        assert_eq!(segmental_snr(&c, &c, &p).unwrap(), 35.0);
        let z = wave(vec![0.0; 4000]);
        assert!(segmental_snr(&c, &z, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn seg_snr_errors() {
        let p = MetricParams::default();
        let c = wave(chirp(4000));
        assert!(matches!(
            segmental_snr(&c, &wave(chirp(3999)), &p),
            Err(Error::LengthMismatch { .. })
        ));
        let z = wave(vec![0.0; 4000]);
        assert!(matches!(
            segmental_snr(&z, &c, &p),
            Err(Error::AllFramesSilent)
        ));
    }

    #[test]
    fn silent_frames_are_skipped() {
        let p = MetricParams::default();
        let mut s = chirp(4000);
        s[..2000].iter_mut().for_each(|v| *v = 0.0);
        let c = wave(s);
        // The enhanced signal is garbage only where the clean one is silent.
        let mut e = c.samples().to_vec();
        e[..1000].iter_mut().for_each(|v| *v = 1.0);
        assert_eq!(segmental_snr(&c, &wave(e), &p).unwrap(), 35.0);
    }

    #[test]
    fn framing_at_8k() {
        let p = MetricParams::default();
        assert_eq!(p.framing(8000), (240, 60));
        assert_eq!(p.lpc_order_for(8000), 10);
        assert_eq!(p.lpc_order_for(16000), 18);
        assert_eq!(p.lpc_order_for(11025), 14);
    }

    #[test]
    fn lpc_first_order() {
        // x = 1, 0.5, 0.25, ... has r1/r0 close to 0.5.
        let frame: Vec<f64> = (0..64).map(|n| 0.5f64.powi(n)).collect();
        let lpc = lpc_coefficients(&frame, 1).unwrap();
        assert_eq!(lpc.a[0], 1.0);
        assert!((lpc.a[1] + lpc.autocorr[1] / lpc.autocorr[0]).abs() < 1e-15);
    }

    #[test]
    fn lpc_errors() {
        assert!(matches!(
            lpc_coefficients(&[0.0; 32], 10),
            Err(Error::SingularAutocorrelation)
        ));
        assert!(lpc_coefficients(&[1.0; 5], 10).is_err());
    }

    #[test]
    fn llr_identities() {
        let p = MetricParams::default();
        let c = wave(chirp(8000));
        assert!(llr(&c, &c, &p).unwrap().abs() <= 1e-9);
        for g in [0.5, 2.0] {
            let s = wave(c.samples().iter().map(|v| v * g).collect());
            assert!(llr(&c, &s, &p).unwrap().abs() <= 1e-9);
        }
    }

    #[test]
    fn llr_all_silent() {
        let p = MetricParams::default();
        let z = wave(vec![0.0; 4000]);
        assert!(matches!(llr(&z, &z, &p), Err(Error::AllFramesSilent)));
    }

    #[test]
    fn hanning_shape() {
        let w = hanning(3);
        assert!(
            (w[0] - 0.5).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15
        );
    }

    #[test]
    fn csv_format_and_parse() {
        let report = MetricsReport {
            rows: vec![ReportRow {
                noise_type: "CAR".into(),
                snr_db: 5.0,
                method: Method::Sr,
                llr: 1.5,
                seg_snr: -3.25,
            }],
        };
        let csv = report.to_csv().unwrap();
        assert_eq!(
            csv,
            "noise_type,snr_db,method,llr,seg_snr\nCAR,5.000000,SR,1.500000,-3.250000\n"
        );
        assert_eq!(MetricsReport::from_csv(&csv).unwrap(), report);
        let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(json[0]["method"], "SR");
        assert_eq!(json[0]["seg_snr"], -3.25);
    }

    #[test]
    fn empty_report() {
        let empty = MetricsReport::default();
        assert_eq!(
            empty.to_csv().unwrap(),
            "noise_type,snr_db,method,llr,seg_snr\n"
        );
        assert_eq!(
            MetricsReport::from_csv(&empty.to_csv().unwrap()).unwrap(),
            empty
        );
        assert_eq!(empty.to_json().unwrap(), "[]");
        let r = build_report(
            &[],
            &[Method::Wat, Method::Sr],
            &EnhanceConfig::default(),
            &MetricParams::default(),
        )
        .unwrap();
        assert!(r.rows.is_empty());
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(MetricsReport::from_csv("a,b\n1,2\n").is_err());
    }

    #[test]
    fn reference_table_rows() {
        let t = reference_table().unwrap();
        assert_eq!(t.rows.len(), 24);
        let first = &t.rows[0];
        assert_eq!(
            (first.noise_type.as_str(), first.snr_db, first.method),
            ("CAR", 0.0, Method::Wat)
        );
        assert_eq!(first.llr, 1.687827);
        assert_eq!(t.rows[1].llr, 1.500914);
        let cmp = t.comparison();
        assert_eq!(cmp.len(), 12);
        assert!(cmp.iter().all(|r| r.sr_llr.unwrap() <= r.wat_llr.unwrap()));
    }

    #[test]
    fn metric_param_validation() {
        let d = MetricParams::default();
        assert!(d.validate().is_ok());
        assert!(MetricParams {
            seg_overlap: 1.0,
            ..d
        }
        .validate()
        .is_err());
        assert!(MetricParams {
            seg_min_db: 40.0,
            ..d
        }
        .validate()
        .is_err());
        assert!(MetricParams {
            lpc_order: Some(1),
            ..d
        }
        .validate()
        .is_err());
        assert!(MetricParams { llr_trim: 0.0, ..d }.validate().is_err());
    }
}
