use std::path::{Path, PathBuf};

use serde::Deserialize;
use sr_enhance::audio::{mix, read_wav, seeded_offset, write_wav};
use sr_enhance::enhance::{enhance, EnhanceConfig, Method};
use sr_enhance::metrics::{build_report, Condition, MetricsReport};
use sr_enhance::stft::stft;
use sr_enhance::synth::{noise, speech_like, NoiseKind};
use sr_enhance::viz::{spectrogram_raster, write_pgm};
use sr_enhance::Error;

use crate::config::RunConfig;
use crate::error::CliError;

pub const SEED_ENV: &str = "SR_ENHANCE_SEED";

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Core(Error::Io(e)))
}

/// Mixes `noise` into `clean` at `snr_db`; the noise starts at a seeded offset when a seed
/// is given and at its first sample otherwise.
pub fn cmd_mix(
    clean_path: &Path,
    noise_path: &Path,
    snr_db: f64,
    out_path: &Path,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let clean = read_wav(clean_path)?;
    let noise = read_wav(noise_path)?;
    let offset = seed.map_or(0, |s| seeded_offset(noise.len(), clean.len(), s));
    let mixture = mix(&clean, &noise, snr_db, offset)?;
    write_wav(&mixture.noisy, out_path)?;
    Ok(())
}

pub fn cmd_enhance(
    in_path: &Path,
    out_path: &Path,
    cfg: &EnhanceConfig,
    trace_path: Option<&Path>,
) -> Result<(), CliError> {
    let noisy = read_wav(in_path)?;
    let out = enhance(&noisy, cfg)?;
    write_wav(&out.wave, out_path)?;
    if let Some(path) = trace_path {
        write_text(path, &out.trace_csv())?;
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    noise_type: String,
    snr_db: f64,
    clean: PathBuf,
    noise: PathBuf,
    #[serde(default)]
    seed: Option<u64>,
}

/// Reads an evaluation manifest: CSV with header `noise_type,snr_db,clean,noise` and an
/// optional `seed` column. Relative paths resolve against the manifest's directory.
/// `seed_override` replaces every row seed; `default_seed` fills rows without one.
pub fn read_manifest(
    path: &Path,
    seed_override: Option<u64>,
    default_seed: Option<u64>,
) -> Result<Vec<Condition>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut conditions = Vec::new();
    for (i, record) in reader.deserialize::<ManifestRow>().enumerate() {
        let row = i + 1;
        let r = record.map_err(|e| CliError::Manifest {
            row,
            message: e.to_string(),
        })?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let (clean, noise) = (resolve(r.clean), resolve(r.noise));
        for (kind, p) in [("clean", &clean), ("noise", &noise)] {
            if !p.exists() {
                return Err(CliError::ManifestInput {
                    row,
                    kind,
                    path: p.clone(),
                });
            }
        }
        conditions.push(Condition {
            noise_type: r.noise_type,
            snr_db: r.snr_db,
            clean,
            noise,
            seed: seed_override.or(r.seed).or(default_seed),
        });
    }
    Ok(conditions)
}

/// Seed override from the environment, if set.
pub fn seed_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::SeedEnv(v)),
        Err(_) => Ok(None),
    }
}

/// Evaluates both methods on every manifest condition and writes CSV and JSON reports.
pub fn cmd_eval(
    manifest_path: &Path,
    out_csv: &Path,
    out_json: &Path,
    cfg: &RunConfig,
    seed_override: Option<u64>,
) -> Result<MetricsReport, CliError> {
    let conditions = read_manifest(manifest_path, seed_override, cfg.seed)?;
    let report = build_report(
        &conditions,
        &[Method::Wat, Method::Sr],
        &cfg.enhance,
        &cfg.metrics,
    )?;
    write_text(out_csv, &report.to_csv()?)?;
    write_text(out_json, &report.to_json()?)?;
    Ok(report)
}

pub fn cmd_spectrogram(
    in_path: &Path,
    out_pgm: &Path,
    dyn_range_db: f64,
    cfg: &EnhanceConfig,
) -> Result<(), CliError> {
    if !(dyn_range_db > 0.0 && dyn_range_db.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "dynamic range {dyn_range_db} dB must be positive"
        ))
        .into());
    }
    let wave = read_wav(in_path)?;
    let mat = stft(&wave, &cfg.stft)?;
    write_pgm(&spectrogram_raster(&mat, dyn_range_db)?, out_pgm)?;
    Ok(())
}

/// Noise types and SNRs of the demo evaluation grid.
pub const DEMO_NOISES: [NoiseKind; 3] = [NoiseKind::Car, NoiseKind::Airport, NoiseKind::Train];
pub const DEMO_SNRS: [f64; 4] = [0.0, 5.0, 10.0, 15.0];

/// Writes a synthetic corpus (speech-like clean signal, one file per noise kind) and a
/// manifest covering [`DEMO_NOISES`] × [`DEMO_SNRS`]. Returns the manifest path.
pub fn cmd_synth(
    out_dir: &Path,
    duration_secs: f64,
    sample_rate_hz: u32,
    seed: u64,
) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Core(Error::Io(e)))?;
    write_wav(
        &speech_like(duration_secs, sample_rate_hz, seed)?,
        out_dir.join("clean.wav"),
    )?;
    let mut manifest = String::from("noise_type,snr_db,clean,noise,seed\n");
    for (i, kind) in NoiseKind::ALL.into_iter().enumerate() {
        // Noise files are longer than the clean signal so seeded offsets have room.
        let n = noise(
            kind,
            duration_secs + 1.0,
            sample_rate_hz,
            seed + 1 + i as u64,
        )?;
        let file = format!("{}.wav", kind.name().to_ascii_lowercase());
        write_wav(&n, out_dir.join(&file))?;
        if DEMO_NOISES.contains(&kind) {
            for snr in DEMO_SNRS {
                manifest.push_str(&format!("{},{snr},clean.wav,{file},{seed}\n", kind.name()));
            }
        }
    }
    let path = out_dir.join("manifest.csv");
    write_text(&path, &manifest)?;
    Ok(path)
}
