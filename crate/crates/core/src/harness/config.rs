//! Run configuration and its flat TOML file form.
//!
//! ```toml
//! frame_size = 1024
//! channel_memory = 9
//! cyclic_prefix = 9
//! decoding_delay = 30
//! frames = 10000
//! receive_antennas = 4
//! fade_variance = 0.5
//! generator = "[1, (1+D^2)/(1+D+D^2)]"
//! ```
//!
//! Optional keys: `snr_db`, `detectors`, `seed`, `workers`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::SystemParams;
use crate::coding::EncoderSpec;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub snr_points_db: Vec<f64>,
    pub detectors: Vec<String>,
    pub frames_per_point: usize,
    pub master_seed: u64,
    /// Worker threads; 0 lets the pool pick.
    pub workers: usize,
    /// Stop a detector once it has 500 errors over at least 10% of the frames.
    pub early_stop: bool,
    /// When false the `seconds` column is written as 0 so output is reproducible byte for byte.
    pub record_wall_time: bool,
    pub csv_path: Option<PathBuf>,
    pub svg_path: Option<PathBuf>,
    pub overlay_reference: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            snr_points_db: vec![0.0, 4.0, 8.0, 12.0, 17.0],
            detectors: ["coherent", "p1", "p2", "p3"].map(String::from).to_vec(),
            frames_per_point: 10_000,
            master_seed: 42,
            workers: 0,
            early_stop: false,
            record_wall_time: true,
            csv_path: None,
            svg_path: None,
            overlay_reference: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.frames_per_point == 0 {
            return Err(Error::Config("frames per point must be at least 1".into()));
        }
        if self.snr_points_db.is_empty() {
            return Err(Error::Config("no SNR points".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("no detectors selected".into()));
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = RunConfig::default();
        let p = &mut cfg.params;
        if let Some(v) = file.frame_size {
            p.fft_size = v;
        }
        if let Some(v) = file.channel_memory {
            p.channel_taps = v + 1;
        }
        if let Some(v) = file.cyclic_prefix {
            p.cyclic_prefix = v;
        }
        if let Some(v) = file.decoding_delay {
            p.decoding_delay = v;
        }
        if let Some(v) = file.receive_antennas {
            p.receive_antennas = v;
        }
        if let Some(v) = file.fade_variance {
            p.fade_variance = v;
        }
        if let Some(g) = file.generator {
            p.encoder = parse_generator(&g)?;
        }
        if let Some(v) = file.frames {
            cfg.frames_per_point = v;
        }
        if let Some(v) = file.snr_db {
            cfg.snr_points_db = v;
        }
        if let Some(v) = file.detectors {
            cfg.detectors = v;
        }
        if let Some(v) = file.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = file.workers {
            cfg.workers = v;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    frame_size: Option<usize>,
    channel_memory: Option<usize>,
    cyclic_prefix: Option<usize>,
    decoding_delay: Option<usize>,
    frames: Option<usize>,
    receive_antennas: Option<usize>,
    fade_variance: Option<f64>,
    generator: Option<String>,
    snr_db: Option<Vec<f64>>,
    detectors: Option<Vec<String>>,
    seed: Option<u64>,
    workers: Option<usize>,
}

/// Parses `"1+D+D^2"` into a coefficient bitmask.
pub fn parse_polynomial(text: &str) -> Result<u32> {
    let bad = || Error::Config(format!("cannot parse polynomial `{text}`"));
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace() && *c != '(' && *c != ')').collect();
    let mut mask = 0u32;
    for term in cleaned.split('+') {
        let power = match term {
            "1" => 0,
            "D" => 1,
            t => t.strip_prefix("D^").and_then(|e| e.parse::<u32>().ok()).ok_or_else(bad)?,
        };
        if power > 16 {
            return Err(bad());
        }
        mask ^= 1 << power;
    }
    Ok(mask)
}

/// Parses `"[1, ff(D)/fb(D)]"`.
pub fn parse_generator(text: &str) -> Result<EncoderSpec> {
    let bad = || Error::Config(format!("cannot parse generator `{text}`"));
    let inner = text.trim().trim_start_matches('[').trim_end_matches(']');
    let (first, second) = inner.split_once(',').ok_or_else(bad)?;
    if first.trim() != "1" {
        return Err(bad());
    }
    let (num, den) = second.split_once('/').ok_or_else(bad)?;
    Ok(EncoderSpec::new(parse_polynomial(num)?, parse_polynomial(den)?))
}
