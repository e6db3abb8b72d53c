//! Flat key-value experiment configuration.
//!
//! One experiment per file; `key = value` lines, `#` comments. Lists are
//! comma separated. Unknown keys are rejected so typos fail loudly.

use std::collections::BTreeMap;
use std::fmt;

/// Which experiment a config describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    BerSweep,
    SinrSweep,
    SearchSweep,
    SyncDemo,
}

/// Channel state information available to receivers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiKind {
    Perfect,
    Estimated,
}

/// Eavesdropper strategy selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EveKind {
    ZeroChirp,
    IntervalSearch { delta_e: f64 },
}

/// Parsed experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    // Waveform
    pub n: usize,
    pub n_cp: usize,
    /// `None` selects the full-diversity first chirp.
    pub c1: Option<f64>,
    pub qam_order: usize,
    pub codebook_m: usize,
    pub c2_max: f64,
    // Channel
    pub delay_taps: Vec<usize>,
    pub alpha_max: f64,
    // Receivers
    pub csi: CsiKind,
    pub snr_p_db: f64,
    pub eve: EveKind,
    // Frame layout (guarded modes and the sync demo)
    pub guard_width: usize,
    pub header_symbols: usize,
    pub sync_symbols: usize,
    pub total_symbols: usize,
    pub spread_factor: usize,
    pub threshold_frac: f64,
    // Sweeps
    pub snr_db: Vec<f64>,
    pub delta_e_list: Vec<f64>,
    pub search_snr_db: f64,
    pub c2_max_list: Vec<f64>,
    pub gamma_eve_db: f64,
    pub analysis_m: usize,
    // Monte-Carlo controls
    pub min_frames: usize,
    pub max_frames: usize,
    pub target_errors: usize,
    pub frames: usize,
    pub sync_snr_db: f64,
    pub seed: u64,
    pub out: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::BerSweep,
            n: 1024,
            n_cp: 17,
            c1: None,
            qam_order: 4,
            codebook_m: 1024,
            c2_max: 4.88e-6,
            delay_taps: vec![0, 1, 2],
            alpha_max: 2.0,
            csi: CsiKind::Perfect,
            snr_p_db: 30.0,
            eve: EveKind::ZeroChirp,
            guard_width: 100,
            header_symbols: 4,
            sync_symbols: 8,
            total_symbols: 256,
            spread_factor: 15,
            threshold_frac: 0.7,
            snr_db: vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0, 25.0],
            delta_e_list: vec![9.77e-8, 1.95e-7, 3.9e-7, 7.8e-7, 1.56e-6, 3.12e-6],
            search_snr_db: 25.0,
            c2_max_list: vec![1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 0.5],
            gamma_eve_db: 25.0,
            analysis_m: 100_000,
            min_frames: 1,
            max_frames: 1000,
            target_errors: 100,
            frames: 100,
            sync_snr_db: 10.0,
            seed: 1,
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn parse_list<T: std::str::FromStr>(v: &str, key: &str) -> Result<Vec<T>, ConfigError> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| ConfigError(format!("bad value {s:?} in list {key}")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(v: &str, key: &str) -> Result<T, ConfigError> {
    v.trim()
        .parse::<T>()
        .map_err(|_| ConfigError(format!("bad value {v:?} for {key}")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "line {}: expected `key = value`, got {raw:?}",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if seen.insert(key.to_string(), ()).is_some() {
                return Err(ConfigError(format!("duplicate key {key}")));
            }
            cfg.apply(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "experiment" => {
                self.experiment = match value {
                    "ber-sweep" => ExperimentKind::BerSweep,
                    "sinr-sweep" => ExperimentKind::SinrSweep,
                    "search-sweep" => ExperimentKind::SearchSweep,
                    "sync-demo" => ExperimentKind::SyncDemo,
                    other => {
                        return Err(ConfigError(format!("unknown experiment {other:?}")))
                    }
                }
            }
            "n" => self.n = parse_one(value, key)?,
            "n_cp" => self.n_cp = parse_one(value, key)?,
            "c1" => {
                self.c1 = if value == "auto" {
                    None
                } else {
                    Some(parse_one(value, key)?)
                }
            }
            "qam" => self.qam_order = parse_one(value, key)?,
            "codebook_m" => self.codebook_m = parse_one(value, key)?,
            "c2_max" => self.c2_max = parse_one(value, key)?,
            "delay_taps" => self.delay_taps = parse_list(value, key)?,
            "alpha_max" => self.alpha_max = parse_one(value, key)?,
            "csi" => {
                self.csi = match value {
                    "perfect" => CsiKind::Perfect,
                    "estimated" => CsiKind::Estimated,
                    other => return Err(ConfigError(format!("unknown csi mode {other:?}"))),
                }
            }
            "snr_p_db" => self.snr_p_db = parse_one(value, key)?,
            "eve" => {
                self.eve = match value {
                    "zero-chirp" => EveKind::ZeroChirp,
                    "interval-search" => EveKind::IntervalSearch { delta_e: 0.0 },
                    other => return Err(ConfigError(format!("unknown eve strategy {other:?}"))),
                }
            }
            "delta_e" => {
                self.eve = EveKind::IntervalSearch {
                    delta_e: parse_one(value, key)?,
                }
            }
            "guard_width" => self.guard_width = parse_one(value, key)?,
            "header_symbols" => self.header_symbols = parse_one(value, key)?,
            "sync_symbols" => self.sync_symbols = parse_one(value, key)?,
            "total_symbols" => self.total_symbols = parse_one(value, key)?,
            "spread_factor" => self.spread_factor = parse_one(value, key)?,
            "threshold_frac" => self.threshold_frac = parse_one(value, key)?,
            "snr_db" => self.snr_db = parse_list(value, key)?,
            "delta_e_list" => self.delta_e_list = parse_list(value, key)?,
            "search_snr_db" => self.search_snr_db = parse_one(value, key)?,
            "c2_max_list" => self.c2_max_list = parse_list(value, key)?,
            "gamma_eve_db" => self.gamma_eve_db = parse_one(value, key)?,
            "analysis_m" => self.analysis_m = parse_one(value, key)?,
            "min_frames" => self.min_frames = parse_one(value, key)?,
            "max_frames" => self.max_frames = parse_one(value, key)?,
            "target_errors" => self.target_errors = parse_one(value, key)?,
            "frames" => self.frames = parse_one(value, key)?,
            "sync_snr_db" => self.sync_snr_db = parse_one(value, key)?,
            "seed" => self.seed = parse_one(value, key)?,
            "out" => self.out = Some(value.to_string()),
            other => return Err(ConfigError(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 || self.n_cp >= self.n {
            return Err(ConfigError("need 0 <= n_cp < n".into()));
        }
        if self.min_frames == 0 || self.max_frames < self.min_frames {
            return Err(ConfigError("need 1 <= min_frames <= max_frames".into()));
        }
        if self.delay_taps.is_empty() {
            return Err(ConfigError("delay_taps must not be empty".into()));
        }
        if self.snr_db.is_empty() || self.c2_max_list.is_empty() || self.delta_e_list.is_empty() {
            return Err(ConfigError("sweep lists must not be empty".into()));
        }
        if let EveKind::IntervalSearch { delta_e } = self.eve {
            if self.experiment == ExperimentKind::BerSweep && delta_e <= 0.0 {
                return Err(ConfigError(
                    "interval-search eve needs delta_e > 0 in a ber-sweep".into(),
                ));
            }
        }
        Ok(())
    }
}
