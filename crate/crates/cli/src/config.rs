//! Flat `key = value` run configuration.
//!
//! ```text
//! # storage setup
//! t_losses = 0.15
//! blockade_radius = 10.5
//! signal_window = 0:300
//! zeta_grid = 0.01, 0.05, 0.5
//! ```
//!
//! Unknown keys, repeated keys and out-of-range values are errors.

use std::fmt;
use std::path::{Path, PathBuf};

use rydfock::clicks::Arms;
use rydfock::pipeline::{InputKind, PipelineConfig};
use rydfock::{Detector, RateModelParams, Window, WindowSpec};

#[derive(Debug)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: usize,
    pub key: String,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) => write!(f, "{}:{}: ", p.display(), self.line)?,
            None if self.line > 0 => write!(f, "line {}: ", self.line)?,
            None => {}
        }
        write!(f, "`{}`: {}", self.key, self.msg)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub rng_seed: u64,
    pub out_dir: PathBuf,
    pub pipeline: PipelineConfig<f64>,
    pub t_w: f64,
    /// Rate-model constants; `p` is set per evaluation.
    pub rate: RateModelParams,
    pub signal_window: Window,
    pub noise_window: Window,
    pub arms: Arms,
    pub resamples: usize,
    pub zeta_grid: Vec<f64>,
    pub p_w_grid: Vec<f64>,
    pub slow_light_scale: f64,
    pub eff_table: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let rate = RateModelParams::measured(0.0);
        Self {
            rng_seed: 0,
            out_dir: PathBuf::from("out"),
            pipeline: PipelineConfig::default(),
            t_w: rate.t_w,
            rate,
            signal_window: WindowSpec::default().signal(Detector::D1),
            noise_window: WindowSpec::default().noise(),
            arms: Arms::default(),
            resamples: 1000,
            zeta_grid: (1..=60).map(|i| i as f64 / 100.0).collect(),
            p_w_grid: (1..=50).map(|i| i as f64 * 0.002).collect(),
            slow_light_scale: rydfock::blockade::DEFAULT_SLOW_LIGHT_SCALE,
            eff_table: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "rng_seed",
    "out_dir",
    "t_losses",
    "eta_compression",
    "eta_eit",
    "eta_r",
    "cloud_length",
    "blockade_radius",
    "trials_per_fock",
    "n_max",
    "t_w",
    "t_r",
    "eta_a",
    "p_eg",
    "p_nw",
    "p_nr",
    "signal_window",
    "noise_window",
    "detectors",
    "resamples",
    "zeta_grid",
    "p_w_grid",
    "slow_light_scale",
    "eff_table",
];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: Some(path.to_owned()),
            line: 0,
            key: "config".into(),
            msg: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| ConfigError { path: Some(path.to_owned()), ..e })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: Vec<(String, usize)> = Vec::new();
        let mut noise_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |key: &str, msg: String| ConfigError { path: None, line, key: key.to_owned(), msg };
            let Some((key, value)) = content.split_once('=') else {
                return Err(err(content, "expected `key = value`".into()));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(key, "unknown key".into()));
            }
            if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
                return Err(err(key, format!("already set on line {first}")));
            }
            seen.push((key.to_owned(), line));
            if key == "noise_window" {
                noise_line = line;
            }
            cfg.set(key, value).map_err(|msg| err(key, msg))?;
        }
        cfg.pipeline.input_kind = InputKind::Dlcz { t_w: cfg.t_w };
        cfg.rate.t_w = cfg.t_w;
        cfg.check_windows().map_err(|msg| ConfigError {
            path: None,
            line: noise_line,
            key: "noise_window".into(),
            msg,
        })?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "rng_seed" => self.rng_seed = parse(v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "t_losses" => self.pipeline.t_losses = efficiency(v)?,
            "eta_compression" => self.pipeline.eta_compression = efficiency(v)?,
            "eta_eit" => self.pipeline.eta_eit = efficiency(v)?,
            "eta_r" => self.pipeline.eta_r = efficiency(v)?,
            "cloud_length" => self.pipeline.blockade.cloud_length = positive(v)?,
            "blockade_radius" => self.pipeline.blockade.blockade_radius = non_negative(v)?,
            "trials_per_fock" => self.pipeline.blockade.trials_per_fock = at_least(v, 1)?,
            "n_max" => self.pipeline.blockade.n_max = at_least(v, 2)? as usize,
            "t_w" => self.t_w = efficiency(v)?,
            "t_r" => self.rate.t_r = probability(v)?,
            "eta_a" => self.rate.eta_a = probability(v)?,
            "p_eg" => self.rate.p_eg = probability(v)?,
            "p_nw" => self.rate.p_nw = probability(v)?,
            "p_nr" => self.rate.p_nr = probability(v)?,
            "signal_window" => self.signal_window = parse_window(v)?,
            "noise_window" => self.noise_window = parse_window(v)?,
            "detectors" => self.arms = parse_arms(v)?,
            "resamples" => self.resamples = at_least(v, 100)? as usize,
            "zeta_grid" => self.zeta_grid = grid(v, |z| z > 0.0 && z < 1.0, "in (0, 1)")?,
            "p_w_grid" => self.p_w_grid = grid(v, |p| p > 0.0 && p < 1.0, "in (0, 1)")?,
            "slow_light_scale" => {
                let s: f64 = parse(v)?;
                if !(s >= 1.0 && s.is_finite()) {
                    return Err(format!("must be >= 1, got {s}"));
                }
                self.slow_light_scale = s;
            }
            "eff_table" => self.eff_table = Some(PathBuf::from(v)),
            _ => unreachable!("key list and setter out of sync: {key}"),
        }
        Ok(())
    }

    fn check_windows(&self) -> Result<(), String> {
        self.windows().map(|_| ()).map_err(|e| e.to_string())
    }

    pub fn windows(&self) -> rydfock::Result<WindowSpec> {
        WindowSpec::new(self.signal_window, self.noise_window)
    }
}

fn parse<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn efficiency(v: &str) -> Result<f64, String> {
    let x: f64 = parse(v)?;
    if !(x > 0.0 && x <= 1.0) {
        return Err(format!("must be in (0, 1], got {x}"));
    }
    Ok(x)
}

fn probability(v: &str) -> Result<f64, String> {
    let x: f64 = parse(v)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(format!("must be in [0, 1], got {x}"));
    }
    Ok(x)
}

fn positive(v: &str) -> Result<f64, String> {
    let x: f64 = parse(v)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(format!("must be > 0, got {x}"));
    }
    Ok(x)
}

fn non_negative(v: &str) -> Result<f64, String> {
    let x: f64 = parse(v)?;
    if !(x >= 0.0 && x.is_finite()) {
        return Err(format!("must be >= 0, got {x}"));
    }
    Ok(x)
}

fn at_least(v: &str, min: u64) -> Result<u64, String> {
    let x: u64 = parse(v)?;
    if x < min {
        return Err(format!("must be >= {min}, got {x}"));
    }
    Ok(x)
}

fn grid(v: &str, ok: impl Fn(f64) -> bool, what: &str) -> Result<Vec<f64>, String> {
    let xs = v.split(',').map(|s| parse::<f64>(s.trim())).collect::<Result<Vec<_>, _>>()?;
    if xs.is_empty() {
        return Err("empty list".into());
    }
    if let Some(x) = xs.iter().find(|x| !ok(**x)) {
        return Err(format!("value {x} not {what}"));
    }
    Ok(xs)
}

/// `a:b` in nanoseconds.
pub fn parse_window(v: &str) -> Result<Window, String> {
    let (a, b) = v.split_once(':').ok_or_else(|| format!("expected `start:end`, got `{v}`"))?;
    let start: u64 = parse(a.trim())?;
    let end: u64 = parse(b.trim())?;
    Window::new(start, end).map_err(|e| e.to_string())
}

/// Two detector names such as `D2,D3`.
pub fn parse_arms(v: &str) -> Result<Arms, String> {
    let ds = v
        .split(',')
        .map(|s| Detector::parse(s).ok_or_else(|| format!("unknown detector `{}`", s.trim())))
        .collect::<Result<Vec<_>, _>>()?;
    match ds[..] {
        [first, second] if first != second => Ok(Arms { first, second }),
        _ => Err(format!("expected two distinct detectors, got `{v}`")),
    }
}
