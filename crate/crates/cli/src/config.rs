//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # comments start with '#'
//! code.template = configs/rate02_irregular.dist
//! code.n = 10000
//! code.seed = 1
//! arms = w10, float
//! t_max = 15
//! snr = 0.52:0.58:0.01
//! frames = 200
//! master_seed = 1
//! ```
//!
//! Lists are comma separated. `snr` also accepts `start:stop:step`
//! (inclusive). Relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use tsrecon::corrector::CorrectorConfig;
use tsrecon::decoder::{CheckUpdate, DecoderConfig};
use tsrecon::fixed::{Arithmetic, FixedFormat};

use crate::error::{CliError, Result};

/// Every key the sweep config understands, in echo order.
pub const KEYS: &[(&str, &str)] = &[
    ("code.alist", "path to an alist parity-check matrix"),
    ("code.template", "path to a degree template; used with code.n and code.seed"),
    ("code.n", "code length for a generated code"),
    ("code.seed", "construction seed for a generated code (default 1)"),
    ("arms", "decoder arms: float, w10, w12 or w<bits>f<frac>"),
    ("t_max", "maximum iteration counts, one run per value"),
    ("float.check_update", "sum-product | min-sum | nms:<factor> (default sum-product)"),
    ("fixed.check_update", "sum-product | min-sum | nms:<factor> (default nms:0.75)"),
    ("fixed.accumulator_bits", "posterior accumulator width in bits (default: message width)"),
    ("float.delta", "reliability thresholds for float arms, real LLR units (default 5)"),
    ("fixed.delta", "reliability thresholds for fixed arms, LSB units (default 165 for w10, 530 for w12)"),
    ("max_peel_rounds", "peeling depth limit, 0 for none (default 0)"),
    ("snr", "linear Es/N0 list or start:stop:step"),
    ("frames", "frames per snr point"),
    ("master_seed", "root of every random stream (default 1)"),
    ("parallelism", "worker threads, 0 for all cores (default 0)"),
    ("out_dir", "output directory (default $TSRECON_OUT_DIR, then ./tsrecon-out)"),
];

#[derive(Clone, Debug, PartialEq)]
pub enum CodeSource {
    Alist(PathBuf),
    Generated { template: PathBuf, n: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Arm {
    pub arithmetic: Arithmetic,
}

impl Arm {
    pub fn parse(token: &str) -> Option<Arm> {
        let arithmetic = match token {
            "float" => Arithmetic::Float,
            "w10" => Arithmetic::Fixed(FixedFormat::W10),
            "w12" => Arithmetic::Fixed(FixedFormat::W12),
            other => {
                let (w, f) = other.strip_prefix('w')?.split_once('f')?;
                Arithmetic::Fixed(FixedFormat::new(w.parse().ok()?, f.parse().ok()?).ok()?)
            }
        };
        Some(Arm { arithmetic })
    }

    pub fn label(&self) -> String {
        match self.arithmetic {
            Arithmetic::Float => "float".into(),
            Arithmetic::Fixed(f) if f == FixedFormat::W10 => "w10".into(),
            Arithmetic::Fixed(f) if f == FixedFormat::W12 => "w12".into(),
            Arithmetic::Fixed(f) => format!("w{}f{}", f.total_bits(), f.frac_bits()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub code: CodeSource,
    pub arms: Vec<Arm>,
    pub t_max: Vec<usize>,
    pub float_check_update: CheckUpdate,
    pub fixed_check_update: CheckUpdate,
    pub accumulator_bits: Option<u8>,
    pub float_deltas: Vec<f64>,
    /// `None` picks the per-format default.
    pub fixed_deltas: Option<Vec<f64>>,
    pub max_peel_rounds: usize,
    pub snrs: Vec<f64>,
    pub frames: usize,
    pub master_seed: u64,
    pub parallelism: usize,
    pub out_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn decoder(&self, arm: Arm, t_max: usize) -> DecoderConfig {
        let mut cfg = DecoderConfig::for_arithmetic(arm.arithmetic, t_max);
        match arm.arithmetic {
            Arithmetic::Float => cfg.check_update = self.float_check_update,
            Arithmetic::Fixed(_) => {
                cfg.check_update = self.fixed_check_update;
                cfg.accumulator_bits = self.accumulator_bits;
            }
        }
        cfg
    }

    pub fn deltas(&self, arm: Arm) -> Vec<f64> {
        match (arm.arithmetic, &self.fixed_deltas) {
            (Arithmetic::Float, _) => self.float_deltas.clone(),
            (Arithmetic::Fixed(_), Some(d)) => d.clone(),
            (Arithmetic::Fixed(_), None) => vec![CorrectorConfig::for_arithmetic(arm.arithmetic).delta],
        }
    }

    /// Peeling depth limit as the corrector expects it.
    pub fn peel_limit(&self) -> usize {
        if self.max_peel_rounds == 0 {
            usize::MAX
        } else {
            self.max_peel_rounds
        }
    }

    /// Canonical text form. Parsing it gives back the same config, with
    /// paths already absolute.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        match &self.code {
            CodeSource::Alist(p) => writeln!(out, "code.alist = {}", p.display()).unwrap(),
            CodeSource::Generated { template, n, seed } => {
                writeln!(out, "code.template = {}", template.display()).unwrap();
                writeln!(out, "code.n = {n}").unwrap();
                writeln!(out, "code.seed = {seed}").unwrap();
            }
        }
        let arms: Vec<String> = self.arms.iter().map(Arm::label).collect();
        writeln!(out, "arms = {}", arms.join(", ")).unwrap();
        let t: Vec<String> = self.t_max.iter().map(usize::to_string).collect();
        writeln!(out, "t_max = {}", t.join(", ")).unwrap();
        writeln!(out, "float.check_update = {}", self.float_check_update).unwrap();
        writeln!(out, "fixed.check_update = {}", self.fixed_check_update).unwrap();
        if let Some(bits) = self.accumulator_bits {
            writeln!(out, "fixed.accumulator_bits = {bits}").unwrap();
        }
        writeln!(out, "float.delta = {}", list(&self.float_deltas)).unwrap();
        if let Some(d) = &self.fixed_deltas {
            writeln!(out, "fixed.delta = {}", list(d)).unwrap();
        }
        writeln!(out, "max_peel_rounds = {}", self.max_peel_rounds).unwrap();
        writeln!(out, "snr = {}", list(&self.snrs)).unwrap();
        writeln!(out, "frames = {}", self.frames).unwrap();
        writeln!(out, "master_seed = {}", self.master_seed).unwrap();
        out
    }
}

/// Raw `key -> (value, origin)` pairs before interpretation.
#[derive(Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, String)>,
    base_dir: PathBuf,
}

impl RawConfig {
    pub fn parse(text: &str, source: &str, base_dir: &Path) -> Result<RawConfig> {
        let mut raw = RawConfig {
            entries: BTreeMap::new(),
            base_dir: base_dir.to_path_buf(),
        };
        for (i, line) in text.lines().enumerate() {
            let origin = format!("{source}:{}", i + 1);
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(&origin, format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            check_key(key, &origin)?;
            if raw.entries.contains_key(key) {
                return Err(CliError::config(&origin, format!("key `{key}` given twice")));
            }
            raw.entries.insert(key.to_string(), (value.trim().to_string(), origin));
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<RawConfig> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        RawConfig::parse(&text, &path.display().to_string(), &base)
    }

    /// Applies a `key=value` override, replacing any earlier value.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let origin = format!("--set {assignment}");
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::config(&origin, "expected key=value"))?;
        let key = key.trim();
        check_key(key, &origin)?;
        self.entries.insert(key.to_string(), (value.trim().to_string(), origin));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<(&str, &str)> {
        self.entries.get(key).map(|(v, o)| (v.as_str(), o.as_str()))
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: Option<T>) -> Result<T> {
        match self.get(key) {
            Some((v, origin)) => v
                .parse()
                .map_err(|_| CliError::config(origin, format!("`{key}`: cannot parse `{v}`"))),
            None => default.ok_or_else(|| CliError::config("(missing)", format!("required key `{key}` not set"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some((v, origin)) = self.get(key) else {
            return Ok(None);
        };
        let items = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| CliError::config(origin, format!("`{key}`: cannot parse list item `{s}`")))
            })
            .collect::<Result<Vec<T>>>()?;
        if items.is_empty() {
            return Err(CliError::config(origin, format!("`{key}` is empty")));
        }
        Ok(Some(items))
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|(v, _)| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                self.base_dir.join(p)
            }
        })
    }

    pub fn resolve(&self) -> Result<SweepConfig> {
        let code = match (self.path("code.alist"), self.path("code.template")) {
            (Some(p), None) => {
                for k in ["code.n", "code.seed"] {
                    if let Some((_, origin)) = self.get(k) {
                        return Err(CliError::config(origin, format!("`{k}` only applies to code.template")));
                    }
                }
                CodeSource::Alist(absolute(p))
            }
            (None, Some(p)) => CodeSource::Generated {
                template: absolute(p),
                n: self.parsed("code.n", None)?,
                seed: self.parsed("code.seed", Some(1))?,
            },
            (Some(_), Some(_)) => {
                return Err(CliError::config("(code)", "set only one of code.alist and code.template"))
            }
            (None, None) => return Err(CliError::config("(code)", "set code.alist or code.template")),
        };

        let arms = match self.get("arms") {
            Some((v, origin)) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|t| {
                    Arm::parse(t).ok_or_else(|| CliError::config(origin, format!("`arms`: unknown arm `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?,
            None => vec![Arm::parse("w10").unwrap(), Arm::parse("float").unwrap()],
        };
        if arms.is_empty() {
            return Err(CliError::config("arms", "no arms given"));
        }

        let snrs = match self.get("snr") {
            Some((v, origin)) if v.contains(':') => snr_range(v).ok_or_else(|| {
                CliError::config(origin, format!("`snr`: bad range `{v}`, expected start:stop:step"))
            })?,
            Some(_) => self.list("snr")?.unwrap(),
            None => return Err(CliError::config("(missing)", "required key `snr` not set")),
        };

        let cfg = SweepConfig {
            code,
            arms,
            t_max: self.list("t_max")?.unwrap_or_else(|| vec![15]),
            float_check_update: self.parsed("float.check_update", Some(CheckUpdate::SumProduct))?,
            fixed_check_update: self.parsed("fixed.check_update", Some(CheckUpdate::NormalizedMinSum(0.75)))?,
            accumulator_bits: match self.get("fixed.accumulator_bits") {
                Some(_) => Some(self.parsed("fixed.accumulator_bits", None)?),
                None => None,
            },
            float_deltas: self.list("float.delta")?.unwrap_or_else(|| vec![tsrecon::corrector::DEFAULT_FLOAT_DELTA]),
            fixed_deltas: self.list("fixed.delta")?,
            max_peel_rounds: self.parsed("max_peel_rounds", Some(0))?,
            snrs,
            frames: self.parsed("frames", None)?,
            master_seed: self.parsed("master_seed", Some(1))?,
            parallelism: self.parsed("parallelism", Some(0))?,
            out_dir: self.path("out_dir"),
        };
        validate(&cfg)?;
        Ok(cfg)
    }
}

fn check_key(key: &str, origin: &str) -> Result<()> {
    if KEYS.iter().any(|(k, _)| *k == key) {
        Ok(())
    } else {
        Err(CliError::config(origin, format!("unknown key `{key}`")))
    }
}

fn absolute(p: PathBuf) -> PathBuf {
    std::path::absolute(&p).unwrap_or(p)
}

/// Inclusive `start:stop:step`, rounded to 9 decimals so the printed values
/// stay short.
fn snr_range(text: &str) -> Option<Vec<f64>> {
    let parts: Vec<f64> = text.split(':').map(|s| s.trim().parse().ok()).collect::<Option<_>>()?;
    let [start, stop, step] = parts[..] else {
        return None;
    };
    if !(step > 0.0) || stop < start {
        return None;
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Some(
        (0..count)
            .map(|i| ((start + step * i as f64) * 1e9).round() / 1e9)
            .collect(),
    )
}

fn validate(cfg: &SweepConfig) -> Result<()> {
    let spec = tsrecon::channel::SweepSpec {
        snrs: cfg.snrs.clone(),
        frames_per_point: cfg.frames,
        master_seed: cfg.master_seed,
        parallelism: cfg.parallelism,
    };
    spec.validate().map_err(|e| CliError::config("sweep", e.to_string()))?;
    for &arm in &cfg.arms {
        for &t in &cfg.t_max {
            cfg.decoder(arm, t)
                .validate()
                .map_err(|e| CliError::config(arm.label(), e.to_string()))?;
        }
        for delta in cfg.deltas(arm) {
            CorrectorConfig {
                delta,
                max_peel_rounds: cfg.peel_limit(),
            }
            .validate()
            .map_err(|e| CliError::config(arm.label(), e.to_string()))?;
        }
    }
    Ok(())
}
