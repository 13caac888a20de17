//! Run configuration: flat `key = value` text with dotted section prefixes
//! and `#` comments.
//!
//! ```text
//! params.n = 3
//! params.p = 1.3333333333333333
//! grid.N = 4096
//! initial.kind = ground_state
//! initial.alpha = 0.9
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::evolve::EvolutionConfig;
use crate::params::ProblemParams;
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, key `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "key `{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

fn fail(line: Option<usize>, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { line, key: Some(key.to_string()), message: message.into() }
}

/// Every key the parser accepts.
pub const KNOWN_KEYS: &[&str] = &[
    "params.n",
    "params.b",
    "params.c",
    "params.p",
    "params.omega",
    "potential.kind",
    "potential.a",
    "potential.s",
    "grid.r_max",
    "grid.N",
    "grid.grading",
    "initial.kind",
    "initial.alpha",
    "initial.amplitude",
    "initial.width",
    "initial.path",
    "evolution.dt0",
    "evolution.t_end",
    "evolution.sample_every",
    "evolution.blowup_factor",
    "evolution.dt_min",
    "evolution.adaptive",
    "output.dir",
    "classify.omega",
    "sweep.key",
    "sweep.values",
];

/// Parsed but uninterpreted entries, with their source lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Option<usize>)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError { line: Some(line), key: None, message: format!("expected `key = value`, got {content:?}") });
            };
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError { line: Some(line), key: None, message: "empty key".into() });
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(fail(Some(line), key, "unknown key"));
            }
            if value.is_empty() {
                return Err(fail(Some(line), key, "missing value"));
            }
            if let Some((_, Some(first))) = entries.get(key) {
                return Err(fail(Some(line), key, format!("duplicate key (first set on line {first})")));
            }
            entries.insert(key.to_string(), (value.to_string(), Some(line)));
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { line: None, key: None, message: format!("cannot read {}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    /// Replaces one entry, as a sweep point does.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self, ConfigError> {
        if !KNOWN_KEYS.contains(&key) || key.starts_with("sweep.") {
            return Err(fail(self.line(key), key, "not a sweepable key"));
        }
        let mut out = self.clone();
        out.entries.insert(key.to_string(), (value.to_string(), None));
        Ok(out)
    }

    /// Sorted `key = value` lines; comments and layout do not affect it.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, (v, _))| format!("{k} = {v}\n")).collect()
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).and_then(|(_, l)| *l)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| fail(*line, key, format!("{v:?}: {e}"))),
        }
    }

    fn number(&self, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        match self.parsed::<f64>(key)? {
            Some(v) if v.is_finite() => Ok(v),
            Some(v) => Err(fail(self.line(key), key, format!("{v} is not finite"))),
            None => default.ok_or_else(|| fail(None, key, "required key is missing")),
        }
    }

    fn positive(&self, key: &str, default: Option<f64>) -> Result<f64, ConfigError> {
        let v = self.number(key, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(fail(self.line(key), key, format!("must be positive, got {v}")))
        }
    }

    /// Interprets the entries. Relative `initial.path` values resolve
    /// against `base`.
    pub fn build(&self, base: &Path) -> Result<RunConfig, ConfigError> {
        let n = match self.parsed::<u32>("params.n")? {
            Some(n) => n,
            None => return Err(fail(None, "params.n", "required key is missing")),
        };
        let params = ProblemParams::new(
            n,
            self.number("params.b", Some(0.0))?,
            self.number("params.c", Some(0.0))?,
            self.number("params.p", None)?,
            self.number("params.omega", Some(1.0))?,
        );
        params.validate().map_err(|e| fail(self.line("params.p"), "params", e.to_string()))?;

        let kind = self.get("potential.kind").unwrap_or("zero");
        let potential = match kind {
            "zero" => PotentialSpec::Zero,
            "inverse_power" => {
                PotentialSpec::InversePower { a: self.number("potential.a", None)?, s: self.number("potential.s", None)? }
            }
            "smooth_bump" => PotentialSpec::SmoothBump { a: self.number("potential.a", None)?, s: self.number("potential.s", None)? },
            "const_plus_gaussian" => PotentialSpec::ConstPlusGaussian { a: self.number("potential.a", None)? },
            other => {
                return Err(fail(
                    self.line("potential.kind"),
                    "potential.kind",
                    format!("{other:?} is not one of zero, inverse_power, smooth_bump, const_plus_gaussian"),
                ))
            }
        };
        potential.validate().map_err(|e| fail(self.line("potential.kind"), "potential", e.to_string()))?;

        let cells = self.parsed::<usize>("grid.N")?.unwrap_or(4096);
        if cells < 2 {
            return Err(fail(self.line("grid.N"), "grid.N", "need at least 2 cells"));
        }
        let grid = GridConfig {
            r_max: self.positive("grid.r_max", Some(30.0))?,
            cells,
            grading: self.number("grid.grading", Some(2.0))?,
        };
        if grid.grading < 1.0 {
            return Err(fail(self.line("grid.grading"), "grid.grading", "must be >= 1"));
        }

        let initial = match self.get("initial.kind").unwrap_or("ground_state") {
            "ground_state" => InitialData::GroundStateMultiple { alpha: self.positive("initial.alpha", Some(1.0))? },
            "gaussian" => InitialData::Gaussian {
                amplitude: self.number("initial.amplitude", Some(1.0))?,
                width: self.positive("initial.width", Some(1.0))?,
            },
            "file" => {
                let raw = self.get("initial.path").ok_or_else(|| fail(None, "initial.path", "required when initial.kind = file"))?;
                let path = base.join(raw);
                if !path.is_file() {
                    return Err(fail(self.line("initial.path"), "initial.path", format!("{} does not exist", path.display())));
                }
                InitialData::FromFile { path }
            }
            other => {
                return Err(fail(
                    self.line("initial.kind"),
                    "initial.kind",
                    format!("{other:?} is not one of ground_state, gaussian, file"),
                ))
            }
        };

        let d = EvolutionConfig::default();
        let evolution = EvolutionConfig {
            dt0: self.number("evolution.dt0", Some(d.dt0))?,
            t_end: self.number("evolution.t_end", Some(d.t_end))?,
            sample_every: self.parsed::<usize>("evolution.sample_every")?.unwrap_or(d.sample_every),
            blowup_factor: self.number("evolution.blowup_factor", Some(d.blowup_factor))?,
            dt_min: self.number("evolution.dt_min", Some(d.dt_min))?,
            adaptive: self.parsed::<bool>("evolution.adaptive")?.unwrap_or(d.adaptive),
        };
        evolution.validate().map_err(|e| fail(self.line("evolution.dt0"), "evolution", e.to_string()))?;

        let classify_omega = match self.get("classify.omega") {
            Some(_) => Some(self.positive("classify.omega", None)?),
            None => None,
        };

        let sweep = match (self.get("sweep.key"), self.get("sweep.values")) {
            (None, None) => None,
            (Some(key), Some(values)) => {
                if !KNOWN_KEYS.contains(&key) || key.starts_with("sweep.") {
                    return Err(fail(self.line("sweep.key"), "sweep.key", format!("{key:?} is not a sweepable key")));
                }
                let values = values
                    .split(',')
                    .map(|v| v.trim().to_string())
                    .filter(|v| !v.is_empty())
                    .collect::<Vec<_>>();
                if values.is_empty() {
                    return Err(fail(self.line("sweep.values"), "sweep.values", "empty list"));
                }
                Some(SweepAxis { key: key.to_string(), values })
            }
            (Some(_), None) => return Err(fail(None, "sweep.values", "required when sweep.key is set")),
            (None, Some(_)) => return Err(fail(None, "sweep.key", "required when sweep.values is set")),
        };

        Ok(RunConfig {
            params,
            potential,
            grid,
            initial,
            evolution,
            output: PathBuf::from(self.get("output.dir").unwrap_or("out")),
            classify_omega,
            sweep,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub r_max: f64,
    pub cells: usize,
    pub grading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    /// `α Q_ω` with `ω` from `params.omega`.
    GroundStateMultiple { alpha: f64 },
    /// `amplitude · exp(−r²/(2 width²))`
    Gaussian { amplitude: f64, width: f64 },
    /// A profile CSV (`r,re(u),im(u)`) on the configured grid.
    FromFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    /// Kept as text so each point re-parses through the same path.
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ProblemParams,
    pub potential: PotentialSpec,
    pub grid: GridConfig,
    pub initial: InitialData,
    pub evolution: EvolutionConfig,
    pub output: PathBuf,
    pub classify_omega: Option<f64>,
    pub sweep: Option<SweepAxis>,
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "# mass-critical fixture\nparams.n = 3\nparams.p = 1.3333333333333333 # 4/n\n\ngrid.N = 512\ninitial.alpha = 0.9\n";

    #[test]
    fn defaults_fill_unset_keys() {
        let cfg = RawConfig::parse(BASIC).unwrap().build(Path::new(".")).unwrap();
        assert_eq!(cfg.params, ProblemParams::new(3, 0.0, 0.0, 4.0 / 3.0, 1.0));
        assert_eq!(cfg.grid, GridConfig { r_max: 30.0, cells: 512, grading: 2.0 });
        assert_eq!(cfg.initial, InitialData::GroundStateMultiple { alpha: 0.9 });
        assert_eq!(cfg.potential, PotentialSpec::Zero);
        assert_eq!(cfg.evolution, EvolutionConfig::default());
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn errors_name_line_and_key() {
        let e = RawConfig::parse("params.n = 3\ngrid.M = 4\n").unwrap_err();
        assert_eq!((e.line, e.key.as_deref()), (Some(2), Some("grid.M")));
        let e = RawConfig::parse("params.n = 3\nparams.n = 4\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.to_string().contains("line 1"));
        let e = RawConfig::parse("params.n 3\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = RawConfig::parse("params.n = 3\nparams.p = two\n").unwrap().build(Path::new(".")).unwrap_err();
        assert_eq!((e.line, e.key.as_deref()), (Some(2), Some("params.p")));
        let e = RawConfig::parse("params.p = 2\n").unwrap().build(Path::new(".")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("params.n"));
        let e = RawConfig::parse("params.n = 3\nparams.p = 2\ninitial.alpha = -1\n").unwrap().build(Path::new(".")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("initial.alpha"));
    }

    #[test]
    fn missing_initial_file_is_rejected() {
        let text = "params.n = 3\nparams.p = 2\ninitial.kind = file\ninitial.path = nowhere.csv\n";
        let e = RawConfig::parse(text).unwrap().build(Path::new("/nonexistent")).unwrap_err();
        assert_eq!((e.line, e.key.as_deref()), (Some(4), Some("initial.path")));
    }

    #[test]
    fn canonical_form_ignores_layout_and_overrides_apply() {
        let a = RawConfig::parse(BASIC).unwrap();
        let b = RawConfig::parse("initial.alpha=0.9\ngrid.N=512\nparams.p=1.3333333333333333\nparams.n=3").unwrap();
        assert_eq!(a.canonical(), b.canonical());
        let c = a.with_override("initial.alpha", "1.2").unwrap();
        assert_eq!(c.build(Path::new(".")).unwrap().initial, InitialData::GroundStateMultiple { alpha: 1.2 });
        assert!(a.with_override("sweep.key", "x").is_err());
    }

    #[test]
    fn sweep_axis_parses() {
        let text = format!("{BASIC}sweep.key = initial.alpha\nsweep.values = 0.8, 0.9,1.1 ,1.2\n");
        let cfg = RawConfig::parse(&text).unwrap().build(Path::new(".")).unwrap();
        let axis = cfg.sweep.unwrap();
        assert_eq!(axis.key, "initial.alpha");
        assert_eq!(axis.values, ["0.8", "0.9", "1.1", "1.2"]);
        let bad = format!("{BASIC}sweep.key = initial.alpha\n");
        assert!(RawConfig::parse(&bad).unwrap().build(Path::new(".")).is_err());
    }
}
