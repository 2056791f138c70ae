//! INI-style analysis configuration.
//!
//! ```ini
//! [data]
//! dir = data
//! series = uk_gdppc, ew_leb_civilian
//! transforms = log
//! from = 1920
//! to = 1999
//!
//! [series.uk_gdppc]
//! transforms = log
//!
//! [analysis]
//! level = 0.05
//!
//! [unitroot]
//! specs = zero_mean, single_mean, trend
//! lags = 1            ; or `auto`
//! max_lag = 4
//! criterion = aic
//! pp_bandwidth = auto
//!
//! [johansen]
//! lag_p = 1           ; or `auto`
//! det = no_intercept
//!
//! [audit]
//! target = ew_leb_civilian
//! mu = -0.2
//! sigma = 0.7
//! y0 = 0
//! trials = 1000
//! seed = 1
//! override_screen = false
//!
//! [output]
//! report = report.json
//! plot = overlay.svg
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::{Ini, Properties};
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::johansen::VecmDeterministic;
use crate::level::SignificanceLevel;
use crate::regress::InfoCriterion;
use crate::series::TransformTag;
use crate::unitroot::DeterministicSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRef {
    pub label: String,
    pub transforms: Vec<TransformTag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub from: i64,
    pub to: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LagChoice {
    Fixed { lags: usize },
    Auto { max_lag: usize, criterion: InfoCriterion },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootConfig {
    pub specs: Vec<DeterministicSpec>,
    pub lags: LagChoice,
    /// `None` uses the Newey–West automatic bandwidth.
    pub pp_bandwidth: Option<usize>,
}

impl Default for UnitRootConfig {
    fn default() -> Self {
        Self {
            specs: DeterministicSpec::ALL.to_vec(),
            lags: LagChoice::Fixed { lags: 1 },
            pp_bandwidth: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JohansenConfig {
    /// `None` selects the VAR order by AIC.
    pub lag_p: Option<usize>,
    pub det: VecmDeterministic,
}

impl Default for JohansenConfig {
    fn default() -> Self {
        Self {
            lag_p: Some(1),
            det: VecmDeterministic::NoIntercept,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSettings {
    /// Registry label of the target; defaults to the first configured series.
    pub target: Option<String>,
    pub mu: f64,
    pub sigma: f64,
    pub y0: f64,
    pub n_trials: usize,
    pub seed: u64,
    pub override_screen: bool,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self {
            target: None,
            mu: -0.2,
            sigma: 0.7,
            y0: 0.0,
            n_trials: 1000,
            seed: 1,
            override_screen: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutputConfig {
    pub report: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub data_dir: Option<PathBuf>,
    pub series: Vec<SeriesRef>,
    pub window: Option<Window>,
    pub level: SignificanceLevel,
    pub unitroot: UnitRootConfig,
    pub johansen: JohansenConfig,
    pub audit: AuditSettings,
    pub output: OutputConfig,
}

fn strip_inline_comments(text: &str) -> String {
    text.lines()
        .map(|line| {
            let cut = line
                .char_indices()
                .find(|&(i, c)| (c == ';' || c == '#') && i > 0 && line[..i].ends_with(char::is_whitespace))
                .map_or(line.len(), |(i, _)| i);
            &line[..cut]
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn config_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

fn parse<T: FromStr>(section: &str, key: &str, raw: &str) -> Result<T, PipelineError>
where
    T::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| config_err(format!("[{section}] {key} = `{raw}`: {e}")))
}

fn list(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty())
}

pub fn parse_transforms(raw: &str) -> Result<Vec<TransformTag>, PipelineError> {
    list(raw)
        .map(|t| t.parse().map_err(config_err))
        .collect()
}

fn check_keys(section: &str, props: &Properties, allowed: &[&str]) -> Result<(), PipelineError> {
    for (k, _) in props.iter() {
        if !allowed.contains(&k) {
            return Err(config_err(format!("[{section}]: unknown key `{k}`")));
        }
    }
    Ok(())
}

fn parse_bool(section: &str, key: &str, raw: &str) -> Result<bool, PipelineError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(config_err(format!("[{section}] {key} = `{raw}`: expected a boolean"))),
    }
}

impl AnalysisConfig {
    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_ini_str(&text).map_err(|e| match e {
            PipelineError::Config(m) => config_err(format!("{}: {m}", path.display())),
            other => other,
        })?;
        // relative paths in the file resolve against its directory
        if let Some(base) = path.parent() {
            let fix = |p: &mut Option<PathBuf>| {
                if let Some(inner) = p {
                    if inner.is_relative() {
                        *inner = base.join(&*inner);
                    }
                }
            };
            fix(&mut cfg.data_dir);
            fix(&mut cfg.output.report);
            fix(&mut cfg.output.plot);
        }
        Ok(cfg)
    }

    /// Parses INI text. `;` or `#` after whitespace starts a trailing comment.
    pub fn from_ini_str(text: &str) -> Result<Self, PipelineError> {
        let ini = Ini::load_from_str(&strip_inline_comments(text)).map_err(|e| config_err(e.to_string()))?;
        let mut cfg = Self::default();
        let mut default_transforms = Vec::new();
        let mut per_series: Vec<(String, Vec<TransformTag>)> = Vec::new();
        let (mut from, mut to) = (None, None);

        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if props.iter().next().is_some() {
                    return Err(config_err("keys outside a section"));
                }
                continue;
            };
            match name {
                "data" => {
                    check_keys(name, props, &["dir", "series", "transforms", "from", "to"])?;
                    for (k, v) in props.iter() {
                        match k {
                            "dir" => cfg.data_dir = Some(PathBuf::from(v.trim())),
                            "series" => {
                                cfg.series = list(v)
                                    .map(|l| SeriesRef {
                                        label: l.to_string(),
                                        transforms: Vec::new(),
                                    })
                                    .collect()
                            }
                            "transforms" => default_transforms = parse_transforms(v)?,
                            "from" => from = Some(parse::<i64>(name, k, v)?),
                            "to" => to = Some(parse::<i64>(name, k, v)?),
                            _ => unreachable!(),
                        }
                    }
                }
                "analysis" => {
                    check_keys(name, props, &["level"])?;
                    if let Some(v) = props.get("level") {
                        cfg.level = parse(name, "level", v)?;
                    }
                }
                "unitroot" => {
                    check_keys(name, props, &["specs", "lags", "max_lag", "criterion", "pp_bandwidth"])?;
                    if let Some(v) = props.get("specs") {
                        cfg.unitroot.specs = list(v)
                            .map(|s| parse::<DeterministicSpec>(name, "specs", s))
                            .collect::<Result<_, _>>()?;
                        if cfg.unitroot.specs.is_empty() {
                            return Err(config_err("[unitroot] specs is empty"));
                        }
                    }
                    let max_lag = props
                        .get("max_lag")
                        .map(|v| parse::<usize>(name, "max_lag", v))
                        .transpose()?
                        .unwrap_or(4);
                    let criterion = props
                        .get("criterion")
                        .map(|v| parse::<InfoCriterion>(name, "criterion", v))
                        .transpose()?
                        .unwrap_or_default();
                    cfg.unitroot.lags = match props.get("lags").map(str::trim) {
                        Some("auto") => LagChoice::Auto { max_lag, criterion },
                        Some(v) => LagChoice::Fixed {
                            lags: parse(name, "lags", v)?,
                        },
                        None => cfg.unitroot.lags,
                    };
                    cfg.unitroot.pp_bandwidth = match props.get("pp_bandwidth").map(str::trim) {
                        None | Some("auto") => None,
                        Some(v) => Some(parse(name, "pp_bandwidth", v)?),
                    };
                }
                "johansen" => {
                    check_keys(name, props, &["lag_p", "det"])?;
                    cfg.johansen.lag_p = match props.get("lag_p").map(str::trim) {
                        Some("auto") => None,
                        Some(v) => {
                            let p: usize = parse(name, "lag_p", v)?;
                            if p == 0 {
                                return Err(config_err("[johansen] lag_p must be at least 1"));
                            }
                            Some(p)
                        }
                        None => cfg.johansen.lag_p,
                    };
                    if let Some(v) = props.get("det") {
                        cfg.johansen.det = parse(name, "det", v)?;
                    }
                }
                "audit" => {
                    check_keys(
                        name,
                        props,
                        &["target", "mu", "sigma", "y0", "trials", "seed", "override_screen"],
                    )?;
                    for (k, v) in props.iter() {
                        match k {
                            "target" => cfg.audit.target = Some(v.trim().to_string()),
                            "mu" => cfg.audit.mu = parse(name, k, v)?,
                            "sigma" => cfg.audit.sigma = parse(name, k, v)?,
                            "y0" => cfg.audit.y0 = parse(name, k, v)?,
                            "trials" => cfg.audit.n_trials = parse(name, k, v)?,
                            "seed" => cfg.audit.seed = parse(name, k, v)?,
                            "override_screen" => cfg.audit.override_screen = parse_bool(name, k, v)?,
                            _ => unreachable!(),
                        }
                    }
                }
                "output" => {
                    check_keys(name, props, &["report", "plot"])?;
                    cfg.output.report = props.get("report").map(|v| PathBuf::from(v.trim()));
                    cfg.output.plot = props.get("plot").map(|v| PathBuf::from(v.trim()));
                }
                other => match other.strip_prefix("series.") {
                    Some(label) => {
                        check_keys(name, props, &["transforms"])?;
                        let t = props.get("transforms").map(parse_transforms).transpose()?;
                        per_series.push((label.to_string(), t.unwrap_or_default()));
                    }
                    None => return Err(config_err(format!("unknown section [{other}]"))),
                },
            }
        }

        for s in &mut cfg.series {
            s.transforms = per_series
                .iter()
                .find(|(l, _)| *l == s.label)
                .map(|(_, t)| t.clone())
                .unwrap_or_else(|| default_transforms.clone());
        }
        cfg.window = match (from, to) {
            (None, None) => None,
            (f, t) => Some(Window {
                from: f.unwrap_or(i64::MIN),
                to: t.unwrap_or(i64::MAX),
            }),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if let Some(w) = self.window {
            if w.from > w.to {
                return Err(config_err(format!("window {}-{} is empty", w.from, w.to)));
            }
        }
        if let Some(s) = self.series.iter().find(|s| s.label.is_empty()) {
            return Err(config_err(format!("empty dataset label in {:?}", s)));
        }
        if !(self.audit.sigma >= 0.0 && self.audit.sigma.is_finite()) {
            return Err(config_err(format!("[audit] sigma = {} must be non-negative", self.audit.sigma)));
        }
        Ok(())
    }

    pub fn transforms_for(&self, label: &str) -> Vec<TransformTag> {
        self.series
            .iter()
            .find(|s| s.label == label)
            .map(|s| s.transforms.clone())
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inline_comments_are_ignored() {
        let cfg = AnalysisConfig::from_ini_str(
            "; header\n[unitroot]\nmax_lag = 6   ; used with auto\nlags = auto # ic\n[data]\ndir = a;b\n",
        )
        .unwrap();
        assert_eq!(cfg.data_dir, Some(PathBuf::from("a;b")));
        assert!(matches!(cfg.unitroot.lags, LagChoice::Auto { max_lag: 6, .. }));
    }

    #[test]
    fn full_config_round_trip() {
        let text = "\
[data]
dir = data
series = a, b
transforms = log
from = 1920
to = 1999

[series.b]
transforms = log, diff

[analysis]
level = 0.10

[unitroot]
specs = single_mean, trend
lags = auto
max_lag = 3
criterion = bic
pp_bandwidth = 2

[johansen]
lag_p = auto
det = unrestricted_constant

[audit]
mu = -0.1
trials = 50
seed = 9
override_screen = yes
";
        let cfg = AnalysisConfig::from_ini_str(text).unwrap();
        assert_eq!(cfg.series[0].transforms, vec![TransformTag::Log]);
        assert_eq!(
            cfg.series[1].transforms,
            vec![TransformTag::Log, TransformTag::FirstDifference]
        );
        assert_eq!(cfg.window, Some(Window { from: 1920, to: 1999 }));
        assert_eq!(cfg.level, SignificanceLevel::Ten);
        assert_eq!(
            cfg.unitroot.lags,
            LagChoice::Auto {
                max_lag: 3,
                criterion: InfoCriterion::Bic
            }
        );
        assert_eq!(cfg.unitroot.specs.len(), 2);
        assert_eq!(cfg.unitroot.pp_bandwidth, Some(2));
        assert_eq!(cfg.johansen.lag_p, None);
        assert_eq!(cfg.johansen.det, VecmDeterministic::UnrestrictedConstant);
        assert_eq!(cfg.audit.n_trials, 50);
        assert!(cfg.audit.override_screen);
        assert_eq!(cfg.audit.sigma, 0.7);
    }

    #[test]
    fn defaults_and_errors() {
        let cfg = AnalysisConfig::from_ini_str("").unwrap();
        assert_eq!(cfg.level, SignificanceLevel::Five);
        assert_eq!(cfg.johansen.lag_p, Some(1));
        assert_eq!(cfg.audit.n_trials, 1000);
        for bad in [
            "[nope]\nx = 1",
            "[data]\nfrom = 2000\nto = 1990",
            "[analysis]\nlevel = 0.07",
            "[unitroot]\nlagz = 1",
            "[johansen]\nlag_p = 0",
            "[data]\ntransforms = cube",
            "[audit]\nsigma = -1",
        ] {
            assert!(
                matches!(AnalysisConfig::from_ini_str(bad), Err(PipelineError::Config(_))),
                "{bad}"
            );
        }
    }
}
