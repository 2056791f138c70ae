//! End-to-end workflow: stationarity screen, the I(1) gate, Johansen, audit,
//! and report output.

pub mod config;
pub mod plot;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::johansen::{self, JohansenError, JohansenResult, VecmSpec, MAX_AUTO_LAG};
use crate::level::SignificanceLevel;
use crate::montecarlo::{self, AuditReport, AuditTestConfig, MonteCarloError, RandomWalkSpec};
use crate::regress::{self, DesignMatrix, OlsResult, RegressError};
use crate::series::{self, DatasetRegistry, SeriesError, TimeSeries, TransformTag};
use crate::unitroot::{self, DeterministicSpec, UnitRootError, UnitRootResult};

pub use config::{AnalysisConfig, AuditSettings, JohansenConfig, LagChoice, SeriesRef, UnitRootConfig, Window};
pub use plot::{emit_plot, PlotOutput};

pub const SCHEMA_VERSION: u32 = 1;
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Name of the report field excluded from byte-level determinism checks.
pub const TIMESTAMP_FIELD: &str = "generated_at";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("refusing to run the cointegration test: {0}; pass --force to run anyway")]
    GateRefused(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    UnitRoot(#[from] UnitRootError),
    #[error(transparent)]
    Johansen(#[from] JohansenError),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
}

impl PipelineError {
    /// 1 usage/config, 2 methodological refusal, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Io { .. } => 1,
            PipelineError::GateRefused(_) => 2,
            PipelineError::Series(e) => match e {
                SeriesError::NonPositive { .. }
                | SeriesError::ZeroDenominator { .. }
                | SeriesError::NonFinite { .. } => 3,
                _ => 1,
            },
            PipelineError::MonteCarlo(e) => match e {
                MonteCarloError::NoTrials | MonteCarloError::InvalidParams(_) => 1,
                MonteCarloError::TargetFailsScreen { .. } => 2,
                _ => 3,
            },
            PipelineError::UnitRoot(_) | PipelineError::Johansen(_) | PipelineError::Regress(_) => 3,
        }
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| PipelineError::Io {
            path: parent.display().to_string(),
            reason: e.to_string(),
        })?;
    }
    std::fs::write(path, contents).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

fn registry_for(config: &AnalysisConfig) -> Result<DatasetRegistry, PipelineError> {
    config
        .data_dir
        .as_ref()
        .map(DatasetRegistry::new)
        .ok_or_else(|| PipelineError::Config("no data directory: set --data-dir or SPURION_DATA_DIR".into()))
}

/// Loads one registry series, applies its transforms in order, then the window.
pub fn load_one(
    registry: &DatasetRegistry,
    label: &str,
    transforms: &[TransformTag],
    window: Option<Window>,
) -> Result<TimeSeries, PipelineError> {
    let mut s = registry.load(label)?;
    for &t in transforms {
        s = series::apply_transform(&s, t)?;
    }
    if let Some(w) = window {
        s = series::restrict_window(&s, w.from, w.to)?;
    }
    Ok(s)
}

/// Every configured series, transformed, windowed and aligned.
pub fn load_series(config: &AnalysisConfig) -> Result<Vec<TimeSeries>, PipelineError> {
    if config.series.is_empty() {
        return Err(PipelineError::Config("no series configured".into()));
    }
    let registry = registry_for(config)?;
    let loaded = config
        .series
        .iter()
        .map(|r| load_one(&registry, &r.label, &r.transforms, config.window))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(series::align_all(&loaded)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecVerdict {
    pub spec: DeterministicSpec,
    /// Some level test rejects the unit root.
    pub levels_reject: bool,
    /// Every difference test rejects the unit root.
    pub differences_reject: bool,
    pub consistent_with_i1: bool,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesStationarity {
    pub label: String,
    pub start: i64,
    pub end: i64,
    pub nobs: usize,
    pub transforms: Vec<TransformTag>,
    pub adf_lags_levels: usize,
    pub adf_lags_differences: usize,
    pub pp_bandwidth_levels: usize,
    pub pp_bandwidth_differences: usize,
    /// ADF then PP for each configured spec.
    pub levels: Vec<UnitRootResult>,
    pub differences: Vec<UnitRootResult>,
    pub verdicts: Vec<SpecVerdict>,
    pub consistent_with_i1: bool,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub level: SignificanceLevel,
    pub series: Vec<SeriesStationarity>,
}

impl StationarityReport {
    pub fn all_consistent_with_i1(&self) -> bool {
        self.series.iter().all(|s| s.consistent_with_i1)
    }
}

fn choose_lags(y: &[f64], cfg: &UnitRootConfig) -> Result<usize, UnitRootError> {
    match cfg.lags {
        LagChoice::Fixed { lags } => Ok(lags),
        LagChoice::Auto { max_lag, criterion } => {
            unitroot::select_lag_values(y, DeterministicSpec::SingleMean, max_lag, criterion)
        }
    }
}

fn unit_root_battery(
    y: &[f64],
    cfg: &UnitRootConfig,
) -> Result<(usize, usize, Vec<UnitRootResult>), UnitRootError> {
    let lags = choose_lags(y, cfg)?;
    let bandwidth = cfg
        .pp_bandwidth
        .unwrap_or_else(|| regress::default_bandwidth(y.len()));
    let mut out = Vec::with_capacity(2 * cfg.specs.len());
    for &spec in &cfg.specs {
        out.push(unitroot::adf_values(y, spec, lags)?);
        out.push(unitroot::pp_values(y, spec, bandwidth)?);
    }
    Ok((lags, bandwidth, out))
}

fn spec_phrase(spec: DeterministicSpec) -> &'static str {
    match spec {
        DeterministicSpec::ZeroMean => "zero mean",
        DeterministicSpec::SingleMean => "single mean",
        DeterministicSpec::Trend => "trend",
    }
}

/// ADF and PP on the levels and first differences of one series, with
/// per-spec verdicts: consistent with I(1) when no level test rejects and
/// every difference test rejects.
pub fn stationarity_of(
    s: &TimeSeries,
    cfg: &UnitRootConfig,
    level: SignificanceLevel,
) -> Result<SeriesStationarity, PipelineError> {
    let diff = series::first_difference(s)?;
    let (lags_l, bw_l, levels) = unit_root_battery(s.values(), cfg)?;
    let (lags_d, bw_d, differences) = unit_root_battery(diff.values(), cfg)?;
    let verdicts: Vec<SpecVerdict> = cfg
        .specs
        .iter()
        .map(|&spec| {
            let levels_reject = levels.iter().filter(|r| r.spec == spec).any(|r| r.rejects(level));
            let differences_reject = differences
                .iter()
                .filter(|r| r.spec == spec)
                .all(|r| r.rejects(level));
            let ok = !levels_reject && differences_reject;
            let verdict = if ok {
                "consistent with I(1)".to_string()
            } else if levels_reject {
                format!("not I(1) under {} spec", spec_phrase(spec))
            } else {
                format!("not I(1) under {} spec: differences not stationary", spec_phrase(spec))
            };
            SpecVerdict {
                spec,
                levels_reject,
                differences_reject,
                consistent_with_i1: ok,
                verdict,
            }
        })
        .collect();
    let consistent = verdicts.iter().all(|v| v.consistent_with_i1);
    let verdict = if consistent {
        "consistent with I(1)".to_string()
    } else {
        verdicts
            .iter()
            .filter(|v| !v.consistent_with_i1)
            .map(|v| v.verdict.as_str())
            .collect::<Vec<_>>()
            .join("; ")
    };
    Ok(SeriesStationarity {
        label: s.label().to_string(),
        start: s.start(),
        end: s.end(),
        nobs: s.len(),
        transforms: s.transforms().to_vec(),
        adf_lags_levels: lags_l,
        adf_lags_differences: lags_d,
        pp_bandwidth_levels: bw_l,
        pp_bandwidth_differences: bw_d,
        levels,
        differences,
        verdicts,
        consistent_with_i1: consistent,
        verdict,
    })
}

pub fn stationarity_of_all(
    series: &[TimeSeries],
    config: &AnalysisConfig,
) -> Result<StationarityReport, PipelineError> {
    Ok(StationarityReport {
        level: config.level,
        series: series
            .iter()
            .map(|s| stationarity_of(s, &config.unitroot, config.level))
            .collect::<Result<_, _>>()?,
    })
}

pub fn run_stationarity(config: &AnalysisConfig) -> Result<StationarityReport, PipelineError> {
    let series = load_series(config)?;
    stationarity_of_all(&series, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateStatus {
    pub passed: bool,
    pub forced: bool,
    pub failing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub label: String,
    pub beta: Vec<f64>,
    pub adf: Vec<UnitRootResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CointegrationReport {
    pub stationarity: StationarityReport,
    pub gate: GateStatus,
    pub lag_p: usize,
    pub lag_p_selected_by_aic: bool,
    pub johansen: JohansenResult,
    pub residual: Option<ResidualReport>,
}

/// Johansen plus the residual check on already loaded, aligned series.
pub fn cointegration_of(
    series: &[TimeSeries],
    config: &AnalysisConfig,
    force: bool,
) -> Result<CointegrationReport, PipelineError> {
    if series.len() < 2 {
        return Err(PipelineError::Config(format!(
            "cointegration needs at least 2 series, got {}",
            series.len()
        )));
    }
    let stationarity = stationarity_of_all(series, config)?;
    let failing: Vec<String> = stationarity
        .series
        .iter()
        .filter(|s| !s.consistent_with_i1)
        .map(|s| format!("`{}` is {}", s.label, s.verdict))
        .collect();
    let gate = GateStatus {
        passed: failing.is_empty(),
        forced: force && !failing.is_empty(),
        failing,
    };
    if !gate.passed && !force {
        return Err(PipelineError::GateRefused(gate.failing.join("; ")));
    }

    let (lag_p, auto) = match config.johansen.lag_p {
        Some(p) => (p, false),
        None => {
            let data: Vec<&[f64]> = series.iter().map(|s| s.values()).collect();
            (johansen::select_var_order(&data, MAX_AUTO_LAG, config.johansen.det)?, true)
        }
    };
    let spec = VecmSpec::new(lag_p, config.johansen.det)?;
    let result = johansen::johansen_trace_test(series, &spec, config.level)?;
    let residual = if result.selected_rank >= 1 {
        let z = johansen::cointegrating_residual(series, &result)?;
        let lags = choose_lags(z.values(), &config.unitroot)?;
        let adf = config
            .unitroot
            .specs
            .iter()
            .map(|&s| unitroot::adf_values(z.values(), s, lags))
            .collect::<Result<Vec<_>, _>>()?;
        Some(ResidualReport {
            label: z.label().to_string(),
            beta: result.beta[0].clone(),
            adf,
        })
    } else {
        None
    };
    Ok(CointegrationReport {
        stationarity,
        gate,
        lag_p,
        lag_p_selected_by_aic: auto,
        johansen: result,
        residual,
    })
}

pub fn run_cointegration(config: &AnalysisConfig, force: bool) -> Result<CointegrationReport, PipelineError> {
    let series = load_series(config)?;
    cointegration_of(&series, config, force)
}

/// Audit of the configured target against drifted random walks.
pub fn run_audit(config: &AnalysisConfig, force: bool) -> Result<AuditReport, PipelineError> {
    let a = &config.audit;
    let label = a
        .target
        .clone()
        .or_else(|| config.series.first().map(|s| s.label.clone()))
        .ok_or_else(|| PipelineError::Config("no audit target configured".into()))?;
    let registry = registry_for(config)?;
    let target = load_one(&registry, &label, &config.transforms_for(&label), config.window)?;
    let walk = RandomWalkSpec {
        len: target.len(),
        mu: a.mu,
        sigma: a.sigma,
        y0: a.y0,
        seed: 0,
    };
    let test = AuditTestConfig {
        vecm: VecmSpec::new(config.johansen.lag_p.unwrap_or(1), config.johansen.det)?,
        level: config.level,
    };
    Ok(montecarlo::spurious_audit(
        &target,
        &walk,
        a.n_trials,
        test,
        a.seed,
        a.override_screen || force,
    )?)
}

/// Levels OLS of the first series on a constant and the second.
pub fn levels_regression(y: &TimeSeries, x: &TimeSeries) -> Result<OlsResult, PipelineError> {
    let (y, x) = series::align_pair(y, x)?;
    let n = y.len();
    let design = DesignMatrix::new(n)
        .with("const", vec![1.0; n])?
        .with(x.label(), x.values().to_vec())?;
    Ok(regress::ols_fit(&design, y.values())?)
}

/// Versioned wrapper written around every JSON result.
#[derive(Debug, Clone, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub schema_version: u32,
    pub engine_version: &'static str,
    pub command: &'a str,
    pub config: &'a AnalysisConfig,
    pub result: &'a T,
    pub generated_at: String,
}

impl<'a, T: Serialize> Report<'a, T> {
    pub fn new(command: &'a str, config: &'a AnalysisConfig, result: &'a T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            engine_version: ENGINE_VERSION,
            command,
            config,
            result,
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn to_json(&self) -> Result<String, PipelineError> {
        serde_json::to_string_pretty(self)
            .map(|s| s + "\n")
            .map_err(|e| PipelineError::Io {
                path: "<report>".into(),
                reason: e.to_string(),
            })
    }
}

/// Drops the timestamp so two reports can be compared byte for byte.
pub fn strip_timestamp(json: &str) -> String {
    let key = format!("\"{TIMESTAMP_FIELD}\":");
    json.lines()
        .filter(|l| !l.trim_start().starts_with(&key))
        .collect::<Vec<_>>()
        .join("\n")
}
