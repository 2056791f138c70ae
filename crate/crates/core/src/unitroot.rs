//! Augmented Dickey-Fuller and Phillips-Perron unit-root tests.
//!
//! Both tests share the Dickey-Fuller regression
//!
//! ```text
//! Δy_t = [deterministics] + γ y_{t-1} + Σ_{i=1..p} φ_i Δy_{t-i} + e_t
//! ```
//!
//! estimated on the observations left after dropping the first `p + 1`.
//! The null is a unit root (`γ = 0`); small p-values reject it.
//!
//! p-values come from MacKinnon's response surfaces for the tau statistic
//! (one variable, asymptotic), shifted by the finite-sample correction of
//! the 5% critical value so that `p(cv_5%(n)) = 0.05` at the actual sample
//! size. Rho is reported as a diagnostic without a p-value.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::level::SignificanceLevel;
use crate::regress::{self, DesignMatrix, InfoCriterion, RegressError};
use crate::series::TimeSeries;

/// Extra observations required beyond the lag order.
pub const MIN_SAMPLE_OVER_LAGS: usize = 10;
/// Minimum length for the Phillips-Perron test.
pub const PP_MIN_SAMPLE: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitRootError {
    #[error("sample too short: need at least {needed} observations, have {have}")]
    TooShort { needed: usize, have: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Regress(#[from] RegressError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterministicSpec {
    /// No deterministic regressors.
    ZeroMean,
    /// Intercept.
    SingleMean,
    /// Intercept and linear time trend.
    Trend,
}

impl DeterministicSpec {
    pub const ALL: [DeterministicSpec; 3] = [Self::ZeroMean, Self::SingleMean, Self::Trend];

    pub fn name(self) -> &'static str {
        match self {
            Self::ZeroMean => "zero_mean",
            Self::SingleMean => "single_mean",
            Self::Trend => "trend",
        }
    }

    fn surface(self) -> &'static Surface {
        match self {
            Self::ZeroMean => &ZERO_MEAN,
            Self::SingleMean => &SINGLE_MEAN,
            Self::Trend => &TREND,
        }
    }
}

impl std::str::FromStr for DeterministicSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "zero_mean" | "zero" | "nc" | "n" => Ok(Self::ZeroMean),
            "single_mean" | "single" | "c" => Ok(Self::SingleMean),
            "trend" | "ct" => Ok(Self::Trend),
            other => Err(format!("unknown deterministic spec `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitRootTest {
    Adf,
    Pp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootResult {
    pub test: UnitRootTest,
    pub spec: DeterministicSpec,
    /// Augmentation lags for ADF, Newey-West bandwidth for PP.
    pub lags: usize,
    pub rho_stat: f64,
    pub tau_stat: f64,
    pub p_value: f64,
    /// Set when tau fell outside the range the response surface covers.
    pub p_value_clamped: bool,
    pub nobs_effective: usize,
}

impl UnitRootResult {
    pub fn rejects(&self, level: SignificanceLevel) -> bool {
        level.rejects(self.p_value)
    }
}

/// Response-surface coefficients for one deterministic case.
struct Surface {
    tau_star: f64,
    tau_min: f64,
    tau_max: f64,
    /// `p = Φ(a + b τ + c τ²)` for `τ ≤ tau_star`.
    small: [f64; 3],
    /// `p = Φ(a + b τ + c τ² + d τ³)` for `τ > tau_star`.
    large: [f64; 4],
    /// 5% critical value `b0 + b1/n + b2/n² + b3/n³`.
    cv5: [f64; 4],
}

const ZERO_MEAN: Surface = Surface {
    tau_star: -1.04,
    tau_min: -19.04,
    tau_max: f64::INFINITY,
    small: [0.6344, 1.2378, 3.2496e-2],
    large: [0.4797, 9.3557e-1, -0.6999e-1, 3.3066e-2],
    cv5: [-1.94100, -0.2686, -3.365, 31.223],
};

const SINGLE_MEAN: Surface = Surface {
    tau_star: -1.61,
    tau_min: -18.83,
    tau_max: 2.74,
    small: [2.1659, 1.4412, 3.8269e-2],
    large: [1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2],
    cv5: [-2.86154, -2.8903, -4.234, -40.040],
};

const TREND: Surface = Surface {
    tau_star: -2.89,
    tau_min: -16.18,
    tau_max: 0.7,
    small: [3.2512, 1.6047, 4.9588e-2],
    large: [2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2],
    cv5: [-3.41049, -4.3904, -9.036, -45.374],
};

impl Surface {
    /// Local maximum of the cubic branch, if it lies inside the tabulated
    /// range. Above it the cubic turns down, so evaluation stops there to
    /// keep the p-value non-decreasing.
    fn large_peak(&self) -> f64 {
        let [_, b, c, d] = self.large;
        let (qa, qb, qc) = (3.0 * d, 2.0 * c, b);
        let disc = qb * qb - 4.0 * qa * qc;
        if qa == 0.0 || disc < 0.0 {
            return f64::INFINITY;
        }
        [(-qb + disc.sqrt()) / (2.0 * qa), (-qb - disc.sqrt()) / (2.0 * qa)]
            .into_iter()
            .filter(|&r| r > self.tau_star && r < self.tau_max && 2.0 * c + 6.0 * d * r < 0.0)
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// p-value with a flag for evaluations outside the tabulated tau range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValue {
    pub value: f64,
    pub clamped: bool,
}

/// 5% critical value of tau at sample size `nobs`.
pub fn df_critical_value_5pct(spec: DeterministicSpec, nobs: usize) -> f64 {
    let [b0, b1, b2, b3] = spec.surface().cv5;
    let n = nobs as f64;
    b0 + b1 / n + b2 / (n * n) + b3 / (n * n * n)
}

/// p-value of the Dickey-Fuller tau statistic. Non-decreasing in `tau`:
/// the test is left-tailed.
///
/// Outside `[tau_min, tau_max]` the surface is evaluated at the nearest
/// edge and the result is flagged.
pub fn df_pvalue_detail(tau: f64, spec: DeterministicSpec, nobs: usize) -> PValue {
    let surface = spec.surface();
    let shift = df_critical_value_5pct(spec, nobs) - surface.cv5[0];
    let mut t = tau - shift;
    let mut clamped = false;
    if t.is_nan() {
        return PValue {
            value: f64::NAN,
            clamped: true,
        };
    }
    if t < surface.tau_min {
        t = surface.tau_min;
        clamped = true;
    } else if t > surface.tau_max {
        t = surface.tau_max;
        clamped = true;
    }
    let z = if t <= surface.tau_star {
        let [a, b, c] = surface.small;
        a + t * (b + t * c)
    } else {
        let [a, b, c, d] = surface.large;
        let t = t.min(surface.large_peak());
        a + t * (b + t * (c + t * d))
    };
    PValue {
        value: normal_cdf(z),
        clamped,
    }
}

pub fn df_pvalue(tau: f64, spec: DeterministicSpec, nobs: usize) -> f64 {
    df_pvalue_detail(tau, spec, nobs).value
}

/// Fails when every first difference is the same (a constant series or an
/// exact line), which leaves the test regression without noise.
fn check_not_degenerate(y: &[f64]) -> Result<(), UnitRootError> {
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let d0 = y[1] - y[0];
    if y.windows(2).all(|w| ((w[1] - w[0]) - d0).abs() <= 1e-12 * scale) {
        let what = if d0.abs() <= 1e-12 * scale {
            "constant series"
        } else {
            "exact linear trend"
        };
        return Err(UnitRootError::Degenerate(what.into()));
    }
    Ok(())
}

/// Builds the Dickey-Fuller regression with rows `first..y.len()`.
/// Column 0 is always `y_{t-1}`.
fn df_regression(
    y: &[f64],
    spec: DeterministicSpec,
    lags: usize,
    first: usize,
) -> Result<(DesignMatrix, Vec<f64>), RegressError> {
    debug_assert!(first > lags);
    let rows = first..y.len();
    let n = rows.len();
    let dy = |t: usize| y[t] - y[t - 1];
    let mut design = DesignMatrix::new(n).with("y_lag", rows.clone().map(|t| y[t - 1]).collect())?;
    match spec {
        DeterministicSpec::ZeroMean => {}
        DeterministicSpec::SingleMean => design.push("const", vec![1.0; n])?,
        DeterministicSpec::Trend => {
            design.push("const", vec![1.0; n])?;
            design.push("trend", (1..=n).map(|t| t as f64).collect())?;
        }
    }
    for i in 1..=lags {
        design.push(format!("dy_lag{i}"), rows.clone().map(|t| dy(t - i)).collect())?;
    }
    let response = rows.map(dy).collect();
    Ok((design, response))
}

fn require(have: usize, needed: usize) -> Result<(), UnitRootError> {
    if have < needed {
        return Err(UnitRootError::TooShort { needed, have });
    }
    Ok(())
}

/// ADF test on raw values.
pub fn adf_values(
    y: &[f64],
    spec: DeterministicSpec,
    lags: usize,
) -> Result<UnitRootResult, UnitRootError> {
    require(y.len(), lags + MIN_SAMPLE_OVER_LAGS)?;
    check_not_degenerate(y)?;
    let (design, response) = df_regression(y, spec, lags, lags + 1)?;
    let fit = regress::ols_fit(&design, &response)?;
    if fit.degenerate {
        return Err(UnitRootError::Degenerate("exact fit of the test regression".into()));
    }
    let n = fit.nobs;
    let gamma = fit.coefficients[0];
    let tau = fit.t_ratio(0);
    let p = df_pvalue_detail(tau, spec, n);
    Ok(UnitRootResult {
        test: UnitRootTest::Adf,
        spec,
        lags,
        rho_stat: n as f64 * gamma,
        tau_stat: tau,
        p_value: p.value,
        p_value_clamped: p.clamped,
        nobs_effective: n,
    })
}

pub fn adf_test(
    s: &TimeSeries,
    spec: DeterministicSpec,
    lags: usize,
) -> Result<UnitRootResult, UnitRootError> {
    adf_values(s.values(), spec, lags)
}

/// Phillips-Perron test on raw values.
pub fn pp_values(
    y: &[f64],
    spec: DeterministicSpec,
    bandwidth: usize,
) -> Result<UnitRootResult, UnitRootError> {
    require(y.len(), PP_MIN_SAMPLE)?;
    check_not_degenerate(y)?;
    let (design, response) = df_regression(y, spec, 0, 1)?;
    let fit = regress::ols_fit(&design, &response)?;
    if fit.degenerate {
        return Err(UnitRootError::Degenerate("exact fit of the test regression".into()));
    }
    let n = fit.nobs as f64;
    let gamma = fit.coefficients[0];
    let se = fit.standard_errors[0];
    let s = fit.sigma2.sqrt();
    let t_gamma = gamma / se;

    // Short-run variance uses the same estimator with zero bandwidth, so a
    // zero bandwidth reproduces the Dickey-Fuller statistics exactly.
    let short_run = regress::longrun_variance(&fit.residuals, 0)?;
    let long_run = regress::longrun_variance(&fit.residuals, bandwidth)?;
    if long_run <= 0.0 || short_run <= 0.0 {
        return Err(UnitRootError::Degenerate("zero residual variance".into()));
    }
    let excess = long_run - short_run;
    let tau = (short_run / long_run).sqrt() * t_gamma
        - 0.5 * excess / long_run.sqrt() * (n * se / s);
    let rho = n * gamma - 0.5 * (n * n * se * se / fit.sigma2) * excess;
    let p = df_pvalue_detail(tau, spec, fit.nobs);
    Ok(UnitRootResult {
        test: UnitRootTest::Pp,
        spec,
        lags: bandwidth,
        rho_stat: rho,
        tau_stat: tau,
        p_value: p.value,
        p_value_clamped: p.clamped,
        nobs_effective: fit.nobs,
    })
}

pub fn pp_test(
    s: &TimeSeries,
    spec: DeterministicSpec,
    bandwidth: usize,
) -> Result<UnitRootResult, UnitRootError> {
    pp_values(s.values(), spec, bandwidth)
}

/// Lag in `0..=max_lag` minimizing the criterion, every candidate fitted on
/// the same `T - max_lag - 1` observations. Ties go to the smaller lag.
pub fn select_lag_values(
    y: &[f64],
    spec: DeterministicSpec,
    max_lag: usize,
    criterion: InfoCriterion,
) -> Result<usize, UnitRootError> {
    require(y.len(), max_lag + MIN_SAMPLE_OVER_LAGS)?;
    check_not_degenerate(y)?;
    let mut best: Option<(usize, f64)> = None;
    for lag in 0..=max_lag {
        let (design, response) = df_regression(y, spec, lag, max_lag + 1)?;
        let fit = regress::ols_fit(&design, &response)?;
        let value = criterion
            .pick(&fit)
            .ok_or_else(|| UnitRootError::Degenerate(format!("exact fit at lag {lag}")))?;
        if best.map_or(true, |(_, b)| value < b) {
            best = Some((lag, value));
        }
    }
    Ok(best.map(|(lag, _)| lag).unwrap_or(0))
}

pub fn select_lag(
    s: &TimeSeries,
    spec: DeterministicSpec,
    max_lag: usize,
    criterion: InfoCriterion,
) -> Result<usize, UnitRootError> {
    select_lag_values(s.values(), spec, max_lag, criterion)
}

/// Outcome of the level-series I(1) screen: ADF single-mean and trend
/// tests must both fail to reject the unit root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenOutcome {
    pub passed: bool,
    pub single_mean_p: f64,
    pub trend_p: f64,
}

pub fn i1_screen(
    y: &[f64],
    level: SignificanceLevel,
    lags: usize,
) -> Result<ScreenOutcome, UnitRootError> {
    let single_mean_p = adf_values(y, DeterministicSpec::SingleMean, lags)?.p_value;
    let trend_p = adf_values(y, DeterministicSpec::Trend, lags)?.p_value;
    Ok(ScreenOutcome {
        passed: !level.rejects(single_mean_p) && !level.rejects(trend_p),
        single_mean_p,
        trend_p,
    })
}
