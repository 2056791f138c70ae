//! Ordinary least squares, information criteria and long-run variance.
//!
//! Fits go through a Householder QR of the column-equilibrated design
//! matrix. A design is declared rank-deficient when the smallest diagonal
//! entry of the triangular factor falls below [`RANK_TOLERANCE`] times the
//! largest. Columns are scaled to unit Euclidean norm before the
//! factorization, so the check is insensitive to the units of a regressor
//! (a linear trend next to small lagged differences, say).
//!
//! The Gaussian log-likelihood is the concentrated one,
//! `-n/2 * (ln(2π) + ln(RSS/n) + 1)`, with `k` counting every column of the
//! design. `AIC = -2 loglik + 2k`, `BIC = -2 loglik + k ln n`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative threshold on the diagonal of the QR triangular factor.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// A fit whose residual sum of squares is below this fraction of `Σ y²`
/// is treated as exact.
const DEGENERATE_RSS: f64 = 1e-24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("design matrix is rank deficient at column `{column}` (|r_jj|/max|r_ii| = {ratio:.3e} < {RANK_TOLERANCE:e})")]
    RankDeficient { column: String, ratio: f64 },
    #[error("{rows} observations leave no degrees of freedom for {columns} regressors")]
    NoDegreesOfFreedom { rows: usize, columns: usize },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("bandwidth {bandwidth} out of range for {len} residuals")]
    BandwidthOutOfRange { bandwidth: usize, len: usize },
}

/// Regressors stored column by column, each with a name.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl DesignMatrix {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            names: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn from_columns<S: Into<String>>(
        columns: impl IntoIterator<Item = (S, Vec<f64>)>,
    ) -> Result<Self, RegressError> {
        let mut iter = columns.into_iter().peekable();
        let rows = iter.peek().map(|(_, c)| c.len()).unwrap_or(0);
        let mut design = Self::new(rows);
        for (name, column) in iter {
            design.push(name, column)?;
        }
        Ok(design)
    }

    pub fn push(&mut self, name: impl Into<String>, column: Vec<f64>) -> Result<(), RegressError> {
        let name = name.into();
        if column.len() != self.rows {
            return Err(RegressError::DimensionMismatch(format!(
                "column `{name}` has {} rows, design has {}",
                column.len(),
                self.rows
            )));
        }
        if column.iter().any(|v| !v.is_finite()) {
            return Err(RegressError::NonFinite("design matrix"));
        }
        self.names.push(name);
        self.columns.push(column);
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, column: Vec<f64>) -> Result<Self, RegressError> {
        self.push(name, column)?;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    fn has_intercept(&self) -> bool {
        self.columns
            .iter()
            .any(|c| c.first().is_some_and(|&v0| v0 != 0.0 && c.iter().all(|&v| v == v0)))
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.ncols(), |i, j| self.columns[j][i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub r_squared: f64,
    /// `RSS / (n - k)`.
    pub sigma2: f64,
    /// `None` for a degenerate (exact) fit.
    pub loglik: Option<f64>,
    pub aic: Option<f64>,
    pub bic: Option<f64>,
    pub nobs: usize,
    pub degenerate: bool,
}

impl OlsResult {
    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|j| self.coefficients[j])
    }

    pub fn t_ratio(&self, j: usize) -> f64 {
        self.coefficients[j] / self.standard_errors[j]
    }
}

/// Information criteria of a fit, or the explicit degenerate marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criteria {
    Finite { aic: f64, bic: f64 },
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InfoCriterion {
    #[default]
    Aic,
    Bic,
}

impl InfoCriterion {
    pub fn pick(self, fit: &OlsResult) -> Option<f64> {
        match self {
            InfoCriterion::Aic => fit.aic,
            InfoCriterion::Bic => fit.bic,
        }
    }
}

impl std::str::FromStr for InfoCriterion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aic" => Ok(Self::Aic),
            "bic" => Ok(Self::Bic),
            other => Err(format!("unknown information criterion `{other}`")),
        }
    }
}

/// Thin QR of the column-scaled design: `X = Q R D`.
struct ScaledQr {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    scale: Vec<f64>,
}

fn scaled_qr(x: &DMatrix<f64>, names: &[String]) -> Result<ScaledQr, RegressError> {
    let scale: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    if let Some(j) = scale.iter().position(|&s| s == 0.0) {
        return Err(RegressError::RankDeficient {
            column: names[j].clone(),
            ratio: 0.0,
        });
    }
    let mut xs = x.clone();
    for (j, s) in scale.iter().enumerate() {
        xs.column_mut(j).unscale_mut(*s);
    }
    let qr = xs.qr();
    let r = qr.r();
    let diag: Vec<f64> = r.diagonal().iter().map(|v| v.abs()).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    for (j, d) in diag.iter().enumerate() {
        let ratio = d / max;
        if !(ratio >= RANK_TOLERANCE) {
            return Err(RegressError::RankDeficient {
                column: names[j].clone(),
                ratio,
            });
        }
    }
    Ok(ScaledQr {
        q: qr.q(),
        r,
        scale,
    })
}

/// Least-squares fit of `y` on the columns of `x`.
pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<OlsResult, RegressError> {
    let n = x.rows();
    let k = x.ncols();
    if y.len() != n {
        return Err(RegressError::DimensionMismatch(format!(
            "y has {} rows, design has {n}",
            y.len()
        )));
    }
    if k == 0 {
        return Err(RegressError::DimensionMismatch("design has no columns".into()));
    }
    if n <= k {
        return Err(RegressError::NoDegreesOfFreedom { rows: n, columns: k });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(RegressError::NonFinite("response"));
    }

    let xm = x.to_matrix();
    let yv = DVector::from_column_slice(y);
    let ScaledQr { q, r, scale } = scaled_qr(&xm, x.names())?;

    let qty = q.transpose() * &yv;
    let beta_scaled = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| RegressError::RankDeficient {
            column: x.names()[k - 1].clone(),
            ratio: 0.0,
        })?;
    let coefficients: Vec<f64> = beta_scaled
        .iter()
        .zip(&scale)
        .map(|(b, s)| b / s)
        .collect();

    let fitted = &xm * DVector::from_column_slice(&coefficients);
    let residuals: Vec<f64> = yv.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let sigma2 = rss / (n - k) as f64;

    // diag((X'X)^-1) = diag(D^-1 R^-1 R^-T D^-1)
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| RegressError::RankDeficient {
            column: x.names()[k - 1].clone(),
            ratio: 0.0,
        })?;
    let standard_errors: Vec<f64> = (0..k)
        .map(|j| {
            let row_sq: f64 = r_inv.row(j).iter().map(|v| v * v).sum();
            (sigma2 * row_sq).sqrt() / scale[j]
        })
        .collect();

    let sum_sq: f64 = y.iter().map(|v| v * v).sum();
    let tss = if x.has_intercept() {
        let mean = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - mean) * (v - mean)).sum()
    } else {
        sum_sq
    };
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };

    let degenerate = sum_sq == 0.0 || rss <= DEGENERATE_RSS * sum_sq;
    let (loglik, aic, bic) = if degenerate {
        (None, None, None)
    } else {
        let nf = n as f64;
        let kf = k as f64;
        let ll = -0.5 * nf * ((2.0 * std::f64::consts::PI).ln() + (rss / nf).ln() + 1.0);
        (Some(ll), Some(-2.0 * ll + 2.0 * kf), Some(-2.0 * ll + kf * nf.ln()))
    };

    Ok(OlsResult {
        names: x.names().to_vec(),
        coefficients,
        standard_errors,
        residuals,
        rss,
        r_squared,
        sigma2,
        loglik,
        aic,
        bic,
        nobs: n,
        degenerate,
    })
}

pub fn information_criteria(fit: &OlsResult) -> Criteria {
    match (fit.aic, fit.bic) {
        (Some(aic), Some(bic)) if !fit.degenerate => Criteria::Finite { aic, bic },
        _ => Criteria::Degenerate,
    }
}

/// Residuals of every column of `y` after projecting on the columns of `z`.
/// With no regressors `y` comes back unchanged.
pub fn residualize(z: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>, RegressError> {
    if z.nrows() != y.nrows() {
        return Err(RegressError::DimensionMismatch(format!(
            "regressors have {} rows, responses {}",
            z.nrows(),
            y.nrows()
        )));
    }
    if z.ncols() == 0 {
        return Ok(y.clone());
    }
    if z.nrows() <= z.ncols() {
        return Err(RegressError::NoDegreesOfFreedom {
            rows: z.nrows(),
            columns: z.ncols(),
        });
    }
    let names: Vec<String> = (0..z.ncols()).map(|j| format!("z{j}")).collect();
    let ScaledQr { q, .. } = scaled_qr(z, &names)?;
    let proj = &q * (q.transpose() * y);
    Ok(y - proj)
}

/// Sample autocovariance at `lag`, mean-adjusted, divisor `n`.
fn autocovariance(u: &[f64], mean: f64, lag: usize) -> f64 {
    let n = u.len() as f64;
    u[lag..]
        .iter()
        .zip(u)
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum::<f64>()
        / n
}

/// Newey-West long-run variance with Bartlett weights `1 - j/(bandwidth+1)`.
pub fn longrun_variance(residuals: &[f64], bandwidth: usize) -> Result<f64, RegressError> {
    if bandwidth >= residuals.len() {
        return Err(RegressError::BandwidthOutOfRange {
            bandwidth,
            len: residuals.len(),
        });
    }
    let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
    let mut total = autocovariance(residuals, mean, 0);
    for j in 1..=bandwidth {
        let w = 1.0 - j as f64 / (bandwidth as f64 + 1.0);
        total += 2.0 * w * autocovariance(residuals, mean, j);
    }
    Ok(total.max(0.0))
}

/// `floor(4 (T/100)^(2/9))`.
pub fn default_bandwidth(nobs: usize) -> usize {
    (4.0 * (nobs as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}
