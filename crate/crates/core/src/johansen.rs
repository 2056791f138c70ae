//! Johansen trace test by reduced-rank regression.
//!
//! The VECM `ΔY_t = Π Y_{t-1} + Σ Γ_i ΔY_{t-i} + [μ] + ε_t` is concentrated
//! by regressing `ΔY_t` and `Y_{t-1}` on the short-run regressors. The
//! residual moment matrices give the eigenproblem
//! `|λ S11 - S10 S00⁻¹ S01| = 0`, which is solved in symmetric form through
//! the Cholesky factor of `S11`.
//!
//! Trace p-values use a gamma distribution whose two parameters, for each
//! `k - r` and deterministic case, reproduce the published asymptotic 90%,
//! 95% and 99% quantiles of the trace distribution.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::level::SignificanceLevel;
use crate::regress::{self, RegressError};
use crate::series::{SeriesError, TimeSeries};
use crate::unitroot;

/// Largest system dimension the p-value tables cover.
pub const MAX_DIMENSION: usize = 12;
/// Eigenvalues are clamped into `[0, 1 - EIGEN_CEILING_GAP]`.
pub const EIGEN_CEILING_GAP: f64 = 1e-12;
/// Reciprocal condition number below which a moment matrix is singular.
pub const SINGULAR_RCOND: f64 = 1e-12;
/// Candidate VAR orders searched when the lag order is not given.
pub const MAX_AUTO_LAG: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JohansenError {
    #[error("need at least 2 series, got {0}")]
    TooFewSeries(usize),
    #[error("{0} series exceed the supported maximum of {MAX_DIMENSION}")]
    UnsupportedDimension(usize),
    #[error("series lengths differ: {0:?}")]
    Unaligned(Vec<usize>),
    #[error("insufficient sample: {have} observations, need at least {needed} for k={k}, lag_p={lag_p}")]
    InsufficientSample {
        have: usize,
        needed: usize,
        k: usize,
        lag_p: usize,
    },
    #[error("lag_p must be at least 1")]
    InvalidLag,
    #[error("moment matrix {which} is singular (reciprocal condition {rcond:.3e})")]
    SingularMoment { which: &'static str, rcond: f64 },
    #[error("no cointegrating relation to form: selected rank is 0")]
    RankZero,
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VecmDeterministic {
    /// No deterministic terms anywhere (`noint`).
    #[default]
    NoIntercept,
    /// Unrestricted constant in the VECM.
    UnrestrictedConstant,
}

impl VecmDeterministic {
    fn table_index(self) -> usize {
        match self {
            Self::NoIntercept => 0,
            Self::UnrestrictedConstant => 1,
        }
    }
}

impl std::str::FromStr for VecmDeterministic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "nointercept" | "no_intercept" | "noint" | "none" => Ok(Self::NoIntercept),
            "unrestrictedconstant" | "unrestricted_constant" | "constant" | "const" => {
                Ok(Self::UnrestrictedConstant)
            }
            other => Err(format!("unknown VECM deterministic case `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VecmSpec {
    /// VAR order in levels; the VECM carries `lag_p - 1` lagged differences.
    pub lag_p: usize,
    pub det: VecmDeterministic,
}

impl VecmSpec {
    pub fn new(lag_p: usize, det: VecmDeterministic) -> Result<Self, JohansenError> {
        if lag_p == 0 {
            return Err(JohansenError::InvalidLag);
        }
        Ok(Self { lag_p, det })
    }
}

/// Concentrated residuals `R0` (of `ΔY_t`) and `R1` (of `Y_{t-1}`),
/// one row per usable observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Auxiliary {
    pub r0: DMatrix<f64>,
    pub r1: DMatrix<f64>,
}

impl Auxiliary {
    /// Number of `ΔY_t` observations used, `T - lag_p`.
    pub fn t_eff(&self) -> usize {
        self.r0.nrows()
    }
}

fn check_inputs(data: &[&[f64]], lag_p: usize) -> Result<usize, JohansenError> {
    let k = data.len();
    if k < 2 {
        return Err(JohansenError::TooFewSeries(k));
    }
    if lag_p == 0 {
        return Err(JohansenError::InvalidLag);
    }
    let lens: Vec<usize> = data.iter().map(|s| s.len()).collect();
    if lens.iter().any(|&l| l != lens[0]) {
        return Err(JohansenError::Unaligned(lens));
    }
    let t = lens[0];
    let needed = k * lag_p + 10;
    if t < needed {
        return Err(JohansenError::InsufficientSample {
            have: t,
            needed,
            k,
            lag_p,
        });
    }
    Ok(t)
}

pub fn vecm_auxiliary_values(data: &[&[f64]], spec: &VecmSpec) -> Result<Auxiliary, JohansenError> {
    let t = check_inputs(data, spec.lag_p)?;
    let k = data.len();
    let p = spec.lag_p;
    let rows = t - p;
    let first = p;
    let constant = usize::from(spec.det == VecmDeterministic::UnrestrictedConstant);
    let nz = k * (p - 1) + constant;

    let dy = |j: usize, t: usize| data[j][t] - data[j][t - 1];
    let delta = DMatrix::from_fn(rows, k, |i, j| dy(j, first + i));
    let lagged = DMatrix::from_fn(rows, k, |i, j| data[j][first + i - 1]);
    let z = DMatrix::from_fn(rows, nz, |i, c| {
        if c < k * (p - 1) {
            let lag = c / k + 1;
            dy(c % k, first + i - lag)
        } else {
            1.0
        }
    });
    Ok(Auxiliary {
        r0: regress::residualize(&z, &delta)?,
        r1: regress::residualize(&z, &lagged)?,
    })
}

pub fn vecm_auxiliary(series: &[TimeSeries], spec: &VecmSpec) -> Result<Auxiliary, JohansenError> {
    let data: Vec<&[f64]> = series.iter().map(|s| s.values()).collect();
    vecm_auxiliary_values(&data, spec)
}

/// Eigen-solution of the reduced-rank regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RrrSolution {
    /// Descending, within `[0, 1 - EIGEN_CEILING_GAP]`.
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`; normalized so `V' S11 V = I`.
    pub eigenvectors: DMatrix<f64>,
    /// True when any eigenvalue had to be clamped.
    pub boundary: bool,
    pub s01: DMatrix<f64>,
    pub s11: DMatrix<f64>,
}

fn reciprocal_condition(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        0.0
    } else {
        min / max
    }
}

pub fn solve_rrr_eigen(r0: &DMatrix<f64>, r1: &DMatrix<f64>) -> Result<RrrSolution, JohansenError> {
    let t = r0.nrows() as f64;
    let s00 = r0.transpose() * r0 / t;
    let s11 = r1.transpose() * r1 / t;
    let s01 = r0.transpose() * r1 / t;

    for (which, m) in [("S00", &s00), ("S11", &s11)] {
        let rcond = reciprocal_condition(m);
        if !(rcond > SINGULAR_RCOND) {
            return Err(JohansenError::SingularMoment { which, rcond });
        }
    }
    let singular = |which| JohansenError::SingularMoment { which, rcond: 0.0 };
    let chol00 = s00.clone().cholesky().ok_or_else(|| singular("S00"))?;
    let chol11 = s11.clone().cholesky().ok_or_else(|| singular("S11"))?;
    let l = chol11.l();

    // A = L⁻¹ S10 S00⁻¹ S01 L⁻ᵀ
    let m = s01.transpose() * chol00.solve(&s01);
    let x = l.solve_lower_triangular(&m).ok_or_else(|| singular("S11"))?;
    let a = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| singular("S11"))?;
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let ceiling = 1.0 - EIGEN_CEILING_GAP;
    let mut boundary = false;
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&i| {
            let v = eig.eigenvalues[i];
            if v > ceiling || v < 0.0 {
                boundary |= v > ceiling || v < -EIGEN_CEILING_GAP;
            }
            v.clamp(0.0, ceiling)
        })
        .collect();
    let lt = l.transpose();
    let mut eigenvectors = DMatrix::zeros(s11.nrows(), order.len());
    for (col, &i) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(i).into_owned();
        let b = lt.solve_upper_triangular(&v).ok_or_else(|| singular("S11"))?;
        eigenvectors.set_column(col, &b);
    }
    Ok(RrrSolution {
        eigenvalues,
        eigenvectors,
        boundary,
        s01,
        s11,
    })
}

// Gamma (mean, variance) per k - r = 1..=12 matching the asymptotic trace
// quantiles of MacKinnon, Haug & Michelis (1999).
const TRACE_GAMMA: [[(f64, f64); MAX_DIMENSION]; 2] = [
    [
        (1.135918, 2.216474),
        (5.973249, 11.226421),
        (14.841209, 26.992537),
        (27.772526, 48.893045),
        (44.721429, 77.062263),
        (65.667420, 111.606503),
        (90.598928, 152.127279),
        (119.615237, 198.348862),
        (152.627214, 250.109167),
        (189.687242, 307.230054),
        (230.462617, 376.537822),
        (275.554977, 444.673060),
    ],
    [
        (1.0, 2.0),
        (8.160618, 15.417348),
        (19.256263, 34.424104),
        (34.347532, 58.921653),
        (53.381013, 89.491538),
        (76.357899, 126.748812),
        (103.397107, 168.600406),
        (134.387319, 217.839330),
        (169.497390, 269.819934),
        (208.265423, 335.697869),
        (251.362230, 400.919172),
        (298.390040, 471.486047),
    ],
];

// Asymptotic 90%, 95%, 99% trace critical values (MacKinnon, Haug & Michelis 1999).
const TRACE_CRITICAL: [[[f64; 3]; MAX_DIMENSION]; 2] = [
    [
        [2.9762, 4.1296, 6.9406],
        [10.4741, 12.3212, 16.3640],
        [21.7781, 24.2761, 29.5147],
        [37.0339, 40.1749, 46.5716],
        [56.2839, 60.0627, 67.6367],
        [79.5329, 83.9383, 92.7136],
        [106.7351, 111.7797, 121.7375],
        [137.9954, 143.6691, 154.7977],
        [173.2292, 179.5199, 191.8122],
        [212.4721, 219.4051, 232.8291],
        [255.6732, 263.2603, 277.9962],
        [302.9054, 311.1288, 326.9716],
    ],
    [
        [2.7055, 3.8415, 6.6349],
        [13.4294, 15.4943, 19.9349],
        [27.0669, 29.7961, 35.4628],
        [44.4929, 47.8545, 54.6815],
        [65.8202, 69.8189, 77.8202],
        [91.1090, 95.7542, 104.9637],
        [120.3673, 125.6185, 135.9825],
        [153.6341, 159.5290, 171.0905],
        [190.8714, 197.3772, 210.0366],
        [232.1030, 239.2468, 253.2526],
        [277.3740, 285.1402, 300.2821],
        [326.5354, 334.9795, 351.2150],
    ],
];

fn check_dimension(k_minus_r: usize) -> Result<(), JohansenError> {
    if k_minus_r == 0 || k_minus_r > MAX_DIMENSION {
        return Err(JohansenError::UnsupportedDimension(k_minus_r));
    }
    Ok(())
}

/// Upper-tail probability of the trace statistic with `k_minus_r` common trends.
pub fn trace_pvalue(
    trace: f64,
    k_minus_r: usize,
    det: VecmDeterministic,
) -> Result<f64, JohansenError> {
    check_dimension(k_minus_r)?;
    if trace <= 0.0 {
        return Ok(1.0);
    }
    let (mean, var) = TRACE_GAMMA[det.table_index()][k_minus_r - 1];
    let shape = mean * mean / var;
    let scale = var / mean;
    Ok(statrs::function::gamma::gamma_ur(shape, trace / scale).clamp(0.0, 1.0))
}

/// Tabulated asymptotic critical value of the trace statistic.
pub fn trace_critical_value(
    k_minus_r: usize,
    det: VecmDeterministic,
    level: SignificanceLevel,
) -> Result<f64, JohansenError> {
    check_dimension(k_minus_r)?;
    let row = TRACE_CRITICAL[det.table_index()][k_minus_r - 1];
    Ok(match level {
        SignificanceLevel::Ten => row[0],
        SignificanceLevel::Five => row[1],
        SignificanceLevel::One => row[2],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohansenResult {
    pub spec: VecmSpec,
    pub level: SignificanceLevel,
    pub labels: Vec<String>,
    pub t_eff: usize,
    pub eigenvalues: Vec<f64>,
    /// Indexed by the null rank `r = 0..k-1`.
    pub trace_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Tabulated critical values at `level`, one per `r`.
    pub critical_values: Vec<f64>,
    /// One vector per eigenvalue, first coefficient 1.
    pub beta: Vec<Vec<f64>>,
    /// Adjustment coefficients paired with each `beta` vector.
    pub alpha: Vec<Vec<f64>>,
    pub selected_rank: usize,
    pub eigenvalue_boundary: bool,
    pub warnings: Vec<String>,
}

impl JohansenResult {
    pub fn rejects_rank_zero(&self) -> bool {
        self.level.rejects(self.p_values[0])
    }
}

/// Trace test on raw aligned columns, without the I(1) screen.
pub fn trace_test_values(
    data: &[&[f64]],
    spec: &VecmSpec,
    level: SignificanceLevel,
) -> Result<JohansenResult, JohansenError> {
    let k = data.len();
    if k > MAX_DIMENSION {
        return Err(JohansenError::UnsupportedDimension(k));
    }
    let aux = vecm_auxiliary_values(data, spec)?;
    let sol = solve_rrr_eigen(&aux.r0, &aux.r1)?;
    let t_eff = aux.t_eff();
    let tf = t_eff as f64;

    let log_terms: Vec<f64> = sol.eigenvalues.iter().map(|l| -tf * (-l).ln_1p()).collect();
    let trace_stats: Vec<f64> = (0..k).map(|r| log_terms[r..].iter().sum()).collect();
    let p_values = trace_stats
        .iter()
        .enumerate()
        .map(|(r, &tr)| trace_pvalue(tr, k - r, spec.det))
        .collect::<Result<Vec<_>, _>>()?;
    let critical_values = (0..k)
        .map(|r| trace_critical_value(k - r, spec.det, level))
        .collect::<Result<Vec<_>, _>>()?;
    let selected_rank = p_values
        .iter()
        .position(|&p| !level.rejects(p))
        .unwrap_or(k);

    let mut warnings = Vec::new();
    if sol.boundary {
        warnings.push("eigenvalue clamped to the unit-interval boundary".to_string());
    }
    let mut beta = Vec::with_capacity(k);
    let mut alpha = Vec::with_capacity(k);
    for i in 0..k {
        let mut b = sol.eigenvectors.column(i).into_owned();
        if b[0].abs() > f64::EPSILON * b.amax() {
            b /= b[0];
        } else {
            warnings.push(format!(
                "cointegrating vector {i} has a zero first coefficient; left S11-normalized"
            ));
        }
        let quad = (b.transpose() * &sol.s11 * &b)[(0, 0)];
        let a = &sol.s01 * &b / quad;
        beta.push(b.iter().copied().collect());
        alpha.push(a.iter().copied().collect());
    }

    Ok(JohansenResult {
        spec: *spec,
        level,
        labels: (0..k).map(|j| format!("y{}", j + 1)).collect(),
        t_eff,
        eigenvalues: sol.eigenvalues,
        trace_stats,
        p_values,
        critical_values,
        beta,
        alpha,
        selected_rank,
        eigenvalue_boundary: sol.boundary,
        warnings,
    })
}

/// Trace test on aligned series. Each series is put through the ADF I(1)
/// screen first and any failure is reported as a warning on the result.
pub fn johansen_trace_test(
    series: &[TimeSeries],
    spec: &VecmSpec,
    level: SignificanceLevel,
) -> Result<JohansenResult, JohansenError> {
    let data: Vec<&[f64]> = series.iter().map(|s| s.values()).collect();
    let mut result = trace_test_values(&data, spec, level)?;
    result.labels = series.iter().map(|s| s.label().to_string()).collect();
    for s in series {
        match unitroot::i1_screen(s.values(), level, 1) {
            Ok(screen) if screen.passed => {}
            Ok(screen) => result.warnings.push(format!(
                "I(1) screen not satisfied for `{}`: ADF rejects a unit root (single-mean p = {:.4}, trend p = {:.4})",
                s.label(),
                screen.single_mean_p,
                screen.trend_p
            )),
            Err(e) => result
                .warnings
                .push(format!("I(1) screen not satisfied for `{}`: {e}", s.label())),
        }
    }
    Ok(result)
}

/// `z_t = Σ_j β_j y_{j,t}` for the leading normalized cointegrating vector.
pub fn cointegrating_residual(
    series: &[TimeSeries],
    result: &JohansenResult,
) -> Result<TimeSeries, JohansenError> {
    if result.selected_rank == 0 {
        return Err(JohansenError::RankZero);
    }
    let beta = &result.beta[0];
    if series.len() != beta.len() {
        return Err(JohansenError::Unaligned(series.iter().map(|s| s.len()).collect()));
    }
    let lens: Vec<usize> = series.iter().map(|s| s.len()).collect();
    if lens.iter().any(|&l| l != lens[0]) || series.iter().any(|s| s.start() != series[0].start()) {
        return Err(JohansenError::Unaligned(lens));
    }
    let values: Vec<f64> = (0..lens[0])
        .map(|t| series.iter().zip(beta).map(|(s, b)| b * s.values()[t]).sum())
        .collect();
    let names: Vec<&str> = series.iter().map(|s| s.label()).collect();
    let ts = TimeSeries::new(format!("z[{}]", names.join(",")), series[0].start(), values)?
        .with_unit("cointegrating residual")
        .with_provenance(format!(
            "cointegrating residual of {} with beta {:?}",
            names.join(", "),
            beta
        ));
    Ok(ts)
}

/// VAR order in `1..=max_p` minimizing `ln|Σ̂| + 2m/n` on a common sample,
/// where `m` counts every estimated coefficient. Ties go to the smaller order.
pub fn select_var_order(
    data: &[&[f64]],
    max_p: usize,
    det: VecmDeterministic,
) -> Result<usize, JohansenError> {
    let t = check_inputs(data, max_p.max(1))?;
    let k = data.len();
    let max_p = max_p.max(1);
    let rows = t - max_p;
    let y = DMatrix::from_fn(rows, k, |i, j| data[j][max_p + i]);
    let constant = usize::from(det == VecmDeterministic::UnrestrictedConstant);
    let mut best: Option<(usize, f64)> = None;
    for p in 1..=max_p {
        let nz = k * p + constant;
        let z = DMatrix::from_fn(rows, nz, |i, c| {
            if c < k * p {
                data[c % k][max_p + i - (c / k + 1)]
            } else {
                1.0
            }
        });
        let e = regress::residualize(&z, &y)?;
        let sigma = e.transpose() * &e / rows as f64;
        let det_sigma = sigma.determinant();
        if !(det_sigma > 0.0) {
            return Err(JohansenError::SingularMoment {
                which: "VAR residual covariance",
                rcond: 0.0,
            });
        }
        let aic = det_sigma.ln() + 2.0 * (k * nz) as f64 / rows as f64;
        if best.map_or(true, |(_, b)| aic < b) {
            best = Some((p, aic));
        }
    }
    Ok(best.map(|(p, _)| p).unwrap_or(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{generate_random_walk, GaussianStream, RandomWalkSpec};

    fn walk(seed: u64, len: usize) -> Vec<f64> {
        generate_random_walk(&RandomWalkSpec {
            len,
            mu: 0.0,
            sigma: 1.0,
            y0: 0.0,
            seed,
        })
        .values()
        .to_vec()
    }

    fn noise(seed: u64, len: usize) -> Vec<f64> {
        let mut g = GaussianStream::new(seed);
        (0..len).map(|_| g.next_standard()).collect()
    }

    fn pair(seed: u64, len: usize) -> (Vec<f64>, Vec<f64>) {
        let x = walk(seed, len);
        let e = noise(seed ^ 0xABCD, len);
        let y = x.iter().zip(&e).map(|(a, b)| 2.0 * a + b).collect();
        (y, x)
    }

    #[test]
    fn lag1_nointercept_auxiliary_is_raw() {
        let (y, x) = pair(1, 40);
        let spec = VecmSpec::new(1, VecmDeterministic::NoIntercept).unwrap();
        let aux = vecm_auxiliary_values(&[&y, &x], &spec).unwrap();
        assert_eq!(aux.t_eff(), 39);
        for t in 1..40 {
            assert_eq!(aux.r0[(t - 1, 0)], y[t] - y[t - 1]);
            assert_eq!(aux.r0[(t - 1, 1)], x[t] - x[t - 1]);
            assert_eq!(aux.r1[(t - 1, 0)], y[t - 1]);
            assert_eq!(aux.r1[(t - 1, 1)], x[t - 1]);
        }
    }

    #[test]
    fn lag2_residuals_orthogonal_to_lagged_differences() {
        let (y, x) = pair(2, 120);
        let spec = VecmSpec::new(2, VecmDeterministic::UnrestrictedConstant).unwrap();
        let aux = vecm_auxiliary_values(&[&y, &x], &spec).unwrap();
        assert_eq!(aux.t_eff(), 118);
        for series in [&y, &x] {
            let lagged: Vec<f64> = (2..120).map(|t| series[t - 1] - series[t - 2]).collect();
            for m in [&aux.r0, &aux.r1] {
                for c in 0..2 {
                    let dot: f64 = m.column(c).iter().zip(&lagged).map(|(a, b)| a * b).sum();
                    assert!(dot.abs() < 1e-8, "{dot}");
                    assert!(m.column(c).sum().abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn insufficient_sample_and_dimensions() {
        let a = walk(3, 15);
        let b = walk(4, 15);
        let spec = VecmSpec::new(5, VecmDeterministic::NoIntercept).unwrap();
        assert!(matches!(
            vecm_auxiliary_values(&[&a, &b], &spec),
            Err(JohansenError::InsufficientSample { needed: 20, .. })
        ));
        assert!(VecmSpec::new(0, VecmDeterministic::NoIntercept).is_err());
        let spec = VecmSpec::new(1, VecmDeterministic::NoIntercept).unwrap();
        assert!(matches!(
            trace_test_values(&[&a], &spec, SignificanceLevel::Five),
            Err(JohansenError::TooFewSeries(1))
        ));
        let cols: Vec<Vec<f64>> = (0..13).map(|s| walk(s, 300)).collect();
        let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
        assert!(matches!(
            trace_test_values(&refs, &spec, SignificanceLevel::Five),
            Err(JohansenError::UnsupportedDimension(13))
        ));
        assert!(matches!(
            trace_test_values(&[&a, &b[..14]], &spec, SignificanceLevel::Five),
            Err(JohansenError::Unaligned(_))
        ));
    }

    #[test]
    fn identical_residuals_hit_the_boundary() {
        let r = DMatrix::from_fn(50, 2, |i, j| ((i * (j + 2)) as f64).sin() + j as f64 * 0.1);
        let sol = solve_rrr_eigen(&r, &r).unwrap();
        assert!(sol.boundary);
        for l in &sol.eigenvalues {
            assert_eq!(*l, 1.0 - EIGEN_CEILING_GAP);
        }
    }

    #[test]
    fn independent_residuals_give_small_eigenvalues() {
        let n = 2000;
        let a = noise(10, 2 * n);
        let b = noise(11, 2 * n);
        let r0 = DMatrix::from_fn(n, 2, |i, j| a[j * n + i]);
        let r1 = DMatrix::from_fn(n, 2, |i, j| b[j * n + i]);
        let sol = solve_rrr_eigen(&r0, &r1).unwrap();
        assert!(sol.eigenvalues.iter().all(|&l| (0.0..0.1).contains(&l)), "{:?}", sol.eigenvalues);
        // S11-normalized eigenvectors
        let gram = sol.eigenvectors.transpose() * &sol.s11 * &sol.eigenvectors;
        assert!((gram - DMatrix::identity(2, 2)).amax() < 1e-10);
    }

    #[test]
    fn singular_moment_is_reported() {
        let r0 = DMatrix::from_fn(30, 2, |i, _| i as f64);
        let r1 = DMatrix::from_fn(30, 2, |i, j| (i + j) as f64);
        assert!(matches!(
            solve_rrr_eigen(&r0, &r1),
            Err(JohansenError::SingularMoment { which: "S00", .. })
        ));
    }

    #[test]
    fn pvalue_at_tabulated_points() {
        for det in [VecmDeterministic::NoIntercept, VecmDeterministic::UnrestrictedConstant] {
            for n in 1..=MAX_DIMENSION {
                for level in SignificanceLevel::ALL {
                    let cv = trace_critical_value(n, det, level).unwrap();
                    let p = trace_pvalue(cv, n, det).unwrap();
                    assert!((p - level.value()).abs() < 0.1 * level.value(), "{det:?} n={n} {level}: {p}");
                }
                assert_eq!(trace_pvalue(0.0, n, det).unwrap(), 1.0);
                let mut last = 1.0;
                for i in 1..2000 {
                    let p = trace_pvalue(i as f64 * 0.25, n, det).unwrap();
                    assert!(p <= last);
                    if p > 1e-300 && last < 1.0 - 1e-15 {
                        assert!(p < last);
                    }
                    last = p;
                }
            }
        }
        let p = trace_pvalue(3.8415, 1, VecmDeterministic::UnrestrictedConstant).unwrap();
        assert!((p - 0.05).abs() < 0.005);
        assert!(trace_pvalue(1.0, 13, VecmDeterministic::NoIntercept).is_err());
        assert!(trace_pvalue(1.0, 0, VecmDeterministic::NoIntercept).is_err());
    }

    #[test]
    fn trace_identity_and_normalization() {
        let (y, x) = pair(5, 200);
        let spec = VecmSpec::new(2, VecmDeterministic::UnrestrictedConstant).unwrap();
        let res = trace_test_values(&[&y, &x], &spec, SignificanceLevel::Five).unwrap();
        let tf = res.t_eff as f64;
        assert_eq!(res.t_eff, 198);
        for r in 0..1 {
            let diff = res.trace_stats[r] - res.trace_stats[r + 1];
            assert!((diff + tf * (1.0 - res.eigenvalues[r]).ln()).abs() < 1e-10);
        }
        assert!(res.trace_stats[0] > res.trace_stats[1] && res.trace_stats[1] >= 0.0);
        for b in &res.beta {
            assert_eq!(b[0], 1.0);
        }
        assert_eq!(res.selected_rank, 1);
        assert!((res.beta[0][1] + 2.0).abs() < 0.1, "{:?}", res.beta[0]);
        // adjustment: only the y equation corrects
        assert!(res.alpha[0][0] < -0.5);
    }

    #[test]
    fn scaling_and_ordering_invariance() {
        let (y, x) = pair(6, 150);
        let spec = VecmSpec::new(2, VecmDeterministic::NoIntercept).unwrap();
        let base = trace_test_values(&[&y, &x], &spec, SignificanceLevel::Five).unwrap();
        let ys: Vec<f64> = y.iter().map(|v| v * 37.0).collect();
        let xs: Vec<f64> = x.iter().map(|v| v * 0.02).collect();
        let scaled = trace_test_values(&[&ys, &xs], &spec, SignificanceLevel::Five).unwrap();
        let swapped = trace_test_values(&[&x, &y], &spec, SignificanceLevel::Five).unwrap();
        for i in 0..2 {
            assert!((base.eigenvalues[i] - scaled.eigenvalues[i]).abs() < 1e-8);
            assert!((base.trace_stats[i] - scaled.trace_stats[i]).abs() < 1e-8 * (1.0 + base.trace_stats[i]));
            assert!((base.eigenvalues[i] - swapped.eigenvalues[i]).abs() < 1e-10);
            assert!((base.trace_stats[i] - swapped.trace_stats[i]).abs() < 1e-10 * (1.0 + base.trace_stats[i]));
        }
        // y + b x = ys/37 + b xs/0.02, proportional to ys + (37 b/0.02) xs
        let expect = base.beta[0][1] * 37.0 / 0.02;
        assert!((scaled.beta[0][1] - expect).abs() < 1e-7 * expect.abs().max(1.0));
        // swapped order: (x, y) normalized on x is proportional to (beta1, 1)
        let ratio = swapped.beta[0][1] * base.beta[0][1];
        assert!((ratio - 1.0).abs() < 1e-8);
    }

    #[test]
    fn screen_warning_for_stationary_inputs() {
        let a = TimeSeries::new("a", 1900, noise(20, 120)).unwrap();
        let b = TimeSeries::new("b", 1900, noise(21, 120)).unwrap();
        let spec = VecmSpec::new(1, VecmDeterministic::UnrestrictedConstant).unwrap();
        let res = johansen_trace_test(&[a, b], &spec, SignificanceLevel::Five).unwrap();
        assert_eq!(res.labels, vec!["a", "b"]);
        assert!(res.warnings.iter().any(|w| w.contains("I(1) screen not satisfied")), "{:?}", res.warnings);
    }

    #[test]
    fn exact_relation_residual_is_zero() {
        let x = walk(30, 100);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let res = JohansenResult {
            spec: VecmSpec::new(1, VecmDeterministic::NoIntercept).unwrap(),
            level: SignificanceLevel::Five,
            labels: vec!["y".into(), "x".into()],
            t_eff: 99,
            eigenvalues: vec![0.5, 0.0],
            trace_stats: vec![1.0, 0.0],
            p_values: vec![0.0, 1.0],
            critical_values: vec![12.3, 4.1],
            beta: vec![vec![1.0, -3.0], vec![1.0, 0.0]],
            alpha: vec![vec![-1.0, 0.0], vec![0.0, 0.0]],
            selected_rank: 1,
            eigenvalue_boundary: false,
            warnings: vec![],
        };
        let ys = TimeSeries::new("y", 1, y).unwrap();
        let xs = TimeSeries::new("x", 1, x).unwrap();
        let z = cointegrating_residual(&[ys.clone(), xs.clone()], &res).unwrap();
        assert!(z.values().iter().all(|v| v.abs() < 1e-12));
        let zero = JohansenResult {
            selected_rank: 0,
            ..res
        };
        assert!(matches!(
            cointegrating_residual(&[ys, xs], &zero),
            Err(JohansenError::RankZero)
        ));
    }

    #[test]
    fn exact_relation_solver_hits_boundary() {
        // y = 3x exactly makes S11 singular; the solver refuses rather than guessing
        let x = walk(31, 100);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let spec = VecmSpec::new(1, VecmDeterministic::NoIntercept).unwrap();
        assert!(matches!(
            trace_test_values(&[&y, &x], &spec, SignificanceLevel::Five),
            Err(JohansenError::SingularMoment { .. })
        ));
    }

    #[test]
    fn var_order_selection() {
        let (y, x) = pair(40, 300);
        let p = select_var_order(&[&y, &x], MAX_AUTO_LAG, VecmDeterministic::UnrestrictedConstant).unwrap();
        assert!((1..=MAX_AUTO_LAG).contains(&p));
        let p1 = select_var_order(&[&y, &x], 1, VecmDeterministic::NoIntercept).unwrap();
        assert_eq!(p1, 1);
    }
}
