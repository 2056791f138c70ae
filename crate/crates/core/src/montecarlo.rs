//! Seeded data-generating processes and the spurious-cointegration audit.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`), whose output stream is
//! fixed for a given 64-bit seed. Gaussian deviates use the Box–Muller
//! transform: each pair consumes two uniforms `u1, u2` (in that order, each
//! `(next_u64 >> 11) * 2^-53`), yields `r cos θ` first and `r sin θ` second
//! with `r = sqrt(-2 ln(1 - u1))`, `θ = 2π u2`. `libm` supplies the
//! transcendental functions so the sequence does not depend on the platform
//! math library.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::johansen::{self, JohansenError, VecmSpec};
use crate::level::SignificanceLevel;
use crate::regress::{self, DesignMatrix, RegressError};
use crate::series::TimeSeries;
use crate::unitroot::{self, DeterministicSpec, ScreenOutcome, UnitRootError};

/// Attempts per trial before a failing I(1) screen becomes an error.
pub const MAX_SCREEN_ATTEMPTS: usize = 1000;
/// Lag order of the ADF regressions in the I(1) screen.
pub const SCREEN_LAGS: usize = 1;
const WILSON_Z95: f64 = 1.959_963_984_540_054;
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error("n_trials must be at least 1")]
    NoTrials,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("target `{label}` fails the I(1) screen (single-mean p = {single_mean_p:.4}, trend p = {trend_p:.4}); pass an override to run anyway")]
    TargetFailsScreen {
        label: String,
        single_mean_p: f64,
        trend_p: f64,
    },
    #[error("trial {trial}: no walk passed the I(1) screen in {attempts} attempts")]
    ScreenExhausted { trial: usize, attempts: usize },
    #[error(transparent)]
    UnitRoot(#[from] UnitRootError),
    #[error(transparent)]
    Johansen(#[from] JohansenError),
    #[error(transparent)]
    Regress(#[from] RegressError),
}

/// Standard normal deviates from a seeded ChaCha8 stream.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = libm::sqrt(-2.0 * libm::log(1.0 - u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    pub fn next_normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.next_standard()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomWalkSpec {
    /// Number of values, including `y0`.
    pub len: usize,
    pub mu: f64,
    pub sigma: f64,
    pub y0: f64,
    pub seed: u64,
}

impl RandomWalkSpec {
    pub fn validate(&self) -> Result<(), MonteCarloError> {
        if self.len < 2 {
            return Err(MonteCarloError::InvalidParams(format!(
                "walk length {} < 2",
                self.len
            )));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(MonteCarloError::InvalidParams(format!(
                "sigma must be finite and non-negative, got {}",
                self.sigma
            )));
        }
        if !self.mu.is_finite() || !self.y0.is_finite() {
            return Err(MonteCarloError::InvalidParams("mu and y0 must be finite".into()));
        }
        Ok(())
    }
}

fn walk_values(spec: &RandomWalkSpec, stream: &mut GaussianStream) -> Vec<f64> {
    let mut out = Vec::with_capacity(spec.len);
    let mut y = spec.y0;
    out.push(y);
    for _ in 1..spec.len {
        y += spec.mu + spec.sigma * stream.next_standard();
        out.push(y);
    }
    out
}

/// `y_0 = y0`, `y_t = y_{t-1} + μ + σ z_t`. The series starts at period 0.
///
/// # Panics
/// If the spec is invalid; call [`RandomWalkSpec::validate`] first for
/// untrusted input.
pub fn generate_random_walk(spec: &RandomWalkSpec) -> TimeSeries {
    spec.validate().expect("invalid random walk spec");
    let values = walk_values(spec, &mut GaussianStream::new(spec.seed));
    TimeSeries::new(format!("walk(seed={})", spec.seed), 0, values)
        .expect("finite walk")
        .with_provenance(format!(
            "simulated random walk mu={} sigma={} y0={} seed={}",
            spec.mu, spec.sigma, spec.y0, spec.seed
        ))
}

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 finalizer applied to `master + γ·(index + 1)` with γ the
/// 64-bit golden ratio. For a fixed master this is injective in the index.
pub fn derive_trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    splitmix64(master_seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(trial_index.wrapping_add(1))))
}

/// 95% Wilson score interval for `successes` out of `n`.
pub fn wilson_ci95(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z95 * WILSON_Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditTestConfig {
    pub vecm: VecmSpec,
    pub level: SignificanceLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditTrial {
    pub index: usize,
    /// Seed of the walk actually used, after any screen resampling.
    pub seed: u64,
    pub trace: f64,
    pub p_value: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub target_label: String,
    pub target_len: usize,
    pub n_trials: usize,
    pub master_seed: u64,
    /// Template; `len` is the target length and `seed` is unused.
    pub spec: RandomWalkSpec,
    pub test_config: AuditTestConfig,
    pub target_screen: Option<ScreenOutcome>,
    pub screen_override: bool,
    pub rejections: usize,
    pub false_positive_rate: f64,
    pub wilson_ci95: (f64, f64),
    pub screen_failures: usize,
    pub per_trial: Vec<AuditTrial>,
}

/// Draws a screened walk for one trial. Attempt 0 uses the trial seed,
/// attempt `a > 0` uses `derive_trial_seed(trial_seed, a)`.
fn screened_walk(
    template: &RandomWalkSpec,
    trial: usize,
    trial_seed: u64,
    level: SignificanceLevel,
) -> Result<(u64, Vec<f64>, usize), MonteCarloError> {
    for attempt in 0..MAX_SCREEN_ATTEMPTS {
        let seed = if attempt == 0 {
            trial_seed
        } else {
            derive_trial_seed(trial_seed, attempt as u64)
        };
        let spec = RandomWalkSpec { seed, ..*template };
        let values = walk_values(&spec, &mut GaussianStream::new(seed));
        if unitroot::i1_screen(&values, level, SCREEN_LAGS)?.passed {
            return Ok((seed, values, attempt));
        }
    }
    Err(MonteCarloError::ScreenExhausted {
        trial,
        attempts: MAX_SCREEN_ATTEMPTS,
    })
}

/// Pairs the target with `n_trials` independent screened walks and records
/// how often the trace test rejects `r = 0`.
pub fn spurious_audit(
    target: &TimeSeries,
    walk: &RandomWalkSpec,
    n_trials: usize,
    test: AuditTestConfig,
    master_seed: u64,
    override_screen: bool,
) -> Result<AuditReport, MonteCarloError> {
    if n_trials == 0 {
        return Err(MonteCarloError::NoTrials);
    }
    let template = RandomWalkSpec {
        len: target.len(),
        seed: 0,
        ..*walk
    };
    template.validate()?;
    if template.sigma == 0.0 {
        return Err(MonteCarloError::InvalidParams(
            "sigma = 0 gives deterministic walks that cannot be screened".into(),
        ));
    }

    let target_screen = match unitroot::i1_screen(target.values(), test.level, SCREEN_LAGS) {
        Ok(s) => Some(s),
        Err(e) if override_screen => {
            let _ = e;
            None
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(s) = &target_screen {
        if !s.passed && !override_screen {
            return Err(MonteCarloError::TargetFailsScreen {
                label: target.label().to_string(),
                single_mean_p: s.single_mean_p,
                trend_p: s.trend_p,
            });
        }
    }

    let outcomes = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let trial_seed = derive_trial_seed(master_seed, i as u64);
            let (seed, values, failures) = screened_walk(&template, i, trial_seed, test.level)?;
            let res = johansen::trace_test_values(&[target.values(), &values], &test.vecm, test.level)?;
            Ok((
                AuditTrial {
                    index: i,
                    seed,
                    trace: res.trace_stats[0],
                    p_value: res.p_values[0],
                    rejected: res.rejects_rank_zero(),
                },
                failures,
            ))
        })
        .collect::<Result<Vec<_>, MonteCarloError>>()?;

    let screen_failures = outcomes.iter().map(|(_, f)| f).sum();
    let per_trial: Vec<AuditTrial> = outcomes.into_iter().map(|(t, _)| t).collect();
    let rejections = per_trial.iter().filter(|t| t.rejected).count();
    Ok(AuditReport {
        target_label: target.label().to_string(),
        target_len: target.len(),
        n_trials,
        master_seed,
        spec: template,
        test_config: test,
        target_screen,
        screen_override: override_screen,
        rejections,
        false_positive_rate: rejections as f64 / n_trials as f64,
        wilson_ci95: wilson_ci95(rejections, n_trials),
        screen_failures,
        per_trial,
    })
}

/// Data-generating processes for calibration experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dgp {
    /// Two independent driftless walks.
    IndependentWalks { len: usize, sigma: f64 },
    /// Two independent walks with a common drift.
    DriftedWalks { len: usize, mu: f64, sigma: f64 },
    /// `x` a driftless walk, `y = beta x + u`, `u` a stationary AR(1).
    CointegratedPair {
        len: usize,
        beta: f64,
        ar: f64,
        noise_sigma: f64,
    },
    /// A single stationary AR(1) started from its stationary distribution.
    StationaryAr { len: usize, phi: f64, sigma: f64 },
}

impl Dgp {
    fn len(&self) -> usize {
        match *self {
            Dgp::IndependentWalks { len, .. }
            | Dgp::DriftedWalks { len, .. }
            | Dgp::CointegratedPair { len, .. }
            | Dgp::StationaryAr { len, .. } => len,
        }
    }

    fn is_pair(&self) -> bool {
        !matches!(self, Dgp::StationaryAr { .. })
    }

    fn validate(&self) -> Result<(), MonteCarloError> {
        let bad = |m: String| Err(MonteCarloError::InvalidParams(m));
        if self.len() < 2 {
            return bad(format!("length {} < 2", self.len()));
        }
        match *self {
            Dgp::IndependentWalks { sigma, .. } | Dgp::DriftedWalks { sigma, .. } if !(sigma > 0.0) => {
                bad(format!("sigma must be positive, got {sigma}"))
            }
            Dgp::DriftedWalks { mu, .. } if !mu.is_finite() => bad("mu must be finite".into()),
            Dgp::CointegratedPair { ar, noise_sigma, beta, .. } => {
                if !(ar.abs() < 1.0) {
                    bad(format!("AR coefficient {ar} is not stationary"))
                } else if !(noise_sigma > 0.0) || !beta.is_finite() {
                    bad("noise_sigma must be positive and beta finite".into())
                } else {
                    Ok(())
                }
            }
            Dgp::StationaryAr { phi, sigma, .. } => {
                if !(phi.abs() < 1.0) {
                    bad(format!("AR coefficient {phi} is not stationary"))
                } else if !(sigma > 0.0) {
                    bad(format!("sigma must be positive, got {sigma}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Draws one realization. Pair DGPs return `[y, x]`; all deviates come
    /// from one stream, the first series' innovations before the second's.
    pub fn sample(&self, seed: u64) -> Vec<Vec<f64>> {
        let mut g = GaussianStream::new(seed);
        let walk = |g: &mut GaussianStream, len, mu, sigma| {
            walk_values(
                &RandomWalkSpec {
                    len,
                    mu,
                    sigma,
                    y0: 0.0,
                    seed,
                },
                g,
            )
        };
        let ar1 = |g: &mut GaussianStream, len: usize, phi: f64, sigma: f64| {
            let mut u = Vec::with_capacity(len);
            let mut prev = g.next_normal(0.0, sigma / (1.0 - phi * phi).sqrt());
            u.push(prev);
            for _ in 1..len {
                prev = phi * prev + g.next_normal(0.0, sigma);
                u.push(prev);
            }
            u
        };
        match *self {
            Dgp::IndependentWalks { len, sigma } => {
                let a = walk(&mut g, len, 0.0, sigma);
                let b = walk(&mut g, len, 0.0, sigma);
                vec![a, b]
            }
            Dgp::DriftedWalks { len, mu, sigma } => {
                let a = walk(&mut g, len, mu, sigma);
                let b = walk(&mut g, len, mu, sigma);
                vec![a, b]
            }
            Dgp::CointegratedPair {
                len,
                beta,
                ar,
                noise_sigma,
            } => {
                let x = walk(&mut g, len, 0.0, 1.0);
                let u = ar1(&mut g, len, ar, noise_sigma);
                let y = x.iter().zip(&u).map(|(x, u)| beta * x + u).collect();
                vec![y, x]
            }
            Dgp::StationaryAr { len, phi, sigma } => vec![ar1(&mut g, len, phi, sigma)],
        }
    }
}

/// Statistic applied to each realization of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentTest {
    /// ADF on the first series; rejection of the unit root.
    Adf {
        spec: DeterministicSpec,
        lags: usize,
        level: SignificanceLevel,
    },
    /// Trace test on the pair; rejection of `r = 0`.
    Johansen {
        vecm: VecmSpec,
        level: SignificanceLevel,
    },
    /// OLS of the first series on a constant and the second; "rejection"
    /// means R² above the threshold.
    LevelsRegression { r2_threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTrial {
    pub index: usize,
    pub seed: u64,
    /// Tau, trace for `r = 0`, or R², depending on the test.
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub rejected: bool,
    pub selected_rank: Option<usize>,
    /// Normalized leading cointegrating vector (Johansen only).
    pub beta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dgp: Dgp,
    pub test: ExperimentTest,
    pub n_trials: usize,
    pub master_seed: u64,
    pub rejections: usize,
    pub rejection_rate: f64,
    pub wilson_ci95: (f64, f64),
    /// Share of trials selecting rank exactly 1 (Johansen only).
    pub rank_one_rate: Option<f64>,
    /// Median second coefficient of the normalized leading vector over
    /// rank-1 trials (Johansen only).
    pub median_beta2: Option<f64>,
    pub per_trial: Vec<ExperimentTrial>,
}

fn run_trial(
    dgp: &Dgp,
    test: &ExperimentTest,
    index: usize,
    seed: u64,
) -> Result<ExperimentTrial, MonteCarloError> {
    let data = dgp.sample(seed);
    let mut trial = ExperimentTrial {
        index,
        seed,
        statistic: f64::NAN,
        p_value: None,
        rejected: false,
        selected_rank: None,
        beta: None,
    };
    match *test {
        ExperimentTest::Adf { spec, lags, level } => {
            let r = unitroot::adf_values(&data[0], spec, lags)?;
            trial.statistic = r.tau_stat;
            trial.p_value = Some(r.p_value);
            trial.rejected = level.rejects(r.p_value);
        }
        ExperimentTest::Johansen { vecm, level } => {
            let r = johansen::trace_test_values(&[&data[0], &data[1]], &vecm, level)?;
            trial.statistic = r.trace_stats[0];
            trial.p_value = Some(r.p_values[0]);
            trial.rejected = r.rejects_rank_zero();
            trial.selected_rank = Some(r.selected_rank);
            trial.beta = Some(r.beta[0].clone());
        }
        ExperimentTest::LevelsRegression { r2_threshold } => {
            let n = data[0].len();
            let design = DesignMatrix::new(n)
                .with("const", vec![1.0; n])?
                .with("x", data[1].clone())?;
            let fit = regress::ols_fit(&design, &data[0])?;
            trial.statistic = fit.r_squared;
            trial.rejected = fit.r_squared > r2_threshold;
        }
    }
    Ok(trial)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    })
}

/// Rejection rate of `test` over `n_trials` draws of `dgp`.
pub fn size_power_experiment(
    dgp: Dgp,
    n_trials: usize,
    test: ExperimentTest,
    master_seed: u64,
) -> Result<ExperimentReport, MonteCarloError> {
    if n_trials == 0 {
        return Err(MonteCarloError::NoTrials);
    }
    dgp.validate()?;
    if !dgp.is_pair() && !matches!(test, ExperimentTest::Adf { .. }) {
        return Err(MonteCarloError::InvalidParams(
            "this test needs a pair of series".into(),
        ));
    }
    if let ExperimentTest::LevelsRegression { r2_threshold } = test {
        if !(0.0..=1.0).contains(&r2_threshold) {
            return Err(MonteCarloError::InvalidParams(format!(
                "R² threshold {r2_threshold} outside [0, 1]"
            )));
        }
    }

    let per_trial = (0..n_trials)
        .into_par_iter()
        .map(|i| run_trial(&dgp, &test, i, derive_trial_seed(master_seed, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;

    let rejections = per_trial.iter().filter(|t| t.rejected).count();
    let (rank_one_rate, median_beta2) = if matches!(test, ExperimentTest::Johansen { .. }) {
        let rank_one: Vec<&ExperimentTrial> = per_trial
            .iter()
            .filter(|t| t.selected_rank == Some(1))
            .collect();
        let betas = rank_one
            .iter()
            .filter_map(|t| t.beta.as_ref().map(|b| b[1]))
            .collect();
        (Some(rank_one.len() as f64 / n_trials as f64), median(betas))
    } else {
        (None, None)
    };
    Ok(ExperimentReport {
        dgp,
        test,
        n_trials,
        master_seed,
        rejections,
        rejection_rate: rejections as f64 / n_trials as f64,
        wilson_ci95: wilson_ci95(rejections, n_trials),
        rank_one_rate,
        median_beta2,
        per_trial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::johansen::VecmDeterministic;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};

    #[test]
    fn chacha_and_gaussian_vectors_are_pinned() {
        let mut g = GaussianStream::new(42);
        let first: Vec<f64> = (0..4).map(|_| g.next_standard()).collect();
        // consumption order: a pair of uniforms yields cos then sin deviate
        let mut raw = ChaCha8Rng::seed_from_u64(42);
        let u = |x: u64| (x >> 11) as f64 / (1u64 << 53) as f64;
        let (u1, u2) = (u(raw.next_u64()), u(raw.next_u64()));
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let th = 2.0 * std::f64::consts::PI * u2;
        assert!((first[0] - r * th.cos()).abs() < 1e-15);
        assert!((first[1] - r * th.sin()).abs() < 1e-15);
        let bits: Vec<u64> = first.iter().map(|v| v.to_bits()).collect();
        assert_eq!(
            bits,
            [
                4609165146906686528,
                13825424190551741832,
                13828173692884416540,
                13828373228147343020
            ]
        );
        assert_eq!(ChaCha8Rng::seed_from_u64(0).next_u64(), 0xb585_f767_a79a_3b6c);
    }

    #[test]
    fn deterministic_drift_line() {
        let spec = RandomWalkSpec {
            len: 5,
            mu: 1.0,
            sigma: 0.0,
            y0: 0.0,
            seed: 9,
        };
        assert_eq!(generate_random_walk(&spec).values(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        let flat = RandomWalkSpec { mu: 0.0, y0: 2.5, ..spec };
        assert!(generate_random_walk(&flat).values().iter().all(|&v| v == 2.5));
        assert!(RandomWalkSpec { len: 1, ..spec }.validate().is_err());
        assert!(RandomWalkSpec { sigma: -1.0, ..spec }.validate().is_err());
    }

    #[test]
    fn innovation_mean_within_four_sigma() {
        let (mu, sigma) = (-0.2, 0.7);
        let n = 1_000_000;
        let spec = RandomWalkSpec {
            len: n + 1,
            mu,
            sigma,
            y0: 0.0,
            seed: 2024,
        };
        let w = generate_random_walk(&spec);
        let mean = (w.values()[n] - w.values()[0]) / n as f64;
        assert!((mean - mu).abs() < 4.0 * sigma / 1000.0, "{mean}");
        let mut g = GaussianStream::new(7);
        let draws: Vec<f64> = (0..n).map(|_| g.next_standard()).collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|z| (z - m) * (z - m)).sum::<f64>() / n as f64;
        assert!(m.abs() < 0.004 && (v - 1.0).abs() < 0.01, "{m} {v}");
        assert!(draws.iter().all(|z| z.is_finite()));
    }

    #[test]
    fn seeds_are_deterministic_and_distinct() {
        assert_eq!(derive_trial_seed(5, 3), derive_trial_seed(5, 3));
        let seeds: std::collections::HashSet<u64> = (0..10).map(|i| derive_trial_seed(5, i)).collect();
        assert_eq!(seeds.len(), 10);
        let many: std::collections::HashSet<u64> = (0..100_000).map(|i| derive_trial_seed(0, i)).collect();
        assert_eq!(many.len(), 100_000);
    }

    #[test]
    fn wilson_interval_examples() {
        let (lo, hi) = wilson_ci95(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.2775).abs() < 1e-3);
        let (lo, hi) = wilson_ci95(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
        let (lo, hi) = wilson_ci95(10, 10);
        assert!((lo - 0.7225).abs() < 1e-3 && (hi - 1.0).abs() < 1e-12);
    }

    fn target(seed: u64) -> TimeSeries {
        generate_random_walk(&RandomWalkSpec {
            len: 120,
            mu: 0.05,
            sigma: 1.0,
            y0: 10.0,
            seed,
        })
    }

    fn audit_config() -> AuditTestConfig {
        AuditTestConfig {
            vecm: VecmSpec::new(1, VecmDeterministic::NoIntercept).unwrap(),
            level: SignificanceLevel::Five,
        }
    }

    #[test]
    fn audit_is_reproducible_and_consistent() {
        let walk = RandomWalkSpec {
            len: 0,
            mu: -0.2,
            sigma: 0.7,
            y0: 0.0,
            seed: 0,
        };
        let t = target(3);
        let a = spurious_audit(&t, &walk, 40, audit_config(), 99, false).unwrap();
        let b = spurious_audit(&t, &walk, 40, audit_config(), 99, false).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_trial.len(), 40);
        assert_eq!(a.rejections, a.per_trial.iter().filter(|t| t.rejected).count());
        assert_eq!(a.false_positive_rate, a.rejections as f64 / 40.0);
        assert!(a.wilson_ci95.0 <= a.false_positive_rate && a.false_positive_rate <= a.wilson_ci95.1);
        assert_eq!(a.spec.len, 120);
        for (i, tr) in a.per_trial.iter().enumerate() {
            assert_eq!(tr.index, i);
        }
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| spurious_audit(&t, &walk, 40, audit_config(), 99, false).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn audit_preconditions() {
        let walk = RandomWalkSpec {
            len: 0,
            mu: 0.0,
            sigma: 1.0,
            y0: 0.0,
            seed: 0,
        };
        assert!(matches!(
            spurious_audit(&target(1), &walk, 0, audit_config(), 1, false),
            Err(MonteCarloError::NoTrials)
        ));
        let mut g = GaussianStream::new(5);
        let noise = TimeSeries::new("noise", 1900, (0..120).map(|_| g.next_standard()).collect()).unwrap();
        assert!(matches!(
            spurious_audit(&noise, &walk, 5, audit_config(), 1, false),
            Err(MonteCarloError::TargetFailsScreen { .. })
        ));
        let r = spurious_audit(&noise, &walk, 5, audit_config(), 1, true).unwrap();
        assert!(r.screen_override);
        assert!(!r.target_screen.unwrap().passed);
    }

    #[test]
    fn experiment_validation() {
        let adf = ExperimentTest::Adf {
            spec: DeterministicSpec::SingleMean,
            lags: 0,
            level: SignificanceLevel::Five,
        };
        assert!(size_power_experiment(Dgp::StationaryAr { len: 100, phi: 1.0, sigma: 1.0 }, 10, adf, 1).is_err());
        assert!(size_power_experiment(Dgp::IndependentWalks { len: 100, sigma: 0.0 }, 10, adf, 1).is_err());
        assert!(size_power_experiment(
            Dgp::StationaryAr { len: 100, phi: 0.5, sigma: 1.0 },
            10,
            ExperimentTest::LevelsRegression { r2_threshold: 0.5 },
            1
        )
        .is_err());
        assert!(matches!(
            size_power_experiment(Dgp::IndependentWalks { len: 100, sigma: 1.0 }, 0, adf, 1),
            Err(MonteCarloError::NoTrials)
        ));
    }

    #[test]
    fn stationary_ar_power() {
        let r = size_power_experiment(
            Dgp::StationaryAr {
                len: 200,
                phi: 0.5,
                sigma: 1.0,
            },
            1000,
            ExperimentTest::Adf {
                spec: DeterministicSpec::SingleMean,
                lags: 0,
                level: SignificanceLevel::Five,
            },
            11,
        )
        .unwrap();
        assert!(r.rejection_rate >= 0.90, "{}", r.rejection_rate);
    }

    #[test]
    fn cointegrated_pair_sample_structure() {
        let d = Dgp::CointegratedPair {
            len: 50,
            beta: 2.0,
            ar: 0.5,
            noise_sigma: 1.0,
        };
        let s = d.sample(3);
        assert_eq!(s.len(), 2);
        assert_eq!(s[1][0], 0.0);
        assert_eq!(d.sample(3), s);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn walks_have_exact_length_and_are_finite(len in 2usize..400, mu in -1.0f64..1.0, sigma in 0.001f64..5.0, seed: u64) {
            let w = generate_random_walk(&RandomWalkSpec { len, mu, sigma, y0: 1.0, seed });
            prop_assert_eq!(w.len(), len);
            prop_assert_eq!(w.values()[0], 1.0);
            prop_assert!(w.values().iter().all(|v| v.is_finite()));
        }

        #[test]
        fn wilson_bounds_contain_estimate(n in 1usize..5000, frac in 0.0f64..=1.0) {
            let k = ((n as f64) * frac).floor() as usize;
            let (lo, hi) = wilson_ci95(k, n);
            let p = k as f64 / n as f64;
            prop_assert!(0.0 <= lo && lo <= p + 1e-12 && p <= hi + 1e-12 && hi <= 1.0);
        }
    }
}
