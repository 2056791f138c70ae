use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use spurion::johansen::VecmDeterministic;
use spurion::montecarlo::{generate_random_walk, RandomWalkSpec};
use spurion::pipeline::{
    self, config::parse_transforms, AnalysisConfig, PipelineError, Report, SeriesRef, Window,
};
use spurion::series::DatasetRegistry;
use spurion::SignificanceLevel;

#[derive(Debug, Parser)]
#[command(name = "spurion", version, about = "Unit-root tests, Johansen cointegration and spurious-cointegration audits")]
struct Cli {
    /// Directory of `<label>.csv` files with a `year,value` header.
    #[arg(long, global = true, env = "SPURION_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// INI analysis configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for simulation commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Significance level: 0.10, 0.05 or 0.01.
    #[arg(long, global = true)]
    level: Option<SignificanceLevel>,
    /// Run the cointegration test even when the I(1) screen fails.
    #[arg(long, global = true)]
    force: bool,
    /// Output path; JSON reports go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone, Default)]
struct Selection {
    /// Comma-separated dataset labels; overrides the config.
    #[arg(long, value_delimiter = ',')]
    series: Vec<String>,
    /// Comma-separated transform chain applied to every `--series` entry.
    #[arg(long)]
    transform: Option<String>,
    #[arg(long)]
    from: Option<i64>,
    #[arg(long)]
    to: Option<i64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// ADF and PP on levels and first differences with I(1) verdicts.
    Stationarity(Selection),
    /// Stationarity gate followed by the Johansen trace test.
    Coint {
        #[command(flatten)]
        sel: Selection,
        /// VAR order in levels, or `auto` for AIC selection.
        #[arg(long)]
        lag_p: Option<String>,
        /// `no_intercept` or `unrestricted_constant`.
        #[arg(long)]
        det: Option<VecmDeterministic>,
    },
    /// Pair a target with simulated drifted random walks and count rejections.
    Audit {
        #[command(flatten)]
        sel: Selection,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        y0: Option<f64>,
    },
    /// Write a simulated random walk as a `year,value` CSV.
    Simulate {
        #[arg(long)]
        len: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        y0: f64,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        start: i64,
    },
    /// SVG overlay of 1 to 4 series plus a CSV of the plotted points.
    Plot(Selection),
    /// Levels OLS of the first series on a constant and the second.
    Regress(Selection),
}

fn load_config(cli: &Cli, sel: Option<&Selection>) -> Result<AnalysisConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => AnalysisConfig::from_file(path)?,
        None => AnalysisConfig::default(),
    };
    if let Some(dir) = &cli.data_dir {
        cfg.data_dir = Some(dir.clone());
    }
    if let Some(level) = cli.level {
        cfg.level = level;
    }
    if let Some(seed) = cli.seed {
        cfg.audit.seed = seed;
    }
    if let Some(sel) = sel {
        if !sel.series.is_empty() {
            let transforms = sel.transform.as_deref().map(parse_transforms).transpose()?.unwrap_or_default();
            cfg.series = sel
                .series
                .iter()
                .map(|l| SeriesRef {
                    label: l.trim().to_string(),
                    transforms: transforms.clone(),
                })
                .collect();
        } else if sel.transform.is_some() {
            return Err(PipelineError::Config("--transform requires --series".into()));
        }
        if sel.from.is_some() || sel.to.is_some() {
            let old = cfg.window;
            cfg.window = Some(Window {
                from: sel.from.or(old.map(|w| w.from)).unwrap_or(i64::MIN),
                to: sel.to.or(old.map(|w| w.to)).unwrap_or(i64::MAX),
            });
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit<T: Serialize>(
    cli: &Cli,
    command: &str,
    cfg: &AnalysisConfig,
    result: &T,
) -> Result<(), PipelineError> {
    let json = Report::new(command, cfg, result).to_json()?;
    match cli.out.as_ref().or(cfg.output.report.as_ref()) {
        Some(path) => write(path, &json),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: std::io::Error) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    match &cli.command {
        Command::Stationarity(sel) => {
            let cfg = load_config(cli, Some(sel))?;
            let rep = pipeline::run_stationarity(&cfg)?;
            for s in &rep.series {
                eprintln!("{}: {}", s.label, s.verdict);
            }
            emit(cli, "stationarity", &cfg, &rep)
        }
        Command::Coint { sel, lag_p, det } => {
            let mut cfg = load_config(cli, Some(sel))?;
            match lag_p.as_deref().map(str::trim) {
                Some("auto") => cfg.johansen.lag_p = None,
                Some(v) => {
                    let p: usize = v
                        .parse()
                        .ok()
                        .filter(|&p| p >= 1)
                        .ok_or_else(|| PipelineError::Config(format!("--lag-p `{v}`: expected a positive integer or `auto`")))?;
                    cfg.johansen.lag_p = Some(p);
                }
                None => {}
            }
            if let Some(det) = det {
                cfg.johansen.det = *det;
            }
            let rep = pipeline::run_cointegration(&cfg, cli.force)?;
            eprintln!(
                "trace r=0: {:.4} (p = {:.4}); selected rank {}",
                rep.johansen.trace_stats[0], rep.johansen.p_values[0], rep.johansen.selected_rank
            );
            emit(cli, "coint", &cfg, &rep)
        }
        Command::Audit {
            sel,
            target,
            trials,
            mu,
            sigma,
            y0,
        } => {
            let mut cfg = load_config(cli, Some(sel))?;
            if let Some(t) = target {
                cfg.audit.target = Some(t.clone());
            }
            if let Some(n) = trials {
                cfg.audit.n_trials = *n;
            }
            if let Some(m) = mu {
                cfg.audit.mu = *m;
            }
            if let Some(s) = sigma {
                cfg.audit.sigma = *s;
            }
            if let Some(y) = y0 {
                cfg.audit.y0 = *y;
            }
            cfg.validate()?;
            let rep = pipeline::run_audit(&cfg, cli.force)?;
            eprintln!(
                "{} rejections in {} trials: false-positive rate {:.3} (95% CI {:.3}-{:.3})",
                rep.rejections, rep.n_trials, rep.false_positive_rate, rep.wilson_ci95.0, rep.wilson_ci95.1
            );
            emit(cli, "audit", &cfg, &rep)
        }
        Command::Simulate {
            len,
            mu,
            sigma,
            y0,
            start,
        } => {
            let spec = RandomWalkSpec {
                len: *len,
                mu: *mu,
                sigma: *sigma,
                y0: *y0,
                seed: cli.seed.unwrap_or(1),
            };
            spec.validate()?;
            let walk = generate_random_walk(&spec);
            let mut text = String::from("year,value\n");
            for (i, v) in walk.values().iter().enumerate() {
                text.push_str(&format!("{},{}\n", start + i as i64, v));
            }
            match &cli.out {
                Some(p) => write(p, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Plot(sel) => {
            let cfg = load_config(cli, Some(sel))?;
            let path = cli
                .out
                .clone()
                .or(cfg.output.plot.clone())
                .ok_or_else(|| PipelineError::Config("plot needs --out or [output] plot".into()))?;
            if cfg.series.len() > pipeline::plot::MAX_PLOT_SERIES {
                return Err(PipelineError::Config(format!(
                    "plot takes 1 to {} series, got {}",
                    pipeline::plot::MAX_PLOT_SERIES,
                    cfg.series.len()
                )));
            }
            let series = pipeline::load_series(&cfg)?;
            let out = pipeline::emit_plot(&series, &path)?;
            eprintln!("wrote {} and {}", out.svg.display(), out.csv.display());
            Ok(())
        }
        Command::Regress(sel) => {
            let cfg = load_config(cli, Some(sel))?;
            if cfg.series.len() != 2 {
                return Err(PipelineError::Config("regress takes exactly 2 series: y, x".into()));
            }
            let registry = DatasetRegistry::new(
                cfg.data_dir
                    .clone()
                    .ok_or_else(|| PipelineError::Config("no data directory: set --data-dir or SPURION_DATA_DIR".into()))?,
            );
            let load = |r: &SeriesRef| pipeline::load_one(&registry, &r.label, &r.transforms, cfg.window);
            let fit = pipeline::levels_regression(&load(&cfg.series[0])?, &load(&cfg.series[1])?)?;
            eprintln!("R² = {:.4}, slope t = {:.2}", fit.r_squared, fit.t_ratio(1));
            emit(cli, "regress", &cfg, &fit)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
