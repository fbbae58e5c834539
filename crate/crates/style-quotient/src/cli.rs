//! Command-line pipeline: validate, fit, backtest, report, simulate.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 input/config error.
//! Structured progress goes to stderr; data goes to files under the
//! output directory.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::choice_model::{
    self, Centering, FitMeta, ModelDocument, SmoothingPolicy, StyleQuotientTable,
};
use crate::features::build_feature_panel;
use crate::forecast::{self, BacktestConfig, EvaluationReport};
use crate::insights;
use crate::panel::{self, WeekFormat};
use crate::synthgen::{self, SynthConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "styleq",
    about = "Style Quotient estimation and demand backtesting for weekly sales panels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeekFormatArg {
    Index,
    Iso,
}

impl From<WeekFormatArg> for WeekFormat {
    fn from(w: WeekFormatArg) -> Self {
        match w {
            WeekFormatArg::Index => WeekFormat::Index,
            WeekFormatArg::Iso => WeekFormat::Iso,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SmoothingArg {
    Drop,
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CenteringArg {
    Geometric,
    Arithmetic,
}

impl From<CenteringArg> for Centering {
    fn from(c: CenteringArg) -> Self {
        match c {
            CenteringArg::Geometric => Centering::Geometric,
            CenteringArg::Arithmetic => Centering::Arithmetic,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimationArgs {
    /// Zero-sale live rows: drop them or Laplace-smooth all shares.
    #[arg(long, value_enum, default_value = "drop")]
    pub smoothing: SmoothingArg,

    /// Laplace smoothing strength (used with --smoothing laplace).
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,

    /// Mean used by the log-centering transform.
    #[arg(long, value_enum, default_value = "geometric")]
    pub centering: CenteringArg,

    /// Minimum live weeks for a style to enter estimation.
    #[arg(long, default_value_t = 4)]
    pub min_live_weeks: usize,
}

impl EstimationArgs {
    fn smoothing_policy(&self) -> SmoothingPolicy {
        match self.smoothing {
            SmoothingArg::Drop => SmoothingPolicy::DropZeros,
            SmoothingArg::Laplace => SmoothingPolicy::Laplace { alpha: self.alpha },
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a panel CSV; reports line-level diagnostics.
    Validate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "index")]
        week_format: WeekFormatArg,
    },

    /// Fit the fixed-effects model and emit model JSON + SQ tables.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "index")]
        week_format: WeekFormatArg,
        /// Restrict fitting to the first N weeks (default: all weeks).
        #[arg(long)]
        train_weeks: Option<u32>,
        #[command(flatten)]
        estimation: EstimationArgs,
        /// Also dump the feature panel CSV for audit.
        #[arg(long)]
        dump_features: bool,
    },

    /// Backtest the four demand models and emit wMAPE tables.
    Backtest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "index")]
        week_format: WeekFormatArg,
        /// Training window length in weeks.
        #[arg(long, default_value_t = 22)]
        train_weeks: u32,
        #[command(flatten)]
        estimation: EstimationArgs,
    },

    /// Decile, histogram, brand, and classification reports for a fitted model.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// Fitted model JSON produced by `fit`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "index")]
        week_format: WeekFormatArg,
        /// Top-seller quantile threshold.
        #[arg(long, default_value_t = 0.9)]
        top_q: f64,
        /// Liquidation quantile threshold.
        #[arg(long, default_value_t = 0.1)]
        bottom_q: f64,
        /// Forward window (last N weeks) for the future-sale rate.
        #[arg(long, default_value_t = 4)]
        forward_weeks: u32,
    },

    /// Generate a synthetic panel with known ground truth.
    Simulate {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        styles: usize,
        #[arg(long, default_value_t = 26)]
        weeks: u32,
        #[arg(long, default_value_t = 50_000)]
        customers: u64,
        #[arg(long, default_value_t = 0.1)]
        noise_std: f64,
    },
}

enum CliError {
    Input(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<panel::PanelError> for CliError {
    fn from(e: panel::PanelError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io error: {e}"))
    }
}

impl From<choice_model::ChoiceModelError> for CliError {
    fn from(e: choice_model::ChoiceModelError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<forecast::ForecastError> for CliError {
    fn from(e: forecast::ForecastError) -> Self {
        match e {
            forecast::ForecastError::Panel(p) => CliError::Input(p.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<synthgen::SynthError> for CliError {
    fn from(e: synthgen::SynthError) -> Self {
        match e {
            synthgen::SynthError::InvalidConfig(m) => CliError::Input(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Validate { input, week_format } => cmd_validate(&input, week_format.into()),
        Command::Fit {
            input,
            out_dir,
            week_format,
            train_weeks,
            estimation,
            dump_features,
        } => cmd_fit(
            &input,
            &out_dir,
            week_format.into(),
            train_weeks,
            &estimation,
            dump_features,
        ),
        Command::Backtest {
            input,
            out_dir,
            week_format,
            train_weeks,
            estimation,
        } => cmd_backtest(&input, &out_dir, week_format.into(), train_weeks, &estimation),
        Command::Report {
            input,
            model,
            out_dir,
            week_format,
            top_q,
            bottom_q,
            forward_weeks,
        } => cmd_report(
            &input,
            &model,
            &out_dir,
            week_format.into(),
            top_q,
            bottom_q,
            forward_weeks,
        ),
        Command::Simulate {
            out_dir,
            seed,
            styles,
            weeks,
            customers,
            noise_std,
        } => cmd_simulate(&out_dir, seed, styles, weeks, customers, noise_std),
    }
}

fn cmd_validate(input: &Path, week_format: WeekFormat) -> Result<(), CliError> {
    let panels = panel::load_panels(input, week_format)?;
    for p in &panels {
        eprintln!(
            "subcategory {}: {} styles, weeks {}..{}, {} observations",
            p.subcategory_id(),
            p.universal_styles().len(),
            p.week_range().0,
            p.week_range().1,
            p.observations().len()
        );
    }
    eprintln!("ok: {} subcategory panel(s)", panels.len());
    Ok(())
}

fn write_sq_csv(path: &Path, sq: &StyleQuotientTable) -> Result<(), CliError> {
    let mut out = String::from("style_id,raw_sq,normalized_sq\n");
    for (style, raw) in &sq.raw_sq {
        out.push_str(&format!("{style},{raw},{}\n", sq.normalized_sq[style]));
    }
    fs::write(path, out)?;
    Ok(())
}

fn cmd_fit(
    input: &Path,
    out_dir: &Path,
    week_format: WeekFormat,
    train_weeks: Option<u32>,
    estimation: &EstimationArgs,
    dump_features: bool,
) -> Result<(), CliError> {
    let panels = panel::load_panels(input, week_format)?;
    fs::create_dir_all(out_dir)?;
    for p in &panels {
        let filtered = p.filter_min_weeks(estimation.min_live_weeks);
        if filtered.universal_styles().is_empty() {
            eprintln!(
                "subcategory {}: no styles pass the {}-week filter, skipping",
                p.subcategory_id(),
                estimation.min_live_weeks
            );
            continue;
        }
        let (first, last) = filtered.week_range();
        let fit_end = match train_weeks {
            Some(t) if t < last => t.max(first),
            _ => last,
        };
        let features = build_feature_panel(&filtered);
        let system = choice_model::build_training_system(
            &filtered,
            &features,
            first..=fit_end,
            estimation.smoothing_policy(),
            estimation.centering.into(),
        )?;
        let model = choice_model::fit_least_squares(
            &system,
            FitMeta {
                subcategory_id: filtered.subcategory_id().to_string(),
                smoothing: estimation.smoothing_policy(),
                centering: estimation.centering.into(),
            },
        )?;
        let sub = filtered.subcategory_id().to_string();
        let document = ModelDocument::from(&model);
        fs::write(out_dir.join(format!("model_{sub}.json")), document.to_json())?;
        let sq = choice_model::style_quotients(&model);
        write_sq_csv(&out_dir.join(format!("sq_{sub}.csv")), &sq)?;
        if dump_features {
            let mut buf = Vec::new();
            features.write_csv(&mut buf)?;
            fs::write(out_dir.join(format!("features_{sub}.csv")), buf)?;
        }
        eprintln!(
            "subcategory {sub}: fit {} rows, {} styles, r2 {:.4}",
            model.diagnostics.rows,
            model.gamma.len(),
            model.diagnostics.r2
        );
    }
    Ok(())
}

fn cmd_backtest(
    input: &Path,
    out_dir: &Path,
    week_format: WeekFormat,
    train_weeks: u32,
    estimation: &EstimationArgs,
) -> Result<(), CliError> {
    let panels = panel::load_panels(input, week_format)?;
    fs::create_dir_all(out_dir)?;
    let config = BacktestConfig {
        train_weeks,
        min_live_weeks: estimation.min_live_weeks,
        smoothing: estimation.smoothing_policy(),
        centering: estimation.centering.into(),
    };
    let mut reports: Vec<EvaluationReport> = Vec::new();
    for p in &panels {
        let (report, _) = forecast::backtest(p, &config)?;
        let mut buf = Vec::new();
        forecast::write_week_table(&report, &mut buf)?;
        fs::write(
            out_dir.join(format!("backtest_weeks_{}.csv", report.subcategory_id)),
            buf,
        )?;
        reports.push(report);
    }

    let mut buf = Vec::new();
    forecast::write_subcategory_table(&reports, &mut buf)?;
    fs::write(out_dir.join("backtest_subcategories.csv"), buf)?;

    let pooled = forecast::pool_reports(&reports);
    let json = serde_json::json!({
        "subcategories": reports,
        "overall": pooled,
    });
    fs::write(
        out_dir.join("backtest.json"),
        serde_json::to_string_pretty(&json).expect("report serializes"),
    )?;
    for report in &reports {
        eprintln!(
            "subcategory {}: wMAPE sq_model {:.1}, mean_intercept {:.1}, normalized_ros {:.1}, simple_ros {:.1}",
            report.subcategory_id,
            report.overall(forecast::ModelKind::SqModel),
            report.overall(forecast::ModelKind::MeanIntercept),
            report.overall(forecast::ModelKind::NormalizedRos),
            report.overall(forecast::ModelKind::SimpleRos),
        );
    }
    Ok(())
}

fn cmd_report(
    input: &Path,
    model_path: &Path,
    out_dir: &Path,
    week_format: WeekFormat,
    top_q: f64,
    bottom_q: f64,
    forward_weeks: u32,
) -> Result<(), CliError> {
    if !(0.0 < bottom_q && bottom_q < top_q && top_q < 1.0) {
        return Err(CliError::Input(format!(
            "quantiles must satisfy 0 < bottom-q < top-q < 1 (got {bottom_q}, {top_q})"
        )));
    }
    let panels = panel::load_panels(input, week_format)?;
    let model_json = fs::read_to_string(model_path)
        .map_err(|e| CliError::Input(format!("cannot read model {}: {e}", model_path.display())))?;
    let document = ModelDocument::from_json(&model_json)
        .map_err(|e| CliError::Input(format!("invalid model JSON: {e}")))?;
    let model = document.into_model();
    let p = panels
        .iter()
        .find(|p| p.subcategory_id() == model.subcategory_id)
        .ok_or_else(|| {
            CliError::Input(format!(
                "subcategory {} from the model not present in the input",
                model.subcategory_id
            ))
        })?;
    fs::create_dir_all(out_dir)?;

    let sq = choice_model::style_quotients(&model);
    let sub = model.subcategory_id.clone();
    let (first, last) = p.week_range();
    let forward_start = last.saturating_sub(forward_weeks.saturating_sub(1)).max(first);

    let deciles = insights::decile_performance(p, &sq, (forward_start, last));
    let mut buf = Vec::new();
    insights::write_decile_csv(&deciles, &mut buf)?;
    fs::write(out_dir.join(format!("deciles_{sub}.csv")), buf)?;

    let brands = insights::brand_mean_sq(p, &sq);
    let mut buf = Vec::new();
    insights::write_brand_csv(&brands, &mut buf)?;
    fs::write(out_dir.join(format!("brands_{sub}.csv")), buf)?;

    let stats = insights::sq_distribution_stats(&sq, 0.4);
    let mut buf = Vec::new();
    insights::write_histogram_csv(&stats, &mut buf)?;
    fs::write(out_dir.join(format!("histogram_{sub}.csv")), buf)?;

    let classes = insights::classify_styles(&sq, top_q, bottom_q);
    let json = serde_json::json!({
        "subcategory_id": sub,
        "distribution": stats,
        "deciles": deciles,
        "brands": brands,
        "classification": classes,
        "forward_window": [forward_start, last],
    });
    fs::write(
        out_dir.join(format!("insights_{sub}.json")),
        serde_json::to_string_pretty(&json).expect("insights serialize"),
    )?;
    eprintln!(
        "subcategory {sub}: {} deciles, {} brands, {} top sellers, {} liquidation candidates",
        deciles.len(),
        brands.len(),
        classes.top_sellers.len(),
        classes.liquidation_candidates.len()
    );
    Ok(())
}

fn cmd_simulate(
    out_dir: &Path,
    seed: u64,
    styles: usize,
    weeks: u32,
    customers: u64,
    noise_std: f64,
) -> Result<(), CliError> {
    let config = SynthConfig {
        n_styles: styles,
        n_weeks: weeks,
        customers_per_week: customers,
        noise_std,
        rng_seed: seed,
        ..Default::default()
    };
    let (panel, truth) = synthgen::generate(&config)?;
    fs::create_dir_all(out_dir)?;
    let mut buf = Vec::new();
    panel.write_csv(&mut buf)?;
    fs::write(out_dir.join("panel.csv"), buf)?;
    fs::write(
        out_dir.join("ground_truth.json"),
        serde_json::to_string_pretty(&truth).expect("ground truth serializes"),
    )?;
    eprintln!(
        "simulated {} styles x {} weeks (seed {seed}) into {}",
        config.n_styles,
        config.n_weeks,
        out_dir.display()
    );
    Ok(())
}
