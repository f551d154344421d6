//! Command-line wiring: ingestion -> deflation -> fitting -> potential.
//!
//! Every run is reproducible: a config file (TOML) captures the scenario,
//! individual flags override it, and identical config + inputs produce
//! byte-identical output. Exit codes are a stable contract: 0 success,
//! 1 usage error, 2 data error, 3 model error.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use metpp::dataio::{
    self, emit_report, parse_category_set, parse_macro_series, parse_sme_series, CategoryName,
    ReportFormat, SmeRecord,
};
use metpp::deflate::{deflate_series, deflate_sme_records, DeflatedSeries};
use metpp::localmodels::{default_exclusions, fit_local_models, included_count, LocalModelSet};
use metpp::potential::{beta_sweep, sweep_years_from_records, PotentialReport, ScenarioParams};
use metpp::Error;

#[derive(Parser, Debug)]
#[command(
    name = "metpp",
    version,
    about = "Estimate technology parks' GDP potential from official statistics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert a nominal GDP series to base-year prices.
    Deflate(DeflateArgs),
    /// Fit the four local models and the per-year average SME revenue.
    Fit(FitArgs),
    /// Run the full chain and sweep the survival uplift beta.
    Potential(PotentialArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Args, Debug, Default)]
pub struct DeflateArgs {
    /// Macro CSV (year,nominal_gdp,inflation).
    #[arg(long = "macro", value_name = "CSV")]
    pub macro_csv: Option<PathBuf>,
    /// Year whose prices anchor the real series.
    #[arg(long)]
    pub base_year: Option<i32>,
    /// table (3 decimals), csv, or json (full precision).
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML config supplying any flag not given on the command line.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct FitArgs {
    #[arg(long = "macro", value_name = "CSV")]
    pub macro_csv: Option<PathBuf>,
    /// SME CSV (see README for the column schema).
    #[arg(long = "sme", value_name = "CSV")]
    pub sme_csv: Option<PathBuf>,
    #[arg(long)]
    pub base_year: Option<i32>,
    /// Deflate turnover columns before fitting (use when the source
    /// publishes nominal turnover).
    #[arg(long)]
    pub deflate_turnover: bool,
    /// Category excluded from the AAR (repeatable; default: medium).
    #[arg(long = "exclude-category", value_name = "NAME")]
    pub exclude_category: Vec<String>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct PotentialArgs {
    #[arg(long = "macro", value_name = "CSV")]
    pub macro_csv: Option<PathBuf>,
    #[arg(long = "sme", value_name = "CSV")]
    pub sme_csv: Option<PathBuf>,
    #[arg(long)]
    pub base_year: Option<i32>,
    /// Share of start-ups surviving without technology parks, in (0, 1].
    #[arg(long)]
    pub k: Option<f64>,
    /// Survival uplift to evaluate (repeatable), each in [0, 1-k].
    #[arg(long = "beta", value_name = "RATIO")]
    pub betas: Vec<f64>,
    /// Multiplier on the average SME revenue (>= 1, default 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Also evaluate the limit uplift beta = 1 - k.
    #[arg(long)]
    pub limit: bool,
    /// Override the fitted SME turnover share d.
    #[arg(long)]
    pub d: Option<f64>,
    /// Override the surviving-SME count taken from the latest SME year.
    #[arg(long)]
    pub n0: Option<u64>,
    /// Override the per-year average SME revenue.
    #[arg(long)]
    pub s1sse: Option<f64>,
    #[arg(long)]
    pub deflate_turnover: bool,
    #[arg(long = "exclude-category", value_name = "NAME")]
    pub exclude_category: Vec<String>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Errors mapped to exit codes by stage of failure.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, or scenario values: exit 1.
    Usage(String),
    /// Unreadable or invalid input data: exit 2.
    Data(Error),
    /// A model could not be fitted or evaluated: exit 3.
    Model(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Model(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Data(e) => write!(f, "{e}"),
            CliError::Model(e) => write!(f, "{e}"),
        }
    }
}

/// Values a TOML config file may supply; flags always win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub macro_csv: Option<PathBuf>,
    pub sme_csv: Option<PathBuf>,
    pub base_year: Option<i32>,
    pub k: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub alpha: Option<f64>,
    pub limit: Option<bool>,
    pub d: Option<f64>,
    pub n0: Option<u64>,
    pub s1sse: Option<f64>,
    pub deflate_turnover: Option<bool>,
    pub exclude_categories: Option<Vec<String>>,
    pub format: Option<OutputFormat>,
    pub out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            toml::from_str(&text)
                .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
        }
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing required value: {flag}")))
}

/// Run a parsed command. Returns `Some(output)` to print on stdout, or
/// `None` when `--out` consumed it.
pub fn execute(cli: Cli) -> Result<Option<String>, CliError> {
    let (rendered, out) = match cli.command {
        Command::Deflate(args) => run_deflate(args)?,
        Command::Fit(args) => run_fit(args)?,
        Command::Potential(args) => run_potential(args)?,
    };
    match out {
        Some(path) => {
            fs::write(&path, &rendered).map_err(|e| CliError::Data(e.into()))?;
            Ok(None)
        }
        None => Ok(Some(rendered)),
    }
}

/// Like [`execute`] but always hands the rendered output back, writing
/// `--out` as a side effect. Used by tests.
pub fn execute_captured(cli: Cli) -> Result<String, CliError> {
    let (rendered, out) = match cli.command {
        Command::Deflate(args) => run_deflate(args)?,
        Command::Fit(args) => run_fit(args)?,
        Command::Potential(args) => run_potential(args)?,
    };
    if let Some(path) = out {
        fs::write(&path, &rendered).map_err(|e| CliError::Data(e.into()))?;
    }
    Ok(rendered)
}

fn read_macro(path: &Path) -> Result<Vec<dataio::MacroRecord>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Data(e.into()))?;
    parse_macro_series(file).map_err(CliError::Data)
}

fn read_sme(path: &Path) -> Result<Vec<SmeRecord>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Data(e.into()))?;
    parse_sme_series(file).map_err(CliError::Data)
}

fn exclusions(
    flags: &[String],
    config: Option<Vec<String>>,
) -> Result<BTreeSet<CategoryName>, CliError> {
    let names = if !flags.is_empty() {
        flags.to_vec()
    } else if let Some(from_config) = config {
        from_config
    } else {
        return Ok(default_exclusions());
    };
    parse_category_set(&names).map_err(CliError::Usage)
}

// ----------------------------------------------------------------------
// deflate
// ----------------------------------------------------------------------

fn run_deflate(args: DeflateArgs) -> Result<(String, Option<PathBuf>), CliError> {
    let config = load_config(args.config.as_deref())?;
    let macro_path = require(args.macro_csv.or(config.macro_csv), "--macro")?;
    let base_year = require(args.base_year.or(config.base_year), "--base-year")?;
    let format = args.format.or(config.format).unwrap_or(OutputFormat::Table);
    let out = args.out.or(config.out);

    let series = read_macro(&macro_path)?;
    let deflated = deflate_series(&series, base_year).map_err(CliError::Data)?;

    let rendered = match format {
        OutputFormat::Table => deflate_table(&deflated),
        OutputFormat::Csv => deflate_csv(&deflated),
        OutputFormat::Json => to_pretty_json(&deflated)?,
    };
    Ok((rendered, out))
}

fn deflate_table(series: &DeflatedSeries) -> String {
    let mut s = format!(
        "{:>6} {:>14} {:>10} {:>16} {:>9} {:>14}\n",
        "year", "nominal_gdp", "inflation", "total_inflation", "deflator", "real_gdp"
    );
    for y in &series.years {
        let nominal = y.nominal.map_or(String::new(), |v| format!("{v:.3}"));
        let real = y.real.map_or(String::new(), |v| format!("{v:.3}"));
        s.push_str(&format!(
            "{:>6} {:>14} {:>10.3} {:>16.3} {:>9.3} {:>14}\n",
            y.year, nominal, y.inflation, y.total_inflation, y.deflator, real
        ));
    }
    s
}

fn deflate_csv(series: &DeflatedSeries) -> String {
    let mut s = String::from("year,nominal_gdp,inflation,total_inflation,deflator,real_gdp\n");
    for y in &series.years {
        let nominal = y.nominal.map_or(String::new(), |v| v.to_string());
        let real = y.real.map_or(String::new(), |v| v.to_string());
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            y.year, nominal, y.inflation, y.total_inflation, y.deflator, real
        ));
    }
    s
}

// ----------------------------------------------------------------------
// fit
// ----------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct AarYear {
    year: i32,
    s1sse: f64,
}

#[derive(Debug, Serialize)]
struct FitOutput<'a> {
    base_year: i32,
    deflate_turnover: bool,
    excluded_categories: Vec<String>,
    mid: &'a metpp::regress::PolyModel,
    smegm: &'a metpp::regress::PolyModel,
    fmi: &'a metpp::regress::PolyModel,
    smefm: &'a metpp::regress::ProportionalModel,
    aar: Vec<AarYear>,
}

/// The shared front half of `fit` and `potential`: ingest, deflate,
/// optionally deflate turnover, fit on the shared years.
struct FittedChain {
    base_year: i32,
    sme: Vec<SmeRecord>,
    models: LocalModelSet,
}

fn fit_chain(
    macro_path: &Path,
    sme_path: &Path,
    base_year: i32,
    deflate_turnover: bool,
    exclude: &BTreeSet<CategoryName>,
) -> Result<FittedChain, CliError> {
    let macro_series = read_macro(macro_path)?;
    let mut sme = read_sme(sme_path)?;
    let deflated = deflate_series(&macro_series, base_year).map_err(CliError::Data)?;
    if deflate_turnover {
        sme = deflate_sme_records(&sme, &deflated.total_inflation_map())
            .map_err(CliError::Data)?;
    }
    let models = fit_local_models(&deflated.real_map(), &sme, exclude).map_err(CliError::Model)?;
    Ok(FittedChain {
        base_year,
        sme,
        models,
    })
}

fn run_fit(args: FitArgs) -> Result<(String, Option<PathBuf>), CliError> {
    let config = load_config(args.config.as_deref())?;
    let macro_path = require(args.macro_csv.or(config.macro_csv), "--macro")?;
    let sme_path = require(args.sme_csv.or(config.sme_csv), "--sme")?;
    let base_year = require(args.base_year.or(config.base_year), "--base-year")?;
    let deflate_turnover = args.deflate_turnover || config.deflate_turnover.unwrap_or(false);
    let exclude = exclusions(&args.exclude_category, config.exclude_categories)?;
    let format = args.format.or(config.format).unwrap_or(OutputFormat::Json);
    if format != OutputFormat::Json {
        return Err(CliError::Usage(
            "fit emits json only; use --format json".into(),
        ));
    }
    let out = args.out.or(config.out);

    let chain = fit_chain(&macro_path, &sme_path, base_year, deflate_turnover, &exclude)?;
    let output = FitOutput {
        base_year,
        deflate_turnover,
        excluded_categories: exclude.iter().map(|c| c.to_string()).collect(),
        mid: &chain.models.mid,
        smegm: &chain.models.smegm,
        fmi: &chain.models.fmi,
        smefm: &chain.models.smefm,
        aar: chain
            .models
            .aar_series
            .iter()
            .map(|(&year, &s1sse)| AarYear { year, s1sse })
            .collect(),
    };
    Ok((to_pretty_json(&output)?, out))
}

// ----------------------------------------------------------------------
// potential
// ----------------------------------------------------------------------

/// Run the potential chain and hand back the structured report.
pub fn build_potential_report(args: PotentialArgs) -> Result<PotentialReport, CliError> {
    let config = load_config(args.config.as_deref())?;
    let macro_path = require(args.macro_csv.or(config.macro_csv), "--macro")?;
    let sme_path = require(args.sme_csv.or(config.sme_csv), "--sme")?;
    let base_year = require(args.base_year.or(config.base_year), "--base-year")?;
    let k = require(args.k.or(config.k), "--k")?;
    let alpha = args.alpha.or(config.alpha).unwrap_or(1.0);
    let limit = args.limit || config.limit.unwrap_or(false);
    let deflate_turnover = args.deflate_turnover || config.deflate_turnover.unwrap_or(false);
    let exclude = exclusions(&args.exclude_category, config.exclude_categories)?;
    let d_override = args.d.or(config.d);
    let n0_override = args.n0.or(config.n0);
    let s1sse_override = args.s1sse.or(config.s1sse);

    let mut betas = if !args.betas.is_empty() {
        args.betas.clone()
    } else {
        config.betas.unwrap_or_default()
    };
    if limit {
        betas.push(1.0 - k);
    }
    if betas.is_empty() {
        return Err(CliError::Usage(
            "no sweep points: give at least one --beta or --limit".into(),
        ));
    }
    betas.sort_by(f64::total_cmp);
    betas.dedup();

    // Scenario validation happens before any data is read or model fitted.
    validate_scenario_inputs(k, &betas, alpha, d_override, n0_override, s1sse_override)?;

    let chain = fit_chain(&macro_path, &sme_path, base_year, deflate_turnover, &exclude)?;

    let d = d_override.unwrap_or(chain.models.smefm.d);
    let n0 = match n0_override {
        Some(n0) => n0,
        None => {
            let latest = chain.sme.last().expect("parsed sme series is nonempty");
            included_count(latest, &exclude)
        }
    };
    let years = sweep_years_from_records(&chain.sme, &chain.models.aar_series, s1sse_override)
        .map_err(CliError::Model)?;
    let scenario_s1sse = s1sse_override
        .or_else(|| years.last().map(|y| y.s1sse))
        .expect("sweep years are nonempty");
    let template =
        ScenarioParams::new(k, 0.0, d, n0, scenario_s1sse, alpha).map_err(CliError::Model)?;

    beta_sweep(&chain.models.fmi, &template, &betas, &years, chain.base_year)
        .map_err(CliError::Model)
}

fn validate_scenario_inputs(
    k: f64,
    betas: &[f64],
    alpha: f64,
    d: Option<f64>,
    n0: Option<u64>,
    s1sse: Option<f64>,
) -> Result<(), CliError> {
    let usage = |e: Error| CliError::Usage(e.to_string());
    if !(k > 0.0 && k <= 1.0) {
        return Err(usage(Error::KOutOfRange { k }));
    }
    for &beta in betas {
        if !(0.0..=1.0 - k).contains(&beta) {
            return Err(usage(Error::BetaOutOfRange {
                beta,
                max: 1.0 - k,
            }));
        }
    }
    if !(alpha >= 1.0) {
        return Err(usage(Error::AlphaOutOfRange { alpha }));
    }
    if let Some(d) = d {
        if !(0.0..=1.0).contains(&d) {
            return Err(usage(Error::DOutOfRange { d }));
        }
    }
    if n0 == Some(0) {
        return Err(usage(Error::NonPositiveN0));
    }
    if let Some(s1sse) = s1sse {
        if !(s1sse > 0.0) {
            return Err(usage(Error::NonPositiveAar { s1sse }));
        }
    }
    Ok(())
}

fn run_potential(args: PotentialArgs) -> Result<(String, Option<PathBuf>), CliError> {
    let config = load_config(args.config.as_deref())?;
    let format = args.format.or(config.format).unwrap_or(OutputFormat::Json);
    let out = args.out.clone().or(config.out);

    let report = build_potential_report(args)?;
    let rendered = match format {
        OutputFormat::Json => emit_report(&report, ReportFormat::Json),
        OutputFormat::Csv => emit_report(&report, ReportFormat::Csv),
        OutputFormat::Table => potential_table(&report),
    };
    Ok((rendered, out))
}

fn potential_table(report: &PotentialReport) -> String {
    let mut s = format!(
        "base year {} | k={} d={} n0={} s1sse={} alpha={}\n",
        report.base_year,
        report.scenario.k,
        report.scenario.d,
        report.scenario.n0,
        report.scenario.s1sse,
        report.scenario.alpha
    );
    s.push_str(&format!(
        "{:>8} {:>6} {:>14} {:>14} {:>14} {:>9}\n",
        "beta", "year", "g", "delta_g", "epsilon", "aar_from"
    ));
    for row in &report.rows {
        let aar_from = row.aar_from_year.map_or(String::new(), |y| y.to_string());
        s.push_str(&format!(
            "{:>8.4} {:>6} {:>14.3} {:>14.3} {:>14.3} {:>9}\n",
            row.beta, row.year, row.g, row.delta_g, row.epsilon, aar_from
        ));
    }
    s
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Data(Error::Json(e)))?;
    s.push('\n');
    Ok(s)
}
