//! `mtvlint`: lint charts with metamorphic tests.
//!
//! Exit codes: 0 when every applicable test passes, 1 when a test fails,
//! 2 on unreadable input, an invalid spec, or an I/O failure.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mtvlint_core::chartspec::parse_spec;
use mtvlint_core::data::load_auto;
use mtvlint_core::report::{run_test, EXIT_FAIL, EXIT_INPUT, EXIT_OK};
use mtvlint_core::simlab::{self, TrendCheck};
use mtvlint_core::{
    compile, lint_loaded, morphed_scenes, rasterize, render_overlay, validate_spec, ChartSpec,
    DataMorphism, LintConfig, Severity, Table, TestName, Verdict,
};

#[derive(Parser)]
#[command(
    name = "mtvlint",
    version,
    about = "Find visualization mirages with metamorphic tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every applicable test on a chart and print a JSON report.
    Lint {
        spec: PathBuf,
        data: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Exit 1 on validation warnings too.
        #[arg(long)]
        strict: bool,
        /// Skip a test (repeatable): shuffle, opacity, bootstrap, contract, randomize.
        #[arg(long = "disable", value_name = "TEST", value_parser = parse_test_name)]
        disabled: Vec<TestName>,
    },
    /// Run a single test and print its JSON result.
    Test {
        spec: PathBuf,
        data: PathBuf,
        /// shuffle, opacity, bootstrap, contract or randomize.
        #[arg(long, value_parser = parse_test_name)]
        morphism: TestName,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the 600-dataset simulation grid and write a summary CSV.
    Simulate {
        #[arg(long, env = "MTVLINT_SEED", default_value_t = 0)]
        seed: u64,
        /// Trials per test per dataset.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Output directory.
        #[arg(long, default_value = "mtv-sim")]
        out: PathBuf,
        /// Also write every cell to cells.json.
        #[arg(long)]
        cells_json: bool,
    },
    /// Rasterize a chart, or overlay bootstrapped versions of it.
    Render {
        spec: PathBuf,
        data: PathBuf,
        /// Output image; `.png` writes PNG, anything else binary PPM.
        #[arg(long)]
        out: PathBuf,
        /// Overlay this many bootstrap resamples instead of the plain chart.
        #[arg(long, value_name = "N")]
        bootstrap: Option<usize>,
        /// Mark opacity multiplier for each overlay layer.
        #[arg(long, default_value_t = 0.05)]
        layer_opacity: f64,
        #[arg(long, env = "MTVLINT_SEED", default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Trials per randomized test.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Fraction of trials that must pass.
    #[arg(long, default_value_t = 0.95)]
    epsilon: f64,
    /// Master seed; falls back to MTVLINT_SEED.
    #[arg(long, env = "MTVLINT_SEED", default_value_t = 0)]
    seed: u64,
    /// Opacity multiplier for the opacity test.
    #[arg(long, default_value_t = 0.5)]
    opacity_factor: f64,
}

impl RunArgs {
    fn config(&self, disabled: BTreeSet<TestName>) -> Result<LintConfig> {
        if self.trials == 0 {
            bail!("--trials must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            bail!("--epsilon must be in [0, 1]");
        }
        if !(self.opacity_factor > 0.0 && self.opacity_factor <= 1.0) {
            bail!("--opacity-factor must be in (0, 1]");
        }
        Ok(LintConfig {
            trials: self.trials,
            pass_threshold: self.epsilon,
            seed: self.seed,
            opacity_factor: self.opacity_factor,
            disabled,
        })
    }
}

fn parse_test_name(s: &str) -> Result<TestName, String> {
    TestName::parse(s).ok_or_else(|| {
        let names: Vec<_> = TestName::ALL.iter().map(|t| t.as_str()).collect();
        format!("unknown test '{s}', expected one of {}", names.join(", "))
    })
}

fn load_inputs(spec: &Path, data: &Path) -> Result<(ChartSpec, Table)> {
    let text = fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let spec = parse_spec(&text).with_context(|| format!("in spec {}", spec.display()))?;
    let bytes = fs::read(data).with_context(|| format!("reading {}", data.display()))?;
    let table = load_auto(&bytes).with_context(|| format!("in data {}", data.display()))?;
    Ok((spec, table))
}

/// Fails with every validation error listed; warnings go to stderr.
fn require_valid(spec: &ChartSpec, table: &Table) -> Result<()> {
    let issues = validate_spec(spec, table);
    for i in issues.iter().filter(|i| i.severity == Severity::Warning) {
        eprintln!("warning: {}: {}", i.path, i.message);
    }
    let errors: Vec<_> = issues
        .iter()
        .filter(|i| i.severity == Severity::Error)
        .map(|i| format!("{}: {}", i.path, i.message))
        .collect();
    if !errors.is_empty() {
        bail!("spec does not match the data: {}", errors.join("; "));
    }
    Ok(())
}

/// Writes through a sibling temporary file so readers never see a partial file.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn lint(
    spec: &Path,
    data: &Path,
    run: &RunArgs,
    strict: bool,
    disabled: Vec<TestName>,
) -> Result<i32> {
    let config = run.config(disabled.into_iter().collect())?;
    let (spec, table) = load_inputs(spec, data)?;
    let report = lint_loaded(&spec, &table, &config)?;
    for i in &report.validation {
        let level = match i.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        eprintln!("{level}: {}: {}", i.path, i.message);
    }
    print_json(&report);
    Ok(report.exit_code(strict))
}

fn single_test(spec: &Path, data: &Path, name: TestName, run: &RunArgs) -> Result<i32> {
    let config = run.config(BTreeSet::new())?;
    let (spec, table) = load_inputs(spec, data)?;
    require_valid(&spec, &table)?;
    let report = run_test(name, &spec, &table, &config)?;
    print_json(&report);
    Ok(if report.verdict == Verdict::Fail {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    seed: u64,
    trials: usize,
    cells: usize,
    summary_rows: usize,
    summary_csv: String,
    cells_json: Option<String>,
    trend_checks: &'a [TrendCheck],
}

fn simulate(seed: u64, trials: usize, out: &Path, cells_json: bool) -> Result<i32> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let cells = simlab::run_experiment(seed, trials)?;
    let rows = simlab::summarize(&cells)?;
    let csv_path = out.join("summary.csv");
    write_atomic(&csv_path, simlab::summary_csv(&rows)?.as_bytes())?;
    let json_path = if cells_json {
        let p = out.join("cells.json");
        write_atomic(&p, serde_json::to_string_pretty(&cells)?.as_bytes())?;
        Some(p)
    } else {
        None
    };
    let checks = simlab::trend_checks(&rows);
    for c in &checks {
        let rho = c.rho.map_or("undefined".to_string(), |r| format!("{r:.3}"));
        eprintln!(
            "trend {}/{}: rho = {rho} ({})",
            c.test,
            c.manipulation,
            if c.pass {
                "increasing"
            } else {
                "not increasing"
            }
        );
    }
    print_json(&SimulateSummary {
        seed,
        trials,
        cells: cells.len(),
        summary_rows: rows.len(),
        summary_csv: csv_path.display().to_string(),
        cells_json: json_path.map(|p| p.display().to_string()),
        trend_checks: &checks,
    });
    Ok(EXIT_OK)
}

fn render(
    spec: &Path,
    data: &Path,
    out: &Path,
    bootstrap: Option<usize>,
    layer_opacity: f64,
    seed: u64,
) -> Result<i32> {
    let (spec, table) = load_inputs(spec, data)?;
    require_valid(&spec, &table)?;
    let img = match bootstrap {
        None => rasterize(&compile(&spec, &table)?)?,
        Some(n) => {
            if n == 0 {
                bail!("--bootstrap needs at least one resample");
            }
            if !(layer_opacity > 0.0 && layer_opacity <= 1.0) {
                bail!("--layer-opacity must be in (0, 1]");
            }
            let Some((cat, val)) = spec.category_and_value() else {
                bail!("bootstrap overlays need a chart with a category and a value channel");
            };
            if !spec.is_aggregated_bar() {
                bail!("bootstrap overlays need an aggregated bar chart");
            }
            let alpha = DataMorphism::Bootstrap {
                category_field: cat.field.clone(),
                value_field: val.field.clone(),
            };
            render_overlay(
                &morphed_scenes(&spec, &table, &alpha, n, seed)?,
                layer_opacity,
            )?
        }
    };
    let is_png = out
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png { img.to_png()? } else { img.to_ppm() };
    write_atomic(out, &bytes)?;
    eprintln!(
        "wrote {}x{} image to {}",
        img.width(),
        img.height(),
        out.display()
    );
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Lint {
            spec,
            data,
            run,
            strict,
            disabled,
        } => lint(spec, data, run, *strict, disabled.clone()),
        Command::Test {
            spec,
            data,
            morphism,
            run,
        } => single_test(spec, data, *morphism, run),
        Command::Simulate {
            seed,
            trials,
            out,
            cells_json,
        } => simulate(*seed, *trials, out, *cells_json),
        Command::Render {
            spec,
            data,
            out,
            bootstrap,
            layer_opacity,
            seed,
        } => render(spec, data, out, *bootstrap, *layer_opacity, *seed),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
