//! The linter: runs the applicable metamorphic tests on one chart and turns
//! the outcomes into mirage warnings.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::chartspec::{
    has_errors, parse_spec, validate_spec, ChartSpec, Severity, SpecError, ValidationIssue,
};
use crate::data::{load_auto, DataError, Table};
use crate::morphisms::{DataMorphism, VisualMorphism};
use crate::mtv::{run_statistical, EqualityMeasure, MtvConfig, MtvError, MtvOutcome, Verdict};
use crate::scene::{compile, Geometry, SceneError};

pub const DEFAULT_OPACITY_FACTOR: f64 = 0.5;

/// Differing pixels tolerated per line segment in the opacity relation.
/// Adjacent segments of one polyline share a round-capped endpoint, and
/// that small overlap is not hiding any data.
pub const LINE_JOINT_ALLOWANCE: u64 = 16;

/// A randomize trial counts as dissimilar from the original when its
/// mean-centered bar heights are further from the original's than this
/// fraction of the original's spread.
pub const DISSIMILARITY_RATIO: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum LintError {
    #[error("spec: {0}")]
    Spec(#[from] SpecError),

    #[error("data: {0}")]
    Data(#[from] DataError),

    #[error(transparent)]
    Mtv(#[from] MtvError),

    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TestName {
    Shuffle,
    Opacity,
    Bootstrap,
    Contract,
    Randomize,
}

impl TestName {
    pub const ALL: [TestName; 5] = [
        TestName::Shuffle,
        TestName::Opacity,
        TestName::Bootstrap,
        TestName::Contract,
        TestName::Randomize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TestName::Shuffle => "shuffle",
            TestName::Opacity => "opacity",
            TestName::Bootstrap => "bootstrap",
            TestName::Contract => "contract",
            TestName::Randomize => "randomize",
        }
    }

    pub fn parse(name: &str) -> Option<TestName> {
        TestName::ALL.into_iter().find(|t| t.as_str() == name)
    }

    /// Tests that compare bar heights and need an aggregated bar chart.
    pub fn needs_aggregated_bar(self) -> bool {
        matches!(
            self,
            TestName::Bootstrap | TestName::Contract | TestName::Randomize
        )
    }
}

impl fmt::Display for TestName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LintConfig {
    pub trials: usize,
    pub pass_threshold: f64,
    pub seed: u64,
    pub opacity_factor: f64,
    pub disabled: BTreeSet<TestName>,
}

impl Default for LintConfig {
    fn default() -> Self {
        LintConfig {
            trials: crate::mtv::DEFAULT_TRIALS,
            pass_threshold: crate::mtv::DEFAULT_PASS_THRESHOLD,
            seed: 0,
            opacity_factor: DEFAULT_OPACITY_FACTOR,
            disabled: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statistic {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub name: TestName,
    pub applicable: bool,
    pub verdict: Verdict,
    pub pass_fraction: Option<f64>,
    pub statistics: Vec<Statistic>,
    /// The mirage class a failure points to.
    pub mirage: Option<&'static str>,
    /// True when the verdict rests on a heuristic cut-off rather than on an
    /// exact relation.
    pub heuristic: bool,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartSummary {
    pub mark: &'static str,
    pub aggregated: bool,
    pub encoding: serde_json::Value,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LintReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: LintConfig,
    pub chart: ChartSummary,
    pub validation: Vec<ValidationIssue>,
    pub tests: Vec<TestReport>,
    pub counts: Counts,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

impl LintReport {
    pub fn has_validation_errors(&self) -> bool {
        has_errors(&self.validation)
    }

    /// 0 when everything applicable passed, 1 when some test failed, 2 when
    /// the spec does not validate against the data. With `strict`,
    /// validation warnings also give 1.
    pub fn exit_code(&self, strict: bool) -> i32 {
        if self.has_validation_errors() {
            EXIT_INPUT
        } else if self.counts.fail > 0
            || (strict
                && self
                    .validation
                    .iter()
                    .any(|i| i.severity == Severity::Warning))
        {
            EXIT_FAIL
        } else {
            EXIT_OK
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Parses inputs, then lints. Parse failures are errors; a spec that does not
/// validate against the data yields a report carrying only the issues.
pub fn lint_chart(
    spec_text: &str,
    data: &[u8],
    config: &LintConfig,
) -> Result<LintReport, LintError> {
    let spec = parse_spec(spec_text)?;
    let table = load_auto(data)?;
    lint_loaded(&spec, &table, config)
}

pub fn lint_loaded(
    spec: &ChartSpec,
    table: &Table,
    config: &LintConfig,
) -> Result<LintReport, LintError> {
    let validation = validate_spec(spec, table);
    let mut report = LintReport {
        tool: "mtvlint",
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        config: config.clone(),
        chart: ChartSummary {
            mark: spec.mark.as_str(),
            aggregated: spec.is_aggregated(),
            encoding: spec.to_json()["encoding"].clone(),
        },
        validation,
        tests: Vec::new(),
        counts: Counts::default(),
    };
    if report.has_validation_errors() {
        return Ok(report);
    }
    for name in TestName::ALL {
        if config.disabled.contains(&name) {
            continue;
        }
        let t = run_test(name, spec, table, config)?;
        match t.verdict {
            Verdict::Pass => report.counts.pass += 1,
            Verdict::Fail => report.counts.fail += 1,
            Verdict::NotApplicable => report.counts.not_applicable += 1,
        }
        report.tests.push(t);
    }
    Ok(report)
}

/// The morphism a named test applies, given the chart's grouping fields.
pub fn test_morphism(name: TestName, spec: &ChartSpec) -> Option<DataMorphism> {
    let fields = spec
        .category_and_value()
        .map(|(c, v)| (c.field.clone(), v.field.clone()));
    match name {
        TestName::Shuffle => Some(DataMorphism::Shuffle),
        TestName::Opacity => Some(DataMorphism::Identity),
        TestName::Bootstrap => {
            fields.map(|(category_field, value_field)| DataMorphism::Bootstrap {
                category_field,
                value_field,
            })
        }
        TestName::Contract => {
            fields.map(
                |(category_field, value_field)| DataMorphism::ContractRecords {
                    category_field,
                    value_field,
                },
            )
        }
        TestName::Randomize => {
            fields.map(
                |(category_field, value_field)| DataMorphism::RandomizeAssignment {
                    category_field,
                    value_field,
                },
            )
        }
    }
}

fn not_applicable(name: TestName, why: &str) -> TestReport {
    TestReport {
        name,
        applicable: false,
        verdict: Verdict::NotApplicable,
        pass_fraction: None,
        statistics: Vec::new(),
        mirage: None,
        heuristic: false,
        message: why.to_string(),
    }
}

fn max_diff(out: &MtvOutcome) -> f64 {
    out.trials.iter().filter_map(|t| t.diff).max().unwrap_or(0) as f64
}

fn opacity_threshold(spec: &ChartSpec, table: &Table) -> Result<u64, LintError> {
    let scene = compile(spec, table)?;
    let segments = scene
        .marks
        .iter()
        .filter(|m| matches!(m.geometry, Geometry::Segment { .. }))
        .count() as u64;
    Ok(segments * LINE_JOINT_ALLOWANCE)
}

pub fn run_test(
    name: TestName,
    spec: &ChartSpec,
    table: &Table,
    config: &LintConfig,
) -> Result<TestReport, LintError> {
    if name.needs_aggregated_bar() && !spec.is_aggregated_bar() {
        return Ok(not_applicable(name, "requires an aggregated bar chart"));
    }
    let alpha = test_morphism(name, spec).expect("aggregated bars have grouping fields");
    let mut mtv = MtvConfig {
        alpha,
        omega: VisualMorphism::Identity,
        eq: EqualityMeasure::BarHeightOrder { tolerance: 0.0 },
        trials: config.trials,
        pass_threshold: config.pass_threshold,
        seed: config.seed,
    };
    match name {
        TestName::Shuffle => mtv.eq = EqualityMeasure::pixels(0),
        TestName::Opacity => {
            mtv.omega = VisualMorphism::OpacityScale {
                f: config.opacity_factor,
            };
            mtv.eq = EqualityMeasure::PixelCount {
                threshold: opacity_threshold(spec, table)?,
                channel_tolerance: 1,
            };
            // Nothing random: a single evaluation decides.
            mtv.trials = 1;
        }
        _ => {}
    }
    let out = run_statistical(&mtv, spec, table)?;
    if out.verdict == Verdict::NotApplicable {
        return Ok(not_applicable(
            name,
            out.reason.as_deref().unwrap_or("not applicable"),
        ));
    }
    let pf = out.pass_fraction.expect("applicable outcome");
    let n = out.trials.len();
    let failed = n - out.passed;
    let mut report = TestReport {
        name,
        applicable: true,
        verdict: out.verdict,
        pass_fraction: Some(pf),
        statistics: Vec::new(),
        mirage: None,
        heuristic: false,
        message: String::new(),
    };
    if let Some(v) = out.height_diff_variance {
        report.statistics.push(Statistic {
            name: "height_diff_variance",
            value: v,
        });
    }
    let pass = out.verdict == Verdict::Pass;
    match name {
        TestName::Shuffle => {
            report.statistics.push(Statistic {
                name: "max_pixel_diff",
                value: max_diff(&out),
            });
            report.message = if pass {
                format!(
                    "rendering is stable under row order ({}/{n} shuffles identical)",
                    out.passed
                )
            } else {
                report.mirage = Some("overplotting");
                format!(
                    "Overplotting: {failed}/{n} row shuffles changed the image (up to {} pixels); \
                     marks overlap and draw order decides which data stays visible",
                    max_diff(&out)
                )
            };
        }
        TestName::Opacity => {
            let diff = max_diff(&out);
            report.statistics.push(Statistic {
                name: "max_pixel_diff",
                value: diff,
            });
            report.message = if pass {
                format!(
                    "lowering mark opacity to {} matches fading the image; no marks hide each other",
                    config.opacity_factor
                )
            } else {
                report.mirage = Some("overplotting");
                let what = if spec.mark == crate::chartspec::MarkKind::Bar && !spec.is_aggregated()
                {
                    "several records share one bar position and are drawn on top of each other"
                } else {
                    "marks are drawn on top of each other"
                };
                format!(
                    "Overplotting: lowering mark opacity to {} differs from fading the image in {diff} pixels; {what}",
                    config.opacity_factor
                )
            };
        }
        TestName::Bootstrap => {
            report.message = if pass {
                format!("bar order held in {}/{n} bootstrap resamples", out.passed)
            } else {
                report.mirage = Some("outlier-driven difference");
                format!(
                    "Outliers / Concealed Uncertainty: bar order changed in {failed}/{n} bootstrap resamples; \
                     the difference may rest on a few extreme values or on high variance"
                )
            };
        }
        TestName::Contract => {
            report.message = if pass {
                format!(
                    "bar order held in {}/{n} resamples cut to the smallest group size",
                    out.passed
                )
            } else {
                report.mirage = Some("unequal group sizes");
                format!(
                    "Differing Number of Records by Group: bar order changed in {failed}/{n} trials \
                     after cutting every group to the smallest group's size"
                )
            };
        }
        TestName::Randomize => {
            // Here a high order-preservation rate is the warning sign: if
            // random group assignment keeps the original picture, the
            // difference between bars may be noise.
            let base = out.baseline_heights.clone().unwrap_or_default();
            let dissimilar = dissimilar_fraction(&out, &base);
            report.statistics.push(Statistic {
                name: "dissimilar_fraction",
                value: dissimilar,
            });
            report.heuristic = true;
            if dissimilar >= config.pass_threshold {
                report.verdict = Verdict::Pass;
                report.message = format!(
                    "signal present: {:.0}% of random group assignments looked clearly different from the chart (heuristic)",
                    dissimilar * 100.0
                );
            } else {
                report.verdict = Verdict::Fail;
                report.mirage = Some("possible noise");
                report.message = format!(
                    "Concealed Uncertainty: only {:.0}% of random group assignments looked clearly different \
                     from the chart; the differences between bars may be noise (heuristic)",
                    dissimilar * 100.0
                );
            }
        }
    }
    Ok(report)
}

fn centered(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len().max(1) as f64;
    v.iter().map(|x| x - m).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Fraction of trials whose mean-centered bar heights differ from the
/// original's by more than [`DISSIMILARITY_RATIO`] of the original's norm.
pub fn dissimilar_fraction(out: &MtvOutcome, baseline: &[(crate::data::Value, f64)]) -> f64 {
    if out.trials.is_empty() {
        return 0.0;
    }
    let base = centered(&baseline.iter().map(|(_, v)| *v).collect::<Vec<_>>());
    let cut = DISSIMILARITY_RATIO * norm(&base);
    let hits = out
        .trials
        .iter()
        .filter(|t| {
            let Some(h) = &t.heights else { return false };
            let vals: Vec<f64> = baseline
                .iter()
                .map(|(c, _)| h.iter().find(|(k, _)| k == c).map_or(0.0, |(_, v)| *v))
                .collect();
            let d: Vec<f64> = centered(&vals)
                .iter()
                .zip(&base)
                .map(|(a, b)| a - b)
                .collect();
            norm(&d) > cut
        })
        .count();
    hits as f64 / out.trials.len() as f64
}
