//! The metamorphic test runner.
//!
//! A single trial evaluates `Eq(v(α(x)), ω(v(x)))`: the left side renders the
//! morphed data (under the ω-adjusted spec, for the opacity relation), the
//! right side applies ω to the rendering of the original. The statistical
//! runner repeats this N times with independently derived seeds and passes
//! when at least an ε fraction of trials pass.

use rayon::prelude::*;
use serde::Serialize;

use crate::chartspec::{has_errors, validate_spec, ChartSpec, ValidationIssue};
use crate::data::{Table, Value};
use crate::morphisms::{apply_visual, DataMorphism, MorphismError, VisualMorphism};
use crate::raster::{
    blend_toward_background, chi2_histogram_distance, draw_scene, pixel_diff_within, rasterize,
    RasterError, RasterImage,
};
use crate::rng::Rng;
use crate::scene::{bar_heights, compile, compile_with_extent, SceneError, SceneGraph};
use crate::stats::sample_variance;

pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_PASS_THRESHOLD: f64 = 0.95;

/// Bar values in display order, in data units.
pub type Heights = Vec<(Value, f64)>;

#[derive(Debug, thiserror::Error)]
pub enum MtvError {
    #[error("spec does not validate against the data: {}", summarize_issues(.0))]
    InvalidSpec(Vec<ValidationIssue>),

    #[error(transparent)]
    Scene(#[from] SceneError),

    #[error(transparent)]
    Raster(#[from] RasterError),

    #[error(transparent)]
    Morphism(#[from] MorphismError),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("height lists have different category sets")]
    CategoryMismatch,

    #[error("height-difference variance needs a two-category baseline, got {0} categories")]
    NotTwoCategories(usize),

    #[error("height-difference variance needs at least 2 trials, got {0}")]
    TooFewTrials(usize),

    #[error("overlay needs at least one scene")]
    EmptyOverlay,
}

fn summarize_issues(issues: &[ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| format!("{}: {}", i.path, i.message))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EqualityMeasure {
    /// Pass when at most `threshold` pixels differ by more than
    /// `channel_tolerance` in some channel.
    PixelCount {
        threshold: u64,
        channel_tolerance: u8,
    },
    /// Pass when bar ranking is unchanged; values within `tolerance` tie.
    BarHeightOrder {
        tolerance: f64,
    },
    Chi2Histogram {
        threshold: f64,
    },
    /// Pass when bar `greater` is still strictly taller than bar `lesser`.
    InsightPreserved {
        greater: String,
        lesser: String,
    },
}

impl EqualityMeasure {
    pub fn pixels(threshold: u64) -> EqualityMeasure {
        EqualityMeasure::PixelCount {
            threshold,
            channel_tolerance: 0,
        }
    }

    fn needs_raster(&self) -> bool {
        matches!(
            self,
            EqualityMeasure::PixelCount { .. } | EqualityMeasure::Chi2Histogram { .. }
        )
    }

    /// Measures defined only on aggregated bar charts.
    pub fn needs_bars(&self) -> bool {
        matches!(
            self,
            EqualityMeasure::BarHeightOrder { .. } | EqualityMeasure::InsightPreserved { .. }
        )
    }

    fn validate(&self) -> Result<(), MtvError> {
        match self {
            EqualityMeasure::BarHeightOrder { tolerance }
                if tolerance.is_nan() || *tolerance < 0.0 =>
            {
                Err(MtvError::Config(format!(
                    "tolerance {tolerance} must be non-negative"
                )))
            }
            EqualityMeasure::Chi2Histogram { threshold }
                if threshold.is_nan() || *threshold < 0.0 =>
            {
                Err(MtvError::Config(format!(
                    "threshold {threshold} must be non-negative"
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heights: Option<Heights>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diff: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialResult {
    Applicable(TrialRecord),
    NotApplicable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not-applicable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MtvConfig {
    pub alpha: DataMorphism,
    pub omega: VisualMorphism,
    pub eq: EqualityMeasure,
    pub trials: usize,
    pub pass_threshold: f64,
    pub seed: u64,
}

impl MtvConfig {
    pub fn new(
        alpha: DataMorphism,
        omega: VisualMorphism,
        eq: EqualityMeasure,
        seed: u64,
    ) -> MtvConfig {
        MtvConfig {
            alpha,
            omega,
            eq,
            trials: DEFAULT_TRIALS,
            pass_threshold: DEFAULT_PASS_THRESHOLD,
            seed,
        }
    }

    pub fn with_trials(mut self, trials: usize) -> MtvConfig {
        self.trials = trials;
        self
    }

    fn validate(&self) -> Result<(), MtvError> {
        if self.trials == 0 {
            return Err(MtvError::Config("trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.pass_threshold) {
            return Err(MtvError::Config(format!(
                "pass threshold {} outside [0, 1]",
                self.pass_threshold
            )));
        }
        if let VisualMorphism::OpacityScale { f } = self.omega {
            if !(f > 0.0 && f <= 1.0) {
                return Err(MtvError::Config(format!(
                    "opacity factor {f} outside (0, 1]"
                )));
            }
        }
        self.eq.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MtvOutcome {
    pub verdict: Verdict,
    /// Passing trials / trials. `None` when not applicable.
    pub pass_fraction: Option<f64>,
    pub passed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline_heights: Option<Heights>,
    pub height_diff_variance: Option<f64>,
    pub trials: Vec<TrialRecord>,
    pub config: MtvConfig,
    pub seed: u64,
}

/// Everything about the original chart a trial compares against.
struct Baseline<'a> {
    table: &'a Table,
    morphed_spec: ChartSpec,
    aggregated_bar: bool,
    image: Option<RasterImage>,
    heights: Option<Heights>,
}

fn prepare<'a>(
    spec: &ChartSpec,
    table: &'a Table,
    omega: VisualMorphism,
    eq: &EqualityMeasure,
) -> Result<Result<Baseline<'a>, String>, MtvError> {
    let issues = validate_spec(spec, table);
    if has_errors(&issues) {
        return Err(MtvError::InvalidSpec(issues));
    }
    let aggregated_bar = spec.is_aggregated_bar();
    if eq.needs_bars() && !aggregated_bar {
        return Ok(Err(
            "equality measure compares bar heights and requires an aggregated bar chart".into(),
        ));
    }
    let scene = compile(spec, table)?;
    let image = if eq.needs_raster() {
        let img = rasterize(&scene)?;
        Some(match omega {
            VisualMorphism::Identity => img,
            VisualMorphism::OpacityScale { f } => blend_toward_background(&img, f)?,
        })
    } else {
        None
    };
    let heights = if aggregated_bar {
        Some(bar_heights(&scene)?)
    } else {
        None
    };
    Ok(Ok(Baseline {
        table,
        morphed_spec: apply_visual(omega, spec),
        aggregated_bar,
        image,
        heights,
    }))
}

fn run_trial(
    base: &Baseline<'_>,
    alpha: &DataMorphism,
    eq: &EqualityMeasure,
    rng: &mut Rng,
) -> Result<TrialRecord, MtvError> {
    let morphed = alpha.apply(base.table, rng)?;
    let scene = compile(&base.morphed_spec, &morphed)?;
    let heights = if base.aggregated_bar {
        Some(bar_heights(&scene)?)
    } else {
        None
    };
    let mut record = TrialRecord {
        pass: false,
        heights,
        diff: None,
        chi2: None,
    };
    match eq {
        EqualityMeasure::PixelCount {
            threshold,
            channel_tolerance,
        } => {
            let img = rasterize(&scene)?;
            let expected = base.image.as_ref().expect("raster baseline");
            let diff = pixel_diff_within(&img, expected, *channel_tolerance)?;
            record.diff = Some(diff);
            record.pass = diff <= *threshold;
        }
        EqualityMeasure::Chi2Histogram { threshold } => {
            let img = rasterize(&scene)?;
            let expected = base.image.as_ref().expect("raster baseline");
            let d = chi2_histogram_distance(&img, expected)?;
            record.chi2 = Some(d);
            record.pass = d <= *threshold;
        }
        EqualityMeasure::BarHeightOrder { tolerance } => {
            let (Some(now), Some(before)) = (&record.heights, &base.heights) else {
                unreachable!("bar measures are gated on aggregated bars");
            };
            // A category appearing or vanishing is a change in ranking.
            record.pass = bar_order_equal(now, before, *tolerance).unwrap_or(false);
        }
        EqualityMeasure::InsightPreserved { greater, lesser } => {
            let now = record.heights.as_ref().expect("aggregated bar heights");
            let lookup = |label: &str| {
                now.iter()
                    .find(|(c, _)| c.label() == label)
                    .map(|(_, v)| *v)
            };
            record.pass = matches!((lookup(greater), lookup(lesser)), (Some(g), Some(l)) if g > l);
        }
    }
    Ok(record)
}

/// One evaluation of the metamorphic relation.
pub fn run_single(
    spec: &ChartSpec,
    table: &Table,
    alpha: &DataMorphism,
    omega: VisualMorphism,
    eq: &EqualityMeasure,
    rng: &mut Rng,
) -> Result<TrialResult, MtvError> {
    eq.validate()?;
    match prepare(spec, table, omega, eq)? {
        Err(reason) => Ok(TrialResult::NotApplicable(reason)),
        Ok(base) => Ok(TrialResult::Applicable(run_trial(&base, alpha, eq, rng)?)),
    }
}

/// Runs `config.trials` independent trials. Trial `i` draws from
/// `derive_seed(config.seed, i, alpha.tag())`; results are assembled in trial
/// order, so the outcome does not depend on scheduling.
pub fn run_statistical(
    config: &MtvConfig,
    spec: &ChartSpec,
    table: &Table,
) -> Result<MtvOutcome, MtvError> {
    config.validate()?;
    let base = match prepare(spec, table, config.omega, &config.eq)? {
        Ok(b) => b,
        Err(reason) => {
            return Ok(MtvOutcome {
                verdict: Verdict::NotApplicable,
                pass_fraction: None,
                passed: 0,
                reason: Some(reason),
                baseline_heights: None,
                height_diff_variance: None,
                trials: Vec::new(),
                config: config.clone(),
                seed: config.seed,
            })
        }
    };

    let tag = config.alpha.tag();
    let trials: Vec<TrialRecord> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = Rng::derived(config.seed, i as u64, tag);
            run_trial(&base, &config.alpha, &config.eq, &mut rng)
        })
        .collect::<Result<_, _>>()?;

    let passed = trials.iter().filter(|t| t.pass).count();
    let pass_fraction = passed as f64 / config.trials as f64;
    let height_diff_variance = match &base.heights {
        Some(h) if h.len() == 2 && trials.len() >= 2 => {
            let per_trial: Vec<Heights> = trials.iter().filter_map(|t| t.heights.clone()).collect();
            variance_of_height_difference(&per_trial, h).ok()
        }
        _ => None,
    };
    Ok(MtvOutcome {
        verdict: if pass_fraction >= config.pass_threshold {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        pass_fraction: Some(pass_fraction),
        passed,
        reason: None,
        baseline_heights: base.heights.clone(),
        height_diff_variance,
        trials,
        config: config.clone(),
        seed: config.seed,
    })
}

/// True iff ranking categories by value gives the same order in `a` and `b`.
/// Values within `tolerance` of each other tie, and a tie is compatible with
/// either order.
pub fn bar_order_equal(
    a: &[(Value, f64)],
    b: &[(Value, f64)],
    tolerance: f64,
) -> Result<bool, MtvError> {
    if a.len() != b.len() {
        return Err(MtvError::CategoryMismatch);
    }
    let mut b_vals = Vec::with_capacity(a.len());
    for (cat, _) in a {
        let v = b
            .iter()
            .find(|(c, _)| c == cat)
            .map(|(_, v)| *v)
            .ok_or(MtvError::CategoryMismatch)?;
        b_vals.push(v);
    }
    let rel = |x: f64, y: f64| -> i8 {
        if (x - y).abs() <= tolerance {
            0
        } else if x < y {
            -1
        } else {
            1
        }
    };
    for i in 0..a.len() {
        for j in (i + 1)..a.len() {
            let ra = rel(a[i].1, a[j].1);
            let rb = rel(b_vals[i], b_vals[j]);
            if ra != 0 && rb != 0 && ra != rb {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Sample variance (divisor N-1) of `d_i = value(second) - value(first)`
/// across trials, where first and second are the baseline's two categories
/// in display order.
pub fn variance_of_height_difference(
    trials: &[Heights],
    baseline: &[(Value, f64)],
) -> Result<f64, MtvError> {
    if baseline.len() != 2 {
        return Err(MtvError::NotTwoCategories(baseline.len()));
    }
    if trials.len() < 2 {
        return Err(MtvError::TooFewTrials(trials.len()));
    }
    let (first, second) = (&baseline[0].0, &baseline[1].0);
    let mut diffs = Vec::with_capacity(trials.len());
    for t in trials {
        let get = |c: &Value| t.iter().find(|(k, _)| k == c).map(|(_, v)| *v);
        match (get(first), get(second)) {
            (Some(x), Some(y)) => diffs.push(y - x),
            _ => return Err(MtvError::CategoryMismatch),
        }
    }
    Ok(sample_variance(&diffs).expect("at least two trials"))
}

/// Composites scenes in order over white, each mark's opacity multiplied by
/// `per_layer_opacity`.
pub fn render_overlay(
    scenes: &[SceneGraph],
    per_layer_opacity: f64,
) -> Result<RasterImage, MtvError> {
    let first = scenes.first().ok_or(MtvError::EmptyOverlay)?;
    let mut img = RasterImage::blank(first.width, first.height)?;
    for s in scenes {
        if (s.width, s.height) != (first.width, first.height) {
            return Err(RasterError::DimensionMismatch {
                a_width: first.width,
                a_height: first.height,
                b_width: s.width,
                b_height: s.height,
            }
            .into());
        }
        draw_scene(&mut img, s, per_layer_opacity);
    }
    Ok(img)
}

/// Scenes of `n` morphed copies of the data, using the same per-trial seeds
/// as [`run_statistical`] with `seed`. Aggregated charts share one value
/// axis covering the original and every copy, so the scenes can be overlaid.
pub fn morphed_scenes(
    spec: &ChartSpec,
    table: &Table,
    alpha: &DataMorphism,
    n: usize,
    seed: u64,
) -> Result<Vec<SceneGraph>, MtvError> {
    let tables: Vec<Table> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = Rng::derived(seed, i as u64, alpha.tag());
            alpha.apply(table, &mut rng)
        })
        .collect::<Result<_, _>>()?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for t in std::iter::once(table).chain(&tables) {
        for g in compile(spec, t)?.groups {
            if let Some(v) = g.value {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let extent: Vec<f64> = if lo <= hi { vec![lo, hi] } else { Vec::new() };
    tables
        .par_iter()
        .map(|t| Ok(compile_with_extent(spec, t, &extent)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chartspec::{Aggregate, Encoding, Encodings, MarkKind};
    use crate::data::{load_csv, CsvOptions};

    fn table(s: &str) -> Table {
        load_csv(s.as_bytes(), &CsvOptions::default()).unwrap()
    }

    fn h(pairs: &[(&str, f64)]) -> Heights {
        pairs.iter().map(|(c, v)| (Value::text(*c), *v)).collect()
    }

    #[test]
    fn order_equal_cases() {
        let a = h(&[("X", 2.0), ("Y", 3.0)]);
        assert!(bar_order_equal(&a, &a, 0.0).unwrap());
        assert!(!bar_order_equal(&a, &h(&[("X", 3.0), ("Y", 2.0)]), 0.0).unwrap());
        assert!(bar_order_equal(
            &h(&[("X", 2.0), ("Y", 2.0000001)]),
            &h(&[("X", 3.0), ("Y", 2.0)]),
            1e-3
        )
        .unwrap());
        // Order of listing does not matter, only values per category.
        assert!(bar_order_equal(&a, &h(&[("Y", 9.0), ("X", 1.0)]), 0.0).unwrap());
        assert!(matches!(
            bar_order_equal(&a, &h(&[("X", 2.0), ("Z", 3.0)]), 0.0),
            Err(MtvError::CategoryMismatch)
        ));
    }

    #[test]
    fn height_difference_variance() {
        let base = h(&[("X", 0.0), ("Y", 0.0)]);
        let same = vec![h(&[("X", 1.0), ("Y", 2.0)]); 5];
        assert_eq!(variance_of_height_difference(&same, &base).unwrap(), 0.0);
        let two = vec![h(&[("X", 0.0), ("Y", 1.0)]), h(&[("X", 1.0), ("Y", 4.0)])];
        assert_eq!(variance_of_height_difference(&two, &base).unwrap(), 2.0);
        assert!(matches!(
            variance_of_height_difference(&two[..1], &base),
            Err(MtvError::TooFewTrials(1))
        ));
        assert!(matches!(
            variance_of_height_difference(&two, &h(&[("X", 0.0)])),
            Err(MtvError::NotTwoCategories(1))
        ));
    }

    #[test]
    fn identity_relation_holds() {
        let t = table("cat,val\nX,1\nX,3\nY,2\n");
        let spec = ChartSpec::bar("cat", "val", Aggregate::Mean);
        let r = run_single(
            &spec,
            &t,
            &DataMorphism::Identity,
            VisualMorphism::Identity,
            &EqualityMeasure::pixels(0),
            &mut Rng::new(0),
        )
        .unwrap();
        assert!(matches!(
            r,
            TrialResult::Applicable(TrialRecord {
                pass: true,
                diff: Some(0),
                ..
            })
        ));
    }

    #[test]
    fn shuffle_all_permutations_of_three_rows() {
        // Oracle: enumerate all 3! orders directly and compare renderings.
        let t = table("cat,val\nX,1\nY,5\nX,3\n");
        let spec = ChartSpec::bar("cat", "val", Aggregate::Mean);
        let reference = rasterize(&compile(&spec, &t).unwrap()).unwrap();
        for perm in [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ] {
            let p = t.select_rows(&perm).unwrap();
            let img = rasterize(&compile(&spec, &p).unwrap()).unwrap();
            assert_eq!(img, reference, "{perm:?}");
        }
        for seed in 0..20 {
            let r = run_single(
                &spec,
                &t,
                &DataMorphism::Shuffle,
                VisualMorphism::Identity,
                &EqualityMeasure::pixels(0),
                &mut Rng::new(seed),
            )
            .unwrap();
            assert!(matches!(
                r,
                TrialResult::Applicable(TrialRecord { pass: true, .. })
            ));
        }
    }

    fn overlapping_pair() -> (ChartSpec, Table) {
        let t = table("x,y,c\n5,5,red\n5,5,blue\n");
        let spec = ChartSpec {
            mark: MarkKind::Point,
            encoding: Encodings {
                x: Encoding::quantitative("x"),
                y: Encoding::quantitative("y"),
                color: Some(Encoding::nominal("c")),
            },
            ..ChartSpec::bar("x", "y", Aggregate::None)
        };
        (spec, t)
    }

    #[test]
    fn overlapping_scatter_fails_when_order_swaps() {
        let (spec, t) = overlapping_pair();
        // Oracle: both draw orders rendered directly differ at the overlap.
        let forward = rasterize(&compile(&spec, &t).unwrap()).unwrap();
        let swapped =
            rasterize(&compile(&spec, &t.select_rows(&[1, 0]).unwrap()).unwrap()).unwrap();
        let overlap = crate::raster::pixel_diff(&forward, &swapped).unwrap();
        assert!(overlap > 0);

        let mut saw_fail = false;
        let mut saw_pass = false;
        for seed in 0..50 {
            let mut rng = Rng::new(seed);
            let swaps = crate::morphisms::shuffle_rows(&t, &mut rng.clone()) != t;
            let TrialResult::Applicable(rec) = run_single(
                &spec,
                &t,
                &DataMorphism::Shuffle,
                VisualMorphism::Identity,
                &EqualityMeasure::pixels(0),
                &mut rng,
            )
            .unwrap() else {
                panic!("pixel measures always apply");
            };
            assert_eq!(rec.pass, !swaps);
            if swaps {
                assert_eq!(rec.diff, Some(overlap));
            }
            saw_fail |= !rec.pass;
            saw_pass |= rec.pass;
        }
        assert!(saw_fail && saw_pass);
    }

    #[test]
    fn bar_measures_not_applicable_to_scatter() {
        let (spec, t) = overlapping_pair();
        let cfg = MtvConfig::new(
            DataMorphism::Shuffle,
            VisualMorphism::Identity,
            EqualityMeasure::BarHeightOrder { tolerance: 0.0 },
            1,
        );
        let out = run_statistical(&cfg, &spec, &t).unwrap();
        assert_eq!(out.verdict, Verdict::NotApplicable);
        assert!(out.trials.is_empty());
    }

    #[test]
    fn statistical_shuffle_on_aggregated_bars() {
        let t = table("cat,val\nX,1\nY,5\nX,3\nZ,2\nY,0.5\n");
        let spec = ChartSpec::bar("cat", "val", Aggregate::Mean);
        let cfg = MtvConfig::new(
            DataMorphism::Shuffle,
            VisualMorphism::Identity,
            EqualityMeasure::pixels(0),
            7,
        );
        let out = run_statistical(&cfg, &spec, &t).unwrap();
        assert_eq!(out.pass_fraction, Some(1.0));
        assert_eq!(out.verdict, Verdict::Pass);
        assert_eq!(out.trials.len(), 100);
        let again = run_statistical(&cfg, &spec, &t).unwrap();
        assert_eq!(
            serde_json::to_string(&out).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    #[test]
    fn invalid_configs() {
        let t = table("cat,val\nX,1\n");
        let spec = ChartSpec::bar("cat", "val", Aggregate::Mean);
        let cfg = MtvConfig::new(
            DataMorphism::Shuffle,
            VisualMorphism::Identity,
            EqualityMeasure::pixels(0),
            0,
        )
        .with_trials(0);
        assert!(matches!(
            run_statistical(&cfg, &spec, &t),
            Err(MtvError::Config(_))
        ));
        let bad = ChartSpec::bar("cat", "nope", Aggregate::Mean);
        let cfg = cfg.with_trials(3);
        assert!(matches!(
            run_statistical(&cfg, &bad, &t),
            Err(MtvError::InvalidSpec(_))
        ));
    }

    #[test]
    fn morphed_scenes_share_value_axis() {
        let t = table("cat,val\nX,1\nX,9\nY,5\nY,6\n");
        let spec = ChartSpec::bar("cat", "val", Aggregate::Mean);
        let alpha = DataMorphism::Bootstrap {
            category_field: "cat".into(),
            value_field: "val".into(),
        };
        let scenes = morphed_scenes(&spec, &t, &alpha, 30, 2).unwrap();
        assert_eq!(scenes.len(), 30);
        let axes: Vec<_> = scenes.iter().map(|s| s.y_axis.clone()).collect();
        assert!(axes.iter().all(|a| *a == axes[0]));
        // Resampled X means range over [1, 9]; 30 draws almost surely reach 9.
        assert_eq!(
            axes[0].scale,
            crate::scene::AxisScale::Linear { min: 0.0, max: 9.0 }
        );
    }

    #[test]
    fn overlay_single_layer_is_plain_raster() {
        let t = table("cat,val\nX,1\nY,3\n");
        let scene = compile(&ChartSpec::bar("cat", "val", Aggregate::Mean), &t).unwrap();
        assert_eq!(
            render_overlay(std::slice::from_ref(&scene), 1.0).unwrap(),
            rasterize(&scene).unwrap()
        );
        assert_eq!(
            render_overlay(&[scene.clone(), scene.clone(), scene.clone()], 1.0).unwrap(),
            rasterize(&scene).unwrap()
        );
        assert!(matches!(
            render_overlay(&[], 1.0),
            Err(MtvError::EmptyOverlay)
        ));
    }
}
