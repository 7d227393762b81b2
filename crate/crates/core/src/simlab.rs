//! Synthetic scenarios and the 600-dataset simulation grid.
//!
//! Every scenario is two groups, X and Y, each n = 50 draws from N(50, 10²),
//! with Y's generator altered by one of four manipulations at one of five
//! effect levels. Each dataset is charted as a mean-aggregated two-bar chart
//! and run through the bootstrap, contract and randomize tests.
//!
//! Seeding uses common random numbers: the scenario seed depends on the
//! manipulation and replicate but not the effect level, and X, Y and outlier
//! draws come from separate substreams. Replicate r therefore sees the same
//! X sample, the same underlying normal deviates for Y, and the same trial
//! seeds at every effect level, so differences between levels are caused by
//! the manipulation rather than by sampling noise.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::chartspec::{Aggregate, ChartSpec};
use crate::data::{Table, Value};
use crate::morphisms::{DataMorphism, VisualMorphism};
use crate::mtv::{run_statistical, EqualityMeasure, MtvConfig, MtvError};
use crate::rng::{derive_seed, Rng};
use crate::stats::{quantile_sorted, quartiles, sorted, spearman};

pub const BASE_N: usize = 50;
pub const BASE_MEAN: f64 = 50.0;
pub const BASE_SD: f64 = 10.0;
pub const EFFECT_LEVELS: usize = 5;
pub const REPLICATES: usize = 30;

/// Y mean per effect level (Mean manipulation).
pub const MEAN_Y: [f64; EFFECT_LEVELS] = [50.0, 52.5, 55.0, 57.5, 60.0];
/// Y group size per effect level; smaller is more severe.
pub const N_Y: [usize; EFFECT_LEVELS] = [50, 35, 25, 15, 8];
/// Outliers appended to Y per effect level.
pub const OUTLIERS_K: [usize; EFFECT_LEVELS] = [1, 2, 3, 4, 5];
/// Y standard deviation per effect level.
pub const SD_Y: [f64; EFFECT_LEVELS] = [10.0, 15.0, 20.0, 25.0, 30.0];

/// Spearman correlation a trend check must reach.
pub const TREND_RHO: f64 = 0.8;

pub const CATEGORY_FIELD: &str = "category";
pub const VALUE_FIELD: &str = "value";

/// Names of the tests run on each simulated dataset, in report order.
pub const SIM_TESTS: [&str; 3] = ["bootstrap", "contract", "randomize"];

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("effect index {0} outside 1..={EFFECT_LEVELS}")]
    EffectIndex(usize),

    #[error("replicate {0} outside 1..={REPLICATES}")]
    Replicate(usize),

    #[error("simulation needs at least 2 trials per test, got {0}")]
    TooFewTrials(usize),

    #[error("incomplete grid, missing {}: {}", .0.len(), .0.join(", "))]
    Incomplete(Vec<String>),

    #[error(transparent)]
    Mtv(#[from] MtvError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Manipulation {
    Mean,
    SampleSize,
    Outliers,
    Variance,
}

impl Manipulation {
    pub const ALL: [Manipulation; 4] = [
        Manipulation::Mean,
        Manipulation::SampleSize,
        Manipulation::Outliers,
        Manipulation::Variance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Manipulation::Mean => "mean",
            Manipulation::SampleSize => "sample_size",
            Manipulation::Outliers => "outliers",
            Manipulation::Variance => "variance",
        }
    }
}

impl fmt::Display for Manipulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimScenario {
    pub manipulation: Manipulation,
    /// 1..=5
    pub effect_index: usize,
    /// 1..=30
    pub replicate: usize,
    pub seed: u64,
}

impl SimScenario {
    pub fn new(
        manipulation: Manipulation,
        effect_index: usize,
        replicate: usize,
        master_seed: u64,
    ) -> Result<SimScenario, SimError> {
        if !(1..=EFFECT_LEVELS).contains(&effect_index) {
            return Err(SimError::EffectIndex(effect_index));
        }
        if !(1..=REPLICATES).contains(&replicate) {
            return Err(SimError::Replicate(replicate));
        }
        let tag = format!("sim/{manipulation}");
        Ok(SimScenario {
            manipulation,
            effect_index,
            replicate,
            seed: derive_seed(master_seed, replicate as u64, &tag),
        })
    }

    /// Seed for the statistical tests on this scenario's dataset.
    pub fn trial_seed(&self) -> u64 {
        derive_seed(self.seed, 0, "trials")
    }

    fn label(&self) -> String {
        format!(
            "{}/{}/{}",
            self.manipulation, self.effect_index, self.replicate
        )
    }
}

/// A `category,value` table with X rows first, then Y rows.
pub fn two_group_table(x: &[f64], y: &[f64]) -> Table {
    let rows = x
        .iter()
        .map(|v| ("X", v))
        .chain(y.iter().map(|v| ("Y", v)))
        .map(|(c, v)| vec![Value::text(c), Value::number(*v)])
        .collect();
    Table::new(vec![CATEGORY_FIELD.into(), VALUE_FIELD.into()], rows).expect("two fixed columns")
}

fn normals(rng: &mut Rng, n: usize, mean: f64, sd: f64) -> Vec<f64> {
    (0..n).map(|_| rng.normal(mean, sd)).collect()
}

/// 50 X then 50 Y rows, all N(50, 10²), drawn in that order from `rng`
/// (Marsaglia polar method, see [`Rng::standard_normal`]).
pub fn generate_baseline(rng: &mut Rng) -> Table {
    let x = normals(rng, BASE_N, BASE_MEAN, BASE_SD);
    let y = normals(rng, BASE_N, BASE_MEAN, BASE_SD);
    two_group_table(&x, &y)
}

/// `k` draws uniform on `[Q3 + 1.5 IQR, Q3 + 3 IQR]` of `sample`.
pub fn draw_outliers(sample: &[f64], k: usize, rng: &mut Rng) -> Vec<f64> {
    let (q1, q3) = quartiles(sample);
    let iqr = q3 - q1;
    let (lo, hi) = (q3 + 1.5 * iqr, q3 + 3.0 * iqr);
    (0..k).map(|_| lo + rng.uniform() * (hi - lo)).collect()
}

pub fn generate_scenario(s: &SimScenario) -> Table {
    let level = s.effect_index - 1;
    let mut x_rng = Rng::derived(s.seed, 0, "x");
    let mut y_rng = Rng::derived(s.seed, 1, "y");
    let x = normals(&mut x_rng, BASE_N, BASE_MEAN, BASE_SD);
    let y = match s.manipulation {
        Manipulation::Mean => normals(&mut y_rng, BASE_N, MEAN_Y[level], BASE_SD),
        Manipulation::SampleSize => normals(&mut y_rng, N_Y[level], BASE_MEAN, BASE_SD),
        Manipulation::Variance => normals(&mut y_rng, BASE_N, BASE_MEAN, SD_Y[level]),
        Manipulation::Outliers => {
            let mut y = normals(&mut y_rng, BASE_N, BASE_MEAN, BASE_SD);
            let extra = draw_outliers(
                &y,
                OUTLIERS_K[level],
                &mut Rng::derived(s.seed, 2, "outliers"),
            );
            y.extend(extra);
            y
        }
    };
    two_group_table(&x, &y)
}

/// The chart every simulated dataset is drawn as: mean of value by category.
pub fn simulation_spec() -> ChartSpec {
    ChartSpec::bar(CATEGORY_FIELD, VALUE_FIELD, Aggregate::Mean)
}

pub fn sim_morphism(test: &str) -> Option<DataMorphism> {
    let (category_field, value_field) = (CATEGORY_FIELD.to_string(), VALUE_FIELD.to_string());
    match test {
        "bootstrap" => Some(DataMorphism::Bootstrap {
            category_field,
            value_field,
        }),
        "contract" => Some(DataMorphism::ContractRecords {
            category_field,
            value_field,
        }),
        "randomize" => Some(DataMorphism::RandomizeAssignment {
            category_field,
            value_field,
        }),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestStat {
    pub height_diff_variance: f64,
    pub pass_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResultCell {
    pub scenario: SimScenario,
    pub tests: BTreeMap<String, TestStat>,
}

pub fn run_cell(scenario: &SimScenario, trials: usize) -> Result<SimResultCell, SimError> {
    if trials < 2 {
        return Err(SimError::TooFewTrials(trials));
    }
    let table = generate_scenario(scenario);
    let spec = simulation_spec();
    let mut tests = BTreeMap::new();
    for name in SIM_TESTS {
        let alpha = sim_morphism(name).expect("known test");
        let config = MtvConfig::new(
            alpha,
            VisualMorphism::Identity,
            EqualityMeasure::BarHeightOrder { tolerance: 0.0 },
            scenario.trial_seed(),
        )
        .with_trials(trials);
        let out = run_statistical(&config, &spec, &table)?;
        tests.insert(
            name.to_string(),
            TestStat {
                height_diff_variance: out
                    .height_diff_variance
                    .expect("two-bar chart with at least two trials"),
                pass_fraction: out.pass_fraction.expect("bar tests apply"),
            },
        );
    }
    Ok(SimResultCell {
        scenario: *scenario,
        tests,
    })
}

/// All scenarios ordered by (manipulation, effect index, replicate).
pub fn all_scenarios(master_seed: u64) -> Vec<SimScenario> {
    let mut out = Vec::with_capacity(Manipulation::ALL.len() * EFFECT_LEVELS * REPLICATES);
    for m in Manipulation::ALL {
        for e in 1..=EFFECT_LEVELS {
            for r in 1..=REPLICATES {
                out.push(SimScenario::new(m, e, r, master_seed).expect("indices in range"));
            }
        }
    }
    out
}

/// Runs the full grid. Cells come back in [`all_scenarios`] order regardless
/// of how the work was scheduled.
pub fn run_experiment(master_seed: u64, trials: usize) -> Result<Vec<SimResultCell>, SimError> {
    if trials < 2 {
        return Err(SimError::TooFewTrials(trials));
    }
    all_scenarios(master_seed)
        .par_iter()
        .map(|s| run_cell(s, trials))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub manipulation: Manipulation,
    pub test: String,
    pub effect_index: usize,
    pub median_var: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
    pub n_replicates: usize,
}

/// Per (manipulation, test, effect index): median, quartiles and range of the
/// height-difference variance over replicates.
pub fn summarize(cells: &[SimResultCell]) -> Result<Vec<SummaryRow>, SimError> {
    let mut by_key: BTreeMap<(Manipulation, usize, usize), &SimResultCell> = BTreeMap::new();
    for c in cells {
        let s = &c.scenario;
        by_key.insert((s.manipulation, s.effect_index, s.replicate), c);
    }
    let mut missing = Vec::new();
    for m in Manipulation::ALL {
        for e in 1..=EFFECT_LEVELS {
            for r in 1..=REPLICATES {
                match by_key.get(&(m, e, r)) {
                    None => missing.push(format!("{m}/{e}/{r}")),
                    Some(c) => {
                        for t in SIM_TESTS {
                            if !c.tests.contains_key(t) {
                                missing.push(format!("{}:{t}", c.scenario.label()));
                            }
                        }
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(SimError::Incomplete(missing));
    }

    let mut rows = Vec::new();
    for m in Manipulation::ALL {
        for t in SIM_TESTS {
            for e in 1..=EFFECT_LEVELS {
                let vals: Vec<f64> = (1..=REPLICATES)
                    .map(|r| by_key[&(m, e, r)].tests[t].height_diff_variance)
                    .collect();
                let s = sorted(&vals);
                rows.push(SummaryRow {
                    manipulation: m,
                    test: t.to_string(),
                    effect_index: e,
                    median_var: quantile_sorted(&s, 0.5),
                    q1: quantile_sorted(&s, 0.25),
                    q3: quantile_sorted(&s, 0.75),
                    min: s[0],
                    max: s[s.len() - 1],
                    n_replicates: s.len(),
                });
            }
        }
    }
    Ok(rows)
}

pub fn summary_csv(rows: &[SummaryRow]) -> Result<String, SimError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendCheck {
    pub manipulation: Manipulation,
    pub test: String,
    pub medians: Vec<f64>,
    pub rho: Option<f64>,
    pub pass: bool,
}

/// The (manipulation, test) pairs expected to grow with severity.
pub const EXPECTED_TRENDS: [(Manipulation, &str); 4] = [
    (Manipulation::Variance, "bootstrap"),
    (Manipulation::Outliers, "bootstrap"),
    (Manipulation::SampleSize, "contract"),
    (Manipulation::Mean, "randomize"),
];

/// Spearman correlation between effect index and median variance for each
/// expected trend; passes at `rho >= TREND_RHO`.
pub fn trend_checks(rows: &[SummaryRow]) -> Vec<TrendCheck> {
    EXPECTED_TRENDS
        .iter()
        .map(|&(m, t)| {
            let mut pts: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.manipulation == m && r.test == t)
                .map(|r| (r.effect_index, r.median_var))
                .collect();
            pts.sort_by_key(|p| p.0);
            let xs: Vec<f64> = pts.iter().map(|p| p.0 as f64).collect();
            let medians: Vec<f64> = pts.iter().map(|p| p.1).collect();
            let rho = spearman(&xs, &medians);
            TrendCheck {
                manipulation: m,
                test: t.to_string(),
                pass: rho.is_some_and(|r| r >= TREND_RHO),
                medians,
                rho,
            }
        })
        .collect()
}

/// Four datasets whose mean-aggregated bar charts are identical (X mean 50,
/// Y mean 60) while the data behind Y differs.
#[derive(Debug, Clone, PartialEq)]
pub struct Quartet {
    /// Two clean Gaussian groups, n = 50 each.
    pub a: Table,
    /// Y is centered on X except for one large outlier.
    pub b: Table,
    /// Y is one value repeated 40 times.
    pub c: Table,
    /// Y has only 3 records.
    pub d: Table,
}

pub const QUARTET_X_MEAN: f64 = 50.0;
pub const QUARTET_Y_MEAN: f64 = 60.0;
pub const QUARTET_OUTLIER: f64 = 550.0;
pub const QUARTET_REPEATS: usize = 40;

/// `n` normal draws shifted and scaled to exactly the given sample mean and
/// sample standard deviation (up to rounding).
pub fn standardized_sample(rng: &mut Rng, n: usize, mean: f64, sd: f64) -> Vec<f64> {
    assert!(n >= 2, "standardizing needs at least two values");
    let z = normals(rng, n, 0.0, 1.0);
    let m = z.iter().sum::<f64>() / n as f64;
    let s = (z.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64).sqrt();
    z.iter().map(|v| mean + sd * (v - m) / s).collect()
}

pub fn generate_quartet(seed: u64) -> Quartet {
    let mut rng = Rng::derived(seed, 0, "quartet/x");
    let x = standardized_sample(&mut rng, BASE_N, QUARTET_X_MEAN, BASE_SD);

    let mut rng = Rng::derived(seed, 1, "quartet/a");
    let ya = standardized_sample(&mut rng, BASE_N, QUARTET_Y_MEAN, BASE_SD);

    // 49 values plus the outlier average to the Y mean.
    let mut rng = Rng::derived(seed, 2, "quartet/b");
    let rest = BASE_N - 1;
    let core_mean = (QUARTET_Y_MEAN * BASE_N as f64 - QUARTET_OUTLIER) / rest as f64;
    let mut yb = standardized_sample(&mut rng, rest, core_mean, BASE_SD);
    yb.push(QUARTET_OUTLIER);

    let yc = vec![QUARTET_Y_MEAN; QUARTET_REPEATS];

    let mut rng = Rng::derived(seed, 3, "quartet/d");
    let yd = standardized_sample(&mut rng, 3, QUARTET_Y_MEAN, 2.0 * BASE_SD);

    Quartet {
        a: two_group_table(&x, &ya),
        b: two_group_table(&x, &yb),
        c: two_group_table(&x, &yc),
        d: two_group_table(&x, &yd),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::rasterize;
    use crate::scene::{bar_heights, compile};

    fn group(t: &Table, cat: &str) -> Vec<f64> {
        t.rows()
            .iter()
            .filter(|r| r[0] == Value::text(cat))
            .map(|r| r[1].as_f64().unwrap())
            .collect()
    }

    #[test]
    fn baseline_shape_and_determinism() {
        let t = generate_baseline(&mut Rng::new(1));
        assert_eq!(t.row_count(), 100);
        assert_eq!(group(&t, "X").len(), 50);
        assert_eq!(group(&t, "Y").len(), 50);
        assert_eq!(t, generate_baseline(&mut Rng::new(1)));
        assert_ne!(t, generate_baseline(&mut Rng::new(2)));
    }

    #[test]
    fn baseline_grand_mean() {
        // Pooled mean of 100,000 draws with sd 10 has standard error 0.03;
        // the ±1 band is very loose.
        let mut total = 0.0;
        let mut n = 0usize;
        for seed in 0..1000 {
            let t = generate_baseline(&mut Rng::new(seed));
            for r in t.rows() {
                total += r[1].as_f64().unwrap();
                n += 1;
            }
        }
        let mean = total / n as f64;
        assert!((mean - 50.0).abs() < 1.0, "{mean}");
    }

    #[test]
    fn outlier_scenario_appends_from_interval() {
        for rep in 1..=5 {
            let s = SimScenario::new(Manipulation::Outliers, 2, rep, 9).unwrap();
            let t = generate_scenario(&s);
            let x = group(&t, "X");
            let y = group(&t, "Y");
            assert_eq!((x.len(), y.len()), (50, 52));
            // Independent oracle: quartiles by explicit sort + interpolation.
            let mut pre = y[..50].to_vec();
            pre.sort_by(f64::total_cmp);
            let q = |p: f64| {
                let h = 49.0 * p;
                let lo = h.floor() as usize;
                pre[lo] + (h - lo as f64) * (pre[lo + 1] - pre[lo])
            };
            let iqr = q(0.75) - q(0.25);
            for v in &y[50..] {
                assert!(*v >= q(0.75) + 1.5 * iqr && *v <= q(0.75) + 3.0 * iqr);
            }
        }
    }

    #[test]
    fn sample_size_rows() {
        for e in 1..=5 {
            let t =
                generate_scenario(&SimScenario::new(Manipulation::SampleSize, e, 1, 0).unwrap());
            assert_eq!(group(&t, "X").len(), 50);
            assert_eq!(group(&t, "Y").len(), N_Y[e - 1]);
        }
    }

    #[test]
    fn common_random_numbers_across_levels() {
        let a = generate_scenario(&SimScenario::new(Manipulation::Mean, 1, 3, 4).unwrap());
        let b = generate_scenario(&SimScenario::new(Manipulation::Mean, 5, 3, 4).unwrap());
        assert_eq!(group(&a, "X"), group(&b, "X"));
        for (ya, yb) in group(&a, "Y").iter().zip(group(&b, "Y")) {
            assert!((yb - ya - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn scenario_range_checks() {
        assert!(matches!(
            SimScenario::new(Manipulation::Mean, 0, 1, 0),
            Err(SimError::EffectIndex(0))
        ));
        assert!(matches!(
            SimScenario::new(Manipulation::Mean, 1, 31, 0),
            Err(SimError::Replicate(31))
        ));
    }

    fn synthetic_cells(v: f64) -> Vec<SimResultCell> {
        all_scenarios(0)
            .into_iter()
            .map(|s| SimResultCell {
                scenario: s,
                tests: SIM_TESTS
                    .iter()
                    .map(|t| {
                        (
                            t.to_string(),
                            TestStat {
                                height_diff_variance: v,
                                pass_fraction: 1.0,
                            },
                        )
                    })
                    .collect(),
            })
            .collect()
    }

    #[test]
    fn summary_of_identical_cells() {
        let rows = summarize(&synthetic_cells(2.5)).unwrap();
        assert_eq!(rows.len(), 60);
        for r in &rows {
            assert_eq!(
                (r.q1, r.median_var, r.q3, r.min, r.max),
                (2.5, 2.5, 2.5, 2.5, 2.5)
            );
            assert_eq!(r.n_replicates, 30);
        }
        let csv = summary_csv(&rows).unwrap();
        assert!(csv.starts_with(
            "manipulation,test,effect_index,median_var,q1,q3,min,max,n_replicates\nmean,bootstrap,1,2.5,"
        ));
        assert_eq!(csv.lines().count(), 61);
    }

    #[test]
    fn summary_reports_missing() {
        let mut cells = synthetic_cells(1.0);
        cells.remove(0);
        cells[10].tests.remove("contract");
        let Err(SimError::Incomplete(missing)) = summarize(&cells) else {
            panic!("expected incomplete");
        };
        assert_eq!(missing.len(), 2);
        assert!(missing.contains(&"mean/1/1".to_string()));
    }

    #[test]
    fn trend_on_increasing_medians() {
        let mut cells = synthetic_cells(0.0);
        for c in &mut cells {
            for stat in c.tests.values_mut() {
                stat.height_diff_variance = c.scenario.effect_index as f64;
            }
        }
        let checks = trend_checks(&summarize(&cells).unwrap());
        assert_eq!(checks.len(), 4);
        assert!(checks.iter().all(|c| c.pass && c.rho == Some(1.0)));
        let flat = trend_checks(&summarize(&synthetic_cells(1.0)).unwrap());
        assert!(flat.iter().all(|c| !c.pass && c.rho.is_none()));
    }

    #[test]
    fn cell_has_three_tests() {
        let s = SimScenario::new(Manipulation::Variance, 3, 2, 5).unwrap();
        let c = run_cell(&s, 4).unwrap();
        assert_eq!(
            c.tests.keys().collect::<Vec<_>>(),
            vec!["bootstrap", "contract", "randomize"]
        );
        assert_eq!(c, run_cell(&s, 4).unwrap());
        assert!(matches!(run_cell(&s, 1), Err(SimError::TooFewTrials(1))));
    }

    #[test]
    fn quartet_bars_are_pixel_identical() {
        let q = generate_quartet(3);
        let spec = simulation_spec();
        let img = |t: &Table| rasterize(&compile(&spec, t).unwrap()).unwrap();
        let a = img(&q.a);
        for t in [&q.b, &q.c, &q.d] {
            assert_eq!(img(t), a);
        }
        let h = bar_heights(&compile(&spec, &q.b).unwrap()).unwrap();
        assert!(
            (h[0].1 - 50.0).abs() < 1e-9 && (h[1].1 - 60.0).abs() < 1e-9,
            "{h:?}"
        );
        assert_eq!(group(&q.d, "Y").len(), 3);
        assert_eq!(*group(&q.b, "Y").last().unwrap(), QUARTET_OUTLIER);
    }

    #[test]
    fn standardized_sample_moments() {
        let v = standardized_sample(&mut Rng::new(0), 3, 60.0, 20.0);
        let m = v.iter().sum::<f64>() / 3.0;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 2.0;
        assert!((m - 60.0).abs() < 1e-9 && (var - 400.0).abs() < 1e-6);
    }
}
