//! Metamorphic testing for charts.
//!
//! A chart is suspect when changes to its data that should not matter
//! (row order, resampling, regrouping) change what it shows, or when changes
//! that should matter do not. This crate compiles a small declarative chart
//! spec into a scene, rasterizes it deterministically, applies data and
//! visual morphisms, and checks the relation
//! `Eq(v(α(x)), ω(v(x)))` over many seeded trials.
//!
//! ```
//! use mtvlint_core::{lint_chart, LintConfig};
//!
//! let spec = r#"{"mark":"bar","encoding":{
//!     "x":{"field":"g","type":"nominal"},
//!     "y":{"field":"v","type":"quantitative","aggregate":"mean"}}}"#;
//! let data = "g,v\nA,1\nA,2\nB,8\nB,9\n";
//! let report = lint_chart(spec, data.as_bytes(), &LintConfig { trials: 20, ..Default::default() }).unwrap();
//! assert_eq!(report.exit_code(false), 0);
//! ```

pub mod chartspec;
pub mod data;
pub mod morphisms;
pub mod mtv;
pub mod raster;
pub mod report;
pub mod rng;
pub mod scene;
pub mod simlab;
pub mod stats;

pub use chartspec::{
    parse_spec, validate_spec, Aggregate, ChartSpec, Encoding, Encodings, FieldType, MarkKind,
    Severity, SortOrder, SpecError, ValidationIssue,
};
pub use data::{load_auto, load_csv, load_json_rows, CsvOptions, DataError, Table, Value};
pub use morphisms::{apply_visual, DataMorphism, MorphismError, VisualMorphism};
pub use mtv::{
    bar_order_equal, morphed_scenes, render_overlay, run_single, run_statistical,
    variance_of_height_difference, EqualityMeasure, MtvConfig, MtvError, MtvOutcome, TrialRecord,
    TrialResult, Verdict,
};
pub use raster::{rasterize, RasterError, RasterImage};
pub use report::{
    lint_chart, lint_loaded, LintConfig, LintError, LintReport, TestName, TestReport,
};
pub use rng::{derive_seed, Rng};
pub use scene::{bar_heights, compile, compile_with_extent, SceneError, SceneGraph};
pub use simlab::{
    generate_quartet, generate_scenario, run_experiment, summarize, summary_csv, trend_checks,
    Manipulation, SimError, SimResultCell, SimScenario,
};
