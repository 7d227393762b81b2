//! Shared inputs for the benchmarks.

use mtvlint_core::simlab::{generate_quartet, simulation_spec};
use mtvlint_core::{ChartSpec, Table};

/// The clean two-group dataset and its mean bar chart.
pub fn two_bar_fixture() -> (ChartSpec, Table) {
    (simulation_spec(), generate_quartet(0).a)
}

/// A `rows`-row scatter table with deterministic pseudo-random coordinates.
pub fn scatter_fixture(rows: usize) -> (ChartSpec, Table) {
    let spec = mtvlint_core::parse_spec(
        r#"{"mark":"point","encoding":{"x":{"field":"a","type":"quantitative"},"y":{"field":"b","type":"quantitative"}}}"#,
    )
    .expect("static spec");
    let mut rng = mtvlint_core::Rng::new(rows as u64);
    let mut csv = String::from("a,b\n");
    for _ in 0..rows {
        csv.push_str(&format!(
            "{},{}\n",
            rng.uniform() * 100.0,
            rng.uniform() * 100.0
        ));
    }
    let table = mtvlint_core::load_csv(csv.as_bytes(), &Default::default()).expect("generated csv");
    (spec, table)
}
