//! Property tests over randomly generated tables, specs and images.

use mtvlint_core::chartspec::{parse_spec, Aggregate, ChartSpec, SortOrder};
use mtvlint_core::data::{load_csv, CsvOptions, Table, Value};
use mtvlint_core::morphisms::{apply_visual, shuffle_rows, VisualMorphism};
use mtvlint_core::mtv::bar_order_equal;
use mtvlint_core::raster::{pixel_diff, pixel_diff_within, rasterize};
use mtvlint_core::rng::Rng;
use mtvlint_core::scene::{aggregate_groups, bar_heights, compile};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 1000,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn cell() -> impl Strategy<Value = Value> {
    prop_oneof![
        (-1e6f64..1e6).prop_map(Value::number),
        (-500i64..500).prop_map(|v| Value::number(v as f64)),
        "[a-zA-Z][a-zA-Z ,\"]{0,6}".prop_map(Value::text),
        Just(Value::Null),
    ]
}

fn any_table() -> impl Strategy<Value = Table> {
    (1usize..5).prop_flat_map(|cols| {
        prop::collection::vec(prop::collection::vec(cell(), cols), 0..20).prop_map(move |rows| {
            let names = (0..cols).map(|i| format!("c{i}")).collect();
            Table::new(names, rows).unwrap()
        })
    })
}

fn bar_table() -> impl Strategy<Value = Table> {
    let row = (prop::sample::select(vec!["p", "q", "r", "s"]), -100i32..100);
    prop::collection::vec(row, 1..30).prop_map(|rows| {
        let rows = rows
            .into_iter()
            .map(|(c, v)| vec![Value::text(c), Value::number(v as f64 / 3.0)])
            .collect();
        Table::new(vec!["cat".into(), "val".into()], rows).unwrap()
    })
}

fn bar_spec() -> impl Strategy<Value = ChartSpec> {
    (
        prop::sample::select(vec![
            Aggregate::Sum,
            Aggregate::Mean,
            Aggregate::Count,
            Aggregate::Min,
            Aggregate::Max,
        ]),
        prop::sample::select(vec![
            SortOrder::ByCategoryAscending,
            SortOrder::ByValueDescending,
        ]),
        any::<bool>(),
        0.1f64..=1.0,
    )
        .prop_map(|(agg, sort, zero, opacity)| {
            let mut s = ChartSpec::bar("cat", "val", agg);
            s.sort = sort;
            s.encoding.y.scale_zero = zero;
            s.opacity = opacity;
            s.width = 120;
            s.height = 90;
            s
        })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn csv_round_trip(t in any_table()) {
        let back = load_csv(t.to_csv().as_bytes(), &CsvOptions::default()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn spec_json_round_trip(s in bar_spec()) {
        prop_assert_eq!(parse_spec(&s.to_json_string()).unwrap(), s);
    }

    #[test]
    fn aggregation_ignores_row_order(t in bar_table(), s in bar_spec(), seed in any::<u64>()) {
        let shuffled = shuffle_rows(&t, &mut Rng::new(seed));
        let a = bar_heights(&compile(&s, &t).unwrap()).unwrap();
        let b = bar_heights(&compile(&s, &shuffled).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn aggregate_provenance_partitions_rows(t in bar_table()) {
        let groups = aggregate_groups(&t, "cat", "val", Aggregate::Mean, SortOrder::None).unwrap();
        let mut seen: Vec<usize> = groups.iter().flat_map(|g| g.provenance.clone()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..t.row_count()).collect::<Vec<_>>());
        for g in &groups {
            prop_assert!(g.provenance.iter().all(|&i| t.rows()[i][0] == g.category));
            prop_assert_eq!(g.record_count, g.provenance.len());
        }
    }

    #[test]
    fn visual_morphism_touches_only_opacity(s in bar_spec(), f in 0.01f64..=1.0) {
        prop_assert_eq!(apply_visual(VisualMorphism::Identity, &s), s.clone());
        let m = apply_visual(VisualMorphism::opacity(f).unwrap(), &s);
        prop_assert_eq!(m.opacity, s.opacity * f);
        prop_assert_eq!(ChartSpec { opacity: s.opacity, ..m }, s);
    }

    #[test]
    fn pixel_thresholds_are_monotone(t in bar_table(), s in bar_spec(), seed in any::<u64>()) {
        // Compare against a different table so the diff is usually non-zero.
        let other = mtvlint_core::morphisms::randomize_assignment(&t, "cat", "val", &mut Rng::new(seed)).unwrap();
        let a = rasterize(&compile(&s, &t).unwrap()).unwrap();
        let b = rasterize(&compile(&s, &other).unwrap()).unwrap();
        let d = pixel_diff(&a, &b).unwrap();
        prop_assert_eq!(d, pixel_diff(&b, &a).unwrap());
        prop_assert_eq!(pixel_diff(&a, &a).unwrap(), 0);
        let mut last = d;
        for tol in [1u8, 2, 16, 128, 255] {
            let dt = pixel_diff_within(&a, &b, tol).unwrap();
            prop_assert!(dt <= last);
            last = dt;
        }
        prop_assert_eq!(last, 0);
    }

    #[test]
    fn bar_order_is_reflexive_and_symmetric(
        a in prop::collection::vec(-10i32..10, 1..6),
        b in prop::collection::vec(-10i32..10, 1..6),
        tol in 0u8..3,
    ) {
        let n = a.len().min(b.len());
        let h = |v: &[i32]| v[..n].iter().enumerate().map(|(i, x)| (Value::text(format!("k{i}")), *x as f64)).collect::<Vec<_>>();
        let (ha, hb) = (h(&a), h(&b));
        let tol = tol as f64;
        prop_assert!(bar_order_equal(&ha, &ha, tol).unwrap());
        prop_assert_eq!(bar_order_equal(&ha, &hb, tol).unwrap(), bar_order_equal(&hb, &ha, tol).unwrap());
        // Brute-force oracle over all pairs.
        let rel = |x: f64, y: f64| if (x - y).abs() <= tol { 0 } else if x < y { -1 } else { 1 };
        let mut expect = true;
        for i in 0..n {
            for j in 0..n {
                let (ra, rb) = (rel(ha[i].1, ha[j].1), rel(hb[i].1, hb[j].1));
                if ra != 0 && rb != 0 && ra != rb {
                    expect = false;
                }
            }
        }
        prop_assert_eq!(bar_order_equal(&ha, &hb, tol).unwrap(), expect);
    }

    #[test]
    fn rasterize_is_deterministic(t in bar_table(), s in bar_spec()) {
        let scene = compile(&s, &t).unwrap();
        prop_assert_eq!(rasterize(&scene).unwrap().to_ppm(), rasterize(&scene.clone()).unwrap().to_ppm());
    }
}
