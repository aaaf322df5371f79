use std::io::Write;

use cvqnn::data::{
    chronological_split, inject_noise, load_series, make_supervised, minmax_apply, minmax_fit,
    minmax_invert, prepare, synthetic_sine, Column, ColumnStats, FitRange, NormStats, SplitSpec,
    TimeSeries,
};
use cvqnn::Error;
use proptest::prelude::*;

fn csv_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn series(values: &[f64]) -> TimeSeries {
    TimeSeries::from_columns(
        vec![Column {
            name: "load".into(),
            values: values.to_vec(),
        }],
        "test",
    )
    .unwrap()
}

#[test]
fn loads_selected_column() {
    let f = csv_file("t,load\n1,2.0\n2,4.0\n3,6.0\n");
    let s = load_series(f.path(), "load", &names(&["load"]), Some("t")).unwrap();
    assert_eq!(s.column("load").unwrap(), &[2.0, 4.0, 6.0]);
    assert_eq!(s.timestamps.as_deref().unwrap(), &names(&["1", "2", "3"]));
    assert_eq!(s.dropped_rows, 0);
}

#[test]
fn blank_cells_are_dropped_and_counted() {
    let mut body = String::from("t,load\n");
    for i in 0..10 {
        if i == 4 {
            body.push_str("4,\n");
        } else {
            body.push_str(&format!("{i},{}\n", i * 10));
        }
    }
    let s = load_series(csv_file(&body).path(), "load", &[], None).unwrap();
    assert_eq!((s.len(), s.dropped_rows), (9, 1));
}

#[test]
fn load_errors() {
    let f = csv_file("t,load\n1,2\n2,3\n");
    assert!(matches!(
        load_series(f.path(), "demand", &[], None),
        Err(Error::Config(_))
    ));
    let missing = std::path::Path::new("/nonexistent/series.csv");
    assert!(matches!(
        load_series(missing, "load", &[], None),
        Err(Error::Io { .. })
    ));
    let short = csv_file("t,load\n1,2\n2,x\n");
    assert!(matches!(
        load_series(short.path(), "load", &[], None),
        Err(Error::Data(_))
    ));
}

#[test]
fn semicolon_delimited_files() {
    let f = csv_file("t;load;temp\n1;2;10\n2;4;11\n3;6;12\n");
    let s =
        cvqnn::data::load_series_with_delimiter(f.path(), "load", &names(&["temp"]), None, b';')
            .unwrap();
    assert_eq!(s.column("temp").unwrap(), &[10.0, 11.0, 12.0]);
}

fn whole(s: &TimeSeries) -> FitRange {
    FitRange::whole(s.len())
}

#[test]
fn minmax_examples() {
    let s = series(&[2.0, 4.0, 6.0]);
    let stats = minmax_fit(&s, &names(&["load"]), whole(&s)).unwrap();
    assert_eq!(
        minmax_apply(&s, &stats).unwrap().column("load").unwrap(),
        &[0.0, 0.5, 1.0]
    );
    let fixed = NormStats {
        columns: vec![("load".into(), ColumnStats { min: 2.0, max: 6.0 })],
    };
    assert_eq!(minmax_invert(&[0.5], &fixed, "load").unwrap(), vec![4.0]);
    let flat = series(&[5.0, 5.0, 5.0]);
    assert!(matches!(
        minmax_fit(&flat, &names(&["load"]), whole(&flat)),
        Err(Error::Data(_))
    ));
}

#[test]
fn supervised_pairs() {
    let s = series(&[0.1, 0.2, 0.3]);
    let d = make_supervised(&s, "load", &names(&["load"]), 1).unwrap();
    assert_eq!(d.inputs, vec![vec![0.1], vec![0.2]]);
    assert_eq!(d.labels, vec![0.2, 0.3]);

    let two = TimeSeries::from_columns(
        vec![
            Column {
                name: "load".into(),
                values: vec![0.1, 0.2, 0.3, 0.4],
            },
            Column {
                name: "temp".into(),
                values: vec![0.5, 0.6, 0.7, 0.8],
            },
        ],
        "test",
    )
    .unwrap();
    let d = make_supervised(&two, "load", &names(&["load", "temp"]), 1).unwrap();
    assert_eq!(d.len(), 3);
    assert!(d.inputs.iter().all(|x| x.len() == 2));

    assert!(matches!(
        TimeSeries::from_columns(
            vec![Column {
                name: "load".into(),
                values: vec![1.0]
            }],
            "x"
        ),
        Err(Error::Data(_))
    ));
    assert!(matches!(
        make_supervised(&series(&[0.1, 0.2]), "load", &names(&["load"]), 2),
        Err(Error::Data(_))
    ));
}

#[test]
fn splits() {
    let s = series(&(0..11).map(|i| i as f64 / 10.0).collect::<Vec<_>>());
    let d = make_supervised(&s, "load", &names(&["load"]), 1).unwrap();
    let (train, test) = chronological_split(&d, SplitSpec::Ratio(0.8)).unwrap();
    assert_eq!((train.len(), test.len()), (8, 2));
    assert_eq!(train.labels.last(), Some(&test.inputs[0][0]));
    let daily = series(&(0..6 * 365 + 1).map(|i| (i % 7) as f64).collect::<Vec<_>>());
    let d = make_supervised(&daily, "load", &names(&["load"]), 1).unwrap();
    let (train, test) = chronological_split(&d, SplitSpec::Boundary(5 * 365)).unwrap();
    assert_eq!((train.len(), test.len()), (1825, 365));
    assert!(matches!(
        chronological_split(&d, SplitSpec::Ratio(1.0)),
        Err(Error::Config(_))
    ));
}

#[test]
fn noise_contract() {
    let s = synthetic_sine(200, 50.0, 0.0, 1.0).unwrap();
    let p = prepare(&s, "value", &names(&["value"]), SplitSpec::Ratio(0.8)).unwrap();
    assert_eq!(inject_noise(&p.train, 0.0, 3).unwrap(), p.train);
    let a = inject_noise(&p.train, 0.01, 3).unwrap();
    let b = inject_noise(&p.train, 0.01, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.labels, p.train.labels);
    assert_ne!(a.inputs, p.train.inputs);
    assert!(matches!(
        inject_noise(&p.train, -0.1, 3),
        Err(Error::Config(_))
    ));
}

#[test]
fn noise_magnitude_matches_folded_normal() {
    let mid = series(&vec![0.5; 10_001]);
    let d = make_supervised(&mid, "load", &names(&["load"]), 1).unwrap();
    let noisy = inject_noise(&d, 0.01, 11).unwrap();
    let mean_abs: f64 =
        noisy.inputs.iter().map(|x| (x[0] - 0.5).abs()).sum::<f64>() / d.len() as f64;
    let expected = 0.01 * (2.0 / std::f64::consts::PI).sqrt();
    assert!(
        (mean_abs / expected - 1.0).abs() < 0.1,
        "{mean_abs} vs {expected}"
    );
}

#[test]
fn statistics_ignore_the_test_rows() {
    let mut values: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).sin()).collect();
    let s1 = series(&values);
    values[18] = 100.0;
    values[19] = -100.0;
    let s2 = series(&values);
    let split = SplitSpec::Ratio(0.8);
    let f1 = FitRange::training(20, split, 1).unwrap();
    assert!(f1.range().end <= 16);
    let a = minmax_fit(&s1, &names(&["load"]), f1).unwrap();
    let b = minmax_fit(
        &s2,
        &names(&["load"]),
        FitRange::training(20, split, 1).unwrap(),
    )
    .unwrap();
    assert_eq!(a, b);
    let p = prepare(&s2, "load", &names(&["load"]), split).unwrap();
    assert!(p
        .test
        .inputs
        .iter()
        .flatten()
        .all(|x| (0.0..=1.0).contains(x)));
    assert!(p.test.labels.iter().any(|y| *y > 1.0));
}

#[test]
fn normalized_dump() {
    let d = make_supervised(&series(&[0.1, 0.2, 0.3]), "load", &names(&["load"]), 1).unwrap();
    let mut out = Vec::new();
    d.write_csv(&mut out).unwrap();
    assert_eq!(
        String::from_utf8(out).unwrap(),
        "load,load_next\n0.1,0.2\n0.2,0.3\n"
    );
}

proptest! {
    #[test]
    fn minmax_round_trip(values in prop::collection::vec(-1e4f64..1e4, 5..60)) {
        let s = series(&values);
        let fit = FitRange::training(s.len(), SplitSpec::Ratio(0.75), 1).unwrap();
        let Ok(stats) = minmax_fit(&s, &names(&["load"]), fit) else { return Ok(()) };
        let norm = minmax_apply(&s, &stats).unwrap();
        let back = minmax_invert(norm.column("load").unwrap(), &stats, "load").unwrap();
        let scale = 1e4f64;
        for (i, (a, b)) in back.iter().zip(&values).enumerate().take(fit.range().end) {
            prop_assert!((a - b).abs() <= 1e-12 * scale, "row {i}: {a} vs {b}");
        }
    }

    #[test]
    fn labels_are_the_next_normalized_value(values in prop::collection::vec(0.0f64..1.0, 3..50)) {
        let s = series(&values);
        let d = make_supervised(&s, "load", &names(&["load"]), 1).unwrap();
        for t in 0..d.len() {
            prop_assert_eq!(d.labels[t].to_bits(), values[t + 1].to_bits());
            prop_assert_eq!(d.inputs[t][0].to_bits(), values[t].to_bits());
        }
    }
}
