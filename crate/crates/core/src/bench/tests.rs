use super::*;
use crate::groups::DebugBackend;
use crate::indcpa::{run_game, GameConfig};

fn small(trials: Vec<usize>, samples: usize) -> BenchConfig {
    BenchConfig {
        trial_counts: trials,
        samples,
        seed: 17,
        ..BenchConfig::default()
    }
}

#[test]
fn defaults() {
    let c = BenchConfig::default();
    assert_eq!(
        c.attribute_sets[0].attrs,
        ["Doctor", "Professor", "Researcher"]
    );
    assert_eq!(c.attribute_sets[1].attrs.len(), 4);
    assert_eq!(c.messages, ["OISP Symposium", "The 9th Student Conference"]);
    assert_eq!(c.trial_counts, [1000, 1500, 2000]);
    assert_eq!(c.samples, 10);
    assert_eq!(c.cells().len(), 12);
}

#[test]
fn validation() {
    let b = DebugBackend::default();
    for c in [small(vec![1], 0), small(vec![], 1), small(vec![0], 1)] {
        assert_eq!(run_suite(&b, &c).unwrap_err().name(), "InvalidParameter");
    }
}

#[test]
fn degenerate_suite_is_well_formed() {
    let b = DebugBackend::default();
    let report = run_suite(&b, &small(vec![1], 1)).unwrap();
    assert_eq!(report.cells.len(), 4);
    for c in &report.cells {
        assert_eq!(c.samples.len(), 1);
        assert!(c.error.is_none());
        assert!(c.win_rate() == 0.0 || c.win_rate() == 1.0);
        assert!(c.mean_ms() >= 0.0);
    }
    let csv = String::from_utf8(emit_table(&report, TableFormat::Csv)).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn win_rates_match_run_game() {
    let b = DebugBackend::default();
    let config = small(vec![40, 25], 2);
    let report = run_suite(&b, &config).unwrap();
    for (idx, cell) in report.cells.iter().enumerate() {
        let set = config
            .attribute_sets
            .iter()
            .find(|s| s.name == cell.cell.set)
            .unwrap();
        let (universe, policy) = cell_policy(set).unwrap();
        let (m0, m1) = cell_messages(&cell.cell.message);
        for (sample, s) in cell.samples.iter().enumerate() {
            assert_eq!(s.seed, derive_seed(17, idx, sample));
            let stats = run_game(
                &b,
                &GameConfig {
                    universe: universe.clone(),
                    policy: policy.clone(),
                    m0: m0.clone(),
                    m1: m1.clone(),
                    trials: cell.cell.trials,
                    seed: s.seed,
                    strategy: Strategy::RandomGuess,
                },
            )
            .unwrap();
            assert_eq!(stats.wins, s.wins, "cell {idx} sample {sample}");
        }
    }
}

#[test]
fn failing_cell_is_recorded() {
    let b = DebugBackend::default();
    let mut config = small(vec![2], 1);
    config
        .attribute_sets
        .push(AttributeSet::new("bad", &["Doctor", "b"]));
    let report = run_suite(&b, &config).unwrap();
    assert_eq!(report.cells.len(), 6);
    let bad: Vec<_> = report.cells.iter().filter(|c| c.error.is_some()).collect();
    assert_eq!(bad.len(), 2);
    assert!(bad[0]
        .error
        .as_deref()
        .unwrap()
        .starts_with("ReservedAttribute"));
    assert!(bad[0].samples.is_empty());
    let md = String::from_utf8(emit_table(&report, TableFormat::Markdown)).unwrap();
    assert!(md.contains("error: ReservedAttribute"));
}

#[test]
fn messages_and_seeds() {
    let (m0, m1) = cell_messages("abc");
    assert_eq!((m0.as_slice(), m1.as_slice()), (&b"abc"[..], &b"cba"[..]));
    assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
    assert_ne!(derive_seed(1, 0, 1), derive_seed(1, 1, 0));
    assert_eq!(derive_seed(5, 2, 3), derive_seed(5, 2, 3));
}

#[test]
fn rounding() {
    assert_eq!(fmt_ms(415.69449), "415.6945");
    assert_eq!(fmt_ms(0.5), "0.5000");
    assert_eq!(fmt_pct(0.4982), "49.82%");
    assert_eq!(fmt_pct(0.50555), "50.56%");
}

#[test]
fn medians() {
    assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    assert!(median(Vec::new()).is_nan());
}

fn fixed_report() -> BenchReport {
    let cell = |set: &str, message: &str, trials, ms: f64, wins| CellReport {
        cell: Cell {
            set: set.into(),
            message: message.into(),
            trials,
        },
        samples: vec![SampleResult {
            seed: 0,
            mean_ms: ms,
            keygen_encrypt_ms: ms / 2.0,
            wins,
        }],
        error: None,
    };
    BenchReport {
        backend: "debug".into(),
        hostname: "host".into(),
        seed: 3,
        samples: 1,
        cells: vec![
            cell("A1", "x, \"y\"", 1000, 415.69449, 498),
            cell("A1", "x, \"y\"", 2000, 1.0, 1000),
            cell("A2", "x, \"y\"", 1000, 479.78164, 501),
        ],
    }
}

#[test]
fn markdown_layout() {
    let md = String::from_utf8(emit_table(&fixed_report(), TableFormat::Markdown)).unwrap();
    let expected = "\
Backend: debug, host: host, seed: 3, samples: 1
Cells: mean ms per round (Setup + KeyGen + Encrypt + DEM seal + challenge + guess), random-guess win rate

| Trials | A1: x, \"y\" | A2: x, \"y\" |
|---:|---|---|
| 1000 | 415.6945 49.80% | 479.7816 50.10% |
| 2000 | 1.0000 50.00% | - |
";
    assert_eq!(md, expected);
}

#[test]
fn csv_layout() {
    let csv = String::from_utf8(emit_table(&fixed_report(), TableFormat::Csv)).unwrap();
    let expected = "\
attribute_set,message,trials,samples,mean_ms,median_ms,win_rate_pct,error
A1,\"x, \"\"y\"\"\",1000,1,415.6945,415.6945,49.80,
A1,\"x, \"\"y\"\"\",2000,1,1.0000,1.0000,50.00,
A2,\"x, \"\"y\"\"\",1000,1,479.7816,479.7816,50.10,
";
    assert_eq!(csv, expected);
}

#[test]
fn format_names() {
    assert_eq!(TableFormat::parse("markdown"), Some(TableFormat::Markdown));
    assert_eq!(TableFormat::parse("csv"), Some(TableFormat::Csv));
    assert_eq!(TableFormat::parse("xml"), None);
}
