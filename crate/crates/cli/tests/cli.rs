use std::process::Command;

use telelocal::commands::{self, Command as Cmd, Format, Grid, RunConfig};
use telelocal::{render, run, Report};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_telelocal"))
}

fn quick(command: Cmd) -> RunConfig {
    RunConfig {
        samples: 20_000,
        ..RunConfig::new(command)
    }
}

#[test]
fn every_command_passes_with_defaults_but_fewer_samples() {
    for c in [
        Cmd::Reproduce,
        Cmd::Scan,
        Cmd::Lhv,
        Cmd::Hardy,
        Cmd::Gisin,
        Cmd::Teleport,
    ] {
        let report = run(&quick(c)).unwrap();
        assert_eq!(report.command, c.name());
        assert!(
            report.all_pass(),
            "{c:?}: {:?}",
            report.failures().collect::<Vec<_>>()
        );
    }
}

#[test]
fn stochastic_rows_carry_samples_and_stderr() {
    let report = run(&quick(Cmd::Reproduce)).unwrap();
    for name in [
        "z_scheme_fidelity",
        "gisin_fidelity_mc",
        "lhv_teleport_ch",
        "lhv_vs_quantum_max_deviation",
    ] {
        let row = report.row(name).unwrap();
        assert_eq!(row.samples, Some(20_000), "{name}");
        assert!(row.stderr.is_some(), "{name}");
    }
    assert!(report.row("singlet_ch_value").unwrap().stderr.is_none());
}

#[test]
fn scan_brackets_threshold() {
    let report = commands::cmd_scan(&RunConfig::new(Cmd::Scan)).unwrap();
    let row = report.row("first_violation").unwrap();
    assert_eq!(row.value, 0.71);
    assert_eq!(row.pass, Some(true));
    assert_eq!(
        report
            .results
            .iter()
            .filter(|r| r.name.starts_with("ch_value"))
            .count(),
        101
    );

    let mut coarse = RunConfig::new(Cmd::Scan);
    coarse.grid = Some(Grid {
        lo: 0.0,
        hi: 0.5,
        step: 0.1,
    });
    let report = run(&coarse).unwrap();
    assert!(report.all_pass());
    assert!(report.row("first_violation").is_none());
}

#[test]
fn reports_are_deterministic_and_round_trip() {
    let cfg = quick(Cmd::Reproduce);
    let a = render(&run(&cfg).unwrap(), Format::Json).unwrap();
    let b = render(&run(&cfg).unwrap(), Format::Json).unwrap();
    assert_eq!(a, b);
    let parsed = Report::from_json(&a).unwrap();
    assert_eq!(render(&parsed, Format::Json).unwrap(), a);
    assert_eq!(parsed, run(&cfg).unwrap());
}

#[test]
fn config_validation() {
    let mut cfg = RunConfig::new(Cmd::Teleport);
    cfg.samples = 0;
    assert!(run(&cfg).is_err());
    cfg.samples = 10;
    cfg.alpha = Some(1.5);
    assert!(run(&cfg).is_err());
    let mut cfg = RunConfig::new(Cmd::Scan);
    cfg.grid = Some(Grid {
        lo: 0.0,
        hi: 1.0,
        step: -0.1,
    });
    assert!(run(&cfg).is_err());
    let mut cfg = RunConfig::new(Cmd::Lhv);
    cfg.alpha = Some(0.6);
    assert!(run(&cfg).is_err());
    assert!("0:1".parse::<Grid>().is_err());
    assert!("0:x:0.1".parse::<Grid>().is_err());
    assert_eq!(
        "0:1:0.25".parse::<Grid>().unwrap(),
        Grid {
            lo: 0.0,
            hi: 1.0,
            step: 0.25
        }
    );
}

#[test]
fn binary_exit_codes() {
    let ok = bin().args(["hardy"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["command"], "hardy");
    assert!(json["paper_reference"].is_string());

    let fail = bin().args(["gisin", "--samples", "1"]).output().unwrap();
    assert_eq!(fail.status.code(), Some(1));

    for args in [
        vec!["nope"],
        vec!["teleport", "--alpha", "2"],
        vec!["scan", "--grid", "0:1"],
        vec!["gisin", "--format", "xml"],
        vec!["lhv", "--alpha", "0.9"],
    ] {
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn csv_output_to_file() {
    let dir = std::env::temp_dir().join(format!("telelocal-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("gisin.csv");
    let status = bin()
        .args(["gisin", "--samples", "50000", "--format", "csv", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        rows.headers().unwrap(),
        vec!["name", "value", "stderr", "expected", "tolerance", "pass"]
    );
    let names: Vec<String> = rows.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(
        names,
        [
            "gisin_fidelity_mc",
            "gisin_fidelity_analytic",
            "z_scheme_fidelity"
        ]
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn unwritable_output_is_an_error() {
    let out = bin()
        .args(["hardy", "--out", "/nonexistent-dir/report.json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
