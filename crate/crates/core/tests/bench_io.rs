mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use proxdiff::bench::{
    emit_csv, generate_lasso, read_csv, run_curves, run_error_curves, write_csv, ErrorCurves,
    ExperimentSpec, COLUMNS,
};
use proxdiff::rate::{fit_linear_rate_from, DEFAULT_FLOOR};
use proxdiff::Error;

fn small_spec(seed: u64) -> ExperimentSpec {
    ExperimentSpec {
        iters: 100,
        ..ExperimentSpec::lasso_desk(seed)
    }
}

fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden_lasso_seed7_k100.csv")
}

fn csv_bytes(curves: &ErrorCurves) -> Vec<u8> {
    let mut out = Vec::new();
    write_csv(curves, &mut out).unwrap();
    out
}

#[test]
fn csv_round_trip_returns_identical_values() {
    let run = run_error_curves(&small_spec(7)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curves.csv");
    emit_csv(&run.curves, &path).unwrap();
    assert_eq!(read_csv(&path).unwrap(), run.curves);
    let header = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        header.lines().next().unwrap(),
        format!("iter,{}", COLUMNS.join(","))
    );
}

#[test]
fn output_matches_the_blessed_file() {
    let run = run_error_curves(&small_spec(7)).unwrap();
    let golden = std::fs::read(golden_path()).unwrap();
    assert!(
        csv_bytes(&run.curves) == golden,
        "CSV differs from {}",
        golden_path().display()
    );
}

#[test]
fn empty_or_malformed_curves_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    let empty = ErrorCurves {
        columns: Default::default(),
    };
    assert!(emit_csv(&empty, &path).is_err());

    std::fs::write(&path, format!("iter,{}\n", COLUMNS.join(","))).unwrap();
    assert!(read_csv(&path).is_err());
    std::fs::write(&path, "iter,a,b\n0,1,2\n").unwrap();
    assert!(matches!(read_csv(&path), Err(Error::Parse { .. })));
    assert!(matches!(
        read_csv(&dir.path().join("missing.csv")),
        Err(Error::Csv { .. })
    ));
}

#[test]
fn identical_specs_give_identical_bytes() {
    let a = run_error_curves(&small_spec(3)).unwrap();
    let b = run_error_curves(&small_spec(3)).unwrap();
    assert_eq!(csv_bytes(&a.curves), csv_bytes(&b.curves));
}

#[test]
fn every_curve_ends_below_its_start() {
    let inst = (0..20)
        .find_map(|s| generate_lasso(&ExperimentSpec::lasso_desk(s)).ok())
        .unwrap();
    let run = run_curves(&inst, 2000, 5.0).unwrap();
    for (name, c) in COLUMNS.iter().zip(&run.curves.columns) {
        assert!(
            c.last().unwrap() < &c[0],
            "{name}: {} -> {}",
            c[0],
            c.last().unwrap()
        );
    }
    let pgd = fit_linear_rate_from(
        run.curves.get("pgd_x").unwrap(),
        run.pgd.identified_at.unwrap(),
        DEFAULT_FLOOR,
    )
    .unwrap();
    let apg = fit_linear_rate_from(
        run.curves.get("apg_x").unwrap(),
        run.apg.identified_at.unwrap(),
        DEFAULT_FLOOR,
    )
    .unwrap();
    assert!(
        apg.slope < pgd.slope,
        "APG {} vs PGD {}",
        apg.slope,
        pgd.slope
    );

    for (name, c) in COLUMNS.iter().zip(&run.curves.columns) {
        let start = if name.starts_with("pgd") {
            run.pgd.identified_at
        } else {
            run.apg.identified_at
        }
        .unwrap();
        if c.last().unwrap() < &(1e-3 * c[start]) {
            let r = fit_linear_rate_from(c, start, DEFAULT_FLOOR).unwrap();
            assert!(r.r_squared > 0.9, "{name}: r² = {}", r.r_squared);
        }
    }
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxdiff"))
}

#[test]
fn cli_exits_with_2_on_a_degenerate_instance() {
    let dir = tempfile::tempdir().unwrap();
    let status = cli()
        .args([
            "bench",
            "--problem",
            "lasso",
            "--lambda",
            "1e6",
            "--iters",
            "10",
            "--out",
        ])
        .arg(dir.path().join("c.csv"))
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn cli_flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("spec.json");
    let spec = ExperimentSpec {
        iters: 40,
        ..ExperimentSpec::lasso_desk(7)
    };
    std::fs::write(&config, serde_json::to_string(&spec).unwrap()).unwrap();
    let out = dir.path().join("c.csv");
    let status = cli()
        .args(["bench", "--iters", "100", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(golden_path()).unwrap()
    );

    let rates = cli().arg("rates").arg(&out).output().unwrap();
    assert!(rates.status.success());
    let text = String::from_utf8(rates.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.starts_with("column"));
}
