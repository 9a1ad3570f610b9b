use std::process::Command;

use layerpc::schemes::two_power_region;
use layerpc_cli::{
    apply_overrides, emit_csv, load_document, parse_csv, run_experiment, ExperimentSpec, ResultTable, Row,
};

fn spec_with(id: &str, overrides: &[&str]) -> ExperimentSpec {
    let mut doc = load_document(id).unwrap();
    let o: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    apply_overrides(&mut doc, &o).unwrap();
    ExperimentSpec::from_table(doc).unwrap()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_layerpc"))
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let status = bin()
            .args(["run", "fig2", "--trials", "1000", "--override", "sweep_points=3", "--out"])
            .arg(&path)
            .status()
            .unwrap();
        assert!(status.success());
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    let text = String::from_utf8(bytes.pop().unwrap()).unwrap();
    assert!(text.starts_with("sweep_name,sweep_value,scheme,metric,estimate,ci_halfwidth,analytic\n"));
}

#[test]
fn single_row_table_is_two_lines() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.csv");
    let table = ResultTable {
        rows: vec![Row::new("lambda", 1e-4, "nopc", "outage", 0.2027, 0.0056, Some(0.2066))],
    };
    emit_csv(&table, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        text,
        "sweep_name,sweep_value,scheme,metric,estimate,ci_halfwidth,analytic\n\
         lambda,1.000000000e-4,nopc,outage,2.027000000e-1,5.600000000e-3,2.066000000e-1\n"
    );
    assert_eq!(parse_csv(&path).unwrap(), table);
    assert!(emit_csv(&ResultTable::default(), &path).is_err());
}

#[test]
fn repeated_sweep_point_gives_identical_rows() {
    let spec = spec_with(
        "fig2",
        &["sweep_min=1e-4", "sweep_max=1e-4", "sweep_points=2", "schemes=[\"nopc\"]", "metrics=[\"outage\"]", "trials=1000"],
    );
    let table = run_experiment(&spec).unwrap();
    assert_eq!(table.len(), 2);
    assert_eq!(table.rows[0], table.rows[1]);
}

#[test]
fn fig5_has_one_tc_row_per_point_and_scheme() {
    let spec = spec_with("fig5", &["trials=1000", "sweep_points=3"]);
    let table = run_experiment(&spec).unwrap();
    assert_eq!(table.len(), 3 * spec.schemes.len());
    assert!(table.rows.iter().all(|r| r.metric == "tc"));
    let mut keys: Vec<_> = table.rows.iter().map(|r| (r.sweep_value.to_bits(), r.scheme.clone())).collect();
    keys.dedup();
    assert_eq!(keys.len(), table.len());
    // closed forms exist for no power control and the discrete design only
    for r in &table.rows {
        assert_eq!(r.analytic.is_some(), r.scheme == "nopc" || r.scheme == "dpc:thm5", "{r:?}");
    }
}

#[test]
fn csv_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig4.csv");
    let spec = spec_with("fig4", &["trials=1000", "sweep_points=2"]);
    let table = run_experiment(&spec).unwrap();
    assert!(table.rows.iter().any(|r| r.analytic.is_none()));
    assert!(table.rows.iter().any(|r| r.metric == "bound_upper"));
    emit_csv(&table, &path).unwrap();
    assert_eq!(parse_csv(&path).unwrap(), table);
}

#[test]
fn rows_sorted_and_outage_monotone_under_common_numbers() {
    let spec = spec_with("fig2", &["trials=2000"]);
    let table = run_experiment(&spec).unwrap();
    let keys: Vec<_> = table.rows.iter().map(|r| (r.sweep_value, r.scheme.clone(), r.metric.clone())).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    assert_eq!(keys, sorted);
    for (scheme, metric) in [("nopc", "outage"), ("two-level:1.5:0.4", "outage_1"), ("two-level:1.5:0.4", "outage_2")] {
        let v: Vec<f64> = table
            .rows
            .iter()
            .filter(|r| r.scheme == scheme && r.metric == metric)
            .map(|r| r.estimate)
            .collect();
        assert_eq!(v.len(), spec.sweep_points);
        assert!(v.windows(2).all(|w| w[0] <= w[1]), "{scheme} {metric}: {v:?}");
    }
}

#[test]
fn fig1_rows_are_the_closed_form_region() {
    let spec = ExperimentSpec::preset("fig1").unwrap();
    let table = run_experiment(&spec).unwrap();
    assert_eq!(table.len(), 2 * spec.sweep_points);
    for r in &table.rows {
        let region = two_power_region(r.sweep_value, 1.0 - r.sweep_value, 3.5, 1.29).unwrap();
        let want = if r.metric == "ratio_lower" { region.lower } else { region.upper };
        assert!(r.estimate == want || (r.estimate / want - 1.0).abs() < 1e-9, "{r:?}");
        assert_eq!(r.analytic, Some(r.estimate));
        assert_eq!(r.ci_halfwidth, 0.0);
    }
}

#[test]
fn fig7_optimal_design_saves_power() {
    let spec = spec_with("fig7", &["trials=1000", "sweep_points=2", "metrics=[\"sum_power\"]"]);
    let table = run_experiment(&spec).unwrap();
    let power = |scheme: &str| table.rows.iter().find(|r| r.scheme == scheme).unwrap().estimate;
    let share = power("dpc:optimal:5") / power("dpc:vb:5");
    assert!((0.70..=0.85).contains(&share), "{share}");
    assert!(table.rows.iter().all(|r| r.scheme != "nopc"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code().unwrap();

    assert_eq!(code(&["validate", "fig4"]), 0);
    assert_eq!(code(&["validate", "fig9"]), 2);
    assert_eq!(code(&["validate", "fig2", "--override", "sweep_points=1"]), 2);
    assert_eq!(code(&["validate", "fig2", "--override", "beta=-1"]), 2);
    assert_eq!(code(&["validate", "fig4", "--override", "inner_radius=0"]), 0);
    assert_eq!(code(&["validate", "fig4", "--override", "receivers=\"fixed\"", "--override", "distance=20"]), 2);
    assert_eq!(code(&["validate", "fig7", "--override", "rho0=100"]), 3);
    assert_eq!(code(&["run", "fig1", "--override", "bogus_key=1"]), 2);

    let missing = dir.path().join("no/such/dir/out.csv");
    assert_eq!(code(&["run", "fig1", "--out", missing.to_str().unwrap()]), 1);

    let file = dir.path().join("exp.toml");
    std::fs::write(&file, "name = \"x\"\nsweep_min = 1e-4\nsweep_max = 2e-4\nsweep_points = 2\nschemes = [\"nopc\"]\nmetrics = [\"outage\"]\nreceivers = \"fixed\"\ndistance = 20.0\ntrials = 1000\n").unwrap();
    let out = bin().args(["run", file.to_str().unwrap()]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);

    let out = bin().arg("list-presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let ids: Vec<_> = text.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(ids, ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7"]);
}
