use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use shapereg::shapeops::{pava_1d, GridFunction};
use shapereg::Sign;
use shapereg_cli::formats::{read_dataset, read_grid, read_model, read_table, write_model};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn shapereg(args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_shapereg"))
        .args(args)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn ok(args: &[&str]) -> Run {
    let r = shapereg(args);
    assert_eq!(r.code, 0, "{args:?}\n{}\n{}", r.stdout, r.stderr);
    r
}

fn bundled_sigmoid() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sigmoid1d.csv")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_csv(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn fit_bundled_sigmoid_is_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let data = bundled_sigmoid();
    let r = ok(&["fit", "--data", s(&data), "--degree", "6", "--constraints", "+1", "--out", s(&model)]);
    assert!(r.stdout.contains("status: converged"), "{}", r.stdout);
    assert!(r.stdout.contains("reference-grid violations (20 per input): 0"));
    let file = read_model(&model).unwrap();
    assert_eq!(file.report.status, "converged");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d2 = dir.path().join("d2.csv");
    write_csv(&d2, "x1,x2,target\n0,0,1\n1,0,2\n0,1,3\n1,1,4\n");
    let model = dir.path().join("m.json");
    let r = shapereg(&["fit", "--data", s(&d2), "--degree", "2", "--constraints", "0,0,0,0,0,0,+1", "--out", s(&model)]);
    assert_eq!(r.code, 2);

    let capped = dir.path().join("capped.json");
    let data = bundled_sigmoid();
    let r = shapereg(&["fit", "--data", s(&data), "--degree", "6", "--constraints", "+1", "--max-iter", "0", "--out", s(&capped)]);
    assert_eq!(r.code, 3, "{}", r.stdout);
    assert_eq!(read_model(&capped).unwrap().report.status, "max-iterations");

    let bad = dir.path().join("bad.csv");
    write_csv(&bad, "x1,target\n0,1\nzero,2\n");
    assert_eq!(shapereg(&["fit", "--data", s(&bad), "--degree", "1", "--out", s(&model)]).code, 1);
    let missing = dir.path().join("missing.csv");
    assert_eq!(shapereg(&["fit", "--data", s(&missing), "--degree", "1", "--out", s(&model)]).code, 1);
    assert_eq!(shapereg(&["fit", "--data", s(&d2), "--out", s(&model)]).code, 2);
    assert_eq!(shapereg(&["synth", "--scenario", "nope", "--seed", "1", "--out", s(&bad)]).code, 2);
}

#[test]
fn predictions_of_constant_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("c.csv");
    write_csv(&data, "x1,x2,target\n0,0,5\n1,0,5\n0,2,5\n1,2,5\n0.5,1,5\n");
    let model = dir.path().join("m.json");
    ok(&["fit", "--data", s(&data), "--degree", "2", "--constraints", "+1,-1", "--out", s(&model)]);
    let points = dir.path().join("p.csv");
    write_csv(&points, "x1,x2\n0.1,0.3\n0.9,1.7\n");
    let r = ok(&["predict", "--model", s(&model), "--data", s(&points)]);
    assert_eq!(r.stdout, "prediction\n5\n5\n");

    let grid = dir.path().join("g.csv");
    ok(&["eval-grid", "--model", s(&model), "--resolution", "4", "--out", s(&grid)]);
    let table = read_table(&grid).unwrap();
    assert_eq!(table.header, ["x1", "x2", "prediction", "d1_x1", "d1_x2"]);
    assert_eq!(table.rows.len(), 16);
    assert!(table.rows.iter().all(|r| r[3] == 0.0 && r[4] == 0.0));
}

#[test]
fn linear_model_has_constant_slope_column() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("lin.csv");
    write_csv(&data, "x1,target\n2,1\n4,2\n6,3\n10,5\n");
    let model = dir.path().join("m.json");
    ok(&["fit", "--data", s(&data), "--degree", "1", "--method", "poly", "--constraints", "+1", "--out", s(&model)]);
    let grid = dir.path().join("g.csv");
    ok(&["eval-grid", "--model", s(&model), "--out", s(&grid)]);
    let table = read_table(&grid).unwrap();
    assert_eq!(table.rows.len(), 20);
    assert!(table.rows.iter().all(|r| (r[2] - 0.5).abs() < 1e-12));
}

#[test]
fn predict_reproduces_report_rmse_and_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("g.csv");
    ok(&["synth", "--scenario", "glass2d", "--seed", "4", "--noise", "1", "--bump", "6", "--out", s(&data)]);
    let model = dir.path().join("m.json");
    ok(&["fit", "--data", s(&data), "--degree", "5", "--constraints", "+1,+1", "--out", s(&model)]);
    let preds = dir.path().join("p.csv");
    ok(&["predict", "--model", s(&model), "--data", s(&data), "--out", s(&preds)]);
    let p = read_table(&preds).unwrap();
    let d = read_dataset(&data).unwrap();
    let rmse = (p.rows.iter().zip(d.targets()).map(|(r, t)| (r[0] - t).powi(2)).sum::<f64>() / d.len() as f64).sqrt();
    let file = read_model(&model).unwrap();
    assert!((rmse - file.report.rmse).abs() <= 1e-12 * (1.0 + rmse));

    // load and save again: identical document and identical predictions
    let copy = dir.path().join("copy.json");
    write_model(&copy, &file).unwrap();
    assert_eq!(fs::read(&model).unwrap(), fs::read(&copy).unwrap());
    let preds2 = dir.path().join("p2.csv");
    ok(&["predict", "--model", s(&copy), "--data", s(&data), "--out", s(&preds2)]);
    assert_eq!(fs::read(&preds).unwrap(), fs::read(&preds2).unwrap());
}

#[test]
fn projection_of_monotone_model_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mp.csv");
    ok(&["synth", "--scenario", "mono-poly", "--seed", "1", "--out", s(&data)]);
    let model = dir.path().join("m.json");
    ok(&["fit", "--data", s(&data), "--degree", "3", "--method", "poly", "--out", s(&model)]);
    let projected = dir.path().join("p.json");
    ok(&["project", "--model", s(&model), "--constraints", "+1", "--out", s(&projected)]);
    let sampled = dir.path().join("s.csv");
    ok(&["eval-grid", "--model", s(&model), "--resolution", "80", "--out", s(&sampled)]);
    let before: Vec<f64> = read_table(&sampled).unwrap().rows.iter().map(|r| r[1]).collect();
    let after = read_grid(&projected).unwrap().grid;
    assert_eq!(after.len(), 80);
    for (a, b) in after.values().iter().zip(&before) {
        assert!((a - b).abs() <= 1e-8);
    }
}

#[test]
fn one_dimensional_projection_matches_pava() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("s.csv");
    ok(&["synth", "--scenario", "sigmoid1d", "--seed", "2", "--size", "9", "--noise", "0.5", "--bump", "4", "--out", s(&data)]);
    let model = dir.path().join("m.json");
    ok(&["fit", "--data", s(&data), "--degree", "8", "--method", "poly", "--out", s(&model)]);
    let sampled = dir.path().join("g.csv");
    ok(&["eval-grid", "--model", s(&model), "--resolution", "80", "--out", s(&sampled)]);
    let raw: Vec<f64> = read_table(&sampled).unwrap().rows.iter().map(|r| r[1]).collect();
    for (sig, sign) in [("+1", Sign::Positive), ("-1", Sign::Negative)] {
        let projected = dir.path().join("p.json");
        ok(&["project", "--model", s(&model), "--constraints", sig, "--resolution", "80", "--out", s(&projected)]);
        let grid = read_grid(&projected).unwrap().grid;
        let oracle = pava_1d(&raw, sign);
        for (a, b) in grid.values().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-8);
        }
    }
    let r = shapereg(&["project", "--model", s(&model), "--constraints", "c1", "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(r.code, 2);
}

#[test]
fn rearrangement_command() {
    let dir = tempfile::tempdir().unwrap();
    let grid_path = dir.path().join("g.json");
    let g = GridFunction::new(vec![vec![0.0, 1.0, 2.0]], vec![1.0, 3.0, 2.0]).unwrap();
    shapereg_cli::formats::write_grid(&grid_path, &shapereg_cli::formats::GridFile::new(g)).unwrap();
    let out = dir.path().join("r.json");
    ok(&["rearrange", "--model", s(&grid_path), "--out", s(&out)]);
    assert_eq!(read_grid(&out).unwrap().grid.values(), &[1.0, 2.0, 3.0]);
    ok(&["rearrange", "--model", s(&grid_path), "--sign", "-1", "--out", s(&out)]);
    assert_eq!(read_grid(&out).unwrap().grid.values(), &[3.0, 2.0, 1.0]);

    let data = dir.path().join("g.csv");
    ok(&["synth", "--scenario", "glass2d", "--seed", "1", "--out", s(&data)]);
    let model = dir.path().join("m.json");
    ok(&["fit", "--data", s(&data), "--degree", "2", "--method", "poly", "--out", s(&model)]);
    assert_eq!(shapereg(&["rearrange", "--model", s(&model), "--out", s(&out)]).code, 2);
}

#[test]
fn synth_is_deterministic_and_in_range() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        ok(&["synth", "--scenario", "press4d", "--seed", "9", "--noise", "2", "--bump", "10", "--out", s(path)]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let d = read_dataset(&a).unwrap();
    assert_eq!(d.len(), 60);
    let lo = [871.0, 0.0, 1750.0, 2.0];
    let hi = [933.0, 4.0, 2250.0, 6.0];
    assert!(d.inputs().iter().all(|x| (0..4).all(|j| x[j] >= lo[j] && x[j] <= hi[j])));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "degree = 1\nconstraints = \"+1\"\nmethod = \"poly\"\n").unwrap();
    let data = bundled_sigmoid();
    let model = dir.path().join("m.json");
    ok(&["fit", "--data", s(&data), "--config", s(&cfg), "--degree", "3", "--out", s(&model)]);
    let file = read_model(&model).unwrap();
    assert_eq!(file.report.method, "poly");
    assert_eq!(file.constraints.len(), 1);
    match file.model {
        shapereg_cli::formats::Predictor::Polynomial(m) => assert_eq!(m.degree(), 3),
        _ => panic!("expected polynomial"),
    }
    fs::write(&cfg, "degre = 1\n").unwrap();
    assert_eq!(shapereg(&["fit", "--data", s(&data), "--config", s(&cfg), "--out", s(&model)]).code, 1);
}

#[test]
fn reference_models_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let data = bundled_sigmoid();
    for method in ["poly", "ridge", "gpr"] {
        let model = dir.path().join(format!("{method}.json"));
        ok(&["fit", "--data", s(&data), "--degree", "4", "--method", method, "--out", s(&model)]);
        let preds = ok(&["predict", "--model", s(&model), "--data", s(&data)]);
        assert_eq!(preds.stdout.lines().count(), 7);
    }
    let r = ok(&["sweep", "--data", s(&data), "--degrees", "2..4", "--constraints", "+1"]);
    assert_eq!(r.stdout.lines().count(), 4, "{}", r.stdout);
}
