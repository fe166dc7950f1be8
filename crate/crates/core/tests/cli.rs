use std::process::{Command, Output};

fn bitree(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_bitree"));
    cmd.args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("BITREE_") {
            cmd.env_remove(k);
        }
    }
    cmd
}

fn run(cmd: &mut Command) -> (i32, String) {
    let Output { status, stdout, .. } = cmd.output().expect("binary runs");
    (status.code().unwrap_or(-1), String::from_utf8(stdout).unwrap())
}

fn json_price(stdout: &str) -> f64 {
    let v: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();
    v["price"].as_f64().unwrap_or(f64::NAN)
}

#[test]
fn prices_reference_put() {
    let (code, out) = run(&mut bitree(&[
        "price", "--method", "acz", "--sigma-r", "0.08", "--T", "1", "--N", "300", "--exercise",
        "european", "--kind", "put", "--K", "100",
    ]));
    assert_eq!(code, 0);
    assert!(out.contains("price=6.5847"), "{out}");
}

#[test]
fn json_and_csv_formats() {
    let (code, out) = run(&mut bitree(&["price", "--N", "50", "--format", "json"]));
    assert_eq!(code, 0);
    assert!((json_price(&out) - 6.547556).abs() < 1e-6);

    let (code, out) = run(&mut bitree(&["price", "--N", "50", "--format", "csv"]));
    assert_eq!(code, 0);
    let lines: Vec<_> = out.lines().collect();
    assert!(lines[0].starts_with("method,price,finite,N"));
    assert!(lines[1].starts_with("acz,6.547556,true,50"));
}

#[test]
fn negative_correlation_flag_parses() {
    let (code, out) = run(&mut bitree(&["price", "--N", "40", "--rho", "-0.5", "--format", "json"]));
    assert_eq!(code, 0);
    assert!(json_price(&out).is_finite());
}

#[test]
fn far_out_of_the_money_put_is_worthless() {
    let (code, out) = run(&mut bitree(&["price", "--N", "50", "--K", "1e-6", "--format", "json"]));
    assert_eq!(code, 0);
    assert!(json_price(&out).abs() < 1e-9);
}

#[test]
fn invalid_input_exits_with_two() {
    assert_eq!(run(&mut bitree(&["price", "--bogus"])).0, 2);
    assert_eq!(run(&mut bitree(&["price", "--K", "-1"])).0, 2);
    assert_eq!(run(&mut bitree(&["price", "--method", "xyz"])).0, 2);
    assert_eq!(
        run(&mut bitree(&["price", "--method", "mc", "--exercise", "american"])).0,
        2
    );
    assert_eq!(run(&mut bitree(&["table", "--id", "7"])).0, 2);
}

#[test]
fn environment_overrides_default_and_flag_overrides_environment() {
    let mut cmd = bitree(&["price", "--format", "json"]);
    cmd.env("BITREE_N", "50");
    let (_, from_env) = run(&mut cmd);
    assert!((json_price(&from_env) - 6.547556).abs() < 1e-6);

    let mut cmd = bitree(&["price", "--format", "json", "--N", "100"]);
    cmd.env("BITREE_N", "50");
    let (_, from_flag) = run(&mut cmd);
    assert!((json_price(&from_flag) - 6.569844).abs() < 1e-6);
}

#[test]
fn config_file_sits_below_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# reference put\nN = 50\nformat = json\nT = 2\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let (code, out) = run(&mut bitree(&["price", "--config", cfg]));
    assert_eq!(code, 0);
    assert!((json_price(&out) - 7.044844).abs() < 1e-6);

    let mut cmd = bitree(&["price", "--config", cfg]);
    cmd.env("BITREE_T", "1");
    let (_, out) = run(&mut cmd);
    assert!((json_price(&out) - 6.547556).abs() < 1e-6);
}

#[test]
fn monte_carlo_prints_standard_error() {
    let (code, out) = run(&mut bitree(&[
        "price", "--method", "mc", "--paths", "4000", "--mc-steps", "20", "--format", "json",
    ]));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert!(v["std_error"].as_f64().unwrap() > 0.0);
    assert_eq!(v["n_paths"].as_u64(), Some(4000));
}

#[test]
fn table_writes_files_and_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let (code, md) = run(&mut bitree(&[
        "table", "--id", "1", "--methods", "acz", "--N", "50,100", "--out-dir", out_dir,
    ]));
    assert_eq!(code, 0);
    assert!(md.contains("| sigma_r | N | ACZ |"));
    assert!(md.contains("6.547556"));

    let csv_path = dir.path().join("table1.csv");
    let manifest = dir.path().join("table1.manifest.json");
    let first = std::fs::read(&csv_path).unwrap();
    assert!(dir.path().join("table1.md").exists());
    std::fs::remove_file(&csv_path).unwrap();

    let (code, _) = run(&mut bitree(&["table", "--manifest", manifest.to_str().unwrap()]));
    assert_eq!(code, 0);
    assert_eq!(std::fs::read(&csv_path).unwrap(), first);
}

#[test]
fn table_marks_failed_cells_as_nan() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run(&mut bitree(&[
        "table", "--methods", "wei", "--sigma-r", "3", "--N", "20", "--out-dir",
        dir.path().to_str().unwrap(), "--name", "wei",
    ]));
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("wei.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    let fields: Vec<_> = row.split(',').collect();
    assert_eq!(fields[2], "wei");
    assert_eq!(fields[4] == "true", fields[3] != "nan");
}
