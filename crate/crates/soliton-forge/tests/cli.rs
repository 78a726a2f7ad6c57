//! End-to-end contract of the `soliton-forge` binary: flag handling, exit
//! codes, output formats, and byte-for-byte determinism. Everything here
//! drives the compiled executable, not the library.

use std::process::{Command, Output};

fn forge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soliton-forge"))
        .args(args)
        .env_remove("SOLITON_FORGE_THREADS")
        .output()
        .expect("binary spawns")
}

fn stdout(out: &Output) -> &str {
    std::str::from_utf8(&out.stdout).expect("stdout is utf-8")
}

fn stderr(out: &Output) -> &str {
    std::str::from_utf8(&out.stderr).expect("stderr is utf-8")
}

/// Numeric rows of a CSV body (comment lines and the column header dropped).
fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

fn tmp_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join(name)
}

#[test]
fn help_lists_the_contract() {
    let out = forge(&["--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for sub in ["solve", "sweep", "invert", "degree", "validate"] {
        assert!(text.contains(sub), "--help does not mention `{sub}`");
    }
    assert!(text.contains("exit"), "--help does not document exit codes");
}

#[test]
fn einstein_profile_matches_closed_form() {
    // f ≡ 0 forces a = a₀·cosh(r/√3), b = √3·sinh(r/√3), R = −4.
    let out = forge(&[
        "solve", "--topology", "s1r3", "--a0", "1", "--f0", "0", "--einstein", "--rmax", "5",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# soliton-forge v"));
    assert!(text.contains("\nr,a,da,b,db,f,df,R,trace_residual,bianchi_residual\n"));
    let rows = data_rows(text);
    assert!(rows.len() > 50);
    let s3 = 3f64.sqrt();
    for row in &rows {
        let (r, a, b, f, scal) = (row[0], row[1], row[3], row[5], row[7]);
        let ae = (r / s3).cosh();
        let be = s3 * (r / s3).sinh();
        assert!((a - ae).abs() <= 1e-8 * ae, "a off at r = {r}");
        assert!((b - be).abs() <= 1e-8 * (1.0 + be), "b off at r = {r}");
        // f ≡ 0 is an unstable direction: tolerance-scale noise grows ~e²ʳ
        assert!(f.abs() <= 1e-10 * (2.0 * r).exp(), "f nonzero at r = {r}");
        assert!((scal + 4.0).abs() <= 1e-6, "R ≠ −4 at r = {r}");
    }
    let last = rows.last().unwrap();
    assert!((last[0] - 5.0).abs() <= 1e-9, "did not integrate to rmax");
}

#[test]
fn config_errors_exit_2() {
    // f0 = 0 without the explicit opt-in
    let out = forge(&["solve", "--topology", "s1r3", "--a0", "1", "--f0", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--einstein"));

    // --einstein with a genuine soliton parameter
    let out = forge(&["solve", "--topology", "s1r3", "--a0", "1", "--f0", "-1", "--einstein"]);
    assert_eq!(out.status.code(), Some(2));

    // unknown topology (clap usage error)
    let out = forge(&["solve", "--topology", "nope", "--a0", "1", "--f0", "-1"]);
    assert_eq!(out.status.code(), Some(2));

    // orbit flag for the wrong topology
    let out = forge(&["solve", "--topology", "s1r3", "--b0", "1", "--f0", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--a0"));

    // orbit size missing entirely
    let out = forge(&["solve", "--topology", "s1r3", "--f0", "-1"]);
    assert_eq!(out.status.code(), Some(2));

    // sweep over non-negative f0 is meaningless
    let out = forge(&[
        "sweep", "--topology", "s1r3", "--orbit-grid", "1:2:2", "--f0-grid", "0.5:1:2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("negative"));

    // unknown key in a config file
    let cfg = tmp_path("bad.conf");
    std::fs::write(&cfg, "topology = s1r3\ncoffee = yes\n").unwrap();
    let out = forge(&["solve", "--config", cfg.to_str().unwrap(), "--a0", "1", "--f0", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("coffee"));

    // unusable thread count
    let out = Command::new(env!("CARGO_BIN_EXE_soliton-forge"))
        .args(["solve", "--topology", "s1r3", "--a0", "1", "--f0", "0", "--einstein"])
        .env("SOLITON_FORGE_THREADS", "lots")
        .output()
        .expect("binary spawns");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unconverged_run_exits_3() {
    // r = 40 is far short of where the cone gates close at (1, −1); an
    // explicit --rmax is a single attempt, so this must fail loudly.
    let out = forge(&[
        "solve", "--topology", "s1r3", "--a0", "1", "--f0", "-1", "--rmax", "40",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).starts_with("soliton-forge:"));
}

#[test]
fn config_file_flags_override() {
    let cfg = tmp_path("family.conf");
    std::fs::write(
        &cfg,
        "# family under test\ntopology = s1r3\na0 = 1\nf0 = -1\nrmax = 400\n",
    )
    .unwrap();
    // the flag wins over the file's f0 = -1
    let out = forge(&["solve", "--config", cfg.to_str().unwrap(), "--f0", "-0.5"]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("f0=-5.0000000000000000e-1"),
        "override did not take effect"
    );
    // converged: the summary carries a cone constant
    let k_field = text.split("k=").nth(1).expect("summary has k field");
    assert!(
        k_field.starts_with(|c: char| c.is_ascii_digit()),
        "no cone constant in summary"
    );
}

#[test]
fn json_and_csv_agree_bitwise() {
    let args = ["solve", "--topology", "s1r3", "--a0", "1", "--f0", "0", "--einstein", "--rmax", "5"];
    let csv = forge(&args);
    let mut jargs = args.to_vec();
    jargs.extend(["--format", "json"]);
    let json = forge(&jargs);
    assert!(csv.status.success() && json.status.success());

    let v: serde_json::Value = serde_json::from_str(stdout(&json)).expect("valid json");
    assert_eq!(v["tool"], "soliton-forge");
    assert_eq!(v["command"], "solve");
    assert_eq!(v["summary"]["topology"], "s1r3");
    let samples = v["samples"].as_array().expect("samples array");
    assert!(!samples.is_empty());

    // same run, same bits: first stored a-value across the two formats
    let csv_a = data_rows(stdout(&csv))[0][1];
    let json_a = samples[0]["a"].as_f64().expect("a is a number");
    assert_eq!(csv_a.to_bits(), json_a.to_bits());
}

#[test]
fn sweep_produces_one_row_per_grid_point() {
    let out = forge(&[
        "sweep", "--topology", "s1r3", "--orbit-grid", "0.5:2:2", "--f0-grid", "-2:-0.5:2",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# soliton-forge v"));
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 4, "expected 2×2 grid rows");
    for row in &rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], "s1r3");
        assert!(!fields[3].is_empty(), "unconverged row in sweep: {row}");
    }
}

#[test]
fn invert_reports_empty_preimage_set() {
    // nothing in a small box maps anywhere near a'∞ = 100; an empty result
    // is an answer, not an error
    let out = forge(&[
        "invert", "--topology", "s1r3", "--target-a", "100", "--target-b", "1",
        "--box", "0.9:1.1:0.5:1",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(stdout(&out)).expect("valid json");
    assert_eq!(v["preimages"].as_array().map(Vec::len), Some(0));
}

#[test]
fn output_is_deterministic() {
    let args = ["solve", "--topology", "s2r2", "--b0", "1", "--f0", "0", "--einstein", "--rmax", "5", "--format", "json"];
    let first = forge(&args);
    let second = forge(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "repeat run differs");

    // pinning the thread pool must not change a byte either
    let pinned = Command::new(env!("CARGO_BIN_EXE_soliton-forge"))
        .args(args)
        .env("SOLITON_FORGE_THREADS", "1")
        .output()
        .expect("binary spawns");
    assert_eq!(first.stdout, pinned.stdout, "thread count leaked into output");

    // --out writes exactly the stdout bytes
    let path = tmp_path("det.json");
    let mut fargs = args.to_vec();
    fargs.extend(["--out", path.to_str().unwrap()]);
    let to_file = forge(&fargs);
    assert!(to_file.status.success());
    assert!(to_file.stdout.is_empty(), "--out still printed to stdout");
    assert_eq!(std::fs::read(&path).unwrap(), first.stdout);
}

#[test]
fn validate_passes_clean() {
    let out = forge(&["validate"]);
    let text = stdout(&out);
    assert!(
        out.status.success(),
        "validate failed:\n{text}\nstderr: {}",
        stderr(&out)
    );
    assert!(text.contains("checks passed"));
    assert!(!text.contains("FAIL"), "validate printed a FAIL row:\n{text}");
}
