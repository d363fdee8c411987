use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dlphase::extract::Case;
use dlphase::io;
use dlphase::tomography::ReconstructionReport;

fn dlphase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlphase")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Short burst, small bins and no bootstrap so a full run takes a few seconds.
fn small_config(dir: &Path, noise: &str) -> String {
    let path = dir.join("small.json");
    let json = format!(
        r#"{{
  "scan": {{"scan_freq": 200.0, "burst_len": 0.06, "sample_rate": 1e7, "lo_amplitude": 0.05}},
  "noise": {noise},
  "vacuum_burst_len": 0.02,
  "n_bins": 3,
  "cutoff": 8,
  "bootstrap": 0
}}"#
    );
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

const NOISY: &str = r#"{"drift_model": "uniform-resample"}"#;
const NOISELESS: &str =
    r#"{"vacuum_std": 0.0, "electronic_std": 0.0, "drift_std_per_scan": 0.0, "drift_model": "uniform-resample"}"#;

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn simulate_is_bit_identical_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), NOISY);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = dlphase(&["simulate", "--config", &cfg, "--seed", "42", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let fa = files_in(&a);
    assert!(fa.iter().any(|(n, _)| n == "trace.bin"));
    assert!(fa.iter().any(|(n, _)| n == "truth.csv"));
    assert!(fa.iter().any(|(n, _)| n == "config.json"));
    let fb = files_in(&b);
    assert_eq!(fa.len(), fb.len());
    for ((na, da), (nb, db)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        // The echoed config records its own output directory.
        if na != "config.json" {
            assert!(da == db, "{na} differs between runs");
        }
    }
}

#[test]
fn missing_seed_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = dlphase(&["simulate", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn bad_config_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(dlphase(&["simulate", "--config", "no-such-preset", "--seed", "1", "--out", out]).status.code(), Some(2));
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"n_bins": 0}"#).unwrap();
    assert_eq!(dlphase(&["simulate", "--config", bad.to_str().unwrap(), "--seed", "1", "--out", out]).status.code(), Some(2));
    fs::write(&bad, r#"{"unknown_key": 1}"#).unwrap();
    assert_eq!(dlphase(&["simulate", "--config", bad.to_str().unwrap(), "--seed", "1", "--out", out]).status.code(), Some(2));
    assert_eq!(dlphase(&["simulate", "--bogus-flag"]).status.code(), Some(2));
}

#[test]
fn unwritable_output_is_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), NOISY);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("run");
    let o = dlphase(&["simulate", "--config", &cfg, "--seed", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn paper_scale_sets_header_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("tiny.json");
    fs::write(&cfg, r#"{"scan": {"burst_len": 0.01}, "vacuum_burst_len": 0.005}"#).unwrap();
    let out = tmp.path().join("run");
    let o = dlphase(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "3", "--paper-scale", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = io::read_trace(&out.join("trace.bin")).unwrap();
    assert_eq!(trace.scan.sample_rate, 1e8);
    assert_eq!(trace.samples.len(), 1_000_000);
}

#[test]
fn noiseless_extract_matches_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), NOISELESS);
    let out = tmp.path().join("run");
    let out_s = out.to_str().unwrap();
    assert!(dlphase(&["simulate", "--config", &cfg, "--seed", "5", "--format", "csv", "--out", out_s]).status.success());
    // A noiseless vacuum burst cannot calibrate; fall back to the nominal gain.
    fs::remove_file(out.join("vacuum.csv")).unwrap();
    let o = dlphase(&["extract", "--config", &cfg, "--out", out_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("excluded_shots=0"));
    let truth = io::read_truth(&out.join("truth.csv")).unwrap();
    let records = io::read_records(&out.join("records.csv")).unwrap();
    assert_eq!(records.len(), 3 * truth.len());
    let wrap = |x: f64| (x + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    for r in records.iter().filter(|r| r.case == Case::ProbeOnly) {
        let t = &truth[r.scan_id];
        assert!(wrap(r.dphi_fwm - t.dphi_fwm).abs() < 1e-3);
        assert!(wrap(r.dphi_dl - t.dphi_dl).abs() < 1e-3);
    }
}

#[test]
fn vacuum_trace_yields_no_records_with_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), NOISY);
    let out = tmp.path().join("run");
    let out_s = out.to_str().unwrap();
    assert!(dlphase(&["simulate", "--config", &cfg, "--seed", "6", "--out", out_s]).status.success());
    let vac = out.join("vacuum.bin");
    let o = dlphase(&["extract", "--config", &cfg, "--out", out_s, "--trace", vac.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("all_shots_degenerate"));
    assert!(io::read_records(&out.join("records.csv")).unwrap().is_empty());
}

#[test]
fn malformed_trace_header_names_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), NOISY);
    let out = tmp.path().join("run");
    let out_s = out.to_str().unwrap();
    assert!(dlphase(&["simulate", "--config", &cfg, "--seed", "7", "--format", "csv", "--out", out_s]).status.success());
    let path = out.join("trace.csv");
    let text = fs::read_to_string(&path).unwrap();
    let broken: String = text.lines().map(|l| if l.starts_with("# sample_rate=") { "# sample_rate=fast" } else { l }).collect::<Vec<_>>().join("\n");
    fs::write(&path, broken).unwrap();
    let o = dlphase(&["extract", "--config", &cfg, "--out", out_s]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains("trace.csv:"), "{msg}");
}

#[test]
fn staged_run_matches_pipeline_and_is_job_independent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), NOISY);
    let staged = tmp.path().join("staged");
    let s = staged.to_str().unwrap();
    for verb in ["simulate", "extract", "bin", "reconstruct", "report"] {
        let o = dlphase(&[verb, "--config", &cfg, "--seed", "9", "--out", s, "--jobs", "1"]);
        assert!(o.status.success(), "{verb}: {}", stderr(&o));
    }
    let whole = tmp.path().join("whole");
    let o = dlphase(&["pipeline", "--config", &cfg, "--seed", "9", "--out", whole.to_str().unwrap(), "--jobs", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let a = files_in(&staged);
    let b = files_in(&whole);
    assert_eq!(a.iter().map(|f| &f.0).collect::<Vec<_>>(), b.iter().map(|f| &f.0).collect::<Vec<_>>());
    for ((name, da), (_, db)) in a.iter().zip(&b) {
        if name != "config.json" {
            assert!(da == db, "{name} differs");
        }
    }
    let reports: Vec<_> = a.iter().filter(|(n, _)| n.starts_with("recon/bin") && n.ends_with(".json") && !n.ends_with("_rho.json")).collect();
    assert_eq!(reports.len(), 9);
    let r: ReconstructionReport = serde_json::from_slice(&reports[0].1).unwrap();
    assert!(r.fidelity_vs_input.is_some());
    assert!(staged.join("figures/fidelity.csv").is_file());
    assert!(staged.join("recon/input.json").is_file());
}

#[test]
fn reconstruct_selection_limits_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), NOISY);
    let out = tmp.path().join("run");
    let s = out.to_str().unwrap();
    assert!(dlphase(&["simulate", "--config", &cfg, "--seed", "11", "--out", s]).status.success());
    assert!(dlphase(&["extract", "--config", &cfg, "--out", s]).status.success());
    let o = dlphase(&["reconstruct", "--config", &cfg, "--out", s, "--bins", "1", "--cases", "fwm,dl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = files_in(&out.join("recon")).into_iter().map(|f| f.0).filter(|n| n.starts_with("bin") && n.ends_with("_wigner.csv")).collect();
    assert_eq!(names, vec!["bin1_dl_wigner.csv".to_string(), "bin1_fwm_wigner.csv".to_string()]);
    let o = dlphase(&["report", "--config", &cfg, "--out", s]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = fs::read_to_string(out.join("figures/mean_photon.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
    assert!(rows.lines().next().unwrap().starts_with("bin_index,lo,hi,case,count"));
}

#[test]
fn report_without_reconstructions_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), NOISY);
    let out = tmp.path().join("run");
    let s = out.to_str().unwrap();
    assert!(dlphase(&["simulate", "--config", &cfg, "--seed", "12", "--out", s]).status.success());
    assert!(dlphase(&["extract", "--config", &cfg, "--out", s]).status.success());
    assert_eq!(dlphase(&["report", "--config", &cfg, "--out", s]).status.code(), Some(1));
}
