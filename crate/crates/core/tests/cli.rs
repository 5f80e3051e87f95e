use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn mfe(dir: &Path, args: &[&str], config: &str) -> (i32, Value) {
    let cfg = dir.join("config.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out.json");
    let _ = std::fs::remove_file(&out);
    let status = Command::new(env!("CARGO_BIN_EXE_mfe"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .env("MFE_THREADS", "2")
        .status()
        .unwrap();
    let text = std::fs::read_to_string(&out).unwrap_or_else(|_| "null".into());
    (status.code().unwrap(), serde_json::from_str(&text).unwrap())
}

fn tmp() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

const SPHERE2: &str = "[mesh]\nkind = \"sphere\"\nlevel = 2\n";

#[test]
fn mesh_info_reports_topology() {
    let d = tmp();
    let (code, v) = mfe(d.path(), &["mesh-info"], SPHERE2);
    assert_eq!(code, 0);
    assert_eq!(v["mesh"]["chi"], 2);
    assert_eq!(v["mesh"]["V"], 162);
    assert!((v["mesh"]["total_area"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    let (code, v) = mfe(d.path(), &["mesh-info"], "[mesh]\nkind = \"torus\"\nn = 16\nm = 16\n");
    assert_eq!(code, 0);
    assert_eq!(v["mesh"]["chi"], 0);
    let l1 = v["mesh"]["lambda1"].as_f64().unwrap();
    assert!((l1 - 4.0 * std::f64::consts::PI.powi(2)).abs() < 0.05 * l1);
}

#[test]
fn mesh_files_resolve_relative_to_the_config() {
    let d = tmp();
    let off = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";
    std::fs::write(d.path().join("tet.off"), off).unwrap();
    let (code, v) = mfe(
        d.path(),
        &["mesh-info"],
        "[mesh]\nkind = \"file\"\npath = \"tet.off\"\n",
    );
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["mesh"]["chi"], 2);
    std::fs::write(d.path().join("bad.off"), "OFF\n4 4 0\n0 0 0\n").unwrap();
    let (code, v) = mfe(
        d.path(),
        &["mesh-info"],
        "[mesh]\nkind = \"file\"\npath = \"bad.off\"\n",
    );
    assert_eq!(code, 2);
    assert!(v["error"]["message"].is_string());
}

#[test]
fn bad_configs_exit_2() {
    let d = tmp();
    assert_eq!(mfe(d.path(), &["mesh-info"], "[mesh]\nkind = \"klein\"\n").0, 2);
    assert_eq!(mfe(d.path(), &["mesh-info"], "this is not toml").0, 2);
    let empty = format!("{SPHERE2}[asymptotics]\nlambda_grid = []\n");
    let (code, v) = mfe(d.path(), &["verify-asymptotics"], &empty);
    assert_eq!(code, 2);
    assert_eq!(v["error"]["kind"], "invalid_argument");
    let status = Command::new(env!("CARGO_BIN_EXE_mfe")).arg("solve").output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}

#[test]
fn under_resolved_grid_is_a_guard() {
    let d = tmp();
    let cfg = format!("{SPHERE2}[asymptotics]\nlambda_grid = [10.0, 100.0, 1000.0]\n");
    let (code, v) = mfe(d.path(), &["verify-asymptotics"], &cfg);
    assert_eq!(code, 3);
    assert_eq!(v["error"]["kind"], "guard");
}

#[test]
fn asymptotics_summary_schema() {
    let d = tmp();
    let cfg = "[mesh]\nkind = \"sphere\"\nlevel = 4\n[asymptotics]\nlambda_grid = [5.0, 10.0, 20.0, 50.0]\n";
    let (code, v) = mfe(d.path(), &["verify-asymptotics"], cfg);
    assert!(code == 0 || code == 1);
    for key in [
        "mean_slope",
        "neg_exp_slope",
        "dirichlet_coeff",
        "pos_exp_spread",
        "pass",
    ] {
        assert!(!v["summary"][key].is_null(), "{key}");
    }
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert_eq!(code == 0, v["pass"] == true);
}

#[test]
fn solve_picks_the_method_from_rho() {
    let d = tmp();
    let (code, v) = mfe(
        d.path(),
        &["solve"],
        &format!("{SPHERE2}[params]\nrho1 = 0\nrho2 = 0\n"),
    );
    assert_eq!(code, 0);
    assert_eq!(v["converged"], true);
    assert_eq!(v["energy"], 0.0);
    assert_eq!(v["method"], "minimize");

    let torus = "[mesh]\nkind = \"torus\"\nn = 12\nm = 12\n[params]\nrho1 = \"10pi\"\nrho2 = 0\n";
    let (code, v) = mfe(d.path(), &["solve"], torus);
    assert_eq!(code, 0, "{}", v["warnings"]);
    assert_eq!(v["method"], "minmax");
    assert_eq!(v["k"], 1);
    assert_eq!(v["regime"], "supercritical");
    assert_eq!(v["minmax"]["bracket_ok"], true);

    let (_, v) = mfe(
        d.path(),
        &["solve"],
        &format!("{SPHERE2}[params]\nrho1 = \"8pi\"\nrho2 = \"8pi\"\n"),
    );
    assert_eq!(v["regime"], "boundary");
    assert!(!v["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn iterate_log_is_written() {
    let d = tmp();
    let cfg = format!("seed = 2\n{SPHERE2}[params]\nrho1 = 5.0\nrho2 = 3.0\n[solve]\ninitial_amplitude = 1.0\niterate_log = \"log.csv\"\n");
    let (code, _) = mfe(d.path(), &["solve"], &cfg);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(d.path().join("log.csv")).unwrap();
    assert!(csv.starts_with("iteration,energy,residual_norm\n"));
    assert!(csv.lines().count() > 2);
}

#[test]
fn non_convergence_exits_4_with_a_report() {
    let d = tmp();
    let cfg = format!("{SPHERE2}[params]\nrho1 = 5.0\nrho2 = 3.0\n[solve]\ninitial_amplitude = 2.0\n[solve.descent]\nmax_iter = 2\nnewton_polish = false\n");
    let (code, v) = mfe(d.path(), &["solve"], &cfg);
    assert_eq!(code, 4);
    assert_eq!(v["converged"], false);
    assert_eq!(v["verdicts"]["converged"], false);
}

#[test]
fn mt_suite_schema() {
    let d = tmp();
    let cfg = format!("{SPHERE2}[mt]\nfields = 40\nbubble_lambdas = [1.0, 3.0, 10.0]\n");
    let (_, v) = mfe(d.path(), &["mt-suite"], &cfg);
    assert!(v["C_mesh"].as_f64().unwrap().is_finite());
    assert_eq!(v["zero_row"]["lhs"], 0.0);
    for (_, b) in v["verdicts"].as_object().unwrap() {
        assert!(b.is_boolean());
    }
    assert_eq!(v["improved"]["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn blowup_families() {
    let d = tmp();
    let level4 = "[mesh]\nkind = \"sphere\"\nlevel = 4\n";
    let (code, v) = mfe(
        d.path(),
        &["blowup"],
        &format!("{level4}[blowup]\nfamily = \"one_sided\"\n"),
    );
    assert_eq!(code, 0);
    assert_eq!(v["alternative"], "one_sided");
    for key in [
        "alternative",
        "points_S1",
        "points_S2",
        "masses",
        "quantization_residual",
    ] {
        assert!(!v[key].is_null(), "{key}");
    }
    let (code, v) = mfe(
        d.path(),
        &["blowup"],
        &format!("{SPHERE2}[blowup]\nfamily = \"bounded\"\n"),
    );
    assert_eq!(code, 0);
    assert_eq!(v["alternative"], "compactness");
    let (code, _) = mfe(
        d.path(),
        &["blowup"],
        &format!("{level4}[blowup]\nlambdas = [50.0, 100.0]\n"),
    );
    assert_eq!(code, 2);
}

#[test]
fn output_is_deterministic() {
    let d = tmp();
    let cfg = format!("seed = 5\n{SPHERE2}[mt]\nfields = 64\nbubble_lambdas = [1.0, 10.0]\n");
    let (_, a) = mfe(d.path(), &["mt-suite"], &cfg);
    let first = std::fs::read(d.path().join("out.json")).unwrap();
    let (_, b) = mfe(d.path(), &["mt-suite"], &cfg);
    assert_eq!(first, std::fs::read(d.path().join("out.json")).unwrap());
    assert_eq!(a, b);
    assert_eq!(a["seed"], 5);
    let (_, c) = mfe(d.path(), &["mt-suite", "--seed", "6"], &cfg);
    assert_eq!(c["seed"], 6);
    assert_ne!(a["C_mesh"], c["C_mesh"]);
}

#[test]
fn shipped_configs_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            mfe_core::cli::ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}
