use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn qsyn(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsyn"))
        .current_dir(dir)
        .env_remove("QSYN_SEED")
        .args(args)
        .output()
        .expect("qsyn runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Value of `key = [RxC] ...` parsed as a flat vector.
fn mat_entries(file: &Path, key: &str) -> Vec<f64> {
    let text = fs::read_to_string(file).unwrap();
    let line = text.lines().find(|l| l.starts_with(&format!("{key} ="))).unwrap_or_else(|| panic!("{key} missing"));
    let (_, rest) = line.split_once(']').unwrap();
    rest.split_whitespace().map(|v| v.parse().unwrap()).collect()
}

fn scalar(file: &Path, key: &str) -> f64 {
    let text = fs::read_to_string(file).unwrap();
    let line = text.lines().find(|l| l.starts_with(&format!("{key} ="))).unwrap_or_else(|| panic!("{key} missing"));
    line.split_once('=').unwrap().1.trim().parse().unwrap()
}

fn csv(file: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(file).unwrap().lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn synthesize(dir: &Path, decomposition: &str) -> PathBuf {
    let cfg = config(dir, &format!("{decomposition}.cfg"), &format!("[synthesis]\ndecomposition = {decomposition}\n"));
    let out = dir.join(decomposition);
    let r = qsyn(dir, &["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "synthesize"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    out
}

#[test]
fn passive_synthesis_writes_controller_and_cavity_rates() {
    let tmp = TempDir::new().unwrap();
    let out = synthesize(tmp.path(), "passive");
    let ac = mat_entries(&out.join("controller.txt"), "Ac");
    assert!((ac[0] + 2.0763).abs() < 1e-3 && (ac[3] + 2.0763).abs() < 1e-3, "{ac:?}");
    let realized = out.join("realized.txt");
    let kappas: Vec<f64> = (1..=3).map(|i| scalar(&realized, &format!("cavity.kappa{i}"))).collect();
    for (k, want) in kappas.iter().zip([0.0011, 3.3362, 0.8152]) {
        assert!((k - want).abs() < 1e-3, "{kappas:?}");
    }
}

#[test]
fn output_directory_comes_from_config_when_out_is_absent() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "p.cfg", "[output]\ndirectory = results/run1\n");
    let r = qsyn(tmp.path(), &["--config", cfg.to_str().unwrap(), "synthesize"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert!(tmp.path().join("results/run1/controller.txt").is_file());
    assert!(tmp.path().join("results/run1/realized.txt").is_file());
}

#[test]
fn infeasible_gamma_exits_2_with_slack_report() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "bad.cfg", "[synthesis]\ngamma = 0.001\n");
    let r = qsyn(tmp.path(), &["--config", cfg.to_str().unwrap(), "synthesize"]);
    assert_eq!(code(&r), 2);
    assert!(stderr(&r).contains("VIOLATED"), "{}", stderr(&r));
    assert!(!tmp.path().join("controller.txt").exists());
}

#[test]
fn malformed_or_missing_config_exits_1() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "broken.cfg", "[plant]\nkappa1 = fast\n");
    let r = qsyn(tmp.path(), &["--config", cfg.to_str().unwrap(), "synthesize"]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("broken.cfg:2:"), "{}", stderr(&r));
    assert_eq!(code(&qsyn(tmp.path(), &["--config", "nope.cfg", "synthesize"])), 1);
    assert_eq!(code(&qsyn(tmp.path(), &["synthesize"])), 1);
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&qsyn(tmp.path(), &["--help"])), 0);
    assert_eq!(code(&qsyn(tmp.path(), &["--version"])), 0);
    assert_eq!(code(&qsyn(tmp.path(), &["frobnicate"])), 1);
    assert_eq!(code(&qsyn(tmp.path(), &["check"])), 1);
    assert_eq!(code(&qsyn(tmp.path(), &["--tol", "abc", "check", "x.txt"])), 1);
}

#[test]
fn feasibility_table_matches_closed_form_bound() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "f.cfg", "");
    let r = qsyn(
        tmp.path(),
        &["--config", cfg.to_str().unwrap(), "feasibility", "--gamma-lo", "0.03", "--gamma-hi", "0.07", "--n", "5", "--rho", "0.8,1,1.2"],
    );
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rows = csv(&tmp.path().join("feasibility.csv"));
    assert_eq!(rows[0].join(","), "gamma,rho,eps_lower,eps_upper,feasible");
    assert_eq!(rows.len(), 1 + 15);
    let find = |g: f64, rho: f64| {
        rows[1..]
            .iter()
            .find(|r| (r[0].parse::<f64>().unwrap() - g).abs() < 1e-12 && r[1].parse::<f64>().unwrap() == rho)
            .unwrap()
            .clone()
    };
    let at = find(0.05, 1.0);
    assert!((at[3].parse::<f64>().unwrap() - 225.4).abs() < 0.1, "{at:?}");
    assert_eq!(at[4], "true");
    for g in [0.04, 0.05, 0.06, 0.07] {
        let ups: Vec<f64> = [0.8, 1.0, 1.2].iter().map(|&rho| find(g, rho)[3].parse().unwrap()).collect();
        assert!(ups[0] >= ups[1] && ups[1] >= ups[2], "gamma {g}: {ups:?}");
    }
    // Below the threshold the bound collapses.
    assert_eq!(find(0.03, 1.0)[4], "false");
}

#[test]
fn feasibility_rejects_bad_ranges() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "f.cfg", "");
    let c = cfg.to_str().unwrap();
    let base = ["--config", c, "feasibility"];
    let run = |extra: &[&str]| code(&qsyn(tmp.path(), &[&base[..], extra].concat()));
    assert_eq!(run(&["--gamma-lo", "0.04", "--gamma-hi", "0.06", "--rho"]), 1);
    assert_eq!(run(&["--gamma-lo", "0.06", "--gamma-hi", "0.04", "--rho", "1"]), 1);
    assert_eq!(run(&["--gamma-lo", "0.04", "--gamma-hi", "0.04", "--rho", "1"]), 1);
    assert_eq!(run(&["--gamma-lo", "0.04", "--gamma-hi", "0.06", "--rho", "1,x"]), 1);
}

#[test]
fn sweeps_bound_robust_controllers_and_emit_plot_script() {
    let tmp = TempDir::new().unwrap();
    let passive = synthesize(tmp.path(), "passive").join("controller.txt");
    let active = synthesize(tmp.path(), "active").join("controller.txt");
    fs::copy(&passive, tmp.path().join("passive.txt")).unwrap();
    fs::copy(&active, tmp.path().join("active.txt")).unwrap();
    let cfg = config(tmp.path(), "s.cfg", "[sweep]\nphi_points = 41\n[output]\ndirectory = sweeps\nemit_plots = true\n");
    let r = qsyn(tmp.path(), &["--config", cfg.to_str().unwrap(), "sweep", "passive.txt", "active.txt"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    for name in ["passive", "active"] {
        let rows = csv(&tmp.path().join(format!("sweeps/sweep_{name}.csv")));
        assert_eq!(rows[0].join(","), "dphi,dbeta_ratio,stable,hinf_norm");
        assert_eq!(rows.len(), 42);
        assert_eq!(rows[1][0].parse::<f64>().unwrap(), -std::f64::consts::PI);
        for row in &rows[1..] {
            assert_eq!(row[2], "true");
            assert!(row[3].parse::<f64>().unwrap() < 0.05, "{name}: {row:?}");
        }
    }
    let script = fs::read_to_string(tmp.path().join("sweeps/sweep.gp")).unwrap();
    assert!(script.contains("sweep_passive.csv") && script.contains("sweep_active.csv"));
    assert!(script.contains("gamma = 0.05"));
}

#[test]
fn nominal_controller_holds_on_a_narrow_phase_band() {
    let tmp = TempDir::new().unwrap();
    let nominal = synthesize(tmp.path(), "nominal").join("controller.txt");
    let cfg = config(
        tmp.path(),
        "n.cfg",
        "[plant]\nphase_lo = -0.7853981633974483\nphase_hi = 0.7853981633974483\n[sweep]\nphi_points = 21\n",
    );
    let r = qsyn(tmp.path(), &["--config", cfg.to_str().unwrap(), "sweep", nominal.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let rows = csv(&tmp.path().join("sweep_controller.csv"));
    for row in &rows[1..] {
        assert!(row[3].parse::<f64>().unwrap() < 0.05, "{row:?}");
    }
}

#[test]
fn random_beta_sweep_is_seeded() {
    let tmp = TempDir::new().unwrap();
    let ctrl = synthesize(tmp.path(), "passive").join("controller.txt");
    let text = "[plant]\nbeta_bound = 0.05\n[sweep]\nphi_points = 9\nbeta_mode = random\nseed = 7\n";
    let cfg = config(tmp.path(), "r.cfg", text);
    let run = |out: &str, seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qsyn"));
        cmd.current_dir(tmp.path()).env_remove("QSYN_SEED");
        if let Some(s) = seed {
            cmd.env("QSYN_SEED", s);
        }
        let r = cmd.args(["--config", cfg.to_str().unwrap(), "--out", out, "sweep", ctrl.to_str().unwrap()]).output().unwrap();
        (code(&r), fs::read_to_string(tmp.path().join(out).join("sweep_controller.csv")).unwrap_or_default())
    };
    let (c1, a) = run("a", None);
    let (c2, b) = run("b", None);
    let (c3, c) = run("c", Some("8"));
    assert_eq!((c1, c2, c3), (0, 0, 0));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let ratios: Vec<f64> = a.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(ratios.iter().all(|r| (0.0..=0.05).contains(r)) && ratios.iter().any(|r| *r > 0.0), "{ratios:?}");
    assert_eq!(run("d", Some("not-a-seed")).0, 1);
}

#[test]
fn sweep_with_missing_controller_exits_1() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "s.cfg", "");
    let r = qsyn(tmp.path(), &["--config", cfg.to_str().unwrap(), "sweep", "absent.txt"]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("absent.txt"));
}

const PUBLISHED_PASSIVE: &str = "\
Ac = [2x2] -2.0763 0 0 -2.0763
Bc = [2x2] -0.0334 0 0 -0.0334
Bv1 = [2x2] 1.8265 0 0 1.8265
Bv2 = [2x2] 0.9029 0 0 0.9029
Cc = [2x2] -1.8265 0 0 -1.8265
";

#[test]
fn check_accepts_published_passive_controller() {
    let tmp = TempDir::new().unwrap();
    let f = config(tmp.path(), "published.txt", PUBLISHED_PASSIVE);
    let r = qsyn(tmp.path(), &["check", f.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stdout));
    assert!(String::from_utf8_lossy(&r.stdout).contains("PASS"));
}

#[test]
fn check_flags_a_missing_noise_channel() {
    let tmp = TempDir::new().unwrap();
    let f = config(tmp.path(), "broken.txt", &PUBLISHED_PASSIVE.replace("0.9029 0 0 0.9029", "0 0 0 0"));
    let r = qsyn(tmp.path(), &["check", f.to_str().unwrap()]);
    assert_eq!(code(&r), 4);
    let stdout = String::from_utf8_lossy(&r.stdout);
    let resid: f64 = stdout.lines().next().unwrap().split('=').nth(1).unwrap().trim().parse().unwrap();
    assert!((resid - 0.8152).abs() < 1e-3, "{stdout}");
    // A loose enough tolerance lets it through.
    assert_eq!(code(&qsyn(tmp.path(), &["--tol", "1", "check", f.to_str().unwrap()])), 0);
}

#[test]
fn check_accepts_a_lossless_cavity() {
    let tmp = TempDir::new().unwrap();
    let f = config(tmp.path(), "lossless.txt", "Ac = [2x2] 0 0 0 0\nBc = [2x0]\nCc = [0x2]\n");
    assert_eq!(code(&qsyn(tmp.path(), &["check", f.to_str().unwrap()])), 0);
}

#[test]
fn check_reports_malformed_files() {
    let tmp = TempDir::new().unwrap();
    let f = config(tmp.path(), "m.txt", "Ac = [2x2] 1 2 3\n");
    let r = qsyn(tmp.path(), &["check", f.to_str().unwrap()]);
    assert_eq!(code(&r), 1);
    assert!(stderr(&r).contains("m.txt:1:"), "{}", stderr(&r));
}

#[test]
fn realized_output_passes_check_and_round_trips() {
    let tmp = TempDir::new().unwrap();
    let out = synthesize(tmp.path(), "active");
    let realized = out.join("realized.txt");
    assert_eq!(code(&qsyn(tmp.path(), &["check", realized.to_str().unwrap()])), 0);
    // The realized file is itself a valid sweep input.
    let cfg = config(tmp.path(), "s.cfg", "[synthesis]\ndecomposition = active\n[sweep]\nphi_points = 5\n");
    let r = qsyn(tmp.path(), &["--config", cfg.to_str().unwrap(), "sweep", realized.to_str().unwrap()]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    let controller = out.join("controller.txt");
    for key in ["Ac", "Bc", "Cc"] {
        let a = mat_entries(&controller, key);
        let b = mat_entries(&realized, key);
        assert_eq!(a, b, "{key}");
    }
}
