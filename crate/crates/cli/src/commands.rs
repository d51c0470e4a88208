use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qsyn_core::hinf::{self, BetaMode, SweepRecord, DEFAULT_NORM_TOL};
use qsyn_core::realizability::{augment_noise, pr_check_with_tol, PR_TOL};
use qsyn_core::riccati::{epsilon_feasibility, existence_check, FeasibilityRow};
use qsyn_core::synthesis::{synthesize, synthesize_nominal};
use qsyn_core::{build_plant, Decomposition};

use crate::config::{BetaModeTag, Config};
use crate::error::{CliError, CliResult};
use crate::format::{self, write_file};

/// Environment variable that overrides `[sweep] seed`.
pub const SEED_ENV: &str = "QSYN_SEED";

pub struct Globals {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
}

impl Globals {
    fn config(&self) -> CliResult<Config> {
        let path = self.config.as_deref().ok_or_else(|| CliError::Usage("this command needs --config PATH".into()))?;
        Config::load(path)
    }

    fn out_dir(&self, cfg: &Config) -> CliResult<PathBuf> {
        let dir = self.out.clone().unwrap_or_else(|| cfg.directory.clone());
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(dir)
    }

    fn tol_or(&self, default: f64) -> CliResult<f64> {
        match self.tol {
            None => Ok(default),
            Some(t) if t > 0.0 && t.is_finite() => Ok(t),
            Some(t) => Err(CliError::Usage(format!("--tol must be positive, got {t}"))),
        }
    }
}

pub fn synthesize_cmd(g: &Globals) -> CliResult<()> {
    let cfg = g.config()?;
    let dir = g.out_dir(&cfg)?;
    let plant = build_plant(&cfg.params, cfg.decomposition)?;
    let result = match cfg.decomposition {
        Decomposition::Nominal => synthesize_nominal(&plant, cfg.gamma),
        _ => synthesize(&plant, cfg.gamma, cfg.epsilon),
    };
    let ctrl = match result {
        Ok(c) => c,
        Err(e) => {
            eprint!("{}", existence_check(&cfg.params, cfg.decomposition, cfg.gamma, cfg.epsilon));
            return Err(e.into());
        }
    };
    let controller_path = dir.join("controller.txt");
    write_file(&controller_path, &format::controller_text(&ctrl))?;
    println!("wrote {}", controller_path.display());
    println!("zeta(XY) = {:.6e}", ctrl.zeta);

    let realized = augment_noise(&ctrl.controller, &plant.theta)?;
    let realized_path = dir.join("realized.txt");
    write_file(&realized_path, &format::realized_text(ctrl.kind, &realized))?;
    println!("wrote {}", realized_path.display());
    println!("commutation residual = {:.3e}, pairing residual = {:.3e}", realized.pr_residual, realized.pairing_residual);
    if let Some(k) = &realized.cavity {
        let rates: Vec<String> = k.iter().map(|x| format!("{x:.4}")).collect();
        println!("passive cavity decay rates: {}", rates.join(", "));
    }
    Ok(())
}

fn csv_num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x}")
    }
}

pub fn feasibility_csv(rows: &[FeasibilityRow]) -> String {
    let mut s = String::from("gamma,rho,eps_lower,eps_upper,feasible\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", csv_num(r.gamma), csv_num(r.rho), csv_num(r.eps_lower), csv_num(r.eps_upper), r.feasible);
    }
    s
}

pub fn feasibility_cmd(g: &Globals, gamma_lo: f64, gamma_hi: f64, n: usize, rhos: &[f64]) -> CliResult<()> {
    let cfg = g.config()?;
    if !(gamma_lo > 0.0 && gamma_lo < gamma_hi && gamma_hi.is_finite()) {
        return Err(CliError::Usage(format!("need 0 < gamma-lo < gamma-hi, got {gamma_lo} and {gamma_hi}")));
    }
    if n < 2 {
        return Err(CliError::Usage("--n must be at least 2".into()));
    }
    if rhos.is_empty() {
        return Err(CliError::Usage("--rho needs at least one value".into()));
    }
    let dir = g.out_dir(&cfg)?;
    let gammas = hinf::linspace(gamma_lo, gamma_hi, n);
    let rows = epsilon_feasibility(&cfg.params, cfg.decomposition, &gammas, rhos)?;
    let path = dir.join("feasibility.csv");
    write_file(&path, &feasibility_csv(&rows))?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    if cfg.emit_plots {
        let script = dir.join("feasibility.gp");
        write_file(&script, &feasibility_plot(rhos))?;
        println!("wrote {}", script.display());
    }
    Ok(())
}

fn feasibility_plot(rhos: &[f64]) -> String {
    let mut s = String::from(
        "set datafile separator \",\"\nset xlabel \"gamma\"\nset ylabel \"upper bound on epsilon\"\nset logscale y\nset key top left\n",
    );
    let series: Vec<String> = rhos
        .iter()
        .map(|r| format!("\"feasibility.csv\" using 1:($2 == {r} && $5 eq \"true\" ? $4 : 1/0) skip 1 with lines title \"rho = {r}\""))
        .collect();
    let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    s
}

pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut s = String::from("dphi,dbeta_ratio,stable,hinf_norm\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            csv_num(r.dphi),
            csv_num(r.dbeta_ratio),
            r.stable(),
            csv_num(r.norm.unwrap_or(f64::INFINITY))
        );
    }
    s
}

fn seed(cfg: &Config) -> CliResult<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV} must be a 64-bit unsigned integer, got '{v}'"))),
        Err(_) => Ok(cfg.seed),
    }
}

pub fn sweep_cmd(g: &Globals, controllers: &[PathBuf]) -> CliResult<()> {
    let cfg = g.config()?;
    if controllers.is_empty() {
        return Err(CliError::Usage("sweep needs at least one controller file".into()));
    }
    let tol = g.tol_or(DEFAULT_NORM_TOL)?;
    let loaded = controllers
        .iter()
        .map(|p| format::read_controller(p).map(|c| (p, c)))
        .collect::<CliResult<Vec<_>>>()?;
    let dir = g.out_dir(&cfg)?;
    let plant = build_plant(&cfg.params, cfg.decomposition)?;
    let (lo, hi) = cfg.params.phase_range;
    let grid = hinf::linspace(lo, hi, cfg.phi_points);
    let mode = match cfg.beta_mode {
        BetaModeTag::Zero => BetaMode::Zero,
        BetaModeTag::Random => BetaMode::Random { seed: seed(&cfg)?, bound: cfg.params.beta_bound },
    };
    let mut outputs = Vec::new();
    for (path, ctrl) in &loaded {
        let records = hinf::sweep(&plant, ctrl, &grid, mode, tol)?;
        let name = format!("sweep_{}.csv", stem(path));
        let out = dir.join(&name);
        write_file(&out, &sweep_csv(&records))?;
        let worst = records.iter().map(|r| r.norm.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
        let unstable = records.iter().filter(|r| !r.stable()).count();
        println!("wrote {} (max norm {worst:.6}, {unstable} unstable points)", out.display());
        outputs.push((name, stem(path)));
    }
    if cfg.emit_plots {
        let script = dir.join("sweep.gp");
        write_file(&script, &sweep_plot(&outputs, cfg.gamma))?;
        println!("wrote {}", script.display());
    }
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "controller".into())
}

fn sweep_plot(outputs: &[(String, String)], gamma: f64) -> String {
    let mut s = String::from("set datafile separator \",\"\nset xlabel \"Delta phi (rad)\"\nset ylabel \"H-infinity norm\"\nset key top right\n");
    let _ = writeln!(s, "gamma = {gamma}");
    let mut series: Vec<String> = outputs
        .iter()
        .map(|(file, title)| format!("\"{file}\" using 1:4 skip 1 with lines title \"{title}\""))
        .collect();
    series.push("gamma with lines dashtype 2 title \"gamma\"".into());
    let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    s
}

pub fn check_cmd(g: &Globals, file: &Path) -> CliResult<()> {
    let tol = g.tol_or(PR_TOL)?;
    let r = format::read_realized(file)?;
    let rep = pr_check_with_tol(&r.ac, &r.blocks, &r.cc, &r.theta, tol);
    println!("commutation residual = {:.6e}", rep.commutation_residual);
    println!("pairing residual     = {:.6e}", rep.pairing_residual);
    println!("tolerance            = {tol:.1e}");
    println!("{}", if rep.pass { "PASS" } else { "FAIL" });
    if rep.pass {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}
