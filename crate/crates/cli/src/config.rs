//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [plant]
//! kappa1 = 0.0011
//! kappa2 = 0.8264
//! chi = 0.0414
//! phase_lo = -3.141592653589793
//! phase_hi = 3.141592653589793
//! beta_bound = 0
//!
//! [synthesis]
//! gamma = 0.05
//! epsilon = 1
//! decomposition = passive   # passive | active | nominal
//!
//! [sweep]
//! phi_points = 629
//! seed = 1
//! beta_mode = zero          # zero | random
//!
//! [output]
//! directory = out
//! emit_plots = false
//! ```
//!
//! Every key is optional; omitted keys take the benchmark values above.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use qsyn_core::{Decomposition, OpoParams};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaModeTag {
    Zero,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: OpoParams,
    pub gamma: f64,
    pub epsilon: f64,
    pub decomposition: Decomposition,
    pub phi_points: usize,
    pub seed: u64,
    pub beta_mode: BetaModeTag,
    pub directory: PathBuf,
    pub emit_plots: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            params: OpoParams::benchmark(),
            gamma: 0.05,
            epsilon: 1.0,
            decomposition: Decomposition::Passive,
            phi_points: 629,
            seed: 1,
            beta_mode: BetaModeTag::Zero,
            directory: PathBuf::from("."),
            emit_plots: false,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let mut cfg = Config::default();
        let (mut kappa1, mut kappa2, mut chi) = (cfg.params.kappa1, cfg.params.kappa2, cfg.params.chi);
        let (mut phase_lo, mut phase_hi) = cfg.params.phase_range;
        let mut beta_bound = cfg.params.beta_bound;
        let mut section = String::new();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| CliError::Parse { path: path.to_path_buf(), line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| err(format!("malformed section header '{line}'")))?.trim();
                if !matches!(name, "plant" | "synthesis" | "sweep" | "output") {
                    return Err(err(format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            if section.is_empty() {
                return Err(err(format!("key '{key}' appears before any section header")));
            }
            if !seen.insert(format!("{section}.{key}")) {
                return Err(err(format!("duplicate key '{key}' in [{section}]")));
            }
            let num = |v: &str| -> CliResult<f64> {
                match v.parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(x),
                    _ => Err(err(format!("'{key}' must be a finite decimal, got '{v}'"))),
                }
            };
            match (section.as_str(), key) {
                ("plant", "kappa1") => kappa1 = num(value)?,
                ("plant", "kappa2") => kappa2 = num(value)?,
                ("plant", "chi") => chi = num(value)?,
                ("plant", "phase_lo") => phase_lo = num(value)?,
                ("plant", "phase_hi") => phase_hi = num(value)?,
                ("plant", "beta_bound") => beta_bound = num(value)?,
                ("synthesis", "gamma") => cfg.gamma = num(value)?,
                ("synthesis", "epsilon") => cfg.epsilon = num(value)?,
                ("synthesis", "decomposition") => {
                    cfg.decomposition = value.parse().map_err(|_| err(format!("unknown decomposition '{value}'")))?
                }
                ("sweep", "phi_points") => {
                    cfg.phi_points = value
                        .parse()
                        .ok()
                        .filter(|n| *n >= 2)
                        .ok_or_else(|| err(format!("phi_points must be an integer >= 2, got '{value}'")))?
                }
                ("sweep", "seed") => cfg.seed = value.parse().map_err(|_| err(format!("seed must be a 64-bit unsigned integer, got '{value}'")))?,
                ("sweep", "beta_mode") => {
                    cfg.beta_mode = match value.to_ascii_lowercase().as_str() {
                        "zero" => BetaModeTag::Zero,
                        "random" => BetaModeTag::Random,
                        _ => return Err(err(format!("beta_mode must be 'zero' or 'random', got '{value}'"))),
                    }
                }
                ("output", "directory") => cfg.directory = PathBuf::from(value),
                ("output", "emit_plots") => {
                    cfg.emit_plots = value.parse().map_err(|_| err(format!("emit_plots must be true or false, got '{value}'")))?
                }
                _ => return Err(err(format!("unknown key '{key}' in [{section}]"))),
            }
        }
        if !(cfg.gamma > 0.0) || !(cfg.epsilon > 0.0) {
            return Err(CliError::Usage(format!(
                "{}: gamma and epsilon must be positive",
                path.display()
            )));
        }
        cfg.params = OpoParams::new(kappa1, kappa2, chi, (phase_lo, phase_hi), beta_bound)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }
}
