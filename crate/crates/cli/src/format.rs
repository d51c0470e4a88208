//! Flat `key = value` controller files.
//!
//! Matrices are written as `[RxC] v11 v12 … vRC` (row-major) with nine
//! significant digits; scalars use the same number format.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qsyn_core::mat::canonical_theta;
use qsyn_core::realizability::RealizedController;
use qsyn_core::synthesis::{ControllerKind, ControllerParams, StateSpaceController};
use qsyn_core::Mat;

use crate::error::{CliError, CliResult};

pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn fmt_mat(m: &Mat) -> String {
    let mut s = format!("[{}x{}]", m.rows(), m.cols());
    for v in m.as_slice() {
        s.push(' ');
        s.push_str(&fmt_num(*v));
    }
    s
}

pub fn parse_mat(text: &str) -> Result<Mat, String> {
    let text = text.trim();
    let rest = text.strip_prefix('[').ok_or("matrix must start with '[RxC]'")?;
    let (dims, values) = rest.split_once(']').ok_or("matrix must start with '[RxC]'")?;
    let (r, c) = dims.split_once('x').ok_or("matrix dimensions must read RxC")?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad row count '{r}'"))?;
    let c: usize = c.trim().parse().map_err(|_| format!("bad column count '{c}'"))?;
    let data = values
        .split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|_| format!("bad matrix entry '{v}'")))
        .collect::<Result<Vec<_>, _>>()?;
    if data.len() != r * c {
        return Err(format!("[{r}x{c}] matrix needs {} entries, found {}", r * c, data.len()));
    }
    Mat::new(r, c, data).map_err(|e| e.to_string())
}

/// Ordered key/value document with line numbers kept for diagnostics.
pub struct Document {
    path: PathBuf,
    entries: Vec<(String, String, usize)>,
}

impl Document {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CliError::Parse { path: path.to_path_buf(), line: idx + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            let k = k.trim();
            if entries.iter().any(|(e, _, _)| e == k) {
                return Err(err(format!("duplicate key '{k}'")));
            }
            entries.push((k.to_string(), v.trim().to_string(), idx + 1));
        }
        Ok(Self { path: path.to_path_buf(), entries })
    }

    fn find(&self, key: &str) -> Option<&(String, String, usize)> {
        self.entries.iter().find(|(k, _, _)| k == key)
    }

    fn missing(&self, key: &str) -> CliError {
        CliError::Parse { path: self.path.clone(), line: 0, msg: format!("missing key '{key}'") }
    }

    fn bad(&self, line: usize, key: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Parse { path: self.path.clone(), line, msg: format!("{key}: {msg}") }
    }

    pub fn has(&self, key: &str) -> bool {
        self.find(key).is_some()
    }

    pub fn mat(&self, key: &str) -> CliResult<Mat> {
        let (_, v, line) = self.find(key).ok_or_else(|| self.missing(key))?;
        parse_mat(v).map_err(|e| self.bad(*line, key, e))
    }

    pub fn opt_mat(&self, key: &str) -> CliResult<Option<Mat>> {
        if self.has(key) {
            self.mat(key).map(Some)
        } else {
            Ok(None)
        }
    }
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn controller_text(c: &ControllerParams) -> String {
    let mut s = String::from("# robust H-infinity coherent controller\n");
    let _ = writeln!(s, "kind = {}", c.kind);
    let _ = writeln!(s, "gamma = {}", fmt_num(c.gamma));
    let _ = writeln!(s, "epsilon = {}", fmt_num(c.epsilon));
    let _ = writeln!(s, "rho = {}", fmt_num(c.rho));
    let _ = writeln!(s, "zeta_xy = {}", fmt_num(c.zeta));
    let _ = writeln!(s, "Ac = {}", fmt_mat(&c.controller.ac));
    let _ = writeln!(s, "Bc = {}", fmt_mat(&c.controller.bc));
    let _ = writeln!(s, "Cc = {}", fmt_mat(&c.controller.cc));
    let _ = writeln!(s, "X = {}", fmt_mat(&c.x.x));
    let _ = writeln!(s, "Y = {}", fmt_mat(&c.y.x));
    s
}

pub fn realized_text(kind: ControllerKind, r: &RealizedController) -> String {
    let mut s = String::from("# physically realizable controller with vacuum noise inputs\n");
    let _ = writeln!(s, "kind = {kind}");
    let _ = writeln!(s, "Ac = {}", fmt_mat(&r.ac));
    for (label, block) in ["Bc", "Bv1", "Bv2"].iter().zip(&r.blocks) {
        let _ = writeln!(s, "{label} = {}", fmt_mat(block));
    }
    let _ = writeln!(s, "Cc = {}", fmt_mat(&r.cc));
    let _ = writeln!(s, "Theta = {}", fmt_mat(&r.theta));
    let _ = writeln!(s, "pr_residual = {}", fmt_num(r.pr_residual));
    let _ = writeln!(s, "pairing_residual = {}", fmt_num(r.pairing_residual));
    if let Some(kappas) = &r.cavity {
        for (i, k) in kappas.iter().enumerate() {
            let _ = writeln!(s, "cavity.kappa{} = {}", i + 1, fmt_num(*k));
        }
    }
    s
}

/// Reads the `Ac`, `Bc`, `Cc` triple from a controller or realized file.
pub fn read_controller(path: &Path) -> CliResult<StateSpaceController> {
    let doc = Document::load(path)?;
    StateSpaceController::new(doc.mat("Ac")?, doc.mat("Bc")?, doc.mat("Cc")?).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })
}

/// Input blocks, output matrix and commutation matrix of a realized file.
pub struct RealizedFile {
    pub ac: Mat,
    pub blocks: Vec<Mat>,
    pub cc: Mat,
    pub theta: Mat,
}

pub fn read_realized(path: &Path) -> CliResult<RealizedFile> {
    let doc = Document::load(path)?;
    let ac = doc.mat("Ac")?;
    let mut blocks = vec![doc.mat("Bc")?];
    if let Some(b) = doc.opt_mat("Bv1")? {
        blocks.push(b);
        if let Some(b) = doc.opt_mat("Bv2")? {
            blocks.push(b);
        }
    } else if doc.has("Bv2") {
        return Err(CliError::Parse { path: path.to_path_buf(), line: 0, msg: "Bv2 given without Bv1".into() });
    }
    let cc = doc.mat("Cc")?;
    let theta = match doc.opt_mat("Theta")? {
        Some(t) => t,
        None => canonical_theta(ac.rows()).map_err(|e| CliError::Parse { path: path.to_path_buf(), line: 0, msg: e.to_string() })?,
    };
    Ok(RealizedFile { ac, blocks, cc, theta })
}
