//! Physical realizability of linear quantum controllers: commutation and
//! output-pairing residuals, vacuum-noise augmentation, and passive cavity
//! extraction.
//!
//! The commutation condition is used in its quadrature form
//! `AΘ + ΘAᵀ + Σ Bᵢ·diag(J)·Bᵢᵀ = 0`, where each input block contributes one
//! `J` per quadrature pair of its columns.

use crate::error::{Error, Result};
use crate::mat::{self, Mat};
use crate::synthesis::StateSpaceController;

/// Default pass/fail tolerance for both residuals.
pub const PR_TOL: f64 = 1e-3;

/// Residual below which no extra noise channel is added.
const AUGMENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrReport {
    /// `‖AΘ + ΘAᵀ + Σ Bᵢ·diag(J)·Bᵢᵀ‖₂`.
    pub commutation_residual: f64,
    /// Distance of the second block from `Θ·Ccᵀ·diag(J)`, minimized over the
    /// quadrature swap within each pair.
    pub pairing_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizedController {
    pub ac: Mat,
    /// Input blocks in order `[Bc, Bv1, Bv2]`; `Bv2` may have no columns.
    pub blocks: Vec<Mat>,
    pub cc: Mat,
    pub theta: Mat,
    pub pr_residual: f64,
    pub pairing_residual: f64,
    /// Mirror decay rates when the controller is a passive empty cavity.
    pub cavity: Option<Vec<f64>>,
}

impl RealizedController {
    pub fn report(&self) -> PrReport {
        pr_check(&self.ac, &self.blocks, &self.cc, &self.theta)
    }
}

/// `diag(J, …, J)` acting on `m` columns; `m` must be even.
fn block_j(m: usize) -> Result<Mat> {
    mat::canonical_theta(m).map_err(|_| Error::Validation(format!("input block has {m} columns; quadrature pairs need an even count")))
}

/// Swap of the two quadratures within every pair.
fn pair_swap(n: usize) -> Mat {
    Mat::from_fn(n, n, |i, j| if i ^ 1 == j { 1.0 } else { 0.0 })
}

/// `AΘ + ΘAᵀ + Σ Bᵢ·diag(J)·Bᵢᵀ`.
pub fn commutation_matrix(ac: &Mat, blocks: &[Mat], theta: &Mat) -> Result<Mat> {
    let mut r = &(ac * theta) + &(theta * &ac.transpose());
    for b in blocks {
        if b.cols() == 0 {
            continue;
        }
        if b.rows() != ac.rows() {
            return Err(Error::Validation(format!("input block {:?} does not match Ac {:?}", b.shape(), ac.shape())));
        }
        let j = block_j(b.cols())?;
        r = &r + &(&(b * &j) * &b.transpose());
    }
    Ok(r)
}

/// `Θ·Ccᵀ·diag(J)`, the pairing partner of the controller output.
pub fn output_pairing(cc: &Mat, theta: &Mat) -> Result<Mat> {
    Ok(&(theta * &cc.transpose()) * &block_j(cc.rows())?)
}

pub fn pr_check(ac: &Mat, blocks: &[Mat], cc: &Mat, theta: &Mat) -> PrReport {
    pr_check_with_tol(ac, blocks, cc, theta, PR_TOL)
}

/// Both residuals; shape errors surface as infinite residuals and a fail.
pub fn pr_check_with_tol(ac: &Mat, blocks: &[Mat], cc: &Mat, theta: &Mat, tol: f64) -> PrReport {
    let commutation_residual = commutation_matrix(ac, blocks, theta).map(|r| r.norm2()).unwrap_or(f64::INFINITY);
    let pairing_residual = output_pairing(cc, theta)
        .map(|target| match blocks.get(1) {
            Some(b) if b.shape() == target.shape() => {
                let direct = (b - &target).norm2();
                let (sl, sr) = (pair_swap(target.rows()), pair_swap(target.cols()));
                let swapped = (b - &(&(&sl * &target) * &sr)).norm2();
                direct.min(swapped)
            }
            Some(_) => f64::INFINITY,
            // Without a pairing block the output must vanish.
            None => target.norm2(),
        })
        .unwrap_or(f64::INFINITY);
    let pass = commutation_residual <= tol && pairing_residual <= tol;
    PrReport { commutation_residual, pairing_residual, tol, pass }
}

/// Adds the pairing channel `Bv1` and a minimal vacuum channel `Bv2` so that
/// the controller preserves the commutation relations.
pub fn augment_noise(c: &StateSpaceController, theta: &Mat) -> Result<RealizedController> {
    let n = c.state_dim();
    if n % 2 != 0 || theta.shape() != (n, n) {
        return Err(Error::Validation(format!("controller dimension {n} must be even and match Theta {:?}", theta.shape())));
    }
    let bv1 = output_pairing(&c.cc, theta)?;
    let r = commutation_matrix(&c.ac, &[c.bc.clone(), bv1.clone()], theta)?;
    let bv2 = skew_factor(&(-&r), theta)?;
    let blocks = vec![c.bc.clone(), bv1, bv2];
    let report = pr_check(&c.ac, &blocks, &c.cc, theta);
    let mut realized = RealizedController {
        ac: c.ac.clone(),
        blocks,
        cc: c.cc.clone(),
        theta: theta.clone(),
        pr_residual: report.commutation_residual,
        pairing_residual: report.pairing_residual,
        cavity: None,
    };
    realized.cavity = extract_cavity(&realized).ok();
    Ok(realized)
}

/// Finds `B` with `B·diag(J)·Bᵀ = s` for skew-symmetric `s`, one column pair
/// per rotation plane of `s`.
///
/// Each pair must be oriented like `Θ`; an oppositely oriented plane would
/// need a negative squared coupling and is rejected.
fn skew_factor(s: &Mat, theta: &Mat) -> Result<Mat> {
    let n = s.rows();
    let scale = s.norm_fro();
    if scale <= AUGMENT_TOL {
        return Ok(Mat::zeros(n, 0));
    }
    // −s² = sᵀs is symmetric; its eigenspaces are the rotation planes of s.
    let (vals, vecs) = mat::symmetric_eigen(&(&s.transpose() * s))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.reverse();
    let cluster_tol = 1e-8 * vals[n - 1].max(0.0);
    let mut used: Vec<Vec<f64>> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut k = 0;
    while k < n {
        let lead = vals[order[k]];
        if lead.sqrt() <= AUGMENT_TOL {
            break;
        }
        let mut end = k;
        while end < n && (vals[order[end]] - lead).abs() <= cluster_tol {
            end += 1;
        }
        let space: Vec<Vec<f64>> = order[k..end].iter().map(|&c| (0..n).map(|i| vecs[(i, c)]).collect()).collect();
        // Deterministic basis: project coordinate axes onto the eigenspace.
        for axis in 0..n {
            if used.len() >= end {
                break;
            }
            let mut u: Vec<f64> = vec![0.0; n];
            for v in &space {
                u.iter_mut().zip(v).for_each(|(ui, vi)| *ui += v[axis] * vi);
            }
            for w in &used {
                let d = dot(&u, w);
                u.iter_mut().zip(w).for_each(|(ui, wi)| *ui -= d * wi);
            }
            let norm = dot(&u, &u).sqrt();
            if norm < 0.3 {
                continue;
            }
            u.iter_mut().for_each(|x| *x /= norm);
            let r = lead.sqrt();
            let su = s * &Mat::new(n, 1, u.clone())?;
            let mut v: Vec<f64> = su.as_slice().iter().map(|x| x / r).collect();
            for w in &used {
                let d = dot(&v, w);
                v.iter_mut().zip(w).for_each(|(vi, wi)| *vi -= d * wi);
            }
            let b1: Vec<f64> = u.iter().map(|x| r.sqrt() * x).collect();
            let b2: Vec<f64> = v.iter().map(|x| -r.sqrt() * x).collect();
            let orientation = quad_form(&b1, theta, &b2);
            if orientation < -1e-9 * r {
                return Err(Error::NotRealizable(-r));
            }
            used.push(u);
            used.push(v);
            cols.push(b1);
            cols.push(b2);
        }
        k = end;
    }
    Ok(Mat::from_fn(n, cols.len(), |i, j| cols[j][i]))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn quad_form(a: &[f64], m: &Mat, b: &[f64]) -> f64 {
    let n = a.len();
    (0..n).map(|i| a[i] * (0..n).map(|j| m[(i, j)] * b[j]).sum::<f64>()).sum()
}

/// Mirror decay rates of a passive empty cavity, one per input block.
pub fn extract_cavity(r: &RealizedController) -> Result<Vec<f64>> {
    let tol = PR_TOL;
    let a = r
        .ac
        .as_scalar_identity(tol)
        .ok_or_else(|| Error::Structure("Ac is not a multiple of the identity".into()))?;
    let mut kappas = Vec::new();
    for (i, b) in r.blocks.iter().enumerate() {
        if b.cols() == 0 {
            continue;
        }
        let s = b
            .as_scalar_identity(tol)
            .ok_or_else(|| Error::Structure(format!("input block {} is not a multiple of the identity", i + 1)))?;
        kappas.push(s * s);
    }
    let total: f64 = kappas.iter().sum();
    if (total + 2.0 * a).abs() > tol {
        return Err(Error::Structure(format!("decay rates sum to {total:.6} but −2·Ac = {:.6}", -2.0 * a)));
    }
    Ok(kappas)
}
