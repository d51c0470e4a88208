//! Closed-loop analysis at frozen uncertainty: interconnection, H∞ norm by
//! Hamiltonian bisection, performance sweeps and a sampled quadratic
//! stability certificate.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mat::{self, CMat, Mat};
use crate::model::{delta_a, UncertainPlant};
use crate::riccati::{solve_care, RiccatiProblem, RiccatiSide};
use crate::synthesis::StateSpaceController;

/// Default absolute bisection tolerance on the norm.
pub const DEFAULT_NORM_TOL: f64 = 1e-6;

/// Frequencies in the bracketing scan, excluding ω = 0.
const SCAN_POINTS: usize = 1000;

/// Margin added to the certificate Riccati equation.
const CERTIFICATE_MARGIN: f64 = 1e-8;

/// Disturbance-to-performance closed loop `(Acl, Bcl, Ccl)` with zero feedthrough.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub plant_state_dim: usize,
    pub controller_state_dim: usize,
}

impl ClosedLoop {
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let n = a.rows();
        if !a.is_square() || b.rows() != n || c.cols() != n {
            return Err(Error::Validation(format!(
                "inconsistent system shapes: A {:?}, B {:?}, C {:?}",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        Ok(Self { a, b, c, plant_state_dim: n, controller_state_dim: 0 })
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    /// `C·(iωI − A)⁻¹·B`.
    pub fn frequency_response(&self, omega: f64) -> Result<CMat> {
        let n = self.state_dim();
        let shifted = CMat::from_fn(n, n, |i, j| {
            let d = if i == j { Complex64::new(0.0, omega) } else { Complex64::new(0.0, 0.0) };
            d - Complex64::new(self.a[(i, j)], 0.0)
        });
        let x = mat::solve_linear_unchecked(&shifted, &self.b.to_complex())?;
        Ok(&self.c.to_complex() * &x)
    }

    /// `max σ(G(iω))` over the given frequencies.
    pub fn peak_gain(&self, omegas: &[f64]) -> Result<f64> {
        let mut peak: f64 = 0.0;
        for &w in omegas {
            peak = peak.max(mat::max_singular_value(&self.frequency_response(w)?));
        }
        Ok(peak)
    }
}

/// Interconnects plant (at frozen `dphi`, `dbeta_ratio`) and controller.
///
/// Controller noise channels are not part of the performance channel.
pub fn close_loop(plant: &UncertainPlant, ctrl: &StateSpaceController, dphi: f64, dbeta_ratio: f64) -> Result<ClosedLoop> {
    let a = plant.frozen_a(dphi, dbeta_ratio)?;
    interconnect(plant, &a, ctrl)
}

fn interconnect(plant: &UncertainPlant, a: &Mat, ctrl: &StateSpaceController) -> Result<ClosedLoop> {
    let n = plant.state_dim();
    let nc = ctrl.state_dim();
    if ctrl.bc.cols() != plant.c2.rows() || ctrl.cc.rows() != plant.b1.cols() {
        return Err(Error::Validation(format!(
            "controller Bc {:?} / Cc {:?} incompatible with plant C2 {:?} / B1 {:?}",
            ctrl.bc.shape(),
            ctrl.cc.shape(),
            plant.c2.shape(),
            plant.b1.shape()
        )));
    }
    let acl = Mat::from_blocks(a, &(&plant.b1 * &ctrl.cc), &(&ctrl.bc * &plant.c2), &ctrl.ac)?;
    let bcl = Mat::vstack(&[&plant.b2, &(&ctrl.bc * &plant.d2)])?;
    let ccl = Mat::hstack(&[&plant.c1, &(&plant.d1 * &ctrl.cc)])?;
    Ok(ClosedLoop { a: acl, b: bcl, c: ccl, plant_state_dim: n, controller_state_dim: nc })
}

/// Largest real part of the spectrum of `a`.
pub fn spectral_abscissa(a: &Mat) -> Result<f64> {
    Ok(mat::eigenvalues(a)?.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max))
}

pub fn is_stable(cl: &ClosedLoop) -> Result<bool> {
    Ok(spectral_abscissa(&cl.a)? < 0.0)
}

/// Whether the Hamiltonian `[[A, g⁻²BBᵀ], [−CᵀC, −Aᵀ]]` has an eigenvalue on
/// the imaginary axis, i.e. whether `g` is below the H∞ norm.
fn hamiltonian_touches_axis(cl: &ClosedLoop, bbt: &Mat, ctc: &Mat, g: f64) -> Result<bool> {
    let m = Mat::from_blocks(&cl.a, &bbt.scale(g.powi(-2)), &-ctc, &-&cl.a.transpose())?;
    let tol = mat::IMAG_AXIS_TOL * m.norm_fro();
    Ok(mat::eigenvalues(&m)?.iter().any(|l| l.re.abs() <= tol))
}

/// `1 + SCAN_POINTS` bracketing frequencies: ω = 0 and a log-spaced span
/// around the modal frequencies of `a`.
fn scan_frequencies(a: &Mat) -> Result<Vec<f64>> {
    let eigs = mat::eigenvalues(a)?;
    let mags: Vec<f64> = eigs.iter().map(|l| l.norm()).filter(|m| *m > 0.0).collect();
    let (lo, hi) = if mags.is_empty() {
        (1e-3, 1e3)
    } else {
        let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
        let max = mags.iter().copied().fold(0.0, f64::max);
        (1e-3 * min, 1e3 * max)
    };
    let (l0, l1) = (lo.log10(), hi.log10());
    let mut out = vec![0.0];
    out.extend((0..SCAN_POINTS).map(|k| 10f64.powf(l0 + (l1 - l0) * k as f64 / (SCAN_POINTS - 1) as f64)));
    Ok(out)
}

/// H∞ norm of a stable closed loop with `|g − ‖G‖∞| ≤ tol·max(1, g)`.
pub fn hinf_norm(cl: &ClosedLoop, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("norm tolerance must be positive, got {tol}")));
    }
    let abscissa = spectral_abscissa(&cl.a)?;
    if abscissa >= 0.0 {
        return Err(Error::UnstableLoop(abscissa));
    }
    if cl.b.max_abs() == 0.0 || cl.c.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let peak = cl.peak_gain(&scan_frequencies(&cl.a)?)?;
    if peak == 0.0 {
        return Ok(0.0);
    }
    let bbt = &cl.b * &cl.b.transpose();
    let ctc = &cl.c.transpose() * &cl.c;
    let mut lo = peak;
    let mut hi = 2.0 * peak;
    let mut doublings = 0;
    while hamiltonian_touches_axis(cl, &bbt, &ctc, hi)? {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::Numerical("could not bracket the H-infinity norm".into()));
        }
    }
    while hi - lo > tol * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if hamiltonian_touches_axis(cl, &bbt, &ctc, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Source of the amplitude deviation at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaMode {
    Zero,
    /// Uniform on `[0, bound]`, drawn per grid index from a counter-based
    /// generator keyed by `seed`.
    Random { seed: u64, bound: f64 },
}

impl BetaMode {
    pub fn draw(&self, index: usize) -> f64 {
        match *self {
            BetaMode::Zero => 0.0,
            BetaMode::Random { seed, bound } => bound * unit_draw(seed, index as u64),
        }
    }
}

/// Uniform draw in `[0, 1)` depending only on `(seed, index)`.
pub fn unit_draw(seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.gen::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub dphi: f64,
    pub dbeta_ratio: f64,
    /// H∞ norm; `None` when the frozen loop is unstable.
    pub norm: Option<f64>,
}

impl SweepRecord {
    pub fn stable(&self) -> bool {
        self.norm.is_some()
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect(),
    }
}

/// One record per grid point, in grid order.
pub fn sweep(plant: &UncertainPlant, ctrl: &StateSpaceController, phi_grid: &[f64], beta_mode: BetaMode, tol: f64) -> Result<Vec<SweepRecord>> {
    if let BetaMode::Random { bound, .. } = beta_mode {
        if !(0.0..=plant.params.beta_bound + 1e-12).contains(&bound) {
            return Err(Error::Validation(format!(
                "random amplitude bound {bound} outside [0, {}]",
                plant.params.beta_bound
            )));
        }
    }
    phi_grid
        .par_iter()
        .enumerate()
        .map(|(k, &dphi)| {
            let r = beta_mode.draw(k);
            let cl = close_loop(plant, ctrl, dphi, r)?;
            let norm = match hinf_norm(&cl, tol) {
                Ok(g) => Some(g),
                Err(Error::UnstableLoop(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(SweepRecord { dphi, dbeta_ratio: r, norm })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    /// Smallest eigenvalue of the candidate `P`.
    pub p_min_eig: f64,
    /// Largest eigenvalue of the quadratic-stability form over all sampled
    /// uncertainties.
    pub worst_eig: f64,
    pub points: usize,
    pub pass: bool,
}

/// Builds `P` from the scaled closed-loop Riccati equation and evaluates the
/// quadratic-stability inequality on `n_grid` phases times the amplitude
/// corners `{0, beta_bound}`.
pub fn quadratic_stability_certificate(
    plant: &UncertainPlant,
    ctrl: &StateSpaceController,
    gamma: f64,
    epsilon: f64,
    n_grid: usize,
) -> Result<CertificateReport> {
    if !(gamma > 0.0) || !(epsilon > 0.0) || n_grid == 0 {
        return Err(Error::Validation("certificate needs gamma > 0, epsilon > 0 and at least one grid point".into()));
    }
    let nominal = interconnect(plant, &plant.a, ctrl)?;
    let nt = nominal.state_dim();
    let mut hcl = Mat::zeros(nt, plant.h1.cols());
    hcl.set_block(0, 0, &plant.h1);
    let mut ecl = Mat::zeros(plant.e1.rows(), nt);
    ecl.set_block(0, 0, &plant.e1);

    let bbt = (&nominal.b * &nominal.b.transpose()).scale(gamma.powi(-2));
    let hht = (&hcl * &hcl.transpose()).scale(epsilon * plant.rho * plant.rho);
    let ctc = &nominal.c.transpose() * &nominal.c;
    let q = &(&(&ecl.transpose() * &ecl).scale(1.0 / epsilon) + &ctc) + &Mat::scalar(nt, CERTIFICATE_MARGIN);
    let problem = RiccatiProblem::new(nominal.a.clone(), -&(&bbt + &hht), q, RiccatiSide::Generic)?;
    let p = solve_care(&problem).map_err(|e| Error::CertificateUnavailable(e.to_string()))?.x;
    let p_min_eig = mat::symmetric_eigenvalues(&p)?[0];

    let (lo, hi) = plant.params.phase_range;
    let mut corners = vec![0.0];
    if plant.params.beta_bound > 0.0 {
        corners.push(plant.params.beta_bound);
    }
    let pbp = &(&p * &bbt) * &p;
    let mut worst = f64::NEG_INFINITY;
    let mut points = 0;
    for dphi in linspace(lo, hi, n_grid) {
        for &r in &corners {
            let mut acl = nominal.a.clone();
            let shifted = &plant.a + &delta_a(&plant.params, plant.decomposition, dphi, r)?;
            acl.set_block(0, 0, &shifted);
            let form = &(&(&(&acl.transpose() * &p) + &(&p * &acl)) + &pbp) + &ctc;
            let top = *mat::symmetric_eigenvalues(&form)?.last().expect("nonempty");
            worst = worst.max(top);
            points += 1;
        }
    }
    Ok(CertificateReport { p_min_eig, worst_eig: worst, points, pass: p_min_eig > 0.0 && worst < 0.0 })
}
